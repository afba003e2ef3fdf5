//! Static SVG figures: the energy landscape over the chord grid, and the
//! configuration-space picture of the domain with its chords and orbits.

use std::fmt::Write as _;

use crate::critical::OgcRecord;
use crate::domain::SignedDistanceField;
use crate::error::Result;
use crate::geometry::Point;
use crate::maupertuis::BrakeOrbit;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Piecewise-linear blue to yellow ramp on `[0, 1]`.
fn ramp(t: f64) -> String {
    let stops = [(0.0, [68, 1, 84]), (0.5, [33, 145, 140]), (1.0, [253, 231, 37])];
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let (a, b) = if t <= 0.5 { (stops[0], stops[1]) } else { (stops[1], stops[2]) };
    let w = (t - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3)
        .map(|k| (a.1[k] as f64 + w * (b.1[k] as f64 - a.1[k] as f64)).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn header(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Heatmap of the flowed functional over `(θ, θ')`.
pub fn landscape(thetas: &[f64], values: &[Vec<f64>]) -> String {
    let n = thetas.len().max(1);
    let cell = SIZE / n as f64;
    let max = values.iter().flatten().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut out = String::new();
    header(&mut out, SIZE + 2.0 * MARGIN + 60.0, SIZE + 2.0 * MARGIN);
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>({i}, {j}) {v:.6}</title></rect>"#,
                MARGIN + j as f64 * cell,
                MARGIN + (n - 1 - i) as f64 * cell,
                cell + 0.05,
                cell + 0.05,
                ramp(if max > 0.0 { v / max } else { 0.0 })
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">θ′</text><text x="{:.1}" y="{:.1}" text-anchor="middle">θ</text>"#,
        MARGIN + SIZE / 2.0,
        MARGIN + SIZE + 25.0,
        MARGIN / 2.0,
        MARGIN + SIZE / 2.0
    );
    // color bar
    let bar = MARGIN + SIZE + 20.0;
    for k in 0..64 {
        let t = k as f64 / 63.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bar:.1}" y="{:.2}" width="14" height="{:.2}" fill="{}"/>"#,
            MARGIN + (1.0 - t) * (SIZE - SIZE / 64.0),
            SIZE / 64.0 + 0.5,
            ramp(t)
        );
    }
    let _ = writeln!(out, r#"<text x="{bar:.1}" y="{:.1}">{max:.4}</text>"#, MARGIN - 6.0);
    let _ = writeln!(out, r#"<text x="{bar:.1}" y="{:.1}">0</text>"#, MARGIN + SIZE + 14.0);
    out.push_str("</svg>\n");
    out
}

/// Boundary, the `-δ₀` level, certified chords and orbit paths in the chart.
pub fn configuration(
    domain: &SignedDistanceField,
    delta0: f64,
    ogcs: &[OgcRecord],
    orbits: &[BrakeOrbit],
) -> Result<String> {
    let boundary = domain.boundary_samples(256)?;
    let inner: Vec<Point> = if delta0 > 0.0 {
        boundary
            .iter()
            .filter_map(|b| domain.normal_flow(b, delta0, false).ok())
            .collect()
    } else {
        Vec::new()
    };
    let mut all: Vec<Point> = boundary.clone();
    all.extend(orbits.iter().flat_map(|o| o.image()));
    let (mut lo, mut hi) = (all[0], all[0]);
    for p in &all {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let span = (hi - lo).amax().max(1e-12);
    let scale = SIZE / span;
    let map = |p: &Point| (MARGIN + (p.x - lo.x) * scale, MARGIN + (hi.y - p.y) * scale);
    let polyline = |pts: &[Point], closed: bool, style: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let tag = if closed { "polygon" } else { "polyline" };
        format!(r#"<{tag} points="{}" fill="none" {style}/>"#, coords.join(" "))
    };
    let mut out = String::new();
    header(&mut out, SIZE + 2.0 * MARGIN, SIZE + 2.0 * MARGIN);
    let _ = writeln!(out, "{}", polyline(&boundary, true, r##"stroke="#222" stroke-width="1.5""##));
    if !inner.is_empty() {
        let _ = writeln!(
            out,
            "{}",
            polyline(&inner, true, r##"stroke="#888" stroke-width="1" stroke-dasharray="4 3""##)
        );
    }
    let palette = ["#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];
    for (i, o) in orbits.iter().enumerate() {
        let color = palette[i % palette.len()];
        let _ = writeln!(
            out,
            "{}",
            polyline(&o.image(), false, &format!(r#"stroke="{color}" stroke-width="5" stroke-opacity="0.3""#))
        );
    }
    for (i, r) in ogcs.iter().enumerate() {
        let color = palette[i % palette.len()];
        let _ = writeln!(
            out,
            "{}",
            polyline(r.path.nodes(), false, &format!(r#"stroke="{color}" stroke-width="1.5""#))
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{MARGIN}" y="{:.1}">boundary (solid), −δ₀ level (dashed), chords and orbits</text>"#,
        SIZE + 2.0 * MARGIN - 10.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn ramp_ends() {
        assert_eq!(ramp(0.0), "#440154");
        assert_eq!(ramp(1.0), "#fde725");
        assert_eq!(ramp(f64::NAN), "#440154");
    }

    #[test]
    fn landscape_has_one_cell_per_entry() {
        let svg = landscape(&[0.0, 1.0, 2.0], &vec![vec![0.0, 1.0, 2.0]; 3]);
        assert_eq!(svg.matches("<title>").count(), 9);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn configuration_draws_both_levels() {
        let d = builtins::spherical_cap(2.0).with_band(0.25);
        let svg = configuration(&d, 0.25, &[], &[]).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 2);
    }
}
