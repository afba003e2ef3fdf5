//! Classify critical portions and certify chords: a cap diameter is a
//! regular critical chord, an oblique flat chord is not, and a bent path has a
//! cusp whose angle is measured.

use ogc::builtins;
use ogc::chords::NodeInterval;
use ogc::critical::{certify_ogc, classify_portion, cusp_angle, ToleranceSet};
use ogc::geometry::{DiscretePath, Point};

fn main() -> ogc::Result<()> {
    let delta0 = 0.25;
    let domain = builtins::spherical_cap(2.0).with_band(delta0);
    let constants = domain.constants(delta0)?;
    let tol = ToleranceSet::for_band(delta0);
    let metric = domain.metric().clone();
    let n = 256;

    let (p, q) = (domain.boundary_point(0.0)?, domain.boundary_point(std::f64::consts::PI)?);
    let seg = metric.exp_join(&p, &q)?;
    let diameter = DiscretePath::from_fn(n, |s| seg.point_at(s * seg.t_end()))?;
    let iv = NodeInterval { ia: 0, ib: n };
    let c = classify_portion(&domain, &diameter, iv, &tol, &constants)?;
    println!("cap diameter: {:?}, ortho residual {:.2e}", c.kind, c.ortho_residual);
    match certify_ogc(&domain, &diameter, iv, &tol, &constants, f64::INFINITY) {
        Ok(rec) => println!("  certified: energy {:.10} (2 r0^2 = 8)", rec.energy_c),
        Err(rej) => println!("  rejected: {rej}"),
    }

    // chords of a concave cap leave it, so take the oblique one in the flat disk
    let flat = builtins::flat_disk();
    let (p, q) = (flat.boundary_point(0.0)?, flat.boundary_point(2.0)?);
    let oblique = DiscretePath::from_fn(n, |s| p + (q - p) * s)?;
    let c = classify_portion(&flat, &oblique, iv, &tol, &flat.constants(delta0)?)?;
    println!("flat oblique chord: {:?}, ortho residual {:.2e}", c.kind, c.ortho_residual);

    // a right-angle corner in the flat chart
    let corner = DiscretePath::from_fn(16, |s| {
        if s <= 0.5 {
            Point::new(2.0 * s - 1.0, 0.0)
        } else {
            Point::new(0.0, 2.0 * s - 1.0)
        }
    })?;
    println!("cusp angle at a right-angle corner: {:.6}", cusp_angle(&flat, &corner, 8, 8)?);
    Ok(())
}
