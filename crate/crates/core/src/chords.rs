//! The boundary-to-boundary chord family, the disk map of the collar, maximal
//! intervals of paths and path-space membership.

use std::f64::consts::TAU;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainConstants, SignedDistanceField, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{action_nodes, DiscretePath, GeodesicSegment, JoinOptions, Point};

const TABLE: usize = 2048;

fn wrap(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Arc-length (in g) coordinate `θ ∈ [0, 2π)` on the boundary.
#[derive(Clone, Debug)]
pub struct BoundaryParam {
    domain: SignedDistanceField,
    /// cumulative g-length at the ray angles `2πk / TABLE`, `k = 0..=TABLE`
    cumulative: Vec<f64>,
}

impl BoundaryParam {
    pub fn new(domain: &SignedDistanceField) -> Result<Self> {
        // boundary points at half-steps, so each table cell gets a
        // Richardson-corrected polygon length
        let points: Vec<Point> = (0..=2 * TABLE)
            .into_par_iter()
            .map(|k| domain.boundary_point(TAU * k as f64 / (2 * TABLE) as f64))
            .collect::<Result<_>>()?;
        let metric = domain.metric();
        let chord = |p: &Point, q: &Point| metric.norm(&((p + q) * 0.5), &(q - p));
        let mut cumulative = Vec::with_capacity(TABLE + 1);
        cumulative.push(0.0);
        for k in 0..TABLE {
            let (p0, pm, p1) = (&points[2 * k], &points[2 * k + 1], &points[2 * k + 2]);
            let fine = chord(p0, pm) + chord(pm, p1);
            cumulative.push(cumulative[k] + (4.0 * fine - chord(p0, p1)) / 3.0);
        }
        Ok(Self {
            domain: domain.clone(),
            cumulative,
        })
    }

    /// Riemannian length of the boundary.
    pub fn length(&self) -> f64 {
        self.cumulative[TABLE]
    }

    fn angle_of_theta(&self, theta: f64) -> f64 {
        let s = wrap(theta) / TAU * self.length();
        let k = self.cumulative.partition_point(|&c| c <= s).clamp(1, TABLE) - 1;
        let (c0, c1) = (self.cumulative[k], self.cumulative[k + 1]);
        let frac = if c1 > c0 { (s - c0) / (c1 - c0) } else { 0.0 };
        TAU * (k as f64 + frac) / TABLE as f64
    }

    fn theta_of_angle(&self, angle: f64) -> f64 {
        let x = wrap(angle) / TAU * TABLE as f64;
        let k = (x.floor() as usize).min(TABLE - 1);
        let frac = x - k as f64;
        let s = self.cumulative[k] + frac * (self.cumulative[k + 1] - self.cumulative[k]);
        wrap(TAU * s / self.length())
    }

    /// The boundary point with coordinate `θ`.
    pub fn point(&self, theta: f64) -> Result<Point> {
        self.domain.boundary_point(self.angle_of_theta(theta))
    }

    /// Coordinate of (the ray through) a point.
    pub fn theta(&self, p: &Point) -> f64 {
        let d = p - self.domain.center();
        self.theta_of_angle(d.y.atan2(d.x))
    }
}

/// A homeomorphism of the domain interior `{φ ≤ -δ₀}` onto the closed disk of
/// radius `1 - δ₀`, agreeing on `{φ = -δ₀}` with the collar coordinates.
pub trait InteriorMap: Send + Sync {
    fn forward(&self, y: &Point) -> Result<Point>;
    fn inverse(&self, w: &Point) -> Result<Point>;
}

/// The map `Ψ` onto the closed unit disk. On the collar `-δ₀ ≤ φ ≤ 0` it is
/// `Ψ(y) = (1 + φ(y)) e^{iθ(π(y))}`; inside it is a cone over the inner level
/// curve (or a user map).
#[derive(Clone)]
pub struct DiskMap {
    domain: SignedDistanceField,
    delta0: f64,
    boundary: BoundaryParam,
    /// inner curve `η⁻(δ₀, A(θ))` sampled at `θ_k = 2πk/TABLE`, with unwrapped
    /// chart angles about the center
    inner: Vec<(Point, f64)>,
    user: Option<Arc<dyn InteriorMap>>,
}

impl std::fmt::Debug for DiskMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiskMap")
            .field("delta0", &self.delta0)
            .field("boundary_length", &self.boundary.length())
            .field("user_map", &self.user.is_some())
            .finish()
    }
}

impl DiskMap {
    /// Without a user map the region `{φ ≤ -δ₀}` must be star-shaped about the
    /// domain center.
    pub fn build(domain: &SignedDistanceField, delta0: f64, user: Option<Arc<dyn InteriorMap>>) -> Result<Self> {
        if !(delta0 > 0.0 && delta0 < 1.0) {
            return Err(Error::Contract(format!("collar depth must lie in ]0, 1[, got {delta0}")));
        }
        let domain = domain.clone().with_band(delta0);
        let boundary = BoundaryParam::new(&domain)?;
        let c = domain.center();
        let raw: Vec<Point> = (0..=TABLE)
            .into_par_iter()
            .map(|k| {
                let a = boundary.point(TAU * k as f64 / TABLE as f64)?;
                domain.normal_flow(&a, delta0, false)
            })
            .collect::<Result<_>>()?;
        let mut inner = Vec::with_capacity(TABLE + 1);
        let mut prev: f64 = f64::NAN;
        for p in raw {
            let d = p - c;
            let mut ang = d.y.atan2(d.x);
            if prev.is_finite() {
                while ang < prev - std::f64::consts::PI {
                    ang += TAU;
                }
                while ang > prev + std::f64::consts::PI {
                    ang -= TAU;
                }
                if ang <= prev && user.is_none() {
                    return Err(Error::UnsupportedDomain(
                        "inner collar curve is not star-shaped about the center; supply an interior map".into(),
                    ));
                }
            }
            prev = ang;
            inner.push((p, ang));
        }
        if user.is_none() && ((inner[TABLE].1 - inner[0].1) - TAU).abs() > 1e-6 {
            return Err(Error::UnsupportedDomain("inner collar curve does not wind once around the center".into()));
        }
        Ok(Self {
            domain,
            delta0,
            boundary,
            inner,
            user,
        })
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn domain(&self) -> &SignedDistanceField {
        &self.domain
    }

    pub fn boundary(&self) -> &BoundaryParam {
        &self.boundary
    }

    fn inner_point(&self, theta: f64) -> Result<Point> {
        let a = self.boundary.point(theta)?;
        self.domain.normal_flow(&a, self.delta0, false)
    }

    /// `θ` whose inner-curve point lies on the ray from the center at chart
    /// angle `angle`.
    fn inner_theta_for_angle(&self, angle: f64) -> Result<f64> {
        let base = self.inner[0].1;
        let target = base + (angle - base).rem_euclid(TAU);
        let k = self.inner.partition_point(|e| e.1 <= target).clamp(1, TABLE) - 1;
        let (a0, a1) = (self.inner[k].1, self.inner[k + 1].1);
        let frac = if a1 > a0 { (target - a0) / (a1 - a0) } else { 0.0 };
        let mut theta = TAU * (k as f64 + frac) / TABLE as f64;
        // secant refinement against the exact inner curve
        let c = self.domain.center();
        let err = |th: f64| -> Result<f64> {
            let d = self.inner_point(th)? - c;
            Ok((d.y.atan2(d.x) - angle + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI)
        };
        let mut e0 = err(theta)?;
        let mut t1 = theta + 1e-7;
        for _ in 0..8 {
            if e0.abs() < 1e-14 {
                break;
            }
            let e1 = err(t1)?;
            if e1 == e0 {
                break;
            }
            let next = t1 - e1 * (t1 - theta) / (e1 - e0);
            theta = t1;
            e0 = e1;
            t1 = next;
        }
        Ok(wrap(if err(t1)?.abs() < e0.abs() { t1 } else { theta }))
    }

    pub fn forward(&self, y: &Point) -> Result<Point> {
        let p = self.domain.phi(y);
        if p > BOUNDARY_TOL {
            return Err(Error::Contract(format!("point is outside the domain (phi = {p:.3e})")));
        }
        if p >= -self.delta0 {
            let foot = if p.abs() <= 1e-15 { *y } else { self.domain.boundary_projection(y)? };
            let theta = self.boundary.theta(&foot);
            let r = 1.0 + p.min(0.0);
            return Ok(Point::new(theta.cos(), theta.sin()) * r);
        }
        if let Some(u) = &self.user {
            return u.forward(y);
        }
        let c = self.domain.center();
        let d = y - c;
        if d.norm() == 0.0 {
            return Ok(Point::zeros());
        }
        let theta = self.inner_theta_for_angle(d.y.atan2(d.x))?;
        let rim = self.inner_point(theta)? - c;
        let t = d.norm() / rim.norm();
        Ok(Point::new(theta.cos(), theta.sin()) * (t * (1.0 - self.delta0)))
    }

    pub fn inverse(&self, w: &Point) -> Result<Point> {
        let r = w.norm();
        if r > 1.0 + 1e-12 {
            return Err(Error::Contract(format!("point of norm {r} is outside the unit disk")));
        }
        let theta = w.y.atan2(w.x);
        if r >= 1.0 - self.delta0 {
            let a = self.boundary.point(theta)?;
            let depth = (1.0 - r).max(0.0);
            return if depth == 0.0 {
                Ok(a)
            } else {
                self.domain.normal_flow(&a, depth, false)
            };
        }
        if let Some(u) = &self.user {
            return u.inverse(w);
        }
        let c = self.domain.center();
        if r == 0.0 {
            return Ok(c);
        }
        let rim = self.inner_point(theta)?;
        Ok(c + (rim - c) * (r / (1.0 - self.delta0)))
    }
}

/// The chords `G(A, B)` between boundary points, sampled with `N` segments.
#[derive(Clone, Debug)]
pub struct ChordFamily {
    pub disk: DiskMap,
    pub n_theta: usize,
    pub segments: usize,
    pub join: JoinOptions,
}

/// Broken-geodesic partition limits for the deep part of a chord.
const PARTITION_START: usize = 8;
const PARTITION_CAP: usize = 1024;

impl ChordFamily {
    pub fn new(disk: DiskMap, n_theta: usize, segments: usize) -> Self {
        Self {
            disk,
            n_theta,
            segments,
            join: JoinOptions::default(),
        }
    }

    pub fn domain(&self) -> &SignedDistanceField {
        self.disk.domain()
    }

    pub fn theta(&self, i: usize) -> f64 {
        TAU * i as f64 / self.n_theta as f64
    }

    pub fn boundary_point(&self, theta: f64) -> Result<Point> {
        self.disk.boundary().point(theta)
    }

    pub fn chord_at(&self, ta: f64, tb: f64) -> Result<DiscretePath> {
        self.chord(&self.boundary_point(ta)?, &self.boundary_point(tb)?)
    }

    /// `G(A, B)`: the straight segment between `Ψ(A)` and `Ψ(B)` pulled back
    /// through `Ψ`, with the part below `-δ₀` replaced by a broken geodesic.
    pub fn chord(&self, a: &Point, b: &Point) -> Result<DiscretePath> {
        let n = self.segments;
        if (a - b).norm() == 0.0 {
            return DiscretePath::constant(*a, n);
        }
        let wa = self.disk.forward(a)?;
        let wb = self.disk.forward(b)?;
        let seg = |s: f64| wa * (1.0 - s) + wb * s;
        // deep part: |w(s)| < 1 - δ₀
        let rho = 1.0 - self.disk.delta0();
        let d = wb - wa;
        let (qa, qb, qc) = (d.norm_squared(), 2.0 * wa.dot(&d), wa.norm_squared() - rho * rho);
        let disc = qb * qb - 4.0 * qa * qc;
        let deep = if disc > 0.0 && qa > 0.0 {
            let r = disc.sqrt();
            let (s0, s1) = ((-qb - r) / (2.0 * qa), (-qb + r) / (2.0 * qa));
            let (s0, s1) = (s0.max(0.0), s1.min(1.0));
            (s1 - s0 > 1e-12).then_some((s0, s1))
        } else {
            None
        };
        let mut nodes = Vec::with_capacity(n + 1);
        let Some((s_in, s_out)) = deep else {
            for i in 0..=n {
                nodes.push(self.collar_node(i, n, a, b, &seg)?);
            }
            return DiscretePath::new(nodes);
        };
        let mut parts = PARTITION_START;
        let pieces = loop {
            match self.broken_geodesic(&seg, s_in, s_out, parts) {
                Ok(p) => break p,
                Err(e) if parts >= PARTITION_CAP => {
                    return Err(Error::ChordFailure(format!(
                        "deep part could not be joined with {parts} pieces: {e}"
                    )))
                }
                Err(_) => parts *= 2,
            }
        };
        for i in 0..=n {
            let s = i as f64 / n as f64;
            if s <= s_in || s >= s_out {
                nodes.push(self.collar_node(i, n, a, b, &seg)?);
            } else {
                let x = (s - s_in) / (s_out - s_in) * parts as f64;
                let j = (x.floor() as usize).min(parts - 1);
                nodes.push(pieces[j].point_at(x - j as f64));
            }
        }
        DiscretePath::new(nodes)
    }

    fn collar_node(&self, i: usize, n: usize, a: &Point, b: &Point, seg: &impl Fn(f64) -> Point) -> Result<Point> {
        if i == 0 {
            return Ok(*a);
        }
        if i == n {
            return Ok(*b);
        }
        let w = seg(i as f64 / n as f64);
        let w = if w.norm() > 1.0 { w / w.norm() } else { w };
        self.disk.inverse(&w)
    }

    fn broken_geodesic(
        &self,
        seg: &impl Fn(f64) -> Point,
        s_in: f64,
        s_out: f64,
        parts: usize,
    ) -> Result<Vec<GeodesicSegment>> {
        let corners: Vec<Point> = (0..=parts)
            .map(|k| self.disk.inverse(&seg(s_in + (s_out - s_in) * k as f64 / parts as f64)))
            .collect::<Result<_>>()?;
        let metric = self.domain().metric();
        let opts = JoinOptions {
            steps: 64,
            ..self.join
        };
        corners
            .windows(2)
            .map(|w| metric.exp_join_with(&w[0], &w[1], None, &opts))
            .collect()
    }

    /// All chords on the `n_θ × n_θ` grid, in row-major order.
    pub fn grid(&self) -> Result<Vec<FamilyMember>> {
        let n = self.n_theta;
        (0..n * n)
            .into_par_iter()
            .map(|k| {
                let (i, j) = (k / n, k % n);
                Ok(FamilyMember {
                    i,
                    j,
                    path: self.chord_at(self.theta(i), self.theta(j))?,
                })
            })
            .collect()
    }

    /// `M₀ = sup ∫₀¹ g(ẋ, ẋ)` over the grid.
    pub fn m0(&self) -> Result<f64> {
        Ok(m0_of(self.domain(), &self.grid()?))
    }
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub i: usize,
    pub j: usize,
    pub path: DiscretePath,
}

/// Largest unnormalized energy `∫₀¹ g(ẋ, ẋ)` among `members`.
pub fn m0_of(domain: &SignedDistanceField, members: &[FamilyMember]) -> f64 {
    members
        .iter()
        .map(|m| action_nodes(domain.metric(), &m.path, 0, m.path.segments()))
        .fold(0.0, f64::max)
}

/// Writes one CSV row per node: `i,j,node,s,q1,q2`.
pub fn write_family_csv(members: &[FamilyMember], out: &mut impl Write) -> Result<()> {
    writeln!(out, "i,j,node,s,q1,q2")?;
    for m in members {
        let n = m.path.segments();
        for (k, p) in m.path.nodes().iter().enumerate() {
            writeln!(out, "{},{},{},{},{},{}", m.i, m.j, k, k as f64 / n as f64, p.x, p.y)?;
        }
    }
    Ok(())
}

/// A grid-aligned parameter interval `[ia/N, ib/N]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInterval {
    pub ia: usize,
    pub ib: usize,
}

impl NodeInterval {
    pub fn bounds(&self, segments: usize) -> (f64, f64) {
        (self.ia as f64 / segments as f64, self.ib as f64 / segments as f64)
    }

    pub fn contains(&self, other: &NodeInterval) -> bool {
        self.ia <= other.ia && other.ib <= self.ib
    }

    pub fn intersects(&self, other: &NodeInterval) -> bool {
        self.ia <= other.ib && other.ia <= self.ib
    }
}

/// Disjoint, sorted maximal intervals of a path.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub intervals: Vec<NodeInterval>,
}

impl IntervalSet {
    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &NodeInterval> {
        self.intervals.iter()
    }
}

/// The maximal intervals `I_x`: maximal runs of nodes in the closed domain
/// (`φ ≤ tol`) that contain at least one node strictly inside (`φ < -tol`).
pub fn maximal_intervals(domain: &SignedDistanceField, x: &DiscretePath) -> Result<IntervalSet> {
    maximal_intervals_with(domain, x, BOUNDARY_TOL)
}

pub fn maximal_intervals_with(domain: &SignedDistanceField, x: &DiscretePath, tol: f64) -> Result<IntervalSet> {
    let phi: Vec<f64> = x.nodes().iter().map(|p| domain.phi(p)).collect();
    let n = x.segments();
    if phi[0] < -tol || phi[n] < -tol {
        return Err(Error::NotInPathSpace(format!(
            "path endpoints must lie outside or on the boundary (phi = {:.3e}, {:.3e})",
            phi[0], phi[n]
        )));
    }
    let mut intervals = Vec::new();
    let mut i = 0;
    while i <= n {
        if phi[i] > tol {
            i += 1;
            continue;
        }
        let start = i;
        let mut deep = false;
        while i <= n && phi[i] <= tol {
            deep |= phi[i] < -tol;
            i += 1;
        }
        let end = i - 1;
        if deep && end > start {
            intervals.push(NodeInterval { ia: start, ib: end });
        }
    }
    Ok(IntervalSet { intervals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalDiagnostics {
    pub interval: NodeInterval,
    pub a: f64,
    pub b: f64,
    /// `∫_a^b g(ẋ, ẋ)`
    pub action: f64,
    /// `(b - a)/2 ∫_a^b g(ẋ, ẋ)`
    pub normalized_energy: f64,
    pub min_phi: f64,
    /// `δ² / (K₀² ∫g)` with `δ = -min φ`
    pub length_bound: f64,
    pub length_ok: bool,
    /// `√2 K₀ ((b - a)/2 ∫g)^{1/2}`
    pub sup_bound: f64,
    pub sup_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub member: bool,
    pub intervals: Vec<IntervalDiagnostics>,
}

impl Membership {
    /// Both length and sup bounds hold on every interval.
    pub fn bounds_hold(&self) -> bool {
        self.intervals.iter().all(|d| d.length_ok && d.sup_ok)
    }
}

/// Checks `½ ∫_a^b g < M₀` on every maximal interval and records the
/// length and depth bounds that any path of the space satisfies.
pub fn pathspace_membership(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    m0: f64,
    constants: &DomainConstants,
) -> Result<Membership> {
    let set = maximal_intervals(domain, x)?;
    let n = x.segments();
    let metric = domain.metric();
    let k0 = constants.k0;
    let intervals: Vec<IntervalDiagnostics> = set
        .iter()
        .map(|iv| {
            let (a, b) = iv.bounds(n);
            let action = action_nodes(metric, x, iv.ia, iv.ib);
            let normalized_energy = 0.5 * (b - a) * action;
            let min_phi = x.nodes()[iv.ia..=iv.ib]
                .iter()
                .map(|p| domain.phi(p))
                .fold(f64::INFINITY, f64::min);
            let delta = (-min_phi).max(0.0);
            let length_bound = if action > 0.0 { delta * delta / (k0 * k0 * action) } else { f64::INFINITY };
            let sup_bound = 2f64.sqrt() * k0 * normalized_energy.sqrt();
            IntervalDiagnostics {
                interval: *iv,
                a,
                b,
                action,
                normalized_energy,
                min_phi,
                length_bound,
                length_ok: delta == 0.0 || b - a >= length_bound * (1.0 - 1e-9),
                sup_bound,
                sup_ok: delta <= sup_bound + BOUNDARY_TOL,
            }
        })
        .collect();
    Ok(Membership {
        member: intervals.iter().all(|d| 0.5 * d.action < m0),
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::domain::ScanOptions;
    use crate::geometry::h1_distance;
    use std::f64::consts::PI;
    use std::sync::OnceLock;

    fn cap_family() -> &'static ChordFamily {
        static F: OnceLock<ChordFamily> = OnceLock::new();
        F.get_or_init(|| {
            let d = builtins::spherical_cap(2.0);
            let disk = DiskMap::build(&d, 0.25, None).unwrap();
            ChordFamily::new(disk, 16, 64)
        })
    }

    fn flat_family() -> &'static ChordFamily {
        static F: OnceLock<ChordFamily> = OnceLock::new();
        F.get_or_init(|| {
            let d = builtins::flat_disk();
            let disk = DiskMap::build(&d, 0.2, None).unwrap();
            ChordFamily::new(disk, 16, 64)
        })
    }

    #[test]
    fn boundary_parameter_is_arc_length() {
        let f = cap_family();
        let bp = f.disk.boundary();
        // circle of spherical radius 2 has length 2π sin 2
        assert!((bp.length() - TAU * 2f64.sin()).abs() < 1e-6);
        for k in 0..7 {
            let th = 0.9 * k as f64;
            let th = wrap(th);
            assert!((bp.theta(&bp.point(th).unwrap()) - th).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_disk_map_is_radial_on_the_collar() {
        let f = flat_family();
        let y = Point::new(0.85 * 0.6, 0.85 * 0.8);
        let w = f.disk.forward(&y).unwrap();
        assert!((w - y).norm() < 1e-9);
        let back = f.disk.inverse(&w).unwrap();
        assert!((back - y).norm() < 1e-9);
    }

    #[test]
    fn boundary_points_map_to_the_circle() {
        let f = cap_family();
        for k in 0..8 {
            let a = f.boundary_point(0.7 * k as f64).unwrap();
            assert!((f.disk.forward(&a).unwrap().norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cap_collar_satisfies_the_depth_relation() {
        let f = cap_family();
        let d = f.domain();
        for k in 0..100 {
            let theta = 0.0628 * k as f64;
            let depth = 0.25 * ((k * 37) % 100) as f64 / 100.0;
            let a = f.boundary_point(theta).unwrap();
            let y = d.normal_flow(&a, depth, false).unwrap();
            let w = f.disk.forward(&y).unwrap();
            assert!((-d.phi(&y) - (1.0 - w.norm())).abs() < 1e-6);
        }
    }

    #[test]
    fn interior_map_round_trips() {
        let f = cap_family();
        for k in 0..10 {
            let w = Point::new((0.6 * k as f64).cos(), (0.6 * k as f64).sin()) * (0.07 * k as f64);
            let y = f.disk.inverse(&w).unwrap();
            let back = f.disk.forward(&y).unwrap();
            assert!((back - w).norm() < 1e-8, "{k}: {back} vs {w}");
        }
    }

    #[test]
    fn coincident_endpoints_give_a_constant_chord() {
        let f = cap_family();
        let a = f.boundary_point(1.0).unwrap();
        let x = f.chord(&a, &a).unwrap();
        assert!(x.nodes().iter().all(|p| *p == a));
    }

    #[test]
    fn antipodal_cap_chord_passes_the_pole() {
        let f = cap_family();
        let x = f.chord_at(0.0, PI).unwrap();
        let d = f.domain();
        assert_eq!(x.first(), f.boundary_point(0.0).unwrap());
        assert_eq!(x.last(), f.boundary_point(PI).unwrap());
        let deepest = x.nodes().iter().map(|p| d.phi(p)).fold(f64::INFINITY, f64::min);
        assert!((deepest + 2.0).abs() < 1e-6, "{deepest}");
    }

    #[test]
    fn chords_stay_inside_with_monotone_collar_crossings() {
        let f = cap_family();
        let d = f.domain();
        for (ta, tb) in [(0.0, 0.5), (0.3, 2.0), (1.0, 4.0), (5.0, 0.2)] {
            let x = f.chord_at(ta, tb).unwrap();
            let phi: Vec<f64> = x.nodes().iter().map(|p| d.phi(p)).collect();
            let n = x.segments();
            assert!(phi[1..n].iter().all(|&v| v < 0.0));
            // decreasing off A and increasing into B while in the collar
            let k = phi.iter().position(|&v| v < -0.25).unwrap_or(n / 2);
            assert!(phi[..=k].windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let k = phi.iter().rposition(|&v| v < -0.25).unwrap_or(n / 2);
            assert!(phi[k..].windows(2).all(|w| w[1] >= w[0] - 1e-12));
        }
    }

    #[test]
    fn flat_chords_have_exact_endpoints() {
        let f = flat_family();
        let (a, b) = (Point::new(1.0, 0.0), Point::new(0.0, -1.0));
        let x = f.chord(&a, &b).unwrap();
        assert_eq!(x.first(), a);
        assert_eq!(x.last(), b);
    }

    #[test]
    fn chords_depend_continuously_on_endpoints() {
        let f = cap_family();
        let base = f.chord_at(0.4, 2.9).unwrap();
        let d1 = h1_distance(&base, &f.chord_at(0.4 + 0.02, 2.9).unwrap());
        let d2 = h1_distance(&base, &f.chord_at(0.4 + 0.01, 2.9).unwrap());
        assert!(d2 < 0.75 * d1, "{d1} {d2}");
        assert!(d1 < 1.0);
    }

    #[test]
    fn cap_m0_dominates_the_diameter() {
        let f = cap_family();
        let m0 = f.m0().unwrap();
        assert!(m0 >= 16.0, "{m0}");
        let coarse = ChordFamily::new(f.disk.clone(), 8, 64).m0().unwrap();
        assert!(m0 >= coarse);
    }

    #[test]
    fn constant_family_has_zero_m0() {
        let d = builtins::flat_disk();
        let p = Point::new(1.0, 0.0);
        let members = vec![FamilyMember {
            i: 0,
            j: 0,
            path: DiscretePath::constant(p, 16).unwrap(),
        }];
        assert_eq!(m0_of(&d, &members), 0.0);
    }

    #[test]
    fn interior_chord_is_one_interval() {
        let f = cap_family();
        let x = f.chord_at(0.1, 3.0).unwrap();
        let set = maximal_intervals(f.domain(), &x).unwrap();
        assert_eq!(set.intervals, vec![NodeInterval { ia: 0, ib: 64 }]);
    }

    #[test]
    fn dipping_path_has_two_intervals() {
        let d = builtins::flat_disk();
        // in through (1, 0), out at (0, 1), back in, out at (-1, 0)
        let x = DiscretePath::from_fn(64, |s| {
            let r = 1.0 - 0.3 * (4.0 * PI * s).sin().abs();
            let r = if (32..=33).contains(&((s * 64.0).round() as i32)) { 1.05 } else { r };
            Point::new((PI * s).cos(), (PI * s).sin()) * r
        })
        .unwrap();
        let set = maximal_intervals(&d, &x).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.intervals[0].ia, 0);
        assert_eq!(set.intervals[1].ib, 64);
        assert!(set.intervals[0].ib < set.intervals[1].ia);
    }

    #[test]
    fn boundary_path_has_no_intervals() {
        let d = builtins::flat_disk();
        let x = DiscretePath::constant(Point::new(0.0, 1.0), 16).unwrap();
        assert!(maximal_intervals(&d, &x).unwrap().is_empty());
    }

    #[test]
    fn inside_endpoint_is_rejected() {
        let d = builtins::flat_disk();
        let x = DiscretePath::constant(Point::zeros(), 16).unwrap();
        assert!(matches!(maximal_intervals(&d, &x), Err(Error::NotInPathSpace(_))));
    }

    #[test]
    fn family_chords_are_members_and_compressed_ones_are_not() {
        let f = cap_family();
        let d = f.domain();
        let c = d.constants(0.25).unwrap();
        let m0 = f.m0().unwrap();
        let x = f.chord_at(0.2, 3.5).unwrap();
        let m = pathspace_membership(d, &x, m0, &c).unwrap();
        assert!(m.member && m.bounds_hold());
        // squeeze a diameter into [0, 0.01] and rest at its end point
        let dia = ChordFamily::new(f.disk.clone(), 16, 10).chord_at(0.0, PI).unwrap();
        let mut nodes = dia.nodes().to_vec();
        nodes.extend(std::iter::repeat(dia.last()).take(990));
        let squeezed = DiscretePath::new(nodes).unwrap();
        let m = pathspace_membership(d, &squeezed, m0, &c).unwrap();
        assert!(!m.member);
        assert!(m.bounds_hold());
    }

    #[test]
    fn oscillator_chord_respects_the_length_bound() {
        let p = crate::maupertuis::jacobi_setup(&crate::maupertuis::oscillator(1.0, 2f64.sqrt(), 1.0), 0.05, 3.0)
            .unwrap();
        let r = p.domain.concavity_scan(0.1, &ScanOptions::default()).unwrap();
        let disk = DiskMap::build(&p.domain, r.delta0, None).unwrap();
        let f = ChordFamily::new(disk, 16, 128);
        let c = p.domain.constants(r.delta0).unwrap();
        let x = f.chord_at(0.0, PI).unwrap();
        let m = pathspace_membership(&p.domain, &x, f64::INFINITY, &c).unwrap();
        assert!(m.bounds_hold(), "{m:?}");
        assert!(m.intervals[0].b - m.intervals[0].a >= m.intervals[0].length_bound);
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let f = cap_family();
        let members = vec![FamilyMember {
            i: 0,
            j: 3,
            path: f.chord_at(0.0, f.theta(3)).unwrap(),
        }];
        let mut buf = Vec::new();
        write_family_csv(&members, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 65);
        assert!(text.starts_with("i,j,node,s,q1,q2\n0,3,0,0,"));
    }
}
