//! Classification of critical portions of discrete paths, the detectors used
//! by the inward move (cusp angles, bending constant, maximal proximity), and
//! certification of orthogonal geodesic chords.

use serde::{Deserialize, Serialize};

use crate::chords::NodeInterval;
use crate::domain::{DomainConstants, SignedDistanceField, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{DiscretePath, JoinOptions, Point, Tangent};

/// Relative tolerance for discrete geodesic and orthogonality checks on
/// sampled paths, which carry `O(h²)` discretization error. Certification
/// uses the much tighter thresholds of [`ToleranceSet`] on re-shot geodesics.
pub const DISCRETE_TOL: f64 = 1e-2;

const SPEED_DRIFT_TOL: f64 = 1e-9;
const MAX_SUBSTEPS: usize = 128;

/// Consecutive nodes closer than this (relative) are treated as equal.
const STATIONARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSet {
    pub delta_bar: f64,
    pub gamma_bar: f64,
    pub sigma1: f64,
    pub grad_tol: f64,
    pub ortho_tol: f64,
    pub geo_tol: f64,
    /// Velocity jumps below this angle (radians) are not cusps.
    pub angle_tol: f64,
    /// Relative energy gap below which two chords may be the same.
    pub energy_tol: f64,
}

impl ToleranceSet {
    /// Defaults for a certified band `δ₀`: `δ̄ = δ₀/2`, `σ₁ = δ̄/10`, `γ̄ = 0.25`.
    pub fn for_band(delta0: f64) -> Self {
        let delta_bar = 0.5 * delta0;
        Self {
            delta_bar,
            gamma_bar: 0.25,
            sigma1: delta_bar / 10.0,
            grad_tol: 1e-8,
            ortho_tol: 1e-6,
            geo_tol: 1e-6,
            angle_tol: 1e-3,
            energy_tol: 1e-6,
        }
    }

    pub fn validate(&self, delta0: f64) -> Result<()> {
        let positive = [
            self.gamma_bar,
            self.grad_tol,
            self.ortho_tol,
            self.geo_tol,
            self.angle_tol,
            self.energy_tol,
        ];
        if !(0.0 < self.sigma1 && self.sigma1 < self.delta_bar && self.delta_bar <= delta0)
            || positive.iter().any(|&t| !(t > 0.0))
        {
            return Err(Error::Config(format!(
                "tolerances need 0 < sigma1 < delta_bar <= delta0 and positive thresholds \
                 (sigma1 = {}, delta_bar = {}, delta0 = {delta0})",
                self.sigma1, self.delta_bar
            )));
        }
        Ok(())
    }

    /// Bending threshold `1 + 3γ̄/2` for non-essential intervals.
    pub fn bending_threshold(&self) -> f64 {
        1.0 + 1.5 * self.gamma_bar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    NonCritical,
    Regular,
    IrregularFirstType,
    IrregularSecondType,
    WogcFlag,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cusp {
    pub k1: usize,
    pub k2: usize,
    pub t1: f64,
    pub t2: f64,
    pub theta: f64,
    /// Difference of the boundary-tangential components of the unit one-sided
    /// velocities.
    pub tangential_jump: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalClassification {
    pub kind: CriticalKind,
    pub interval: NodeInterval,
    pub cusps: Vec<Cusp>,
    pub constant_prefix: Option<(f64, f64)>,
    pub constant_suffix: Option<(f64, f64)>,
    /// Largest relative discrete geodesic-equation residual on the smooth arcs.
    pub geodesic_residual: f64,
    /// Largest `|sin|` of the angle between end velocities and `∇φ`.
    pub ortho_residual: f64,
    /// Every pair of consecutive cusps is separated by a dip below `-δ₀`.
    pub cusps_separated: bool,
}

/// Velocity at node `k` from the left (`forward = false`) or the right,
/// using nodes inside `lo..=hi`; second order when three nodes are available.
fn one_sided(x: &DiscretePath, k: usize, forward: bool, lo: usize, hi: usize) -> Option<Tangent> {
    let n = x.segments() as f64;
    let p = x.nodes();
    if forward {
        if k + 2 <= hi {
            Some((p[k + 1] * 4.0 - p[k] * 3.0 - p[k + 2]) * (0.5 * n))
        } else if k < hi {
            Some((p[k + 1] - p[k]) * n)
        } else {
            None
        }
    } else if k >= lo + 2 {
        Some((p[k] * 3.0 - p[k - 1] * 4.0 + p[k - 2]) * (0.5 * n))
    } else if k > lo {
        Some((p[k] - p[k - 1]) * n)
    } else {
        None
    }
}

fn stationary(a: &Point, b: &Point) -> bool {
    (a - b).norm() <= STATIONARY_TOL * (1.0 + a.norm())
}

/// Cusp angle `Θ ∈ [0, π]` between the one-sided velocities `ẋ(t₁⁻)` and
/// `ẋ(t₂⁺)` at a contact component spanning nodes `k1..=k2`.
pub fn cusp_angle(domain: &SignedDistanceField, x: &DiscretePath, k1: usize, k2: usize) -> Result<f64> {
    Ok(cusp_detail(domain, x, k1, k2, 0, x.segments())?.0)
}

fn cusp_detail(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    k1: usize,
    k2: usize,
    lo: usize,
    hi: usize,
) -> Result<(f64, f64)> {
    let metric = domain.metric();
    let t1 = x.param(k1);
    let t2 = x.param(k2);
    let vl = one_sided(x, k1, false, lo, hi).ok_or(Error::DegenerateCusp { at: t1 })?;
    let vr = one_sided(x, k2, true, lo, hi).ok_or(Error::DegenerateCusp { at: t2 })?;
    let q = x.nodes()[k1];
    let (nl, nr) = (metric.norm(&q, &vl), metric.norm(&q, &vr));
    if nl <= 1e-12 {
        return Err(Error::DegenerateCusp { at: t1 });
    }
    if nr <= 1e-12 {
        return Err(Error::DegenerateCusp { at: t2 });
    }
    let (ul, ur) = (vl / nl, vr / nr);
    let cos = metric.dot(&q, &ul, &ur);
    let sin = metric.eval(&q)?.determinant().sqrt() * (ul.x * ur.y - ul.y * ur.x).abs();
    let jump = match domain.level_tangent(&q) {
        Ok(t) => (metric.dot(&q, &ul, &t) - metric.dot(&q, &ur, &t)).abs(),
        Err(_) => f64::NAN,
    };
    Ok((sin.atan2(cos), jump))
}

fn ortho_defect(domain: &SignedDistanceField, q: &Point, v: &Tangent) -> Result<f64> {
    let metric = domain.metric();
    let g = domain.grad(q)?;
    let nv = metric.norm(q, v);
    if nv == 0.0 {
        return Ok(1.0);
    }
    let area = metric.eval(q)?.determinant().sqrt() * (v.x * g.y - v.y * g.x).abs();
    Ok(area / (nv * metric.norm(q, &g)))
}

/// Contact tolerance `max(1e-6, 2 h K₀)` with `h` the largest node spacing in g.
pub fn contact_tolerance(domain: &SignedDistanceField, x: &DiscretePath, iv: NodeInterval, k0: f64) -> f64 {
    let metric = domain.metric();
    let p = x.nodes();
    let h = (iv.ia..iv.ib)
        .map(|i| metric.norm(&((p[i] + p[i + 1]) * 0.5), &(p[i + 1] - p[i])))
        .fold(0.0, f64::max);
    BOUNDARY_TOL.max(2.0 * h * k0)
}

/// Classify the portion of `x` on the maximal interval `iv`.
pub fn classify_portion(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    iv: NodeInterval,
    tol: &ToleranceSet,
    constants: &DomainConstants,
) -> Result<CriticalClassification> {
    let p = x.nodes();
    let (ia, ib) = (iv.ia, iv.ib);
    if ib <= ia || ib > x.segments() {
        return Err(Error::Contract(format!("bad interval [{ia}, {ib}]")));
    }
    let phi: Vec<f64> = p.iter().map(|q| domain.phi(q)).collect();
    let contact = contact_tolerance(domain, x, iv, constants.k0);
    if phi[ia].abs() > BOUNDARY_TOL || phi[ib].abs() > BOUNDARY_TOL || phi[ia..=ib].iter().any(|&v| v > BOUNDARY_TOL) {
        return Err(Error::Contract(
            "interval must stay in the closed domain with both ends on the boundary".into(),
        ));
    }
    let mut out = CriticalClassification {
        kind: CriticalKind::NonCritical,
        interval: iv,
        cusps: Vec::new(),
        constant_prefix: None,
        constant_suffix: None,
        geodesic_residual: f64::INFINITY,
        ortho_residual: f64::INFINITY,
        cusps_separated: true,
    };
    // constant prefix / suffix on the boundary
    let mut alpha = ia;
    while alpha < ib && stationary(&p[alpha], &p[alpha + 1]) {
        alpha += 1;
    }
    if alpha == ib {
        return Ok(out);
    }
    let mut beta = ib;
    while beta > alpha && stationary(&p[beta], &p[beta - 1]) {
        beta -= 1;
    }
    if alpha > ia {
        out.constant_prefix = Some((x.param(ia), x.param(alpha)));
    }
    if beta < ib {
        out.constant_suffix = Some((x.param(beta), x.param(ib)));
    }
    // interior contact components and their velocity jumps
    let mut k = alpha + 1;
    let mut excluded = vec![false; p.len()];
    while k < beta {
        if phi[k] >= -contact {
            // one candidate per contact run, at its highest node
            let mut end = k;
            while end + 1 < beta && phi[end + 1] >= -contact {
                end += 1;
            }
            let top = (k..=end).fold(k, |m, i| if phi[i] > phi[m] { i } else { m });
            let mut k1 = top;
            while k1 > k && stationary(&p[k1], &p[k1 - 1]) {
                k1 -= 1;
            }
            let mut k2 = top;
            while k2 < end && stationary(&p[k2], &p[k2 + 1]) {
                k2 += 1;
            }
            if k1 >= alpha + 2 && k2 + 2 <= beta {
                if let Ok((theta, jump)) = cusp_detail(domain, x, k1, k2, alpha, beta) {
                    if theta > tol.angle_tol {
                        out.cusps.push(Cusp {
                            k1,
                            k2,
                            t1: x.param(k1),
                            t2: x.param(k2),
                            theta,
                            tangential_jump: jump,
                        });
                        for e in excluded.iter_mut().take(k2 + 2).skip(k1.saturating_sub(1)) {
                            *e = true;
                        }
                    }
                }
            }
            k = end + 1;
        } else {
            k += 1;
        }
    }
    out.cusps_separated = out
        .cusps
        .windows(2)
        .all(|w| phi[w[0].k2..=w[1].k1].iter().any(|&v| v < -constants.delta0));
    // discrete geodesic residual on the smooth arcs
    let metric = domain.metric();
    let n = x.segments() as f64;
    let mut speed2 = 0.0;
    let mut count = 0.0;
    for i in alpha..beta {
        let m = (p[i] + p[i + 1]) * 0.5;
        let d = (p[i + 1] - p[i]) * n;
        speed2 += metric.dot(&m, &d, &d);
        count += 1.0;
    }
    speed2 /= count;
    let mut residual: f64 = 0.0;
    for i in alpha + 1..beta {
        if excluded[i] {
            continue;
        }
        let v = (p[i + 1] - p[i - 1]) * (0.5 * n);
        let acc = (p[i + 1] - p[i] * 2.0 + p[i - 1]) * (n * n) + metric.christoffel(&p[i])?.contract(&v, &v);
        residual = residual.max(metric.norm(&p[i], &acc) / speed2);
    }
    out.geodesic_residual = residual;
    let va = one_sided(x, alpha, true, alpha, beta).unwrap_or_else(Tangent::zeros);
    let vb = one_sided(x, beta, false, alpha, beta).unwrap_or_else(Tangent::zeros);
    out.ortho_residual = ortho_defect(domain, &p[alpha], &va)?.max(ortho_defect(domain, &p[beta], &vb)?);
    let geodesic = residual <= DISCRETE_TOL;
    let orthogonal = out.ortho_residual <= DISCRETE_TOL;
    let touches = (alpha + 1..beta).any(|i| phi[i] >= -BOUNDARY_TOL && !excluded[i] && i > alpha + 2 && i + 2 < beta);
    out.kind = if !geodesic {
        CriticalKind::NonCritical
    } else if !out.cusps.is_empty() {
        CriticalKind::IrregularFirstType
    } else if !orthogonal {
        CriticalKind::NonCritical
    } else if out.constant_prefix.is_some() || out.constant_suffix.is_some() {
        CriticalKind::IrregularSecondType
    } else if touches {
        CriticalKind::WogcFlag
    } else {
        CriticalKind::Regular
    };
    Ok(out)
}

/// `𝔟 = max{|x(β) - π(x(α))|, |x(α) - π(x(β))|} / |π(x(α)) - π(x(β))|`, or
/// `+∞` when the projections coincide.
pub fn bending_constant(domain: &SignedDistanceField, xa: &Point, xb: &Point) -> Result<f64> {
    if let Some(band) = domain.band() {
        for q in [xa, xb] {
            let v = domain.phi(q);
            if v.abs() > band + 1e-12 {
                return Err(Error::BandExit { band, max_tau: 0.0 });
            }
        }
    }
    let pa = domain.boundary_projection(xa)?;
    let pb = domain.boundary_projection(xb)?;
    let den = (pa - pb).norm();
    if den < 1e-12 {
        return Ok(f64::INFINITY);
    }
    Ok((xb - pa).norm().max((xa - pb).norm()) / den)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    /// Last node at or below `-δ̄` before the excursion.
    pub k_alpha: usize,
    /// First node at or below `-δ̄` after it.
    pub k_beta: usize,
    /// Parameters where the linear interpolant crosses `-δ̄`.
    pub alpha: f64,
    pub beta: f64,
    pub x_alpha: Point,
    pub x_beta: Point,
    /// Maximal proximity `max φ` on the excursion.
    pub proximity: f64,
    pub bending: f64,
    pub nonessential: bool,
}

/// Excursions of `x` on `iv` above the level `-δ̄` that start and end on it.
pub fn proximity_and_closeness(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    iv: NodeInterval,
    tol: &ToleranceSet,
) -> Result<Vec<Proximity>> {
    let p = x.nodes();
    let level = -tol.delta_bar;
    let phi: Vec<f64> = p.iter().map(|q| domain.phi(q)).collect();
    let mut out = Vec::new();
    let mut k = iv.ia;
    while k <= iv.ib {
        if phi[k] <= level {
            k += 1;
            continue;
        }
        let k1 = k;
        while k <= iv.ib && phi[k] > level {
            k += 1;
        }
        let k2 = k - 1;
        if k1 == iv.ia || k2 == iv.ib {
            continue;
        }
        let (ka, kb) = (k1 - 1, k2 + 1);
        let cross = |i: usize, j: usize| {
            let s = (level - phi[i]) / (phi[j] - phi[i]);
            (p[i] + (p[j] - p[i]) * s, x.param(i) + s * (x.param(j) - x.param(i)))
        };
        let (x_alpha, alpha) = cross(ka, k1);
        let (x_beta, beta) = cross(kb, k2);
        let proximity = phi[k1..=k2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let bending = bending_constant(domain, &x_alpha, &x_beta)?;
        out.push(Proximity {
            k_alpha: ka,
            k_beta: kb,
            alpha,
            beta,
            x_alpha,
            x_beta,
            proximity,
            bending,
            nonessential: proximity >= -tol.sigma1 && bending >= tol.bending_threshold(),
        });
    }
    Ok(out)
}

/// A certified orthogonal geodesic chord, affinely parameterized on `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OgcRecord {
    pub path: DiscretePath,
    /// Normalized energy `½ ∫₀¹ g(γ̇, γ̇)`.
    pub energy_c: f64,
    pub start: Point,
    pub end: Point,
    pub start_velocity: Tangent,
    pub end_velocity: Tangent,
    pub ortho_residual: f64,
    pub geo_residual: f64,
    /// Some interior point touches the boundary.
    pub wogc: bool,
    /// The chord dips below `-δ₀`.
    pub deep_dip: bool,
    pub energy_floor: f64,
}

impl OgcRecord {
    pub fn length(&self) -> f64 {
        (2.0 * self.energy_c).sqrt()
    }

    pub fn reversed(&self) -> Self {
        Self {
            path: self.path.reversed(),
            start: self.end,
            end: self.start,
            start_velocity: -self.end_velocity,
            end_velocity: -self.start_velocity,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    pub reason: String,
    pub geo_residual: f64,
    pub ortho_residual: f64,
    pub energy: f64,
}

impl Rejection {
    fn new(reason: impl Into<String>) -> Self {
        Self {
            reason: reason.into(),
            geo_residual: f64::NAN,
            ortho_residual: f64::NAN,
            energy: f64::NAN,
        }
    }
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} (geodesic residual {:.3e}, orthogonality residual {:.3e}, energy {:.6})",
            self.reason, self.geo_residual, self.ortho_residual, self.energy
        )
    }
}

/// Re-shoot the portion on `iv` as an exact geodesic between its end points
/// and check it against the tolerances.
pub fn certify_ogc(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    iv: NodeInterval,
    tol: &ToleranceSet,
    constants: &DomainConstants,
    m0: f64,
) -> std::result::Result<OgcRecord, Rejection> {
    let y = x.restrict(iv.ia, iv.ib).map_err(|e| Rejection::new(e.to_string()))?;
    let n = y.segments();
    if y.is_constant(STATIONARY_TOL) {
        return Err(Rejection::new("constant portion"));
    }
    let (a, b) = (y.first(), y.last());
    if domain.phi(&a).abs() > BOUNDARY_TOL || domain.phi(&b).abs() > BOUNDARY_TOL {
        return Err(Rejection::new("end points are off the boundary"));
    }
    let metric = domain.metric();
    // refine the integrator until the speed is conserved
    let mut sub = 4;
    let mut guess = (y.nodes()[1] - a) * n as f64;
    let seg = loop {
        let opts = JoinOptions {
            steps: sub * n,
            ..JoinOptions::default()
        };
        // a coarse integrator can miss the far end outright near a
        // degenerate boundary, so a failed join also asks for refinement
        match metric.exp_join_with(&a, &b, Some(guess), &opts) {
            Ok(seg) if seg.speed_drift() <= SPEED_DRIFT_TOL || sub >= MAX_SUBSTEPS => break seg,
            Ok(seg) => guess = seg.start_velocity(),
            Err(e) if sub >= MAX_SUBSTEPS => return Err(Rejection::new(format!("re-shooting failed: {e}"))),
            Err(_) => {}
        }
        sub *= 2;
    };
    let exact: Vec<Point> = (0..=n).map(|k| seg.samples[sub * k].q).collect();
    let chart_len: f64 = exact.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    let geo_residual = y
        .nodes()
        .iter()
        .zip(&exact)
        .map(|(p, q)| (p - q).norm())
        .fold(0.0, f64::max)
        / chart_len;
    let (v0, v1) = (seg.start_velocity(), seg.end_velocity());
    let ortho = |q: &Point, v: &Tangent| ortho_defect(domain, q, v).map_err(|e| Rejection::new(e.to_string()));
    let ortho_residual = ortho(&a, &v0)?.max(ortho(&b, &v1)?);
    let energy_c = 0.5 * metric.dot(&a, &v0, &v0);
    let energy_floor = constants.energy_floor();
    let reject = |reason: String| Rejection {
        reason,
        geo_residual,
        ortho_residual,
        energy: energy_c,
    };
    if geo_residual > tol.geo_tol {
        return Err(reject("not a geodesic".into()));
    }
    if ortho_residual > tol.ortho_tol {
        return Err(reject("end velocities are not normal to the boundary".into()));
    }
    let points = seg.points();
    if points.iter().any(|q| domain.phi(q) > BOUNDARY_TOL) {
        return Err(reject("chord leaves the domain".into()));
    }
    if energy_c < energy_floor {
        return Err(reject(format!("energy below the floor {energy_floor:.3e}")));
    }
    if !(energy_c < 0.5 * m0) {
        return Err(reject(format!("energy not below M0/2 = {}", 0.5 * m0)));
    }
    // interior local maxima of φ touching the boundary
    let phis: Vec<f64> = points.iter().map(|q| domain.phi(q)).collect();
    let wogc = (1..phis.len() - 1)
        .any(|i| phis[i] >= -BOUNDARY_TOL && phis[i] >= phis[i - 1] && phis[i] >= phis[i + 1]);
    Ok(OgcRecord {
        path: DiscretePath::new(exact).map_err(|e| reject(e.to_string()))?,
        energy_c,
        start: a,
        end: b,
        start_velocity: v0,
        end_velocity: v1,
        ortho_residual,
        geo_residual,
        wogc,
        deep_dip: domain.deep_dip_check(&points, constants.delta0),
        energy_floor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::domain::{LevelFn, SignedDistanceField};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, SQRT_2};

    fn flat_constants(delta0: f64) -> DomainConstants {
        DomainConstants {
            delta0,
            k0: 1.0,
            bounds_min: Point::new(-1.0, -1.0),
            bounds_max: Point::new(1.0, 1.0),
        }
    }

    /// `{x₂ > 0}` written as `φ = -x₂`, centered at `(0, 1)`.
    struct UpperHalf;
    impl LevelFn for UpperHalf {
        fn value(&self, q: &Point) -> f64 {
            -q.y
        }
        fn differential(&self, _q: &Point) -> Option<Tangent> {
            Some(Tangent::new(0.0, -1.0))
        }
    }

    fn upper_half() -> SignedDistanceField {
        SignedDistanceField::new(builtins::euclidean(), UpperHalf, Point::new(0.0, 1.0), 10.0).unwrap()
    }

    fn polyline(points: &[Point], per_leg: usize) -> DiscretePath {
        let mut nodes = vec![points[0]];
        for w in points.windows(2) {
            for k in 1..=per_leg {
                nodes.push(w[0] + (w[1] - w[0]) * (k as f64 / per_leg as f64));
            }
        }
        DiscretePath::new(nodes).unwrap()
    }

    #[test]
    fn defaults_are_consistent() {
        let t = ToleranceSet::for_band(0.2);
        t.validate(0.2).unwrap();
        assert_eq!(t.delta_bar, 0.1);
        assert!((t.sigma1 - 0.01).abs() < 1e-15);
        let bad = ToleranceSet { sigma1: 0.5, ..t };
        assert!(bad.validate(0.2).is_err());
    }

    #[test]
    fn straight_pass_has_no_cusp() {
        let d = upper_half();
        let x = polyline(&[Point::new(-1.0, 1.0), Point::new(0.0, 0.0), Point::new(1.0, -1.0)], 8);
        assert!(cusp_angle(&d, &x, 8, 8).unwrap() < 1e-12);
    }

    #[test]
    fn mirror_reflection_at_forty_five_degrees() {
        let d = upper_half();
        let x = polyline(&[Point::new(-1.0, 1.0), Point::new(0.0, 0.0), Point::new(1.0, 1.0)], 8);
        assert!((cusp_angle(&d, &x, 8, 8).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn normal_hit_and_return() {
        let d = upper_half();
        let x = polyline(&[Point::new(0.0, 1.0), Point::new(0.0, 0.0), Point::new(0.0, 1.0)], 8);
        assert!((cusp_angle(&d, &x, 8, 8).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn stalled_velocity_is_degenerate() {
        let d = upper_half();
        let x = DiscretePath::constant(Point::zeros(), 16).unwrap();
        assert!(matches!(cusp_angle(&d, &x, 8, 8), Err(Error::DegenerateCusp { .. })));
    }

    /// Down-and-up between the boundary line and depth 1, with a bounce at
    /// the line in the middle: OGC legs `(−s, 0) → ...` are straight.
    #[test]
    fn sixty_degree_corner_is_a_first_type_cusp() {
        // a symmetric strip {0 < x₂ < 1}: the chord leaves the top normally,
        // reaches the bottom, bounces with a 60° corner
        struct Strip;
        impl LevelFn for Strip {
            fn value(&self, q: &Point) -> f64 {
                (q.y - 0.5).abs() - 0.5
            }
        }
        let d = SignedDistanceField::new(builtins::euclidean(), Strip, Point::new(0.0, 0.5), 10.0).unwrap();
        let h = 0.5 / (PI / 6.0).tan();
        let pts = [
            Point::new(-2.0 * h, 1.0),
            Point::new(-h, 0.5),
            Point::new(0.0, 0.0),
            Point::new(h, 0.5),
            Point::new(2.0 * h, 1.0),
        ];
        let x = polyline(&pts, 16);
        let tol = ToleranceSet::for_band(0.2);
        let c = classify_portion(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol, &flat_constants(0.2)).unwrap();
        assert_eq!(c.kind, CriticalKind::IrregularFirstType);
        assert_eq!(c.cusps.len(), 1);
        let cusp = c.cusps[0];
        assert!((cusp.theta - FRAC_PI_3).abs() < 1e-9, "{}", cusp.theta);
        assert!(cusp.tangential_jump < 1e-9);
    }

    #[test]
    fn grazing_corner_measures_sixty_degrees() {
        let d = upper_half();
        let s = (PI / 6.0).tan();
        let x = polyline(&[Point::new(-1.0, s), Point::new(0.0, 0.0), Point::new(1.0, s)], 8);
        let theta = cusp_angle(&d, &x, 8, 8).unwrap();
        assert!((theta - FRAC_PI_3).abs() < 1e-12);
    }

    #[test]
    fn constant_prefix_then_chord_is_second_type() {
        let d = builtins::flat_disk();
        let mut nodes = vec![Point::new(-1.0, 0.0); 13];
        for k in 1..=52 {
            nodes.push(Point::new(-1.0 + 2.0 * k as f64 / 52.0, 0.0));
        }
        let x = DiscretePath::new(nodes).unwrap();
        let tol = ToleranceSet::for_band(0.2);
        let c = classify_portion(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol, &flat_constants(0.2)).unwrap();
        assert_eq!(c.kind, CriticalKind::IrregularSecondType);
        assert_eq!(c.constant_prefix, Some((0.0, 12.0 / 64.0)));
    }

    #[test]
    fn diameter_of_the_flat_disk_is_regular() {
        let d = builtins::flat_disk();
        let x = DiscretePath::from_fn(64, |s| Point::new(0.0, 2.0 * s - 1.0)).unwrap();
        let tol = ToleranceSet::for_band(0.2);
        let c = classify_portion(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol, &flat_constants(0.2)).unwrap();
        assert_eq!(c.kind, CriticalKind::Regular);
        assert!(c.ortho_residual < 1e-12);
    }

    #[test]
    fn oblique_chord_is_not_critical() {
        let d = builtins::flat_disk();
        let (a, b) = (Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        let x = DiscretePath::from_fn(64, |s| a + (b - a) * s).unwrap();
        let tol = ToleranceSet::for_band(0.2);
        let c = classify_portion(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol, &flat_constants(0.2)).unwrap();
        assert_eq!(c.kind, CriticalKind::NonCritical);
    }

    #[test]
    fn bending_constant_cases() {
        let d = builtins::half_plane();
        let p = Point::new(-0.1, 0.3);
        assert_eq!(bending_constant(&d, &p, &p).unwrap(), f64::INFINITY);
        let (a, b) = (Point::new(0.0, 0.0), Point::new(0.0, 2.0));
        assert!((bending_constant(&d, &a, &b).unwrap() - 1.0).abs() < 1e-15);
        let db = 0.1;
        let v = bending_constant(&d, &Point::new(-db, 0.0), &Point::new(-db, 1.0)).unwrap();
        assert!((v - (db * db + 1.0f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn proximity_of_deep_chord_is_empty() {
        let d = builtins::flat_disk();
        let x = DiscretePath::from_fn(64, |s| Point::new(0.0, 2.0 * s - 1.0)).unwrap();
        let tol = ToleranceSet::for_band(0.2);
        assert!(proximity_and_closeness(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol)
            .unwrap()
            .is_empty());
    }

    /// Out along the x₁ axis to the boundary and straight back.
    fn hugging_fixture() -> DiscretePath {
        let mut nodes = Vec::new();
        for k in 0..=32 {
            nodes.push(Point::new(0.0, -1.0 + 2.0 * k as f64 / 32.0 * 0.5));
        }
        // now at the centre; go to (1, 0) and back
        for k in 1..=16 {
            nodes.push(Point::new(k as f64 / 16.0, 0.0));
        }
        for k in 1..=16 {
            nodes.push(Point::new(1.0 - k as f64 / 16.0, 0.0));
        }
        for k in 1..=32 {
            nodes.push(Point::new(0.0, k as f64 / 32.0));
        }
        DiscretePath::new(nodes).unwrap()
    }

    #[test]
    fn boundary_hugging_excursion_is_nonessential() {
        let d = builtins::flat_disk().with_band(0.2);
        let x = hugging_fixture();
        let tol = ToleranceSet::for_band(0.2);
        let n = x.segments();
        let prox = proximity_and_closeness(&d, &x, NodeInterval { ia: 0, ib: n }, &tol).unwrap();
        assert_eq!(prox.len(), 1);
        assert_eq!(prox[0].proximity, 0.0);
        assert_eq!(prox[0].bending, f64::INFINITY);
        assert!(prox[0].nonessential);
    }

    #[test]
    fn shallow_graze_is_essential() {
        let d = builtins::flat_disk().with_band(0.2);
        let tol = ToleranceSet::for_band(0.2);
        // radius 1 → 0.5 → 0.95 → 0.5 → 1, so the middle rises only to -δ̄/2
        let x = DiscretePath::from_fn(64, |s| {
            let u = (s - 0.5).abs();
            let r = if u >= 0.25 {
                0.5 + (u - 0.25) * 2.0
            } else {
                0.95 - u / 0.25 * 0.45
            };
            Point::new((PI * s).cos(), (PI * s).sin()) * r
        })
        .unwrap();
        let prox = proximity_and_closeness(&d, &x, NodeInterval { ia: 0, ib: 64 }, &tol).unwrap();
        assert_eq!(prox.len(), 1);
        assert!((prox[0].proximity + tol.delta_bar / 2.0).abs() < 1e-12);
        assert!(!prox[0].nonessential);
    }

    #[test]
    fn cap_diameter_certifies_with_energy_eight() {
        let d = builtins::spherical_cap(2.0);
        let c = d.constants(0.25).unwrap();
        let a = d.boundary_point(0.3).unwrap();
        let b = d.boundary_point(0.3 + PI).unwrap();
        // straight chart line through the pole, constant spherical speed
        let x = DiscretePath::from_fn(256, |s| {
            let t = (2.0 * s - 1.0) * 1.0;
            let u = (t.abs()).tan();
            let dir = if t < 0.0 { a / a.norm() } else { b / b.norm() };
            dir * u
        })
        .unwrap();
        let tol = ToleranceSet::for_band(0.25);
        let r = certify_ogc(&d, &x, NodeInterval { ia: 0, ib: 256 }, &tol, &c, f64::INFINITY).unwrap();
        assert!((r.energy_c - 8.0).abs() < 1e-4, "{}", r.energy_c);
        assert!(r.deep_dip);
        assert!(!r.wogc);
        assert!(r.energy_c >= r.energy_floor);
        let rev = certify_ogc(&d, &r.path.reversed(), NodeInterval { ia: 0, ib: 256 }, &tol, &c, f64::INFINITY)
            .unwrap();
        assert!((rev.energy_c - r.energy_c).abs() < 1e-10);
        assert!(r.start != r.end);
    }

    #[test]
    fn constant_path_is_rejected() {
        let d = builtins::flat_disk();
        let x = DiscretePath::constant(Point::new(1.0, 0.0), 16).unwrap();
        let tol = ToleranceSet::for_band(0.2);
        let r = certify_ogc(&d, &x, NodeInterval { ia: 0, ib: 16 }, &tol, &flat_constants(0.2), 10.0);
        assert!(r.unwrap_err().reason.contains("constant"));
    }

    /// Short axis of the shrunk oscillator: the chord is the exact geodesic
    /// `q₂ ↦ (0, q₂)`; its Jacobi length is `∫ √(E - ε - 2 q²)... ` checked
    /// against direct quadrature.
    #[test]
    fn oscillator_short_axis_energy_matches_quadrature() {
        let eps = 0.05;
        let p = crate::maupertuis::jacobi_setup(&crate::maupertuis::oscillator(1.0, SQRT_2, 1.0), eps, 3.0)
            .unwrap();
        let c = p.domain.constants(0.002).unwrap();
        let amp = ((1.0 - eps) / 2.0f64).sqrt();
        // Jacobi length ∫_{-amp}^{amp} √((1 - 2q²)/2) dq by Simpson
        let m = 20000;
        let f = |q: f64| ((1.0 - 2.0 * q * q) / 2.0).sqrt();
        let h = 2.0 * amp / m as f64;
        let mut sum = f(-amp) + f(amp);
        for k in 1..m {
            sum += f(-amp + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let len = sum * h / 3.0;
        let x = DiscretePath::from_fn(256, |s| Point::new(0.0, -amp + 2.0 * amp * s)).unwrap();
        // any parameterization of the axis re-shoots to the same geodesic
        let tol = ToleranceSet {
            geo_tol: 1.0,
            ..ToleranceSet::for_band(0.002)
        };
        let r = certify_ogc(&p.domain, &x, NodeInterval { ia: 0, ib: 256 }, &tol, &c, f64::INFINITY).unwrap();
        assert!((r.energy_c - len * len / 2.0).abs() / r.energy_c < 1e-8, "{} vs {}", r.energy_c, len * len / 2.0);
        assert!(r.ortho_residual < 1e-9);
        // π²/32 for the unshrunk region is within 3% of the shrunk value
        assert!((r.energy_c - PI * PI / 32.0).abs() / r.energy_c < 0.03);
    }
}
