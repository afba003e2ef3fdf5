//! Signed-distance machinery: Hessians along geodesics, the second
//! fundamental form of the boundary, strong-concavity certificates, the
//! normal flows and the boundary retraction.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GeodesicSegment, MetricField, Point, Tangent, DEFAULT_FD_STEP};

/// "On the boundary" for discrete paths.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// Geodesic step (in g-length) for second derivatives of `φ`.
const HESSIAN_STEP: f64 = 2e-4;

/// A scalar field whose zero set is the boundary, negative inside.
pub trait LevelFn: Send + Sync {
    fn value(&self, q: &Point) -> f64;

    /// The differential `dφ` as a covector, when known in closed form.
    fn differential(&self, _q: &Point) -> Option<Tangent> {
        None
    }
}

#[derive(Clone)]
pub struct SignedDistanceField {
    phi: Arc<dyn LevelFn>,
    metric: MetricField,
    center: Point,
    reach: f64,
    fd_step: f64,
    band: Option<f64>,
}

impl fmt::Debug for SignedDistanceField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SignedDistanceField")
            .field("center", &self.center)
            .field("reach", &self.reach)
            .field("band", &self.band)
            .finish()
    }
}

/// Result of [`SignedDistanceField::second_fundamental_form`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondFundamental {
    pub value: f64,
    /// The supplied direction was not tangential and has been projected.
    pub projected: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Point,
    pub direction: Tangent,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcavityReport {
    pub passed: bool,
    pub delta0: f64,
    pub worst_margin: f64,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanOptions {
    pub boundary_samples: usize,
    pub depths: usize,
    pub bisections: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            boundary_samples: 64,
            depths: 8,
            bisections: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainConstants {
    pub delta0: f64,
    pub k0: f64,
    pub bounds_min: Point,
    pub bounds_max: Point,
}

impl DomainConstants {
    /// Chart diameter of the sampled boundary box.
    pub fn diameter(&self) -> f64 {
        (self.bounds_max - self.bounds_min).norm()
    }

    /// Lower bound `δ₀² / (2 K₀²)` on the energy of any chord that dips below `-δ₀`.
    pub fn energy_floor(&self) -> f64 {
        self.delta0 * self.delta0 / (2.0 * self.k0 * self.k0)
    }

    /// Lower bound `½ (3δ₀ / 4K₀)²` on the first minimax level.
    pub fn first_level_floor(&self) -> f64 {
        0.5 * (3.0 * self.delta0 / (4.0 * self.k0)).powi(2)
    }
}

fn brent(lo: f64, hi: f64, f: impl FnMut(f64) -> f64, eps: f64) -> Option<f64> {
    let mut conv = SimpleConvergency { eps, max_iter: 200 };
    find_root_brent(lo, hi, f, &mut conv).ok()
}

impl SignedDistanceField {
    /// `center` must be an interior point from which the domain is
    /// star-shaped in chart coordinates; `reach` bounds the ray searches.
    pub fn new<F: LevelFn + 'static>(metric: MetricField, phi: F, center: Point, reach: f64) -> Result<Self> {
        let field = Self {
            phi: Arc::new(phi),
            metric,
            center,
            reach,
            fd_step: DEFAULT_FD_STEP,
            band: None,
        };
        if !(field.phi(&center) < 0.0) {
            return Err(Error::UnsupportedDomain(format!(
                "witness point ({}, {}) is not inside the domain",
                center.x, center.y
            )));
        }
        Ok(field)
    }

    /// Restrict the normal flows to the band `|φ| ≤ band`.
    pub fn with_band(mut self, band: f64) -> Self {
        self.band = Some(band);
        self
    }

    pub fn band(&self) -> Option<f64> {
        self.band
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    #[inline]
    pub fn phi(&self, q: &Point) -> f64 {
        self.phi.value(q)
    }

    /// `dφ` at `q`.
    pub fn differential(&self, q: &Point) -> Tangent {
        if let Some(d) = self.phi.differential(q) {
            return d;
        }
        let h = self.fd_step * q.norm().max(1.0);
        let ex = Tangent::new(h, 0.0);
        let ey = Tangent::new(0.0, h);
        Tangent::new(
            (self.phi(&(q + ex)) - self.phi(&(q - ex))) / (2.0 * h),
            (self.phi(&(q + ey)) - self.phi(&(q - ey))) / (2.0 * h),
        )
    }

    /// The metric gradient `∇φ = g⁻¹ dφ`.
    pub fn grad(&self, q: &Point) -> Result<Tangent> {
        let d = self.differential(q);
        if d.norm() == 0.0 || !d.x.is_finite() || !d.y.is_finite() {
            return Err(Error::DegenerateGradient { at: *q });
        }
        self.metric.raise(q, &d)
    }

    pub fn grad_norm(&self, q: &Point) -> Result<f64> {
        let g = self.grad(q)?;
        Ok(self.metric.norm(q, &g))
    }

    /// Unit (in g) tangent to the level set through `q`, turning
    /// counterclockwise around the interior when `φ` increases outward.
    pub fn level_tangent(&self, q: &Point) -> Result<Tangent> {
        let d = self.differential(q);
        if d.norm() == 0.0 || !d.x.is_finite() || !d.y.is_finite() {
            return Err(Error::DegenerateGradient { at: *q });
        }
        let t = Tangent::new(-d.y, d.x);
        Ok(t / self.metric.norm(q, &t))
    }

    /// Outward unit normal `∇φ / ‖∇φ‖`.
    pub fn unit_normal(&self, q: &Point) -> Result<Tangent> {
        let g = self.grad(q)?;
        Ok(g / self.metric.norm(q, &g))
    }

    /// `H^φ(x)(v, v)`, the second derivative of `φ` along the geodesic
    /// through `(x, v)`, by five-point differences at two step sizes
    /// combined to cancel the `h⁴` error term.
    pub fn hessian_quadratic(&self, x: &Point, v: &Tangent) -> Result<f64> {
        let speed = self.metric.norm(x, v);
        if speed == 0.0 {
            return Err(Error::Contract("hessian_quadratic needs a nonzero direction".into()));
        }
        let u = v / speed;
        let h = HESSIAN_STEP;
        let fwd = self.metric.geodesic_shoot(x, &u, 2.0 * h, 64)?;
        let bwd = self.metric.geodesic_shoot(x, &(-u), 2.0 * h, 64)?;
        // samples at multiples of h/2 on either side
        let f = |k: usize, seg: &GeodesicSegment| self.phi(&seg.samples[16 * k].q);
        let f0 = self.phi(x);
        let second = |k: usize, step: f64| {
            (-f(2 * k, &fwd) + 16.0 * f(k, &fwd) - 30.0 * f0 + 16.0 * f(k, &bwd) - f(2 * k, &bwd)) / (12.0 * step * step)
        };
        let coarse = second(2, h);
        let fine = second(1, 0.5 * h);
        Ok((16.0 * fine - coarse) / 15.0 * speed * speed)
    }

    /// `II_n(x)(v, v) = g(∇_v T, n)` for the level curve through `x`.
    ///
    /// Computed from the acceleration of the level curve, independently of
    /// [`Self::hessian_quadratic`]. Non-tangential `v` is projected.
    pub fn second_fundamental_form(&self, x: &Point, v: &Tangent, n: &Tangent) -> Result<SecondFundamental> {
        let p = self.phi(x);
        if p.abs() > BOUNDARY_TOL {
            return Err(Error::Contract(format!("point is off the boundary (phi = {p:.3e})")));
        }
        let t = self.level_tangent(x)?;
        let lambda = self.metric.dot(x, v, &t);
        let residual = v - t * lambda;
        let projected = self.metric.norm(x, &residual) > 1e-8 * self.metric.norm(x, v).max(1e-300);
        if projected {
            log::warn!("second_fundamental_form: direction is not tangential, projecting");
        }
        // acceleration of the unit-speed level curve: dT(T) + Γ(T, T)
        let h = 1e-4 * x.norm().max(1.0);
        let at = |s: f64| self.level_tangent(&(x + t * (s * h)));
        let dt = (at(-2.0)? - at(2.0)? + (at(1.0)? - at(-1.0)?) * 8.0) / (12.0 * h);
        let acc = dt + self.metric.christoffel(x)?.contract(&t, &t);
        Ok(SecondFundamental {
            value: lambda * lambda * self.metric.dot(x, &acc, n),
            projected,
        })
    }

    fn check_band(&self, start: f64, target: f64, tau: f64, sign: f64) -> Result<()> {
        if let Some(band) = self.band {
            let slack = band + 1e-9;
            if start.abs() > slack || target.abs() > slack {
                let room = if sign * tau >= 0.0 { band - start } else { start + band };
                return Err(Error::BandExit {
                    band,
                    max_tau: room.max(0.0),
                });
            }
        }
        Ok(())
    }

    /// The normal flows: `dη/dτ = ±∇φ / ‖∇φ‖²`, so that
    /// `φ(η(τ, x)) = φ(x) ± τ`.
    pub fn normal_flow(&self, x: &Point, tau: f64, outward: bool) -> Result<Point> {
        if tau == 0.0 {
            return Ok(*x);
        }
        let sign = if outward { 1.0 } else { -1.0 };
        let start = self.phi(x);
        let target = start + sign * tau;
        self.check_band(start, target, tau, sign)?;
        let field = |q: &Point| -> Result<Tangent> {
            let g = self.grad(q)?;
            let n2 = self.metric.dot(q, &g, &g);
            Ok(g * (sign / n2))
        };
        let steps = ((tau.abs() / 0.01).ceil() as usize).max(4);
        let h = tau / steps as f64;
        let mut q = *x;
        for _ in 0..steps {
            let k1 = field(&q)?;
            let k2 = field(&(q + k1 * (h / 2.0)))?;
            let k3 = field(&(q + k2 * (h / 2.0)))?;
            let k4 = field(&(q + k3 * h))?;
            q += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        // remove the integration error along the gradient line
        for _ in 0..6 {
            let miss = target - self.phi(&q);
            if miss.abs() <= 1e-14 * (1.0 + target.abs()) {
                break;
            }
            let g = self.grad(&q)?;
            q += g * (miss / self.metric.dot(&q, &g, &g));
        }
        Ok(q)
    }

    /// The retraction `π` onto the boundary along the gradient flow.
    pub fn boundary_projection(&self, x: &Point) -> Result<Point> {
        let p = self.phi(x);
        if p == 0.0 {
            return Ok(*x);
        }
        self.normal_flow(x, -p, true)
    }

    /// True when some sample dips strictly below `-δ₀`.
    pub fn deep_dip_check(&self, points: &[Point], delta0: f64) -> bool {
        points.iter().any(|p| self.phi(p) < -delta0)
    }

    /// Chart radius along the ray from the center at angle `theta` where the
    /// boundary is crossed.
    pub fn ray_boundary(&self, theta: f64) -> Result<f64> {
        let dir = Point::new(theta.cos(), theta.sin());
        let f = |r: f64| self.phi(&(self.center + dir * r));
        let marches = 512;
        let dr = self.reach / marches as f64;
        let mut prev = 0.0;
        for i in 1..=marches {
            let r = dr * i as f64;
            if f(r) >= 0.0 {
                let root = brent(prev, r, f, 1e-15).ok_or_else(|| {
                    Error::UnsupportedDomain(format!("ray search failed at angle {theta}"))
                })?;
                // star-shapedness: no re-entry further out
                let mut s = root;
                while s < (2.0 * root).min(self.reach) {
                    s += dr;
                    if f(s) < 0.0 {
                        return Err(Error::UnsupportedDomain(format!(
                            "domain is not star-shaped about its center (re-entry along angle {theta:.4})"
                        )));
                    }
                }
                return Ok(root);
            }
            prev = r;
        }
        Err(Error::UnsupportedDomain(format!(
            "no boundary within reach {} along angle {theta:.4}; the domain looks unbounded",
            self.reach
        )))
    }

    pub fn boundary_point(&self, theta: f64) -> Result<Point> {
        let r = self.ray_boundary(theta)?;
        Ok(self.center + Point::new(theta.cos(), theta.sin()) * r)
    }

    /// Samples the band `|φ| ≤ width` and returns the largest tangential
    /// Hessian value found, with its witness.
    fn band_margin(&self, boundary: &[Point], levels: &[f64]) -> Result<Vec<Witness>> {
        let per_point: Vec<Result<Vec<Witness>>> = boundary
            .par_iter()
            .map(|b| {
                levels
                    .iter()
                    .map(|&lv| {
                        let p = if lv == 0.0 { *b } else { self.normal_flow(b, lv, true)? };
                        let v = self.level_tangent(&p)?;
                        Ok(Witness {
                            point: p,
                            direction: v,
                            value: self.hessian_quadratic(&p, &v)?,
                        })
                    })
                    .collect()
            })
            .collect();
        let mut out = Vec::new();
        for r in per_point {
            out.extend(r?);
        }
        Ok(out)
    }

    pub fn boundary_samples(&self, count: usize) -> Result<Vec<Point>> {
        (0..count)
            .map(|i| self.boundary_point(std::f64::consts::TAU * i as f64 / count as f64))
            .collect()
    }

    /// Certify strong concavity: the tangential Hessian of `φ` must be
    /// negative on the boundary and on a band around it. The band width is
    /// maximized by bisection up to `max_band` (capped below 1).
    pub fn concavity_scan(&self, max_band: f64, opts: &ScanOptions) -> Result<ConcavityReport> {
        if !(max_band > 0.0) {
            return Err(Error::Contract("band width must be positive".into()));
        }
        let max_band = max_band.min(0.999);
        let boundary = self.boundary_samples(opts.boundary_samples)?;
        let unbanded = Self { band: None, ..self.clone() };
        let levels = |w: f64| -> Vec<f64> {
            let half = (opts.depths / 2).max(1);
            let mut lv = vec![0.0];
            for k in 1..=half {
                let d = w * k as f64 / half as f64;
                lv.push(-d);
                lv.push(d);
            }
            lv
        };
        let worst = |ws: &[Witness]| ws.iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
        let witnesses_of = |mut ws: Vec<Witness>| {
            ws.sort_by(|a, b| b.value.total_cmp(&a.value));
            ws.truncate(4);
            ws
        };

        let on_boundary = unbanded.band_margin(&boundary, &[0.0])?;
        let boundary_worst = worst(&on_boundary);
        if !(boundary_worst < 0.0) {
            return Ok(ConcavityReport {
                passed: false,
                delta0: 0.0,
                worst_margin: boundary_worst,
                witnesses: witnesses_of(on_boundary),
            });
        }
        let admissible = |w: f64| -> Option<Vec<Witness>> {
            let ws = unbanded.band_margin(&boundary, &levels(w)).ok()?;
            (worst(&ws) < 0.0).then_some(ws)
        };
        if let Some(ws) = admissible(max_band) {
            return Ok(ConcavityReport {
                passed: true,
                delta0: max_band,
                worst_margin: worst(&ws),
                witnesses: witnesses_of(ws),
            });
        }
        let (mut lo, mut hi) = (0.0, max_band);
        let mut best = on_boundary;
        for _ in 0..opts.bisections {
            let mid = 0.5 * (lo + hi);
            match admissible(mid) {
                Some(ws) => {
                    lo = mid;
                    best = ws;
                }
                None => hi = mid,
            }
        }
        if lo == 0.0 {
            // the boundary itself is concave but no band around it certifies
            return Ok(ConcavityReport {
                passed: false,
                delta0: 0.0,
                worst_margin: 0.0f64.max(worst(&best)),
                witnesses: witnesses_of(best),
            });
        }
        Ok(ConcavityReport {
            passed: true,
            delta0: lo,
            worst_margin: worst(&best),
            witnesses: witnesses_of(best),
        })
    }

    /// `K₀ = max ‖∇φ‖` over `{φ ≤ δ}`, sampled on a fixed polar grid about the
    /// center (so enlarging `δ` only adds samples).
    pub fn k0(&self, delta: f64) -> Result<f64> {
        let rays = 128;
        let radial = 64;
        let mut best: f64 = 0.0;
        for i in 0..rays {
            let theta = std::f64::consts::TAU * i as f64 / rays as f64;
            let dir = Point::new(theta.cos(), theta.sin());
            let rb = self.ray_boundary(theta)?;
            let b = self.center + dir * rb;
            best = best.max(self.grad_norm(&b)?);
            // grid out to twice the boundary radius, independent of delta
            for k in 1..=2 * radial {
                let p = self.center + dir * (rb * k as f64 / radial as f64);
                if !self.metric.in_chart(&p) || self.phi(&p) > delta {
                    continue;
                }
                if let Ok(n) = self.grad_norm(&p) {
                    if n.is_finite() {
                        best = best.max(n);
                    }
                }
            }
        }
        Ok(best)
    }

    pub fn constants(&self, delta0: f64) -> Result<DomainConstants> {
        let boundary = self.boundary_samples(256)?;
        let mut lo = boundary[0];
        let mut hi = boundary[0];
        for p in &boundary {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        Ok(DomainConstants {
            delta0,
            k0: self.k0(delta0)?,
            bounds_min: lo,
            bounds_max: hi,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use proptest::prelude::*;

    #[test]
    fn half_plane_hessian_vanishes() {
        let d = builtins::half_plane();
        let h = d.hessian_quadratic(&Point::new(0.0, 0.3), &Tangent::new(0.0, 2.0)).unwrap();
        assert!(h.abs() < 1e-7);
    }

    /// `φ(γ(s)) = √(1 + s²) - 1` has second derivative 1 at `s = 0`.
    #[test]
    fn unit_circle_hessian_is_one() {
        let d = builtins::flat_disk();
        let h = d.hessian_quadratic(&Point::new(1.0, 0.0), &Tangent::new(0.0, 1.0)).unwrap();
        assert!((h - 1.0).abs() < 1e-7, "{h}");
    }

    #[test]
    fn hessian_scales_quadratically() {
        let d = builtins::spherical_cap(2.0);
        let x = d.boundary_point(0.7).unwrap();
        let v = d.level_tangent(&x).unwrap();
        let h1 = d.hessian_quadratic(&x, &v).unwrap();
        let h3 = d.hessian_quadratic(&x, &(v * 3.0)).unwrap();
        assert!((h3 - 9.0 * h1).abs() <= 1e-8 * h3.abs());
    }

    #[test]
    fn cap_boundary_is_concave_with_cot_curvature() {
        let d = builtins::spherical_cap(2.0);
        let x = d.boundary_point(1.3).unwrap();
        let v = d.level_tangent(&x).unwrap();
        let h = d.hessian_quadratic(&x, &v).unwrap();
        assert!(h < 0.0);
        assert!((h - 2.0f64.tan().recip()).abs() < 1e-6, "{h}");
    }

    #[test]
    fn flat_disk_second_fundamental_form_is_positive_inward() {
        let d = builtins::flat_disk();
        let x = Point::new(1.0, 0.0);
        let n = -d.unit_normal(&x).unwrap();
        let ii = d.second_fundamental_form(&x, &Tangent::new(0.0, 1.0), &n).unwrap();
        assert!((ii.value - 1.0).abs() < 1e-8);
        assert!(!ii.projected);
    }

    #[test]
    fn half_plane_second_fundamental_form_vanishes() {
        let d = builtins::half_plane();
        let x = Point::new(0.0, -4.0);
        let ii = d
            .second_fundamental_form(&x, &Tangent::new(0.0, 1.0), &Tangent::new(-1.0, 0.0))
            .unwrap();
        assert!(ii.value.abs() < 1e-12);
    }

    #[test]
    fn cap_second_fundamental_form_is_negative_inward() {
        let d = builtins::spherical_cap(2.0);
        let x = d.boundary_point(2.0).unwrap();
        let v = d.level_tangent(&x).unwrap();
        let n = -d.unit_normal(&x).unwrap();
        assert!(d.second_fundamental_form(&x, &v, &n).unwrap().value < 0.0);
    }

    #[test]
    fn non_tangential_direction_is_projected() {
        let d = builtins::flat_disk();
        let x = Point::new(0.0, 1.0);
        let n = -d.unit_normal(&x).unwrap();
        let ii = d.second_fundamental_form(&x, &Tangent::new(1.0, 0.5), &n).unwrap();
        assert!(ii.projected);
        assert!((ii.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_disk_fails_the_scan_at_the_boundary() {
        let d = builtins::flat_disk();
        let r = d.concavity_scan(0.2, &ScanOptions::default()).unwrap();
        assert!(!r.passed);
        assert_eq!(r.delta0, 0.0);
        assert!(r.worst_margin > 0.0);
        assert!(d.phi(&r.witnesses[0].point).abs() < 1e-9);
    }

    #[test]
    fn cap_passes_the_scan() {
        let d = builtins::spherical_cap(2.0);
        let r = d.concavity_scan(0.25, &ScanOptions::default()).unwrap();
        assert!(r.passed);
        assert!(r.delta0 > 0.0);
        assert!(r.worst_margin < 0.0);
    }

    /// `cot` changes sign at `π/2`, so the band around `r₀ = 2` certifies up
    /// to `2 - π/2`.
    #[test]
    fn cap_band_is_limited_by_the_equator() {
        let d = builtins::spherical_cap(2.0);
        let r = d.concavity_scan(0.8, &ScanOptions::default()).unwrap();
        assert!(r.passed);
        let limit = 2.0 - std::f64::consts::FRAC_PI_2;
        assert!(r.delta0 <= limit && r.delta0 > limit - 1e-3, "{}", r.delta0);
    }

    #[test]
    fn unbounded_domain_is_rejected() {
        let d = builtins::half_plane();
        assert!(matches!(
            d.concavity_scan(0.1, &ScanOptions::default()),
            Err(Error::UnsupportedDomain(_))
        ));
    }

    #[test]
    fn half_plane_flow_is_a_translation() {
        let d = builtins::half_plane();
        let x = Point::new(-0.3, 5.0);
        assert_eq!(d.normal_flow(&x, 0.0, true).unwrap(), x);
        let y = d.normal_flow(&x, 0.2, true).unwrap();
        assert!((y - Point::new(-0.1, 5.0)).norm() < 1e-15);
        let p = d.boundary_projection(&x).unwrap();
        assert!((p - Point::new(0.0, 5.0)).norm() < 1e-15);
    }

    #[test]
    fn band_exit_reports_room() {
        let d = builtins::spherical_cap(2.0).with_band(0.1);
        let x = d.boundary_point(0.0).unwrap();
        match d.normal_flow(&x, 0.3, false) {
            Err(Error::BandExit { max_tau, .. }) => assert!((max_tau - 0.1).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deep_dip_on_cap_diameter() {
        let d = builtins::spherical_cap(2.0);
        let a = d.boundary_point(0.0).unwrap();
        let b = d.boundary_point(std::f64::consts::PI).unwrap();
        let pts: Vec<_> = (0..=64).map(|i| a + (b - a) * (i as f64 / 64.0)).collect();
        assert!(d.deep_dip_check(&pts, 0.4));
        let shallow: Vec<_> = (0..=16)
            .map(|i| d.boundary_point(0.1 * i as f64 / 16.0).unwrap())
            .collect();
        assert!(!d.deep_dip_check(&shallow, 0.4));
    }

    #[test]
    fn k0_is_monotone_in_the_band() {
        let d = builtins::flat_disk();
        let small = d.k0(0.05).unwrap();
        let large = d.k0(0.3).unwrap();
        assert!(large >= small);
        assert!((small - 1.0).abs() < 1e-9);
    }

    fn cap_band_point() -> impl Strategy<Value = (f64, f64)> {
        (0.0f64..std::f64::consts::TAU, -0.35f64..0.35)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn flows_shift_phi_linearly((theta, depth) in cap_band_point(), tau in 0.0f64..0.05, outward: bool) {
            let d = builtins::spherical_cap(2.0).with_band(0.42);
            let b = d.boundary_point(theta).unwrap();
            let x = d.normal_flow(&b, depth, true).unwrap();
            let sign = if outward { 1.0 } else { -1.0 };
            if (d.phi(&x) + sign * tau).abs() < 0.42 {
                let y = d.normal_flow(&x, tau, outward).unwrap();
                prop_assert!((d.phi(&y) - (d.phi(&x) + sign * tau)).abs() <= 1e-8 * (1.0 + tau));
            }
        }

        #[test]
        fn projection_is_idempotent((theta, depth) in cap_band_point()) {
            let d = builtins::spherical_cap(2.0);
            let b = d.boundary_point(theta).unwrap();
            let x = d.normal_flow(&b, depth, true).unwrap();
            let p = d.boundary_projection(&x).unwrap();
            prop_assert!(d.phi(&p).abs() <= 1e-8);
            prop_assert!((d.boundary_projection(&p).unwrap() - p).norm() <= 1e-8);
        }

        #[test]
        fn hessian_and_second_fundamental_form_cancel(theta in 0.0f64..std::f64::consts::TAU, scale in 0.2f64..3.0) {
            for d in [builtins::spherical_cap(2.0), builtins::flat_disk()] {
                let x = d.boundary_point(theta).unwrap();
                let v = d.level_tangent(&x).unwrap() * scale;
                let n = d.grad(&x).unwrap();
                let sum = d.second_fundamental_form(&x, &v, &n).unwrap().value + d.hessian_quadratic(&x, &v).unwrap();
                prop_assert!(sum.abs() <= 1e-6, "{}", sum);
            }
        }
    }
}
