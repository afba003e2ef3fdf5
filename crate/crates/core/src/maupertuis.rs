//! Natural Hamiltonians `H = ½ a^{ij}(q) p_i p_j + V(q)`, their Jacobi metric
//! at a fixed energy, and the reconstruction of brake orbits from
//! orthogonal chords.

mod orbit;

pub use orbit::{
    brake_orbit_verify, ogc_to_brake_orbit, orbit_image_distance, orbits_from_csv, orbits_to_csv, sensitivity_check,
    BrakeOrbit, OrbitCheck, OrbitOptions, OrbitSample, OrbitTolerances, Reconstruction, Sensitivity, ORBITS_CSV_HEADER,
};

use std::fmt;
use std::sync::Arc;

use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::domain::{LevelFn, SignedDistanceField};
use crate::error::{Error, Result};
use crate::geometry::{Mat2, MetricField, MetricFn, Point, Tangent};

pub trait Potential: Send + Sync {
    fn value(&self, q: &Point) -> f64;
    fn gradient(&self, q: &Point) -> Tangent;
    fn hessian(&self, q: &Point) -> Mat2;
}

/// The inverse kinetic matrix `a^{ij}(q)`.
pub trait Kinetic: Send + Sync {
    fn inverse(&self, q: &Point) -> Mat2;

    /// `[d/dq1 a^{ij}, d/dq2 a^{ij}]`.
    fn inverse_partials(&self, q: &Point) -> [Mat2; 2];
}

/// `V(q) = Σ c q₁^i q₂^j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialPotential {
    pub terms: Vec<Monomial>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub i: u32,
    pub j: u32,
}

fn pow(x: f64, k: i64) -> f64 {
    if k < 0 {
        0.0
    } else {
        x.powi(k as i32)
    }
}

impl PolynomialPotential {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Self { terms }
    }

    /// `λ₁² q₁² + λ₂² q₂²`.
    pub fn oscillator(l1: f64, l2: f64) -> Self {
        Self::new(vec![
            Monomial { coef: l1 * l1, i: 2, j: 0 },
            Monomial { coef: l2 * l2, i: 0, j: 2 },
        ])
    }

    pub fn with_term(mut self, coef: f64, i: u32, j: u32) -> Self {
        self.terms.push(Monomial { coef, i, j });
        self
    }
}

impl Potential for PolynomialPotential {
    fn value(&self, q: &Point) -> f64 {
        self.terms
            .iter()
            .map(|m| m.coef * pow(q.x, m.i as i64) * pow(q.y, m.j as i64))
            .sum()
    }

    fn gradient(&self, q: &Point) -> Tangent {
        let mut g = Tangent::zeros();
        for m in &self.terms {
            let (i, j) = (m.i as i64, m.j as i64);
            g.x += m.coef * i as f64 * pow(q.x, i - 1) * pow(q.y, j);
            g.y += m.coef * j as f64 * pow(q.x, i) * pow(q.y, j - 1);
        }
        g
    }

    fn hessian(&self, q: &Point) -> Mat2 {
        let mut h = Mat2::zeros();
        for m in &self.terms {
            let (i, j) = (m.i as i64, m.j as i64);
            let (fi, fj) = (i as f64, j as f64);
            h[(0, 0)] += m.coef * fi * (fi - 1.0) * pow(q.x, i - 2) * pow(q.y, j);
            h[(1, 1)] += m.coef * fj * (fj - 1.0) * pow(q.x, i) * pow(q.y, j - 2);
            let mixed = m.coef * fi * fj * pow(q.x, i - 1) * pow(q.y, j - 1);
            h[(0, 1)] += mixed;
            h[(1, 0)] += mixed;
        }
        h
    }
}

/// A position-independent kinetic matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantKinetic {
    pub inverse: Mat2,
}

impl ConstantKinetic {
    pub fn identity() -> Self {
        Self { inverse: Mat2::identity() }
    }
}

impl Kinetic for ConstantKinetic {
    fn inverse(&self, _q: &Point) -> Mat2 {
        self.inverse
    }
    fn inverse_partials(&self, _q: &Point) -> [Mat2; 2] {
        [Mat2::zeros(); 2]
    }
}

#[derive(Clone)]
pub struct HamiltonianSpec {
    pub kinetic: Arc<dyn Kinetic>,
    pub potential: Arc<dyn Potential>,
    pub energy: f64,
    /// Lower bound on the eigenvalues of `a^{ij}` at sampled points.
    pub ellipticity_floor: f64,
    /// A point of the hill region from which it is star-shaped; typically the
    /// minimum of `V`.
    pub center: Point,
}

impl fmt::Debug for HamiltonianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianSpec")
            .field("energy", &self.energy)
            .field("center", &self.center)
            .finish()
    }
}

impl HamiltonianSpec {
    pub fn new<K: Kinetic + 'static, P: Potential + 'static>(kinetic: K, potential: P, energy: f64) -> Self {
        Self {
            kinetic: Arc::new(kinetic),
            potential: Arc::new(potential),
            energy,
            ellipticity_floor: 1e-8,
            center: Point::zeros(),
        }
    }

    pub fn with_center(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    /// The kinetic matrix `a_{ij} = (a^{ij})⁻¹`.
    pub fn mass(&self, q: &Point) -> Result<Mat2> {
        self.kinetic
            .inverse(q)
            .try_inverse()
            .ok_or(Error::DegenerateMetric { at: *q })
    }

    pub fn hamiltonian(&self, q: &Point, p: &Tangent) -> f64 {
        0.5 * p.dot(&(self.kinetic.inverse(q) * p)) + self.potential.value(q)
    }

    /// Hamilton's vector field `(∂H/∂p, -∂H/∂q)`.
    pub fn vector_field(&self, q: &Point, p: &Tangent) -> (Tangent, Tangent) {
        let qdot = self.kinetic.inverse(q) * p;
        let da = self.kinetic.inverse_partials(q);
        let mut pdot = -self.potential.gradient(q);
        for k in 0..2 {
            pdot[k] -= 0.5 * p.dot(&(da[k] * p));
        }
        (qdot, pdot)
    }

    fn check_ellipticity(&self, q: &Point) -> Result<()> {
        let a = self.kinetic.inverse(q);
        let sym = (a + a.transpose()) * 0.5;
        let eig = sym.symmetric_eigenvalues();
        if eig.min() < self.ellipticity_floor || (a - a.transpose()).amax() > 1e-12 {
            return Err(Error::DegenerateMetric { at: *q });
        }
        Ok(())
    }
}

/// `g* = (E - V) g₀` with `g₀(v, v) = ½ a_{ij} v^i v^j`; singular on `{V = E}`.
#[derive(Clone, Debug)]
pub struct JacobiMetric {
    spec: HamiltonianSpec,
}

impl JacobiMetric {
    pub fn new(spec: HamiltonianSpec) -> Self {
        Self { spec }
    }
}

impl MetricFn for JacobiMetric {
    fn matrix(&self, q: &Point) -> Mat2 {
        let a = self.spec.mass(q).unwrap_or_else(|_| Mat2::zeros());
        a * (0.5 * (self.spec.energy - self.spec.potential.value(q)))
    }

    fn partials(&self, q: &Point) -> Option<[Mat2; 2]> {
        let a = self.spec.mass(q).ok()?;
        let dai = self.spec.kinetic.inverse_partials(q);
        let dv = self.spec.potential.gradient(q);
        let w = 0.5 * (self.spec.energy - self.spec.potential.value(q));
        let mut out = [Mat2::zeros(); 2];
        for k in 0..2 {
            // d(A⁻¹) = -A⁻¹ dA A⁻¹
            let da = -(a * dai[k] * a);
            out[k] = a * (-0.5 * dv[k]) + da * w;
        }
        Some(out)
    }

    fn in_chart(&self, q: &Point) -> bool {
        q.x.is_finite() && q.y.is_finite() && self.spec.potential.value(q) < self.spec.energy
    }
}

/// `φ = (V - ℓ) / √(‖dV‖²_ε + κ²)` with `ℓ = E - ε` and `‖dV‖²_ε = (2/ε) a^{ij} V_i V_j`,
/// the covector norm of `dV` in the Jacobi metric frozen at its value on
/// `{V = ℓ}`. Near that level set this is a first order signed distance;
/// `κ` keeps it regular where `dV` vanishes.
#[derive(Clone)]
pub struct RegularizedLevel {
    spec: HamiltonianSpec,
    level: f64,
    eps: f64,
    kappa: f64,
}

impl RegularizedLevel {
    fn parts(&self, q: &Point) -> (f64, f64) {
        let dv = self.spec.potential.gradient(q);
        let s = (2.0 / self.eps) * dv.dot(&(self.spec.kinetic.inverse(q) * dv));
        (self.spec.potential.value(q) - self.level, (s + self.kappa * self.kappa).sqrt())
    }
}

impl LevelFn for RegularizedLevel {
    fn value(&self, q: &Point) -> f64 {
        let (u, w) = self.parts(q);
        u / w
    }

    fn differential(&self, q: &Point) -> Option<Tangent> {
        let (u, w) = self.parts(q);
        let dv = self.spec.potential.gradient(q);
        let hv = self.spec.potential.hessian(q);
        let a = self.spec.kinetic.inverse(q);
        let da = self.spec.kinetic.inverse_partials(q);
        let mut ds = hv * (a * dv) * 2.0;
        for k in 0..2 {
            ds[k] += dv.dot(&(da[k] * dv));
        }
        ds *= 2.0 / self.eps;
        let dw = ds / (2.0 * w);
        Some(dv / w - dw * (u / (w * w)))
    }
}

/// Geometry of the shrunk hill region `{V < E - ε}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HillRegion {
    pub center: Point,
    pub center_value: f64,
    pub eps_reg: f64,
    pub level: f64,
    pub kappa: f64,
    /// Suggested upper bound for the concavity band.
    pub band_hint: f64,
}

#[derive(Clone, Debug)]
pub struct JacobiProblem {
    pub spec: HamiltonianSpec,
    pub metric: MetricField,
    pub domain: SignedDistanceField,
    pub hill: HillRegion,
}

fn brent(lo: f64, hi: f64, f: impl FnMut(f64) -> f64, eps: f64) -> Option<f64> {
    let mut conv = SimpleConvergency { eps, max_iter: 200 };
    find_root_brent(lo, hi, f, &mut conv).ok()
}

/// Radius along the ray from `center` at which `V` first reaches `level`.
fn level_ray(spec: &HamiltonianSpec, level: f64, theta: f64, reach: f64) -> Result<f64> {
    let dir = Point::new(theta.cos(), theta.sin());
    let f = |r: f64| spec.potential.value(&(spec.center + dir * r)) - level;
    let marches = 512;
    let dr = reach / marches as f64;
    let mut prev = 0.0;
    for i in 1..=marches {
        let r = dr * i as f64;
        if f(r) >= 0.0 {
            return brent(prev, r, f, 1e-15)
                .ok_or_else(|| Error::UnsupportedDomain(format!("level search failed at angle {theta}")));
        }
        prev = r;
    }
    Err(Error::UnsupportedDomain(format!(
        "hill region is unbounded along angle {theta:.4} (no level crossing within {reach})"
    )))
}

/// Default regularization `0.05 (E - V(center))`.
pub fn default_eps_reg(spec: &HamiltonianSpec) -> f64 {
    0.05 * (spec.energy - spec.potential.value(&spec.center))
}

/// Build the Jacobi metric and a regularized signed distance for the shrunk
/// hill region `{V < E - ε}`. `reach` bounds the chart radius searched for
/// the level set.
pub fn jacobi_setup(spec: &HamiltonianSpec, eps_reg: f64, reach: f64) -> Result<JacobiProblem> {
    let center_value = spec.potential.value(&spec.center);
    let depth = spec.energy - center_value;
    if !(eps_reg > 0.0 && eps_reg < depth) {
        return Err(Error::Contract(format!(
            "regularization must lie in ]0, {depth}[ (E - V at the center), got {eps_reg}"
        )));
    }
    spec.check_ellipticity(&spec.center)?;
    let level = spec.energy - eps_reg;
    let rays = 256;
    let mut min_norm = f64::INFINITY;
    let mut max_radius: f64 = 0.0;
    for i in 0..rays {
        let theta = std::f64::consts::TAU * i as f64 / rays as f64;
        let r = level_ray(spec, level, theta, reach)?;
        max_radius = max_radius.max(r);
        let b = spec.center + Point::new(theta.cos(), theta.sin()) * r;
        spec.check_ellipticity(&b)?;
        let dv = spec.potential.gradient(&b);
        let n2 = (2.0 / eps_reg) * dv.dot(&(spec.kinetic.inverse(&b) * dv));
        if n2 <= 0.0 {
            return Err(Error::DegenerateGradient { at: b });
        }
        min_norm = min_norm.min(n2.sqrt());
    }
    if max_radius == 0.0 {
        return Err(Error::UnsupportedDomain("empty shrunk hill region".into()));
    }
    let kappa = 0.5 * min_norm;
    let metric = MetricField::new(JacobiMetric::new(spec.clone()));
    let phi = RegularizedLevel {
        spec: spec.clone(),
        level,
        eps: eps_reg,
        kappa,
    };
    let domain = SignedDistanceField::new(metric.clone(), phi, spec.center, reach)?;
    // φ reaches roughly ε / max‖dV‖ on the singular level {V = E}; stay well inside
    let band_hint = 0.5 * eps_reg / (min_norm * 2.0).max(1e-12);
    Ok(JacobiProblem {
        spec: spec.clone(),
        metric,
        domain,
        hill: HillRegion {
            center: spec.center,
            center_value,
            eps_reg,
            level,
            kappa,
            band_hint: band_hint.min(0.5),
        },
    })
}

/// `H = ½|p|² + λ₁² q₁² + λ₂² q₂²` at energy `E`.
pub fn oscillator(l1: f64, l2: f64, energy: f64) -> HamiltonianSpec {
    HamiltonianSpec::new(ConstantKinetic::identity(), PolynomialPotential::oscillator(l1, l2), energy)
}

/// The oscillator with an extra quartic coupling `c q₁² q₂²`.
pub fn coupled_oscillator(l1: f64, l2: f64, coupling: f64, energy: f64) -> HamiltonianSpec {
    HamiltonianSpec::new(
        ConstantKinetic::identity(),
        PolynomialPotential::oscillator(l1, l2).with_term(coupling, 2, 2),
        energy,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::ScanOptions;
    use std::f64::consts::SQRT_2;

    #[test]
    fn jacobi_metric_at_the_origin() {
        let spec = HamiltonianSpec::new(
            ConstantKinetic::identity(),
            PolynomialPotential::new(vec![]),
            1.0,
        );
        let g = JacobiMetric::new(spec).matrix(&Point::zeros());
        assert!((g - Mat2::identity() * 0.5).amax() < 1e-15);
    }

    #[test]
    fn polynomial_derivatives_match_differences() {
        let v = PolynomialPotential::oscillator(1.0, SQRT_2).with_term(0.1, 2, 2).with_term(-0.3, 1, 3);
        let q = Point::new(0.3, -0.7);
        let h = 1e-5;
        for k in 0..2 {
            let mut e = Point::zeros();
            e[k] = h;
            let fd = (v.value(&(q + e)) - v.value(&(q - e))) / (2.0 * h);
            assert!((fd - v.gradient(&q)[k]).abs() < 1e-8);
            let fdg = (v.gradient(&(q + e)) - v.gradient(&(q - e))) / (2.0 * h);
            assert!((fdg - v.hessian(&q).column(k)).amax() < 1e-7);
        }
    }

    #[test]
    fn regularized_level_differential_is_consistent() {
        let p = jacobi_setup(&coupled_oscillator(1.0, SQRT_2, 0.1, 1.0), 0.05, 3.0).unwrap();
        let q = Point::new(0.6, 0.4);
        let h = 1e-6;
        let analytic = p.domain.differential(&q);
        for k in 0..2 {
            let mut e = Point::zeros();
            e[k] = h;
            let fd = (p.domain.phi(&(q + e)) - p.domain.phi(&(q - e))) / (2.0 * h);
            assert!((fd - analytic[k]).abs() < 1e-7);
        }
    }

    #[test]
    fn shrunk_boundary_is_the_ellipse() {
        let eps = 0.05;
        let p = jacobi_setup(&oscillator(1.0, SQRT_2, 1.0), eps, 3.0).unwrap();
        for i in 0..32 {
            let b = p.domain.boundary_point(0.2 * i as f64).unwrap();
            assert!((b.x * b.x + 2.0 * b.y * b.y - (1.0 - eps)).abs() < 1e-10);
        }
    }

    #[test]
    fn shrunk_hill_region_is_strongly_concave() {
        let p = jacobi_setup(&oscillator(1.0, SQRT_2, 1.0), 0.05, 3.0).unwrap();
        let r = p
            .domain
            .concavity_scan(p.hill.band_hint, &ScanOptions::default())
            .unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.delta0 > 0.0 && r.delta0 < 1.0);
    }

    #[test]
    fn bad_regularization_is_rejected() {
        let spec = oscillator(1.0, SQRT_2, 1.0);
        assert!(jacobi_setup(&spec, 0.0, 3.0).is_err());
        assert!(jacobi_setup(&spec, 1.5, 3.0).is_err());
    }

    #[test]
    fn unbounded_hill_region_is_rejected() {
        let spec = HamiltonianSpec::new(
            ConstantKinetic::identity(),
            PolynomialPotential::new(vec![Monomial { coef: 1.0, i: 2, j: 0 }]),
            1.0,
        );
        assert!(matches!(jacobi_setup(&spec, 0.05, 3.0), Err(Error::UnsupportedDomain(_))));
    }
}
