//! Riemannian primitives on a single global chart of the plane.
//!
//! A [`MetricField`] wraps a user supplied field of symmetric positive
//! definite 2x2 matrices. Its derivatives come either from an analytic
//! callback or from central differences; everything else (Christoffel
//! symbols, geodesics, two-point joins, discrete path energies) is built on
//! top of those two primitives.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector2<f64>;
pub type Tangent = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Default number of RK4 steps per unit of geodesic parameter.
pub const DEFAULT_STEPS: usize = 256;

/// Default relative step for central differences.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// A smooth field of symmetric bilinear forms on the chart.
pub trait MetricFn: Send + Sync {
    fn matrix(&self, q: &Point) -> Mat2;

    /// Partial derivatives `[d/dq1 g, d/dq2 g]`, when known in closed form.
    fn partials(&self, _q: &Point) -> Option<[Mat2; 2]> {
        None
    }

    /// Whether `q` lies in the working region where the metric is defined.
    fn in_chart(&self, q: &Point) -> bool {
        q.x.is_finite() && q.y.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    /// Use [`MetricFn::partials`]; falls back to central differences when the
    /// callback returns `None`.
    Analytic,
    CentralDifference { h: f64 },
}

#[derive(Clone)]
pub struct MetricField {
    inner: Arc<dyn MetricFn>,
    mode: DerivativeMode,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField").field("mode", &self.mode).finish()
    }
}

/// Christoffel symbols of the second kind, indexed `gamma[k][i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    /// `Γ^k_ij u^i v^j`.
    pub fn contract(&self, u: &Tangent, v: &Tangent) -> Tangent {
        let mut out = Tangent::zeros();
        for k in 0..2 {
            let mut s = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    s += self.gamma[k][i][j] * u[i] * v[j];
                }
            }
            out[k] = s;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    m = m.max((self.gamma[k][i][j] - other.gamma[k][i][j]).abs());
                }
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicSample {
    pub t: f64,
    pub q: Point,
    pub v: Tangent,
}

/// A sampled solution of the geodesic equation.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    pub samples: Vec<GeodesicSample>,
    pub metric: MetricField,
}

impl GeodesicSegment {
    pub fn start(&self) -> Point {
        self.samples[0].q
    }

    pub fn end(&self) -> Point {
        self.samples[self.samples.len() - 1].q
    }

    pub fn start_velocity(&self) -> Tangent {
        self.samples[0].v
    }

    pub fn end_velocity(&self) -> Tangent {
        self.samples[self.samples.len() - 1].v
    }

    pub fn t_end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    /// Riemannian length, from the (conserved) speed at the start.
    pub fn length(&self) -> f64 {
        let s = &self.samples[0];
        self.metric.norm(&s.q, &s.v) * (self.t_end() - s.t)
    }

    /// Largest relative drift of `g(v, v)` from its initial value.
    pub fn speed_drift(&self) -> f64 {
        let s0 = &self.samples[0];
        let e0 = self.metric.dot(&s0.q, &s0.v, &s0.v);
        if e0 == 0.0 {
            return 0.0;
        }
        self.samples
            .iter()
            .map(|s| (self.metric.dot(&s.q, &s.v, &s.v) - e0).abs() / e0)
            .fold(0.0, f64::max)
    }

    /// Position at parameter `t`, by cubic Hermite interpolation between
    /// samples (fourth order, consistent with the integrator).
    pub fn point_at(&self, t: f64) -> Point {
        let n = self.samples.len();
        if n == 1 || t <= self.samples[0].t {
            return self.samples[0].q;
        }
        if t >= self.samples[n - 1].t {
            return self.samples[n - 1].q;
        }
        let idx = self
            .samples
            .partition_point(|s| s.t <= t)
            .saturating_sub(1)
            .min(n - 2);
        let a = &self.samples[idx];
        let b = &self.samples[idx + 1];
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let h00 = 2.0 * u.powi(3) - 3.0 * u.powi(2) + 1.0;
        let h10 = u.powi(3) - 2.0 * u.powi(2) + u;
        let h01 = -2.0 * u.powi(3) + 3.0 * u.powi(2);
        let h11 = u.powi(3) - u.powi(2);
        a.q * h00 + a.v * (h10 * h) + b.q * h01 + b.v * (h11 * h)
    }

    pub fn points(&self) -> Vec<Point> {
        self.samples.iter().map(|s| s.q).collect()
    }
}

/// Options for the two-point shooting solver behind [`MetricField::exp_join`].
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct JoinOptions {
    pub steps: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Injectivity-radius estimate: joins between points whose approximate
    /// Riemannian distance exceeds this are refused.
    pub max_distance: f64,
}

impl Default for JoinOptions {
    fn default() -> Self {
        Self {
            steps: DEFAULT_STEPS,
            tol: 1e-10,
            max_iter: 50,
            max_distance: f64::INFINITY,
        }
    }
}

impl MetricField {
    pub fn new<F: MetricFn + 'static>(f: F) -> Self {
        Self {
            inner: Arc::new(f),
            mode: DerivativeMode::Analytic,
        }
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mode(&self) -> DerivativeMode {
        self.mode
    }

    #[inline]
    pub fn matrix(&self, q: &Point) -> Mat2 {
        self.inner.matrix(q)
    }

    #[inline]
    pub fn in_chart(&self, q: &Point) -> bool {
        self.inner.in_chart(q)
    }

    /// Metric matrix at `q`, checked for chart membership and positive
    /// definiteness.
    pub fn eval(&self, q: &Point) -> Result<Mat2> {
        if !self.in_chart(q) {
            return Err(Error::DegenerateMetric { at: *q });
        }
        let g = self.matrix(q);
        let det = g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)];
        if !(g[(0, 0)] > 0.0 && det > 0.0) || !det.is_finite() {
            return Err(Error::DegenerateMetric { at: *q });
        }
        Ok(g)
    }

    #[inline]
    pub fn dot(&self, q: &Point, u: &Tangent, v: &Tangent) -> f64 {
        u.dot(&(self.matrix(q) * v))
    }

    #[inline]
    pub fn norm(&self, q: &Point, v: &Tangent) -> f64 {
        self.dot(q, v, v).max(0.0).sqrt()
    }

    /// Raise an index: the vector `g^{-1} w` dual to the covector `w`.
    pub fn raise(&self, q: &Point, w: &Tangent) -> Result<Tangent> {
        let g = self.eval(q)?;
        g.try_inverse()
            .map(|gi| gi * w)
            .ok_or(Error::DegenerateMetric { at: *q })
    }

    /// `[d/dq1 g, d/dq2 g]` according to the configured derivative mode.
    pub fn partials(&self, q: &Point) -> [Mat2; 2] {
        match self.mode {
            DerivativeMode::Analytic => match self.inner.partials(q) {
                Some(p) => p,
                None => self.fd_partials(q, DEFAULT_FD_STEP * q.norm().max(1.0)),
            },
            DerivativeMode::CentralDifference { h } => self.fd_partials(q, h),
        }
    }

    fn fd_partials(&self, q: &Point, h: f64) -> [Mat2; 2] {
        let mut out = [Mat2::zeros(); 2];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut e = Point::zeros();
            e[k] = h;
            *slot = (self.matrix(&(q + e)) - self.matrix(&(q - e))) / (2.0 * h);
        }
        out
    }

    pub fn christoffel(&self, q: &Point) -> Result<Christoffel> {
        let g = self.eval(q)?;
        let gi = g.try_inverse().ok_or(Error::DegenerateMetric { at: *q })?;
        let dg = self.partials(q);
        // first kind: [ij, l] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
        let mut first = [[[0.0; 2]; 2]; 2];
        for (i, row) in first.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                for (l, c) in cell.iter_mut().enumerate() {
                    *c = 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]);
                }
            }
        }
        let mut gamma = [[[0.0; 2]; 2]; 2];
        for (k, gk) in gamma.iter_mut().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    gk[i][j] = (0..2).map(|l| gi[(k, l)] * first[i][j][l]).sum();
                }
            }
        }
        Ok(Christoffel { gamma })
    }

    /// Right-hand side of the geodesic equation, `-Γ(v, v)`.
    pub fn geodesic_acceleration(&self, q: &Point, v: &Tangent) -> Result<Tangent> {
        Ok(-self.christoffel(q)?.contract(v, v))
    }

    fn rhs(&self, q: &Point, v: &Tangent) -> Result<(Tangent, Tangent)> {
        if !self.in_chart(q) {
            return Err(Error::ChartExit { last: *q });
        }
        Ok((*v, self.geodesic_acceleration(q, v)?))
    }

    /// One classical RK4 step of the first order system `(q, v)`.
    pub fn rk4_step(&self, q: &Point, v: &Tangent, h: f64) -> Result<(Point, Tangent)> {
        let (k1q, k1v) = self.rhs(q, v)?;
        let (k2q, k2v) = self.rhs(&(q + k1q * (h / 2.0)), &(v + k1v * (h / 2.0)))?;
        let (k3q, k3v) = self.rhs(&(q + k2q * (h / 2.0)), &(v + k2v * (h / 2.0)))?;
        let (k4q, k4v) = self.rhs(&(q + k3q * h), &(v + k3v * h))?;
        let qn = q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0);
        let vn = v + (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        if !self.in_chart(&qn) {
            return Err(Error::ChartExit { last: *q });
        }
        Ok((qn, vn))
    }

    fn integrate(&self, q: &Point, v: &Tangent, t_end: f64, steps: usize) -> Result<GeodesicSegment> {
        self.eval(q)?;
        let h = t_end / steps as f64;
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(GeodesicSample { t: 0.0, q: *q, v: *v });
        let (mut qc, mut vc) = (*q, *v);
        for i in 1..=steps {
            let (qn, vn) = self.rk4_step(&qc, &vc, h).map_err(|e| match e {
                Error::ChartExit { .. } | Error::DegenerateMetric { .. } => Error::ChartExit { last: qc },
                other => other,
            })?;
            qc = qn;
            vc = vn;
            samples.push(GeodesicSample { t: h * i as f64, q: qc, v: vc });
        }
        Ok(GeodesicSegment {
            samples,
            metric: self.clone(),
        })
    }

    /// Integrate the geodesic through `(q, v)` on `[0, t_end]` with `steps`
    /// RK4 steps.
    pub fn geodesic_shoot(&self, q: &Point, v: &Tangent, t_end: f64, steps: usize) -> Result<GeodesicSegment> {
        if v.norm() == 0.0 {
            return Err(Error::Contract("geodesic_shoot needs a nonzero initial velocity".into()));
        }
        if steps < 16 {
            return Err(Error::Contract(format!("geodesic_shoot needs at least 16 steps, got {steps}")));
        }
        self.integrate(q, v, t_end, steps)
    }

    fn exp_endpoint(&self, p: &Point, v: &Tangent, steps: usize) -> Result<Point> {
        let h = 1.0 / steps as f64;
        let (mut q, mut w) = (*p, *v);
        for _ in 0..steps {
            let (qn, wn) = self.rk4_step(&q, &w, h)?;
            q = qn;
            w = wn;
        }
        Ok(q)
    }

    /// Minimal geodesic from `p` to `q` on the parameter interval `[0, 1]`,
    /// found by Newton iteration on the initial velocity.
    pub fn exp_join(&self, p: &Point, q: &Point) -> Result<GeodesicSegment> {
        self.exp_join_with(p, q, None, &JoinOptions::default())
    }

    pub fn exp_join_with(
        &self,
        p: &Point,
        q: &Point,
        guess: Option<Tangent>,
        opts: &JoinOptions,
    ) -> Result<GeodesicSegment> {
        let diff = q - p;
        if diff.norm() == 0.0 {
            self.eval(p)?;
            let samples = (0..=opts.steps)
                .map(|i| GeodesicSample {
                    t: i as f64 / opts.steps as f64,
                    q: *p,
                    v: Tangent::zeros(),
                })
                .collect();
            return Ok(GeodesicSegment {
                samples,
                metric: self.clone(),
            });
        }
        let mid = p + diff * 0.5;
        let approx = self.norm(&mid, &diff);
        if approx > opts.max_distance {
            return Err(Error::JoinFailure {
                iterations: 0,
                mismatch: approx,
            });
        }
        let mut v = guess.unwrap_or(diff);
        let mut miss = self.exp_endpoint(p, &v, opts.steps).map(|e| e - q);
        if miss.is_err() {
            v = diff;
            miss = self.exp_endpoint(p, &v, opts.steps).map(|e| e - q);
        }
        let mut miss = miss?;
        let scale = diff.norm().max(1e-300);
        for it in 0..opts.max_iter {
            if miss.norm() <= opts.tol {
                return self.integrate(p, &v, 1.0, opts.steps);
            }
            let mut jac = Mat2::zeros();
            let hv = 1e-7 * v.norm().max(scale);
            for k in 0..2 {
                let mut e = Tangent::zeros();
                e[k] = hv;
                let fp = self.exp_endpoint(p, &(v + e), opts.steps)?;
                let fm = self.exp_endpoint(p, &(v - e), opts.steps)?;
                let col = (fp - fm) / (2.0 * hv);
                jac.set_column(k, &col);
            }
            let step = jac.try_inverse().map(|ji| ji * miss).ok_or(Error::JoinFailure {
                iterations: it,
                mismatch: miss.norm(),
            })?;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..12 {
                let cand = v - step * lambda;
                if let Ok(end) = self.exp_endpoint(p, &cand, opts.steps) {
                    let m = end - q;
                    if m.norm() < miss.norm() {
                        v = cand;
                        miss = m;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return Err(Error::JoinFailure {
                    iterations: it,
                    mismatch: miss.norm(),
                });
            }
        }
        if miss.norm() <= opts.tol {
            return self.integrate(p, &v, 1.0, opts.steps);
        }
        Err(Error::JoinFailure {
            iterations: opts.max_iter,
            mismatch: miss.norm(),
        })
    }
}

/// A curve sampled at `N + 1` uniform parameters `s_i = i / N` of `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    nodes: Vec<Point>,
}

pub const MIN_SEGMENTS: usize = 8;

impl DiscretePath {
    pub fn new(nodes: Vec<Point>) -> Result<Self> {
        if nodes.len() < MIN_SEGMENTS + 1 {
            return Err(Error::Shape(format!(
                "a discrete path needs at least {} nodes, got {}",
                MIN_SEGMENTS + 1,
                nodes.len()
            )));
        }
        if nodes.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Shape("non-finite node".into()));
        }
        Ok(Self { nodes })
    }

    pub fn from_fn(segments: usize, f: impl Fn(f64) -> Point) -> Result<Self> {
        Self::new((0..=segments).map(|i| f(i as f64 / segments as f64)).collect())
    }

    pub fn constant(p: Point, segments: usize) -> Result<Self> {
        Self::new(vec![p; segments + 1])
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn nodes_mut(&mut self) -> &mut [Point] {
        &mut self.nodes
    }

    pub fn into_nodes(self) -> Vec<Point> {
        self.nodes
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn param(&self, i: usize) -> f64 {
        i as f64 / self.segments() as f64
    }

    pub fn first(&self) -> Point {
        self.nodes[0]
    }

    pub fn last(&self) -> Point {
        self.nodes[self.nodes.len() - 1]
    }

    /// Node index closest to the parameter `s` (ties round away from zero).
    pub fn snap(&self, s: f64) -> usize {
        ((s.clamp(0.0, 1.0) * self.segments() as f64).round() as usize).min(self.segments())
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Self { nodes }
    }

    /// Affine reparameterization of the nodes `ia..=ib` onto `[0, 1]`.
    pub fn restrict(&self, ia: usize, ib: usize) -> Result<Self> {
        if ib <= ia || ib > self.segments() {
            return Err(Error::EmptyInterval {
                a: self.param(ia),
                b: self.param(ib.min(self.segments())),
            });
        }
        Ok(Self {
            nodes: self.nodes[ia..=ib].to_vec(),
        })
    }

    /// Velocities: central differences inside, second order one-sided at the
    /// ends.
    pub fn velocities(&self) -> Vec<Tangent> {
        let n = self.segments();
        let inv = n as f64;
        let x = &self.nodes;
        (0..=n)
            .map(|i| {
                if i == 0 {
                    (x[1] * 4.0 - x[0] * 3.0 - x[2]) * (0.5 * inv)
                } else if i == n {
                    (x[n] * 3.0 - x[n - 1] * 4.0 + x[n - 2]) * (0.5 * inv)
                } else {
                    (x[i + 1] - x[i - 1]) * (0.5 * inv)
                }
            })
            .collect()
    }

    /// The H^1 norm `((|x(a)|^2 + ∫|x'|^2) / 2)^{1/2}` over nodes `ia..=ib`.
    pub fn h1_norm(&self, ia: usize, ib: usize) -> f64 {
        let n = self.segments() as f64;
        let kinetic: f64 = (ia..ib).map(|i| (self.nodes[i + 1] - self.nodes[i]).norm_squared() * n).sum();
        ((self.nodes[ia].norm_squared() + kinetic) / 2.0).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.nodes.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Largest node-to-node distance between two paths with equal node count.
    pub fn max_distance(&self, other: &Self) -> Result<f64> {
        if self.nodes.len() != other.nodes.len() {
            return Err(Error::Shape(format!(
                "paths have {} and {} nodes",
                self.nodes.len(),
                other.nodes.len()
            )));
        }
        Ok(self
            .nodes
            .iter()
            .zip(&other.nodes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn is_constant(&self, tol: f64) -> bool {
        let p0 = self.nodes[0];
        self.nodes.iter().all(|p| (p - p0).norm() <= tol)
    }
}

/// H^1 norm of the node-wise difference of two paths with equal node counts.
pub fn h1_distance(x: &DiscretePath, y: &DiscretePath) -> f64 {
    if x.nodes().len() != y.nodes().len() {
        return f64::INFINITY;
    }
    let diff: Vec<Point> = x.nodes().iter().zip(y.nodes()).map(|(a, b)| a - b).collect();
    let n = x.segments();
    DiscretePath { nodes: diff }.h1_norm(0, n)
}

/// `∑ g(m_i)(Δ_i, Δ_i)` over segments `ia..ib`, with `m_i` the segment midpoint.
pub(crate) fn segment_action(metric: &MetricField, nodes: &[Point], ia: usize, ib: usize) -> f64 {
    (ia..ib)
        .map(|i| {
            let d = nodes[i + 1] - nodes[i];
            let m = (nodes[i + 1] + nodes[i]) * 0.5;
            metric.dot(&m, &d, &d)
        })
        .sum()
}

/// Node range `(ia, ib)` of a parameter interval after snapping to the grid.
pub fn snap_interval(x: &DiscretePath, a: f64, b: f64) -> Result<(usize, usize)> {
    if b <= a {
        return Err(Error::EmptyInterval { a, b });
    }
    let (ia, ib) = (x.snap(a), x.snap(b));
    if ib <= ia {
        return Err(Error::EmptyInterval { a, b });
    }
    Ok((ia, ib))
}

/// Normalized energy `(b - a)/2 ∫_a^b g(x', x')` by midpoint quadrature.
///
/// `a` and `b` are snapped to the nearest grid node. The value equals
/// `1/2 ∫_0^1 g` of the affine reparameterization of `x|[a,b]` onto `[0, 1]`.
pub fn path_energy(metric: &MetricField, x: &DiscretePath, a: f64, b: f64) -> Result<f64> {
    let (ia, ib) = snap_interval(x, a, b)?;
    Ok(energy_nodes(metric, x, ia, ib))
}

/// Normalized energy on the node range `ia..=ib`.
pub fn energy_nodes(metric: &MetricField, x: &DiscretePath, ia: usize, ib: usize) -> f64 {
    let span = (ib - ia) as f64;
    0.5 * span * segment_action(metric, x.nodes(), ia, ib)
}

/// Unnormalized action `∫_a^b g(x', x')` on the node range `ia..=ib`.
pub fn action_nodes(metric: &MetricField, x: &DiscretePath, ia: usize, ib: usize) -> f64 {
    x.segments() as f64 * segment_action(metric, x.nodes(), ia, ib)
}

/// Gradient of [`energy_nodes`] with respect to every node; entries outside
/// `ia..=ib` are zero.
pub fn energy_gradient(metric: &MetricField, x: &DiscretePath, ia: usize, ib: usize) -> Vec<Tangent> {
    let nodes = x.nodes();
    let mut grad = vec![Tangent::zeros(); nodes.len()];
    let span = (ib - ia) as f64;
    for i in ia..ib {
        let d = nodes[i + 1] - nodes[i];
        let m = (nodes[i + 1] + nodes[i]) * 0.5;
        let g = metric.matrix(&m);
        let dg = metric.partials(&m);
        let gd = g * d;
        let mut cov = Tangent::zeros();
        for k in 0..2 {
            cov[k] = d.dot(&(dg[k] * d));
        }
        // d/dx_{i+1} and d/dx_i of 1/2 span g(m)(d, d)
        grad[i + 1] += (gd * 2.0 + cov * 0.5) * (0.5 * span);
        grad[i] += (-gd * 2.0 + cov * 0.5) * (0.5 * span);
    }
    grad
}

/// Discrete first variation `∫_a^b g(x', D V/dt)` along `x`.
///
/// Velocities, variations and Christoffel symbols are evaluated at segment
/// midpoints; the integral uses the midpoint rule.
pub fn first_variation(metric: &MetricField, x: &DiscretePath, field: &[Tangent], a: f64, b: f64) -> Result<f64> {
    if field.len() != x.nodes().len() {
        return Err(Error::Shape(format!(
            "variation has {} samples, path has {} nodes",
            field.len(),
            x.nodes().len()
        )));
    }
    let (ia, ib) = snap_interval(x, a, b)?;
    let n = x.segments() as f64;
    let nodes = x.nodes();
    let mut total = 0.0;
    for i in ia..ib {
        let m = (nodes[i + 1] + nodes[i]) * 0.5;
        let xd = (nodes[i + 1] - nodes[i]) * n;
        let vd = (field[i + 1] - field[i]) * n;
        let vm = (field[i + 1] + field[i]) * 0.5;
        let cov = vd + metric.christoffel(&m)?.contract(&xd, &vm);
        total += metric.dot(&m, &xd, &cov) / n;
    }
    Ok(total)
}
