//! The discrete shortening flow. Each iteration applies up to three moves:
//! an inward push on non-essential intervals, a constant-speed
//! reparameterization, and a damped Newton outward descent step. Every move
//! is accepted only if no maximal interval gains energy, so the functional
//! `ℱ` is non-increasing along a run.

mod minimax;
mod shooting;

pub use minimax::{multistart_minimax, LoopKind, LoopSummary, MinimaxReport, RunSummary};
pub use shooting::{find_ogcs_by_shooting, polish_ogc, shoot_normal, NormalShot, ShootOptions};

use serde::{Deserialize, Serialize};

use crate::chords::{maximal_intervals, pathspace_membership, IntervalSet, NodeInterval};
use crate::critical::{
    classify_portion, proximity_and_closeness, CriticalClassification, OgcRecord, ToleranceSet,
};
use crate::domain::{DomainConstants, SignedDistanceField, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::geometry::{energy_gradient, energy_nodes, DiscretePath, JoinOptions, Mat2, Point, Tangent};

/// Slack allowed when comparing interval energies before and after a move.
const ENERGY_SLACK: f64 = 1e-12;
const MAX_HALVINGS: usize = 20;
const DAMPING_START: f64 = 1e-3;
const DAMPING_MAX: f64 = 1e3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Initial step of the outward move, as a fraction of the damped Newton
    /// step.
    pub step: f64,
    pub max_iter: usize,
    /// Convergence threshold on the sup-norm of the projected gradient.
    pub grad_tol: f64,
    /// Relative spread of segment speeds above which the reparameterization
    /// move runs.
    pub reparam_threshold: f64,
    pub n_theta: usize,
    pub nodes: usize,
    /// Depends on the certified band, so it is not part of the serialized
    /// settings; scenario files carry it separately.
    #[serde(skip, default = "default_tolerances")]
    pub tol: ToleranceSet,
    pub shoot: ShootOptions,
}

fn default_tolerances() -> ToleranceSet {
    ToleranceSet::for_band(0.1)
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            max_iter: 200,
            grad_tol: 1e-8,
            reparam_threshold: 1e-3,
            n_theta: 32,
            nodes: 256,
            tol: default_tolerances(),
            shoot: ShootOptions::default(),
        }
    }
}

impl FlowConfig {
    /// Defaults with tolerances derived from a certified band.
    pub fn for_band(delta0: f64) -> Self {
        Self {
            tol: ToleranceSet::for_band(delta0),
            ..Self::default()
        }
    }

    pub fn validate(&self, delta0: f64) -> Result<()> {
        if !(self.step > 0.0 && self.grad_tol > 0.0 && self.reparam_threshold > 0.0)
            || self.max_iter == 0
            || self.n_theta < 4
            || self.nodes < 64
        {
            return Err(Error::Config(
                "flow needs positive step and thresholds, n_theta >= 4 and at least 64 nodes".into(),
            ));
        }
        self.tol.validate(delta0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Converged,
    MaxIterations,
    Stagnated,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowResult {
    pub path: DiscretePath,
    pub status: FlowStatus,
    pub iterations: usize,
    /// `ℱ` before the first and after every iteration.
    pub energy_trace: Vec<f64>,
    pub grad_norm: f64,
    pub classifications: Vec<CriticalClassification>,
    /// Every iterate stayed in the path space and met the length and depth
    /// bounds.
    pub membership_ok: bool,
    /// Inward moves that were reverted because smoothing raised the energy.
    pub frozen: usize,
}

impl FlowResult {
    pub fn final_energy(&self) -> f64 {
        *self.energy_trace.last().unwrap_or(&0.0)
    }

    /// Largest single-iteration increase of `ℱ` (non-positive for a monotone run).
    pub fn max_increase(&self) -> f64 {
        self.energy_trace
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Maximal intervals of a path with their normalized energies.
#[derive(Clone, Debug)]
struct Snapshot {
    set: IntervalSet,
    energies: Vec<f64>,
}

impl Snapshot {
    fn of(domain: &SignedDistanceField, x: &DiscretePath) -> Result<Self> {
        let set = maximal_intervals(domain, x)?;
        let energies = set
            .iter()
            .map(|iv| energy_nodes(domain.metric(), x, iv.ia, iv.ib))
            .collect();
        Ok(Self { set, energies })
    }

    fn functional(&self) -> f64 {
        self.energies.iter().copied().fold(0.0, f64::max)
    }

    /// No interval of `next` carries more energy than the intervals of `self`
    /// it meets.
    fn dominates(&self, next: &Snapshot) -> bool {
        next.set.iter().zip(&next.energies).all(|(iv, &e)| {
            let bound = self
                .set
                .iter()
                .zip(&self.energies)
                .filter(|(old, _)| old.intersects(iv))
                .map(|(_, &e)| e)
                .fold(f64::NEG_INFINITY, f64::max);
            e <= bound + ENERGY_SLACK
        })
    }
}

/// `ℱ`: the largest normalized interval energy over a family of paths.
pub fn functional_f(domain: &SignedDistanceField, paths: &[DiscretePath]) -> Result<f64> {
    paths
        .iter()
        .map(|x| Ok(Snapshot::of(domain, x)?.functional()))
        .try_fold(0.0, |acc, v: Result<f64>| Ok(f64::max(acc, v?)))
}

/// Removes the component of `v` along `dφ` (Euclidean), keeping the level.
fn tangential(domain: &SignedDistanceField, q: &Point, v: &Tangent) -> Tangent {
    let d = domain.differential(q);
    let n2 = d.norm_squared();
    if n2 == 0.0 {
        return *v;
    }
    v - d * (d.dot(v) / n2)
}

/// Block-tridiagonal Hessian of the normalized energy on `iv`: diagonal
/// blocks and the blocks coupling node `k` to node `k + 1`. Built from
/// central differences of the analytic gradient, perturbing every third node
/// at once.
fn hessian_blocks(domain: &SignedDistanceField, x: &DiscretePath, iv: NodeInterval) -> (Vec<Mat2>, Vec<Mat2>) {
    let metric = domain.metric();
    let m = iv.ib - iv.ia + 1;
    let mut diag = vec![Mat2::zeros(); m];
    let mut upper = vec![Mat2::zeros(); m - 1];
    let scale = x.nodes()[iv.ia..=iv.ib].iter().map(|q| q.amax()).fold(1.0, f64::max);
    let h = 1e-5 * scale;
    for color in 0..3 {
        for d in 0..2 {
            let shifted = |sign: f64| {
                let mut y = x.clone();
                for k in (iv.ia..=iv.ib).filter(|k| (k - iv.ia) % 3 == color) {
                    y.nodes_mut()[k][d] += sign * h;
                }
                energy_gradient(metric, &y, iv.ia, iv.ib)
            };
            let (gp, gm) = (shifted(1.0), shifted(-1.0));
            for j in 0..m {
                let col = (gp[iv.ia + j] - gm[iv.ia + j]) / (2.0 * h);
                // the one perturbed node among j - 1, j, j + 1
                if j % 3 == color {
                    diag[j].set_column(d, &col);
                } else if j + 1 < m && (j + 1) % 3 == color {
                    upper[j].set_column(d, &col);
                }
            }
        }
    }
    for b in &mut diag {
        *b = (*b + b.transpose()) * 0.5;
    }
    (diag, upper)
}

/// Solves the symmetric block-tridiagonal system by block elimination.
/// Returns `None` unless every pivot is positive definite.
fn solve_blocks(diag: &[Mat2], upper: &[Mat2], rhs: &[Tangent]) -> Option<Vec<Tangent>> {
    let m = diag.len();
    let mut pivots: Vec<Mat2> = Vec::with_capacity(m);
    let mut inverses: Vec<Mat2> = Vec::with_capacity(m);
    let mut y: Vec<Tangent> = Vec::with_capacity(m);
    for i in 0..m {
        let (s, r) = if i == 0 {
            (diag[0], rhs[0])
        } else {
            let factor = upper[i - 1].transpose() * inverses[i - 1];
            (diag[i] - factor * upper[i - 1], rhs[i] - factor * y[i - 1])
        };
        let s = (s + s.transpose()) * 0.5;
        if !(s[(0, 0)] > 0.0 && s.determinant() > 0.0) {
            return None;
        }
        inverses.push(s.try_inverse()?);
        pivots.push(s);
        y.push(r);
    }
    let mut u = vec![Tangent::zeros(); m];
    u[m - 1] = inverses[m - 1] * y[m - 1];
    for i in (0..m - 1).rev() {
        u[i] = inverses[i] * (y[i] - upper[i] * u[i + 1]);
    }
    Some(u)
}

/// Gradient with the end-point rows projected onto the boundary and the
/// boundary-touching interior rows restricted to the outward cone.
fn projected_gradient(domain: &SignedDistanceField, x: &DiscretePath, set: &IntervalSet) -> Vec<Tangent> {
    let mut out = vec![Tangent::zeros(); x.nodes().len()];
    for iv in set.iter() {
        let g = energy_gradient(domain.metric(), x, iv.ia, iv.ib);
        for k in iv.ia..=iv.ib {
            out[k] = g[k];
        }
        for k in [iv.ia, iv.ib] {
            out[k] = tangential(domain, &x.nodes()[k], &g[k]);
        }
    }
    out
}

/// Sup-norm of the projected energy gradient over all maximal intervals.
pub fn projected_gradient_norm(domain: &SignedDistanceField, x: &DiscretePath) -> Result<f64> {
    let set = maximal_intervals(domain, x)?;
    Ok(projected_gradient(domain, x, &set)
        .iter()
        .map(|v| v.amax())
        .fold(0.0, f64::max))
}

/// Outcome of one outward move.
#[derive(Clone, Debug)]
pub struct OutwardStep {
    pub path: DiscretePath,
    /// Step actually taken (0 when the gradient already vanishes).
    pub step: f64,
    pub grad_norm: f64,
}

/// Type A: one damped Newton descent step on every maximal interval, with
/// end points kept on the boundary and boundary-touching samples never
/// moving inward.
pub fn step_outward(domain: &SignedDistanceField, x: &DiscretePath, cfg: &FlowConfig) -> Result<OutwardStep> {
    step_outward_from(domain, x, cfg, cfg.step)
}

fn step_outward_from(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    cfg: &FlowConfig,
    initial: f64,
) -> Result<OutwardStep> {
    let before = Snapshot::of(domain, x)?;
    let grad = projected_gradient(domain, x, &before.set);
    let grad_norm = grad.iter().map(|v| v.amax()).fold(0.0, f64::max);
    if grad_norm < cfg.grad_tol {
        return Ok(OutwardStep {
            path: x.clone(),
            step: 0.0,
            grad_norm,
        });
    }
    let metric = domain.metric();
    let nodes = x.nodes();
    let phi: Vec<f64> = nodes.iter().map(|q| domain.phi(q)).collect();
    let ends: Vec<usize> = before.set.iter().flat_map(|iv| [iv.ia, iv.ib]).collect();
    let band = domain.band();
    let hessians: Vec<(Vec<Mat2>, Vec<Mat2>)> = before.set.iter().map(|iv| hessian_blocks(domain, x, *iv)).collect();
    // damped Newton: raise the damping until the system is positive
    // definite and the step is accepted
    let mut damping = DAMPING_START;
    while damping <= DAMPING_MAX {
        let mut dir = vec![Tangent::zeros(); nodes.len()];
        let mut solved = true;
        for (iv, (diag, upper)) in before.set.iter().zip(&hessians) {
            let span = (iv.ib - iv.ia) as f64;
            let mut diag = diag.clone();
            for (k, b) in diag.iter_mut().enumerate() {
                let q = &nodes[iv.ia + k];
                *b += metric.matrix(q) * (damping * span);
                if k == 0 || iv.ia + k == iv.ib {
                    // pin the end points to the boundary to first order
                    let d = domain.differential(q);
                    let n = d / d.norm();
                    *b += n * n.transpose() * (1e6 * (b.trace() + 1.0));
                }
            }
            let rhs: Vec<Tangent> = grad[iv.ia..=iv.ib].iter().map(|g| -g).collect();
            match solve_blocks(&diag, upper, &rhs) {
                Some(u) => dir[iv.ia..=iv.ib].copy_from_slice(&u),
                None => {
                    solved = false;
                    break;
                }
            }
            for k in [iv.ia, iv.ib] {
                dir[k] = tangential(domain, &nodes[k], &dir[k]);
            }
        }
        if solved {
            let mut eta = initial;
            for _ in 0..=MAX_HALVINGS {
                if let Some(next) = try_outward(domain, x, &dir, &phi, &ends, eta, band) {
                    if let Ok(after) = Snapshot::of(domain, &next) {
                        if before.dominates(&after) && after.functional() <= before.functional() + ENERGY_SLACK {
                            return Ok(OutwardStep {
                                path: next,
                                step: eta,
                                grad_norm,
                            });
                        }
                    }
                }
                eta *= 0.5;
            }
        }
        damping *= 10.0;
    }
    Err(Error::Stagnation(format!(
        "outward step rejected at every damping up to {DAMPING_MAX:e} (gradient {grad_norm:.3e})"
    )))
}

fn try_outward(
    domain: &SignedDistanceField,
    x: &DiscretePath,
    dir: &[Tangent],
    phi: &[f64],
    ends: &[usize],
    eta: f64,
    band: Option<f64>,
) -> Option<DiscretePath> {
    let mut nodes = x.nodes().to_vec();
    for (k, q) in nodes.iter_mut().enumerate() {
        if dir[k] == Tangent::zeros() {
            continue;
        }
        let moved = *q + dir[k] * eta;
        *q = if ends.contains(&k) {
            domain.boundary_projection(&moved).ok()?
        } else if phi[k] >= -BOUNDARY_TOL {
            // touching samples may not move inward
            let now = domain.phi(&moved);
            if now < phi[k] {
                domain.normal_flow(&moved, phi[k] - now, true).ok()?
            } else {
                moved
            }
        } else {
            moved
        };
        let level = domain.phi(q);
        if !level.is_finite() || band.is_some_and(|b| level >= b) {
            return None;
        }
    }
    DiscretePath::new(nodes).ok()
}

/// Type B: reparameterize each maximal interval to constant g-speed along its
/// polygon. Intervals whose energy would grow are left alone.
pub fn step_reparam(domain: &SignedDistanceField, x: &DiscretePath, cfg: &FlowConfig) -> Result<DiscretePath> {
    let before = Snapshot::of(domain, x)?;
    let mut out = x.clone();
    for (iv, &energy) in before.set.iter().zip(&before.energies) {
        if let Some(nodes) = constant_speed(domain, x, *iv, cfg.reparam_threshold) {
            let mut trial = out.clone();
            trial.nodes_mut()[iv.ia..=iv.ib].copy_from_slice(&nodes);
            if energy_nodes(domain.metric(), &trial, iv.ia, iv.ib) <= energy + ENERGY_SLACK {
                out = trial;
            }
        }
    }
    match Snapshot::of(domain, &out) {
        Ok(after) if before.dominates(&after) => Ok(out),
        _ => Ok(x.clone()),
    }
}

fn constant_speed(domain: &SignedDistanceField, x: &DiscretePath, iv: NodeInterval, threshold: f64) -> Option<Vec<Point>> {
    let metric = domain.metric();
    let p = &x.nodes()[iv.ia..=iv.ib];
    let lengths: Vec<f64> = p
        .windows(2)
        .map(|w| metric.norm(&((w[0] + w[1]) * 0.5), &(w[1] - w[0])))
        .collect();
    let total: f64 = lengths.iter().sum();
    if !(total > 1e-14) {
        return None;
    }
    let mean = total / lengths.len() as f64;
    let spread = lengths.iter().map(|l| (l - mean).abs()).fold(0.0, f64::max) / mean;
    if spread <= threshold {
        return None;
    }
    let m = lengths.len();
    let mut out = Vec::with_capacity(m + 1);
    out.push(p[0]);
    let (mut seg, mut acc) = (0, 0.0);
    for j in 1..m {
        let target = total * j as f64 / m as f64;
        while seg < m - 1 && acc + lengths[seg] < target {
            acc += lengths[seg];
            seg += 1;
        }
        let frac = if lengths[seg] > 0.0 {
            ((target - acc) / lengths[seg]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(p[seg] + (p[seg + 1] - p[seg]) * frac);
    }
    out.push(p[m]);
    Some(out)
}

/// Outcome of one inward move.
#[derive(Clone, Debug)]
pub struct InwardStep {
    pub path: DiscretePath,
    /// Node ranges (exclusive of their end nodes) that were moved.
    pub treated: Vec<(usize, usize)>,
    /// Ranges whose move was reverted because the energy grew.
    pub frozen: Vec<(usize, usize)>,
}

/// Type C: on each non-essential excursion, replace the samples by the
/// geodesic joining its ends and push whatever still lies above `-σ₁/2`
/// down to that level. Samples outside the domain never move.
pub fn step_inward(domain: &SignedDistanceField, x: &DiscretePath, cfg: &FlowConfig) -> Result<InwardStep> {
    let tol = &cfg.tol;
    let target = -0.5 * tol.sigma1 - 1e-8;
    let set = maximal_intervals(domain, x)?;
    let mut out = x.clone();
    let mut treated = Vec::new();
    let mut frozen = Vec::new();
    for iv in set.iter() {
        for prox in proximity_and_closeness(domain, x, *iv, tol)? {
            if !prox.nonessential {
                continue;
            }
            let (ka, kb) = (prox.k_alpha, prox.k_beta);
            let before = energy_nodes(domain.metric(), &out, iv.ia, iv.ib);
            let mut trial = out.clone();
            let smoothed = join_nodes(domain, &out, ka, kb);
            for k in ka + 1..kb {
                let old = out.nodes()[k];
                if domain.phi(&old) > BOUNDARY_TOL {
                    continue;
                }
                let mut q = smoothed.as_ref().map_or(old, |s| s[k - ka]);
                let level = domain.phi(&q);
                if level > target {
                    q = domain.normal_flow(&q, level - target, false)?;
                }
                trial.nodes_mut()[k] = q;
            }
            let after = energy_nodes(domain.metric(), &trial, iv.ia, iv.ib);
            if after <= before + 1e-9 {
                out = trial;
                treated.push((ka, kb));
            } else {
                log::debug!("inward move on [{ka}, {kb}] raised the energy; frozen");
                frozen.push((ka, kb));
            }
        }
    }
    Ok(InwardStep {
        path: out,
        treated,
        frozen,
    })
}

/// The geodesic from node `ka` to node `kb`, sampled at the nodes between.
fn join_nodes(domain: &SignedDistanceField, x: &DiscretePath, ka: usize, kb: usize) -> Option<Vec<Point>> {
    let (a, b) = (x.nodes()[ka], x.nodes()[kb]);
    let m = kb - ka;
    if (a - b).norm() == 0.0 {
        return Some(vec![a; m + 1]);
    }
    let opts = JoinOptions {
        steps: (4 * m).max(64),
        ..JoinOptions::default()
    };
    let seg = domain.metric().exp_join_with(&a, &b, None, &opts).ok()?;
    let t_end = seg.t_end();
    Some((0..=m).map(|k| seg.point_at(t_end * k as f64 / m as f64)).collect())
}

/// Runs the flow from `x0` until the projected gradient falls below
/// `cfg.grad_tol`, the outward move stagnates, or `cfg.max_iter` is reached.
pub fn run_flow(
    domain: &SignedDistanceField,
    x0: &DiscretePath,
    cfg: &FlowConfig,
    constants: &DomainConstants,
    m0: f64,
) -> Result<FlowResult> {
    let mut x = x0.clone();
    let mut trace = vec![Snapshot::of(domain, &x)?.functional()];
    let mut membership_ok = member(domain, &x, m0, constants);
    let mut frozen = 0;
    let mut status = FlowStatus::MaxIterations;
    let mut grad_norm = projected_gradient_norm(domain, &x)?;
    let mut eta = cfg.step;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        if grad_norm < cfg.grad_tol {
            status = FlowStatus::Converged;
            break;
        }
        iterations += 1;
        let inward = step_inward(domain, &x, cfg)?;
        frozen += inward.frozen.len();
        x = step_reparam(domain, &inward.path, cfg)?;
        match step_outward_from(domain, &x, cfg, (2.0 * eta).min(cfg.step)) {
            Ok(step) => {
                if step.step > 0.0 {
                    eta = step.step;
                }
                x = step.path;
            }
            Err(Error::Stagnation(msg)) => {
                log::debug!("flow stagnated: {msg}");
                trace.push(Snapshot::of(domain, &x)?.functional());
                status = FlowStatus::Stagnated;
                break;
            }
            Err(e) => return Err(e),
        }
        trace.push(Snapshot::of(domain, &x)?.functional());
        membership_ok &= member(domain, &x, m0, constants);
        grad_norm = projected_gradient_norm(domain, &x)?;
    }
    if status == FlowStatus::MaxIterations && grad_norm < cfg.grad_tol {
        status = FlowStatus::Converged;
    }
    let classifications = maximal_intervals(domain, &x)?
        .iter()
        .filter_map(|iv| classify_portion(domain, &x, *iv, &cfg.tol, constants).ok())
        .collect();
    Ok(FlowResult {
        path: x,
        status,
        iterations,
        energy_trace: trace,
        grad_norm,
        classifications,
        membership_ok,
        frozen,
    })
}

fn member(domain: &SignedDistanceField, x: &DiscretePath, m0: f64, constants: &DomainConstants) -> bool {
    pathspace_membership(domain, x, m0, constants).is_ok_and(|m| m.member && m.bounds_hold())
}

/// Distance between two chord images after the better of the two orientations.
pub fn image_distance(a: &DiscretePath, b: &DiscretePath) -> f64 {
    let direct = a.max_distance(b).unwrap_or(f64::INFINITY);
    let reversed = a.max_distance(&b.reversed()).unwrap_or(f64::INFINITY);
    direct.min(reversed)
}

/// Default merge radius: half the smallest distance between clusters of
/// nearly identical records, but at least `1e-3` of the domain diameter.
pub fn default_r_star(ogcs: &[OgcRecord], diameter: f64) -> f64 {
    let floor = 1e-3 * diameter;
    let clusters = cluster(ogcs, floor, f64::INFINITY);
    let mut min = f64::INFINITY;
    for (i, a) in clusters.iter().enumerate() {
        for b in &clusters[i + 1..] {
            for &p in a {
                for &q in b {
                    min = min.min(image_distance(&ogcs[p].path, &ogcs[q].path));
                }
            }
        }
    }
    if min.is_finite() {
        (0.5 * min).max(floor)
    } else {
        floor
    }
}

/// Single-linkage clusters of records closer than `radius` with relative
/// energy gap at most `energy_tol`.
fn cluster(ogcs: &[OgcRecord], radius: f64, energy_tol: f64) -> Vec<Vec<usize>> {
    let n = ogcs.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (&ogcs[i], &ogcs[j]);
            let gap = (a.energy_c - b.energy_c).abs() / a.energy_c.max(b.energy_c);
            if gap <= energy_tol && image_distance(&a.path, &b.path) < radius {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = find(&mut label, i);
        let slot = *index.entry(r).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(i);
    }
    groups
}

/// Merges records whose images are within `r_star` and whose energies agree
/// to `energy_tol` (relative). Each cluster keeps its record with the
/// smallest residuals; the output is sorted by energy.
pub fn dedupe(ogcs: &[OgcRecord], r_star: f64, energy_tol: f64) -> Vec<OgcRecord> {
    let mut out: Vec<OgcRecord> = cluster(ogcs, r_star, energy_tol)
        .into_iter()
        .map(|group| {
            let best = group
                .into_iter()
                .min_by(|&a, &b| {
                    let ra = ogcs[a].ortho_residual.max(ogcs[a].geo_residual);
                    let rb = ogcs[b].ortho_residual.max(ogcs[b].geo_residual);
                    ra.total_cmp(&rb)
                })
                .expect("clusters are non-empty");
            ogcs[best].clone()
        })
        .collect();
    out.sort_by(|a, b| a.energy_c.total_cmp(&b.energy_c));
    out
}
