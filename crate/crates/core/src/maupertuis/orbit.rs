//! Brake orbits rebuilt from certified chords of the shrunk hill region, and
//! their verification against Hamilton's equations.

use std::fmt::Write as _;

use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use super::{jacobi_setup, HamiltonianSpec};
use crate::critical::OgcRecord;
use crate::domain::DomainConstants;
use crate::error::{Error, Result};
use crate::flow::{polish_ogc, FlowConfig};
use crate::geometry::{Point, Tangent};

pub const ORBITS_CSV_HEADER: &str = "# ogc-orbits/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub t: f64,
    pub q: Point,
    pub p: Tangent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbitOptions {
    /// Uniform time intervals on `[0, 2T]`; a multiple of 4.
    pub intervals: usize,
    /// RK4 steps per sample interval.
    pub substeps: usize,
    /// Time step used to reach the brake points from the chord ends.
    pub extension_step: f64,
    /// Give up on a brake point after this much time.
    pub max_time: f64,
}

impl Default for OrbitOptions {
    fn default() -> Self {
        Self {
            intervals: 2048,
            substeps: 8,
            extension_step: 1e-4,
            max_time: 1e3,
        }
    }
}

impl OrbitOptions {
    pub fn validate(&self) -> Result<()> {
        if self.intervals < 8 || self.intervals % 4 != 0 {
            return Err(Error::Config(format!(
                "orbit intervals must be a positive multiple of 4, got {}",
                self.intervals
            )));
        }
        if self.substeps == 0 || !(self.extension_step > 0.0) || !(self.max_time > 0.0) {
            return Err(Error::Config("orbit substeps, extension step and max time must be positive".into()));
        }
        Ok(())
    }
}

/// How the chord was turned into an orbit, with the cross-checks that tie
/// the two together.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    /// Energy of the chord in the shrunk region.
    pub chord_energy: f64,
    /// `½ L²` for the Jacobi length of the chord extended to `{V = E}`.
    pub full_energy: f64,
    /// Jacobi length of the extended chord.
    pub jacobi_length: f64,
    /// Jacobi length of the orbit path on `[0, T]`, from its samples.
    pub orbit_length: f64,
    pub length_mismatch: f64,
    /// Time spent beyond the chord at its start and end.
    pub extension_times: [f64; 2],
    /// Time along the chord from the Maupertuis time law.
    pub chord_time: f64,
    /// `T` predicted by the time law; the orbit uses the dynamical brake time.
    pub time_law_half_period: f64,
    /// Distance between the orbit at `T` and the brake point reached from
    /// the chord's end.
    pub far_brake_gap: f64,
    /// `|p|` where the extensions of the chord's start and end turn.
    pub extension_brake_residuals: [f64; 2],
    /// How far the start was moved along `{V = E}` so the far turn brakes.
    pub start_shift: f64,
    /// Velocity along the level curve at the far turn, before and after
    /// that move.
    pub turn_defect: [f64; 2],
}

/// A periodic solution braking at `t = 0` and `t = T`, sampled on a uniform
/// grid over `[0, 2T]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrakeOrbit {
    pub samples: Vec<OrbitSample>,
    pub half_period: f64,
    pub energy: f64,
    pub brake_points: [Point; 2],
    pub reconstruction: Option<Reconstruction>,
}

impl BrakeOrbit {
    /// Wraps stored samples; the brake points are read off at `0` and `T`.
    pub fn from_samples(samples: Vec<OrbitSample>, energy: f64) -> Result<Self> {
        if samples.len() < 5 || (samples.len() - 1) % 2 != 0 {
            return Err(Error::Shape(format!(
                "an orbit needs an even number of intervals, got {} samples",
                samples.len()
            )));
        }
        let mid = (samples.len() - 1) / 2;
        Ok(Self {
            half_period: 0.5 * (samples[samples.len() - 1].t - samples[0].t),
            energy,
            brake_points: [samples[0].q, samples[mid].q],
            samples,
            reconstruction: None,
        })
    }

    /// Configuration-space points on `[0, T]`.
    pub fn image(&self) -> Vec<Point> {
        let mid = (self.samples.len() - 1) / 2;
        self.samples[..=mid].iter().map(|s| s.q).collect()
    }
}

fn rk4(spec: &HamiltonianSpec, q: &Point, p: &Tangent, h: f64) -> (Point, Tangent) {
    let f = |q: &Point, p: &Tangent| spec.vector_field(q, p);
    let (k1q, k1p) = f(q, p);
    let (k2q, k2p) = f(&(q + k1q * (h / 2.0)), &(p + k1p * (h / 2.0)));
    let (k3q, k3p) = f(&(q + k2q * (h / 2.0)), &(p + k2p * (h / 2.0)));
    let (k4q, k4p) = f(&(q + k3q * h), &(p + k3p * h));
    (
        q + (k1q + k2q * 2.0 + k3q * 2.0 + k4q) * (h / 6.0),
        p + (k1p + k2p * 2.0 + k3p * 2.0 + k4p) * (h / 6.0),
    )
}

/// Rate of change of `V` along the flow.
fn climb(spec: &HamiltonianSpec, q: &Point, p: &Tangent) -> f64 {
    spec.potential.gradient(q).dot(&(spec.kinetic.inverse(q) * p))
}

/// `√((E - V) g₀(q̇, q̇))`, the Jacobi speed of a trajectory.
fn jacobi_speed(spec: &HamiltonianSpec, q: &Point, p: &Tangent) -> f64 {
    let qdot = spec.kinetic.inverse(q) * p;
    let g0 = 0.5 * qdot.dot(p);
    ((spec.energy - spec.potential.value(q)).max(0.0) * g0.max(0.0)).sqrt()
}

fn brent(lo: f64, hi: f64, f: impl FnMut(f64) -> f64) -> Option<f64> {
    let mut conv = SimpleConvergency { eps: 1e-16, max_iter: 200 };
    find_root_brent(lo, hi, f, &mut conv).ok()
}

struct Turn {
    q: Point,
    p: Tangent,
    time: f64,
    length: f64,
}

/// Follows the flow from `(q, p)` with step `h` (negative to go backwards)
/// until `V` stops climbing, and returns the turning point. With
/// `skip_descent` the search first waits for `V` to start climbing.
fn run_to_turn(spec: &HamiltonianSpec, q: Point, p: Tangent, h: f64, max_time: f64, skip_descent: bool) -> Result<Turn> {
    let sign = h.signum();
    let (mut q, mut p) = (q, p);
    let mut time = 0.0;
    let mut length = 0.0;
    let mut climbing = !skip_descent;
    let mut prev = sign * climb(spec, &q, &p);
    while time < max_time {
        let (q1, p1) = rk4(spec, &q, &p, h);
        if !(q1.x.is_finite() && q1.y.is_finite() && p1.x.is_finite() && p1.y.is_finite()) {
            return Err(Error::Reconstruction(format!(
                "trajectory blew up near ({:.6}, {:.6})",
                q.x, q.y
            )));
        }
        let cur = sign * climb(spec, &q1, &p1);
        if climbing && prev > 0.0 && cur <= 0.0 {
            let f = |s: f64| {
                let (a, b) = rk4(spec, &q, &p, s);
                sign * climb(spec, &a, &b)
            };
            let (lo, hi) = if h > 0.0 { (0.0, h) } else { (h, 0.0) };
            let s = brent(lo, hi, f).ok_or_else(|| Error::Reconstruction("brake refinement failed".into()))?;
            let (qt, pt) = rk4(spec, &q, &p, s);
            // Simpson on the partial step
            let (qm, pm) = rk4(spec, &q, &p, 0.5 * s);
            length += s.abs() / 6.0
                * (jacobi_speed(spec, &q, &p) + 4.0 * jacobi_speed(spec, &qm, &pm) + jacobi_speed(spec, &qt, &pt));
            return Ok(Turn {
                q: qt,
                p: pt,
                time: time + s.abs(),
                length,
            });
        }
        let (qm, pm) = rk4(spec, &q, &p, 0.5 * h);
        length += h.abs() / 6.0
            * (jacobi_speed(spec, &q, &p) + 4.0 * jacobi_speed(spec, &qm, &pm) + jacobi_speed(spec, &q1, &p1));
        climbing |= cur > 0.0;
        prev = cur;
        q = q1;
        p = p1;
        time += h.abs();
    }
    Err(Error::Reconstruction(format!(
        "no brake point within time {max_time} of ({:.6}, {:.6})",
        q.x, q.y
    )))
}

/// Momentum of the trajectory through `q` along `dir` at energy `E`.
fn momentum_along(spec: &HamiltonianSpec, q: &Point, dir: &Tangent) -> Result<Tangent> {
    let mass = spec.mass(q)?;
    let g0 = 0.5 * dir.dot(&(mass * dir));
    let room = spec.energy - spec.potential.value(q);
    if !(g0 > 0.0 && room > 0.0) {
        return Err(Error::Reconstruction(format!(
            "no admissible momentum at ({:.6}, {:.6})",
            q.x, q.y
        )));
    }
    Ok(mass * dir * (room / g0).sqrt())
}

/// Time along the chord, `∫ √(g₀(γ', γ') / (E - V)) ds`, by Simpson's rule
/// on a re-shot geodesic, refined until two resolutions agree.
fn chord_time(spec: &HamiltonianSpec, ogc: &OgcRecord, metric: &crate::geometry::MetricField) -> Result<f64> {
    let at = |steps: usize| -> Result<f64> {
        let seg = metric.geodesic_shoot(&ogc.start, &ogc.start_velocity, 1.0, steps)?;
        let values = seg
            .samples
            .iter()
            .map(|s| {
                let g0 = 0.5 * s.v.dot(&(spec.mass(&s.q)? * s.v));
                Ok((g0 / (spec.energy - spec.potential.value(&s.q))).sqrt())
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(simpson(&values, 1.0 / steps as f64))
    };
    let mut steps = 4096;
    let mut prev = at(steps)?;
    while steps < 1 << 18 {
        steps *= 2;
        let cur = at(steps)?;
        if (cur - prev).abs() <= 1e-12 * cur {
            return Ok(cur);
        }
        prev = cur;
    }
    Ok(prev)
}

/// Integrates from `(q0, p0)` over `intervals` uniform steps of `dt`.
fn sample(spec: &HamiltonianSpec, q0: Point, p0: Tangent, dt: f64, intervals: usize, substeps: usize) -> Vec<OrbitSample> {
    let h = dt / substeps as f64;
    let (mut q, mut p) = (q0, p0);
    let mut out = Vec::with_capacity(intervals + 1);
    out.push(OrbitSample { t: 0.0, q, p });
    for k in 1..=intervals {
        for _ in 0..substeps {
            (q, p) = rk4(spec, &q, &p, h);
        }
        out.push(OrbitSample { t: dt * k as f64, q, p });
    }
    out
}

/// Pulls `q` onto `{V = E}` along the gradient of `V`.
fn onto_level(spec: &HamiltonianSpec, q: Point) -> Result<Point> {
    let mut q = q;
    let tol = 1e-15 * (1.0 + spec.energy.abs());
    for _ in 0..50 {
        let gap = spec.energy - spec.potential.value(&q);
        if gap.abs() <= tol {
            return Ok(q);
        }
        let g = spec.potential.gradient(&q);
        let g2 = g.norm_squared();
        if !(g2 > 0.0) {
            break;
        }
        q += g * (gap / g2);
    }
    Err(Error::Reconstruction(format!(
        "cannot place ({:.6}, {:.6}) on the energy level",
        q.x, q.y
    )))
}

/// Released at rest from `q`, the orbit's velocity along the level curve of
/// `V` where it next stops climbing. Zero exactly when that turn is a brake.
fn turn_defect(spec: &HamiltonianSpec, q: Point, h: f64, max_time: f64) -> Result<f64> {
    let turn = run_to_turn(spec, q, Tangent::zeros(), h, max_time, true)?;
    let g = spec.potential.gradient(&turn.q);
    let along = Tangent::new(-g.y, g.x) / g.norm();
    Ok(along.dot(&(spec.kinetic.inverse(&turn.q) * turn.p)))
}

/// Secant search along `{V = E}` near `q0` for a start whose far turn is a
/// brake. Returns the start and the defect before and after; the original
/// point is kept when the search does not improve on it.
fn polish_start(spec: &HamiltonianSpec, q0: Point, h: f64, max_time: f64) -> Result<(Point, [f64; 2])> {
    let base = onto_level(spec, q0)?;
    let g = spec.potential.gradient(&base);
    let along = Tangent::new(-g.y, g.x) / g.norm();
    let at = |s: f64| -> Result<(Point, f64)> {
        let q = onto_level(spec, base + along * s)?;
        Ok((q, turn_defect(spec, q, h, max_time)?))
    };
    let d0 = turn_defect(spec, base, h, max_time)?;
    let tol = 1e-13 * (1.0 + spec.energy.abs().sqrt());
    let (mut best, mut best_d) = (base, d0);
    if d0.abs() <= tol {
        return Ok((base, [d0, d0]));
    }
    let (mut s0, mut f0) = (0.0, d0);
    let mut s1 = 1e-4 * (1.0 + base.norm());
    let (_, mut f1) = at(s1)?;
    for _ in 0..40 {
        if f1 == f0 {
            break;
        }
        let s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        let (q2, f2) = at(s2)?;
        if f2.abs() < best_d.abs() {
            (best, best_d) = (q2, f2);
        }
        if f2.abs() <= tol || (s2 - s1).abs() <= 1e-15 * (1.0 + base.norm()) {
            break;
        }
        (s0, f0, s1, f1) = (s1, f1, s2, f2);
    }
    Ok((best, [d0, best_d]))
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    let mut sum = values[0] + values[n];
    for (k, v) in values.iter().enumerate().take(n).skip(1) {
        sum += if k % 2 == 1 { 4.0 } else { 2.0 } * v;
    }
    sum * h / 3.0
}

/// Turns a chord of the shrunk region `{V < E - ε}` into a brake orbit.
///
/// Both ends are continued along the Hamiltonian flow, with the momentum
/// that matches the chord's direction at energy `E`, until `V` stops rising.
/// Away from symmetric cases the far turn of that trajectory is not quite a
/// brake, so the first brake point is moved along `{V = E}` until it is. The
/// orbit is then integrated from there at rest for one full period; `T` is
/// the time at which it stops again.
pub fn ogc_to_brake_orbit(spec: &HamiltonianSpec, ogc: &OgcRecord, eps_reg: f64, opts: &OrbitOptions) -> Result<BrakeOrbit> {
    opts.validate()?;
    let level = spec.energy - eps_reg;
    let scale = 1.0 + spec.energy.abs();
    for q in [&ogc.start, &ogc.end] {
        if (spec.potential.value(q) - level).abs() > 1e-6 * scale {
            return Err(Error::Contract(format!(
                "chord end ({:.6}, {:.6}) is not on the level V = {level}",
                q.x, q.y
            )));
        }
    }
    let h = opts.extension_step;
    let pa = momentum_along(spec, &ogc.start, &ogc.start_velocity)?;
    let pb = momentum_along(spec, &ogc.end, &ogc.end_velocity)?;
    let back = run_to_turn(spec, ogc.start, pa, -h, opts.max_time, false)?;
    let ahead = run_to_turn(spec, ogc.end, pb, h, opts.max_time, false)?;
    let metric = crate::geometry::MetricField::new(super::JacobiMetric::new(spec.clone()));
    let chord_time = chord_time(spec, ogc, &metric)?;
    let jacobi_length = ogc.length() + back.length + ahead.length;

    // from rest at the first brake point, the next stop is at T
    let rest = Tangent::zeros();
    let step = ((back.time + chord_time + ahead.time) / 4096.0).min(h);
    let (start, turn_defect) = polish_start(spec, back.q, step, opts.max_time)?;
    let far = run_to_turn(spec, start, rest, step, opts.max_time, true)?;
    let half_period = far.time;
    let dt = 2.0 * half_period / opts.intervals as f64;
    let samples = sample(spec, start, rest, dt, opts.intervals, opts.substeps);
    let mid = opts.intervals / 2;
    let speeds: Vec<f64> = samples[..=mid].iter().map(|s| jacobi_speed(spec, &s.q, &s.p)).collect();
    let orbit_length = simpson(&speeds, dt);
    log::debug!(
        "orbit from ({:.6}, {:.6}): T = {half_period:.10}, time law {:.10}",
        start.x,
        start.y,
        back.time + chord_time + ahead.time
    );
    Ok(BrakeOrbit {
        brake_points: [start, samples[mid].q],
        half_period,
        energy: spec.energy,
        reconstruction: Some(Reconstruction {
            chord_energy: ogc.energy_c,
            full_energy: 0.5 * jacobi_length * jacobi_length,
            jacobi_length,
            orbit_length,
            length_mismatch: (orbit_length - jacobi_length).abs() / jacobi_length,
            extension_times: [back.time, ahead.time],
            chord_time,
            time_law_half_period: back.time + chord_time + ahead.time,
            far_brake_gap: (samples[mid].q - ahead.q).norm(),
            extension_brake_residuals: [back.p.norm(), ahead.p.norm()],
            start_shift: (start - back.q).norm(),
            turn_defect,
        }),
        samples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbitTolerances {
    /// On `|Δ(q, p)/Δt - X_H| / (1 + max |X_H|)`.
    pub hamilton: f64,
    /// On `|H - E| / (1 + |E|)`.
    pub energy: f64,
    pub brake: f64,
    pub parity: f64,
    pub round_trip: f64,
}

impl Default for OrbitTolerances {
    fn default() -> Self {
        Self {
            hamilton: 1e-6,
            energy: 1e-6,
            brake: 1e-6,
            parity: 1e-5,
            round_trip: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitCheck {
    pub hamilton_residual: f64,
    pub energy_defect: f64,
    /// `|p(0)|` and `|p(T)|`.
    pub brake_residuals: [f64; 2],
    /// `q` even about `T` (and so about `0`, by periodicity).
    pub q_parity: f64,
    /// `p` odd about `T`.
    pub p_parity: f64,
    /// Distance from `(q(0), 0)` after integrating the flow directly for `2T`.
    pub round_trip: f64,
    pub grid_defect: f64,
    pub failures: Vec<String>,
}

impl OrbitCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Fourth order derivative of `f` at sample `k` of a uniform grid with step `h`.
fn derivative<T>(f: &[T], k: usize, h: f64) -> T
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = f.len() - 1;
    let c = 1.0 / (12.0 * h);
    if k >= 2 && k + 2 <= n {
        (f[k - 2] - f[k + 2] + (f[k + 1] - f[k - 1]) * 8.0) * c
    } else if k < 2 {
        let s = |i: usize| f[i];
        if k == 0 {
            (s(1) * 48.0 - s(0) * 25.0 - s(2) * 36.0 + s(3) * 16.0 - s(4) * 3.0) * c
        } else {
            (s(2) * 18.0 - s(0) * 3.0 - s(1) * 10.0 - s(3) * 6.0 + s(4)) * c
        }
    } else {
        let s = |i: usize| f[n - i];
        if k == n {
            (s(0) * 25.0 - s(1) * 48.0 + s(2) * 36.0 - s(3) * 16.0 + s(4) * 3.0) * c
        } else {
            (s(0) * 3.0 + s(1) * 10.0 - s(2) * 18.0 + s(3) * 6.0 - s(4)) * c
        }
    }
}

/// Checks a sampled orbit against Hamilton's equations and the brake-orbit
/// symmetries. Pure diagnostic: every violation is reported, none is fatal.
pub fn brake_orbit_verify(spec: &HamiltonianSpec, orbit: &BrakeOrbit, tol: &OrbitTolerances) -> OrbitCheck {
    let s = &orbit.samples;
    let mut failures = Vec::new();
    let mut check = OrbitCheck {
        hamilton_residual: f64::INFINITY,
        energy_defect: f64::INFINITY,
        brake_residuals: [f64::INFINITY; 2],
        q_parity: f64::INFINITY,
        p_parity: f64::INFINITY,
        round_trip: f64::INFINITY,
        grid_defect: f64::INFINITY,
        failures: Vec::new(),
    };
    if s.len() < 5 || (s.len() - 1) % 2 != 0 {
        check.failures.push(format!("{} samples do not form an even grid", s.len()));
        return check;
    }
    let n = s.len() - 1;
    let mid = n / 2;
    let dt = (s[n].t - s[0].t) / n as f64;
    check.grid_defect = s
        .iter()
        .enumerate()
        .map(|(k, x)| (x.t - s[0].t - dt * k as f64).abs())
        .fold(0.0, f64::max)
        / dt;
    if !(dt > 0.0) || check.grid_defect > 1e-6 {
        failures.push(format!("time grid is not uniform (defect {:.3e} steps)", check.grid_defect));
    }

    let qs: Vec<Point> = s.iter().map(|x| x.q).collect();
    let ps: Vec<Tangent> = s.iter().map(|x| x.p).collect();
    let mut residual: f64 = 0.0;
    let mut field_max: f64 = 0.0;
    let mut defect: f64 = 0.0;
    for k in 0..=n {
        let (fq, fp) = spec.vector_field(&qs[k], &ps[k]);
        let rq = derivative(&qs, k, dt) - fq;
        let rp = derivative(&ps, k, dt) - fp;
        residual = residual.max(rq.norm().max(rp.norm()));
        field_max = field_max.max(fq.norm().max(fp.norm()));
        defect = defect.max((spec.hamiltonian(&qs[k], &ps[k]) - orbit.energy).abs());
    }
    check.hamilton_residual = residual / (1.0 + field_max);
    check.energy_defect = defect;
    check.brake_residuals = [ps[0].norm(), ps[mid].norm()];
    check.q_parity = (1..=mid).map(|k| (qs[mid + k] - qs[mid - k]).norm()).fold(0.0, f64::max);
    check.p_parity = (1..=mid).map(|k| (ps[mid + k] + ps[mid - k]).norm()).fold(0.0, f64::max);
    // independent of the samples after the first: twice the sample resolution
    let direct = sample(spec, qs[0], Tangent::zeros(), 2.0 * orbit.half_period / (2 * n) as f64, 2 * n, 8);
    let last = direct[2 * n];
    check.round_trip = (last.q - qs[0]).norm().max(last.p.norm());

    if !(check.hamilton_residual <= tol.hamilton) {
        failures.push(format!("Hamilton residual {:.3e} exceeds {:.1e}", check.hamilton_residual, tol.hamilton));
    }
    let energy_tol = tol.energy * (1.0 + orbit.energy.abs());
    if !(check.energy_defect <= energy_tol) {
        failures.push(format!("|H - E| = {:.3e} exceeds {energy_tol:.1e}", check.energy_defect));
    }
    for (name, r) in [("p(0)", check.brake_residuals[0]), ("p(T)", check.brake_residuals[1])] {
        if !(r <= tol.brake) {
            failures.push(format!("|{name}| = {r:.3e} exceeds {:.1e}", tol.brake));
        }
    }
    if !(check.q_parity <= tol.parity) {
        failures.push(format!("q parity defect {:.3e} exceeds {:.1e}", check.q_parity, tol.parity));
    }
    if !(check.round_trip <= tol.round_trip) {
        failures.push(format!("round trip misses by {:.3e}", check.round_trip));
    }
    check.failures = failures;
    check
}

/// Hausdorff distance between the configuration-space images of two orbits.
pub fn orbit_image_distance(a: &BrakeOrbit, b: &BrakeOrbit) -> f64 {
    let (ia, ib) = (a.image(), b.image());
    let one_way = |x: &[Point], y: &[Point]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(&ia, &ib).max(one_way(&ib, &ia))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub eps_reg: f64,
    /// Largest move of a brake point when the regularization is halved.
    pub brake_shift: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Repeats the reconstruction with the regularization halved: the chord is
/// re-found in the larger region and its brake points compared.
pub fn sensitivity_check(
    spec: &HamiltonianSpec,
    ogc: &OgcRecord,
    orbit: &BrakeOrbit,
    eps_reg: f64,
    reach: f64,
    delta0: f64,
    cfg: &FlowConfig,
    opts: &OrbitOptions,
) -> Result<Sensitivity> {
    let half = 0.5 * eps_reg;
    let problem = jacobi_setup(spec, half, reach)?;
    let constants: DomainConstants = problem.domain.constants(delta0)?;
    let refound = polish_ogc(&problem.domain, &ogc.path, &constants, cfg, f64::INFINITY)?
        .ok_or_else(|| Error::Reconstruction(format!("chord not found again at regularization {half}")))?;
    let other = ogc_to_brake_orbit(spec, &refound, half, opts)?;
    let [a0, a1] = orbit.brake_points;
    let [b0, b1] = other.brake_points;
    let brake_shift = (a0 - b0).norm().max((a1 - b1).norm()).min((a0 - b1).norm().max((a1 - b0).norm()));
    let bound = 10.0 * eps_reg;
    Ok(Sensitivity {
        eps_reg: half,
        brake_shift,
        bound,
        passed: brake_shift < bound,
    })
}

/// CSV with one row per sample: `orbit,t,q1,q2,p1,p2`, after a version line.
pub fn orbits_to_csv(orbits: &[BrakeOrbit]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{ORBITS_CSV_HEADER}");
    let _ = writeln!(out, "orbit,t,q1,q2,p1,p2");
    for (i, o) in orbits.iter().enumerate() {
        for s in &o.samples {
            let _ = writeln!(out, "{i},{:e},{:e},{:e},{:e},{:e}", s.t, s.q.x, s.q.y, s.p.x, s.p.y);
        }
    }
    out
}

/// Parses [`orbits_to_csv`] output back into per-orbit sample lists.
pub fn orbits_from_csv(text: &str) -> Result<Vec<Vec<OrbitSample>>> {
    let mut lines = text.lines();
    let version = lines.next().unwrap_or("").trim();
    if version != ORBITS_CSV_HEADER {
        return Err(Error::Format {
            expected: ORBITS_CSV_HEADER.into(),
            found: version.into(),
        });
    }
    match lines.next().map(str::trim) {
        Some("orbit,t,q1,q2,p1,p2") => {}
        other => return Err(Error::Shape(format!("unexpected orbit columns {other:?}"))),
    }
    let mut orbits: Vec<Vec<OrbitSample>> = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::Shape(format!("orbit row {}: {line:?}", row + 1));
        if fields.len() != 6 {
            return Err(bad());
        }
        let idx: usize = fields[0].parse().map_err(|_| bad())?;
        let v: Vec<f64> = fields[1..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if idx > orbits.len() {
            return Err(bad());
        }
        if idx == orbits.len() {
            orbits.push(Vec::new());
        }
        orbits[idx].push(OrbitSample {
            t: v[0],
            q: Point::new(v[1], v[2]),
            p: Tangent::new(v[3], v[4]),
        });
    }
    Ok(orbits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maupertuis::oscillator;
    use std::f64::consts::{PI, SQRT_2};

    /// `q = A cos(ωt)` along one axis, with `ω = √2 λ` and `A = √E / λ`.
    fn analytic(lambda: f64, energy: f64, axis: usize, shift: f64, intervals: usize) -> BrakeOrbit {
        let w = SQRT_2 * lambda;
        let amp = energy.sqrt() / lambda;
        let period = PI / w;
        let dt = 2.0 * period / intervals as f64;
        let samples = (0..=intervals)
            .map(|k| {
                let t = dt * k as f64;
                let mut q = Point::zeros();
                let mut p = Tangent::zeros();
                q[axis] = amp * (w * (t + shift)).cos();
                p[axis] = -amp * w * (w * (t + shift)).sin();
                OrbitSample { t, q, p }
            })
            .collect();
        BrakeOrbit::from_samples(samples, 1.0).unwrap()
    }

    #[test]
    fn analytic_orbits_pass() {
        let spec = oscillator(1.0, SQRT_2, 1.0);
        for (lambda, axis) in [(1.0, 0), (SQRT_2, 1)] {
            let o = analytic(lambda, 1.0, axis, 0.0, 1024);
            let c = brake_orbit_verify(&spec, &o, &OrbitTolerances::default());
            assert!(c.passed(), "{c:?}");
            assert!(c.hamilton_residual < 1e-6 && c.energy_defect < 1e-12);
            assert!(c.round_trip < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn time_shift_is_flagged() {
        let spec = oscillator(1.0, SQRT_2, 1.0);
        let c = brake_orbit_verify(&spec, &analytic(1.0, 1.0, 0, 0.3, 1024), &OrbitTolerances::default());
        assert!(c.brake_residuals[0] > 0.1);
        assert!(c.failures.iter().any(|f| f.contains("p(0)")), "{c:?}");
        assert!(c.hamilton_residual < 1e-6);
    }

    #[test]
    fn energy_perturbation_is_flagged_at_its_size() {
        let spec = oscillator(1.0, SQRT_2, 1.0);
        let c = brake_orbit_verify(&spec, &analytic(1.0, 1.0 + 1e-4, 0, 0.0, 1024), &OrbitTolerances::default());
        assert!((c.energy_defect - 1e-4).abs() < 1e-9, "{}", c.energy_defect);
        assert!(!c.passed());
    }

    #[test]
    fn csv_round_trip() {
        let orbits = vec![analytic(1.0, 1.0, 0, 0.0, 16), analytic(SQRT_2, 1.0, 1, 0.0, 8)];
        let text = orbits_to_csv(&orbits);
        let back = orbits_from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0], orbits[0].samples);
        assert_eq!(back[1], orbits[1].samples);
        let wrong = text.replacen("ogc-orbits/1", "ogc-orbits/9", 1);
        assert!(matches!(orbits_from_csv(&wrong), Err(Error::Format { .. })));
    }

    #[test]
    fn axis_images_are_far_apart() {
        let a = analytic(1.0, 1.0, 0, 0.0, 64);
        let b = analytic(SQRT_2, 1.0, 1, 0.0, 64);
        assert!(orbit_image_distance(&a, &b) > 0.9);
        assert!(orbit_image_distance(&a, &a) == 0.0);
    }
}
