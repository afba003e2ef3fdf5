//! OGC search by normal shooting: leave the boundary along the inward normal,
//! follow the geodesic until it meets the boundary again, and look for
//! starting angles where the arrival is normal too.

use std::f64::consts::TAU;

use rayon::prelude::*;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use super::FlowConfig;
use crate::critical::{certify_ogc, OgcRecord, ToleranceSet};
use crate::chords::NodeInterval;
use crate::domain::{DomainConstants, SignedDistanceField};
use crate::error::Result;
use crate::geometry::{DiscretePath, Point, Tangent};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootOptions {
    /// Scanned starting angles; 0 means `max(4 n_θ, 64)`.
    pub angles: usize,
    /// RK4 steps per boundary length of flight.
    pub steps: usize,
    /// Scan points whose defect is at most this are roots as they stand.
    pub accept: f64,
    /// Brent results with a larger defect sit on a jump, not a root.
    pub root_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            angles: 0,
            steps: 16384,
            accept: 1e-10,
            root_tol: 1e-8,
        }
    }
}

impl ShootOptions {
    pub fn angle_count(&self, n_theta: usize) -> usize {
        if self.angles > 0 {
            self.angles
        } else {
            (4 * n_theta).max(64)
        }
    }
}

/// A unit-speed geodesic from the boundary along the inward normal, up to
/// its next boundary crossing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalShot {
    /// Ray angle of the starting point about the domain center.
    pub angle: f64,
    pub start: Point,
    pub velocity: Tangent,
    pub hit_time: f64,
    pub end: Point,
    pub end_velocity: Tangent,
    /// Boundary-tangential component of the unit arrival velocity.
    pub defect: f64,
}

/// Shoots from the boundary point at ray angle `angle` with step `dt`.
/// Returns `None` when the geodesic leaves the chart or does not return to
/// the boundary before `t_max`.
pub fn shoot_normal(domain: &SignedDistanceField, angle: f64, dt: f64, t_max: f64) -> Result<Option<NormalShot>> {
    let metric = domain.metric();
    let start = domain.boundary_point(angle)?;
    let velocity = -domain.unit_normal(&start)?;
    let (mut q, mut v) = (start, velocity);
    let mut t = 0.0;
    let mut inside = false;
    while t < t_max {
        let Ok((q1, v1)) = metric.rk4_step(&q, &v, dt) else {
            return Ok(None);
        };
        let level = domain.phi(&q1);
        if !level.is_finite() {
            return Ok(None);
        }
        if inside && level >= 0.0 {
            let f = |s: f64| metric.rk4_step(&q, &v, s).map_or(f64::NAN, |(p, _)| domain.phi(&p));
            let mut conv = SimpleConvergency { eps: 1e-16, max_iter: 100 };
            let Ok(s) = find_root_brent(0.0, dt, f, &mut conv) else {
                return Ok(None);
            };
            let (end, end_velocity) = metric.rk4_step(&q, &v, s)?;
            let tangent = domain.level_tangent(&end)?;
            let defect = metric.dot(&end, &end_velocity, &tangent) / metric.norm(&end, &end_velocity);
            return Ok(Some(NormalShot {
                angle,
                start,
                velocity,
                hit_time: t + s,
                end,
                end_velocity,
                defect,
            }));
        }
        inside |= level < 0.0;
        q = q1;
        v = v1;
        t += dt;
    }
    Ok(None)
}

/// Shooting step and flight limit for a domain whose boundary has g-length
/// `length`.
fn schedule(length: f64, opts: &ShootOptions) -> (f64, f64) {
    (length / opts.steps as f64, 2.0 * length)
}

fn boundary_length(domain: &SignedDistanceField) -> Result<f64> {
    let pts = domain.boundary_samples(512)?;
    let metric = domain.metric();
    Ok((0..pts.len())
        .map(|k| {
            let (p, q) = (pts[k], pts[(k + 1) % pts.len()]);
            metric.norm(&((p + q) * 0.5), &(q - p))
        })
        .sum())
}

fn defect_at(domain: &SignedDistanceField, angle: f64, dt: f64, t_max: f64) -> Option<f64> {
    shoot_normal(domain, angle, dt, t_max).ok().flatten().map(|s| s.defect)
}

/// Root of the arrival defect in `[a, b]`, if it is a genuine zero.
fn refine(domain: &SignedDistanceField, a: f64, b: f64, dt: f64, t_max: f64, opts: &ShootOptions) -> Option<f64> {
    let f = |x: f64| defect_at(domain, x, dt, t_max).unwrap_or(f64::NAN);
    let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
    let root = find_root_brent(a, b, f, &mut conv).ok()?;
    (f(root).abs() <= opts.root_tol).then_some(root)
}

/// Turns a root angle into a certified record sampled with `segments` nodes.
fn certify_angle(
    domain: &SignedDistanceField,
    angle: f64,
    dt: f64,
    t_max: f64,
    segments: usize,
    tol: &ToleranceSet,
    constants: &DomainConstants,
    m0: f64,
) -> Option<OgcRecord> {
    let shot = shoot_normal(domain, angle, dt, t_max).ok()??;
    let metric = domain.metric();
    let v = shot.velocity * shot.hit_time;
    let mut sub = 4;
    let seg = loop {
        let seg = metric.geodesic_shoot(&shot.start, &v, 1.0, segments * sub).ok()?;
        if seg.speed_drift() <= 1e-10 || sub >= 256 {
            break seg;
        }
        sub *= 2;
    };
    let nodes: Vec<Point> = (0..=segments).map(|k| seg.samples[k * sub].q).collect();
    let path = DiscretePath::new(nodes).ok()?;
    match certify_ogc(domain, &path, NodeInterval { ia: 0, ib: segments }, tol, constants, m0) {
        Ok(rec) => Some(rec),
        Err(rej) => {
            log::debug!("shot from angle {angle:.6} rejected: {rej}");
            None
        }
    }
}

/// Scans starting angles, refines every sign change of the arrival defect,
/// and certifies the resulting chords. The output is not deduplicated: each
/// chord normally appears once from each end.
pub fn find_ogcs_by_shooting(
    domain: &SignedDistanceField,
    constants: &DomainConstants,
    cfg: &FlowConfig,
    m0: f64,
) -> Result<Vec<OgcRecord>> {
    let opts = &cfg.shoot;
    let count = opts.angle_count(cfg.n_theta);
    let (dt, t_max) = schedule(boundary_length(domain)?, opts);
    let angles: Vec<f64> = (0..count).map(|i| TAU * i as f64 / count as f64).collect();
    let defects: Vec<Option<f64>> = angles
        .par_iter()
        .map(|&a| defect_at(domain, a, dt, t_max))
        .collect();
    let mut roots: Vec<f64> = (0..count)
        .filter(|&i| defects[i].is_some_and(|d| d.abs() <= opts.accept))
        .map(|i| angles[i])
        .collect();
    // brackets for the sign changes, in scan order
    let brackets: Vec<(f64, f64)> = (0..count)
        .filter_map(|i| {
            let j = (i + 1) % count;
            match (defects[i], defects[j]) {
                (Some(di), Some(dj)) if di.abs() > opts.accept && dj.abs() > opts.accept && di * dj < 0.0 => {
                    let b = if j == 0 { TAU } else { angles[j] };
                    Some((angles[i], b))
                }
                _ => None,
            }
        })
        .collect();
    let refined: Vec<f64> = brackets
        .par_iter()
        .filter_map(|&(a, b)| refine(domain, a, b, dt, t_max, opts))
        .collect();
    roots.extend(refined);
    let records: Vec<Option<OgcRecord>> = roots
        .par_iter()
        .map(|&a| certify_angle(domain, a, dt, t_max, cfg.nodes, &cfg.tol, constants, m0))
        .collect();
    Ok(records.into_iter().flatten().collect())
}

/// Polishes a flow limit into an exact chord: searches the shooting defect
/// for a root near the ray angle of the path's first node.
pub fn polish_ogc(
    domain: &SignedDistanceField,
    path: &DiscretePath,
    constants: &DomainConstants,
    cfg: &FlowConfig,
    m0: f64,
) -> Result<Option<OgcRecord>> {
    let opts = &cfg.shoot;
    let (dt, t_max) = schedule(boundary_length(domain)?, opts);
    let d = path.first() - domain.center();
    let center = d.y.atan2(d.x);
    let half = TAU / opts.angle_count(cfg.n_theta) as f64;
    let probes = 9;
    let angles: Vec<f64> = (0..probes)
        .map(|k| center - half + 2.0 * half * k as f64 / (probes - 1) as f64)
        .collect();
    let defects: Vec<Option<f64>> = angles.iter().map(|&a| defect_at(domain, a, dt, t_max)).collect();
    // the root closest to the probe center wins
    let mut best: Option<(f64, f64)> = None;
    let mut consider = |root: f64| {
        let dist = (root - center).abs();
        if best.is_none_or(|(_, d)| dist < d) {
            best = Some((root, dist));
        }
    };
    for k in 0..probes {
        match defects[k] {
            Some(dk) if dk.abs() <= opts.accept => consider(angles[k]),
            Some(dk) if k + 1 < probes => {
                if let Some(dn) = defects[k + 1] {
                    if dk * dn < 0.0 && dn.abs() > opts.accept {
                        if let Some(r) = refine(domain, angles[k], angles[k + 1], dt, t_max, opts) {
                            consider(r);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    Ok(best.and_then(|(root, _)| certify_angle(domain, root, dt, t_max, cfg.nodes, &cfg.tol, constants, m0)))
}
