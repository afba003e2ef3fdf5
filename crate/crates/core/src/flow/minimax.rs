//! Multistart driver: flows every chord of the grid, reads minimax level
//! estimates off the deformed family, and collects certified chords.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dedupe, default_r_star, find_ogcs_by_shooting, polish_ogc, run_flow, FlowConfig, FlowStatus};
use crate::chords::ChordFamily;
use crate::critical::{CriticalKind, OgcRecord};
use crate::domain::DomainConstants;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub i: usize,
    pub j: usize,
    pub status: FlowStatus,
    pub iterations: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub max_increase: f64,
    pub membership_ok: bool,
    pub trace: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoopKind {
    /// `θ` fixed, `θ'` once around.
    Meridian,
    /// `θ' = θ + offset`, rotating the whole chord.
    Offset,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    pub kind: LoopKind,
    pub index: usize,
    pub max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimaxReport {
    /// Deduplicated certified chords, by increasing energy.
    pub ogcs: Vec<OgcRecord>,
    pub r_star: f64,
    /// Smallest loop maximum over the nontrivial loops of the grid.
    pub c1_est: f64,
    /// Largest value of the deformed family.
    pub c2_est: f64,
    /// `ℱ` of the flowed chord `(θ_i, θ_j)`.
    pub landscape: Vec<Vec<f64>>,
    pub thetas: Vec<f64>,
    pub loops: Vec<LoopSummary>,
    pub runs: Vec<RunSummary>,
    /// Lower bound for the first level when the domain is certified.
    pub level_floor: f64,
    pub warnings: Vec<String>,
}

/// Flows every off-diagonal chord of the grid, then estimates the two
/// minimax levels and gathers certified chords from shooting and from
/// polished flow limits.
///
/// Level estimates are surrogates over finitely many loops of the deformed
/// family, so only `c1_est ≤ c2_est` is guaranteed.
pub fn multistart_minimax(
    family: &ChordFamily,
    cfg: &FlowConfig,
    constants: &DomainConstants,
    m0: f64,
) -> Result<MinimaxReport> {
    let domain = family.domain();
    let n = family.n_theta;
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let outcomes: Vec<(RunSummary, Option<OgcRecord>)> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<_> {
            let seed = family.chord_at(family.theta(i), family.theta(j))?;
            let initial = super::functional_f(domain, std::slice::from_ref(&seed))?;
            let run = match run_flow(domain, &seed, cfg, constants, m0) {
                Ok(run) => run,
                Err(e) => {
                    log::warn!("flow from ({i}, {j}) failed: {e}");
                    return Ok((
                        RunSummary {
                            i,
                            j,
                            status: FlowStatus::Stagnated,
                            iterations: 0,
                            initial_energy: initial,
                            final_energy: initial,
                            max_increase: 0.0,
                            membership_ok: false,
                            trace: vec![initial],
                        },
                        None,
                    ));
                }
            };
            let regular = run.status == FlowStatus::Converged
                && run.final_energy() >= constants.energy_floor()
                && run.classifications.iter().any(|c| c.kind == CriticalKind::Regular);
            let polished = if regular {
                polish_ogc(domain, &run.path, constants, cfg, m0)?
            } else {
                None
            };
            Ok((
                RunSummary {
                    i,
                    j,
                    status: run.status,
                    iterations: run.iterations,
                    initial_energy: initial,
                    final_energy: run.final_energy(),
                    max_increase: run.max_increase(),
                    membership_ok: run.membership_ok,
                    trace: run.energy_trace,
                },
                polished,
            ))
        })
        .collect::<Result<_>>()?;

    let mut landscape = vec![vec![0.0; n]; n];
    let mut candidates = Vec::new();
    let mut runs = Vec::with_capacity(outcomes.len());
    for (run, polished) in outcomes {
        landscape[run.i][run.j] = run.final_energy;
        landscape[run.j][run.i] = run.final_energy;
        candidates.extend(polished);
        runs.push(run);
    }

    let mut loops: Vec<LoopSummary> = (0..n)
        .map(|i| LoopSummary {
            kind: LoopKind::Meridian,
            index: i,
            max: landscape[i].iter().copied().fold(0.0, f64::max),
        })
        .collect();
    for k in n / 4..=(3 * n) / 4 {
        loops.push(LoopSummary {
            kind: LoopKind::Offset,
            index: k,
            max: (0..n).map(|i| landscape[i][(i + k) % n]).fold(0.0, f64::max),
        });
    }
    let c1_est = loops.iter().map(|l| l.max).fold(f64::INFINITY, f64::min);
    let c2_est = landscape.iter().flatten().copied().fold(0.0, f64::max);

    candidates.extend(find_ogcs_by_shooting(domain, constants, cfg, m0)?);
    let r_star = default_r_star(&candidates, constants.diameter());
    let ogcs = dedupe(&candidates, r_star, cfg.tol.energy_tol);

    let level_floor = constants.first_level_floor();
    let mut warnings = Vec::new();
    if c1_est < level_floor {
        warnings.push(format!(
            "c1_est = {c1_est:.6e} is below the first-level floor {level_floor:.6e}; \
             the loop surrogate has not resolved the first level"
        ));
    }
    if ogcs.is_empty() {
        log::error!("no certified chords; landscape: {landscape:?}");
        return Err(Error::NoChords);
    }
    Ok(MinimaxReport {
        ogcs,
        r_star,
        c1_est,
        c2_est,
        landscape,
        thetas: (0..n).map(|i| family.theta(i)).collect(),
        loops,
        runs,
        level_floor,
        warnings,
    })
}
