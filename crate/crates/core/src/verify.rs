//! Re-checks a run directory from its stored artifacts alone: the report is
//! read back, the domain rebuilt from the embedded scenario, and every chord
//! and orbit tested again.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::chords::{pathspace_membership, NodeInterval};
use crate::critical::certify_ogc;
use crate::error::{Error, Result};
use crate::maupertuis::{brake_orbit_verify, orbits_from_csv, BrakeOrbit};
use crate::pipeline::{chords_from_csv, scenario_domain, spot_checks, Report};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub directory: PathBuf,
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }
}

/// Verifies the run directory holding `artifact` (a run directory, its
/// `report.json`, or one of its CSV files). Unreadable or mis-versioned
/// files are errors; failed invariants are reported as failed checks.
pub fn verify_artifact(artifact: &Path) -> Result<Verification> {
    let dir = if artifact.is_dir() {
        artifact.to_path_buf()
    } else {
        artifact.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    };
    let report = Report::from_json(&std::fs::read_to_string(dir.join("report.json"))?)?;
    let chords_text = read_optional(&dir.join("ogcs.csv"))?;
    let orbits_text = read_optional(&dir.join("orbits.csv"))?;
    // surface version errors before any numerics
    let chords = chords_text.as_deref().map(chords_from_csv).transpose()?;
    let orbits = orbits_text.as_deref().map(orbits_from_csv).transpose()?;

    let mut v = Verification {
        directory: dir.clone(),
        checks: Vec::new(),
    };
    v.push("schema", true, report.schema.clone());
    let Some(constants) = report.constants else {
        v.push("concavity", report.concavity.passed, format!("delta0 = {:e}", report.concavity.delta0));
        return Ok(v);
    };
    if let Some(mm) = &report.minimax {
        v.push(
            "level_order",
            mm.c1_est <= mm.c2_est,
            format!("c1_est = {:e}, c2_est = {:e}", mm.c1_est, mm.c2_est),
        );
    }
    for o in &report.ogcs {
        v.push(
            format!("energy_floor[{}]", o.index),
            o.energy_c >= o.energy_floor,
            format!("{:e} >= {:e}", o.energy_c, o.energy_floor),
        );
    }

    let setup = scenario_domain(&report.config)?;
    let domain = setup.domain.with_band(constants.delta0);
    let dc = constants.domain_constants();
    let spot = spot_checks(&domain, constants.delta0, report.config.seed, 16)?;
    v.push(
        "normal_flow_linearity",
        spot.normal_flow_linearity <= 1e-8,
        format!("{:e}", spot.normal_flow_linearity),
    );

    match chords {
        None if !report.ogcs.is_empty() => v.push("ogcs.csv", false, "missing"),
        None => {}
        Some(paths) => {
            v.push(
                "chord_count",
                paths.len() == report.ogcs.len(),
                format!("{} stored, {} reported", paths.len(), report.ogcs.len()),
            );
            let tol = report.tolerances.unwrap_or_else(|| crate::critical::ToleranceSet::for_band(constants.delta0));
            for (i, (path, summary)) in paths.iter().zip(&report.ogcs).enumerate() {
                let iv = NodeInterval { ia: 0, ib: path.segments() };
                match certify_ogc(&domain, path, iv, &tol, &dc, f64::INFINITY) {
                    Ok(rec) => {
                        let rel = (rec.energy_c - summary.energy_c).abs() / summary.energy_c;
                        v.push(
                            format!("chord[{i}]"),
                            rel <= 1e-6,
                            format!(
                                "energy {:e} (relative change {rel:.2e}), ortho {:.2e}, geodesic {:.2e}",
                                rec.energy_c, rec.ortho_residual, rec.geo_residual
                            ),
                        );
                    }
                    Err(rej) => v.push(format!("chord[{i}]"), false, rej.to_string()),
                }
                match pathspace_membership(&domain, path, constants.m0, &dc) {
                    Ok(m) => v.push(
                        format!("path_space_bounds[{i}]"),
                        m.bounds_hold(),
                        format!("{} maximal intervals", m.intervals.len()),
                    ),
                    Err(e) => v.push(format!("path_space_bounds[{i}]"), false, e.to_string()),
                }
            }
        }
    }

    if !report.orbits.is_empty() {
        match (orbits, setup.spec) {
            (None, _) => v.push("orbits.csv", false, "missing"),
            (Some(_), None) => v.push("orbits.csv", false, "orbits stored for a geometric scenario"),
            (Some(stored), Some(spec)) => {
                v.push(
                    "orbit_count",
                    stored.len() == report.orbits.len(),
                    format!("{} stored, {} reported", stored.len(), report.orbits.len()),
                );
                for (i, samples) in stored.into_iter().enumerate() {
                    match BrakeOrbit::from_samples(samples, spec.energy) {
                        Ok(orbit) => {
                            let c = brake_orbit_verify(&spec, &orbit, &report.config.orbit_tolerances);
                            let detail = if c.passed() {
                                format!(
                                    "Hamilton residual {:.2e}, |H - E| {:.2e}, round trip {:.2e}",
                                    c.hamilton_residual, c.energy_defect, c.round_trip
                                )
                            } else {
                                c.failures.join("; ")
                            };
                            v.push(format!("orbit[{i}]"), c.passed(), detail);
                        }
                        Err(e) => v.push(format!("orbit[{i}]"), false, e.to_string()),
                    }
                }
            }
        }
    }
    Ok(v)
}

fn read_optional(path: &Path) -> Result<Option<String>> {
    match std::fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(Error::Io(e)),
    }
}
