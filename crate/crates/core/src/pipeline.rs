//! Scenario driver: concavity gate, domain constants, chord family,
//! multistart minimax and, for Hamiltonians, brake orbits. Produces the
//! `report.json` document and the CSV/SVG artifacts next to it.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chords::{DiskMap, ChordFamily};
use crate::config::{Mode, ScenarioConfig};
use crate::critical::{OgcRecord, ToleranceSet};
use crate::domain::{ConcavityReport, DomainConstants, SignedDistanceField};
use crate::error::{Error, Result};
use crate::flow::{multistart_minimax, LoopSummary, MinimaxReport};
use crate::geometry::{DiscretePath, Point};
use crate::maupertuis::{
    brake_orbit_verify, default_eps_reg, jacobi_setup, ogc_to_brake_orbit, orbit_image_distance, orbits_to_csv,
    sensitivity_check, BrakeOrbit, HamiltonianSpec, HillRegion, OrbitCheck, Reconstruction, Sensitivity,
};
use crate::svg;

pub const REPORT_SCHEMA: &str = "ogc-report/1";
pub const CHORDS_CSV_HEADER: &str = "# ogc-chords/1";
pub const TRACE_CSV_HEADER: &str = "# ogc-trace/1";

/// How far a run goes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Concavity,
    Chords,
    Orbits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Setup,
    Concavity,
    Constants,
    Family,
    Minimax,
    Orbits,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Setup => "setup",
            Stage::Concavity => "concavity",
            Stage::Constants => "constants",
            Stage::Family => "family",
            Stage::Minimax => "minimax",
            Stage::Orbits => "orbits",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsSummary {
    pub delta0: f64,
    pub k0: f64,
    pub m0: f64,
    pub energy_floor: f64,
    pub first_level_floor: f64,
    pub diameter: f64,
    pub bounds_min: Point,
    pub bounds_max: Point,
}

impl ConstantsSummary {
    pub fn domain_constants(&self) -> DomainConstants {
        DomainConstants {
            delta0: self.delta0,
            k0: self.k0,
            bounds_min: self.bounds_min,
            bounds_max: self.bounds_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub total: usize,
    pub converged: usize,
    pub max_iterations: usize,
    pub stagnated: usize,
    /// Largest single-step rise of `ℱ` over all runs.
    pub max_increase: f64,
    pub membership_failures: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxSummary {
    pub c1_est: f64,
    pub c2_est: f64,
    pub r_star: f64,
    pub level_floor: f64,
    pub thetas: Vec<f64>,
    pub landscape: Vec<Vec<f64>>,
    pub loops: Vec<LoopSummary>,
    pub runs: RunStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OgcSummary {
    pub index: usize,
    pub energy_c: f64,
    pub length: f64,
    pub start: Point,
    pub end: Point,
    pub ortho_residual: f64,
    pub geo_residual: f64,
    pub wogc: bool,
    pub deep_dip: bool,
    pub energy_floor: f64,
}

impl OgcSummary {
    fn of(index: usize, r: &OgcRecord) -> Self {
        Self {
            index,
            energy_c: r.energy_c,
            length: r.length(),
            start: r.start,
            end: r.end,
            ortho_residual: r.ortho_residual,
            geo_residual: r.geo_residual,
            wogc: r.wogc,
            deep_dip: r.deep_dip,
            energy_floor: r.energy_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitSummary {
    pub ogc: usize,
    pub half_period: f64,
    pub energy: f64,
    pub brake_points: [Point; 2],
    pub reconstruction: Reconstruction,
    pub check: OrbitCheck,
    pub sensitivity: Sensitivity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distinctness {
    pub r_star: f64,
    /// Smallest Hausdorff distance between two orbit images.
    pub min_image_distance: f64,
    pub passed: bool,
}

/// Seeded samples of the invariants that do not depend on the minimax.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpotChecks {
    pub samples: usize,
    /// `max |φ(η±(τ, x)) - (φ(x) ± τ)|` at points of the band.
    pub normal_flow_linearity: f64,
    /// `max |II_∇φ(v, v) + H^φ(v, v)|` at boundary points, for unit `v`.
    pub curvature_consistency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub goal: Goal,
    /// The scenario as run, without its output directory.
    pub config: ScenarioConfig,
    pub eps_reg: Option<f64>,
    pub hill: Option<HillRegion>,
    pub concavity: ConcavityReport,
    pub forced: bool,
    pub constants: Option<ConstantsSummary>,
    pub tolerances: Option<ToleranceSet>,
    pub spot_checks: Option<SpotChecks>,
    pub minimax: Option<MinimaxSummary>,
    pub ogcs: Vec<OgcSummary>,
    pub orbits: Vec<OrbitSummary>,
    pub distinctness: Option<Distinctness>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value.get("schema").and_then(|s| s.as_str()).unwrap_or("<missing>");
        if found != REPORT_SCHEMA {
            return Err(Error::Format {
                expected: REPORT_SCHEMA.into(),
                found: found.into(),
            });
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// A scenario's domain, rebuilt from its configuration.
#[derive(Clone, Debug)]
pub struct ScenarioDomain {
    pub domain: SignedDistanceField,
    pub spec: Option<HamiltonianSpec>,
    pub hill: Option<HillRegion>,
    pub eps_reg: Option<f64>,
    /// Largest concavity band the scan may certify.
    pub max_band: f64,
}

pub fn scenario_domain(cfg: &ScenarioConfig) -> Result<ScenarioDomain> {
    match cfg.mode {
        Mode::Hamiltonian => {
            let spec = cfg.hamiltonian()?;
            let eps = cfg.eps_reg.unwrap_or_else(|| default_eps_reg(&spec));
            let problem = jacobi_setup(&spec, eps, cfg.reach)?;
            Ok(ScenarioDomain {
                max_band: cfg.concavity.max_band.unwrap_or(problem.hill.band_hint),
                domain: problem.domain,
                spec: Some(spec),
                hill: Some(problem.hill),
                eps_reg: Some(eps),
            })
        }
        Mode::Geometric => {
            let domain = cfg.geometric_domain()?;
            // fail early on unbounded domains
            domain.boundary_samples(8)?;
            Ok(ScenarioDomain {
                domain,
                spec: None,
                hill: None,
                eps_reg: None,
                max_band: cfg.concavity.max_band.unwrap_or(0.5),
            })
        }
    }
}

/// Everything a run produced, before it is written out.
#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub report: Report,
    pub domain: SignedDistanceField,
    pub minimax: Option<MinimaxReport>,
    pub orbits: Vec<BrakeOrbit>,
}

pub fn spot_checks(domain: &SignedDistanceField, delta0: f64, seed: u64, samples: usize) -> Result<SpotChecks> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut linearity: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    for _ in 0..samples {
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let depth = rng.gen_range(0.0..delta0);
        let b = domain.boundary_point(theta)?;
        let x = domain.normal_flow(&b, depth, false)?;
        let tau = rng.gen_range(0.0..1.0) * (delta0 - depth);
        let inward = domain.normal_flow(&x, tau, false)?;
        let rise = depth * rng.gen_range(0.0..1.0);
        let outward = domain.normal_flow(&x, rise, true)?;
        let fx = domain.phi(&x);
        linearity = linearity.max((domain.phi(&inward) - (fx - tau)).abs());
        linearity = linearity.max((domain.phi(&outward) - (fx + rise)).abs());
        let t = domain.level_tangent(&b)?;
        let n = domain.grad(&b)?;
        let ii = domain.second_fundamental_form(&b, &t, &n)?.value;
        curvature = curvature.max((ii + domain.hessian_quadratic(&b, &t)?).abs());
    }
    Ok(SpotChecks {
        samples,
        normal_flow_linearity: linearity,
        curvature_consistency: curvature,
    })
}

/// Runs a scenario up to `goal`. Failures carry the stage they occurred in.
pub fn run_scenario(cfg: &ScenarioConfig, goal: Goal) -> Result<ScenarioRun> {
    cfg.validate().stage(Stage::Setup)?;
    if goal == Goal::Orbits && cfg.mode != Mode::Hamiltonian {
        return Err(Error::Config("brake orbits need a Hamiltonian problem".into())).stage(Stage::Setup);
    }
    let setup = scenario_domain(cfg).stage(Stage::Setup)?;
    let mut warnings = Vec::new();
    let concavity = setup
        .domain
        .concavity_scan(setup.max_band, &cfg.concavity.scan)
        .stage(Stage::Concavity)?;
    if !concavity.passed {
        if !cfg.force {
            return Err(Error::NotConcave {
                worst_margin: concavity.worst_margin,
            })
            .stage(Stage::Concavity);
        }
        warnings.push(format!(
            "concavity gate skipped: worst margin {:.4e}; using band {}",
            concavity.worst_margin,
            0.5 * setup.max_band
        ));
    }
    let mut report_cfg = cfg.clone();
    report_cfg.output = None;
    let mut report = Report {
        schema: REPORT_SCHEMA.into(),
        goal,
        config: report_cfg,
        eps_reg: setup.eps_reg,
        hill: setup.hill,
        concavity: concavity.clone(),
        forced: !concavity.passed,
        constants: None,
        tolerances: None,
        spot_checks: None,
        minimax: None,
        ogcs: Vec::new(),
        orbits: Vec::new(),
        distinctness: None,
        warnings,
    };
    if goal == Goal::Concavity {
        return Ok(ScenarioRun {
            report,
            domain: setup.domain,
            minimax: None,
            orbits: Vec::new(),
        });
    }

    let delta0 = if concavity.passed { concavity.delta0 } else { 0.5 * setup.max_band };
    let domain = setup.domain.clone().with_band(delta0);
    let constants = domain.constants(delta0).stage(Stage::Constants)?;
    let tol = cfg.tolerances.unwrap_or_else(|| ToleranceSet::for_band(delta0));
    tol.validate(delta0).stage(Stage::Constants)?;
    let mut flow = cfg.flow;
    flow.tol = tol;
    flow.validate(delta0).stage(Stage::Constants)?;
    report.tolerances = Some(tol);
    report.spot_checks = Some(spot_checks(&domain, delta0, cfg.seed, 64).stage(Stage::Constants)?);

    let disk = DiskMap::build(&domain, delta0, None).stage(Stage::Family)?;
    let family = ChordFamily::new(disk, flow.n_theta, flow.nodes);
    let m0 = family.m0().stage(Stage::Family)?;
    report.constants = Some(ConstantsSummary {
        delta0,
        k0: constants.k0,
        m0,
        energy_floor: constants.energy_floor(),
        first_level_floor: constants.first_level_floor(),
        diameter: constants.diameter(),
        bounds_min: constants.bounds_min,
        bounds_max: constants.bounds_max,
    });

    let mm = multistart_minimax(&family, &flow, &constants, m0).stage(Stage::Minimax)?;
    let runs = RunStats {
        total: mm.runs.len(),
        converged: mm.runs.iter().filter(|r| r.status == crate::flow::FlowStatus::Converged).count(),
        max_iterations: mm.runs.iter().filter(|r| r.status == crate::flow::FlowStatus::MaxIterations).count(),
        stagnated: mm.runs.iter().filter(|r| r.status == crate::flow::FlowStatus::Stagnated).count(),
        max_increase: mm.runs.iter().map(|r| r.max_increase).fold(0.0, f64::max),
        membership_failures: mm.runs.iter().filter(|r| !r.membership_ok).count(),
    };
    report.minimax = Some(MinimaxSummary {
        c1_est: mm.c1_est,
        c2_est: mm.c2_est,
        r_star: mm.r_star,
        level_floor: mm.level_floor,
        thetas: mm.thetas.clone(),
        landscape: mm.landscape.clone(),
        loops: mm.loops.clone(),
        runs,
    });
    report.ogcs = mm.ogcs.iter().enumerate().map(|(i, r)| OgcSummary::of(i, r)).collect();
    report.warnings.extend(mm.warnings.iter().cloned());

    let mut orbits = Vec::new();
    if goal == Goal::Orbits {
        let spec = setup.spec.as_ref().expect("hamiltonian mode has a spec");
        let eps = setup.eps_reg.expect("hamiltonian mode has a regularization");
        let built: Vec<(BrakeOrbit, OrbitCheck, Sensitivity)> = mm
            .ogcs
            .par_iter()
            .map(|ogc| -> Result<_> {
                let orbit = ogc_to_brake_orbit(spec, ogc, eps, &cfg.orbits)?;
                let check = brake_orbit_verify(spec, &orbit, &cfg.orbit_tolerances);
                let sens = sensitivity_check(spec, ogc, &orbit, eps, cfg.reach, delta0, &flow, &cfg.orbits)?;
                Ok((orbit, check, sens))
            })
            .collect::<Result<_>>()
            .stage(Stage::Orbits)?;
        for (i, (orbit, check, sensitivity)) in built.into_iter().enumerate() {
            if !check.passed() {
                report.warnings.push(format!("orbit {i}: {}", check.failures.join("; ")));
            }
            if !sensitivity.passed {
                report.warnings.push(format!(
                    "orbit {i}: brake points move by {:.3e} when the regularization is halved",
                    sensitivity.brake_shift
                ));
            }
            report.orbits.push(OrbitSummary {
                ogc: i,
                half_period: orbit.half_period,
                energy: orbit.energy,
                brake_points: orbit.brake_points,
                reconstruction: orbit.reconstruction.expect("reconstructed orbits carry diagnostics"),
                check,
                sensitivity,
            });
            orbits.push(orbit);
        }
        let mut min_distance = f64::INFINITY;
        for a in 0..orbits.len() {
            for b in a + 1..orbits.len() {
                min_distance = min_distance.min(orbit_image_distance(&orbits[a], &orbits[b]));
            }
        }
        report.distinctness = Some(Distinctness {
            r_star: mm.r_star,
            min_image_distance: min_distance,
            passed: min_distance > mm.r_star,
        });
    }
    Ok(ScenarioRun {
        report,
        domain,
        minimax: Some(mm),
        orbits,
    })
}

/// One row per chord node: `ogc,node,s,q1,q2`.
pub fn chords_to_csv(ogcs: &[OgcRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CHORDS_CSV_HEADER}");
    let _ = writeln!(out, "ogc,node,s,q1,q2");
    for (i, r) in ogcs.iter().enumerate() {
        for (k, q) in r.path.nodes().iter().enumerate() {
            let _ = writeln!(out, "{i},{k},{:e},{:e},{:e}", r.path.param(k), q.x, q.y);
        }
    }
    out
}

pub fn chords_from_csv(text: &str) -> Result<Vec<DiscretePath>> {
    let mut lines = text.lines();
    let version = lines.next().unwrap_or("").trim();
    if version != CHORDS_CSV_HEADER {
        return Err(Error::Format {
            expected: CHORDS_CSV_HEADER.into(),
            found: version.into(),
        });
    }
    if lines.next().map(str::trim) != Some("ogc,node,s,q1,q2") {
        return Err(Error::Shape("unexpected chord columns".into()));
    }
    let mut chords: Vec<Vec<Point>> = Vec::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let bad = || Error::Shape(format!("chord row {line:?}"));
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 5 {
            return Err(bad());
        }
        let i: usize = f[0].parse().map_err(|_| bad())?;
        let x: f64 = f[3].parse().map_err(|_| bad())?;
        let y: f64 = f[4].parse().map_err(|_| bad())?;
        if i > chords.len() {
            return Err(bad());
        }
        if i == chords.len() {
            chords.push(Vec::new());
        }
        chords[i].push(Point::new(x, y));
    }
    chords.into_iter().map(DiscretePath::new).collect()
}

/// One row per flow iteration of every seed: `i,j,iteration,energy`.
pub fn trace_to_csv(mm: &MinimaxReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{TRACE_CSV_HEADER}");
    let _ = writeln!(out, "i,j,iteration,energy");
    for r in &mm.runs {
        for (k, e) in r.trace.iter().enumerate() {
            let _ = writeln!(out, "{},{},{k},{e:e}", r.i, r.j);
        }
    }
    out
}

/// Writes the run's artifacts into `dir` and returns their paths. An
/// existing `report.json` is only replaced when `overwrite` is set.
pub fn write_artifacts(run: &ScenarioRun, dir: &Path, overwrite: bool) -> Result<Vec<PathBuf>> {
    let write = || -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let report_path = dir.join("report.json");
        if report_path.exists() && !overwrite {
            return Err(Error::Config(format!(
                "{} exists; pass --force to overwrite",
                report_path.display()
            )));
        }
        let mut files = vec![(report_path, run.report.to_json()?)];
        if let Some(mm) = &run.minimax {
            files.push((dir.join("ogcs.csv"), chords_to_csv(&mm.ogcs)));
            files.push((dir.join("trace.csv"), trace_to_csv(mm)));
            files.push((dir.join("landscape.svg"), svg::landscape(&mm.thetas, &mm.landscape)));
            let delta0 = run.report.constants.map_or(0.0, |c| c.delta0);
            files.push((dir.join("orbits.svg"), svg::configuration(&run.domain, delta0, &mm.ogcs, &run.orbits)?));
        }
        if !run.orbits.is_empty() {
            files.push((dir.join("orbits.csv"), orbits_to_csv(&run.orbits)));
        }
        let mut written = Vec::new();
        for (path, text) in files {
            std::fs::write(&path, text)?;
            written.push(path);
        }
        Ok(written)
    };
    write().stage(Stage::Output)
}
