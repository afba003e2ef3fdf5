//! End-to-end scenario runs: artifacts on disk, re-verification from those
//! artifacts alone, and the failure modes of each stage.

use std::path::PathBuf;
use std::sync::OnceLock;

use ogc::config::ScenarioConfig;
use ogc::pipeline::{run_scenario, write_artifacts, Goal, Report, ScenarioRun, REPORT_SCHEMA};
use ogc::verify::verify_artifact;
use ogc::Error;

fn scenario(file: &str) -> ScenarioConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file);
    let mut cfg = ScenarioConfig::load(path.to_str().unwrap()).unwrap();
    cfg.flow.n_theta = 12;
    cfg.flow.nodes = 96;
    cfg
}

/// The skewed polynomial problem, run once and shared.
fn polynomial_run() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| run_scenario(&scenario("polynomial.toml"), Goal::Orbits).unwrap())
}

fn written(run: &ScenarioRun) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(run, dir.path(), false).unwrap();
    dir
}

#[test]
fn cap_chords_are_diameters() {
    let run = run_scenario(&scenario("spherical_cap.toml"), Goal::Chords).unwrap();
    let r = &run.report;
    assert!(r.concavity.passed);
    assert!(!r.ogcs.is_empty());
    for o in &r.ogcs {
        assert!((o.energy_c - 8.0).abs() < 1e-4, "{}", o.energy_c);
        assert!(o.energy_c >= o.energy_floor);
    }
    let mm = r.minimax.as_ref().unwrap();
    assert!(mm.c1_est <= mm.c2_est);
    assert!(r.orbits.is_empty());

    let dir = written(&run);
    for f in ["report.json", "ogcs.csv", "trace.csv", "landscape.svg", "orbits.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    assert!(!dir.path().join("orbits.csv").exists());
    let v = verify_artifact(&dir.path().join("ogcs.csv")).unwrap();
    assert!(v.passed(), "{:?}", v.checks);
}

#[test]
fn orbit_run_verifies_from_disk() {
    let run = polynomial_run();
    assert!(run.report.orbits.len() >= 2);
    for o in &run.report.orbits {
        assert!(o.check.passed(), "{:?}", o.check.failures);
        assert!(o.sensitivity.passed);
    }
    assert!(run.report.distinctness.unwrap().passed);
    let dir = written(run);
    let v = verify_artifact(dir.path()).unwrap();
    assert!(v.passed(), "{:?}", v.checks);
    assert!(v.checks.iter().any(|c| c.name == "orbit[1]"));

    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let back = Report::from_json(&text).unwrap();
    assert_eq!(back.schema, REPORT_SCHEMA);
    assert_eq!(back.to_json().unwrap(), text);
}

#[test]
fn corrupted_orbit_samples_fail_the_hamilton_check() {
    let dir = written(polynomial_run());
    let path = dir.path().join("orbits.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    // nudge one position sample of the first orbit
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let row = 2 + 100;
    let mut f: Vec<String> = lines[row].split(',').map(String::from).collect();
    let q1: f64 = f[2].parse().unwrap();
    f[2] = format!("{:e}", q1 + 1e-3);
    lines[row] = f.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();

    let v = verify_artifact(&path).unwrap();
    assert!(!v.passed());
    let bad = v.checks.iter().find(|c| c.name == "orbit[0]").unwrap();
    assert!(!bad.passed && bad.detail.contains("Hamilton"), "{}", bad.detail);
    assert!(v.checks.iter().find(|c| c.name == "orbit[1]").unwrap().passed);
}

#[test]
fn corrupted_chord_energy_is_caught() {
    let dir = written(polynomial_run());
    let path = dir.path().join("report.json");
    let mut report = Report::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    report.ogcs[0].energy_c *= 1.01;
    std::fs::write(&path, report.to_json().unwrap()).unwrap();
    let v = verify_artifact(&path).unwrap();
    assert!(!v.checks.iter().find(|c| c.name == "chord[0]").unwrap().passed);
}

#[test]
fn unknown_format_versions_are_errors() {
    let dir = written(polynomial_run());
    let path = dir.path().join("orbits.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replacen("# ogc-orbits/1", "# ogc-orbits/2", 1)).unwrap();
    assert!(matches!(verify_artifact(&path), Err(Error::Format { .. })));

    let report = dir.path().join("report.json");
    let text = std::fs::read_to_string(&report).unwrap();
    std::fs::write(&report, text.replacen(REPORT_SCHEMA, "ogc-report/0", 1)).unwrap();
    assert!(matches!(verify_artifact(&report), Err(Error::Format { .. })));
}

#[test]
fn existing_reports_are_not_overwritten() {
    let run = run_scenario(&scenario("spherical_cap.toml"), Goal::Concavity).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_artifacts(&run, dir.path(), false).unwrap();
    assert!(write_artifacts(&run, dir.path(), false).is_err());
    write_artifacts(&run, dir.path(), true).unwrap();
}

#[test]
fn flat_disk_stops_at_the_concavity_gate() {
    let err = run_scenario(&scenario("flat_disk.toml"), Goal::Chords).err().unwrap();
    assert!(matches!(err.root(), Error::NotConcave { .. }), "{err}");
    assert!(err.to_string().starts_with("[concavity]"), "{err}");
    // the gate can be skipped, and the report says so
    let mut forced = scenario("flat_disk.toml");
    forced.force = true;
    let run = run_scenario(&forced, Goal::Concavity).unwrap();
    assert!(run.report.forced && !run.report.concavity.passed);
}

#[test]
fn half_plane_fails_at_setup() {
    let err = run_scenario(&scenario("half_plane.toml"), Goal::Concavity).err().unwrap();
    assert!(err.to_string().starts_with("[setup]"), "{err}");
    assert!(matches!(err.root(), Error::UnsupportedDomain(_)));
}

#[test]
fn geometric_scenarios_have_no_orbits() {
    let err = run_scenario(&scenario("spherical_cap.toml"), Goal::Orbits).err().unwrap();
    assert!(err.to_string().starts_with("[setup]"), "{err}");
}
