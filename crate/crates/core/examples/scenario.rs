//! Run a scenario file end to end, write its artifacts, and verify them.
//!
//! `cargo run --release --example scenario -- configs/oscillator.toml out/oscillator`

use std::path::PathBuf;

use ogc::config::ScenarioConfig;
use ogc::pipeline::{run_scenario, write_artifacts, Goal};
use ogc::verify::verify_artifact;

fn main() -> ogc::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().unwrap_or_else(|| "builtin:spherical_cap".into());
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out/scenario".into()));
    let cfg = ScenarioConfig::load(&config)?;
    let goal = if cfg.problem.is_hamiltonian() { Goal::Orbits } else { Goal::Chords };
    let run = run_scenario(&cfg, goal)?;
    for path in write_artifacts(&run, &out, true)? {
        println!("wrote {}", path.display());
    }
    let v = verify_artifact(&out)?;
    let failed: Vec<_> = v.checks.iter().filter(|c| !c.passed).collect();
    println!("{} checks, {} failed", v.checks.len(), failed.len());
    for c in failed {
        println!("  {}: {}", c.name, c.detail);
    }
    Ok(())
}
