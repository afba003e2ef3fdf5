use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ogc::config::ScenarioConfig;
use ogc::pipeline::{run_scenario, write_artifacts, Goal};
use ogc::verify::verify_artifact;
use ogc::Error;

#[derive(Parser)]
#[command(version, about = "Orthogonal geodesic chords and brake orbits")]
struct Cli {
    /// Scenario file, or `builtin:<name>`.
    #[arg(long, global = true, default_value = "builtin:oscillator")]
    config: String,
    /// Output directory; defaults to the scenario's `output`, then `out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Skip the concavity gate and overwrite existing artifacts.
    #[arg(long, global = true)]
    force: bool,
    #[arg(long, global = true)]
    n_theta: Option<usize>,
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify strong concavity of the domain.
    CheckConcavity,
    /// Run the minimax search for orthogonal geodesic chords.
    FindOgcs,
    /// Find chords and rebuild the brake orbits they encode.
    BrakeOrbits,
    /// Re-check the run directory holding an artifact.
    Verify { artifact: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::NotConcave { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Verify { artifact } = &cli.command {
        return match verify_artifact(artifact) {
            Ok(v) => {
                for c in &v.checks {
                    println!("{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
                }
                if v.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        };
    }
    let mut cfg = match ScenarioConfig::load(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: [config] {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.force |= cli.force;
    if let Some(n) = cli.n_theta {
        cfg.flow.n_theta = n;
    }
    if let Some(n) = cli.nodes {
        cfg.flow.nodes = n;
    }
    let goal = match cli.command {
        Command::CheckConcavity => Goal::Concavity,
        Command::FindOgcs => Goal::Chords,
        Command::BrakeOrbits => Goal::Orbits,
        Command::Verify { .. } => unreachable!(),
    };
    let out = cli
        .out
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = run_scenario(&cfg, goal).and_then(|run| {
        let files = write_artifacts(&run, &out, cfg.force)?;
        Ok((run, files))
    });
    match result {
        Ok((run, files)) => {
            let r = &run.report;
            println!("concavity: passed = {}, delta0 = {:e}", r.concavity.passed, r.concavity.delta0);
            if let Some(mm) = &r.minimax {
                println!("levels: c1_est = {:e}, c2_est = {:e}", mm.c1_est, mm.c2_est);
            }
            for o in &r.ogcs {
                println!("chord {}: energy {:.10}, ortho {:.1e}", o.index, o.energy_c, o.ortho_residual);
            }
            for o in &r.orbits {
                println!(
                    "orbit {}: T = {:.10}, full energy {:.10}, verified = {}",
                    o.ogc,
                    o.half_period,
                    o.reconstruction.full_energy,
                    o.check.passed()
                );
            }
            for w in &r.warnings {
                println!("warning: {w}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
