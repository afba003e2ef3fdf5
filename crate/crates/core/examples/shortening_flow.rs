//! The discrete shortening flow on the oscillator's Jacobi disk. The straight
//! long axis is a critical chord and the flow settles on it; a generic seed
//! from the chord family slides off and shrinks to a point.

use ogc::chords::{ChordFamily, DiskMap};
use ogc::flow::{polish_ogc, run_flow, FlowConfig, FlowResult};
use ogc::geometry::{DiscretePath, Point};
use ogc::maupertuis::{jacobi_setup, oscillator};

fn show(name: &str, run: &FlowResult) {
    println!(
        "{name}: {:?} after {} iterations, F {:.6} -> {:.6}, largest rise {:.1e}",
        run.status,
        run.iterations,
        run.energy_trace[0],
        run.final_energy(),
        run.max_increase()
    );
    for c in &run.classifications {
        println!("  interval {:?}: {:?}", c.interval, c.kind);
    }
}

fn main() -> ogc::Result<()> {
    let delta0 = 0.0026;
    let problem = jacobi_setup(&oscillator(1.0, std::f64::consts::SQRT_2, 1.0), 0.05, 3.0)?;
    let domain = problem.domain.with_band(delta0);
    let constants = domain.constants(delta0)?;
    let cfg = FlowConfig {
        nodes: 128,
        n_theta: 16,
        ..FlowConfig::for_band(delta0)
    };
    let family = ChordFamily::new(DiskMap::build(&domain, delta0, None)?, cfg.n_theta, cfg.nodes);
    let m0 = family.m0()?;

    let a = 0.95f64.sqrt();
    let axis = DiscretePath::from_fn(cfg.nodes, |s| Point::new(a * (2.0 * s - 1.0), 0.0))?;
    let run = run_flow(&domain, &axis, &cfg, &constants, m0)?;
    show("long axis", &run);
    if let Some(rec) = polish_ogc(&domain, &run.path, &constants, &cfg, m0)? {
        println!("  polished chord: energy {:.10}, ortho {:.1e}", rec.energy_c, rec.ortho_residual);
    }

    let seed = family.chord_at(family.theta(1), family.theta(6))?;
    show("family seed (1, 6)", &run_flow(&domain, &seed, &cfg, &constants, m0)?);
    Ok(())
}
