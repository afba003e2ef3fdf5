//! Multistart minimax over the chord grid of a spherical cap: every seed is
//! flowed, the landscape is summarized, and certified chords are deduplicated.

use ogc::builtins;
use ogc::chords::{ChordFamily, DiskMap};
use ogc::flow::{multistart_minimax, FlowConfig};

fn main() -> ogc::Result<()> {
    let delta0 = 0.25;
    let domain = builtins::spherical_cap(2.0).with_band(delta0);
    let constants = domain.constants(delta0)?;
    let cfg = FlowConfig {
        nodes: 128,
        n_theta: 12,
        ..FlowConfig::for_band(delta0)
    };
    let family = ChordFamily::new(DiskMap::build(&domain, delta0, None)?, cfg.n_theta, cfg.nodes);
    let m0 = family.m0()?;
    let report = multistart_minimax(&family, &cfg, &constants, m0)?;
    println!("c1_est = {:.6}, c2_est = {:.6}, r* = {:.4}", report.c1_est, report.c2_est, report.r_star);
    println!("{} seeds flowed, {} distinct chords", report.runs.len(), report.ogcs.len());
    for r in report.ogcs.iter().take(4) {
        println!(
            "  energy {:.10} from ({:.4}, {:.4}) to ({:.4}, {:.4})",
            r.energy_c, r.start.x, r.start.y, r.end.x, r.end.y
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
