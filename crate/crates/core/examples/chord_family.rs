//! The chord family of a concave disk: the disk map, chords between
//! boundary points, the constant M0, and maximal intervals of a chord.

use ogc::builtins;
use ogc::chords::{maximal_intervals, pathspace_membership, ChordFamily, DiskMap};

fn main() -> ogc::Result<()> {
    let delta0 = 0.25;
    let domain = builtins::spherical_cap(2.0).with_band(delta0);
    let family = ChordFamily::new(DiskMap::build(&domain, delta0, None)?, 16, 128);
    let m0 = family.m0()?;
    println!("M0 = {m0:.6}");

    let constants = domain.constants(delta0)?;
    for j in [1, 4, 8] {
        let chord = family.chord_at(family.theta(0), family.theta(j))?;
        let intervals = maximal_intervals(&domain, &chord)?;
        let m = pathspace_membership(&domain, &chord, m0, &constants)?;
        println!(
            "chord (0, {j}): {} maximal interval(s), member = {}, bounds hold = {}",
            intervals.len(),
            m.member,
            m.bounds_hold()
        );
    }

    let mut csv = Vec::new();
    ogc::chords::write_family_csv(&family.grid()?, &mut csv)?;
    println!("family CSV: {} rows", csv.iter().filter(|&&b| b == b'\n').count());
    Ok(())
}
