//! Certify strong concavity: the spherical cap of radius 2 passes with a
//! band around its boundary, the flat disk fails on the boundary itself.

use ogc::builtins;
use ogc::domain::ScanOptions;
use ogc::geometry::Point;

fn main() -> ogc::Result<()> {
    let opts = ScanOptions::default();
    for (name, domain, max_band) in [
        ("spherical cap r0 = 2", builtins::spherical_cap(2.0), 0.25),
        ("flat unit disk", builtins::flat_disk(), 0.25),
    ] {
        let report = domain.concavity_scan(max_band, &opts)?;
        println!("{name}: passed = {}, band = {}", report.passed, report.delta0);
        println!("  worst tangential Hessian of phi: {:.6}", report.worst_margin);
        for w in report.witnesses.iter().take(2) {
            println!("  witness at ({:.4}, {:.4}): {:.6}", w.point.x, w.point.y, w.value);
        }
        if report.passed {
            let c = domain.constants(report.delta0)?;
            println!("  K0 = {:.6}, energy floor = {:.3e}", c.k0, c.energy_floor());
        }
    }

    // the normal flows move phi linearly
    let cap = builtins::spherical_cap(2.0).with_band(0.25);
    let x = cap.normal_flow(&cap.boundary_point(1.0)?, 0.1, false)?;
    let y = cap.normal_flow(&x, 0.05, true)?;
    println!("phi: {:.12} -> {:.12}", cap.phi(&x), cap.phi(&y));
    println!("chart center phi = {:.6}", cap.phi(&Point::zeros()));
    Ok(())
}
