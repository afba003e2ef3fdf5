//! Brake orbits of the anisotropic oscillator H = |p|²/2 + q1² + 2 q2² at
//! E = 1, rebuilt from the orthogonal chords of its Jacobi disk and checked
//! against the closed form q(t) = A cos(ω t).

use std::f64::consts::{PI, SQRT_2};

use ogc::flow::{dedupe, default_r_star, find_ogcs_by_shooting, FlowConfig};
use ogc::maupertuis::{
    brake_orbit_verify, jacobi_setup, ogc_to_brake_orbit, oscillator, OrbitOptions, OrbitTolerances,
};

fn main() -> ogc::Result<()> {
    let (delta0, eps) = (0.0026, 0.05);
    let spec = oscillator(1.0, SQRT_2, 1.0);
    let problem = jacobi_setup(&spec, eps, 3.0)?;
    let domain = problem.domain.with_band(delta0);
    let constants = domain.constants(delta0)?;
    let cfg = FlowConfig::for_band(delta0);
    let found = find_ogcs_by_shooting(&domain, &constants, &cfg, f64::INFINITY)?;
    let chords = dedupe(&found, default_r_star(&found, constants.diameter()), cfg.tol.energy_tol);

    for ogc in &chords {
        let orbit = ogc_to_brake_orbit(&spec, ogc, eps, &OrbitOptions::default())?;
        let check = brake_orbit_verify(&spec, &orbit, &OrbitTolerances::default());
        let r = orbit.reconstruction.expect("fresh orbits carry diagnostics");
        println!(
            "brake points ({:.6}, {:.6}) and ({:.6}, {:.6}), T = {:.10}",
            orbit.brake_points[0].x, orbit.brake_points[0].y, orbit.brake_points[1].x, orbit.brake_points[1].y,
            orbit.half_period
        );
        println!("  Jacobi energy of the full chord {:.10}", r.full_energy);
        println!("  |H - E| {:.1e}, |p(T)| {:.1e}, round trip {:.1e}", check.energy_defect, check.brake_residuals[1], check.round_trip);
    }
    println!("closed form: T = {:.10} and {:.10}", PI / SQRT_2, PI / 2.0);
    println!("closed form: energies {:.10} and {:.10}", PI * PI / 16.0, PI * PI / 32.0);
    Ok(())
}
