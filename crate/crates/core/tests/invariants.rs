//! Randomized invariants on the regularized Jacobi disk of the oscillator and
//! on a family of spherical caps.

use std::f64::consts::TAU;
use std::sync::OnceLock;

use proptest::prelude::*;

use ogc::builtins;
use ogc::chords::{pathspace_membership, ChordFamily, DiskMap, NodeInterval};
use ogc::critical::{certify_ogc, ToleranceSet};
use ogc::domain::{DomainConstants, SignedDistanceField};
use ogc::flow::{run_flow, FlowConfig};
use ogc::geometry::{DiscretePath, Point};
use ogc::maupertuis::{jacobi_setup, oscillator};

const BAND: f64 = 1e-3;

struct Jacobi {
    domain: SignedDistanceField,
    constants: DomainConstants,
    family: ChordFamily,
    m0: f64,
}

fn jacobi() -> &'static Jacobi {
    static CELL: OnceLock<Jacobi> = OnceLock::new();
    CELL.get_or_init(|| {
        let problem = jacobi_setup(&oscillator(1.0, 2f64.sqrt(), 1.0), 0.05, 3.0).unwrap();
        let domain = problem.domain.with_band(BAND);
        let constants = domain.constants(BAND).unwrap();
        let family = ChordFamily::new(DiskMap::build(&domain, BAND, None).unwrap(), 16, 64);
        let m0 = family.m0().unwrap();
        Jacobi {
            domain,
            constants,
            family,
            m0,
        }
    })
}

/// A diameter of the cap of radius `r0` through ray angle `a`, at uniform
/// spherical speed, in the stereographic chart where `ρ = tan(r / 2)`.
fn cap_diameter(r0: f64, a: f64, n: usize) -> DiscretePath {
    let dir = Point::new(a.cos(), a.sin());
    DiscretePath::from_fn(n, |s| {
        let r = r0 * (2.0 * s - 1.0);
        dir * (0.5 * r).tan()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn normal_flows_shift_the_jacobi_level_linearly(theta in 0.0..TAU, depth in 0.0..BAND, frac in 0.0..1.0f64, outward: bool) {
        let j = jacobi();
        let b = j.domain.boundary_point(theta).unwrap();
        let x = j.domain.normal_flow(&b, depth, false).unwrap();
        let (tau, sign) = if outward { (frac * depth, 1.0) } else { (frac * (BAND - depth), -1.0) };
        let y = j.domain.normal_flow(&x, tau, outward).unwrap();
        prop_assert!((j.domain.phi(&y) - (j.domain.phi(&x) + sign * tau)).abs() <= 1e-8);
    }

    #[test]
    fn curvature_identity_holds_on_the_jacobi_boundary(theta in 0.0..TAU, scale in 0.1..4.0f64) {
        let d = &jacobi().domain;
        let x = d.boundary_point(theta).unwrap();
        let v = d.level_tangent(&x).unwrap() * scale;
        let n = d.grad(&x).unwrap();
        let ii = d.second_fundamental_form(&x, &v, &n).unwrap().value;
        let h = d.hessian_quadratic(&x, &v).unwrap();
        prop_assert!((ii + h).abs() <= 1e-6 * (1.0 + h.abs()), "II = {ii}, H = {h}");
        // strong concavity on the boundary
        prop_assert!(h < 0.0);
    }

    #[test]
    fn jacobi_flow_descends_inside_the_path_space(i in 0usize..16, gap in 1usize..15) {
        let j = jacobi();
        let x = j.family.chord_at(j.family.theta(i), j.family.theta((i + gap) % 16)).unwrap();
        let cfg = FlowConfig { max_iter: 3, nodes: 64, ..FlowConfig::for_band(BAND) };
        let run = run_flow(&j.domain, &x, &cfg, &j.constants, j.m0).unwrap();
        prop_assert!(run.max_increase() <= 1e-9, "rise {}", run.max_increase());
        prop_assert!(run.membership_ok);
        let m = pathspace_membership(&j.domain, &run.path, j.m0, &j.constants).unwrap();
        prop_assert!(m.bounds_hold());
    }

    #[test]
    fn certified_cap_diameters_clear_the_energy_floor(r0 in 1.9..2.6f64, a in 0.0..TAU) {
        let delta0 = 0.25;
        let domain = builtins::spherical_cap(r0).with_band(delta0);
        let constants = domain.constants(delta0).unwrap();
        let x = cap_diameter(r0, a, 64);
        let rec = certify_ogc(&domain, &x, NodeInterval { ia: 0, ib: 64 }, &ToleranceSet::for_band(delta0), &constants, f64::INFINITY).unwrap();
        prop_assert!(rec.energy_c >= constants.energy_floor());
        prop_assert!((rec.energy_c - 2.0 * r0 * r0).abs() <= 1e-6 * r0 * r0);
    }
}
