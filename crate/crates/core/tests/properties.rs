//! Property tests of the invariants across modules.

use fks_core::constants::ModelParams;
use fks_core::dynamics::{run, SolverConfig};
use fks_core::torus::{frac_laplacian, random_trig, SingularOracle, TorusGrid};
use fks_core::verifier::{certify_sign_v, certify_thm1, certify_trajectory, Status, Tolerance};
use proptest::prelude::*;

fn grid(d: usize) -> TorusGrid {
    TorusGrid::new(d, if d == 1 { 32 } else { 16 }).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn singular_integral_matches_multiplier(
        seed in 0u64..100_000,
        two_d in any::<bool>(),
        alpha in prop::sample::select(vec![0.5, 1.0, 1.5]),
        node_seed in 0u64..1000,
    ) {
        let g = grid(if two_d { 2 } else { 1 });
        let kmax = (g.n() / 4) as i64;
        let f = random_trig(g, kmax, 6, 1.0, seed);
        let oracle = SingularOracle::new(g.d(), alpha, kmax as f64 * (g.d() as f64).sqrt()).unwrap();
        let spectral = frac_laplacian(&f, alpha).unwrap();
        let nodes: Vec<usize> = (0..16).map(|i| ((node_seed + 97 * i) as usize * 31) % g.len()).collect();
        let singular = oracle.apply_nodes(&f, &nodes).unwrap();
        let scale = 1.0 + spectral.max_abs();
        for (k, &node) in nodes.iter().enumerate() {
            prop_assert!((singular[k] - spectral.values()[node]).abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn sigma_outside_unit_interval_is_flagged(
        d in 1usize..=2,
        alpha in 0.05f64..1.95,
        chi in 0.1f64..5.0,
        r_frac in 0.05f64..0.95,
        eps_frac in 0.05f64..0.95,
    ) {
        let r = chi * r_frac;
        let m = ModelParams::new(d, alpha, chi, r, r * eps_frac).unwrap();
        let covered = m.is_supercritical() && m.sigma_in_unit_interval();
        prop_assert_eq!(m.bound_hypothesis_failures().is_empty(), covered);
    }

    #[test]
    fn tolerance_rule(bound in -1e3f64..1e3, excess in -1e-3f64..1e-3) {
        let t = Tolerance::default();
        let q = bound + excess;
        prop_assert_eq!(t.accepts(bound, q), q <= bound + 1e-6 * bound.abs() + 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn supercritical_runs_respect_sign_and_bounds(seed in 0u64..10_000, two_d in any::<bool>()) {
        let d = if two_d { 2 } else { 1 };
        let g = grid(d);
        let u0 = random_trig(g, 3, 5, 0.7, seed).map(|w| w * w);
        let m = ModelParams::new(d, 1.5, 1.0, 0.6, 0.1).unwrap();
        let mut cfg = SolverConfig::new(g, m, 1.0);
        cfg.dt = Some(5e-3);
        cfg.record_every = 4;
        let traj = run(&u0, &cfg).unwrap();
        prop_assert!(traj.completed());
        for r in &traj.records {
            prop_assert!(r.min_u >= -1e-10 * r.linf || r.flags.iter().any(|f| f.label() == "negativity_breach"));
        }
        for c in certify_sign_v(&traj) {
            prop_assert_eq!(c.status, Status::Pass, "{}", c.label());
        }
        let thm1 = certify_thm1(&traj);
        prop_assert!(thm1[0].passed() || thm1[0].status == Status::OutsideHypotheses);
        // certificates are pure functions of the trajectory
        prop_assert_eq!(certify_trajectory(&traj), certify_trajectory(&traj));
    }

    #[test]
    fn constant_data_keep_nonzero_modes_at_zero(c in 0.01f64..5.0, two_d in any::<bool>()) {
        let g = grid(if two_d { 2 } else { 1 });
        let m = ModelParams::new(g.d(), 1.0, 1.0, 0.6, 0.1).unwrap();
        let mut cfg = SolverConfig::new(g, m, 0.5);
        cfg.dt = Some(1e-2);
        let traj = run(&fks_core::Field::constant(g, c), &cfg).unwrap();
        let spec = traj.final_state.transform().unwrap();
        for (i, z) in spec.coeffs().iter().enumerate() {
            if g.k_squared(i) > 0.0 {
                prop_assert_eq!(z.norm(), 0.0);
            }
        }
    }
}
