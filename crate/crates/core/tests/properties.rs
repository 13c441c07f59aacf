use proptest::prelude::*;

use mergemon_core::cqed::{ladder_dispersive_shifts, CqedSystem};
use mergemon_core::dynamics::dbm_to_amplitude;
use mergemon_core::fields::{self, DeviceGeometry, RegionRole};
use mergemon_core::loss::t1_budget;
use mergemon_core::qubit::*;

fn levels(ej: f64, ec: f64, ng: f64) -> Vec<f64> {
    let p = TransmonParams::new(ej, ec).unwrap().with_ng(ng).unwrap();
    let h = build_charge_hamiltonian(&p).unwrap();
    let mut e: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e.truncate(4);
    e
}

fn named(values: &[f64]) -> Vec<(String, f64)> {
    values.iter().enumerate().map(|(i, v)| (format!("r{i}"), *v)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn offset_charge_symmetries(ratio in 1.0f64..100.0, ec in 0.1f64..0.5, ng in 0.0f64..1.0) {
        let base = levels(ratio * ec, ec, ng);
        let shifted = levels(ratio * ec, ec, ng + 1.0);
        let mirrored = levels(ratio * ec, ec, -ng);
        for ((a, b), c) in base.iter().zip(&shifted).zip(&mirrored) {
            let scale = a.abs().max(ec);
            prop_assert!((a - b).abs() < 1e-9 * scale);
            prop_assert!((a - c).abs() < 1e-9 * scale);
        }
    }

    #[test]
    fn anharmonicity_is_second_difference(ratio in 20.0f64..150.0, ec in 0.1f64..0.4, ng in 0.0f64..0.5) {
        let p = TransmonParams::new(ratio * ec, ec).unwrap().with_ng(ng).unwrap();
        let s = diagonalize(&p, 4).unwrap();
        prop_assert_eq!(s.levels[0], 0.0);
        prop_assert!((s.anharmonicity - (2.0 * s.levels[1] - s.levels[2])).abs() < 1e-12);
        prop_assert!((s.f02 - s.levels[2]).abs() < 1e-12);
        prop_assert!(s.levels.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn observables_fit_round_trips(ratio in 30.0f64..150.0, ec in 0.1f64..0.4) {
        let p = TransmonParams::new(ratio * ec, ec).unwrap();
        let s = diagonalize(&p, 3).unwrap();
        let back = fit_params_to_observables(s.f01, s.anharmonicity).unwrap();
        let again = diagonalize(&back, 3).unwrap();
        prop_assert!((again.f01 - s.f01).abs() < 1e-6);
        prop_assert!((again.anharmonicity - s.anharmonicity).abs() < 1e-6);
        prop_assert!((back.ej / p.ej - 1.0).abs() < 1e-5);
    }

    #[test]
    fn budget_invariants(
        p in prop::collection::vec(0.0f64..1.0, 1..8),
        t in prop::collection::vec(1e-8f64..1e-2, 8),
        f_q in 1.0f64..10.0,
    ) {
        let tangents = named(&t[..p.len()]);
        let a = t1_budget(&named(&p), &tangents, f_q).unwrap();
        let b = t1_budget(&named(&p), &tangents, 2.0 * f_q).unwrap();
        if a.t1_total_us.is_finite() {
            prop_assert!((a.t1_total_us / b.t1_total_us - 2.0).abs() < 1e-12);
            let inverse: f64 = a.rows.iter().map(|r| 1.0 / r.t1_us).sum();
            prop_assert!((inverse * a.t1_total_us - 1.0).abs() < 1e-12);
            let shortest = a.rows.iter().map(|r| r.t1_us).fold(f64::INFINITY, f64::min);
            prop_assert!(a.t1_total_us <= shortest);
        }
    }

    #[test]
    fn amplitude_follows_decibels(p in -40.0f64..40.0, step in 0.0f64..20.0) {
        let a = dbm_to_amplitude(p, 1e-3, 0.0).unwrap();
        let b = dbm_to_amplitude(p + step, 1e-3, 0.0).unwrap();
        prop_assert!((b / a - 10f64.powf(step / 20.0)).abs() < 1e-12 * b / a);
    }

    #[test]
    fn dispersive_shift_sign_follows_detuning(g in 0.005f64..0.05, f_r in 5.0f64..8.0) {
        let s = diagonalize(&TransmonParams::new(17.2301, 0.155973).unwrap(), 5).unwrap();
        prop_assume!((f_r - s.f01).abs() > 0.3);
        let sys = CqedSystem::new(s.clone(), f_r, g, 4).unwrap();
        let r = ladder_dispersive_shifts(&sys.qubit.ladder(), f_r, g).unwrap();
        // chi01 = g^2 / (f01 - f_r) for a two-level atom; the ladder adds
        // the 1-2 path, which can only matter when f12 sits near f_r.
        if (f_r - s.f12).abs() > 0.3 {
            prop_assert_eq!(r.chi[0] < 0.0, s.f01 < f_r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn solved_participation_is_normalized(radius in 800.0f64..3000.0, eps in 4.0f64..20.0) {
        let mut g = DeviceGeometry::table1().rescaled(radius);
        for r in &mut g.regions {
            if r.role == RegionRole::Barrier {
                r.epsilon = eps;
            }
        }
        let p = fields::simulate(&g).unwrap();
        let sum: f64 = p.iter().map(|x| x.ratio).sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        prop_assert!(p.iter().all(|x| x.ratio >= 0.0));
    }
}
