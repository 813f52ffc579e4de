use approx::assert_relative_eq;
use proptest::prelude::*;

use polyrad::analysis::{check_signs, estimate_dm, AnalysisConfig, Status};
use polyrad::io::{parse_profile, profile_csv};
use polyrad::kinematics::{det2, det_value, gradient_map_at, null_lagrangian_check, RadialProfile};
use polyrad::mesh::{graded_mesh, graded_mesh_with_origin};
use polyrad::ode::{c_m, ddot_closed_form, rddot_explicit, window_roots, zdot_closed_form, OdeState};
use polyrad::penalty::{smooth_step, PenaltySpec};

fn any_spec() -> impl Strategy<Value = PenaltySpec> {
    (0.1f64..10.0, 0.05f64..2.0, prop::option::of(0.05f64..0.95)).prop_map(|(g, s0, frac)| match frac {
        Some(f) => PenaltySpec::delayed(g, s0, f * s0).unwrap(),
        None => PenaltySpec::smooth_step(g, s0).unwrap(),
    })
}

fn any_state() -> impl Strategy<Value = OdeState> {
    (1e-3f64..1.0, 0.0f64..2.0, 0.0f64..4.0).prop_map(|(x, r, v)| OdeState::new(x, r, v).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn penalty_shape(spec in any_spec(), u in -0.5f64..1.5) {
        let s = u * 2.0 * spec.s0;
        let slope = spec.rho_prime(s);
        prop_assert!((0.0..=spec.gamma).contains(&slope));
        prop_assert!(spec.rho_second(s) >= 0.0);
        if s <= spec.onset() {
            prop_assert_eq!(spec.rho(s), 0.0);
            prop_assert_eq!(slope, 0.0);
        }
        if s >= spec.s0 {
            assert_relative_eq!(spec.rho(s), spec.gamma * s + spec.kappa(), epsilon = 1e-12, max_relative = 1e-12);
        }
    }

    #[test]
    fn penalty_derivatives_match_differences(spec in any_spec(), u in 0.0f64..1.0) {
        let s = spec.onset() + u * (spec.s0 - spec.onset());
        let h = 1e-6 * spec.s0;
        let fd = (spec.rho(s + h) - spec.rho(s - h)) / (2.0 * h);
        prop_assert!((fd - spec.rho_prime(s)).abs() <= 1e-6 * spec.gamma);
        let fd2 = (spec.rho_prime(s + h) - spec.rho_prime(s - h)) / (2.0 * h);
        prop_assert!((fd2 - spec.rho_second(s)).abs() <= 1e-4 * spec.gamma / (spec.s0 - spec.onset()));
    }

    #[test]
    fn smooth_step_symmetry(t in -1.0f64..2.0) {
        prop_assert!((smooth_step(1.0 - t) - (1.0 - smooth_step(t))).abs() <= 1e-15);
    }

    #[test]
    fn ddot_nonnegative(spec in any_spec(), m in 1u32..6, st in any_state()) {
        prop_assert!(ddot_closed_form(&spec, m, &st) >= 0.0);
        prop_assert!(ddot_closed_form(&PenaltySpec::zero(), m, &st) >= 0.0);
    }

    #[test]
    fn ddot_matches_product_rule(spec in any_spec(), m in 1u32..6, st in any_state()) {
        let mf = f64::from(m);
        let (x, r, v) = (st.radius, st.r, st.rdot);
        let a = rddot_explicit(&spec, m, &st);
        let chain = mf * (v * v + r * a) / x - mf * r * v / (x * x);
        let closed = ddot_closed_form(&spec, m, &st);
        prop_assert!((chain - closed).abs() <= 1e-9 * (1.0 + closed.abs()), "{} vs {}", chain, closed);
    }

    #[test]
    fn zdot_matches_chain_rule(spec in any_spec(), m in 1u32..6, st in any_state()) {
        let mf = f64::from(m);
        let (x, r, v) = (st.radius, st.r, st.rdot);
        let a = rddot_explicit(&spec, m, &st);
        let d = det_value(m, x, r, v);
        let ddot = ddot_closed_form(&spec, m, &st);
        let chain = v * a + mf * mf * (r / x) * (v / x - r / (x * x)) + d * spec.rho_second(d) * ddot;
        let closed = zdot_closed_form(m, &st).value;
        let scale = 1.0 + chain.abs().max(closed.abs());
        prop_assert!((chain - closed).abs() <= 1e-9 * scale, "{} vs {}", chain, closed);
    }

    #[test]
    fn window_and_constant(m in 1u32..50) {
        let (lo, hi) = window_roots(m);
        let m2 = f64::from(m * m);
        prop_assert!(lo <= hi);
        assert_relative_eq!(lo * hi, m2, max_relative = 1e-9);
        if m >= 2 {
            prop_assert!(c_m(m).unwrap() > 0.0);
        } else {
            prop_assert!(c_m(m).is_err());
        }
    }

    #[test]
    fn gradient_determinant(m in 1u32..6, c in 0.1f64..5.0, theta in 0.0f64..6.3) {
        let mesh = graded_mesh(64, 1e-4, 1.2).unwrap();
        let p = RadialProfile::from_fn(m, mesh, |x| (c * x * (1.0 + x), c * (1.0 + 2.0 * x))).unwrap();
        for i in [0, 10, 40, 63] {
            let d = det_value(m, p.mesh[i], p.r[i], p.rdot[i]);
            let g = gradient_map_at(&p, i, theta).unwrap();
            prop_assert!((det2(&g) - d).abs() <= 1e-12 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn other_modes_do_not_pair(spec in any_spec(), m in 1u32..5, n in 1u32..6, c in 0.5f64..3.0) {
        prop_assume!(n != m);
        let p = RadialProfile::power(m, graded_mesh(200, 1e-4, 1.1).unwrap(), c).unwrap();
        let pairing = null_lagrangian_check(&spec, n, &p).unwrap();
        prop_assert!(pairing.abs() <= 1e-10, "{}", pairing);
    }

    #[test]
    fn power_law_exponent(m in 1u32..5, c in 0.5f64..30.0, b in -0.5f64..0.5) {
        let mf = f64::from(m);
        let mesh = graded_mesh(512, 1e-8, 1.05).unwrap();
        let p = RadialProfile::from_fn(m, mesh, |x| {
            let base = c * x.powi(m as i32);
            (base * (1.0 + b * x), c * mf * x.powi(m as i32 - 1) * (1.0 + b * x) + base * b)
        })
        .unwrap();
        let est = estimate_dm(&p).unwrap();
        prop_assert!((est - mf).abs() <= 1e-6, "{}", est);
    }

    #[test]
    fn monotone_power_profiles_have_signs(m in 1u32..5, c in 0.1f64..30.0) {
        let p = RadialProfile::power(m, graded_mesh_with_origin(400, 1e-6, 1.1).unwrap(), c).unwrap();
        prop_assert_eq!(check_signs(&p, &AnalysisConfig::default()).status, Status::Pass);
    }

    #[test]
    fn mesh_shape(n in 4usize..3000, e in -9.0f64..-2.0, q in 1.01f64..1.5) {
        let mesh = graded_mesh(n, 10f64.powf(e), q).unwrap();
        prop_assert_eq!(mesh.len(), n);
        prop_assert_eq!(*mesh.last().unwrap(), 1.0);
        prop_assert!(mesh.windows(2).all(|w| w[0] < w[1]));
        let with = graded_mesh_with_origin(n, 10f64.powf(e), q).unwrap();
        prop_assert_eq!(with.len(), n);
        prop_assert_eq!(with[0], 0.0);
    }

    #[test]
    fn csv_round_trip(spec in any_spec(), m in 1u32..5, c in 0.1f64..10.0, b in 0.0f64..1.0, diag in any::<bool>()) {
        let mesh = graded_mesh_with_origin(80, 1e-5, 1.2).unwrap();
        let p = RadialProfile::from_fn(m, mesh, |x| (c * x.powi(m as i32) + b * x.powi(m as i32 + 1), 0.0)).unwrap();
        let text = profile_csv(&spec, &p, diag).unwrap();
        let table = parse_profile(&text, m, "mem").unwrap();
        prop_assert_eq!(table.profile, p);
    }
}
