use proptest::prelude::*;
use thermoplast::materials::MaterialParams;
use thermoplast::tensor::Mat;

fn mat2(range: f64) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-range..range, 4).prop_map(|v| Mat::from_row_slice(2, &v))
}

fn near_identity(amp: f64) -> impl Strategy<Value = Mat> {
    mat2(amp).prop_map(|m| Mat::identity(2) + m)
}

fn params() -> impl Strategy<Value = MaterialParams> {
    (0.0..2.0f64, 0.01..2.0f64, -3.0..1.0f64, 0.01..0.5f64).prop_map(|(sigma0, theta_ref, lmu, delta)| MaterialParams {
        sigma0,
        theta_ref,
        mu_v: 10f64.powf(lmu),
        delta,
        ..Default::default()
    })
}

proptest! {
    #[test]
    fn elastic_energy_is_frame_indifferent(f in mat2(2.0), angle in -3.2..3.2f64) {
        let p = MaterialParams::default();
        let q = Mat::rotation2(angle);
        let (a, b) = (p.psi_el(&f), p.psi_el(&(q * f)));
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn stored_energy_is_plastically_indifferent(f in near_identity(0.4), pm in near_identity(0.3), angle in -3.2..3.2f64) {
        prop_assume!(pm.det() > 0.1);
        let p = MaterialParams::default();
        let q = Mat::rotation2(angle);
        let a = p.psi_el_fp(&f, &pm).unwrap() + p.psi_h(&pm);
        let b = p.psi_el_fp(&(f * q), &(pm * q)).unwrap() + p.psi_h(&(pm * q));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
    }

    #[test]
    fn invert_flow_solves_the_flow_rule(p in params(), theta in 0.0..3.0f64, leps in -4.0..0.0f64, t in mat2(5.0)) {
        let eps = 10f64.powf(leps);
        let r = p.invert_flow(theta, &t, eps);
        let back = p.dr_eps(theta, &r, eps);
        prop_assert!((back - t).norm() <= 1e-12 * t.norm().max(1e-300));
    }

    #[test]
    fn flow_map_is_strongly_monotone(p in params(), theta in 0.0..3.0f64, a in mat2(1.0), b in mat2(1.0), leps in -4.0..0.0f64) {
        let eps = 10f64.powf(leps);
        let d = a - b;
        let lhs = (p.dr_eps(theta, &a, eps) - p.dr_eps(theta, &b, eps)).contract2(&d);
        prop_assert!(lhs >= p.mu_v * d.contract2(&d) * (1.0 - 1e-12));
    }

    #[test]
    fn yosida_gap_is_bounded(p in params(), theta in 0.0..3.0f64, s in 0.0..2.0f64, leps in -4.0..0.0f64) {
        let eps = 10f64.powf(leps);
        let r1 = p.sigma_yield(theta) * s;
        let r1e = p.r1_eps_scalar(theta, s, eps);
        let slack = 4.0 * f64::EPSILON * r1.max(r1e);
        prop_assert!(r1 - r1e >= -slack);
        prop_assert!(r1 - r1e <= 0.5 * p.sigma_yield(theta) * eps + slack);
    }

    #[test]
    fn dissipation_potential_is_even_and_nonnegative(p in params(), theta in 0.0..3.0f64, r in mat2(2.0)) {
        let eps = 1e-2;
        let a = p.r_eps(theta, &r, eps);
        prop_assert!(a >= 0.0);
        prop_assert_eq!(a, p.r_eps(theta, &(-r), eps));
    }

    #[test]
    fn heat_production_is_nonnegative(p in params(), theta in 0.0..3.0f64, r in mat2(3.0)) {
        prop_assert!(p.heat_production(theta, &r, 1e-2) >= 0.0);
    }

    #[test]
    fn effective_conductivity_is_spd(pm in near_identity(0.5)) {
        prop_assume!(pm.det() > 0.2);
        let k = MaterialParams::default().kappa_eff(&pm, 0.0).unwrap();
        prop_assert!((k[(0, 1)] - k[(1, 0)]).abs() <= 1e-14 * k.norm());
        prop_assert!(k[(0, 0)] > 0.0 && k.det() > 0.0);
    }

    #[test]
    fn yield_stress_is_nonincreasing(p in params(), a in 0.0..10.0f64, b in 0.0..10.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(p.sigma_yield(hi) <= p.sigma_yield(lo));
        prop_assert!(p.sigma_yield(lo) <= p.sigma0);
    }

    #[test]
    fn enthalpy_transform_round_trips(theta in 0.0..100.0f64) {
        let p = MaterialParams::default();
        let v = p.cv_primitive(theta);
        prop_assert!((p.cv_inv(v) - theta).abs() <= 1e-12 * theta.max(1.0));
    }
}
