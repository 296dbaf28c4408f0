//! Property tests for the scalar fiber analysis: classification against an
//! independent sign scan, monotonicity and nestedness of the branch data, and
//! ordering/homogeneity of the extremal parameters.

mod common;

use common::{scan_anchor, scan_class};
use kirchhoff_fiber::constants::sobolev_constant;
use kirchhoff_fiber::fiber::{
    FiberClass, FiberInput, ProblemParams, classify_fiber, closed_form_thresholds, lambda0_of_u,
    lambda_of_u,
};
use proptest::prelude::*;

fn params(a: f64, b: f64, lambda: f64, p: f64) -> ProblemParams {
    ProblemParams::new(5, a, b, lambda, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn classification_agrees_with_sign_scan(
        log_a_norm in -1.0f64..1.0,
        log_c in -2.0f64..1.0,
        log_p_norm in -2.0f64..1.0,
        a in 0.2f64..5.0,
        b_factor in 0.05f64..3.0,
        lambda in 0.0f64..2.0,
        p in 2.3f64..3.2,
    ) {
        let (grad_sq, crit, pert) = (10f64.powf(log_a_norm), 10f64.powf(log_c), 10f64.powf(log_p_norm));
        let cf = closed_form_thresholds(5, a, grad_sq, crit).unwrap();
        let b = b_factor * cf.degenerate_b;
        let input = FiberInput::unchecked(grad_sq, crit, pert, params(a, b, lambda, p));
        let report = classify_fiber(&input).unwrap();
        // Skip the declared degenerate band: the scan cannot resolve it.
        prop_assume!(report.margin.abs() > 1e-8);
        prop_assert_eq!(report.class, scan_class(&input, scan_anchor(&input)));
    }

    #[test]
    fn branch_data_monotone_in_b_and_lambda(
        grad_sq in 0.2f64..5.0,
        crit in 0.01f64..2.0,
        pert in 0.05f64..2.0,
        a in 0.3f64..3.0,
        p in 2.2f64..3.1,
    ) {
        let cf = closed_form_thresholds(5, a, grad_sq, crit).unwrap();
        // Stay safely inside the two-critical regime.
        let bs = [0.3 * cf.degenerate_b, 0.5 * cf.degenerate_b, 0.7 * cf.degenerate_b];
        let mut t_prev = 0.0;
        let mut e_prev = f64::NEG_INFINITY;
        for b in bs {
            let input = FiberInput::unchecked(grad_sq, crit, pert, params(a, b, 0.0, p));
            let rep = classify_fiber(&input).unwrap();
            prop_assert_eq!(rep.class, FiberClass::TwoCritical);
            let t = rep.t_minus.unwrap();
            let e = rep.energy_minus.unwrap();
            prop_assert!(t > t_prev, "t^- must increase with b: {t} vs {t_prev}");
            prop_assert!(e > e_prev, "psi(t^-) must increase with b: {e} vs {e_prev}");
            t_prev = t;
            e_prev = e;
        }
        // And strictly decrease in lambda at fixed b.
        let b = 0.5 * cf.degenerate_b;
        let mut t_prev = f64::INFINITY;
        let mut e_prev = f64::INFINITY;
        for lambda in [0.0, 0.4, 0.8] {
            let input = FiberInput::unchecked(grad_sq, crit, pert, params(a, b, lambda, p));
            let rep = classify_fiber(&input).unwrap();
            let t = rep.t_minus.unwrap();
            let e = rep.energy_minus.unwrap();
            prop_assert!(t < t_prev);
            prop_assert!(e < e_prev);
            t_prev = t;
            e_prev = e;
        }
    }

    #[test]
    fn two_critical_class_is_nested(
        grad_sq in 0.2f64..5.0,
        crit in 0.01f64..2.0,
        pert in 0.05f64..2.0,
        a in 0.3f64..3.0,
        lambda in 0.0f64..1.0,
        p in 2.2f64..3.1,
    ) {
        let cf = closed_form_thresholds(5, a, grad_sq, crit).unwrap();
        let b2 = 0.6 * cf.degenerate_b;
        let at = |b: f64, lambda: f64| {
            let input = FiberInput::unchecked(grad_sq, crit, pert, params(a, b, lambda, p));
            classify_fiber(&input).unwrap()
        };
        let base = at(b2, lambda);
        prop_assert_eq!(base.class, FiberClass::TwoCritical);
        // Smaller b keeps the local maximum (b = 0 degenerates to SingleMax).
        for b1 in [0.5 * b2, 0.1 * b2, 0.0] {
            let rep = at(b1, lambda);
            prop_assert!(rep.t_minus.is_some(), "t^- lost at b = {b1}");
        }
        // Larger lambda keeps it too.
        for l2 in [lambda + 0.5, lambda + 2.0] {
            let rep = at(b2, l2);
            prop_assert!(rep.t_minus.is_some(), "t^- lost at lambda = {l2}");
        }
    }

    #[test]
    fn extremal_parameters_ordered_and_homogeneous(
        grad_sq in 0.2f64..5.0,
        crit in 0.01f64..2.0,
        pert in 0.05f64..2.0,
        a in 0.3f64..3.0,
        b_factor in 1.05f64..3.0,
        p in 2.2f64..3.1,
    ) {
        // b above the zero-energy threshold keeps lambda0 positive.
        let cf = closed_form_thresholds(5, a, grad_sq, crit).unwrap();
        let b = b_factor * cf.zero_energy_b;
        let input = FiberInput::unchecked(grad_sq, crit, pert, params(a, b, 0.0, p));
        let l0 = lambda0_of_u(&input).unwrap();
        let l1 = lambda_of_u(&input).unwrap();
        prop_assert!(l0.admissible);
        prop_assert!(l1.lambda < l0.lambda, "lambda(u) {} !< lambda0(u) {}", l1.lambda, l0.lambda);
        for mu in [0.1, 10.0] {
            let s0 = lambda0_of_u(&input.scaled(mu)).unwrap();
            let s1 = lambda_of_u(&input.scaled(mu)).unwrap();
            prop_assert!((s0.lambda - l0.lambda).abs() <= 1e-9 * l0.lambda.abs());
            prop_assert!((s1.lambda - l1.lambda).abs() <= 1e-9 * l1.lambda.abs().max(1e-12));
        }
    }

    #[test]
    fn no_critical_points_above_second_hyperbola_at_lambda_zero(
        grad_sq in 0.2f64..5.0,
        sob_frac in 0.05f64..1.0,
        pert in 0.05f64..2.0,
        a in 0.3f64..3.0,
        b_margin in 1.0f64..4.0,
        p in 2.2f64..3.1,
    ) {
        // Sobolev-consistent data: C <= S^{-2*/2} A^{2*/2}.
        let consts = sobolev_constant(5).unwrap();
        let ts = consts.two_star;
        let crit = sob_frac * consts.sobolev.powf(-ts / 2.0) * grad_sq.powf(ts / 2.0);
        let b = b_margin * consts.b_on_hyperbola(consts.c2, a);
        let input = FiberInput::new(grad_sq, crit, pert, params(a, b, 0.0, p)).unwrap();
        let rep = classify_fiber(&input).unwrap();
        prop_assert!(
            matches!(rep.class, FiberClass::Increasing | FiberClass::InflectionCritical),
            "unexpected class {:?} at product {}",
            rep.class,
            consts.parameter_product(a, b)
        );
    }
}
