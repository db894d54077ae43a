use dante_core::slqc::{
    certify, generate_inner_layer, inner_layer_error_ceiling, inner_layer_min_eps, kappa_for,
    KappaSetting, SuiteConfig, Theorem,
};
use dante_core::{DenseMatrix, Rng};
use proptest::prelude::*;

fn full_suite(theorem: Theorem) {
    let cfg = SuiteConfig::default_for(theorem);
    let report = certify(&cfg).unwrap();
    println!(
        "{}: {}/{} admissible, min margin {:?}, kappa [{}, {}] {}",
        theorem.name(),
        report.admissible,
        report.requested,
        report.min_margin,
        report.kappa_min,
        report.kappa_max,
        report.note
    );
    assert_eq!(report.requested, 100);
    assert!(report.passed(), "{report:?}");
    assert!(report.min_margin.unwrap() >= -1e-9);
}

#[test]
fn generalized_relu_glm_suite() {
    full_suite(Theorem::GenReluGlm);
}

#[test]
fn standard_relu_glm_suite() {
    full_suite(Theorem::StdReluGlm);
}

#[test]
fn multi_output_layer_suite() {
    full_suite(Theorem::MultiOutputGenRelu);
}

#[test]
fn sigmoid_cross_entropy_suite() {
    full_suite(Theorem::CeSigmoid);
}

#[test]
fn softmax_cross_entropy_suite() {
    full_suite(Theorem::CeSoftmax);
}

#[test]
fn inner_layer_suite_has_no_admissible_instances() {
    let cfg = SuiteConfig::default_for(Theorem::InnerLayer);
    let report = certify(&SuiteConfig {
        instances: 20,
        ..cfg.clone()
    })
    .unwrap();
    println!("{}", report.note);
    assert_eq!(report.admissible, 0);
    assert!(!report.passed());
    assert!(report.kappa_min > 0.0);
}

/// Brute-force the largest prediction residual over random weights and
/// inputs; it never reaches the threshold at which kappa turns positive.
#[test]
fn inner_layer_errors_stay_below_the_kappa_threshold() {
    let mut rng = Rng::new(3);
    let (a, b, w1, w2) = (0.01, 1.0, 1.0, 1.0);
    let ceiling = inner_layer_error_ceiling(b, w1, w2);
    let threshold = inner_layer_min_eps(a, b, w1, w2);
    assert!(ceiling < threshold);
    for _ in 0..50 {
        let inst = generate_inner_layer(&mut rng, 4, 3, 40, a, b, w1, w2).unwrap();
        for _ in 0..20 {
            let w = rng.normal_matrix(4, 3);
            let w = w.scale(w1 / dante_core::frobenius_norm(&w));
            let e = inst.error(&w).unwrap();
            assert!(e <= ceiling, "error {e} above ceiling {ceiling}");
        }
    }
}

#[test]
fn shrunken_kappa_is_caught() {
    for theorem in [Theorem::GenReluGlm, Theorem::CeSigmoid] {
        let cfg = SuiteConfig {
            instances: 20,
            kappa_scale: 1e-4,
            ..SuiteConfig::default_for(theorem)
        };
        let report = certify(&cfg).unwrap();
        assert!(
            !report.failures.is_empty(),
            "{}: {report:?}",
            theorem.name()
        );
    }
}

#[test]
fn suites_are_reproducible() {
    let cfg = SuiteConfig {
        instances: 12,
        seed: 9,
        ..SuiteConfig::default_for(Theorem::MultiOutputGenRelu)
    };
    assert_eq!(certify(&cfg).unwrap(), certify(&cfg).unwrap());
}

#[test]
fn kappa_reference_values() {
    let cases = [
        (
            KappaSetting::GenReluGlm {
                a: 0.5,
                b: 1.0,
                w: 1.0,
            },
            4.0,
        ),
        (
            KappaSetting::GenReluGlm {
                a: 0.01,
                b: 2.0,
                w: 3.0,
            },
            4800.0,
        ),
        (KappaSetting::StdReluGlm { b: 2.0, w: 1.5 }, 12.0),
        (KappaSetting::SigmoidGlm { w: 2.0 }, 7.38905609893065),
        (
            KappaSetting::CeSoftmax {
                eps: 1.0,
                d_prime: 4,
            },
            4.0 / (0.6321205588285577 * 0.6321205588285577),
        ),
    ];
    for (setting, want) in cases {
        let got = kappa_for(setting).unwrap();
        assert!(
            (got - want).abs() <= 1e-12 * want,
            "{setting:?}: {got} vs {want}"
        );
    }
}

#[test]
fn zero_instance_suite_is_rejected() {
    let cfg = SuiteConfig {
        instances: 0,
        ..SuiteConfig::default_for(Theorem::GenReluGlm)
    };
    assert!(certify(&cfg).is_err());
}

proptest! {
    #[test]
    fn kappa_grows_with_the_weight_bound(a in 0.01f64..1.0, r in 1.0f64..4.0, w in 0.1f64..5.0, k in 1.01f64..3.0) {
        let b = a * r;
        let lo = kappa_for(KappaSetting::GenReluGlm { a, b, w }).unwrap();
        let hi = kappa_for(KappaSetting::GenReluGlm { a, b, w: w * k }).unwrap();
        prop_assert!(hi > lo);
        let lo = kappa_for(KappaSetting::StdReluGlm { b, w }).unwrap();
        let hi = kappa_for(KappaSetting::StdReluGlm { b, w: w * k }).unwrap();
        prop_assert!(hi > lo);
        let lo = kappa_for(KappaSetting::SigmoidGlm { w }).unwrap();
        let hi = kappa_for(KappaSetting::SigmoidGlm { w: w * k }).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn cross_entropy_kappa_bounds(eps in 0.01f64..5.0, dp in 2usize..10) {
        // (1 - e^-eps)^2 lies in (0, min(1, eps^2)), so kappa exceeds both eps and 1/eps.
        let lo = kappa_for(KappaSetting::CeSigmoid { eps }).unwrap();
        prop_assert!(lo > eps && lo > 1.0 / eps);
        let s = kappa_for(KappaSetting::CeSoftmax { eps, d_prime: dp }).unwrap();
        prop_assert!((s - dp as f64 * lo).abs() <= 1e-9 * s);
    }

    #[test]
    fn inner_layer_is_vacuous_everywhere(a in 0.01f64..1.0, r in 1.0f64..4.0, w1 in 0.1f64..3.0, w2 in 0.1f64..3.0) {
        let b = a * r;
        prop_assert!(inner_layer_error_ceiling(b, w1, w2) < inner_layer_min_eps(a, b, w1, w2) * (1.0 + 1e-12));
        let eps = inner_layer_min_eps(a, b, w1, w2) * 1.5;
        let kappa = kappa_for(KappaSetting::InnerLayer { a, b, w1, w2, eps }).unwrap();
        prop_assert!(kappa > 0.0);
    }
}

#[test]
fn extreme_point_sits_on_the_ball() {
    let cfg = SuiteConfig::default_for(Theorem::GenReluGlm);
    let mut rng = Rng::new(0);
    let inst = dante_core::slqc::generate_idealized_glm(
        &mut rng,
        cfg.d,
        1,
        cfg.m,
        cfg.weight_bound,
        dante_core::ActivationKind::generalized_relu(cfg.a, cfg.b).unwrap(),
    )
    .unwrap();
    let problem =
        dante_core::slqc::TheoremProblem::glm(Theorem::GenReluGlm, inst, cfg.eps).unwrap();
    let v = problem
        .minimizer()
        .scaled_add(
            problem.radius(),
            &DenseMatrix::filled(cfg.d, 1, 1.0 / (cfg.d as f64).sqrt()),
        )
        .unwrap();
    let w = DenseMatrix::filled(cfg.d, 1, 0.3);
    assert!(dante_core::slqc::theorem_margin(&problem, &w, &v).is_ok());
    let outside = problem
        .minimizer()
        .scaled_add(
            1.01 * problem.radius(),
            &DenseMatrix::filled(cfg.d, 1, 1.0 / (cfg.d as f64).sqrt()),
        )
        .unwrap();
    assert!(dante_core::slqc::theorem_margin(&problem, &w, &outside).is_err());
}
