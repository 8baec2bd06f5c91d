mod common;

use proptest::prelude::*;
use prunepool_core::calibration::{calibrate, type1_error, DesignSpec};
use prunepool_core::power::{
    alternative_pvalue_from_uniform, draw_alternative_pvalue, overall_power, power_given_g,
    GammaSpec, ScenarioSpec,
};
use prunepool_core::{ProbValue, RngStream};

fn pv(v: f64) -> ProbValue {
    ProbValue::new(v).unwrap()
}

fn design(k: usize, tau: f64) -> DesignSpec {
    DesignSpec::new(k, pv(tau))
}

fn scenario(design: DesignSpec, g: usize, gamma: f64) -> ScenarioSpec {
    ScenarioSpec {
        gammas: vec![gamma; g],
        design,
        g,
        prior_over_g: None,
    }
}

#[test]
fn zero_gamma_draw_is_uniform_in_law() {
    let stream = RngStream::new(43, 1);
    let mean: f64 = (0..1_000_000)
        .map(|c| draw_alternative_pvalue(0.0, &stream, c).get())
        .sum::<f64>()
        / 1e6;
    assert!((mean - 0.5).abs() <= 0.002, "mean {mean}");
}

#[test]
fn gamma_two_gives_the_individual_power_anchor() {
    // Fraction of alternative p-values below 0.05: Phi(2 - Phi^-1(0.95)).
    let stream = RngStream::new(43, 0);
    let hits = (0..1_000_000)
        .filter(|&c| draw_alternative_pvalue(2.0, &stream, c).get() < 0.05)
        .count();
    let rate = hits as f64 / 1e6;
    assert!((rate - 0.6388).abs() <= 0.0015, "rate {rate}");

    let exact = common::phi(2.0 - common::quantile(0.95));
    assert!((rate - exact).abs() <= 3.0 * (exact * (1.0 - exact) / 1e6).sqrt());
}

#[test]
fn fixed_uniform_transform_value() {
    let p = alternative_pvalue_from_uniform(pv(0.5), 2.0).get();
    assert!((p - common::phi(-2.0)).abs() <= 1e-12);
    assert!((p - 0.022750131948179195).abs() <= 1e-12);
}

#[test]
fn null_reduction_is_bitwise() {
    // All-zero gammas must reproduce the null replicate logic exactly.
    let spec = design(3, 0.2);
    let calibrated = calibrate(&spec).unwrap();
    let t1e = type1_error(&spec, calibrated.alpha_star).unwrap();

    for g in [0, 2, 3] {
        let est = power_given_g(&scenario(spec.clone(), g, 0.0), calibrated.alpha_star).unwrap();
        assert_eq!(est, t1e, "gamma = 0 with G = {g} must equal the null run");
    }
}

#[test]
fn single_cohort_power_anchor() {
    let spec = design(1, 0.2);
    let calibrated = calibrate(&spec).unwrap();
    let est = power_given_g(&scenario(spec, 1, 2.0), calibrated.alpha_star).unwrap();
    assert!(
        (est.value.get() - 0.639).abs() <= 0.005,
        "power {}",
        est.value.get()
    );
}

#[test]
fn pooling_five_active_cohorts_beats_one() {
    let one = {
        let spec = design(1, 0.2);
        let cal = calibrate(&spec).unwrap();
        power_given_g(&scenario(spec, 1, 2.0), cal.alpha_star)
            .unwrap()
            .value
            .get()
    };
    let five = {
        let spec = design(5, 0.2);
        let cal = calibrate(&spec).unwrap();
        power_given_g(&scenario(spec, 5, 2.0), cal.alpha_star)
            .unwrap()
            .value
            .get()
    };
    assert!(five > one, "p(5) = {five} should beat p(1) = {one}");
}

#[test]
fn power_clearly_dominates_the_null() {
    for (k, g, tau) in [(2, 1, 0.1), (2, 2, 1.0), (6, 1, 0.2), (6, 6, 1.0)] {
        let spec = design(k, tau);
        let cal = calibrate(&spec).unwrap();
        let est = power_given_g(&scenario(spec, g, 2.0), cal.alpha_star).unwrap();
        assert!(
            est.value.get() >= 0.05 + 10.0 * est.std_error,
            "K {k}, G {g}, tau {tau}: power {}",
            est.value.get()
        );
    }
}

#[test]
fn overall_reduces_to_p1_for_a_single_cohort() {
    let spec = design(1, 0.2);
    let result = overall_power(&spec, &GammaSpec::Scalar(2.0), None).unwrap();
    assert_eq!(result.per_g.len(), 1);
    assert_eq!(result.overall.get(), result.per_g[0].value.get());
}

#[test]
fn overall_under_zero_gamma_is_alpha() {
    let spec = design(4, 0.2);
    let result = overall_power(&spec, &GammaSpec::Scalar(0.0), None).unwrap();
    assert!((result.overall.get() - 0.05).abs() <= 1.0 / spec.nsim as f64 + 1e-12);
}

#[test]
fn point_mass_prior_selects_one_scenario_exactly() {
    let spec = design(4, 0.2);
    let prior = [0.0, 0.0, 0.0, 1.0];
    let overall = overall_power(&spec, &GammaSpec::Scalar(2.0), Some(&prior)).unwrap();
    assert_eq!(overall.overall.get(), overall.per_g[3].value.get());

    let cal = calibrate(&spec).unwrap();
    let direct = power_given_g(&scenario(spec, 4, 2.0), cal.alpha_star).unwrap();
    assert_eq!(overall.per_g[3], direct);
}

#[test]
fn overall_is_the_prior_weighted_average() {
    let spec = DesignSpec {
        nsim: 20_000,
        ..design(3, 0.3)
    };
    let prior = [0.5, 0.3, 0.2];
    let result = overall_power(&spec, &GammaSpec::Scalar(1.5), Some(&prior)).unwrap();
    let expected: f64 = result
        .per_g
        .iter()
        .zip(prior)
        .map(|(est, w)| w * est.value.get())
        .sum();
    assert!((result.overall.get() - expected).abs() <= 1e-12);
}

#[test]
fn per_cohort_gammas_use_the_first_g_entries() {
    let spec = DesignSpec {
        nsim: 20_000,
        ..design(3, 0.2)
    };
    let cal = calibrate(&spec).unwrap();

    // Scalar and an equivalent per-cohort list must agree exactly.
    let scalar = power_given_g(&scenario(spec.clone(), 2, 1.5), cal.alpha_star).unwrap();
    let listed = power_given_g(
        &ScenarioSpec {
            gammas: GammaSpec::PerCohort(vec![1.5, 1.5, 9.0])
                .active_effects(3, 2)
                .unwrap(),
            design: spec,
            g: 2,
            prior_over_g: None,
        },
        cal.alpha_star,
    )
    .unwrap();
    assert_eq!(scalar, listed);
}

#[test]
fn bad_priors_and_dimensions_error() {
    let spec = design(3, 0.2);
    assert!(overall_power(&spec, &GammaSpec::Scalar(2.0), Some(&[0.5, 0.5])).is_err());
    assert!(overall_power(&spec, &GammaSpec::Scalar(2.0), Some(&[0.5, 0.3, 0.3])).is_err());
    assert!(overall_power(&spec, &GammaSpec::PerCohort(vec![2.0]), None).is_err());

    let bad = ScenarioSpec {
        gammas: vec![2.0],
        design: spec,
        g: 2,
        prior_over_g: None,
    };
    assert!(power_given_g(&bad, pv(0.05)).is_err());
}

proptest! {
    #[test]
    fn prop_alternative_pvalue_decreases_in_gamma(
        u in 0.001f64..0.999,
        gamma in 0.0f64..4.0,
        bump in 0.01f64..2.0,
    ) {
        let lo = alternative_pvalue_from_uniform(pv(u), gamma + bump).get();
        let hi = alternative_pvalue_from_uniform(pv(u), gamma).get();
        prop_assert!(lo < hi, "transform must strictly decrease in gamma");
    }

    #[test]
    fn prop_alternative_pvalue_stays_interior(
        u in 0.000001f64..0.999999,
        gamma in -3.0f64..6.0,
    ) {
        let p = alternative_pvalue_from_uniform(pv(u), gamma).get();
        prop_assert!(p > 0.0 && p < 1.0);
    }
}
