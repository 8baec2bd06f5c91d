mod common;

use proptest::prelude::*;
use prunepool_core::{
    combine, realize_weights, CombinationMethod, ProbValue, RngStream, WeightScheme,
};

fn pv(v: f64) -> ProbValue {
    ProbValue::new(v).unwrap()
}

fn pvs(vs: &[f64]) -> Vec<ProbValue> {
    vs.iter().map(|&v| pv(v)).collect()
}

#[test]
fn single_midpoint_pvalue_combines_to_zero() {
    let stat = combine(
        &pvs(&[0.5]),
        pv(1.0),
        &WeightScheme::Equal,
        CombinationMethod::InverseNormal,
    )
    .unwrap();
    assert_eq!(stat.survivors, vec![0]);
    assert_eq!(stat.realized_weights, vec![1.0]);
    assert!(stat.value.unwrap().abs() <= 1e-12);
}

#[test]
fn single_survivor_is_its_own_quantile() {
    let stat = combine(
        &pvs(&[0.025, 0.5]),
        pv(0.2),
        &WeightScheme::Equal,
        CombinationMethod::InverseNormal,
    )
    .unwrap();
    assert_eq!(stat.survivors, vec![0]);
    assert!((stat.value.unwrap() - 1.959963984540054).abs() <= 1e-9);
}

#[test]
fn fisher_single_value() {
    let stat = combine(
        &pvs(&[0.1]),
        pv(0.2),
        &WeightScheme::Equal,
        CombinationMethod::Fisher,
    )
    .unwrap();
    let direct = -2.0 * 0.1f64.ln();
    assert!((stat.value.unwrap() - direct).abs() <= 1e-12);
    assert!((stat.value.unwrap() - 4.605170185988091).abs() <= 1e-9);
}

#[test]
fn sample_size_weights_follow_surviving_total() {
    let w = realize_weights(&WeightScheme::SampleSize(vec![10.0, 30.0, 60.0]), &[0, 1]).unwrap();
    assert!((w[0] - 0.5).abs() <= 1e-12);
    assert!((w[1] - 0.8660254037844386).abs() <= 1e-12);
}

#[test]
fn fisher_ignores_weights_but_reports_them() {
    let scheme = WeightScheme::SampleSize(vec![10.0, 90.0]);
    let stat = combine(
        &pvs(&[0.1, 0.05]),
        pv(0.2),
        &scheme,
        CombinationMethod::Fisher,
    )
    .unwrap();
    let direct = -2.0 * 0.1f64.ln() + -2.0 * 0.05f64.ln();
    assert!((stat.value.unwrap() - direct).abs() <= 1e-12);
    let sq: f64 = stat.realized_weights.iter().map(|w| w * w).sum();
    assert!((sq - 1.0).abs() <= 1e-12);
}

#[test]
fn full_pool_statistic_is_standard_normal() {
    // tau = 1 pools everything, and with equal weights the statistic is
    // exactly N(0,1) under the null: the empirical 0.95 exceedance rate over
    // 1e5 iid replicates stays within 3 binomial sigmas of 0.05.
    let k = 4;
    let nsim = 100_000u64;
    let critical = 1.6448536269514722;
    let mut hits = 0usize;
    let mut draws = Vec::with_capacity(k);
    for rep in 0..nsim {
        let stream = RngStream::new(7_321, rep);
        draws.clear();
        for c in 0..k {
            draws.push(stream.uniform_draw(c as u64));
        }
        let stat = combine(
            &draws,
            pv(1.0),
            &WeightScheme::Equal,
            CombinationMethod::InverseNormal,
        )
        .unwrap();
        if stat.value.unwrap() > critical {
            hits += 1;
        }
    }
    let rate = hits as f64 / nsim as f64;
    let band = 3.0 * (0.05f64 * 0.95 / nsim as f64).sqrt();
    assert!((rate - 0.05).abs() <= band, "rate {rate}, band {band}");
}

fn arbitrary_scheme(k: usize) -> impl Strategy<Value = WeightScheme> {
    prop_oneof![
        Just(WeightScheme::Equal),
        proptest::collection::vec(0.5f64..100.0, k).prop_map(WeightScheme::SampleSize),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn prop_realized_weight_squares_sum_to_one(
        (p, scheme) in (1usize..8).prop_flat_map(|k| (
            proptest::collection::vec(0.0001f64..0.9999, k),
            arbitrary_scheme(k),
        )),
        tau in 0.05f64..1.0,
        fisher in proptest::bool::ANY,
    ) {
        let method = if fisher { CombinationMethod::Fisher } else { CombinationMethod::InverseNormal };
        let stat = combine(&pvs(&p), pv(tau), &scheme, method).unwrap();
        if stat.value.is_some() {
            let sq: f64 = stat.realized_weights.iter().map(|w| w * w).sum();
            prop_assert!((sq - 1.0).abs() <= 1e-12);
        } else {
            prop_assert!(stat.survivors.is_empty());
            prop_assert!(stat.realized_weights.is_empty());
        }
    }

    #[test]
    fn prop_pruning_consistency_bitwise(
        (p, n) in (1usize..8).prop_flat_map(|k| (
            proptest::collection::vec(0.0001f64..0.9999, k),
            proptest::collection::vec(0.5f64..100.0, k),
        )),
        tau in 0.05f64..0.95,
        fisher in proptest::bool::ANY,
        sample_size in proptest::bool::ANY,
    ) {
        let method = if fisher { CombinationMethod::Fisher } else { CombinationMethod::InverseNormal };

        // Drop the pruned cohorts (and their sample sizes) from the input:
        // the statistic must not move by a single bit.
        let kept: Vec<usize> = (0..p.len()).filter(|&i| p[i] <= tau).collect();
        let p_kept: Vec<f64> = kept.iter().map(|&i| p[i]).collect();
        let n_kept: Vec<f64> = kept.iter().map(|&i| n[i]).collect();

        let (scheme_full, scheme_kept) = if sample_size {
            (WeightScheme::SampleSize(n), WeightScheme::SampleSize(n_kept))
        } else {
            (WeightScheme::Equal, WeightScheme::Equal)
        };

        let full = combine(&pvs(&p), pv(tau), &scheme_full, method).unwrap();
        if kept.is_empty() {
            prop_assert_eq!(full.value, None);
        } else {
            let reduced = combine(&pvs(&p_kept), pv(tau), &scheme_kept, method).unwrap();
            prop_assert_eq!(
                full.value.unwrap().to_bits(),
                reduced.value.unwrap().to_bits()
            );
        }
    }

    #[test]
    fn prop_survivors_are_exactly_the_at_most_tau_set(
        p in proptest::collection::vec(0.0f64..=1.0, 1..8),
        tau in 0.05f64..=1.0,
    ) {
        let stat = combine(&pvs(&p), pv(tau), &WeightScheme::Equal, CombinationMethod::InverseNormal).unwrap();
        let expected: Vec<usize> = (0..p.len()).filter(|&i| p[i] <= tau).collect();
        prop_assert_eq!(stat.survivors, expected);
    }
}
