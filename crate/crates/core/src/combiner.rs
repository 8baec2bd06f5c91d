//! Truncated combination statistics over per-cohort p-values.
//!
//! A cohort survives the pruning step when its p-value is at most `tau`
//! (non-strict, so a value exactly equal to the threshold is pooled). The
//! surviving p-values combine into either the weighted inverse-normal
//! statistic `sum_k w_k * Φ⁻¹(1 - p_k)` or the unweighted Fisher statistic
//! `sum_k -2 ln(p_k)`. With no survivors the statistic is absent and the
//! design never rejects.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::numerics::{self, ProbValue};
use crate::Error;

/// Per-cohort weights for the inverse-normal statistic.
///
/// Realized weights are renormalized over the survivor set so their squares
/// always sum to one, whatever was pruned.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightScheme {
    /// Every survivor gets `sqrt(1/m)` with `m` survivors.
    Equal,
    /// Survivor `k` gets `sqrt(n_k / sum of surviving n)`, for per-cohort
    /// sample sizes `n` of length `K`.
    SampleSize(Vec<f64>),
}

impl WeightScheme {
    /// Checks the scheme against a design with `k` cohorts.
    pub fn validate(&self, k: usize) -> Result<(), Error> {
        match self {
            WeightScheme::Equal => Ok(()),
            WeightScheme::SampleSize(n) => {
                if n.len() != k {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        actual: n.len(),
                    });
                }
                for &nk in n {
                    if !nk.is_finite() || nk <= 0.0 {
                        return Err(Error::NonPositiveSampleSize(nk));
                    }
                }
                Ok(())
            }
        }
    }

    /// Short human/CSV form: `equal` or `n=10,30,60`.
    pub fn descriptor(&self) -> String {
        match self {
            WeightScheme::Equal => String::from("equal"),
            WeightScheme::SampleSize(n) => {
                let mut out = String::from("n=");
                for (i, nk) in n.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&format!("{nk}"));
                }
                out
            }
        }
    }
}

/// Which combination statistic pools the survivors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombinationMethod {
    /// Weighted sum of upper-tail normal quantiles.
    InverseNormal,
    /// `sum -2 ln p_k`; ignores the weight scheme.
    Fisher,
}

impl CombinationMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CombinationMethod::InverseNormal => "invnorm",
            CombinationMethod::Fisher => "fisher",
        }
    }
}

/// Outcome of applying the truncated combination to one p-value vector.
#[derive(Clone, Debug, PartialEq)]
pub struct CombinedStatistic {
    /// `None` exactly when every cohort was pruned.
    pub value: Option<f64>,
    /// 0-based indices of cohorts with `p_k <= tau`, in cohort order.
    pub survivors: Vec<usize>,
    /// Realized weights aligned with `survivors`; squares sum to one. Fisher
    /// reports them too but its value does not use them.
    pub realized_weights: Vec<f64>,
}

/// Weights the scheme realizes over a non-empty survivor set.
pub fn realize_weights(scheme: &WeightScheme, survivors: &[usize]) -> Result<Vec<f64>, Error> {
    if survivors.is_empty() {
        return Err(Error::EmptySurvivorSet);
    }
    match scheme {
        WeightScheme::Equal => {
            let w = libm::sqrt(1.0 / survivors.len() as f64);
            Ok(vec![w; survivors.len()])
        }
        WeightScheme::SampleSize(n) => {
            let mut total = 0.0;
            for &k in survivors {
                let nk = *n.get(k).ok_or(Error::LengthMismatch {
                    expected: k + 1,
                    actual: n.len(),
                })?;
                if !nk.is_finite() || nk <= 0.0 {
                    return Err(Error::NonPositiveSampleSize(nk));
                }
                total += nk;
            }
            Ok(survivors.iter().map(|&k| libm::sqrt(n[k] / total)).collect())
        }
    }
}

/// Shared statistic kernel: fills `survivors` and `weights` scratch vectors
/// and returns the combined value, `None` when everything is pruned.
///
/// The survivor sum runs in cohort order, weight times quantile per element,
/// so a vector with non-survivors removed reproduces the value bit for bit.
pub(crate) fn statistic_into(
    p: &[f64],
    tau: f64,
    scheme: &WeightScheme,
    method: CombinationMethod,
    survivors: &mut Vec<usize>,
    weights: &mut Vec<f64>,
) -> Option<f64> {
    survivors.clear();
    weights.clear();
    for (k, &pk) in p.iter().enumerate() {
        if pk <= tau {
            survivors.push(k);
        }
    }
    if survivors.is_empty() {
        return None;
    }

    match scheme {
        WeightScheme::Equal => {
            let w = libm::sqrt(1.0 / survivors.len() as f64);
            weights.extend(survivors.iter().map(|_| w));
        }
        WeightScheme::SampleSize(n) => {
            let total: f64 = survivors.iter().map(|&k| n[k]).sum();
            weights.extend(survivors.iter().map(|&k| libm::sqrt(n[k] / total)));
        }
    }

    let mut acc = 0.0;
    match method {
        CombinationMethod::InverseNormal => {
            for (i, &k) in survivors.iter().enumerate() {
                acc += weights[i] * numerics::probit_upper(p[k]);
            }
        }
        CombinationMethod::Fisher => {
            for &k in survivors.iter() {
                acc += -2.0 * libm::log(numerics::clamp_interior(p[k]));
            }
        }
    }
    Some(acc)
}

/// Applies the truncated combination test to one p-value vector.
pub fn combine(
    p: &[ProbValue],
    tau: ProbValue,
    scheme: &WeightScheme,
    method: CombinationMethod,
) -> Result<CombinedStatistic, Error> {
    if p.is_empty() {
        return Err(Error::InvalidDesign("p-value vector must be non-empty"));
    }
    if tau.get() <= 0.0 {
        return Err(Error::InvalidDesign("tau must be positive"));
    }
    scheme.validate(p.len())?;

    let raw: Vec<f64> = p.iter().map(|v| v.get()).collect();
    let mut survivors = Vec::new();
    let mut weights = Vec::new();
    let value = statistic_into(&raw, tau.get(), scheme, method, &mut survivors, &mut weights);
    Ok(CombinedStatistic {
        value,
        survivors,
        realized_weights: weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: f64) -> ProbValue {
        ProbValue::new(v).unwrap()
    }

    #[test]
    fn equal_weights_over_four_survivors() {
        let w = realize_weights(&WeightScheme::Equal, &[0, 1, 2, 3]).unwrap();
        assert_eq!(w, vec![0.5, 0.5, 0.5, 0.5]);
    }

    #[test]
    fn single_survivor_weight_is_one() {
        let w = realize_weights(&WeightScheme::Equal, &[1]).unwrap();
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn empty_survivor_set_is_an_error() {
        assert_eq!(
            realize_weights(&WeightScheme::Equal, &[]),
            Err(Error::EmptySurvivorSet)
        );
    }

    #[test]
    fn boundary_pvalue_survives() {
        let stat = combine(
            &[pv(0.2), pv(0.2000000001)],
            pv(0.2),
            &WeightScheme::Equal,
            CombinationMethod::InverseNormal,
        )
        .unwrap();
        assert_eq!(stat.survivors, vec![0]);
    }

    #[test]
    fn all_pruned_is_absent() {
        let stat = combine(
            &[pv(0.3), pv(0.4)],
            pv(0.2),
            &WeightScheme::Equal,
            CombinationMethod::InverseNormal,
        )
        .unwrap();
        assert_eq!(stat.value, None);
        assert!(stat.survivors.is_empty());
        assert!(stat.realized_weights.is_empty());
    }

    #[test]
    fn sample_size_length_mismatch() {
        let scheme = WeightScheme::SampleSize(vec![10.0, 20.0]);
        assert!(combine(
            &[pv(0.1)],
            pv(0.5),
            &scheme,
            CombinationMethod::InverseNormal
        )
        .is_err());
    }

    #[test]
    fn descriptor_formats() {
        assert_eq!(WeightScheme::Equal.descriptor(), "equal");
        assert_eq!(
            WeightScheme::SampleSize(vec![10.0, 30.0, 60.0]).descriptor(),
            "n=10,30,60"
        );
    }
}
