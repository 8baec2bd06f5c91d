//! Rejection probability under alternatives and prior-averaged overall
//! power.
//!
//! With `G` truly active cohorts, each active cohort's p-value is generated
//! as `Φ[Φ⁻¹(1 - U) - gamma]` for a fresh uniform `U`: its test statistic is
//! `N(gamma, 1)`, so `gamma = 2` gives roughly 63% power per cohort at the
//! 0.05 level. Inactive cohorts stay uniform. The active set is always the
//! first `G` cohorts.
//!
//! Each cohort consumes one fixed stream counter per replicate whether it is
//! active or not, and an active cohort transforms the very same draw the null
//! cohort would have used. Changing `G` therefore never reshuffles unrelated
//! draws (common random numbers across scenarios), and `gamma = 0` reproduces
//! the null replicate for replicate.

use alloc::vec;
use alloc::vec::Vec;

use crate::calibration::{
    self, base_pvalues_into, rejection_threshold, CalibrationResult, DesignSpec, RateEstimate,
    ReplicateScratch,
};
use crate::combiner;
use crate::numerics::{self, ProbValue, RngStream};
use crate::Error;

/// Treatment effect assignment for the active cohorts.
#[derive(Clone, Debug, PartialEq)]
pub enum GammaSpec {
    /// Every active cohort gets the same effect.
    Scalar(f64),
    /// Cohort `k` gets `effects[k]` whenever it is active; length `K`.
    PerCohort(Vec<f64>),
}

impl GammaSpec {
    /// Effects for the first `g` active cohorts of a `k`-cohort design.
    pub fn active_effects(&self, k: usize, g: usize) -> Result<Vec<f64>, Error> {
        match self {
            GammaSpec::Scalar(gamma) => {
                if !gamma.is_finite() {
                    return Err(Error::InvalidDesign("gamma must be finite"));
                }
                Ok(vec![*gamma; g])
            }
            GammaSpec::PerCohort(effects) => {
                if effects.len() != k {
                    return Err(Error::LengthMismatch {
                        expected: k,
                        actual: effects.len(),
                    });
                }
                if effects.iter().any(|e| !e.is_finite()) {
                    return Err(Error::InvalidDesign("gamma must be finite"));
                }
                Ok(effects[..g].to_vec())
            }
        }
    }
}

/// One power scenario: a design plus the alternative acting on it.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub design: DesignSpec,
    /// Number of truly active cohorts, `0..=K`.
    pub g: usize,
    /// Per-active-cohort effects, length `g`.
    pub gammas: Vec<f64>,
    /// Optional prior over `G = 1..=K`; uniform when absent.
    pub prior_over_g: Option<Vec<f64>>,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), Error> {
        self.design.validate()?;
        if self.g > self.design.k {
            return Err(Error::InvalidDesign("G cannot exceed K"));
        }
        if self.gammas.len() != self.g {
            return Err(Error::LengthMismatch {
                expected: self.g,
                actual: self.gammas.len(),
            });
        }
        if self.gammas.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidDesign("gamma must be finite"));
        }
        if let Some(prior) = &self.prior_over_g {
            validate_prior(prior, self.design.k)?;
        }
        Ok(())
    }
}

/// Checks a prior over `G = 1..=K`: length `k`, non-negative, sums to one.
pub fn validate_prior(prior: &[f64], k: usize) -> Result<(), Error> {
    if prior.len() != k {
        return Err(Error::InvalidPrior("length must equal K"));
    }
    if prior.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(Error::InvalidPrior("weights must be non-negative"));
    }
    let total: f64 = prior.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidPrior("weights must sum to 1"));
    }
    Ok(())
}

/// Per-G rejection probabilities and the prior-weighted overall power.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerResult {
    /// `per_g[i]` is the rejection probability with `G = i + 1` active
    /// cohorts.
    pub per_g: Vec<RateEstimate>,
    /// Prior-weighted average of the per-G probabilities.
    pub overall: ProbValue,
    /// Standard error of `overall` from the per-replicate prior-weighted
    /// rejection indicator.
    pub overall_std_error: f64,
    /// The calibrated level every scenario rejected at.
    pub alpha_star_used: ProbValue,
}

impl PowerResult {
    /// Rejection probability for a specific `G`, if computed.
    pub fn p_of_g(&self, g: usize) -> Option<RateEstimate> {
        (g >= 1).then(|| self.per_g.get(g - 1).copied()).flatten()
    }
}

/// The alternative p-value transform applied to an already-drawn uniform:
/// `Φ[Φ⁻¹(1 - u) - gamma]`.
pub fn alternative_pvalue_from_uniform(u: ProbValue, gamma: f64) -> ProbValue {
    numerics::norm_cdf(numerics::probit_upper(u.get()) - gamma)
}

/// Draws one alternative-hypothesis p-value from the stream.
pub fn draw_alternative_pvalue(gamma: f64, stream: &RngStream, counter: u64) -> ProbValue {
    alternative_pvalue_from_uniform(stream.uniform_draw(counter), gamma)
}

/// Fills the scratch base/alternative p-value caches for replicate `rep`.
///
/// `per_cohort_gammas[k]` is the effect cohort `k` carries when active. A
/// zero effect keeps the base draw untouched, which makes the zero-gamma
/// scenario identical to the null path bit for bit.
fn replicate_pvalue_caches(
    design: &DesignSpec,
    per_cohort_gammas: &[f64],
    rep: u64,
    scratch: &mut ReplicateScratch,
) {
    base_pvalues_into(design, rep, &mut scratch.p_base);
    scratch.p_alt.clear();
    for (&base, &gamma) in scratch.p_base.iter().zip(per_cohort_gammas) {
        let p = if gamma == 0.0 {
            base
        } else {
            alternative_pvalue_from_uniform(ProbValue::new_unchecked(base), gamma).get()
        };
        scratch.p_alt.push(p);
    }
}

/// Combined statistic of replicate `rep` when the first `g` cohorts are
/// active.
pub fn scenario_statistic(
    design: &DesignSpec,
    per_cohort_gammas: &[f64],
    g: usize,
    rep: u64,
    scratch: &mut ReplicateScratch,
) -> Option<f64> {
    replicate_pvalue_caches(design, per_cohort_gammas, rep, scratch);
    statistic_for_g(design, g, scratch)
}

fn statistic_for_g(design: &DesignSpec, g: usize, scratch: &mut ReplicateScratch) -> Option<f64> {
    scratch.pvec.clear();
    scratch.pvec.extend_from_slice(&scratch.p_alt[..g]);
    scratch.pvec.extend_from_slice(&scratch.p_base[g..]);
    combiner::statistic_into(
        &scratch.pvec,
        design.tau.get(),
        &design.weights,
        design.method,
        &mut scratch.survivors,
        &mut scratch.weights,
    )
}

/// Rejection indicators of replicate `rep` for every active count at once:
/// bit `g` of the mask is set when the design rejects with `G = g` active
/// cohorts (bit 0 is the null configuration).
pub fn reject_mask(
    design: &DesignSpec,
    per_cohort_gammas: &[f64],
    threshold: f64,
    rep: u64,
    scratch: &mut ReplicateScratch,
) -> u64 {
    replicate_pvalue_caches(design, per_cohort_gammas, rep, scratch);
    let mut mask = 0u64;
    for g in 0..=design.k {
        if matches!(statistic_for_g(design, g, scratch), Some(w) if w > threshold) {
            mask |= 1 << g;
        }
    }
    mask
}

/// Monte Carlo rejection probability of one scenario at a calibrated level.
pub fn power_given_g(scenario: &ScenarioSpec, alpha_star: ProbValue) -> Result<RateEstimate, Error> {
    scenario.validate()?;
    let design = &scenario.design;
    let mut per_cohort = vec![0.0; design.k];
    per_cohort[..scenario.g].copy_from_slice(&scenario.gammas);
    let threshold = rejection_threshold(design.method, alpha_star.get());
    let mut scratch = ReplicateScratch::new();
    let hits = (0..design.nsim as u64)
        .filter(|&rep| {
            matches!(
                scenario_statistic(design, &per_cohort, scenario.g, rep, &mut scratch),
                Some(w) if w > threshold
            )
        })
        .count();
    Ok(RateEstimate::from_count(hits, design.nsim))
}

/// Calibrates the design once, runs every `G = 1..=K` scenario on common
/// random numbers, and averages under the prior (uniform by default).
pub fn overall_power(
    design: &DesignSpec,
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
) -> Result<PowerResult, Error> {
    design.validate()?;
    let calibration = calibration::calibrate(design)?;
    overall_power_calibrated(design, gamma, prior_over_g, &calibration)
}

/// Overall power at an existing calibration of the same design.
pub fn overall_power_calibrated(
    design: &DesignSpec,
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
    calibration: &CalibrationResult,
) -> Result<PowerResult, Error> {
    design.validate()?;
    let per_cohort = gamma.active_effects(design.k, design.k)?;
    let prior = resolve_prior(design.k, prior_over_g)?;
    let threshold = rejection_threshold(design.method, calibration.alpha_star.get());
    let mut scratch = ReplicateScratch::new();
    let masks: Vec<u64> = (0..design.nsim as u64)
        .map(|rep| reject_mask(design, &per_cohort, threshold, rep, &mut scratch))
        .collect();
    Ok(power_from_masks(
        design,
        &prior,
        calibration.alpha_star,
        &masks,
    ))
}

/// The prior actually used: the given one (validated) or uniform over
/// `1..=K`.
pub fn resolve_prior(k: usize, prior: Option<&[f64]>) -> Result<Vec<f64>, Error> {
    match prior {
        Some(p) => {
            validate_prior(p, k)?;
            Ok(p.to_vec())
        }
        None => Ok(vec![1.0 / k as f64; k]),
    }
}

/// Aggregates per-replicate rejection masks into a [`PowerResult`].
///
/// The overall estimate is the prior-weighted sum of the per-G rates; its
/// standard error comes from the per-replicate weighted indicator, which
/// accounts for the common random numbers shared across G.
pub fn power_from_masks(
    design: &DesignSpec,
    prior: &[f64],
    alpha_star: ProbValue,
    masks: &[u64],
) -> PowerResult {
    let n = masks.len();
    let k = design.k;
    let mut counts = vec![0usize; k];
    for &mask in masks {
        for (g, count) in counts.iter_mut().enumerate() {
            *count += ((mask >> (g + 1)) & 1) as usize;
        }
    }
    let per_g: Vec<RateEstimate> = counts
        .iter()
        .map(|&hits| RateEstimate::from_count(hits, n))
        .collect();

    let overall: f64 = per_g
        .iter()
        .zip(prior)
        .map(|(est, &w)| w * est.value.get())
        .sum();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for &mask in masks {
        let mut a = 0.0;
        for (g, &w) in prior.iter().enumerate() {
            a += w * ((mask >> (g + 1)) & 1) as f64;
        }
        sum += a;
        sum_sq += a * a;
    }
    let overall_std_error = if n > 1 {
        let mean = sum / n as f64;
        let var = ((sum_sq - n as f64 * mean * mean) / (n as f64 - 1.0)).max(0.0);
        libm::sqrt(var / n as f64)
    } else {
        0.0
    };

    PowerResult {
        per_g,
        overall: ProbValue::new_unchecked(overall.clamp(0.0, 1.0)),
        overall_std_error,
        alpha_star_used: alpha_star,
    }
}
