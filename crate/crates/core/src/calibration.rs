//! Type I error estimation and calibration of the pooled-analysis level.
//!
//! Under the global null every cohort p-value is Uniform(0,1). For a design
//! `(K, tau, method, weights)` the engine simulates the null distribution of
//! the combined statistic, maps each replicate to an implied combination
//! p-value `q_i`, and picks `alpha_star` as the empirical `alpha`-quantile of
//! the `q_i`. Rejection applies the strict rule `statistic > w_star`, where
//! `w_star = Φ⁻¹(1 - alpha_star)` for the inverse-normal statistic and
//! `w_star = -2 ln(alpha_star)` for Fisher (so `alpha_star` is the critical
//! truncated p-value product in that mode).
//!
//! Because the Monte Carlo type I error is a step function of `alpha_star`,
//! the quantile is the exact root; a bisection mode mirroring a root-solve on
//! the same replicate set is kept for cross-validation, and closed-form /
//! quadrature oracles cover `K <= 2`.
//!
//! Replicate `i` draws its uniforms from stream `i` of the master seed. The
//! first cohort's draw is additionally stratified over replicates (replicate
//! `i` lands in the `i`-th subinterval of `(0,1)`), which leaves every
//! marginal distribution untouched while pinning empirical quantiles of the
//! ensemble at `O(1/nsim)` resolution. Injected-uniform modes used for
//! differential testing consume their sequences verbatim, without
//! stratification.

use alloc::vec::Vec;

use crate::combiner::{self, CombinationMethod, WeightScheme};
use crate::numerics::{self, ProbValue, RngStream};
use crate::quad;
use crate::Error;

/// Simulation budget used when none is requested.
pub const DEFAULT_NSIM: usize = 100_000;
/// Master seed used when none is requested.
pub const DEFAULT_SEED: u64 = 43;
/// Overall type I error target used when none is requested.
pub const DEFAULT_ALPHA: f64 = 0.05;

/// Most cohorts a design may carry; keeps per-replicate rejection masks in a
/// single 64-bit word.
pub const MAX_INDICATIONS: usize = 63;

/// Complete description of one design point.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignSpec {
    /// Number of indication cohorts, `1..=MAX_INDICATIONS`.
    pub k: usize,
    /// Pruning threshold, in `(0, 1]`.
    pub tau: ProbValue,
    /// Overall type I error target, strictly inside `(0, 1)`.
    pub alpha: ProbValue,
    pub method: CombinationMethod,
    pub weights: WeightScheme,
    /// Monte Carlo replicates per estimate.
    pub nsim: usize,
    pub master_seed: u64,
}

impl DesignSpec {
    /// A design with the default alpha, method, weights, budget and seed.
    pub fn new(k: usize, tau: ProbValue) -> Self {
        Self {
            k,
            tau,
            alpha: ProbValue::new_unchecked(DEFAULT_ALPHA),
            method: CombinationMethod::InverseNormal,
            weights: WeightScheme::Equal,
            nsim: DEFAULT_NSIM,
            master_seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.k == 0 {
            return Err(Error::InvalidDesign("K must be at least 1"));
        }
        if self.k > MAX_INDICATIONS {
            return Err(Error::InvalidDesign("K exceeds the supported maximum"));
        }
        if self.tau.get() <= 0.0 {
            return Err(Error::InvalidDesign("tau must be positive"));
        }
        let a = self.alpha.get();
        if a <= 0.0 || a >= 1.0 {
            return Err(Error::InvalidDesign("alpha must lie strictly in (0, 1)"));
        }
        if self.nsim == 0 {
            return Err(Error::InvalidDesign("nsim must be positive"));
        }
        self.weights.validate(self.k)
    }

    /// Largest type I error the design can reach: `1 - (1 - tau)^K`.
    /// Replicates with every cohort pruned never reject.
    pub fn feasibility_ceiling(&self) -> f64 {
        1.0 - libm::pow(1.0 - self.tau.get(), self.k as f64)
    }

    /// Errors when `alpha` cannot be attained by any `alpha_star`.
    pub fn ensure_feasible(&self) -> Result<(), Error> {
        let ceiling = self.feasibility_ceiling();
        if self.alpha.get() > ceiling {
            return Err(Error::InfeasibleDesign {
                alpha: self.alpha.get(),
                ceiling,
            });
        }
        Ok(())
    }
}

/// Calibrated design summary.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationResult {
    /// Pooled-analysis level. For the inverse-normal statistic this is
    /// `1 - Φ(w_star)`; for Fisher it is the critical survivor product
    /// `exp(-w_star / 2)`.
    pub alpha_star: ProbValue,
    /// Rejection threshold on the statistic scale (strict `>`).
    pub w_star: f64,
    /// Monte Carlo type I error re-estimated at `alpha_star` on the same
    /// replicate set.
    pub achieved_t1e: ProbValue,
    /// Binomial standard error of `achieved_t1e`.
    pub mc_standard_error: f64,
    pub nsim: usize,
    pub feasible: bool,
}

/// A Monte Carlo rate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub value: ProbValue,
    pub std_error: f64,
}

impl RateEstimate {
    /// Rate over `n` replicates with `hits` successes.
    pub fn from_count(hits: usize, n: usize) -> Self {
        let t = hits as f64 / n as f64;
        Self {
            value: ProbValue::new_unchecked(t),
            std_error: libm::sqrt(t * (1.0 - t) / n as f64),
        }
    }
}

/// Reusable per-worker buffers for the replicate kernels.
#[derive(Clone, Debug, Default)]
pub struct ReplicateScratch {
    pub(crate) p_base: Vec<f64>,
    pub(crate) p_alt: Vec<f64>,
    pub(crate) pvec: Vec<f64>,
    pub(crate) survivors: Vec<usize>,
    pub(crate) weights: Vec<f64>,
}

impl ReplicateScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Fills `out` with replicate `rep`'s base (null) p-values.
///
/// Cohort 0 is stratified: its uniform is mapped into the `rep`-th
/// subinterval of `(0, 1)`. All other cohorts use their stream draw as-is.
pub(crate) fn base_pvalues_into(spec: &DesignSpec, rep: u64, out: &mut Vec<f64>) {
    let stream = RngStream::new(spec.master_seed, rep);
    out.clear();
    for k in 0..spec.k {
        let u = stream.uniform_draw(k as u64).get();
        let p = if k == 0 {
            (rep as f64 + u) / spec.nsim as f64
        } else {
            u
        };
        out.push(p);
    }
}

/// Combined statistic of replicate `rep` under the global null, `None` when
/// every cohort is pruned.
pub fn null_statistic(spec: &DesignSpec, rep: u64, scratch: &mut ReplicateScratch) -> Option<f64> {
    base_pvalues_into(spec, rep, &mut scratch.p_base);
    combiner::statistic_into(
        &scratch.p_base,
        spec.tau.get(),
        &spec.weights,
        spec.method,
        &mut scratch.survivors,
        &mut scratch.weights,
    )
}

/// Maps a combined statistic to its implied combination p-value.
///
/// Inverse-normal: `1 - Φ(W)`. Fisher: the survivor product `exp(-F/2)`, a
/// rank-equivalent score on `(0, 1]`. Absent statistics map to 1 (never
/// reject).
pub fn implied_pvalue_from_statistic(method: CombinationMethod, stat: Option<f64>) -> f64 {
    match stat {
        None => 1.0,
        Some(w) => match method {
            CombinationMethod::InverseNormal => numerics::norm_sf(w).get(),
            CombinationMethod::Fisher => libm::exp(-0.5 * w),
        },
    }
}

/// Implied combination p-value of replicate `rep` under the global null.
pub fn null_implied_pvalue(spec: &DesignSpec, rep: u64, scratch: &mut ReplicateScratch) -> f64 {
    implied_pvalue_from_statistic(spec.method, null_statistic(spec, rep, scratch))
}

/// Implied combination p-values for all `nsim` replicates, in replicate
/// order.
pub fn simulate_null_implied_pvalues(spec: &DesignSpec) -> Result<Vec<ProbValue>, Error> {
    spec.validate()?;
    let mut scratch = ReplicateScratch::new();
    Ok((0..spec.nsim as u64)
        .map(|rep| ProbValue::new_unchecked(null_implied_pvalue(spec, rep, &mut scratch)))
        .collect())
}

/// Statistic-scale threshold equivalent to rejecting when the implied
/// p-value falls strictly below `alpha_star`.
pub fn rejection_threshold(method: CombinationMethod, alpha_star: f64) -> f64 {
    match method {
        CombinationMethod::InverseNormal => {
            numerics::probit(numerics::clamp_interior(1.0 - alpha_star))
        }
        CombinationMethod::Fisher => -2.0 * libm::log(alpha_star),
    }
}

/// Monte Carlo type I error of rejecting at level `alpha_star`.
pub fn type1_error(spec: &DesignSpec, alpha_star: ProbValue) -> Result<RateEstimate, Error> {
    spec.validate()?;
    if alpha_star.get() >= 1.0 {
        return Err(Error::InvalidDesign("alpha_star must be below 1"));
    }
    if alpha_star.get() == 0.0 {
        // Nothing can have an implied p-value strictly below zero.
        return Ok(RateEstimate::from_count(0, spec.nsim));
    }
    let threshold = rejection_threshold(spec.method, alpha_star.get());
    let mut scratch = ReplicateScratch::new();
    let hits = (0..spec.nsim as u64)
        .filter(|&rep| matches!(null_statistic(spec, rep, &mut scratch), Some(w) if w > threshold))
        .count();
    Ok(RateEstimate::from_count(hits, spec.nsim))
}

/// Calibrates `alpha_star` by the empirical quantile of the implied null
/// p-values (serial evaluation).
pub fn calibrate(spec: &DesignSpec) -> Result<CalibrationResult, Error> {
    spec.validate()?;
    spec.ensure_feasible()?;
    let mut scratch = ReplicateScratch::new();
    let qs: Vec<f64> = (0..spec.nsim as u64)
        .map(|rep| null_implied_pvalue(spec, rep, &mut scratch))
        .collect();
    calibrate_from_implied(spec, qs)
}

/// Quantile calibration over a precomputed implied p-value sample.
///
/// Sorts the sample, takes `k = floor(alpha * nsim)`, and sets `alpha_star`
/// to the midpoint of the k-th and (k+1)-th smallest values, which puts the
/// achieved type I error within `1/nsim` of `alpha` away from the
/// feasibility boundary.
pub fn calibrate_from_implied(
    spec: &DesignSpec,
    mut qs: Vec<f64>,
) -> Result<CalibrationResult, Error> {
    spec.validate()?;
    spec.ensure_feasible()?;
    if qs.len() != spec.nsim {
        return Err(Error::LengthMismatch {
            expected: spec.nsim,
            actual: qs.len(),
        });
    }
    qs.sort_unstable_by(f64::total_cmp);
    let cut = libm::floor(spec.alpha.get() * spec.nsim as f64) as usize;
    let alpha_star = if cut == 0 {
        0.5 * qs[0]
    } else {
        0.5 * (qs[cut - 1] + qs[cut])
    };
    finish_calibration(spec, alpha_star)
}

/// Calibration by bisection of the empirical type I error step function, the
/// root-solve formulation; validates the quantile mode.
///
/// Both modes land inside the same inter-order-statistic gap, so their
/// achieved type I errors agree to within one empirical step (`1/nsim`).
pub fn calibrate_bisection(spec: &DesignSpec) -> Result<CalibrationResult, Error> {
    spec.validate()?;
    spec.ensure_feasible()?;
    let mut scratch = ReplicateScratch::new();
    let mut qs: Vec<f64> = (0..spec.nsim as u64)
        .map(|rep| null_implied_pvalue(spec, rep, &mut scratch))
        .collect();
    qs.sort_unstable_by(f64::total_cmp);

    let n = spec.nsim as f64;
    let alpha = spec.alpha.get();
    let t1e_at = |x: f64| qs.partition_point(|&q| q < x) as f64 / n - alpha;
    if t1e_at(1.0) < 0.0 {
        // The empirical ceiling fell short of alpha; only possible right at
        // the feasibility boundary.
        return Err(Error::InfeasibleDesign {
            alpha,
            ceiling: spec.feasibility_ceiling(),
        });
    }
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if t1e_at(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    finish_calibration(spec, 0.5 * (lo + hi))
}

fn finish_calibration(spec: &DesignSpec, alpha_star: f64) -> Result<CalibrationResult, Error> {
    let alpha_star = ProbValue::new(alpha_star)?;
    let achieved = type1_error(spec, alpha_star)?;
    Ok(CalibrationResult {
        alpha_star,
        w_star: rejection_threshold(spec.method, alpha_star.get()),
        achieved_t1e: achieved.value,
        mc_standard_error: achieved.std_error,
        nsim: spec.nsim,
        feasible: true,
    })
}

/// Exact type I error for equal-weight inverse-normal designs with K = 1 or
/// K = 2; the independent oracle for the Monte Carlo estimates.
///
/// K = 1 reduces to `min(tau, alpha_star)`. K = 2 splits by survivor count:
/// exactly one survivor rejects with probability `2 min(tau, alpha_star)
/// (1 - tau)`, and the two-survivor region integrates the conditional
/// rejection probability by adaptive quadrature to within 1e-8.
pub fn exact_t1e(k: usize, tau: ProbValue, alpha_star: ProbValue) -> Result<f64, Error> {
    if tau.get() <= 0.0 {
        return Err(Error::InvalidDesign("tau must be positive"));
    }
    let t = tau.get();
    let a = alpha_star.get();
    match k {
        1 => Ok(t.min(a)),
        2 => {
            let w_star = rejection_threshold(CombinationMethod::InverseNormal, a);
            let one_survivor = 2.0 * t.min(a) * (1.0 - t);

            // Both survive: W = (z1 + z2)/sqrt(2) with z = Φ⁻¹(1 - p).
            // Conditional on p1 = p, rejection needs p2 below
            // g(p) = 1 - Φ(sqrt(2) w* - Φ⁻¹(1 - p)), capped by survival at
            // tau. g is decreasing in p and crosses tau at `knee`; the cap
            // binds below it.
            let g = |p: f64| {
                numerics::norm_sf(
                    core::f64::consts::SQRT_2 * w_star - numerics::probit_upper(p),
                )
                .get()
            };
            let knee = numerics::norm_sf(
                core::f64::consts::SQRT_2 * w_star - numerics::probit_upper(t),
            )
            .get()
            .clamp(0.0, t);
            let capped = t * knee;
            let integrand = |p: f64| g(p).min(t);
            let smooth = quad::integrate(&integrand, knee, t, 1e-9);
            Ok(one_survivor + capped + smooth)
        }
        other => Err(Error::UnsupportedK(other)),
    }
}

/// Faithful reimplementation of the reference type I error loop for equal
/// weights: consumes an injected uniform sequence in its exact order and
/// transformation (`p = 1 - u`, prune with `<=`, weight `sqrt(1/m)`, reject
/// on strict `>`). Only used for differential testing.
pub fn reference_parity_t1e(
    k: usize,
    tau: ProbValue,
    alpha_star: ProbValue,
    uniforms: &[ProbValue],
) -> Result<f64, Error> {
    if k == 0 {
        return Err(Error::InvalidDesign("K must be at least 1"));
    }
    if uniforms.is_empty() || !uniforms.len().is_multiple_of(k) {
        return Err(Error::LengthMismatch {
            expected: k.max(1),
            actual: uniforms.len(),
        });
    }
    let nsim = uniforms.len() / k;
    let crit = numerics::probit(numerics::clamp_interior(1.0 - alpha_star.get()));
    let mut kept: Vec<f64> = Vec::with_capacity(k);
    let mut sig = 0usize;
    for chunk in uniforms.chunks_exact(k) {
        kept.clear();
        for u in chunk {
            let p = 1.0 - u.get();
            if p <= tau.get() {
                kept.push(p);
            }
        }
        if !kept.is_empty() {
            let coef = libm::sqrt(1.0 / kept.len() as f64);
            let mut w = 0.0;
            for &p in &kept {
                w += coef * numerics::probit_upper(p);
            }
            if w > crit {
                sig += 1;
            }
        }
    }
    Ok(sig as f64 / nsim as f64)
}

/// Engine-path type I error over the same injected uniform sequence and
/// reference transformation, routed through [`combine`](crate::combine). The
/// differential counterpart of [`reference_parity_t1e`].
pub fn type1_error_with_uniforms(
    k: usize,
    tau: ProbValue,
    alpha_star: ProbValue,
    uniforms: &[ProbValue],
) -> Result<f64, Error> {
    if k == 0 {
        return Err(Error::InvalidDesign("K must be at least 1"));
    }
    if uniforms.is_empty() || !uniforms.len().is_multiple_of(k) {
        return Err(Error::LengthMismatch {
            expected: k.max(1),
            actual: uniforms.len(),
        });
    }
    let nsim = uniforms.len() / k;
    let threshold = rejection_threshold(CombinationMethod::InverseNormal, alpha_star.get());
    let mut pvec: Vec<ProbValue> = Vec::with_capacity(k);
    let mut sig = 0usize;
    for chunk in uniforms.chunks_exact(k) {
        pvec.clear();
        for u in chunk {
            pvec.push(ProbValue::new_unchecked(1.0 - u.get()));
        }
        let stat = combiner::combine(
            &pvec,
            tau,
            &WeightScheme::Equal,
            CombinationMethod::InverseNormal,
        )?;
        if matches!(stat.value, Some(w) if w > threshold) {
            sig += 1;
        }
    }
    Ok(sig as f64 / nsim as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceiling_matches_closed_form() {
        let spec = DesignSpec::new(1, ProbValue::new(0.03).unwrap());
        assert!((spec.feasibility_ceiling() - 0.03).abs() < 1e-12);
        assert!(matches!(
            spec.ensure_feasible(),
            Err(Error::InfeasibleDesign { .. })
        ));
    }

    #[test]
    fn exact_t1e_k1_is_min_rule() {
        let t = |tau: f64, a: f64| {
            exact_t1e(1, ProbValue::new(tau).unwrap(), ProbValue::new(a).unwrap()).unwrap()
        };
        assert_eq!(t(0.2, 0.05), 0.05);
        assert_eq!(t(0.03, 0.05), 0.03);
    }

    #[test]
    fn exact_t1e_rejects_unsupported_k() {
        assert!(matches!(
            exact_t1e(
                3,
                ProbValue::new(0.2).unwrap(),
                ProbValue::new(0.05).unwrap()
            ),
            Err(Error::UnsupportedK(3))
        ));
    }

    #[test]
    fn zero_alpha_star_never_rejects() {
        let spec = DesignSpec::new(2, ProbValue::new(0.5).unwrap());
        let est = type1_error(&spec, ProbValue::new(0.0).unwrap()).unwrap();
        assert_eq!(est.value.get(), 0.0);
    }
}
