//! Worker-count-aware execution of the replicate loops.
//!
//! Every parallel entry point maps a pure per-replicate (or per-cell)
//! function over an indexed range and collects in index order, so the output
//! is bit-identical to the serial path for any worker count. Worker count
//! affects wall-clock time only.

use prunepool_core::calibration::{
    self, CalibrationResult, DesignSpec, RateEstimate, ReplicateScratch,
};
use prunepool_core::power::{self, GammaSpec, PowerResult, ScenarioSpec};
use prunepool_core::sweeps::{self, SweepKind, SweepSettings, SweepTable};
use prunepool_core::{Error, ProbValue};
use rayon::prelude::*;

/// A dedicated pool with exactly `workers` threads.
pub fn thread_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool construction cannot fail with a positive size")
}

/// Implied null combination p-values in replicate order.
pub fn null_implied_pvalues(spec: &DesignSpec, workers: usize) -> Result<Vec<f64>, Error> {
    spec.validate()?;
    let qs = thread_pool(workers).install(|| {
        (0..spec.nsim as u64)
            .into_par_iter()
            .map_init(ReplicateScratch::new, |scratch, rep| {
                calibration::null_implied_pvalue(spec, rep, scratch)
            })
            .collect()
    });
    Ok(qs)
}

/// Parallel quantile calibration; numerically identical to
/// [`calibration::calibrate`].
pub fn calibrate(spec: &DesignSpec, workers: usize) -> Result<CalibrationResult, Error> {
    spec.ensure_feasible()?;
    let qs = null_implied_pvalues(spec, workers)?;
    calibration::calibrate_from_implied(spec, qs)
}

/// Parallel Monte Carlo type I error.
pub fn type1_error(
    spec: &DesignSpec,
    alpha_star: ProbValue,
    workers: usize,
) -> Result<RateEstimate, Error> {
    spec.validate()?;
    if alpha_star.get() >= 1.0 {
        return Err(Error::InvalidDesign("alpha_star must be below 1"));
    }
    if alpha_star.get() == 0.0 {
        return Ok(RateEstimate::from_count(0, spec.nsim));
    }
    let threshold = calibration::rejection_threshold(spec.method, alpha_star.get());
    let hits = thread_pool(workers).install(|| {
        (0..spec.nsim as u64)
            .into_par_iter()
            .map_init(ReplicateScratch::new, |scratch, rep| {
                let stat = calibration::null_statistic(spec, rep, scratch);
                usize::from(matches!(stat, Some(w) if w > threshold))
            })
            .sum::<usize>()
    });
    Ok(RateEstimate::from_count(hits, spec.nsim))
}

/// Parallel rejection probability for one scenario.
pub fn power_given_g(
    scenario: &ScenarioSpec,
    alpha_star: ProbValue,
    workers: usize,
) -> Result<RateEstimate, Error> {
    scenario.validate()?;
    let design = &scenario.design;
    let mut per_cohort = vec![0.0; design.k];
    per_cohort[..scenario.g].copy_from_slice(&scenario.gammas);
    let threshold = calibration::rejection_threshold(design.method, alpha_star.get());
    let g = scenario.g;
    let hits = thread_pool(workers).install(|| {
        (0..design.nsim as u64)
            .into_par_iter()
            .map_init(ReplicateScratch::new, |scratch, rep| {
                let stat = power::scenario_statistic(design, &per_cohort, g, rep, scratch);
                usize::from(matches!(stat, Some(w) if w > threshold))
            })
            .sum::<usize>()
    });
    Ok(RateEstimate::from_count(hits, design.nsim))
}

/// Parallel overall power; numerically identical to
/// [`power::overall_power`].
pub fn overall_power(
    design: &DesignSpec,
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
    workers: usize,
) -> Result<PowerResult, Error> {
    design.validate()?;
    let calibration = calibrate(design, workers)?;
    let per_cohort = gamma.active_effects(design.k, design.k)?;
    let prior = power::resolve_prior(design.k, prior_over_g)?;
    let threshold =
        calibration::rejection_threshold(design.method, calibration.alpha_star.get());
    let masks: Vec<u64> = thread_pool(workers).install(|| {
        (0..design.nsim as u64)
            .into_par_iter()
            .map_init(ReplicateScratch::new, |scratch, rep| {
                power::reject_mask(design, &per_cohort, threshold, rep, scratch)
            })
            .collect()
    });
    Ok(power::power_from_masks(
        design,
        &prior,
        calibration.alpha_star,
        &masks,
    ))
}

/// Parallel sweep: cells fan out across workers, each cell runs serially,
/// and rows come back in canonical (K, tau) order.
pub fn sweep(
    kind: SweepKind,
    k_values: &[usize],
    taus: &[f64],
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
    settings: &SweepSettings,
    workers: usize,
) -> Result<SweepTable, Error> {
    if taus.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let ks = sweeps::canonical_k_values(k_values)?;
    if ks.len() > 1 {
        if prior_over_g.is_some() {
            return Err(Error::InvalidPrior(
                "an explicit prior needs a single K value",
            ));
        }
        if matches!(gamma, GammaSpec::PerCohort(_)) && kind == SweepKind::PowerVsTau {
            return Err(Error::InvalidDesign(
                "per-cohort gamma lists need a single K value",
            ));
        }
    }
    let cells: Vec<(usize, f64)> = ks
        .iter()
        .flat_map(|&k| taus.iter().map(move |&tau| (k, tau)))
        .collect();
    let rows: Result<Vec<_>, Error> = thread_pool(workers).install(|| {
        cells
            .par_iter()
            .map(|&(k, tau)| match kind {
                SweepKind::AlphaStarVsTau => sweeps::alpha_star_row(settings, k, tau),
                SweepKind::PowerVsTau => {
                    sweeps::power_row(settings, k, tau, gamma, prior_over_g)
                }
            })
            .collect()
    });
    Ok(SweepTable { kind, rows: rows? })
}
