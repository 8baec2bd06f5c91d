//! Grid experiments over `(K, tau)` design points.
//!
//! A sweep evaluates one calibration (or one overall-power run) per cell of
//! the Cartesian product of the requested `K` values and the `tau` grid, and
//! collects the cells into a table ordered by `K` then `tau`. Cells whose
//! `alpha` target exceeds the feasibility ceiling are kept with an
//! `infeasible` status instead of aborting the sweep.
//!
//! Every cell derives its own seed from `(master_seed, K, tau)`, so adding a
//! `K` value or extending the grid never perturbs existing cells, and
//! rerunning a sweep with identical settings reproduces the table bit for
//! bit.

use alloc::string::String;
use alloc::vec::Vec;

use crate::calibration::{self, DesignSpec, DEFAULT_ALPHA, DEFAULT_NSIM, DEFAULT_SEED};
use crate::combiner::{CombinationMethod, WeightScheme};
use crate::numerics::ProbValue;
use crate::power::{self, GammaSpec};
use crate::Error;

/// What a sweep table tabulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    /// Calibrated pooled-analysis level per cell.
    AlphaStarVsTau,
    /// Prior-averaged overall power per cell.
    PowerVsTau,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::AlphaStarVsTau => "alpha-star",
            SweepKind::PowerVsTau => "power",
        }
    }
}

/// Whether a cell produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellStatus {
    Ok,
    Infeasible,
}

impl CellStatus {
    pub fn name(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Infeasible => "infeasible",
        }
    }
}

/// One sweep cell.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub k: usize,
    pub tau: f64,
    pub alpha: f64,
    pub method: CombinationMethod,
    pub weights: String,
    /// `None` when the cell is infeasible.
    pub value: Option<f64>,
    pub std_error: Option<f64>,
    pub status: CellStatus,
    pub nsim: usize,
    pub seed: u64,
}

/// A complete sweep, rows sorted by `K` then `tau`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub kind: SweepKind,
    pub rows: Vec<SweepRow>,
}

/// Simulation settings shared by every cell of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub alpha: ProbValue,
    pub method: CombinationMethod,
    pub weights: WeightScheme,
    pub nsim: usize,
    pub master_seed: u64,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            alpha: ProbValue::new_unchecked(DEFAULT_ALPHA),
            method: CombinationMethod::InverseNormal,
            weights: WeightScheme::Equal,
            nsim: DEFAULT_NSIM,
            master_seed: DEFAULT_SEED,
        }
    }
}

/// The default threshold grid, 0.01 through 1.00 in steps of 0.01.
pub fn default_tau_grid() -> Vec<f64> {
    tau_grid(0.01, 1.0, 0.01).expect("default grid is valid")
}

/// The default cohort-count set {2, 3, 4, 5, 6}.
pub fn default_k_values() -> Vec<usize> {
    alloc::vec![2, 3, 4, 5, 6]
}

/// Builds an inclusive `start..=stop` grid with spacing `step`, snapping each
/// point to 9 decimals so grid values compare (and hash into cell seeds)
/// predictably.
pub fn tau_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, Error> {
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(Error::InvalidDesign("grid bounds must be finite"));
    }
    if start <= 0.0 || stop > 1.0 || start > stop || step <= 0.0 {
        return Err(Error::InvalidDesign(
            "grid must satisfy 0 < start <= stop <= 1 with positive step",
        ));
    }
    let count = libm::floor((stop - start) / step + 0.5) as usize;
    let mut grid = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let tau = snap(start + i as f64 * step);
        if tau <= stop + 0.5 * step && tau <= 1.0 {
            grid.push(tau);
        }
    }
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(grid)
}

fn snap(x: f64) -> f64 {
    libm::floor(x * 1e9 + 0.5) / 1e9
}

/// Seed for one sweep cell, a pure function of `(master_seed, K, tau)`.
pub fn cell_seed(master_seed: u64, k: usize, tau: f64) -> u64 {
    mix(master_seed ^ mix(k as u64) ^ mix(tau.to_bits()))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The design evaluated in cell `(k, tau)`.
pub fn design_for_cell(settings: &SweepSettings, k: usize, tau: f64) -> Result<DesignSpec, Error> {
    Ok(DesignSpec {
        k,
        tau: ProbValue::new(tau)?,
        alpha: settings.alpha,
        method: settings.method,
        weights: settings.weights.clone(),
        nsim: settings.nsim,
        master_seed: cell_seed(settings.master_seed, k, tau),
    })
}

/// One calibration cell.
pub fn alpha_star_row(settings: &SweepSettings, k: usize, tau: f64) -> Result<SweepRow, Error> {
    let design = design_for_cell(settings, k, tau)?;
    design.validate()?;
    let row = |value, se, status| SweepRow {
        kind: SweepKind::AlphaStarVsTau,
        k,
        tau,
        alpha: settings.alpha.get(),
        method: settings.method,
        weights: settings.weights.descriptor(),
        value,
        std_error: se,
        status,
        nsim: settings.nsim,
        seed: settings.master_seed,
    };
    match calibration::calibrate(&design) {
        Ok(result) => Ok(row(
            Some(result.alpha_star.get()),
            Some(result.mc_standard_error),
            CellStatus::Ok,
        )),
        Err(Error::InfeasibleDesign { .. }) => Ok(row(None, None, CellStatus::Infeasible)),
        Err(other) => Err(other),
    }
}

/// One overall-power cell.
pub fn power_row(
    settings: &SweepSettings,
    k: usize,
    tau: f64,
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
) -> Result<SweepRow, Error> {
    let design = design_for_cell(settings, k, tau)?;
    design.validate()?;
    let row = |value, se, status| SweepRow {
        kind: SweepKind::PowerVsTau,
        k,
        tau,
        alpha: settings.alpha.get(),
        method: settings.method,
        weights: settings.weights.descriptor(),
        value,
        std_error: se,
        status,
        nsim: settings.nsim,
        seed: settings.master_seed,
    };
    match power::overall_power(&design, gamma, prior_over_g) {
        Ok(result) => Ok(row(
            Some(result.overall.get()),
            Some(result.overall_std_error),
            CellStatus::Ok,
        )),
        Err(Error::InfeasibleDesign { .. }) => Ok(row(None, None, CellStatus::Infeasible)),
        Err(other) => Err(other),
    }
}

/// Sorted, deduplicated copy of the requested cohort counts.
pub fn canonical_k_values(k_values: &[usize]) -> Result<Vec<usize>, Error> {
    if k_values.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn check_grid(taus: &[f64]) -> Result<(), Error> {
    if taus.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(())
}

/// Calibrated `alpha_star` over the full `(K, tau)` grid.
pub fn sweep_alpha_star(
    k_values: &[usize],
    taus: &[f64],
    settings: &SweepSettings,
) -> Result<SweepTable, Error> {
    check_grid(taus)?;
    let ks = canonical_k_values(k_values)?;
    let mut rows = Vec::with_capacity(ks.len() * taus.len());
    for &k in &ks {
        for &tau in taus {
            rows.push(alpha_star_row(settings, k, tau)?);
        }
    }
    Ok(SweepTable {
        kind: SweepKind::AlphaStarVsTau,
        rows,
    })
}

/// Overall power over the full `(K, tau)` grid.
///
/// A non-uniform prior (or per-cohort gamma list) fixes a single cohort
/// count, so those are only accepted when `k_values` has exactly one entry.
pub fn sweep_power(
    k_values: &[usize],
    taus: &[f64],
    gamma: &GammaSpec,
    prior_over_g: Option<&[f64]>,
    settings: &SweepSettings,
) -> Result<SweepTable, Error> {
    check_grid(taus)?;
    let ks = canonical_k_values(k_values)?;
    if ks.len() > 1 {
        if prior_over_g.is_some() {
            return Err(Error::InvalidPrior(
                "an explicit prior needs a single K value",
            ));
        }
        if matches!(gamma, GammaSpec::PerCohort(_)) {
            return Err(Error::InvalidDesign(
                "per-cohort gamma lists need a single K value",
            ));
        }
    }
    let mut rows = Vec::with_capacity(ks.len() * taus.len());
    for &k in &ks {
        for &tau in taus {
            rows.push(power_row(settings, k, tau, gamma, prior_over_g)?);
        }
    }
    Ok(SweepTable {
        kind: SweepKind::PowerVsTau,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_both_endpoints() {
        let g = tau_grid(0.01, 1.0, 0.01).unwrap();
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 0.01);
        assert_eq!(*g.last().unwrap(), 1.0);
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(tau_grid(0.0, 1.0, 0.01).is_err());
        assert!(tau_grid(0.5, 0.2, 0.01).is_err());
        assert!(tau_grid(0.1, 1.1, 0.01).is_err());
        assert!(tau_grid(0.1, 0.9, 0.0).is_err());
    }

    #[test]
    fn cell_seed_ignores_unrelated_cells() {
        let a = cell_seed(43, 3, 0.2);
        assert_eq!(a, cell_seed(43, 3, 0.2));
        assert_ne!(a, cell_seed(43, 4, 0.2));
        assert_ne!(a, cell_seed(43, 3, 0.21));
        assert_ne!(a, cell_seed(44, 3, 0.2));
    }

    #[test]
    fn k_values_are_canonicalized() {
        assert_eq!(canonical_k_values(&[4, 2, 4, 3]).unwrap(), vec![2, 3, 4]);
        assert!(canonical_k_values(&[]).is_err());
    }
}
