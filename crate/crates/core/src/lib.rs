#![cfg_attr(not(test), no_std)]

//! Deterministic engine for pruning-and-pooling basket-trial designs based on
//! truncated p-value combination tests.
//!
//! A design watches `K` indication cohorts, prunes every cohort whose p-value
//! exceeds the threshold `tau`, and pools the survivors into one combination
//! statistic (inverse-normal or Fisher). The engine:
//!
//! * calibrates the pooled-analysis level `alpha_star` (equivalently the
//!   critical value `w_star`) so the overall type I error equals `alpha`
//!   ([`calibration`]), with exact oracles for `K <= 2`,
//! * estimates rejection probabilities under alternatives with `G` truly
//!   active cohorts, and the prior-averaged overall power ([`power`]),
//! * runs `(K, tau)` grid experiments behind the CSV/JSON tables emitted by
//!   the companion CLI crate ([`sweeps`]).
//!
//! All randomness flows through counter-based streams
//! ([`numerics::RngStream`]): every Monte Carlo replicate is a pure function
//! of `(master_seed, replicate_index)`, so results are bit-identical no
//! matter how the work is scheduled or parallelized.

extern crate alloc;

pub mod calibration;
pub mod combiner;
pub mod numerics;
pub mod power;
mod quad;
pub mod sweeps;

pub use calibration::{
    calibrate, calibrate_bisection, exact_t1e, type1_error, CalibrationResult, DesignSpec,
    RateEstimate, ReplicateScratch,
};
pub use combiner::{combine, realize_weights, CombinationMethod, CombinedStatistic, WeightScheme};
pub use numerics::{inv_norm_cdf, norm_cdf, norm_sf, ProbValue, RngStream};
pub use power::{
    draw_alternative_pvalue, overall_power, power_given_g, GammaSpec, PowerResult, ScenarioSpec,
};
pub use sweeps::{
    sweep_alpha_star, sweep_power, CellStatus, SweepKind, SweepRow, SweepSettings, SweepTable,
};

use core::fmt;

/// Errors surfaced by the engine.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    /// A probability-typed input was NaN or outside `[0, 1]`.
    InvalidProbability(f64),
    /// `Φ⁻¹` was asked for an exact-boundary probability without clamping.
    ProbabilityAtBoundary(f64),
    /// Weights cannot be realized over an empty survivor set.
    EmptySurvivorSet,
    /// A vector argument did not match the expected length.
    LengthMismatch { expected: usize, actual: usize },
    /// Sample-size weights need every `n_k` finite and positive.
    NonPositiveSampleSize(f64),
    /// A design field violated its contract (the message names the field).
    InvalidDesign(&'static str),
    /// `alpha` exceeds the largest type I error the design can reach,
    /// `1 - (1 - tau)^K`; replicates with every cohort pruned never reject.
    InfeasibleDesign { alpha: f64, ceiling: f64 },
    /// Exact type I error oracles cover K = 1 and K = 2 only.
    UnsupportedK(usize),
    /// A prior over the number of active cohorts was malformed.
    InvalidPrior(&'static str),
    /// A sweep was requested over an empty grid.
    EmptyGrid,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidProbability(v) => write!(f, "probability out of range [0, 1]: {v}"),
            Error::ProbabilityAtBoundary(v) => {
                write!(f, "quantile undefined at boundary probability {v}")
            }
            Error::EmptySurvivorSet => write!(f, "no surviving cohorts"),
            Error::LengthMismatch { expected, actual } => {
                write!(f, "length mismatch: expected {expected}, got {actual}")
            }
            Error::NonPositiveSampleSize(n) => {
                write!(f, "sample sizes must be positive and finite, got {n}")
            }
            Error::InvalidDesign(msg) => write!(f, "invalid design: {msg}"),
            Error::InfeasibleDesign { alpha, ceiling } => write!(
                f,
                "infeasible design: alpha {alpha} exceeds the achievable ceiling {ceiling}"
            ),
            Error::UnsupportedK(k) => write!(f, "exact oracle not available for K = {k}"),
            Error::InvalidPrior(msg) => write!(f, "invalid prior: {msg}"),
            Error::EmptyGrid => write!(f, "empty sweep grid"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
