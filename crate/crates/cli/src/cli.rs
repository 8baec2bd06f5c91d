//! Subcommand definitions and dispatch.
//!
//! Every subcommand is a pure function of its flags: identical invocations
//! produce identical bytes on stdout or in the output file, and `--workers`
//! never changes numeric output.
//!
//! Exit codes: 0 success, 2 flag or validation error, 3 infeasible design,
//! 4 oracle discrepancy.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prunepool_core::calibration::{self, DesignSpec};
use prunepool_core::power::{GammaSpec, ScenarioSpec};
use prunepool_core::sweeps::{self, SweepKind, SweepSettings};
use prunepool_core::{CombinationMethod, Error, ProbValue, RngStream, WeightScheme};

use crate::exec;
use crate::format;

#[derive(Parser)]
#[command(
    name = "prunepool",
    version,
    about = "Calibration and power analysis for pruning-and-pooling basket trial designs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Calibrate the pooled-analysis level alpha_star for a design
    Calibrate {
        #[command(flatten)]
        design: DesignOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Monte Carlo type I error of a design at a given alpha_star
    T1e {
        #[command(flatten)]
        design: DesignOpts,
        /// Pooled-analysis level to reject at
        #[arg(long)]
        alpha_star: f64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Rejection probability under alternatives, per G and prior-averaged
    Power {
        #[command(flatten)]
        design: DesignOpts,
        /// Number of truly active cohorts; omit for the overall summary
        #[arg(long)]
        g: Option<usize>,
        /// Treatment effect: a scalar, or a comma list of length K
        #[arg(long, default_value = "2")]
        gamma: String,
        /// Prior over G=1..K as a comma list (uniform when omitted)
        #[arg(long)]
        prior: Option<String>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Grid experiments over (K, tau), emitted as CSV or JSON tables
    Sweep {
        /// What to tabulate per cell
        #[arg(long, value_enum)]
        kind: SweepKindArg,
        /// Cohort counts, comma separated
        #[arg(long, default_value = "2,3,4,5,6")]
        k_list: String,
        /// Threshold grid as start:stop:step
        #[arg(long, default_value = "0.01:1.0:0.01")]
        tau_grid: String,
        /// Overall type I error target
        #[arg(long, default_value_t = calibration::DEFAULT_ALPHA)]
        alpha: f64,
        /// Combination statistic
        #[arg(long, value_enum, default_value_t = MethodArg::Invnorm)]
        method: MethodArg,
        /// Cohort weights: `equal` or `n=<comma list>`
        #[arg(long, default_value = "equal")]
        weights: String,
        /// Treatment effect for power sweeps
        #[arg(long, default_value = "2")]
        gamma: String,
        /// Prior over G for power sweeps (single-K only)
        #[arg(long)]
        prior: Option<String>,
        /// Monte Carlo replicates per cell
        #[arg(long, default_value_t = calibration::DEFAULT_NSIM)]
        nsim: usize,
        /// Master seed; each cell derives its own stream from it
        #[arg(long, default_value_t = calibration::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Exact type I error oracle (K <= 2) checked against the Monte Carlo
    Oracle {
        /// Number of cohorts (1 or 2)
        #[arg(long)]
        k: usize,
        /// Pruning threshold
        #[arg(long)]
        tau: f64,
        /// Pooled-analysis level to evaluate
        #[arg(long)]
        alpha_star: f64,
        /// Monte Carlo replicates for the comparison estimate
        #[arg(long, default_value_t = calibration::DEFAULT_NSIM)]
        nsim: usize,
        /// Master seed
        #[arg(long, default_value_t = calibration::DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Args)]
pub struct DesignOpts {
    /// Number of indication cohorts
    #[arg(long)]
    pub k: usize,
    /// Pruning threshold in (0, 1]
    #[arg(long)]
    pub tau: f64,
    /// Overall type I error target
    #[arg(long, default_value_t = calibration::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Combination statistic
    #[arg(long, value_enum, default_value_t = MethodArg::Invnorm)]
    pub method: MethodArg,
    /// Cohort weights: `equal` or `n=<comma list>`
    #[arg(long, default_value = "equal")]
    pub weights: String,
    /// Monte Carlo replicates
    #[arg(long, default_value_t = calibration::DEFAULT_NSIM)]
    pub nsim: usize,
    /// Master seed
    #[arg(long, default_value_t = calibration::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Args)]
pub struct OutputOpts {
    /// Report format
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    pub format: FormatArg,
    /// Write to this file instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; affects wall-clock time only, never results
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Invnorm,
    Fisher,
}

impl From<MethodArg> for CombinationMethod {
    fn from(arg: MethodArg) -> Self {
        match arg {
            MethodArg::Invnorm => CombinationMethod::InverseNormal,
            MethodArg::Fisher => CombinationMethod::Fisher,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKindArg {
    AlphaStar,
    Power,
}

impl From<SweepKindArg> for SweepKind {
    fn from(arg: SweepKindArg) -> Self {
        match arg {
            SweepKindArg::AlphaStar => SweepKind::AlphaStarVsTau,
            SweepKindArg::Power => SweepKind::PowerVsTau,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

/// A failure with the process exit code it maps to.
pub struct AppError {
    pub code: i32,
    pub message: String,
}

impl AppError {
    fn flag(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for AppError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::InfeasibleDesign { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: err.to_string(),
        }
    }
}

fn prob(value: f64, what: &str) -> Result<ProbValue, AppError> {
    ProbValue::new(value).map_err(|_| AppError::flag(format!("{what} must lie in [0, 1], got {value}")))
}

fn parse_weights(text: &str) -> Result<WeightScheme, AppError> {
    if text == "equal" {
        return Ok(WeightScheme::Equal);
    }
    if let Some(list) = text.strip_prefix("n=") {
        let ns = parse_f64_list(list, "--weights")?;
        return Ok(WeightScheme::SampleSize(ns));
    }
    Err(AppError::flag(format!(
        "--weights must be `equal` or `n=<comma list>`, got `{text}`"
    )))
}

fn parse_gamma(text: &str) -> Result<GammaSpec, AppError> {
    if text.contains(',') {
        Ok(GammaSpec::PerCohort(parse_f64_list(text, "--gamma")?))
    } else {
        let value: f64 = text
            .trim()
            .parse()
            .map_err(|_| AppError::flag(format!("--gamma expects a number, got `{text}`")))?;
        Ok(GammaSpec::Scalar(value))
    }
}

fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, AppError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| AppError::flag(format!("{flag}: `{part}` is not a number")))
        })
        .collect()
}

fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>, AppError> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| AppError::flag(format!("{flag}: `{part}` is not a positive integer")))
        })
        .collect()
}

fn parse_tau_grid(text: &str) -> Result<Vec<f64>, AppError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(AppError::flag(format!(
            "--tau-grid expects start:stop:step, got `{text}`"
        )));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| AppError::flag(format!("--tau-grid: `{part}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    sweeps::tau_grid(nums[0], nums[1], nums[2]).map_err(AppError::from)
}

fn design_from_opts(opts: &DesignOpts) -> Result<DesignSpec, AppError> {
    let design = DesignSpec {
        k: opts.k,
        tau: prob(opts.tau, "--tau")?,
        alpha: prob(opts.alpha, "--alpha")?,
        method: opts.method.into(),
        weights: parse_weights(&opts.weights)?,
        nsim: opts.nsim,
        master_seed: opts.seed,
    };
    design.validate()?;
    Ok(design)
}

fn emit(output: &OutputOpts, text: String) -> Result<(), AppError> {
    match &output.out {
        Some(path) => fs::write(path, text).map_err(|err| AppError {
            code: 1,
            message: format!("cannot write {}: {err}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Calibrate { design, output } => {
            let spec = design_from_opts(&design)?;
            let result = exec::calibrate(&spec, output.workers)?;
            let text = match output.format {
                FormatArg::Json => format::calibration_json(&result),
                FormatArg::Csv => format::calibration_csv(&result),
            };
            emit(&output, text)
        }
        Command::T1e {
            design,
            alpha_star,
            output,
        } => {
            let spec = design_from_opts(&design)?;
            let level = prob(alpha_star, "--alpha-star")?;
            let est = exec::type1_error(&spec, level, output.workers)?;
            let text = match output.format {
                FormatArg::Json => format::t1e_json(&est, level.get()),
                FormatArg::Csv => format::t1e_csv(&est, level.get()),
            };
            emit(&output, text)
        }
        Command::Power {
            design,
            g,
            gamma,
            prior,
            output,
        } => {
            let spec = design_from_opts(&design)?;
            let gamma = parse_gamma(&gamma)?;
            let prior: Option<Vec<f64>> = prior
                .as_deref()
                .map(|text| parse_f64_list(text, "--prior"))
                .transpose()?;
            match g {
                Some(g) => {
                    let calibrated = exec::calibrate(&spec, output.workers)?;
                    let scenario = ScenarioSpec {
                        gammas: gamma.active_effects(spec.k, g)?,
                        design: spec,
                        g,
                        prior_over_g: prior,
                    };
                    let est =
                        exec::power_given_g(&scenario, calibrated.alpha_star, output.workers)?;
                    let result = prunepool_core::power::PowerResult {
                        per_g: vec![est],
                        overall: est.value,
                        overall_std_error: est.std_error,
                        alpha_star_used: calibrated.alpha_star,
                    };
                    let text = match output.format {
                        FormatArg::Json => format::power_json(&result, g),
                        FormatArg::Csv => format::power_csv(&result, g),
                    };
                    emit(&output, text)
                }
                None => {
                    let result =
                        exec::overall_power(&spec, &gamma, prior.as_deref(), output.workers)?;
                    let text = match output.format {
                        FormatArg::Json => format::power_json(&result, 1),
                        FormatArg::Csv => format::power_csv(&result, 1),
                    };
                    emit(&output, text)
                }
            }
        }
        Command::Sweep {
            kind,
            k_list,
            tau_grid,
            alpha,
            method,
            weights,
            gamma,
            prior,
            nsim,
            seed,
            output,
        } => {
            let settings = SweepSettings {
                alpha: prob(alpha, "--alpha")?,
                method: method.into(),
                weights: parse_weights(&weights)?,
                nsim,
                master_seed: seed,
            };
            let k_values = parse_usize_list(&k_list, "--k-list")?;
            let taus = parse_tau_grid(&tau_grid)?;
            let gamma = parse_gamma(&gamma)?;
            let prior: Option<Vec<f64>> = prior
                .as_deref()
                .map(|text| parse_f64_list(text, "--prior"))
                .transpose()?;
            let table = exec::sweep(
                kind.into(),
                &k_values,
                &taus,
                &gamma,
                prior.as_deref(),
                &settings,
                output.workers,
            )?;
            let text = match output.format {
                FormatArg::Json => format::sweep_json(&table),
                FormatArg::Csv => format::sweep_csv(&table),
            };
            emit(&output, text)
        }
        Command::Oracle {
            k,
            tau,
            alpha_star,
            nsim,
            seed,
            output,
        } => {
            let tau = prob(tau, "--tau")?;
            let level = prob(alpha_star, "--alpha-star")?;
            let exact = calibration::exact_t1e(k, tau, level)?;

            let spec = DesignSpec {
                nsim,
                master_seed: seed,
                ..DesignSpec::new(k, tau)
            };
            let mc = exec::type1_error(&spec, level, output.workers)?;
            let discrepancy_se = if mc.std_error > 0.0 {
                (mc.value.get() - exact) / mc.std_error
            } else {
                0.0
            };

            // Differential check: the engine path and the reference
            // transliteration must agree replicate for replicate on a shared
            // injected uniform sequence.
            let parity_n = nsim.min(10_000);
            let stream = RngStream::new(seed.wrapping_add(1), 0);
            let uniforms: Vec<ProbValue> = (0..(k * parity_n) as u64)
                .map(|c| stream.uniform_draw(c))
                .collect();
            let reference = calibration::reference_parity_t1e(k, tau, level, &uniforms)?;
            let engine = calibration::type1_error_with_uniforms(k, tau, level, &uniforms)?;
            let parity_ok = reference == engine;

            let text = format::oracle_json(exact, mc.value.get(), mc.std_error, discrepancy_se, parity_ok);
            emit(&output, text)?;
            if discrepancy_se.abs() > 4.0 || !parity_ok {
                return Err(AppError {
                    code: 4,
                    message: format!(
                        "oracle discrepancy: exact {exact}, mc {} ({discrepancy_se:.2} se), parity_ok {parity_ok}",
                        mc.value.get()
                    ),
                });
            }
            Ok(())
        }
    }
}
