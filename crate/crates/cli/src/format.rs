//! Byte-stable CSV and JSON rendering.
//!
//! Numeric fields print with 6 significant digits through one shared
//! formatter, so identical invocations produce identical bytes on any
//! platform and worker count.

use prunepool_core::calibration::{CalibrationResult, RateEstimate};
use prunepool_core::power::PowerResult;
use prunepool_core::sweeps::SweepTable;

/// `value` and `se` column for a cell with no estimate.
const NA: &str = "NA";

/// Formats `x` with 6 significant digits, positional where reasonable and
/// scientific otherwise.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return NA.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..6).contains(&magnitude) {
        let decimals = (5 - magnitude).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

fn sig6_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_else(|| NA.to_string())
}

fn json_number_opt(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_else(|| "null".to_string())
}

/// Quotes a CSV field only when it needs it.
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub const SWEEP_CSV_HEADER: &str = "kind,K,tau,alpha,method,weights,value,se,status,nsim,seed";

/// Sweep table as CSV with the canonical header.
pub fn sweep_csv(table: &SweepTable) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.kind.name(),
            row.k,
            sig6(row.tau),
            sig6(row.alpha),
            row.method.name(),
            csv_field(&row.weights),
            sig6_opt(row.value),
            sig6_opt(row.std_error),
            row.status.name(),
            row.nsim,
            row.seed,
        ));
    }
    out
}

/// Sweep table as a JSON array of row objects mirroring the CSV fields.
pub fn sweep_json(table: &SweepTable) -> String {
    let mut out = String::from("[\n");
    for (i, row) in table.rows.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        out.push_str(&format!(
            "  {{\"kind\":\"{}\",\"K\":{},\"tau\":{},\"alpha\":{},\"method\":\"{}\",\"weights\":\"{}\",\"value\":{},\"se\":{},\"status\":\"{}\",\"nsim\":{},\"seed\":{}}}",
            row.kind.name(),
            row.k,
            sig6(row.tau),
            sig6(row.alpha),
            row.method.name(),
            row.weights,
            json_number_opt(row.value),
            json_number_opt(row.std_error),
            row.status.name(),
            row.nsim,
            row.seed,
        ));
    }
    out.push_str("\n]\n");
    out
}

/// Calibration report as a flat JSON object.
pub fn calibration_json(res: &CalibrationResult) -> String {
    format!(
        "{{\"alpha_star\":{},\"w_star\":{},\"achieved_t1e\":{},\"se\":{},\"feasible\":{}}}\n",
        sig6(res.alpha_star.get()),
        sig6(res.w_star),
        sig6(res.achieved_t1e.get()),
        sig6(res.mc_standard_error),
        res.feasible,
    )
}

/// Calibration report as a one-row CSV.
pub fn calibration_csv(res: &CalibrationResult) -> String {
    format!(
        "alpha_star,w_star,achieved_t1e,se,feasible\n{},{},{},{},{}\n",
        sig6(res.alpha_star.get()),
        sig6(res.w_star),
        sig6(res.achieved_t1e.get()),
        sig6(res.mc_standard_error),
        res.feasible,
    )
}

/// Type I error report as a flat JSON object.
pub fn t1e_json(est: &RateEstimate, alpha_star: f64) -> String {
    format!(
        "{{\"t1e\":{},\"se\":{},\"alpha_star\":{}}}\n",
        sig6(est.value.get()),
        sig6(est.std_error),
        sig6(alpha_star),
    )
}

/// Type I error report as a one-row CSV.
pub fn t1e_csv(est: &RateEstimate, alpha_star: f64) -> String {
    format!(
        "t1e,se,alpha_star\n{},{},{}\n",
        sig6(est.value.get()),
        sig6(est.std_error),
        sig6(alpha_star),
    )
}

/// Power report as a flat JSON object keyed `per_G`, `overall`,
/// `alpha_star_used`.
pub fn power_json(res: &PowerResult, g_offset: usize) -> String {
    let mut per_g = String::from("{");
    for (i, est) in res.per_g.iter().enumerate() {
        if i > 0 {
            per_g.push(',');
        }
        per_g.push_str(&format!(
            "\"{}\":{{\"value\":{},\"se\":{}}}",
            g_offset + i,
            sig6(est.value.get()),
            sig6(est.std_error),
        ));
    }
    per_g.push('}');
    format!(
        "{{\"per_G\":{},\"overall\":{},\"alpha_star_used\":{}}}\n",
        per_g,
        sig6(res.overall.get()),
        sig6(res.alpha_star_used.get()),
    )
}

/// Power report as CSV rows, one per computed `G`, then the overall and
/// level rows.
pub fn power_csv(res: &PowerResult, g_offset: usize) -> String {
    let mut out = String::from("metric,g,value,se\n");
    for (i, est) in res.per_g.iter().enumerate() {
        out.push_str(&format!(
            "p_given_g,{},{},{}\n",
            g_offset + i,
            sig6(est.value.get()),
            sig6(est.std_error),
        ));
    }
    out.push_str(&format!(
        "overall,,{},{}\n",
        sig6(res.overall.get()),
        sig6(res.overall_std_error),
    ));
    out.push_str(&format!(
        "alpha_star_used,,{},\n",
        sig6(res.alpha_star_used.get()),
    ));
    out
}

/// Oracle report as a flat JSON object.
pub fn oracle_json(
    exact: f64,
    mc: f64,
    se: f64,
    discrepancy_se: f64,
    parity_ok: bool,
) -> String {
    format!(
        "{{\"exact\":{},\"mc\":{},\"se\":{},\"discrepancy_se\":{},\"parity_ok\":{}}}\n",
        sig6(exact),
        sig6(mc),
        sig6(se),
        sig6(discrepancy_se),
        parity_ok,
    )
}
