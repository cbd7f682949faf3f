//! CSV serialization of result rows and convergence traces.
//!
//! One fixed column order across every mode; floating point is written in
//! scientific notation with nine fractional digits so a round-trip parse
//! recovers values to better than 1e-9 relative.

use crate::allocator::TraceRecord;
use crate::experiment::{LabelledTrace, ResultRow};
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("csv serialization failed for {path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("no rows to write")]
    Empty,
}

/// Column order of the result schema; stable across runs and modes.
pub const RESULT_COLUMNS: [&str; 40] = [
    "sweep_axis",
    "sweep_value",
    "method",
    "mode",
    "seed",
    "replicates",
    "status",
    "n_wifi",
    "dl_users",
    "ul_users",
    "payload_bytes",
    "mcot_s",
    "gnb_window",
    "tau_w",
    "tau_l",
    "p_w",
    "p_l",
    "r_gnb",
    "r_wifi_node",
    "wifi_rate_bps",
    "rate_floor_bps",
    "nr_dl_bps",
    "nr_ul_bps",
    "nr_total_bps",
    "nr_total_std_bps",
    "wifi_rate_virtual_bps",
    "fairness_slack_bps",
    "fairness_ok",
    "iterations",
    "sim_tau_w",
    "sim_tau_w_std",
    "sim_tau_l",
    "sim_tau_l_std",
    "sim_frac_idle",
    "sim_frac_wifi_succ",
    "sim_frac_gnb_succ",
    "sim_frac_wifi_coll",
    "sim_frac_cross_coll",
    "sim_wifi_goodput_bps",
    "sim_gnb_airtime_ratio",
];

fn fmt(v: f64) -> String {
    format!("{v:.9e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn fmt_bool(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".into(),
        Some(false) => "0".into(),
        None => String::new(),
    }
}

fn record(row: &ResultRow) -> Vec<String> {
    vec![
        row.sweep_axis.clone(),
        fmt(row.sweep_value),
        row.method.clone(),
        row.mode.clone(),
        row.seed.to_string(),
        row.replicates.to_string(),
        row.status.clone(),
        row.n_wifi.to_string(),
        row.dl_users.to_string(),
        row.ul_users.to_string(),
        fmt(row.payload_bytes),
        fmt(row.mcot_s),
        fmt(row.gnb_window),
        fmt_opt(row.tau_w),
        fmt_opt(row.tau_l),
        fmt_opt(row.p_w),
        fmt_opt(row.p_l),
        fmt_opt(row.r_gnb),
        fmt_opt(row.r_wifi_node),
        fmt_opt(row.wifi_rate_bps),
        fmt_opt(row.rate_floor_bps),
        fmt_opt(row.nr_dl_bps),
        fmt_opt(row.nr_ul_bps),
        fmt_opt(row.nr_total_bps),
        fmt_opt(row.nr_total_std_bps),
        fmt_opt(row.wifi_rate_virtual_bps),
        fmt_opt(row.fairness_slack_bps),
        fmt_bool(row.fairness_ok),
        fmt_opt(row.iterations),
        fmt_opt(row.sim_tau_w),
        fmt_opt(row.sim_tau_w_std),
        fmt_opt(row.sim_tau_l),
        fmt_opt(row.sim_tau_l_std),
        fmt_opt(row.sim_frac_idle),
        fmt_opt(row.sim_frac_wifi_succ),
        fmt_opt(row.sim_frac_gnb_succ),
        fmt_opt(row.sim_frac_wifi_coll),
        fmt_opt(row.sim_frac_cross_coll),
        fmt_opt(row.sim_wifi_goodput_bps),
        fmt_opt(row.sim_gnb_airtime_ratio),
    ]
}

/// Write result rows as an RFC-4180 CSV file with the fixed header.
pub fn emit_results<P: AsRef<Path>>(rows: &[ResultRow], path: P) -> Result<(), CsvError> {
    if rows.is_empty() {
        return Err(CsvError::Empty);
    }
    let path_str = path.as_ref().display().to_string();
    let mut writer = csv::Writer::from_path(path.as_ref())
        .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
    writer
        .write_record(RESULT_COLUMNS)
        .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
    for row in rows {
        writer
            .write_record(record(row))
            .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
    }
    writer.flush().map_err(|source| CsvError::Io { path: path_str, source })?;
    Ok(())
}

/// Serialize result rows to a CSV string (used for byte-identity checks).
pub fn results_to_string(rows: &[ResultRow]) -> Result<String, CsvError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(RESULT_COLUMNS)
        .map_err(|source| CsvError::Csv { path: "<mem>".into(), source })?;
    for row in rows {
        writer
            .write_record(record(row))
            .map_err(|source| CsvError::Csv { path: "<mem>".into(), source })?;
    }
    let bytes = writer.into_inner().expect("in-memory writer");
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

const TRACE_COLUMNS: [&str; 9] = [
    "label",
    "outer",
    "inner",
    "objective_bps",
    "weighted_objective_bps",
    "max_violation",
    "max_alpha",
    "theta",
    "gamma",
];

fn trace_record(label: &str, r: &TraceRecord) -> Vec<String> {
    vec![
        label.to_string(),
        r.outer.to_string(),
        r.inner.to_string(),
        fmt(r.objective),
        fmt(r.weighted_objective),
        fmt(r.max_violation),
        fmt(r.max_alpha),
        fmt(r.theta),
        fmt(r.gamma),
    ]
}

/// Write convergence traces as CSV.
pub fn emit_traces<P: AsRef<Path>>(traces: &[LabelledTrace], path: P) -> Result<(), CsvError> {
    let path_str = path.as_ref().display().to_string();
    let mut writer = csv::Writer::from_path(path.as_ref())
        .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
    writer
        .write_record(TRACE_COLUMNS)
        .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
    for t in traces {
        for r in &t.records {
            writer
                .write_record(trace_record(&t.label, r))
                .map_err(|source| CsvError::Csv { path: path_str.clone(), source })?;
        }
    }
    writer.flush().map_err(|source| CsvError::Io { path: path_str, source })?;
    Ok(())
}
