//! Experiment configuration: one TOML document describing the scenario, an
//! optional sweep axis, and run controls.
//!
//! All unit conversions happen here (dBm to W, ms to s, bytes to bits,
//! MHz to Hz); the rest of the crate is SI-only.

use crate::params::{NruParams, ParamError, WifiParams};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Params(#[from] ParamError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

/// Execution mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Coexistence metrics only (no gains, no optimisation).
    Analytic,
    /// Monte-Carlo MAC validation against the analytic model.
    Simulate,
    /// Full pipeline: coexistence, fairness floor, joint allocation.
    Optimize,
    /// Proposed allocator against the equal-time/equal-power family.
    CompareBaselines,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Optimize => "optimize",
            Mode::CompareBaselines => "compare-baselines",
        };
        f.write_str(s)
    }
}

/// Sweep axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    WifiNodes,
    Payload,
    Mcot,
    PDkMax,
    None,
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepAxis::WifiNodes => "wifi_nodes",
            SweepAxis::Payload => "payload",
            SweepAxis::Mcot => "mcot",
            SweepAxis::PDkMax => "p_dk_max",
            SweepAxis::None => "none",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_channels")]
    pub channels: u32,
    pub wifi_nodes: u32,
    pub dl_users: u32,
    pub ul_users: u32,
    #[serde(default = "default_payload")]
    pub payload_bytes: f64,
    #[serde(default = "default_mcot_ms")]
    pub mcot_ms: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_mhz: f64,
    #[serde(default = "default_class")]
    pub priority_class: u8,
    /// Fixed gNB window; omit (or 0) to tune it for airtime parity.
    #[serde(default)]
    pub gnb_window: f64,
    #[serde(default = "default_p_gnb")]
    pub p_gnb_max_dbm: f64,
    #[serde(default = "default_p_dk")]
    pub p_dk_max_dbm: f64,
    #[serde(default = "default_p_avg")]
    pub p_avg_dbm: f64,
    #[serde(default = "default_dist_min")]
    pub distance_min_m: f64,
    #[serde(default = "default_dist_max")]
    pub distance_max_m: f64,
    #[serde(default = "default_carrier")]
    pub carrier_ghz: f64,
    /// Monte-Carlo horizon for `simulate` mode.
    #[serde(default = "default_sim_slots")]
    pub sim_slots: u64,
}

fn default_channels() -> u32 {
    1
}
fn default_payload() -> f64 {
    1500.0
}
fn default_mcot_ms() -> f64 {
    8.0
}
fn default_bandwidth() -> f64 {
    20.0
}
fn default_class() -> u8 {
    4
}
fn default_p_gnb() -> f64 {
    35.0
}
fn default_p_dk() -> f64 {
    23.0
}
fn default_p_avg() -> f64 {
    23.0
}
fn default_dist_min() -> f64 {
    10.0
}
fn default_dist_max() -> f64 {
    2000.0
}
fn default_carrier() -> f64 {
    5.0
}
fn default_sim_slots() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    #[serde(default)]
    pub values: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { axis: SweepAxis::None, values: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: u32,
    /// Output CSV path; the CLI's `--out` takes precedence.
    #[serde(default)]
    pub output: Option<String>,
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn default_seed() -> u64 {
    1
}
fn default_replicates() -> u32 {
    1
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

const ADMISSIBLE_MCOT_MS: [f64; 4] = [2.0, 3.0, 8.0, 10.0];

impl ScenarioConfig {
    fn check_wifi_nodes(n: f64) -> Result<(), ConfigError> {
        if !(1.0..=64.0).contains(&n) || n.fract() != 0.0 {
            return Err(invalid("wifi_nodes", format!("{n} outside the integer range [1, 64]")));
        }
        Ok(())
    }

    fn check_payload(bytes: f64) -> Result<(), ConfigError> {
        if !(100.0..=4096.0).contains(&bytes) {
            return Err(invalid("payload_bytes", format!("{bytes} outside [100, 4096]")));
        }
        Ok(())
    }

    fn check_mcot(ms: f64) -> Result<(), ConfigError> {
        if !ADMISSIBLE_MCOT_MS.iter().any(|m| (m - ms).abs() < 1e-9) {
            return Err(invalid("mcot_ms", format!("{ms} not one of {ADMISSIBLE_MCOT_MS:?}")));
        }
        Ok(())
    }

    fn check_p_dk(dbm: f64) -> Result<(), ConfigError> {
        if !(0.0..=60.0).contains(&dbm) {
            return Err(invalid("p_dk_max_dbm", format!("{dbm} outside [0, 60] dBm")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        Self::check_wifi_nodes(self.wifi_nodes as f64)?;
        Self::check_payload(self.payload_bytes)?;
        Self::check_mcot(self.mcot_ms)?;
        Self::check_p_dk(self.p_dk_max_dbm)?;
        if self.channels < 1 {
            return Err(invalid("channels", "need at least one channel"));
        }
        if self.dl_users < 1 || self.ul_users < 1 {
            return Err(invalid("dl_users/ul_users", "need at least one user on each side"));
        }
        if self.gnb_window < 0.0 {
            return Err(invalid("gnb_window", "must be >= 0 (0 means tuned)"));
        }
        if self.distance_min_m < 10.0 || self.distance_max_m > 5000.0 || self.distance_min_m >= self.distance_max_m {
            return Err(invalid(
                "distance_min_m/distance_max_m",
                "need 10 <= min < max <= 5000",
            ));
        }
        if self.sim_slots < 1_000 {
            return Err(invalid("sim_slots", "need at least 1000 slots"));
        }
        // Constructing the parameter sets applies their own invariants.
        let _ = self.wifi_params()?;
        let _ = self.nru_params()?;
        Ok(())
    }

    /// WiFi parameter set (802.11n defaults with the configured payload).
    pub fn wifi_params(&self) -> Result<WifiParams, ConfigError> {
        let wifi = WifiParams::default_11n().with_payload_bytes(self.payload_bytes);
        wifi.validate()?;
        Ok(wifi)
    }

    /// Base NR-U parameter set before any window tuning.
    pub fn nru_params(&self) -> Result<NruParams, ConfigError> {
        let mut nru = NruParams::from_class(
            self.priority_class,
            if self.gnb_window > 0.0 { self.gnb_window } else { 16.0 },
            self.mcot_ms * 1e-3,
            16e-6,
            9e-6,
            0.25e-3,
        )?;
        nru.validate()?;
        if self.gnb_window > 0.0 {
            nru.cw_min = self.gnb_window;
        }
        Ok(nru)
    }

    /// Apply one sweep value, returning the modified scenario.
    pub fn with_sweep_value(&self, axis: SweepAxis, value: f64) -> Result<ScenarioConfig, ConfigError> {
        let mut s = self.clone();
        match axis {
            SweepAxis::WifiNodes => {
                Self::check_wifi_nodes(value)?;
                s.wifi_nodes = value as u32;
            }
            SweepAxis::Payload => {
                Self::check_payload(value)?;
                s.payload_bytes = value;
            }
            SweepAxis::Mcot => {
                Self::check_mcot(value)?;
                s.mcot_ms = value;
            }
            SweepAxis::PDkMax => {
                Self::check_p_dk(value)?;
                s.p_dk_max_dbm = value;
            }
            SweepAxis::None => {}
        }
        Ok(s)
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.replicates < 1 {
            return Err(invalid("replicates", "must be >= 1"));
        }
        self.scenario.validate()?;
        match self.sweep.axis {
            SweepAxis::None => {}
            axis => {
                if self.sweep.values.is_empty() {
                    return Err(invalid("sweep.values", "sweep axis set but no values given"));
                }
                for &v in &self.sweep.values {
                    self.scenario.with_sweep_value(axis, v)?;
                }
            }
        }
        Ok(())
    }

    /// The scenario variants this run covers: `(sweep value, scenario)`.
    /// A run without a sweep yields one entry keyed by NaN-free sentinel 0.
    pub fn sweep_points(&self) -> Vec<(f64, ScenarioConfig)> {
        match self.sweep.axis {
            SweepAxis::None => vec![(0.0, self.scenario.clone())],
            axis => self
                .sweep
                .values
                .iter()
                .map(|&v| (v, self.scenario.with_sweep_value(axis, v).expect("validated")))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        mode = "analytic"
        seed = 7
        replicates = 2
        [scenario]
        wifi_nodes = 10
        dl_users = 5
        ul_users = 5
        [sweep]
        axis = "wifi_nodes"
        values = [5, 10, 15]
    "#;

    #[test]
    fn parses_and_validates_sample() {
        let cfg = ExperimentConfig::from_toml_str(SAMPLE).unwrap();
        assert_eq!(cfg.mode, Mode::Analytic);
        assert_eq!(cfg.sweep_points().len(), 3);
        assert_eq!(cfg.scenario.payload_bytes, 1500.0);
        let wifi = cfg.scenario.wifi_params().unwrap();
        assert_eq!(wifi.payload_mean_bits, 12_000.0);
    }

    #[test]
    fn rejects_bad_fields_with_field_name() {
        let bad = SAMPLE.replace("values = [5, 10, 15]", "values = [5, 10, 99]");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("wifi_nodes"), "{err}");

        let bad = SAMPLE.replace("wifi_nodes = 10", "wifi_nodes = 0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());

        let bad = SAMPLE.replace("mode = \"analytic\"", "mode = \"analytic\"\nunknown_knob = 3");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn mcot_and_payload_ranges_enforced() {
        let bad = SAMPLE.replace("ul_users = 5", "ul_users = 5\nmcot_ms = 5.0");
        let err = ExperimentConfig::from_toml_str(&bad).unwrap_err();
        assert!(err.to_string().contains("mcot_ms"), "{err}");

        let bad = SAMPLE.replace("ul_users = 5", "ul_users = 5\npayload_bytes = 50.0");
        assert!(ExperimentConfig::from_toml_str(&bad).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-12);
        assert!((dbm_to_watts(23.0) - 0.19952623).abs() < 1e-6);
        assert!((watts_to_dbm(dbm_to_watts(35.0)) - 35.0).abs() < 1e-9);
    }
}
