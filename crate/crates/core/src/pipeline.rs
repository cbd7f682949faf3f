//! End-to-end composition of the analytic stages: coexistence solve, window
//! selection per access method, fairness floor, gain generation, and the
//! allocator scenario assembled from them.

use crate::allocator::{Scenario, UnlicensedChannel};
use crate::channel::{generate_link_gains, noise_power, LinkGains};
use crate::coexistence::{
    airtime_parity_mcot, airtime_ratios, gnb_access_factor, optimal_initial_window,
    slot_breakdown, solve_coexistence, AccessState, CoexError, SlotBreakdown, WindowTuning,
};
use crate::config::{dbm_to_watts, ScenarioConfig};
use crate::fairness::{fairness_threshold, wifi_throughput, FairnessThreshold};
use crate::params::{NruParams, WifiParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Coex(#[from] CoexError),
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// Channel-access policy under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessMethod {
    /// Window tuned for per-node airtime parity.
    Proposed,
    /// Fixed default window.
    Cat4Default,
    /// Fixed window with the occupancy time adjusted for system-level
    /// airtime parity.
    CotAdjust,
}

impl AccessMethod {
    pub fn label(&self) -> &'static str {
        match self {
            AccessMethod::Proposed => "proposed",
            AccessMethod::Cat4Default => "Cat4-LBT",
            AccessMethod::CotAdjust => "COT-adjust",
        }
    }
}

/// Analytic outputs of one channel under one access method.
#[derive(Debug, Clone)]
pub struct ChannelAnalysis {
    pub nru: NruParams,
    pub state: AccessState,
    pub slots: SlotBreakdown,
    pub r_gnb: f64,
    pub r_wifi_node: f64,
    /// WiFi system rate under the gNB (bits/s).
    pub wifi_rate: f64,
    pub threshold: FairnessThreshold,
    /// Successful gNB acquisitions per second.
    pub access_factor: f64,
    /// Window tuning details when the proposed method ran.
    pub tuning: Option<WindowTuning>,
}

/// Resolve the NR-U parameters an access method uses, then solve and
/// decorate the coexistence state.
pub fn analyze_channel(
    wifi: &WifiParams,
    base: &NruParams,
    n_wifi: u32,
    n_nr_users: u32,
    method: AccessMethod,
) -> Result<ChannelAnalysis, PipelineError> {
    let mut tuning = None;
    let nru = match method {
        AccessMethod::Proposed => {
            let t = optimal_initial_window(wifi, base, n_wifi)?;
            let resolved = base.clone().with_window(t.window);
            tuning = Some(t);
            resolved
        }
        AccessMethod::Cat4Default => base.clone(),
        AccessMethod::CotAdjust => {
            let mcot = airtime_parity_mcot(wifi, base, n_wifi)?;
            NruParams { mcot, ..base.clone() }
        }
    };
    let state = solve_coexistence(wifi, &nru, n_wifi)?;
    let slots = slot_breakdown(&state, wifi, &nru, n_wifi);
    let (r_gnb, r_wifi_node) = airtime_ratios(&state, &slots, n_wifi);
    let wifi_rate = wifi_throughput(&state, &slots, n_wifi, wifi.payload_mean_bits);
    let threshold = fairness_threshold(&state, &slots, wifi, n_wifi, n_nr_users);
    let access_factor = gnb_access_factor(&state, &slots, n_wifi);
    Ok(ChannelAnalysis {
        nru,
        state,
        slots,
        r_gnb,
        r_wifi_node,
        wifi_rate,
        threshold,
        access_factor,
        tuning,
    })
}

/// Everything the experiment layer needs for one scenario draw.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub wifi: WifiParams,
    pub analysis: ChannelAnalysis,
    pub scenario: Scenario,
    pub gains: LinkGains,
}

/// Assemble the allocator scenario for a configuration and seed. All
/// channels share one WiFi population, so the coexistence solve is done
/// once and replicated per channel.
pub fn build_scenario(
    cfg: &ScenarioConfig,
    method: AccessMethod,
    seed: u64,
) -> Result<BuiltScenario, PipelineError> {
    let wifi = cfg.wifi_params()?;
    let base = cfg.nru_params()?;
    let n_users = cfg.dl_users + cfg.ul_users;
    let analysis = analyze_channel(&wifi, &base, cfg.wifi_nodes, n_users, method)?;

    let bandwidth = cfg.bandwidth_mhz * 1e6;
    let noise = noise_power(bandwidth)?;
    let gains = generate_link_gains(
        cfg.dl_users,
        cfg.ul_users,
        cfg.channels,
        (cfg.distance_min_m, cfg.distance_max_m),
        cfg.carrier_ghz,
        10.0,
        1.5,
        seed,
    );
    let channels = (0..cfg.channels)
        .map(|_| UnlicensedChannel {
            bandwidth,
            access_factor: analysis.access_factor,
            rate_floor: analysis.threshold.rate_floor,
            noise,
            n_wifi: cfg.wifi_nodes,
        })
        .collect();
    let scenario = Scenario {
        channels,
        dl_gains: gains.dl.clone(),
        ul_gains: gains.ul.clone(),
        mcot: analysis.nru.mcot,
        p_avg: dbm_to_watts(cfg.p_avg_dbm),
        p_gnb_max: dbm_to_watts(cfg.p_gnb_max_dbm),
        p_dk_max: dbm_to_watts(cfg.p_dk_max_dbm),
    };
    Ok(BuiltScenario { wifi, analysis, scenario, gains })
}
