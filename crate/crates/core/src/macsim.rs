//! Slot-granular Monte-Carlo simulator of `n` CSMA/CA WiFi stations and one
//! Cat-4 LBT gNB sharing an unlicensed channel.
//!
//! Time advances in decision slots on the shared CCA grid: a slot in which
//! nobody transmits lasts one CCA slot; a busy slot lasts the full exchange
//! or collision duration of whoever occupied it (inter-frame gaps and the
//! post-busy defer ride inside those durations, matching the analytical
//! decomposition). WiFi stations run binary-exponential backoff with one
//! counter step per decision slot; the gNB runs the ICCA/ECCA procedure:
//! an initial defer that transmits straight away when every slot of it is
//! idle, backoff whose counter only moves on idle slots (frozen while the
//! channel is busy), stage advance on collision, and packet drop at the last
//! stage with contention restarting immediately under saturation.

use crate::params::{NruParams, WifiParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("simulation horizon must be positive")]
    EmptyHorizon,
    #[error("simulation produced zero elapsed time")]
    ZeroDuration,
}

/// One WiFi station: backoff stage and counter plus retry/success counts.
#[derive(Debug, Clone)]
struct WifiNode {
    stage: u32,
    counter: u32,
}

/// gNB access phases of the Cat-4 procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GnbPhase {
    /// Initial defer; counts consecutive idle slots observed.
    Icca { idles: u32 },
    /// Backoff contention; the counter is frozen while the channel is busy.
    Ecca { stage: u32, counter: u32 },
    /// Transmitting this slot. `from_icca` marks a defer-window transmission.
    Tx { from_icca: bool, stage: u32 },
}

/// Simulation controls.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub horizon_slots: u64,
    pub seed: u64,
    /// When false the gNB is removed and the WiFi system runs standalone.
    pub gnb_enabled: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig { horizon_slots: 10_000_000, seed: 1, gnb_enabled: true }
    }
}

/// Aggregated outcome of one simulation run.
#[derive(Debug, Clone)]
pub struct SimStats {
    pub idle_slots: u64,
    pub wifi_success_slots: u64,
    pub gnb_success_slots: u64,
    pub wifi_collision_slots: u64,
    pub cross_collision_slots: u64,
    pub total_slots: u64,
    pub idle_seconds: f64,
    pub wifi_success_seconds: f64,
    pub gnb_success_seconds: f64,
    pub wifi_collision_seconds: f64,
    pub cross_collision_seconds: f64,
    /// Wall-clock seconds represented by the simulated slots.
    pub total_seconds: f64,
    /// Successful airtime per WiFi station (s).
    pub wifi_airtime_per_node: Vec<f64>,
    /// Successful gNB airtime (s).
    pub gnb_airtime: f64,
    /// Empirical per-station WiFi access probability.
    pub tau_w_hat: f64,
    /// Empirical gNB access probability.
    pub tau_l_hat: f64,
    /// Empirical conditional collision probability of a WiFi transmission.
    pub p_w_hat: f64,
    /// Empirical conditional collision probability of a gNB transmission.
    pub p_l_hat: f64,
    /// gNB packet drops (collision at the last backoff stage).
    pub gnb_drops: u64,
    /// Total WiFi transmission attempts.
    pub wifi_attempts: u64,
    /// Total gNB transmission attempts.
    pub gnb_attempts: u64,
}

impl SimStats {
    fn new(n: usize) -> Self {
        SimStats {
            idle_slots: 0,
            wifi_success_slots: 0,
            gnb_success_slots: 0,
            wifi_collision_slots: 0,
            cross_collision_slots: 0,
            total_slots: 0,
            idle_seconds: 0.0,
            wifi_success_seconds: 0.0,
            gnb_success_seconds: 0.0,
            wifi_collision_seconds: 0.0,
            cross_collision_seconds: 0.0,
            total_seconds: 0.0,
            wifi_airtime_per_node: vec![0.0; n],
            gnb_airtime: 0.0,
            tau_w_hat: 0.0,
            tau_l_hat: 0.0,
            p_w_hat: 0.0,
            p_l_hat: 0.0,
            gnb_drops: 0,
            wifi_attempts: 0,
            gnb_attempts: 0,
        }
    }

    /// Seconds spent in each slot class, in breakdown order
    /// (idle, wifi success, gnb success, wifi collision, cross collision).
    pub fn class_seconds(&self) -> [f64; 5] {
        [
            self.idle_seconds,
            self.wifi_success_seconds,
            self.gnb_success_seconds,
            self.wifi_collision_seconds,
            self.cross_collision_seconds,
        ]
    }

    /// Time fractions of the five slot classes.
    pub fn time_fractions(&self) -> [f64; 5] {
        self.class_seconds().map(|s| s / self.total_seconds)
    }

    /// Mean decision-slot duration (s).
    pub fn mean_slot_duration(&self) -> f64 {
        self.total_seconds / self.total_slots as f64
    }

    pub fn outcome_counts_sum(&self) -> u64 {
        self.idle_slots
            + self.wifi_success_slots
            + self.gnb_success_slots
            + self.wifi_collision_slots
            + self.cross_collision_slots
    }

    /// Empirical per-node successful-airtime ratio, averaged over stations.
    pub fn wifi_airtime_ratio_per_node(&self) -> f64 {
        let n = self.wifi_airtime_per_node.len() as f64;
        self.wifi_airtime_per_node.iter().sum::<f64>() / (n * self.total_seconds)
    }

    /// Empirical gNB successful-airtime ratio.
    pub fn gnb_airtime_ratio(&self) -> f64 {
        self.gnb_airtime / self.total_seconds
    }
}

/// Run one simulation of `n` WiFi stations (plus the gNB unless disabled).
///
/// Deterministic for a fixed `(params, config)` pair: all randomness comes
/// from a ChaCha8 stream seeded with `config.seed`.
pub fn simulate(
    wifi: &WifiParams,
    nru: &NruParams,
    n: u32,
    config: &SimConfig,
) -> Result<SimStats, SimError> {
    if config.horizon_slots == 0 {
        return Err(SimError::EmptyHorizon);
    }
    let n = n as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let t_sigma = wifi.slot_time;
    let t_s_w = wifi.success_duration();
    let t_c_w = wifi.collision_duration();
    let t_occ = nru.occupancy_duration();
    let t_cross = t_c_w.max(t_occ);

    let wifi_window = |stage: u32| -> u32 { (1u32 << stage) * wifi.cw_min };
    let gnb_base = (nru.cw_min.round() as u32).max(1);
    let gnb_window = |stage: u32| -> u32 { (1u32 << stage) * gnb_base };
    let max_gnb_stage = nru.max_backoff_stage.saturating_sub(1);

    let mut nodes: Vec<WifiNode> = (0..n)
        .map(|_| WifiNode { stage: 0, counter: rng.random_range(0..wifi_window(0)) })
        .collect();
    let mut gnb = GnbPhase::Icca { idles: 0 };

    let mut stats = SimStats::new(n);
    let mut wifi_tx: u64 = 0;
    let mut wifi_coll: u64 = 0;
    let mut gnb_tx: u64 = 0;
    let mut gnb_coll: u64 = 0;

    for _ in 0..config.horizon_slots {
        // Who transmits in this decision slot.
        let mut n_tx = 0usize;
        let mut lone = usize::MAX;
        for (i, node) in nodes.iter().enumerate() {
            if node.counter == 0 {
                n_tx += 1;
                lone = i;
            }
        }
        let gnb_here = config.gnb_enabled && matches!(gnb, GnbPhase::Tx { .. });
        let busy = n_tx > 0 || gnb_here;

        if !busy {
            stats.idle_slots += 1;
            stats.idle_seconds += t_sigma;
        } else if gnb_here && n_tx == 0 {
            stats.gnb_success_slots += 1;
            stats.gnb_success_seconds += t_occ;
            stats.gnb_airtime += t_occ;
        } else if gnb_here {
            stats.cross_collision_slots += 1;
            stats.cross_collision_seconds += t_cross;
        } else if n_tx == 1 {
            stats.wifi_success_slots += 1;
            stats.wifi_success_seconds += t_s_w;
            stats.wifi_airtime_per_node[lone] += t_s_w;
        } else {
            stats.wifi_collision_slots += 1;
            stats.wifi_collision_seconds += t_c_w;
        }

        wifi_tx += n_tx as u64;
        if n_tx > 0 && (n_tx > 1 || gnb_here) {
            wifi_coll += n_tx as u64;
        }
        if gnb_here {
            gnb_tx += 1;
            if n_tx > 0 {
                gnb_coll += 1;
            }
        }

        // WiFi update: transmitters resolve their outcome; everyone else
        // steps the counter once per decision slot.
        for (i, node) in nodes.iter_mut().enumerate() {
            if node.counter == 0 {
                let success = n_tx == 1 && i == lone && !gnb_here;
                if success {
                    node.stage = 0;
                } else {
                    node.stage = (node.stage + 1).min(wifi.max_backoff_stage);
                }
                node.counter = rng.random_range(0..wifi_window(node.stage));
            } else {
                node.counter -= 1;
            }
        }

        // gNB update.
        if config.gnb_enabled {
            gnb = match gnb {
                GnbPhase::Tx { from_icca, stage } => {
                    if n_tx == 0 {
                        // Success: the next packet starts with the defer.
                        GnbPhase::Icca { idles: 0 }
                    } else if from_icca {
                        GnbPhase::Ecca { stage: 0, counter: rng.random_range(0..gnb_window(0)) }
                    } else if stage >= max_gnb_stage {
                        stats.gnb_drops += 1;
                        GnbPhase::Icca { idles: 0 }
                    } else {
                        let next = stage + 1;
                        GnbPhase::Ecca { stage: next, counter: rng.random_range(0..gnb_window(next)) }
                    }
                }
                GnbPhase::Icca { idles } => {
                    if busy {
                        GnbPhase::Ecca { stage: 0, counter: rng.random_range(0..gnb_window(0)) }
                    } else if idles + 1 >= nru.icca_slots {
                        GnbPhase::Tx { from_icca: true, stage: 0 }
                    } else {
                        GnbPhase::Icca { idles: idles + 1 }
                    }
                }
                GnbPhase::Ecca { stage, counter } => {
                    if busy {
                        // Frozen; the defer before resuming rides inside the
                        // busy occupancy on this grid.
                        GnbPhase::Ecca { stage, counter }
                    } else if counter == 0 {
                        GnbPhase::Tx { from_icca: false, stage }
                    } else {
                        GnbPhase::Ecca { stage, counter: counter - 1 }
                    }
                }
            };
        }
    }

    stats.total_slots = config.horizon_slots;
    stats.total_seconds = stats.class_seconds().iter().sum();
    if stats.total_seconds <= 0.0 {
        return Err(SimError::ZeroDuration);
    }
    stats.wifi_attempts = wifi_tx;
    stats.gnb_attempts = gnb_tx;
    stats.tau_w_hat = wifi_tx as f64 / (config.horizon_slots as f64 * n as f64);
    stats.tau_l_hat = gnb_tx as f64 / config.horizon_slots as f64;
    stats.p_w_hat = if wifi_tx > 0 { wifi_coll as f64 / wifi_tx as f64 } else { 0.0 };
    stats.p_l_hat = if gnb_tx > 0 { gnb_coll as f64 / gnb_tx as f64 } else { 0.0 };
    Ok(stats)
}

/// Empirical throughputs from a completed run: WiFi goodput in bits/s and
/// the gNB successful-airtime fraction.
pub fn empirical_throughputs(stats: &SimStats, payload_bits: f64) -> Result<(f64, f64), SimError> {
    if stats.total_seconds <= 0.0 {
        return Err(SimError::ZeroDuration);
    }
    let wifi_bps = stats.wifi_success_slots as f64 * payload_bits / stats.total_seconds;
    Ok((wifi_bps, stats.gnb_airtime_ratio()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coexistence;

    #[test]
    fn lone_station_approaches_dcf_limit() {
        let wifi = WifiParams::default_11n();
        let nru = NruParams::default_cat4();
        let cfg = SimConfig { horizon_slots: 2_000_000, seed: 42, gnb_enabled: false };
        let stats = simulate(&wifi, &nru, 1, &cfg).unwrap();
        let expect = 2.0 / (wifi.cw_min as f64 + 1.0);
        let rel = (stats.tau_w_hat / expect - 1.0).abs();
        assert!(rel < 0.02, "tau_w_hat={} expect={expect} rel={rel}", stats.tau_w_hat);
        assert_eq!(stats.p_w_hat, 0.0);
    }

    #[test]
    fn standalone_wifi_matches_fixed_point() {
        let wifi = WifiParams::default_11n();
        let nru = NruParams::default_cat4();
        let cfg = SimConfig { horizon_slots: 1_000_000, seed: 7, gnb_enabled: false };
        let stats = simulate(&wifi, &nru, 10, &cfg).unwrap();
        let (tau, p) = coexistence::solve_wifi_standalone(&wifi, 10);
        assert!((stats.tau_w_hat / tau - 1.0).abs() < 0.05, "tau {} vs {}", stats.tau_w_hat, tau);
        assert!((stats.p_w_hat / p - 1.0).abs() < 0.05, "p {} vs {}", stats.p_w_hat, p);
    }

    #[test]
    fn outcome_counts_conserved_and_deterministic() {
        let wifi = WifiParams::default_11n();
        let nru = NruParams::default_cat4();
        let cfg = SimConfig { horizon_slots: 50_000, seed: 3, gnb_enabled: true };
        let a = simulate(&wifi, &nru, 5, &cfg).unwrap();
        let b = simulate(&wifi, &nru, 5, &cfg).unwrap();
        assert_eq!(a.outcome_counts_sum(), a.total_slots);
        assert_eq!(a.tau_w_hat, b.tau_w_hat);
        assert_eq!(a.class_seconds(), b.class_seconds());
        assert!(a.gnb_airtime <= a.total_seconds);
        let total_wifi_airtime: f64 = a.wifi_airtime_per_node.iter().sum();
        assert!(total_wifi_airtime <= a.total_seconds);
    }

    #[test]
    fn monte_carlo_error_scales_with_sqrt_slots() {
        let wifi = WifiParams::default_11n();
        let nru = NruParams::default_cat4();
        let (tau, _) = coexistence::solve_wifi_standalone(&wifi, 5);
        let spread = |slots: u64| -> f64 {
            let mut acc = 0.0;
            const REPS: u64 = 24;
            for seed in 0..REPS {
                let cfg = SimConfig { horizon_slots: slots, seed: 1000 + seed, gnb_enabled: false };
                let s = simulate(&wifi, &nru, 5, &cfg).unwrap();
                acc += (s.tau_w_hat - tau).powi(2);
            }
            (acc / REPS as f64).sqrt()
        };
        let e1 = spread(20_000);
        let e2 = spread(80_000);
        let e3 = spread(320_000);
        // Quadrupling the horizon should roughly halve the error.
        assert!(e1 / e2 > 1.4 && e1 / e2 < 2.9, "e1/e2={}", e1 / e2);
        assert!(e2 / e3 > 1.4 && e2 / e3 < 2.9, "e2/e3={}", e2 / e3);
    }

    #[test]
    fn coexistence_agrees_with_analytical_model() {
        let wifi = WifiParams::default_11n();
        let base = NruParams::default_cat4();
        for (n, seed) in [(5u32, 11u64), (10, 12)] {
            let tuning = coexistence::optimal_initial_window(&wifi, &base, n).unwrap();
            let nru = base.clone().with_window(tuning.window_rounded as f64);
            let state = coexistence::solve_coexistence(&wifi, &nru, n).unwrap();
            let slots = coexistence::slot_breakdown(&state, &wifi, &nru, n);
            let cfg = SimConfig { horizon_slots: 6_000_000, seed, gnb_enabled: true };
            let stats = simulate(&wifi, &nru, n, &cfg).unwrap();
            assert!(
                (stats.tau_w_hat / state.tau_w - 1.0).abs() < 0.05,
                "N={n} tau_w {} vs {}",
                stats.tau_w_hat,
                state.tau_w
            );
            assert!(
                (stats.tau_l_hat / state.tau_l - 1.0).abs() < 0.05,
                "N={n} tau_l {} vs {}",
                stats.tau_l_hat,
                state.tau_l
            );
            let analytic = [
                slots.idle / slots.total,
                slots.wifi_success / slots.total,
                slots.gnb_success / slots.total,
                slots.wifi_collision / slots.total,
                slots.cross_collision / slots.total,
            ];
            for (got, want) in stats.time_fractions().iter().zip(analytic.iter()) {
                assert!((got / want - 1.0).abs() < 0.05, "N={n} fraction {got} vs {want}");
            }
        }
    }

    #[test]
    fn throughput_helpers() {
        let wifi = WifiParams::default_11n();
        let nru = NruParams::default_cat4();
        let cfg = SimConfig { horizon_slots: 100_000, seed: 5, gnb_enabled: true };
        let stats = simulate(&wifi, &nru, 5, &cfg).unwrap();
        let (bps1, frac) = empirical_throughputs(&stats, 12_000.0).unwrap();
        let (bps2, _) = empirical_throughputs(&stats, 24_000.0).unwrap();
        assert!((bps2 - 2.0 * bps1).abs() < 1e-6 * bps2);
        assert!(frac > 0.0 && frac < 1.0);
        assert!(simulate(&wifi, &nru, 5, &SimConfig { horizon_slots: 0, ..cfg }).is_err());
    }
}
