//! Analytical and Monte-Carlo toolkit for NR-U / WiFi coexistence on shared
//! unlicensed channels.
//!
//! The crate models the coupled channel-access behaviour of one Cat-4 LBT
//! gNB and `n` saturated WiFi stations, tunes the gNB contention window for
//! per-node airtime parity, derives the throughput-fairness floor via a
//! virtual WiFi replacement system, and jointly optimises uplink/downlink
//! time and power inside the gNB's channel-occupancy window under those
//! fairness and power constraints. A slot-granular Monte-Carlo MAC simulator
//! provides the independent reference for the analytical model, and a
//! config-driven experiment runner serialises sweep results as CSV.
//!
//! Modules follow the pipeline:
//! [`coexistence`] -> [`fairness`] -> [`channel`] -> [`allocator`], with
//! [`macsim`] as the oracle and [`experiment`] as the orchestration layer.

pub mod allocator;
pub mod channel;
pub mod coexistence;
pub mod fairness;
pub mod macsim;
pub mod numerics;
pub mod params;

pub use params::{NruParams, WifiParams};
