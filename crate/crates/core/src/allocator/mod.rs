//! Joint uplink/downlink time and power allocation inside the gNB's
//! channel-occupancy window.
//!
//! The decision variables are per-link time fractions `t` and time-averaged
//! powers `q = p t / mcot` (instantaneous power times its time share), which
//! turn every rate into the jointly concave perspective form
//! `a t log2(1 + c q / t)`. The problem splits into a per-channel time step
//! solved through Lambert W plus bisection, and power water-filling steps
//! for the uplink average-power and downlink total/per-link constraints;
//! an outer subgradient on the per-channel fairness floor closes the loop.

mod algorithm;
mod baselines;
mod power;
mod time;

pub use algorithm::{run_algorithm1, AlgorithmOptions, AlgorithmReport, DualState, TraceRecord};
pub use baselines::{baseline_etep, baseline_etop, baseline_otep};
pub use power::{downlink_power, uplink_power, DlPowerStep, UlPowerStep};
pub use time::{time_allocation, TimeStep};

use std::f64::consts::LN_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("scenario invalid: {0}")]
    BadScenario(String),
    #[error("time allocated to a link with zero power budget pairing: t={t}, q={q}")]
    InvalidPair { t: f64, q: f64 },
    #[error("bisection bracket failure in {context}: {detail}")]
    Bracket { context: &'static str, detail: String },
    #[error("fairness floor unreachable on channel {channel}: floor {floor:.4e} bit/s exceeds the achievable {achievable:.4e} bit/s (binding budget: {budget})")]
    InfeasibleFloor { channel: usize, floor: f64, achievable: f64, budget: &'static str },
}

/// Per-channel quantities the allocator consumes; produced by the
/// coexistence and fairness stages.
#[derive(Debug, Clone, Copy)]
pub struct UnlicensedChannel {
    /// Channel bandwidth (Hz).
    pub bandwidth: f64,
    /// Successful gNB acquisitions per second,
    /// `tau_l (1-tau_w)^n / T_slot` (1/s).
    pub access_factor: f64,
    /// Fairness floor on the NR rate of this channel (bits/s).
    pub rate_floor: f64,
    /// Thermal noise power over the channel bandwidth (W).
    pub noise: f64,
    /// WiFi station count sharing the channel (reporting only).
    pub n_wifi: u32,
}

/// A complete allocation problem instance.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub channels: Vec<UnlicensedChannel>,
    /// `[dl_user][channel]` power gains.
    pub dl_gains: Vec<Vec<f64>>,
    /// `[ul_user][channel]` power gains.
    pub ul_gains: Vec<Vec<f64>>,
    /// Channel-occupancy window split between all links (s).
    pub mcot: f64,
    /// Cap on the per-UE average uplink power (W).
    pub p_avg: f64,
    /// Cap on the total downlink power across users and channels (W).
    pub p_gnb_max: f64,
    /// Cap on the instantaneous downlink power of one link (W).
    pub p_dk_max: f64,
}

impl Scenario {
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }
    pub fn n_dl(&self) -> usize {
        self.dl_gains.len()
    }
    pub fn n_ul(&self) -> usize {
        self.ul_gains.len()
    }

    pub fn validate(&self) -> Result<(), AllocError> {
        let k = self.n_channels();
        if k == 0 {
            return Err(AllocError::BadScenario("no channels".into()));
        }
        if self.n_dl() == 0 || self.n_ul() == 0 {
            return Err(AllocError::BadScenario("need at least one DL and one UL user".into()));
        }
        for row in self.dl_gains.iter().chain(self.ul_gains.iter()) {
            if row.len() != k {
                return Err(AllocError::BadScenario("gain row length != channel count".into()));
            }
            if row.iter().any(|g| *g <= 0.0 || !g.is_finite()) {
                return Err(AllocError::BadScenario("gains must be positive and finite".into()));
            }
        }
        for (field, v) in [
            ("mcot", self.mcot),
            ("p_avg", self.p_avg),
            ("p_gnb_max", self.p_gnb_max),
            ("p_dk_max", self.p_dk_max),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(AllocError::BadScenario(format!("{field} must be positive")));
            }
        }
        for (i, ch) in self.channels.iter().enumerate() {
            if ch.bandwidth <= 0.0 || ch.noise <= 0.0 || ch.access_factor <= 0.0 {
                return Err(AllocError::BadScenario(format!("channel {i} has non-positive physics")));
            }
            if ch.rate_floor < 0.0 {
                return Err(AllocError::BadScenario(format!("channel {i} has negative rate floor")));
            }
        }
        Ok(())
    }

    /// Extract the single-channel sub-scenario for channel `k` with the full
    /// power budgets (used by the feasibility pre-check).
    pub fn single_channel(&self, k: usize) -> Scenario {
        Scenario {
            channels: vec![self.channels[k]],
            dl_gains: self.dl_gains.iter().map(|row| vec![row[k]]).collect(),
            ul_gains: self.ul_gains.iter().map(|row| vec![row[k]]).collect(),
            mcot: self.mcot,
            p_avg: self.p_avg,
            p_gnb_max: self.p_gnb_max,
            p_dk_max: self.p_dk_max,
        }
    }
}

/// Link rate in the perspective variables: `a t B log2(1 + mcot q g / (s t))`.
///
/// Defined as 0 at `t = 0` (the perspective limit); pairing `t = 0, q > 0`
/// is rejected by [`Allocation::validate`] rather than here.
pub fn link_rate(t: f64, q: f64, gain: f64, noise: f64, bandwidth: f64, access_factor: f64, mcot: f64) -> f64 {
    if t <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    let x = mcot * q * gain / (noise * t);
    access_factor * t * bandwidth * x.ln_1p() / LN_2
}

/// Checked variant of [`link_rate`] rejecting the undefined `t=0, q>0` pair.
pub fn try_link_rate(
    t: f64,
    q: f64,
    gain: f64,
    noise: f64,
    bandwidth: f64,
    access_factor: f64,
    mcot: f64,
) -> Result<f64, AllocError> {
    if t <= 0.0 && q > 0.0 {
        return Err(AllocError::InvalidPair { t, q });
    }
    Ok(link_rate(t, q, gain, noise, bandwidth, access_factor, mcot))
}

/// Analytic time-marginal `dR/dt = a B h(mcot q g / (s t))`.
pub fn rate_dt(t: f64, q: f64, gain: f64, noise: f64, bandwidth: f64, access_factor: f64, mcot: f64) -> f64 {
    if t <= 0.0 || q <= 0.0 {
        return 0.0;
    }
    let x = mcot * q * gain / (noise * t);
    access_factor * bandwidth * crate::numerics::h_func(x)
}

/// Analytic power-marginal `dR/dq = mcot a B t g / ((s t + mcot q g) ln 2)`.
pub fn rate_dq(t: f64, q: f64, gain: f64, noise: f64, bandwidth: f64, access_factor: f64, mcot: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    mcot * access_factor * bandwidth * t * gain / ((noise * t + mcot * q * gain) * LN_2)
}

/// Joint time/power allocation across all links and channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// `[dl_user][channel]` time shares (s).
    pub t_dl: Vec<Vec<f64>>,
    /// `[ul_user][channel]` time shares (s).
    pub t_ul: Vec<Vec<f64>>,
    /// `[dl_user][channel]` time-averaged powers (W).
    pub q_dl: Vec<Vec<f64>>,
    /// `[ul_user][channel]` time-averaged powers (W).
    pub q_ul: Vec<Vec<f64>>,
}

impl Allocation {
    pub fn zeros(n_dl: usize, n_ul: usize, k: usize) -> Self {
        Allocation {
            t_dl: vec![vec![0.0; k]; n_dl],
            t_ul: vec![vec![0.0; k]; n_ul],
            q_dl: vec![vec![0.0; k]; n_dl],
            q_ul: vec![vec![0.0; k]; n_ul],
        }
    }

    /// Instantaneous downlink power of a link (W); zero share means zero power.
    pub fn dl_instant_power(&self, d: usize, k: usize, mcot: f64) -> f64 {
        let t = self.t_dl[d][k];
        if t > 0.0 {
            self.q_dl[d][k] * mcot / t
        } else {
            0.0
        }
    }

    /// Rates `(dl, ul)` summed over users of one channel (bits/s).
    pub fn channel_rates(&self, scn: &Scenario, k: usize) -> (f64, f64) {
        let ch = &scn.channels[k];
        let dl: f64 = (0..scn.n_dl())
            .map(|d| {
                link_rate(
                    self.t_dl[d][k],
                    self.q_dl[d][k],
                    scn.dl_gains[d][k],
                    ch.noise,
                    ch.bandwidth,
                    ch.access_factor,
                    scn.mcot,
                )
            })
            .sum();
        let ul: f64 = (0..scn.n_ul())
            .map(|u| {
                link_rate(
                    self.t_ul[u][k],
                    self.q_ul[u][k],
                    scn.ul_gains[u][k],
                    ch.noise,
                    ch.bandwidth,
                    ch.access_factor,
                    scn.mcot,
                )
            })
            .sum();
        (dl, ul)
    }

    /// The maximised objective: total NR rate over all channels (bits/s).
    pub fn objective(&self, scn: &Scenario) -> f64 {
        (0..scn.n_channels())
            .map(|k| {
                let (dl, ul) = self.channel_rates(scn, k);
                dl + ul
            })
            .sum()
    }

    /// Fairness-weighted objective `sum_k (1 + alpha_k) R_k`.
    pub fn weighted_objective(&self, scn: &Scenario, alpha: &[f64]) -> f64 {
        (0..scn.n_channels())
            .map(|k| {
                let (dl, ul) = self.channel_rates(scn, k);
                (1.0 + alpha[k]) * (dl + ul)
            })
            .sum()
    }

    /// Largest relative violation over every constraint of the problem.
    pub fn max_violation(&self, scn: &Scenario) -> f64 {
        let mut worst: f64 = 0.0;
        for row in self.t_dl.iter().chain(self.t_ul.iter()) {
            for &t in row {
                worst = worst.max(-t / scn.mcot);
            }
        }
        for row in self.q_dl.iter().chain(self.q_ul.iter()) {
            for &q in row {
                worst = worst.max(-q / scn.p_avg);
            }
        }
        for k in 0..scn.n_channels() {
            let used: f64 = (0..scn.n_dl()).map(|d| self.t_dl[d][k]).sum::<f64>()
                + (0..scn.n_ul()).map(|u| self.t_ul[u][k]).sum::<f64>();
            worst = worst.max((used - scn.mcot) / scn.mcot);
        }
        let ul_avg: f64 = self.q_ul.iter().flatten().sum::<f64>() / self.q_ul.len() as f64;
        worst = worst.max((ul_avg - scn.p_avg) / scn.p_avg);
        let dl_total: f64 = self.q_dl.iter().flatten().sum();
        worst = worst.max((dl_total - scn.p_gnb_max) / scn.p_gnb_max);
        for d in 0..scn.n_dl() {
            for k in 0..scn.n_channels() {
                let cap = self.t_dl[d][k] / scn.mcot * scn.p_dk_max;
                worst = worst.max((self.q_dl[d][k] - cap) / scn.p_dk_max);
            }
        }
        worst
    }

    /// Check the `t = 0 <=> q = 0` pairing and basic signs.
    pub fn validate(&self, scn: &Scenario) -> Result<(), AllocError> {
        let check = |t_rows: &Vec<Vec<f64>>, q_rows: &Vec<Vec<f64>>| -> Result<(), AllocError> {
            for (trow, qrow) in t_rows.iter().zip(q_rows.iter()) {
                for (&t, &q) in trow.iter().zip(qrow.iter()) {
                    if t <= 0.0 && q > 1e-300 {
                        return Err(AllocError::InvalidPair { t, q });
                    }
                }
            }
            Ok(())
        };
        check(&self.t_dl, &self.q_dl)?;
        check(&self.t_ul, &self.q_ul)?;
        let _ = scn;
        Ok(())
    }
}
