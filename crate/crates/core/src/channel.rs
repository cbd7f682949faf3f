//! Link-budget inputs for the allocator: street-canyon path loss, Rayleigh
//! fading power gains, and thermal noise.
//!
//! Gains are generated from per-(role, user, channel) ChaCha8 streams so a
//! scenario is reproducible bit-for-bit from its seed regardless of the
//! order links are drawn in.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("distance {0} m outside the model range [10 m, 5 km]")]
    DistanceRange(f64),
    #[error("bandwidth must be positive (got {0})")]
    BadBandwidth(f64),
}

/// Speed of light (m/s).
const C: f64 = 3.0e8;
/// Environment height subtracted from both antennas for the breakpoint (m).
const H_ENV: f64 = 1.0;
/// Thermal noise density (dBm/Hz).
const NOISE_DENSITY_DBM_HZ: f64 = -174.0;

/// One generated link gain record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGain {
    pub user_id: u32,
    pub channel_id: u32,
    /// Linear power gain |h|^2 (path loss times fading).
    pub gain: f64,
    /// UE-to-gNB distance (m).
    pub distance: f64,
    /// Path loss at that distance (dB).
    pub pathloss_db: f64,
}

/// Urban-microcell street-canyon path loss (dB) at `distance` metres and
/// carrier `fc_ghz` GHz, with base-station / terminal heights in metres.
///
/// Two-branch model around the breakpoint
/// `d_bp = 4 (h_bs - 1)(h_ut - 1) f_c / c` (300 m at the default 10 m /
/// 1.5 m / 5 GHz setup). Any discontinuity at the breakpoint is a property
/// of the published model and is not smoothed here.
pub fn umi_pathloss(distance: f64, fc_ghz: f64, h_bs: f64, h_ut: f64) -> Result<f64, ChannelError> {
    if !(10.0..=5000.0).contains(&distance) {
        return Err(ChannelError::DistanceRange(distance));
    }
    let d_bp = 4.0 * (h_bs - H_ENV) * (h_ut - H_ENV) * (fc_ghz * 1e9) / C;
    let pl = if distance <= d_bp {
        32.4 + 21.0 * distance.log10() + 20.0 * fc_ghz.log10()
    } else {
        32.4 + 40.0 * distance.log10() + 20.0 * fc_ghz.log10()
            - 9.5 * (d_bp.powi(2) + (h_bs - h_ut).powi(2)).log10()
    };
    Ok(pl)
}

/// Linear power gain for a path loss in dB with fading disabled (unit
/// fading power).
pub fn gain_from_pathloss(pathloss_db: f64) -> f64 {
    10f64.powf(-pathloss_db / 10.0)
}

/// Draw one Rayleigh-faded power gain: `|h|^2 = 10^{-PL/10} X` with `X`
/// unit-mean exponential, via inverse-CDF so the draw is portable across
/// implementations of the same RNG stream.
pub fn sample_gain<R: Rng>(pathloss_db: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random::<f64>();
    // X = -ln(1-U) is Exp(1); 1-U avoids ln(0) since U is in [0, 1).
    let fading = -(1.0 - u).ln();
    gain_from_pathloss(pathloss_db) * fading
}

/// Thermal noise power (W) over `bandwidth` Hz at -174 dBm/Hz.
pub fn noise_power(bandwidth: f64) -> Result<f64, ChannelError> {
    if bandwidth <= 0.0 {
        return Err(ChannelError::BadBandwidth(bandwidth));
    }
    let dbm = NOISE_DENSITY_DBM_HZ + 10.0 * bandwidth.log10();
    Ok(10f64.powf((dbm - 30.0) / 10.0))
}

/// Downlink and uplink gain matrices for one scenario draw.
#[derive(Debug, Clone)]
pub struct LinkGains {
    /// `[user][channel]` downlink power gains.
    pub dl: Vec<Vec<f64>>,
    /// `[user][channel]` uplink power gains.
    pub ul: Vec<Vec<f64>>,
    pub dl_records: Vec<ChannelGain>,
    pub ul_records: Vec<ChannelGain>,
}

/// Stream identifiers: distances and fading get separate sub-streams so the
/// matrices are stable under any generation order.
fn stream_id(role: u64, user: u64, channel: u64) -> u64 {
    (role << 48) | (user << 24) | channel
}

fn draw_links(
    role: u64,
    n_users: u32,
    n_channels: u32,
    dist_range: (f64, f64),
    fc_ghz: f64,
    h_bs: f64,
    h_ut: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<ChannelGain>) {
    let mut gains = vec![vec![0.0; n_channels as usize]; n_users as usize];
    let mut records = Vec::with_capacity((n_users * n_channels) as usize);
    for user in 0..n_users {
        // One distance per user; fading varies per channel.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(role, user as u64 + 1, 0));
        let distance = rng.random_range(dist_range.0..=dist_range.1);
        let pl = umi_pathloss(distance, fc_ghz, h_bs, h_ut).expect("distance drawn inside range");
        for channel in 0..n_channels {
            let mut frng = ChaCha8Rng::seed_from_u64(seed);
            frng.set_stream(stream_id(role, user as u64 + 1, channel as u64 + 1));
            let g = sample_gain(pl, &mut frng);
            gains[user as usize][channel as usize] = g;
            records.push(ChannelGain {
                user_id: user,
                channel_id: channel,
                gain: g,
                distance,
                pathloss_db: pl,
            });
        }
    }
    (gains, records)
}

/// Generate all link gains for a scenario: `n_dl` downlink users and
/// `n_ul` uplink users across `n_channels` channels, distances uniform in
/// `dist_range`. Deterministic in `seed`.
pub fn generate_link_gains(
    n_dl: u32,
    n_ul: u32,
    n_channels: u32,
    dist_range: (f64, f64),
    fc_ghz: f64,
    h_bs: f64,
    h_ut: f64,
    seed: u64,
) -> LinkGains {
    let (dl, dl_records) = draw_links(1, n_dl, n_channels, dist_range, fc_ghz, h_bs, h_ut, seed);
    let (ul, ul_records) = draw_links(2, n_ul, n_channels, dist_range, fc_ghz, h_bs, h_ut, seed);
    LinkGains { dl, ul, dl_records, ul_records }
}
