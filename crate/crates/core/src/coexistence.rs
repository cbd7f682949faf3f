//! Coupled channel-access model for one gNB sharing an unlicensed channel
//! with `n` saturated WiFi stations.
//!
//! The WiFi side follows the classic saturated-DCF fixed point linking a
//! station's per-slot access probability `tau_w` to its conditional collision
//! probability `p_w`. The gNB side is the Cat-4 LBT state machine (initial
//! CCA defer, exponential-backoff ECCA with freeze/defer on busy slots, drop
//! at the last stage) reduced to a closed form over the same virtual-slot
//! grid. Solving the two together yields the access state from which slot
//! durations, airtime ratios and throughputs follow.

use crate::numerics::bisect;
use crate::params::{NruParams, WifiParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoexError {
    #[error("fixed point did not converge after {iterations} iterations (max residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("invalid parameters: {0}")]
    Params(#[from] crate::params::ParamError),
    #[error("window tuning failed: {0}")]
    Tuning(String),
}

/// Solved access state of one unlicensed channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessState {
    /// Per-station WiFi access probability in a virtual slot.
    pub tau_w: f64,
    /// gNB access probability in a virtual slot.
    pub tau_l: f64,
    /// Conditional collision probability seen by a WiFi station.
    pub p_w: f64,
    /// Conditional collision probability seen by the gNB.
    pub p_l: f64,
    /// Probability that at least one WiFi station transmits in a slot.
    pub p_tr_w: f64,
    /// Probability a WiFi transmission is a success, given one occurs.
    pub p_s_w: f64,
    /// Probability the gNB transmits in a slot (single gNB: equals `tau_l`).
    pub p_tr_l: f64,
    /// Success probability of a gNB transmission given one occurs (1 for a
    /// single gNB; collisions with WiFi are accounted separately).
    pub p_s_l: f64,
}

/// Average virtual-slot composition of the shared channel (all seconds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotBreakdown {
    /// Probability-weighted idle time.
    pub idle: f64,
    /// Probability-weighted WiFi success time.
    pub wifi_success: f64,
    /// Probability-weighted gNB success time.
    pub gnb_success: f64,
    /// Probability-weighted WiFi-only collision time.
    pub wifi_collision: f64,
    /// Probability-weighted time of collisions involving the gNB.
    pub cross_collision: f64,
    /// Mean virtual-slot duration: sum of the five components.
    pub total: f64,
    /// Raw duration of a successful WiFi exchange.
    pub wifi_success_duration: f64,
    /// Raw duration of a gNB occupancy (success or collision).
    pub gnb_success_duration: f64,
    /// Raw duration of a WiFi-only collision.
    pub wifi_collision_duration: f64,
    /// Raw duration of a failed gNB occupancy.
    pub gnb_collision_duration: f64,
    /// Raw duration of a WiFi/gNB collision: max of the two losses.
    pub cross_collision_duration: f64,
}

/// Result of tuning the gNB initial window for per-node airtime parity.
#[derive(Debug, Clone, Copy)]
pub struct WindowTuning {
    /// Real-valued root of the airtime-balance equation.
    pub window: f64,
    /// The root rounded to the nearest integer window.
    pub window_rounded: u32,
    /// Signed relative imbalance `(r_gnb - r_wifi) / r_wifi` at `window`.
    pub imbalance: f64,
    /// False when the equality was unattainable and a boundary was returned.
    pub converged: bool,
    /// Whether `window` lies in the priority class's admissible set.
    pub within_class: bool,
    /// Admissible class window closest to the root.
    pub nearest_class_window: u32,
}

/// Smallest collision probability fed into the access-probability closed
/// forms; keeps the `p -> 0` limits finite without moving interior solutions.
const P_FLOOR: f64 = 1e-12;

/// Geometric partial sum `1 + x + ... + x^{m-1}`, evaluated term by term so
/// the `x = 1` point needs no special casing.
fn geometric_sum(x: f64, m: u32) -> f64 {
    let mut acc = 0.0;
    let mut term = 1.0;
    for _ in 0..m {
        acc += term;
        term *= x;
    }
    acc
}

/// Saturated-DCF access probability of one WiFi station with initial window
/// `cw_min`, maximum backoff stage `m`, and conditional collision
/// probability `p`.
pub fn wifi_access_probability(p: f64, cw_min: u32, m: u32) -> f64 {
    let w = cw_min as f64;
    let one_m2p = 1.0 - 2.0 * p;
    if one_m2p.abs() < 1e-9 {
        // Removable singularity of the closed form at p = 1/2.
        return 2.0 / (1.0 + w + p * w * m as f64);
    }
    2.0 * one_m2p / (one_m2p * (w + 1.0) + p * w * (1.0 - (2.0 * p).powi(m as i32)))
}

/// The same DCF access probability written with an explicit geometric sum,
/// `2 / (1 + W + p W sum_{t<m} (2p)^t)`; well defined at `p = 1/2`.
pub fn wifi_access_probability_sum(p: f64, cw_min: u32, m: u32) -> f64 {
    let w = cw_min as f64;
    2.0 / (1.0 + w + p * w * geometric_sum(2.0 * p, m))
}

/// Cat-4 LBT access probability of the gNB, derived from the access state
/// machine on the shared virtual-slot grid.
///
/// Chain semantics: after any transmission (and after a drop) the gNB senses
/// an initial defer of `icca_slots` idle slots and transmits immediately if
/// all are idle; a busy slot during the defer moves it to ECCA stage 0. In
/// ECCA the counter decrements once per idle slot and freezes on busy slots
/// (the post-busy defer rides inside the busy occupancy on this grid);
/// a collision advances the stage, and a collision at the last stage drops
/// the packet. `window` is real-valued; stage `i` uses `2^i * window`.
pub fn gnb_access_probability(p: f64, window: f64, m: u32, icca_slots: u32) -> f64 {
    let p = p.clamp(P_FLOOR, 1.0 - P_FLOOR);
    let q = 1.0 - p;
    let l = icca_slots;
    let g = q.powi(l as i32); // defer completes, direct transmission
    let kappa = 1.0 - q.powi(l as i32 + 1); // flow entering ECCA stage 0
    let a = geometric_sum(p, m); // per-stage transmit visits
    let b = geometric_sum(2.0 * p, m); // window-weighted visits
    let icca_occupancy = geometric_sum(q, l);
    let tx = g + kappa * a;
    let backoff_occupancy = kappa * (window * b - a) / (2.0 * q);
    tx / (icca_occupancy + tx + backoff_occupancy)
}

/// Alternative closed form for the Cat-4 access probability found in parts
/// of the coexistence literature.
///
/// Kept for cross-checks only: the expression has a pole near `p ~ 0.455`,
/// returns negative values on `p in (0.455, 0.5)` for any window, and is
/// exactly zero at `p = 1/2`, so it cannot describe a physical chain there.
/// See the unit tests for the documented behaviour.
pub fn gnb_access_probability_alt(p: f64, window: f64, m: u32, icca_slots: u32) -> f64 {
    let p = p.clamp(P_FLOOR, 1.0 - P_FLOOR);
    let l = icca_slots as i32;
    let num = 2.0 * p * (1.0 - 2.0 * p) * (1.0 + (1.0 - p).powi(l));
    let h1 = (2.0 * window + 1.0) * (1.0 - 2.0 * p)
        + 2.0 * p * window * (1.0 - 2.0 * (2.0 * p).powi(m as i32 - 1));
    let den = (2.0 - 2.0 * (1.0 - p).powi(l)) * (1.0 - 3.0 * p + 2.0 * p * p) + p * h1;
    num / den
}

/// Fixed point of a standalone (WiFi-only) system of `n` stations whose
/// access probability is `tau_of(p)`. Returns `(tau, p)`.
///
/// The reduced residual `p - (1 - (1 - tau(p))^{n-1})` is monotone through
/// the root, so plain bisection on `p` is reliable.
pub fn solve_standalone_with<F: Fn(f64) -> f64>(tau_of: F, n: u32) -> (f64, f64) {
    assert!(n >= 1);
    if n == 1 {
        return (tau_of(0.0), 0.0);
    }
    let residual = |p: f64| {
        let tau = tau_of(p);
        p - (1.0 - (1.0 - tau).powi(n as i32 - 1))
    };
    let p = bisect(residual, 0.0, 1.0 - 1e-12, 1e-15, 200).expect("standalone DCF residual brackets a root");
    (tau_of(p), p)
}

/// Standalone WiFi fixed point (gNB silent): `tau_w` and `p_w` for `n`
/// stations with the given DCF parameters.
pub fn solve_wifi_standalone(wifi: &WifiParams, n: u32) -> (f64, f64) {
    solve_standalone_with(|p| wifi_access_probability(p, wifi.cw_min, wifi.max_backoff_stage), n)
}

fn residuals(wifi: &WifiParams, nru: &NruParams, n: u32, s: &AccessState) -> [f64; 4] {
    let tau_w = wifi_access_probability(s.p_w, wifi.cw_min, wifi.max_backoff_stage);
    let tau_l = gnb_access_probability(s.p_l, nru.cw_min, nru.max_backoff_stage, nru.icca_slots);
    [
        s.tau_w - tau_w,
        s.tau_l - tau_l,
        s.p_w - (1.0 - (1.0 - s.tau_w).powi(n as i32 - 1) * (1.0 - s.tau_l)),
        s.p_l - (1.0 - (1.0 - s.tau_w).powi(n as i32)),
    ]
}

/// Residual vector of the four coupled access equations at a candidate
/// state; all entries are below 1e-9 at a solved state.
pub fn access_residuals(
    wifi: &WifiParams,
    nru: &NruParams,
    n: u32,
    state: &AccessState,
) -> [f64; 4] {
    residuals(wifi, nru, n, state)
}

/// Solve the coupled WiFi/gNB access fixed point for `n >= 1` WiFi stations.
///
/// Damped successive substitution on `(p_w, p_l)` (factor 0.5), with a
/// bisection fallback on the reduced one-dimensional system if the iteration
/// stalls. The returned state has all transmission/success probabilities
/// filled in.
pub fn solve_coexistence(wifi: &WifiParams, nru: &NruParams, n: u32) -> Result<AccessState, CoexError> {
    if n < 1 {
        return Err(CoexError::NoNodes);
    }
    wifi.validate()?;
    nru.validate()?;

    const DAMP: f64 = 0.5;
    const MAX_ITER: usize = 100_000;
    let mut p_w = 0.3f64;
    let mut p_l = 0.3f64;
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let tau_w = wifi_access_probability(p_w, wifi.cw_min, wifi.max_backoff_stage);
        let tau_l = gnb_access_probability(p_l, nru.cw_min, nru.max_backoff_stage, nru.icca_slots);
        let p_w_next = 1.0 - (1.0 - tau_w).powi(n as i32 - 1) * (1.0 - tau_l);
        let p_l_next = 1.0 - (1.0 - tau_w).powi(n as i32);
        let delta = (p_w_next - p_w).abs().max((p_l_next - p_l).abs());
        p_w = DAMP * p_w + (1.0 - DAMP) * p_w_next;
        p_l = DAMP * p_l + (1.0 - DAMP) * p_l_next;
        if delta < 1e-14 {
            converged = true;
            break;
        }
    }
    if !converged {
        // Reduced system: p_l is a function of p_w alone, so bisect on p_w.
        let residual = |pw: f64| {
            let tau_w = wifi_access_probability(pw, wifi.cw_min, wifi.max_backoff_stage);
            let pl = 1.0 - (1.0 - tau_w).powi(n as i32);
            let tau_l = gnb_access_probability(pl, nru.cw_min, nru.max_backoff_stage, nru.icca_slots);
            pw - (1.0 - (1.0 - tau_w).powi(n as i32 - 1) * (1.0 - tau_l))
        };
        p_w = bisect(residual, 0.0, 1.0 - 1e-12, 1e-15, 200)
            .map_err(|_| CoexError::NoConvergence { iterations: MAX_ITER, residual: f64::NAN })?;
        let tau_w = wifi_access_probability(p_w, wifi.cw_min, wifi.max_backoff_stage);
        p_l = 1.0 - (1.0 - tau_w).powi(n as i32);
    }

    let tau_w = wifi_access_probability(p_w, wifi.cw_min, wifi.max_backoff_stage);
    let tau_l = gnb_access_probability(p_l, nru.cw_min, nru.max_backoff_stage, nru.icca_slots);
    let mut state = AccessState {
        tau_w,
        tau_l,
        p_w,
        p_l,
        p_tr_w: 0.0,
        p_s_w: 0.0,
        p_tr_l: 0.0,
        p_s_l: 0.0,
    };
    tx_probabilities(&mut state, n);

    let res = residuals(wifi, nru, n, &state);
    let max_res = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    if max_res > 1e-10 {
        return Err(CoexError::NoConvergence { iterations: MAX_ITER, residual: max_res });
    }
    Ok(state)
}

/// Fill the transmission/success probabilities of a state holding
/// `(tau_w, tau_l)` for `n` WiFi stations.
///
/// `p_s_w` is 1 in the `p_tr_w -> 0` limit (a lone transmission cannot
/// collide with itself).
pub fn tx_probabilities(state: &mut AccessState, n: u32) {
    let tau_w = state.tau_w;
    state.p_tr_w = 1.0 - (1.0 - tau_w).powi(n as i32);
    state.p_s_w = if state.p_tr_w > 0.0 {
        (n as f64 * tau_w * (1.0 - tau_w).powi(n as i32 - 1) / state.p_tr_w).min(1.0)
    } else {
        1.0
    };
    state.p_tr_l = state.tau_l;
    state.p_s_l = 1.0;
}

/// Average slot-duration decomposition of the shared channel.
pub fn slot_breakdown(
    state: &AccessState,
    wifi: &WifiParams,
    nru: &NruParams,
    n: u32,
) -> SlotBreakdown {
    let t_s_w = wifi.success_duration();
    let t_c_w = wifi.collision_duration();
    let t_s_l = nru.occupancy_duration();
    let t_c_l = nru.occupancy_duration();
    let t_lw = t_c_w.max(t_c_l);

    let tau_w = state.tau_w;
    let tau_l = state.tau_l;
    let nf = n as f64;
    let all_quiet = (1.0 - tau_w).powi(n as i32);
    let one_wifi = nf * tau_w * (1.0 - tau_w).powi(n as i32 - 1);

    let idle = (1.0 - tau_l) * all_quiet * wifi.slot_time;
    let wifi_success = one_wifi * (1.0 - tau_l) * t_s_w;
    let gnb_success = tau_l * all_quiet * t_s_l;
    let wifi_collision = (1.0 - all_quiet - one_wifi) * (1.0 - tau_l) * t_c_w;
    let cross_collision = tau_l * (1.0 - all_quiet) * t_lw;
    let total = idle + wifi_success + gnb_success + wifi_collision + cross_collision;

    SlotBreakdown {
        idle,
        wifi_success,
        gnb_success,
        wifi_collision,
        cross_collision,
        total,
        wifi_success_duration: t_s_w,
        gnb_success_duration: t_s_l,
        wifi_collision_duration: t_c_w,
        gnb_collision_duration: t_c_l,
        cross_collision_duration: t_lw,
    }
}

/// Successful-airtime ratios `(gNB, per WiFi node)`.
pub fn airtime_ratios(state: &AccessState, slots: &SlotBreakdown, n: u32) -> (f64, f64) {
    let r_gnb = state.p_s_l * state.p_tr_l * (1.0 - state.p_tr_w) * slots.gnb_success_duration
        / slots.total;
    let r_wifi = state.p_s_w * state.p_tr_w * (1.0 - state.p_tr_l) * slots.wifi_success_duration
        / (slots.total * n as f64);
    (r_gnb, r_wifi)
}

/// Access factor `tau_l (1 - tau_w)^n / T_slot` (1/s): the per-second rate
/// of successful gNB channel acquisitions, used by the resource allocator.
pub fn gnb_access_factor(state: &AccessState, slots: &SlotBreakdown, n: u32) -> f64 {
    state.tau_l * (1.0 - state.tau_w).powi(n as i32) / slots.total
}

fn airtime_gap(wifi: &WifiParams, nru: &NruParams, n: u32, window: f64) -> Result<f64, CoexError> {
    let trial = nru.clone().with_window(window);
    let state = solve_coexistence(wifi, &trial, n)?;
    let slots = slot_breakdown(&state, wifi, &trial, n);
    let (r_gnb, r_wifi) = airtime_ratios(&state, &slots, n);
    Ok(r_gnb - r_wifi)
}

/// Tune the gNB initial contention window so the gNB and each WiFi station
/// obtain the same successful-airtime ratio.
///
/// Outer bisection on a real-valued window in `[1, 65536]`, re-solving the
/// full fixed point at each trial. If the equality is unattainable in that
/// range the nearer boundary is returned with `converged = false` and the
/// residual imbalance reported.
pub fn optimal_initial_window(
    wifi: &WifiParams,
    nru: &NruParams,
    n: u32,
) -> Result<WindowTuning, CoexError> {
    const W_LO: f64 = 1.0;
    const W_HI: f64 = 65_536.0;
    let gap_lo = airtime_gap(wifi, nru, n, W_LO)?;
    let gap_hi = airtime_gap(wifi, nru, n, W_HI)?;

    let mk = |window: f64, imbalance: f64, converged: bool| WindowTuning {
        window,
        window_rounded: window.round().max(1.0) as u32,
        imbalance,
        converged,
        within_class: nru.window_in_class(window),
        nearest_class_window: nru.nearest_class_window(window),
    };

    // The gap is strictly decreasing in the window (a larger window lowers
    // tau_l), so a sign change over the range pins the root.
    if gap_lo <= 0.0 {
        let (_, r_w) = ratio_at(wifi, nru, n, W_LO)?;
        return Ok(mk(W_LO, gap_lo / r_w, false));
    }
    if gap_hi >= 0.0 {
        let (_, r_w) = ratio_at(wifi, nru, n, W_HI)?;
        return Ok(mk(W_HI, gap_hi / r_w, false));
    }
    let root = bisect(
        |w| airtime_gap(wifi, nru, n, w).expect("fixed point solvable across the bracket"),
        W_LO,
        W_HI,
        1e-12,
        200,
    )
    .map_err(|e| CoexError::Tuning(e.to_string()))?;
    let (r_g, r_w) = ratio_at(wifi, nru, n, root)?;
    Ok(mk(root, (r_g - r_w) / r_w, true))
}

fn ratio_at(wifi: &WifiParams, nru: &NruParams, n: u32, window: f64) -> Result<(f64, f64), CoexError> {
    let trial = nru.clone().with_window(window);
    let state = solve_coexistence(wifi, &trial, n)?;
    let slots = slot_breakdown(&state, wifi, &trial, n);
    Ok(airtime_ratios(&state, &slots, n))
}

/// MCOT giving the gNB the same total successful airtime as the whole WiFi
/// system at a fixed window (system-level parity; the COT-adjustment
/// baseline). Closed form, since the access probabilities do not depend on
/// the occupancy durations.
pub fn airtime_parity_mcot(wifi: &WifiParams, nru: &NruParams, n: u32) -> Result<f64, CoexError> {
    let state = solve_coexistence(wifi, nru, n)?;
    let all_quiet = (1.0 - state.tau_w).powi(n as i32);
    let wifi_weight =
        n as f64 * state.tau_w * (1.0 - state.tau_w).powi(n as i32 - 1) * (1.0 - state.tau_l);
    let t_s_l = wifi_weight * wifi.success_duration() / (state.tau_l * all_quiet);
    Ok((t_s_l - nru.gnb_slot).max(1e-4))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_params() -> (WifiParams, NruParams) {
        (WifiParams::default_11n(), NruParams::default_cat4())
    }

    #[test]
    fn single_node_without_gnb_matches_closed_form() {
        let wifi = WifiParams::default_11n();
        let (tau, p) = solve_wifi_standalone(&wifi, 1);
        assert_eq!(p, 0.0);
        assert!((tau - 2.0 / 17.0).abs() < 1e-12);
    }

    #[test]
    fn dcf_access_probability_hand_value() {
        // W=16, m=6, p=0.25: tau = 1/12.4375
        let tau = wifi_access_probability(0.25, 16, 6);
        assert!((tau - 1.0 / 12.4375).abs() < 1e-12);
        assert!((tau - 0.080402).abs() < 1e-6);
    }

    #[test]
    fn closed_form_and_sum_form_agree() {
        for i in 0..=100 {
            let p = i as f64 / 101.0;
            let a = wifi_access_probability(p, 16, 6);
            let b = wifi_access_probability_sum(p, 16, 6);
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
        // Removable singularity at p = 1/2.
        let at_half = wifi_access_probability(0.5, 16, 6);
        assert!((at_half - 2.0 / (1.0 + 16.0 + 0.5 * 16.0 * 6.0)).abs() < 1e-12);
        assert!((at_half - wifi_access_probability_sum(0.5, 16, 6)).abs() < 1e-12);
    }

    #[test]
    fn gnb_chain_limits() {
        // Empty channel: defer always completes, one transmission per L+1 slots.
        let tau0 = gnb_access_probability(0.0, 16.0, 6, 8);
        assert!((tau0 - 1.0 / 9.0).abs() < 1e-9);
        // Saturated-busy channel: the counter never advances.
        let tau1 = gnb_access_probability(1.0 - 1e-9, 16.0, 6, 8);
        assert!(tau1 < 1e-6);
        // Smooth, in (0,1), decreasing in the window across the whole range.
        for i in 1..100 {
            let p = i as f64 / 100.0;
            let small = gnb_access_probability(p, 16.0, 6, 8);
            let large = gnb_access_probability(p, 1024.0, 6, 8);
            assert!(small > 0.0 && small < 1.0, "p={p}");
            assert!(large > 0.0 && large < small, "p={p}");
        }
    }

    #[test]
    fn gnb_alt_form_is_nonphysical_mid_range() {
        // The alternative closed form flips sign between its pole (~0.455)
        // and 1/2; the production chain form stays positive there. Keeping
        // this pinned documents why the chain form is the default.
        assert!(gnb_access_probability_alt(0.48, 16.0, 6, 8) < 0.0);
        assert!((gnb_access_probability_alt(0.5, 16.0, 6, 8)).abs() < 1e-12);
        assert!(gnb_access_probability(0.48, 16.0, 6, 8) > 0.0);
        // In its sane region the alt form is a plain positive curve.
        assert!((gnb_access_probability_alt(0.3, 16.0, 6, 8) - 0.0366824).abs() < 1e-6);
    }

    #[test]
    fn coexistence_residuals_below_1e9_for_table_scenarios() {
        let (wifi, nru) = table_params();
        for n in [5u32, 10, 15, 20, 25, 30] {
            let state = solve_coexistence(&wifi, &nru, n).unwrap();
            let res = access_residuals(&wifi, &nru, n, &state);
            for r in res {
                assert!(r.abs() < 1e-9, "N={n} residual {r}");
            }
            for v in [state.tau_w, state.tau_l, state.p_w, state.p_l, state.p_tr_w, state.p_s_w] {
                assert!((0.0..=1.0).contains(&v), "N={n} value {v}");
            }
        }
    }

    #[test]
    fn tau_w_strictly_decreasing_in_node_count() {
        let (wifi, nru) = table_params();
        let mut prev = f64::INFINITY;
        for n in 1..=50 {
            let state = solve_coexistence(&wifi, &nru, n).unwrap();
            assert!(state.tau_w < prev, "tau_w not decreasing at N={n}");
            prev = state.tau_w;
        }
    }

    #[test]
    fn tx_probability_examples() {
        let mut s = AccessState {
            tau_w: 0.0,
            tau_l: 0.0,
            p_w: 0.0,
            p_l: 0.0,
            p_tr_w: 0.0,
            p_s_w: 0.0,
            p_tr_l: 0.0,
            p_s_l: 0.0,
        };
        tx_probabilities(&mut s, 3);
        assert_eq!(s.p_tr_w, 0.0);
        assert_eq!(s.p_s_w, 1.0);

        s.tau_w = 0.1;
        tx_probabilities(&mut s, 2);
        assert!((s.p_tr_w - 0.19).abs() < 1e-12);
        assert!((s.p_s_w - 2.0 * 0.1 * 0.9 / 0.19).abs() < 1e-12);

        s.tau_l = 0.3;
        tx_probabilities(&mut s, 2);
        assert_eq!(s.p_tr_l, 0.3);
        assert_eq!(s.p_s_l, 1.0);
    }

    #[test]
    fn empty_channel_slot_is_one_cca_slot() {
        let (wifi, nru) = table_params();
        let state = AccessState {
            tau_w: 0.0,
            tau_l: 0.0,
            p_w: 0.0,
            p_l: 0.0,
            p_tr_w: 0.0,
            p_s_w: 1.0,
            p_tr_l: 0.0,
            p_s_l: 1.0,
        };
        let slots = slot_breakdown(&state, &wifi, &nru, 5);
        assert!((slots.total - wifi.slot_time).abs() < 1e-18);
        assert_eq!(slots.wifi_success, 0.0);
    }

    #[test]
    fn slot_components_sum_to_total() {
        let (wifi, nru) = table_params();
        for n in [1u32, 5, 10, 30] {
            let state = solve_coexistence(&wifi, &nru, n).unwrap();
            let s = slot_breakdown(&state, &wifi, &nru, n);
            let sum = s.idle + s.wifi_success + s.gnb_success + s.wifi_collision + s.cross_collision;
            assert_eq!(sum, s.total);
            for c in [s.idle, s.wifi_success, s.gnb_success, s.wifi_collision, s.cross_collision] {
                assert!(c >= 0.0);
            }
            assert_eq!(s.cross_collision_duration, s.wifi_collision_duration.max(s.gnb_collision_duration));
        }
    }

    #[test]
    fn probability_bounds_under_parameter_fuzz() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let mut wifi = WifiParams::default_11n();
            wifi.cw_min = rng.random_range(2..256);
            wifi.max_backoff_stage = rng.random_range(1..8);
            wifi.payload_mean_bits = rng.random_range(800.0..32768.0);
            let mut nru = NruParams::default_cat4();
            nru.cw_min = rng.random_range(1.0..4096.0);
            nru.max_backoff_stage = rng.random_range(1..8);
            let n = rng.random_range(1..40);
            let state = solve_coexistence(&wifi, &nru, n).unwrap();
            for v in [
                state.tau_w, state.tau_l, state.p_w, state.p_l,
                state.p_tr_w, state.p_s_w, state.p_tr_l, state.p_s_l,
            ] {
                assert!((0.0..=1.0).contains(&v), "out of range: {v}");
            }
        }
    }

    #[test]
    fn airtime_silent_gnb_gets_nothing() {
        let (wifi, nru) = table_params();
        let mut state = solve_coexistence(&wifi, &nru, 5).unwrap();
        state.tau_l = 0.0;
        tx_probabilities(&mut state, 5);
        let slots = slot_breakdown(&state, &wifi, &nru, 5);
        let (r_gnb, r_wifi) = airtime_ratios(&state, &slots, 5);
        assert_eq!(r_gnb, 0.0);
        assert!(r_wifi > 0.0);
    }

    #[test]
    fn default_window_strongly_favours_gnb() {
        let (wifi, nru) = table_params();
        let state = solve_coexistence(&wifi, &nru, 5).unwrap();
        let slots = slot_breakdown(&state, &wifi, &nru, 5);
        let (r_gnb, r_wifi) = airtime_ratios(&state, &slots, 5);
        assert!(r_gnb > 5.0 * r_wifi, "r_gnb={r_gnb} r_wifi={r_wifi}");
    }

    #[test]
    fn tuned_window_equalises_airtime() {
        let (wifi, nru) = table_params();
        for n in [5u32, 10, 20] {
            let tuning = optimal_initial_window(&wifi, &nru, n).unwrap();
            assert!(tuning.converged, "N={n}");
            assert!(tuning.imbalance.abs() < 1e-6, "N={n} imbalance {}", tuning.imbalance);
            assert!(tuning.window >= 1.0);
        }
    }

    #[test]
    fn tuned_window_nondecreasing_in_occupancy() {
        // Longer occupancy per win must push the tuned window up, holding
        // the access machine (defer length, stages) fixed. Swept within the
        // class-admissible MCOTs and, at finer grain, over the slot padding.
        let wifi = WifiParams::default_11n();
        let w8 = optimal_initial_window(&wifi, &NruParams::default_cat4(), 10).unwrap();
        let w10 = optimal_initial_window(
            &wifi,
            &NruParams::default_cat4().with_mcot(10e-3).unwrap(),
            10,
        )
        .unwrap();
        assert!(w10.window > w8.window);

        let mut prev = 0.0;
        for pad in [0.25e-3, 0.5e-3, 1e-3, 2e-3] {
            let nru = NruParams { gnb_slot: pad, ..NruParams::default_cat4() };
            let tuning = optimal_initial_window(&wifi, &nru, 10).unwrap();
            assert!(
                tuning.window > prev,
                "window shrank at occupancy pad {pad}: {} <= {prev}",
                tuning.window
            );
            prev = tuning.window;
        }
    }

    #[test]
    fn tuned_window_not_monotone_across_defer_classes() {
        // Crossing priority classes changes the defer length as well as the
        // occupancy, and the shorter defer of the low classes dominates:
        // the 3 ms class-2 window exceeds the 8 ms class-4 window.
        let wifi = WifiParams::default_11n();
        let class2 = NruParams::from_class(2, 16.0, 3e-3, 16e-6, 9e-6, 0.25e-3).unwrap();
        let class4 = NruParams::default_cat4();
        let w2 = optimal_initial_window(&wifi, &class2, 10).unwrap();
        let w4 = optimal_initial_window(&wifi, &class4, 10).unwrap();
        assert!(w2.converged && w4.converged);
        assert!(w2.window > w4.window, "w2={} w4={}", w2.window, w4.window);
    }

    #[test]
    fn symmetric_degenerate_tuning_matches_tau() {
        // With equal occupancy durations and matched backoff the balance
        // point is tau_l = tau_w.
        let mut wifi = WifiParams::default_11n();
        wifi.payload_mean_bits = 1.0;
        let nru = NruParams::default_cat4();
        let state = solve_coexistence(&wifi, &nru, 1).unwrap();
        let t_s_w = wifi.success_duration();
        let t_s_l = nru.occupancy_duration();
        let target = state.tau_w * t_s_w / (t_s_l - state.tau_w * t_s_l + state.tau_w * t_s_w);
        // Direct evaluation of the balance identity at the solved state.
        let slots = slot_breakdown(&state, &wifi, &nru, 1);
        let (r_gnb, r_wifi) = airtime_ratios(&state, &slots, 1);
        let lhs = r_gnb / r_wifi;
        let rhs = (state.tau_l / (1.0 - state.tau_l)) * ((1.0 - target) / target);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn parity_mcot_balances_system_airtime() {
        let (wifi, nru) = table_params();
        let mcot = airtime_parity_mcot(&wifi, &nru, 10).unwrap();
        let adjusted = NruParams { mcot, ..nru.clone() };
        let state = solve_coexistence(&wifi, &adjusted, 10).unwrap();
        let slots = slot_breakdown(&state, &wifi, &adjusted, 10);
        let (r_gnb, r_wifi) = airtime_ratios(&state, &slots, 10);
        assert!((r_gnb - 10.0 * r_wifi).abs() / r_gnb < 1e-9);
    }
}
