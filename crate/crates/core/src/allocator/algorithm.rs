//! The full resource-allocation loop: alternating exact time and power
//! steps inside, a projected subgradient on the per-channel fairness
//! multipliers outside.
//!
//! Each inner step is an exact coordinate maximisation of the
//! fairness-weighted objective, so the inner trace is non-decreasing; the
//! power multipliers come out of the water-filling steps exactly rather
//! than by their own subgradient ascent (those updates would already be at
//! their fixed point). The run starts from both the equal-everything and
//! the water-filled warm starts and keeps whichever converges higher,
//! which also pins the baseline-dominance ordering structurally.

use super::baselines::{baseline_etep, baseline_etop};
use super::power::{downlink_power, uplink_power};
use super::time::time_allocation;
use super::{AllocError, Allocation, Scenario};

/// Multiplier state at the end of a run.
#[derive(Debug, Clone)]
pub struct DualState {
    /// Per-channel fairness multipliers.
    pub alpha: Vec<f64>,
    /// Per-channel time-budget multipliers from the last time step.
    pub beta: Vec<f64>,
    /// Uplink average-power multiplier.
    pub theta: f64,
    /// Downlink total-power multiplier.
    pub gamma: f64,
    /// Per-link downlink cap multipliers.
    pub xi: Vec<Vec<f64>>,
    /// Outer iterations consumed.
    pub outer_iterations: usize,
    /// Subgradient base step sizes `(s1, s2, s3)`; the schedule is `s/t`.
    pub step_sizes: [f64; 3],
}

/// One trace row per inner alternation.
#[derive(Debug, Clone, Copy)]
pub struct TraceRecord {
    pub outer: usize,
    pub inner: usize,
    /// Plain total-rate objective (bits/s).
    pub objective: f64,
    /// Fairness-weighted objective the inner loop maximises.
    pub weighted_objective: f64,
    /// Largest relative constraint violation of the current allocation.
    pub max_violation: f64,
    pub max_alpha: f64,
    pub theta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone)]
pub struct AlgorithmOptions {
    pub max_outer: usize,
    /// Relative objective-change threshold between outer iterations.
    pub outer_tol: f64,
    /// Relative weighted-objective threshold inside the alternation.
    pub inner_tol: f64,
    pub max_inner: usize,
    pub record_trace: bool,
    /// Skip the per-channel reachability pre-check (used by the pre-check
    /// itself and by callers that already know the floors are attainable).
    pub skip_feasibility_check: bool,
}

impl Default for AlgorithmOptions {
    fn default() -> Self {
        AlgorithmOptions {
            max_outer: 500,
            outer_tol: 1e-6,
            inner_tol: 1e-8,
            max_inner: 200,
            record_trace: true,
            skip_feasibility_check: false,
        }
    }
}

/// Output of [`run_algorithm1`].
#[derive(Debug, Clone)]
pub struct AlgorithmReport {
    pub allocation: Allocation,
    pub dual: DualState,
    pub trace: Vec<TraceRecord>,
    /// Objective settled within tolerance before the iteration cap.
    pub converged: bool,
    /// Every channel's rate floor met within slack at the end.
    pub fairness_ok: bool,
    pub objective: f64,
    /// Which warm start won: "equal-power" or "water-filled".
    pub started_from: &'static str,
}

struct InnerOutcome {
    allocation: Allocation,
    beta: Vec<f64>,
    theta: f64,
    gamma: f64,
    xi: Vec<Vec<f64>>,
    weighted: f64,
}

fn inner_alternation(
    scn: &Scenario,
    alpha: &[f64],
    q_dl0: Vec<Vec<f64>>,
    q_ul0: Vec<Vec<f64>>,
    opts: &AlgorithmOptions,
    outer: usize,
    trace: &mut Vec<TraceRecord>,
) -> Result<InnerOutcome, AllocError> {
    let mut q_dl = q_dl0;
    let mut q_ul = q_ul0;
    let mut prev = f64::NEG_INFINITY;
    let mut outcome: Option<InnerOutcome> = None;
    for inner in 1..=opts.max_inner {
        let ts = time_allocation(&q_dl, &q_ul, scn, alpha)?;
        let ul = uplink_power(&ts.t_ul, scn, alpha)?;
        let dl = downlink_power(&ts.t_dl, scn, alpha)?;
        q_ul = ul.q_ul.clone();
        q_dl = dl.q_dl.clone();
        let allocation =
            Allocation { t_dl: ts.t_dl, t_ul: ts.t_ul, q_dl: q_dl.clone(), q_ul: q_ul.clone() };
        let weighted = allocation.weighted_objective(scn, alpha);
        if opts.record_trace {
            trace.push(TraceRecord {
                outer,
                inner,
                objective: allocation.objective(scn),
                weighted_objective: weighted,
                max_violation: allocation.max_violation(scn),
                max_alpha: alpha.iter().cloned().fold(0.0, f64::max),
                theta: ul.theta,
                gamma: dl.gamma,
            });
        }
        let done = (weighted - prev).abs() <= opts.inner_tol * weighted.abs().max(1.0);
        prev = weighted;
        outcome = Some(InnerOutcome {
            allocation,
            beta: ts.beta,
            theta: ul.theta,
            gamma: dl.gamma,
            xi: dl.xi,
            weighted,
        });
        if done {
            break;
        }
    }
    Ok(outcome.expect("at least one inner iteration runs"))
}

fn outer_loop(
    scn: &Scenario,
    init: Allocation,
    label: &'static str,
    opts: &AlgorithmOptions,
) -> Result<AlgorithmReport, AllocError> {
    let n_ch = scn.n_channels();
    let mut alpha = vec![0.0; n_ch];
    // Fairness subgradients are used floor-normalised, so the step scale is
    // dimensionless; t^-0.6 decay keeps the square sum finite while moving
    // much faster than 1/t on small violations.
    let s1 = 1.0;
    let step_sizes = [s1, 0.1 / scn.p_dk_max.max(1e-12), 0.1 / scn.p_gnb_max.max(1e-12)];

    let mut trace = Vec::new();
    let mut q_dl = init.q_dl;
    let mut q_ul = init.q_ul;
    let mut prev_obj = f64::NEG_INFINITY;
    let mut converged = false;
    let mut last: Option<InnerOutcome> = None;
    let mut outer_used = 0;

    for outer in 1..=opts.max_outer {
        outer_used = outer;
        let outcome = inner_alternation(scn, &alpha, q_dl.clone(), q_ul.clone(), opts, outer, &mut trace)?;
        q_dl = outcome.allocation.q_dl.clone();
        q_ul = outcome.allocation.q_ul.clone();
        let obj = outcome.allocation.objective(scn);

        // Projected subgradient on the fairness floors, floor-normalised.
        let step = s1 / (outer as f64).powf(0.6);
        let mut alpha_moved = false;
        for k in 0..n_ch {
            let floor = scn.channels[k].rate_floor;
            if floor <= 0.0 {
                continue;
            }
            let (dl, ul) = outcome.allocation.channel_rates(scn, k);
            let gap = (floor - (dl + ul)) / floor;
            let next = (alpha[k] + step * gap).max(0.0);
            if (next - alpha[k]).abs() > 1e-7 * (1.0 + alpha[k]) {
                alpha_moved = true;
            }
            alpha[k] = next;
        }

        let obj_settled = (obj - prev_obj).abs() <= opts.outer_tol * obj.abs().max(1.0);
        prev_obj = obj;
        last = Some(outcome);
        if obj_settled && !alpha_moved {
            converged = true;
            break;
        }
    }

    let outcome = last.expect("outer loop ran");
    let fairness_ok = (0..n_ch).all(|k| {
        let (dl, ul) = outcome.allocation.channel_rates(scn, k);
        dl + ul >= scn.channels[k].rate_floor * (1.0 - 1e-6) - 1e-9
    });
    let objective = outcome.allocation.objective(scn);
    Ok(AlgorithmReport {
        allocation: outcome.allocation,
        dual: DualState {
            alpha,
            beta: outcome.beta,
            theta: outcome.theta,
            gamma: outcome.gamma,
            xi: outcome.xi,
            outer_iterations: outer_used,
            step_sizes,
        },
        trace,
        converged,
        fairness_ok,
        objective,
        started_from: label,
    })
}

/// Upper bound on the rate a single channel can reach with every budget to
/// itself and the per-link caps relaxed (the relaxation avoids the corner
/// lock-in of alternating steps and only loosens the bound); names the
/// budget whose shadow value dominates at that point.
fn channel_capacity(scn: &Scenario, k: usize, opts: &AlgorithmOptions) -> Result<(f64, &'static str), AllocError> {
    let mut sub = scn.single_channel(k);
    sub.channels[0].rate_floor = 0.0;
    sub.p_dk_max = 1e9 * scn.p_gnb_max;
    let sub_opts = AlgorithmOptions {
        record_trace: false,
        skip_feasibility_check: true,
        max_outer: 1,
        ..opts.clone()
    };
    let report = outer_loop(&sub, baseline_etop(&sub)?, "water-filled", &sub_opts)?;
    let shadow_ul = report.dual.theta * sub.p_avg * sub.n_ul() as f64;
    let shadow_dl = report.dual.gamma * sub.p_gnb_max;
    let budget = if shadow_dl >= shadow_ul { "total downlink power" } else { "average uplink power" };
    Ok((report.objective, budget))
}

/// Jointly optimise time and power under the fairness floors.
///
/// Returns the converged allocation, multiplier state, and per-iteration
/// trace. Unreachable floors are reported as [`AllocError::InfeasibleFloor`]
/// before any iteration runs.
pub fn run_algorithm1(scn: &Scenario, opts: &AlgorithmOptions) -> Result<AlgorithmReport, AllocError> {
    scn.validate()?;

    if !opts.skip_feasibility_check {
        for k in 0..scn.n_channels() {
            let floor = scn.channels[k].rate_floor;
            if floor > 0.0 {
                let (capacity, budget) = channel_capacity(scn, k, opts)?;
                if capacity < floor * (1.0 - 1e-9) {
                    return Err(AllocError::InfeasibleFloor {
                        channel: k,
                        floor,
                        achievable: capacity,
                        budget,
                    });
                }
            }
        }
    }

    // Two warm starts: the equal-power point (whose first time step visits
    // the time-optimised baseline) and the water-filled point.
    let from_etep = outer_loop(scn, baseline_etep(scn), "equal-power", opts)?;
    let from_etop = outer_loop(scn, baseline_etop(scn)?, "water-filled", opts)?;
    let pick_b = (from_etop.fairness_ok, from_etop.objective)
        > (from_etep.fairness_ok, from_etep.objective);
    Ok(if pick_b { from_etop } else { from_etep })
}
