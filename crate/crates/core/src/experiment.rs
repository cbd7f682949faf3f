//! Config-driven experiment runner: expands the sweep, evaluates every
//! (sweep value, method, replicate) cell, and aggregates replicate
//! statistics into flat result rows.

use crate::allocator::{
    baseline_etep, baseline_etop, baseline_otep, run_algorithm1, AlgorithmOptions, AllocError,
    Allocation, TraceRecord,
};
use crate::config::{ExperimentConfig, Mode, ScenarioConfig};
use crate::fairness::displaced_wifi_rate;
use crate::macsim::{empirical_throughputs, simulate, SimConfig};
use crate::pipeline::{analyze_channel, build_scenario, AccessMethod, BuiltScenario};
use rayon::prelude::*;

/// One output row; optional metrics stay empty in the CSV.
#[derive(Debug, Clone, Default)]
pub struct ResultRow {
    pub sweep_axis: String,
    pub sweep_value: f64,
    pub method: String,
    pub mode: String,
    pub seed: u64,
    pub replicates: u32,
    /// "ok", or a flagged condition ("infeasible: ...", "error: ...").
    pub status: String,
    pub n_wifi: u32,
    pub dl_users: u32,
    pub ul_users: u32,
    pub payload_bytes: f64,
    pub mcot_s: f64,
    pub gnb_window: f64,
    pub tau_w: Option<f64>,
    pub tau_l: Option<f64>,
    pub p_w: Option<f64>,
    pub p_l: Option<f64>,
    pub r_gnb: Option<f64>,
    pub r_wifi_node: Option<f64>,
    pub wifi_rate_bps: Option<f64>,
    pub rate_floor_bps: Option<f64>,
    pub nr_dl_bps: Option<f64>,
    pub nr_ul_bps: Option<f64>,
    pub nr_total_bps: Option<f64>,
    pub nr_total_std_bps: Option<f64>,
    pub wifi_rate_virtual_bps: Option<f64>,
    pub fairness_slack_bps: Option<f64>,
    pub fairness_ok: Option<bool>,
    pub iterations: Option<f64>,
    pub sim_tau_w: Option<f64>,
    pub sim_tau_w_std: Option<f64>,
    pub sim_tau_l: Option<f64>,
    pub sim_tau_l_std: Option<f64>,
    pub sim_frac_idle: Option<f64>,
    pub sim_frac_wifi_succ: Option<f64>,
    pub sim_frac_gnb_succ: Option<f64>,
    pub sim_frac_wifi_coll: Option<f64>,
    pub sim_frac_cross_coll: Option<f64>,
    pub sim_wifi_goodput_bps: Option<f64>,
    pub sim_gnb_airtime_ratio: Option<f64>,
}

impl ResultRow {
    /// A row is a hard failure when evaluation errored outright; flagged
    /// conditions like unreachable floors are soft.
    pub fn is_hard_failure(&self) -> bool {
        self.status.starts_with("error:")
    }
}

/// Convergence trace of one optimisation cell, labelled
/// `sweep<value>_rep<index>`.
#[derive(Debug, Clone)]
pub struct LabelledTrace {
    pub label: String,
    pub records: Vec<TraceRecord>,
}

/// Full output of a run.
#[derive(Debug, Clone, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<ResultRow>,
    pub traces: Vec<LabelledTrace>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn base_row(cfg: &ExperimentConfig, scn: &ScenarioConfig, sweep_value: f64, method: &str) -> ResultRow {
    ResultRow {
        sweep_axis: cfg.sweep.axis.to_string(),
        sweep_value,
        method: method.to_string(),
        mode: cfg.mode.to_string(),
        seed: cfg.seed,
        replicates: cfg.replicates,
        status: "ok".to_string(),
        n_wifi: scn.wifi_nodes,
        dl_users: scn.dl_users,
        ul_users: scn.ul_users,
        payload_bytes: scn.payload_bytes,
        mcot_s: scn.mcot_ms * 1e-3,
        ..ResultRow::default()
    }
}

fn fill_analytic(row: &mut ResultRow, analysis: &crate::pipeline::ChannelAnalysis) {
    row.gnb_window = analysis.nru.cw_min;
    row.mcot_s = analysis.nru.mcot;
    row.tau_w = Some(analysis.state.tau_w);
    row.tau_l = Some(analysis.state.tau_l);
    row.p_w = Some(analysis.state.p_w);
    row.p_l = Some(analysis.state.p_l);
    row.r_gnb = Some(analysis.r_gnb);
    row.r_wifi_node = Some(analysis.r_wifi_node);
    row.wifi_rate_bps = Some(analysis.wifi_rate);
    row.rate_floor_bps = Some(analysis.threshold.rate_floor);
}

fn analytic_rows(cfg: &ExperimentConfig, scn: &ScenarioConfig, sweep_value: f64) -> Vec<ResultRow> {
    let methods = [AccessMethod::Proposed, AccessMethod::Cat4Default, AccessMethod::CotAdjust];
    methods
        .iter()
        .map(|&method| {
            let mut row = base_row(cfg, scn, sweep_value, method.label());
            match (scn.wifi_params(), scn.nru_params()) {
                (Ok(wifi), Ok(base)) => {
                    match analyze_channel(&wifi, &base, scn.wifi_nodes, scn.dl_users + scn.ul_users, method)
                    {
                        Ok(analysis) => fill_analytic(&mut row, &analysis),
                        Err(e) => row.status = format!("error: {e}"),
                    }
                }
                (Err(e), _) | (_, Err(e)) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect()
}

fn simulate_rows(cfg: &ExperimentConfig, scn: &ScenarioConfig, sweep_value: f64) -> Vec<ResultRow> {
    let methods = [AccessMethod::Proposed, AccessMethod::Cat4Default, AccessMethod::CotAdjust];
    methods
        .iter()
        .map(|&method| {
            let mut row = base_row(cfg, scn, sweep_value, method.label());
            let run = || -> Result<(), String> {
                let wifi = scn.wifi_params().map_err(|e| e.to_string())?;
                let base = scn.nru_params().map_err(|e| e.to_string())?;
                let analysis =
                    analyze_channel(&wifi, &base, scn.wifi_nodes, scn.dl_users + scn.ul_users, method)
                        .map_err(|e| e.to_string())?;
                fill_analytic(&mut row, &analysis);
                // Simulate at the integer window actually usable on air.
                let nru = analysis.nru.clone().with_window(analysis.nru.cw_min.round().max(1.0));
                let mut tw = Vec::new();
                let mut tl = Vec::new();
                let mut fracs = [0.0f64; 5];
                let mut goodput = Vec::new();
                let mut airtime = Vec::new();
                for r in 0..cfg.replicates {
                    let sim_cfg = SimConfig {
                        horizon_slots: scn.sim_slots,
                        seed: cfg.seed + r as u64,
                        gnb_enabled: true,
                    };
                    let stats =
                        simulate(&wifi, &nru, scn.wifi_nodes, &sim_cfg).map_err(|e| e.to_string())?;
                    tw.push(stats.tau_w_hat);
                    tl.push(stats.tau_l_hat);
                    for (acc, f) in fracs.iter_mut().zip(stats.time_fractions()) {
                        *acc += f / cfg.replicates as f64;
                    }
                    let (bps, frac) = empirical_throughputs(&stats, wifi.payload_mean_bits)
                        .map_err(|e| e.to_string())?;
                    goodput.push(bps);
                    airtime.push(frac);
                }
                let (tw_m, tw_s) = mean_std(&tw);
                let (tl_m, tl_s) = mean_std(&tl);
                row.sim_tau_w = Some(tw_m);
                row.sim_tau_w_std = Some(tw_s);
                row.sim_tau_l = Some(tl_m);
                row.sim_tau_l_std = Some(tl_s);
                row.sim_frac_idle = Some(fracs[0]);
                row.sim_frac_wifi_succ = Some(fracs[1]);
                row.sim_frac_gnb_succ = Some(fracs[2]);
                row.sim_frac_wifi_coll = Some(fracs[3]);
                row.sim_frac_cross_coll = Some(fracs[4]);
                row.sim_wifi_goodput_bps = Some(mean_std(&goodput).0);
                row.sim_gnb_airtime_ratio = Some(mean_std(&airtime).0);
                Ok(())
            };
            if let Err(e) = run() {
                row.status = format!("error: {e}");
            }
            row
        })
        .collect()
}

struct OptimizeOutcome {
    dl: f64,
    ul: f64,
    virtual_rate: f64,
    slack: f64,
    fairness_ok: bool,
    iterations: usize,
    trace: Vec<TraceRecord>,
    flagged: Option<String>,
}

fn evaluate_allocation(built: &BuiltScenario, scn: &ScenarioConfig, alloc: &Allocation) -> (f64, f64, f64, f64, bool) {
    let scenario = &built.scenario;
    let mut dl_total = 0.0;
    let mut ul_total = 0.0;
    let mut worst_slack = f64::INFINITY;
    let mut worst_virtual = 0.0f64;
    for k in 0..scenario.n_channels() {
        let (dl, ul) = alloc.channel_rates(scenario, k);
        dl_total += dl;
        ul_total += ul;
        let displaced = displaced_wifi_rate(
            dl + ul,
            &built.wifi,
            scn.wifi_nodes,
            scn.dl_users + scn.ul_users,
        );
        let slack = built.analysis.wifi_rate - displaced;
        if slack < worst_slack {
            worst_slack = slack;
            worst_virtual = displaced;
        }
    }
    let ok = worst_slack >= -1e-6 * built.analysis.wifi_rate;
    (dl_total, ul_total, worst_virtual, worst_slack, ok)
}

fn optimize_once(
    scn: &ScenarioConfig,
    seed: u64,
    collect_trace: bool,
) -> Result<(BuiltScenario, OptimizeOutcome), String> {
    let built = build_scenario(scn, AccessMethod::Proposed, seed).map_err(|e| e.to_string())?;
    let opts = AlgorithmOptions { record_trace: collect_trace, ..AlgorithmOptions::default() };
    match run_algorithm1(&built.scenario, &opts) {
        Ok(report) => {
            let (dl, ul, virt, slack, fair) = evaluate_allocation(&built, scn, &report.allocation);
            let flagged = if !report.converged { Some("non-converged".to_string()) } else { None };
            let outcome = OptimizeOutcome {
                dl,
                ul,
                virtual_rate: virt,
                slack,
                fairness_ok: fair && report.fairness_ok,
                iterations: report.dual.outer_iterations,
                trace: report.trace,
                flagged,
            };
            Ok((built, outcome))
        }
        Err(AllocError::InfeasibleFloor { channel, floor, achievable, budget }) => {
            let outcome = OptimizeOutcome {
                dl: 0.0,
                ul: 0.0,
                virtual_rate: 0.0,
                slack: 0.0,
                fairness_ok: false,
                iterations: 0,
                trace: Vec::new(),
                flagged: Some(format!(
                    "infeasible: channel {channel} floor {floor:.4e} > achievable {achievable:.4e} ({budget})"
                )),
            };
            Ok((built, outcome))
        }
        Err(e) => Err(e.to_string()),
    }
}

fn optimize_rows(
    cfg: &ExperimentConfig,
    scn: &ScenarioConfig,
    sweep_value: f64,
    collect_traces: bool,
) -> (Vec<ResultRow>, Vec<LabelledTrace>) {
    let mut row = base_row(cfg, scn, sweep_value, "proposed");
    let mut traces = Vec::new();
    let mut dl = Vec::new();
    let mut ul = Vec::new();
    let mut totals = Vec::new();
    let mut slacks = Vec::new();
    let mut virtuals = Vec::new();
    let mut iters = Vec::new();
    let mut all_fair = true;
    let mut flagged: Option<String> = None;

    for r in 0..cfg.replicates {
        match optimize_once(scn, cfg.seed + r as u64, collect_traces) {
            Ok((built, outcome)) => {
                if r == 0 {
                    fill_analytic(&mut row, &built.analysis);
                }
                if collect_traces {
                    traces.push(LabelledTrace {
                        label: format!("sweep{sweep_value}_rep{r}"),
                        records: outcome.trace.clone(),
                    });
                }
                if let Some(f) = &outcome.flagged {
                    flagged.get_or_insert_with(|| f.clone());
                    if f.starts_with("infeasible") {
                        all_fair = false;
                        continue;
                    }
                }
                dl.push(outcome.dl);
                ul.push(outcome.ul);
                totals.push(outcome.dl + outcome.ul);
                slacks.push(outcome.slack);
                virtuals.push(outcome.virtual_rate);
                iters.push(outcome.iterations as f64);
                all_fair &= outcome.fairness_ok;
            }
            Err(e) => {
                row.status = format!("error: {e}");
                return (vec![row], traces);
            }
        }
    }
    if let Some(f) = flagged {
        row.status = f;
    }
    if !totals.is_empty() {
        let (total_m, total_s) = mean_std(&totals);
        row.nr_dl_bps = Some(mean_std(&dl).0);
        row.nr_ul_bps = Some(mean_std(&ul).0);
        row.nr_total_bps = Some(total_m);
        row.nr_total_std_bps = Some(total_s);
        row.wifi_rate_virtual_bps = Some(mean_std(&virtuals).0);
        row.fairness_slack_bps = Some(mean_std(&slacks).0);
        row.fairness_ok = Some(all_fair);
        row.iterations = Some(mean_std(&iters).0);
    }
    (vec![row], traces)
}

fn compare_rows(cfg: &ExperimentConfig, scn: &ScenarioConfig, sweep_value: f64) -> Vec<ResultRow> {
    #[derive(Default)]
    struct Acc {
        dl: Vec<f64>,
        ul: Vec<f64>,
        slack: Vec<f64>,
        virt: Vec<f64>,
        fair: bool,
    }
    let labels = ["proposed", "ETEP", "ETOP", "OTEP"];
    let mut accs: Vec<Acc> = (0..4).map(|_| Acc { fair: true, ..Acc::default() }).collect();
    let mut first_built: Option<BuiltScenario> = None;
    let mut status = "ok".to_string();

    for r in 0..cfg.replicates {
        let built = match build_scenario(scn, AccessMethod::Proposed, cfg.seed + r as u64) {
            Ok(b) => b,
            Err(e) => {
                status = format!("error: {e}");
                break;
            }
        };
        let opts = AlgorithmOptions { record_trace: false, ..AlgorithmOptions::default() };
        let allocations: [Result<Allocation, AllocError>; 4] = [
            run_algorithm1(&built.scenario, &opts).map(|rep| rep.allocation),
            Ok(baseline_etep(&built.scenario)),
            baseline_etop(&built.scenario),
            baseline_otep(&built.scenario),
        ];
        for (acc, alloc) in accs.iter_mut().zip(allocations) {
            match alloc {
                Ok(a) => {
                    let (dl, ul, virt, slack, fair) = evaluate_allocation(&built, scn, &a);
                    acc.dl.push(dl);
                    acc.ul.push(ul);
                    acc.virt.push(virt);
                    acc.slack.push(slack);
                    acc.fair &= fair;
                }
                Err(AllocError::InfeasibleFloor { .. }) => {
                    acc.fair = false;
                    if status == "ok" {
                        status = "infeasible: fairness floor unreachable".to_string();
                    }
                }
                Err(e) => {
                    status = format!("error: {e}");
                }
            }
        }
        if first_built.is_none() {
            first_built = Some(built);
        }
    }

    labels
        .iter()
        .zip(accs)
        .map(|(label, acc)| {
            let mut row = base_row(cfg, scn, sweep_value, label);
            row.status = status.clone();
            if let Some(b) = &first_built {
                fill_analytic(&mut row, &b.analysis);
            }
            if !acc.dl.is_empty() {
                let totals: Vec<f64> = acc.dl.iter().zip(&acc.ul).map(|(a, b)| a + b).collect();
                let (m, s) = mean_std(&totals);
                row.nr_dl_bps = Some(mean_std(&acc.dl).0);
                row.nr_ul_bps = Some(mean_std(&acc.ul).0);
                row.nr_total_bps = Some(m);
                row.nr_total_std_bps = Some(s);
                row.wifi_rate_virtual_bps = Some(mean_std(&acc.virt).0);
                row.fairness_slack_bps = Some(mean_std(&acc.slack).0);
                row.fairness_ok = Some(acc.fair);
            }
            row
        })
        .collect()
}

/// Run a full experiment. Deterministic for a fixed config: the sweep cells
/// are evaluated in parallel but assembled in order.
pub fn run_experiment(cfg: &ExperimentConfig, collect_traces: bool) -> ExperimentOutput {
    let points = cfg.sweep_points();
    let cells: Vec<(Vec<ResultRow>, Vec<LabelledTrace>)> = points
        .par_iter()
        .map(|(value, scenario)| match cfg.mode {
            Mode::Analytic => (analytic_rows(cfg, scenario, *value), Vec::new()),
            Mode::Simulate => (simulate_rows(cfg, scenario, *value), Vec::new()),
            Mode::Optimize => optimize_rows(cfg, scenario, *value, collect_traces),
            Mode::CompareBaselines => (compare_rows(cfg, scenario, *value), Vec::new()),
        })
        .collect();
    let mut out = ExperimentOutput::default();
    for (rows, traces) in cells {
        out.rows.extend(rows);
        out.traces.extend(traces);
    }
    out
}
