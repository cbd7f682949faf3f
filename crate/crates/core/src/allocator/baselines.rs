//! Reference allocators: equal-time/equal-power and the two one-sided
//! optimisations, used both as comparison baselines and as warm starts.

use super::{downlink_power, time_allocation, uplink_power, AllocError, Allocation, Scenario};

/// Equal time split and equal power: every link gets `mcot / (D + U)`;
/// downlink runs at half its per-link instantaneous cap (scaled down if the
/// total budget clips), uplink spends the average-power budget uniformly.
pub fn baseline_etep(scn: &Scenario) -> Allocation {
    let (n_dl, n_ul, n_ch) = (scn.n_dl(), scn.n_ul(), scn.n_channels());
    let links = (n_dl + n_ul) as f64;
    let share = scn.mcot / links;
    let mut alloc = Allocation::zeros(n_dl, n_ul, n_ch);

    for k in 0..n_ch {
        for d in 0..n_dl {
            alloc.t_dl[d][k] = share;
            alloc.q_dl[d][k] = share / scn.mcot * scn.p_dk_max / 2.0;
        }
        for u in 0..n_ul {
            alloc.t_ul[u][k] = share;
            alloc.q_ul[u][k] = scn.p_avg / n_ch as f64;
        }
    }
    // Clip the total downlink budget if half-cap powers exceed it.
    let total: f64 = alloc.q_dl.iter().flatten().sum();
    if total > scn.p_gnb_max {
        let scale = scn.p_gnb_max / total;
        for row in alloc.q_dl.iter_mut() {
            for q in row.iter_mut() {
                *q *= scale;
            }
        }
    }
    alloc
}

/// Equal time split with water-filled powers.
pub fn baseline_etop(scn: &Scenario) -> Result<Allocation, AllocError> {
    let mut alloc = baseline_etep(scn);
    let alpha = vec![0.0; scn.n_channels()];
    let ul = uplink_power(&alloc.t_ul, scn, &alpha)?;
    let dl = downlink_power(&alloc.t_dl, scn, &alpha)?;
    alloc.q_ul = ul.q_ul;
    alloc.q_dl = dl.q_dl;
    Ok(alloc)
}

/// Equal powers with an optimised time split: the equal-power averaged
/// powers are held fixed and the window is re-divided for them.
pub fn baseline_otep(scn: &Scenario) -> Result<Allocation, AllocError> {
    let etep = baseline_etep(scn);
    let alpha = vec![0.0; scn.n_channels()];
    let ts = time_allocation(&etep.q_dl, &etep.q_ul, scn, &alpha)?;
    Ok(Allocation { t_dl: ts.t_dl, t_ul: ts.t_ul, q_dl: etep.q_dl, q_ul: etep.q_ul })
}

#[cfg(test)]
mod tests {
    use super::super::tests::test_scenario;
    use super::*;

    #[test]
    fn etep_respects_all_constraints() {
        let scn = test_scenario(2, 3, 3, 31);
        let alloc = baseline_etep(&scn);
        assert!(alloc.max_violation(&scn) < 1e-12);
        alloc.validate(&scn).unwrap();
        // Uplink average is exactly the budget.
        let avg: f64 = alloc.q_ul.iter().flatten().sum::<f64>() / 3.0;
        assert!(((avg - scn.p_avg) / scn.p_avg).abs() < 1e-12);
    }

    #[test]
    fn one_sided_optimisers_beat_etep() {
        for seed in [32u64, 33, 34] {
            let scn = test_scenario(2, 2, 2, seed);
            let etep = baseline_etep(&scn);
            let etop = baseline_etop(&scn).unwrap();
            let otep = baseline_otep(&scn).unwrap();
            let base = etep.objective(&scn);
            assert!(etop.objective(&scn) >= base - 1e-9, "seed {seed}");
            assert!(otep.objective(&scn) >= base - 1e-9, "seed {seed}");
            assert!(etop.max_violation(&scn) < 1e-8);
            assert!(otep.max_violation(&scn) < 1e-8);
        }
    }

    #[test]
    fn symmetric_scenario_collapses_the_gaps() {
        // Equal gains everywhere and budgets tied so the equal-power point
        // already sits at every water level: all baselines coincide.
        let mut scn = test_scenario(1, 2, 2, 35);
        scn.dl_gains = vec![vec![1e-9]; 2];
        scn.ul_gains = vec![vec![1e-9]; 2];
        let (d, u, k) = (2.0, 2.0, 1.0);
        scn.p_avg = k * scn.p_dk_max / (2.0 * (d + u));
        scn.p_gnb_max = d * k * scn.p_dk_max / (2.0 * (d + u));
        let etep = baseline_etep(&scn);
        let etop = baseline_etop(&scn).unwrap();
        let otep = baseline_otep(&scn).unwrap();
        let o = etep.objective(&scn);
        assert!((etop.objective(&scn) / o - 1.0).abs() < 1e-9, "etop {}", etop.objective(&scn) / o);
        assert!((otep.objective(&scn) / o - 1.0).abs() < 1e-9, "otep {}", otep.objective(&scn) / o);
    }
}
