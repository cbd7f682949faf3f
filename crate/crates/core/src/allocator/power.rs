//! Water-filling power steps for fixed time shares.
//!
//! Uplink: one multiplier ties the per-UE average power across all channels;
//! the water level is found by bisection over the clamped closed form and
//! then polished with the exact active-set expression so the constraint is
//! tight to machine precision. Downlink: the same pattern against the total
//! gNB budget, with per-link caps `q <= t/mcot * p_max` entering as clamps
//! whose multipliers come out of complementary slackness.

use super::{rate_dq, AllocError, Scenario};
use std::f64::consts::LN_2;

/// Result of the uplink power step.
#[derive(Debug, Clone)]
pub struct UlPowerStep {
    pub q_ul: Vec<Vec<f64>>,
    /// Average-power multiplier; meaningful unless `degenerate`.
    pub theta: f64,
    /// True when every uplink share was zero (no water to pour).
    pub degenerate: bool,
}

/// Result of the downlink power step.
#[derive(Debug, Clone)]
pub struct DlPowerStep {
    pub q_dl: Vec<Vec<f64>>,
    /// Total-budget multiplier (zero when the budget is slack).
    pub gamma: f64,
    /// Per-link cap multipliers `[dl_user][channel]`.
    pub xi: Vec<Vec<f64>>,
}

/// Optimal uplink powers for fixed time shares.
///
/// The average-power constraint is provably tight whenever any uplink time
/// is positive, so the water level always exists.
pub fn uplink_power(t_ul: &[Vec<f64>], scn: &Scenario, alpha: &[f64]) -> Result<UlPowerStep, AllocError> {
    let (n_ul, n_ch) = (scn.n_ul(), scn.n_channels());
    let u_count = n_ul as f64;
    let mut q = vec![vec![0.0; n_ch]; n_ul];

    let total_t: f64 = t_ul.iter().flatten().sum();
    if total_t <= 0.0 {
        return Ok(UlPowerStep { q_ul: q, theta: 0.0, degenerate: true });
    }

    // Per-channel level coefficient: q = t (lvl_k / theta - noise_term).
    let lvl = |k: usize| (1.0 + alpha[k]) * scn.channels[k].bandwidth * scn.channels[k].access_factor * u_count / LN_2;
    let noise_term = |u: usize, k: usize| scn.channels[k].noise / (scn.mcot * scn.ul_gains[u][k]);

    let budget = u_count * scn.p_avg;
    let poured = |theta: f64| -> f64 {
        let mut acc = 0.0;
        for u in 0..n_ul {
            for k in 0..n_ch {
                let t = t_ul[u][k];
                if t > 0.0 {
                    acc += t * (lvl(k) / theta - noise_term(u, k)).max(0.0);
                }
            }
        }
        acc
    };

    // theta above every link's shut-off level pours nothing.
    let mut theta_hi = 0.0f64;
    for u in 0..n_ul {
        for k in 0..n_ch {
            if t_ul[u][k] > 0.0 {
                theta_hi = theta_hi.max(lvl(k) / noise_term(u, k));
            }
        }
    }
    theta_hi *= 1.0 + 1e-9;
    let mut theta_lo = theta_hi * 1e-18;
    if poured(theta_lo) < budget {
        theta_lo = theta_hi * 1e-30;
    }
    if poured(theta_lo) < budget {
        return Err(AllocError::Bracket {
            context: "uplink_power",
            detail: "water level bracket failed low".into(),
        });
    }
    let (mut lo, mut hi) = (theta_lo, theta_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poured(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut theta = 0.5 * (lo + hi);

    // Exact multiplier over the bisection's active set.
    let mut numer = 0.0;
    let mut denom = budget;
    for u in 0..n_ul {
        for k in 0..n_ch {
            let t = t_ul[u][k];
            if t > 0.0 && lvl(k) / theta > noise_term(u, k) {
                numer += t * lvl(k);
                denom += t * noise_term(u, k);
            }
        }
    }
    if numer > 0.0 {
        let polished = numer / denom;
        // Accept the polish only if it keeps the same active set.
        let consistent = (0..n_ul).all(|u| {
            (0..n_ch).all(|k| {
                let t = t_ul[u][k];
                if t <= 0.0 {
                    return true;
                }
                let before = lvl(k) / theta > noise_term(u, k);
                let after = lvl(k) / polished > noise_term(u, k);
                before == after
            })
        });
        if consistent {
            theta = polished;
        }
    }

    for u in 0..n_ul {
        for k in 0..n_ch {
            let t = t_ul[u][k];
            if t > 0.0 {
                q[u][k] = t * (lvl(k) / theta - noise_term(u, k)).max(0.0);
            }
        }
    }
    Ok(UlPowerStep { q_ul: q, theta, degenerate: false })
}

/// Optimal downlink powers for fixed time shares.
pub fn downlink_power(t_dl: &[Vec<f64>], scn: &Scenario, alpha: &[f64]) -> Result<DlPowerStep, AllocError> {
    let (n_dl, n_ch) = (scn.n_dl(), scn.n_channels());
    let mut q = vec![vec![0.0; n_ch]; n_dl];
    let mut xi = vec![vec![0.0; n_ch]; n_dl];

    let lvl = |k: usize| (1.0 + alpha[k]) * scn.channels[k].bandwidth * scn.channels[k].access_factor / LN_2;
    let noise_term = |d: usize, k: usize| scn.channels[k].noise / (scn.mcot * scn.dl_gains[d][k]);
    let cap = |d: usize, k: usize| t_dl[d][k] / scn.mcot * scn.p_dk_max;

    let total_cap: f64 = (0..n_dl).map(|d| (0..n_ch).map(|k| cap(d, k)).sum::<f64>()).sum();
    let marginal_at_cap = |d: usize, k: usize| {
        // dR/dq at the per-link cap; t cancels, leaving a finite value.
        (1.0 + alpha[k]) * rate_dq(
            t_dl[d][k],
            cap(d, k),
            scn.dl_gains[d][k],
            scn.channels[k].noise,
            scn.channels[k].bandwidth,
            scn.channels[k].access_factor,
            scn.mcot,
        )
    };

    if total_cap <= scn.p_gnb_max * (1.0 + 1e-12) {
        // Slack total budget: every powered link rides its per-link cap.
        let gamma = 0.0;
        for d in 0..n_dl {
            for k in 0..n_ch {
                if t_dl[d][k] > 0.0 {
                    q[d][k] = cap(d, k);
                    xi[d][k] = (marginal_at_cap(d, k) - gamma).max(0.0);
                }
            }
        }
        return Ok(DlPowerStep { q_dl: q, gamma, xi });
    }

    let clamped = |gamma: f64, d: usize, k: usize| -> f64 {
        let t = t_dl[d][k];
        if t <= 0.0 {
            return 0.0;
        }
        (t * (lvl(k) / gamma - noise_term(d, k))).clamp(0.0, cap(d, k))
    };
    let poured = |gamma: f64| -> f64 {
        (0..n_dl).map(|d| (0..n_ch).map(|k| clamped(gamma, d, k)).sum::<f64>()).sum()
    };

    let mut gamma_hi = 0.0f64;
    for d in 0..n_dl {
        for k in 0..n_ch {
            if t_dl[d][k] > 0.0 {
                gamma_hi = gamma_hi.max(lvl(k) / noise_term(d, k));
            }
        }
    }
    gamma_hi *= 1.0 + 1e-9;
    let gamma_lo = gamma_hi * 1e-18; // pours every cap, exceeding the budget
    if poured(gamma_lo) < scn.p_gnb_max {
        return Err(AllocError::Bracket {
            context: "downlink_power",
            detail: "budget bracket failed low".into(),
        });
    }
    let (mut lo, mut hi) = (gamma_lo, gamma_hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if poured(mid) > scn.p_gnb_max {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let mut gamma = 0.5 * (lo + hi);

    // Polish over the interior set (neither zero nor capped).
    let mut numer = 0.0;
    let mut denom = scn.p_gnb_max;
    for d in 0..n_dl {
        for k in 0..n_ch {
            let t = t_dl[d][k];
            if t <= 0.0 {
                continue;
            }
            let v = clamped(gamma, d, k);
            let c = cap(d, k);
            if v >= c * (1.0 - 1e-9) {
                denom -= c;
            } else if v > 0.0 {
                numer += t * lvl(k);
                denom += t * noise_term(d, k);
            }
        }
    }
    if numer > 0.0 && denom > 0.0 {
        let polished = numer / denom;
        let consistent = (0..n_dl).all(|d| {
            (0..n_ch).all(|k| {
                let t = t_dl[d][k];
                if t <= 0.0 {
                    return true;
                }
                let before = clamped(gamma, d, k);
                let after = clamped(polished, d, k);
                let c = cap(d, k);
                (before >= c * (1.0 - 1e-9)) == (after >= c * (1.0 - 1e-9))
                    && (before > 0.0) == (after > 0.0)
            })
        });
        if consistent {
            gamma = polished;
        }
    }

    for d in 0..n_dl {
        for k in 0..n_ch {
            q[d][k] = clamped(gamma, d, k);
            let c = cap(d, k);
            if t_dl[d][k] > 0.0 && q[d][k] >= c * (1.0 - 1e-9) {
                q[d][k] = c;
                xi[d][k] = (marginal_at_cap(d, k) - gamma).max(0.0);
            }
        }
    }
    Ok(DlPowerStep { q_dl: q, gamma, xi })
}

#[cfg(test)]
mod tests {
    use super::super::tests::test_scenario;
    use super::*;

    fn uniform_t(n: usize, k: usize, mcot: f64, links: usize) -> Vec<Vec<f64>> {
        vec![vec![mcot / links as f64; k]; n]
    }

    #[test]
    fn uplink_average_constraint_is_tight() {
        let scn = test_scenario(2, 2, 3, 21);
        let t = uniform_t(3, 2, scn.mcot, 5);
        let step = uplink_power(&t, &scn, &[0.0, 0.0]).unwrap();
        let avg: f64 = step.q_ul.iter().flatten().sum::<f64>() / 3.0;
        assert!(((avg - scn.p_avg) / scn.p_avg).abs() < 1e-12, "avg={avg}");
        assert!(step.theta > 0.0);
        // Multiplier-slack product is zero by tightness.
        assert!((step.theta * (scn.p_avg - avg)).abs() < 1e-9 * step.theta * scn.p_avg);
    }

    #[test]
    fn uplink_symmetric_users_get_equal_power() {
        let mut scn = test_scenario(1, 1, 2, 22);
        scn.ul_gains = vec![vec![1e-9]; 2];
        let t = uniform_t(2, 1, scn.mcot, 3);
        let step = uplink_power(&t, &scn, &[0.0]).unwrap();
        assert!((step.q_ul[0][0] - step.q_ul[1][0]).abs() < 1e-12);
    }

    #[test]
    fn uplink_single_user_closed_form() {
        let scn = test_scenario(1, 1, 1, 23);
        let t = vec![vec![4e-3]];
        let step = uplink_power(&t, &scn, &[0.0]).unwrap();
        // One user, one channel: q = U * P_avg exactly (U = 1).
        assert!(((step.q_ul[0][0] - scn.p_avg) / scn.p_avg).abs() < 1e-12);
        // And theta matches the closed form on the single active link.
        let lvl = scn.channels[0].bandwidth * scn.channels[0].access_factor / LN_2;
        let noise_term = scn.channels[0].noise / (scn.mcot * scn.ul_gains[0][0]);
        let theta_expect = 4e-3 * lvl / (scn.p_avg + 4e-3 * noise_term);
        assert!((step.theta / theta_expect - 1.0).abs() < 1e-10);
    }

    #[test]
    fn uplink_weak_user_is_shut_off() {
        let mut scn = test_scenario(1, 1, 2, 24);
        scn.ul_gains = vec![vec![1e-7], vec![1e-16]];
        let t = uniform_t(2, 1, scn.mcot, 3);
        let step = uplink_power(&t, &scn, &[0.0]).unwrap();
        assert_eq!(step.q_ul[1][0], 0.0);
        // Bisection result agrees with active-set closed form: constraint
        // still tight over the strong user alone.
        let avg: f64 = step.q_ul.iter().flatten().sum::<f64>() / 2.0;
        assert!(((avg - scn.p_avg) / scn.p_avg).abs() < 1e-12);
    }

    #[test]
    fn uplink_degenerate_when_no_time() {
        let scn = test_scenario(1, 1, 2, 25);
        let t = vec![vec![0.0]; 2];
        let step = uplink_power(&t, &scn, &[0.0]).unwrap();
        assert!(step.degenerate);
        assert!(step.q_ul.iter().flatten().all(|&q| q == 0.0));
    }

    #[test]
    fn downlink_huge_budget_rides_caps() {
        let mut scn = test_scenario(1, 2, 1, 26);
        scn.p_gnb_max = 1e6;
        let t = uniform_t(2, 1, scn.mcot, 3);
        let step = downlink_power(&t, &scn, &[0.0]).unwrap();
        assert_eq!(step.gamma, 0.0);
        for d in 0..2 {
            let cap = t[d][0] / scn.mcot * scn.p_dk_max;
            assert!((step.q_dl[d][0] - cap).abs() < 1e-15);
            assert!(step.xi[d][0] > 0.0);
        }
    }

    #[test]
    fn downlink_binding_budget_symmetric_split() {
        let mut scn = test_scenario(1, 2, 1, 27);
        scn.dl_gains = vec![vec![1e-9]; 2];
        // Make the per-link caps huge so only the total budget binds.
        scn.p_dk_max = 1e3;
        scn.p_gnb_max = 0.5;
        let t = uniform_t(2, 1, scn.mcot, 3);
        let step = downlink_power(&t, &scn, &[0.0]).unwrap();
        let total: f64 = step.q_dl.iter().flatten().sum();
        assert!(((total - scn.p_gnb_max) / scn.p_gnb_max).abs() < 1e-10);
        assert!((step.q_dl[0][0] - step.q_dl[1][0]).abs() < 1e-12);
        assert!(step.gamma > 0.0);
        // Complementary slackness at the solution.
        assert!((step.gamma * (scn.p_gnb_max - total)).abs() < 1e-9 * step.gamma * scn.p_gnb_max);
        for d in 0..2 {
            let cap = t[d][0] / scn.mcot * scn.p_dk_max;
            assert!((step.xi[d][0] * (cap - step.q_dl[d][0])).abs() < 1e-9);
        }
    }

    #[test]
    fn downlink_two_user_grid_search() {
        let mut scn = test_scenario(1, 2, 1, 28);
        scn.dl_gains = vec![vec![2e-9], vec![4e-10]];
        scn.p_gnb_max = 0.25;
        scn.p_dk_max = 0.2;
        let t = vec![vec![3e-3], vec![2e-3]];
        let step = downlink_power(&t, &scn, &[0.0]).unwrap();
        let ch = &scn.channels[0];
        let obj = |q0: f64, q1: f64| {
            super::super::link_rate(t[0][0], q0, scn.dl_gains[0][0], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot)
                + super::super::link_rate(t[1][0], q1, scn.dl_gains[1][0], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot)
        };
        let caps = [t[0][0] / scn.mcot * scn.p_dk_max, t[1][0] / scn.mcot * scn.p_dk_max];
        let mut best = f64::NEG_INFINITY;
        let n = 2000;
        for i in 0..=n {
            let q0 = caps[0] * i as f64 / n as f64;
            let q1 = (scn.p_gnb_max - q0).min(caps[1]);
            if q1 >= 0.0 {
                best = best.max(obj(q0, q1));
            }
        }
        let got = obj(step.q_dl[0][0], step.q_dl[1][0]);
        assert!(got >= best * (1.0 - 1e-3), "{got} vs {best}");
        let total: f64 = step.q_dl.iter().flatten().sum();
        assert!(total <= scn.p_gnb_max * (1.0 + 1e-10));
    }
}
