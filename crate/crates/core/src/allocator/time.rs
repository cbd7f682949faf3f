//! Per-channel time split for fixed powers.
//!
//! With powers held fixed, the optimality condition equates every active
//! link's time-marginal on a channel to a common value `beta_k / (1+alpha_k)`,
//! which pins a common SNR-like variable `x` for all links and makes each
//! time share proportional to `q |h|^2 / x`, floored below by the per-link
//! power cap for downlink. The channel multiplier is then the bisection root
//! of "shares sum to the occupancy window".

use super::{AllocError, Scenario};
use crate::numerics::{h_func, h_inverse};

/// Result of one time step.
#[derive(Debug, Clone)]
pub struct TimeStep {
    pub t_dl: Vec<Vec<f64>>,
    pub t_ul: Vec<Vec<f64>>,
    /// Per-channel time-budget multiplier.
    pub beta: Vec<f64>,
    /// Channels where every link had zero power and the split fell back to
    /// uniform.
    pub degenerate: Vec<bool>,
}

struct Link {
    q: f64,
    gain: f64,
    floor: f64,
    downlink: bool,
    user: usize,
}

/// Allocate the occupancy window of each channel across its links for the
/// given fixed powers.
pub fn time_allocation(
    q_dl: &[Vec<f64>],
    q_ul: &[Vec<f64>],
    scn: &Scenario,
    alpha: &[f64],
) -> Result<TimeStep, AllocError> {
    let (n_dl, n_ul, n_ch) = (scn.n_dl(), scn.n_ul(), scn.n_channels());
    let mut out = TimeStep {
        t_dl: vec![vec![0.0; n_ch]; n_dl],
        t_ul: vec![vec![0.0; n_ch]; n_ul],
        beta: vec![0.0; n_ch],
        degenerate: vec![false; n_ch],
    };

    for k in 0..n_ch {
        let ch = &scn.channels[k];
        let weight = (1.0 + alpha[k]) * ch.bandwidth * ch.access_factor;

        let mut links = Vec::with_capacity(n_dl + n_ul);
        for d in 0..n_dl {
            let q = q_dl[d][k];
            links.push(Link {
                q,
                gain: scn.dl_gains[d][k],
                floor: scn.mcot * q / scn.p_dk_max,
                downlink: true,
                user: d,
            });
        }
        for u in 0..n_ul {
            links.push(Link { q: q_ul[u][k], gain: scn.ul_gains[u][k], floor: 0.0, downlink: false, user: u });
        }

        let active: f64 = links.iter().map(|l| l.q).sum();
        if active <= 0.0 {
            // Every link powered down: the split is arbitrary for the rates;
            // report a uniform one and flag it.
            let share = scn.mcot / (n_dl + n_ul) as f64;
            for l in &links {
                if l.downlink {
                    out.t_dl[l.user][k] = share;
                } else {
                    out.t_ul[l.user][k] = share;
                }
            }
            out.degenerate[k] = true;
            continue;
        }

        let floors: f64 = links.iter().map(|l| l.floor).sum();
        let shares_at = |x: f64| -> Vec<f64> {
            links
                .iter()
                .map(|l| {
                    if l.q <= 0.0 {
                        0.0
                    } else {
                        (scn.mcot * l.q * l.gain / (ch.noise * x)).max(l.floor)
                    }
                })
                .collect()
        };
        let total_at = |x: f64| -> f64 { shares_at(x).iter().sum() };

        let (beta_k, shares) = if floors >= scn.mcot * (1.0 - 1e-12) {
            // The caps consume the whole window; shares sit on their floors.
            (f64::INFINITY, links.iter().map(|l| l.floor).collect::<Vec<_>>())
        } else {
            // Bracket beta by doubling/halving around the h(1) scale, then
            // bisect on the monotone share sum.
            let mut beta_lo = weight * h_func(1.0);
            let mut beta_hi = beta_lo;
            let x_of = |beta: f64| h_inverse(beta / weight);
            let mut guard = 0;
            while total_at(x_of(beta_lo)) < scn.mcot {
                beta_lo *= 0.5;
                guard += 1;
                if guard > 200 {
                    return Err(AllocError::Bracket {
                        context: "time_allocation",
                        detail: format!("lower bracket not found on channel {k}"),
                    });
                }
            }
            guard = 0;
            while total_at(x_of(beta_hi)) > scn.mcot {
                beta_hi *= 2.0;
                guard += 1;
                if guard > 200 {
                    return Err(AllocError::Bracket {
                        context: "time_allocation",
                        detail: format!("upper bracket not found on channel {k}"),
                    });
                }
            }
            let mut lo = beta_lo;
            let mut hi = beta_hi;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if total_at(x_of(mid)) > scn.mcot {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if (hi - lo) <= 1e-15 * hi {
                    break;
                }
            }
            let beta = 0.5 * (lo + hi);
            let x = x_of(beta);
            let mut shares = shares_at(x);
            // Exact budget: rescale the free shares onto the remainder.
            let floored: f64 = links
                .iter()
                .zip(&shares)
                .filter(|(l, s)| **s <= l.floor * (1.0 + 1e-12) && l.floor > 0.0)
                .map(|(l, _)| l.floor)
                .sum();
            let free: f64 = shares
                .iter()
                .zip(&links)
                .filter(|(s, l)| **s > l.floor * (1.0 + 1e-12) || l.floor == 0.0)
                .map(|(s, _)| *s)
                .sum();
            if free > 0.0 {
                let scale = (scn.mcot - floored) / free;
                for (s, l) in shares.iter_mut().zip(&links) {
                    if *s > l.floor * (1.0 + 1e-12) || l.floor == 0.0 {
                        *s *= scale;
                    }
                }
            }
            (beta, shares)
        };

        out.beta[k] = beta_k;
        for (l, s) in links.iter().zip(shares) {
            if l.downlink {
                out.t_dl[l.user][k] = s;
            } else {
                out.t_ul[l.user][k] = s;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::test_scenario;
    use super::super::{link_rate, rate_dt};
    use super::*;

    #[test]
    fn symmetric_links_share_equally() {
        let mut scn = test_scenario(1, 2, 2, 9);
        let g = 1e-9;
        scn.dl_gains = vec![vec![g]; 2];
        scn.ul_gains = vec![vec![g]; 2];
        let q = 0.05;
        let q_dl = vec![vec![q]; 2];
        let q_ul = vec![vec![q]; 2];
        let ts = time_allocation(&q_dl, &q_ul, &scn, &[0.0]).unwrap();
        let expect = scn.mcot / 4.0;
        for t in [ts.t_dl[0][0], ts.t_dl[1][0], ts.t_ul[0][0], ts.t_ul[1][0]] {
            assert!((t - expect).abs() < 1e-12 * expect, "t={t} expect={expect}");
        }
        let used: f64 = ts.t_dl.iter().chain(ts.t_ul.iter()).map(|r| r[0]).sum();
        assert!((used - scn.mcot).abs() < 1e-10 * scn.mcot);
    }

    #[test]
    fn marginals_equal_across_active_links() {
        let scn = test_scenario(2, 3, 2, 10);
        let q_dl: Vec<Vec<f64>> = (0..3).map(|d| (0..2).map(|k| 0.01 * (d + k + 1) as f64).collect()).collect();
        let q_ul: Vec<Vec<f64>> = (0..2).map(|u| (0..2).map(|k| 0.02 * (u + 1) as f64 + 0.005 * k as f64).collect()).collect();
        let alpha = vec![0.3, 0.0];
        let ts = time_allocation(&q_dl, &q_ul, &scn, &alpha).unwrap();
        for k in 0..2 {
            let ch = &scn.channels[k];
            let mut marginals = Vec::new();
            for d in 0..3 {
                let t = ts.t_dl[d][k];
                let floor = scn.mcot * q_dl[d][k] / scn.p_dk_max;
                if t > floor * (1.0 + 1e-9) {
                    marginals.push(rate_dt(t, q_dl[d][k], scn.dl_gains[d][k], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot));
                }
            }
            for u in 0..2 {
                let t = ts.t_ul[u][k];
                if t > 0.0 {
                    marginals.push(rate_dt(t, q_ul[u][k], scn.ul_gains[u][k], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot));
                }
            }
            let first = marginals[0];
            for m in &marginals {
                assert!((m / first - 1.0).abs() < 1e-6, "k={k}: {m} vs {first}");
            }
            // And the common marginal is beta/(1+alpha).
            assert!((first * (1.0 + alpha[k]) / ts.beta[k] - 1.0).abs() < 1e-6);
            let used: f64 = (0..3).map(|d| ts.t_dl[d][k]).sum::<f64>() + (0..2).map(|u| ts.t_ul[u][k]).sum::<f64>();
            assert!(((used - scn.mcot) / scn.mcot).abs() < 1e-8);
        }
    }

    #[test]
    fn two_link_split_matches_grid_search() {
        let scn = test_scenario(1, 1, 1, 11);
        let q_dl = vec![vec![0.08]];
        let q_ul = vec![vec![0.12]];
        let ts = time_allocation(&q_dl, &q_ul, &scn, &[0.0]).unwrap();
        let ch = &scn.channels[0];
        let obj = |t_d: f64| {
            link_rate(t_d, 0.08, scn.dl_gains[0][0], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot)
                + link_rate(scn.mcot - t_d, 0.12, scn.ul_gains[0][0], ch.noise, ch.bandwidth, ch.access_factor, scn.mcot)
        };
        let floor = scn.mcot * 0.08 / scn.p_dk_max;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=100_000 {
            let t_d = floor + (scn.mcot - floor) * i as f64 / 100_000.0;
            best = best.max(obj(t_d));
        }
        let got = obj(ts.t_dl[0][0]);
        assert!(got >= best * (1.0 - 1e-3), "{got} vs grid {best}");
    }

    #[test]
    fn zero_power_channel_degenerates_to_uniform() {
        let scn = test_scenario(1, 2, 1, 12);
        let q_dl = vec![vec![0.0]; 2];
        let q_ul = vec![vec![0.0]];
        let ts = time_allocation(&q_dl, &q_ul, &scn, &[0.0]).unwrap();
        assert!(ts.degenerate[0]);
        assert!((ts.t_dl[0][0] - scn.mcot / 3.0).abs() < 1e-15);
    }

    #[test]
    fn power_cap_floor_is_respected() {
        let mut scn = test_scenario(1, 2, 1, 13);
        // One strong, one weak downlink; large q forces the weak link to
        // its cap floor.
        scn.dl_gains = vec![vec![1e-7], vec![1e-12]];
        scn.ul_gains = vec![vec![1e-9]];
        let q_dl = vec![vec![0.09], vec![0.09]];
        let q_ul = vec![vec![0.02]];
        let ts = time_allocation(&q_dl, &q_ul, &scn, &[0.0]).unwrap();
        for d in 0..2 {
            let floor = scn.mcot * q_dl[d][0] / scn.p_dk_max;
            assert!(ts.t_dl[d][0] >= floor * (1.0 - 1e-12), "d={d}");
        }
    }
}
