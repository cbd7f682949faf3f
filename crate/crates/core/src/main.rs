use nru_coex::{coexistence, macsim, NruParams, WifiParams};

fn main() {
    let wifi = WifiParams::default_11n();
    let base = NruParams::default_cat4();
    for n in [5u32, 10, 20] {
        let tuning = coexistence::optimal_initial_window(&wifi, &base, n).unwrap();
        let nru = base.clone().with_window(tuning.window_rounded as f64);
        let state = coexistence::solve_coexistence(&wifi, &nru, n).unwrap();
        let mut rels = Vec::new();
        let mut relw = Vec::new();
        for seed in 0..10u64 {
            let cfg = macsim::SimConfig { horizon_slots: 4_000_000, seed: 100 + seed, gnb_enabled: true };
            let stats = macsim::simulate(&wifi, &nru, n, &cfg).unwrap();
            rels.push(stats.tau_l_hat / state.tau_l - 1.0);
            relw.push(stats.tau_w_hat / state.tau_w - 1.0);
        }
        let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
        let sd = |v: &Vec<f64>| {
            let m = mean(v);
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
        };
        println!(
            "N={n}: W*={:.1} tau_l rel bias = {:+.3}% +- {:.3}%  | tau_w rel bias = {:+.3}% +- {:.3}%",
            tuning.window,
            100.0 * mean(&rels),
            100.0 * sd(&rels) / (rels.len() as f64).sqrt(),
            100.0 * mean(&relw),
            100.0 * sd(&relw) / (relw.len() as f64).sqrt()
        );
    }
}
