mod common;

use common::comm_prob;
use isac::model::{ChannelModel, DistortionSpec, Pmf};
use isac::simulator::{generate_codebook, ml_decode, run_ht_experiment, run_rd_experiment, CodebookMode, HtParams, RdParams, SimulationMode};
use isac::{Kernel, ProblemInstance};

/// Binary input and output with a state-dependent crossover and a noisy echo.
fn small_instance() -> ProblemInstance {
    let flip = [[0.05, 0.2], [0.15, 0.1]];
    let echo = [[0.8, 0.3], [0.6, 0.1]];
    let ch = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| {
        let py = if y == x { 1.0 - flip[x][s] } else { flip[x][s] };
        let pz = if z == 0 { echo[x][s] } else { 1.0 - echo[x][s] };
        py * pz
    });
    ProblemInstance::new(ch, Pmf::bernoulli(0.3))
        .with_alternative(Pmf::bernoulli(0.7))
        .with_distortion(DistortionSpec::hamming(2))
}

fn within_sigmas(estimate: f64, truth: f64, trials: usize, k: f64) -> bool {
    let sd = (truth * (1.0 - truth) / trials as f64).sqrt();
    (estimate - truth).abs() <= k * sd + 1.0 / trials as f64
}

#[test]
fn exact_ml_error_matches_monte_carlo() {
    let inst = small_instance();
    let w = Kernel::new(2, 2, (0..4).map(|i| comm_prob(&inst.channel, &inst.p_s, i / 2, i % 2)).collect()).unwrap();
    for (n, rate, seed) in [(6, 0.5, 3u64), (8, 0.375, 4)] {
        let cb = generate_codebook(&[0.5, 0.5], n, rate, seed).unwrap();
        // every output sequence, every message
        let mut err = 0.0;
        for m in 0..cb.num_messages {
            for ybits in 0..(1usize << n) {
                let y: Vec<usize> = (0..n).map(|t| (ybits >> t) & 1).collect();
                let p: f64 = cb.word(m).iter().zip(&y).map(|(&x, &yy)| w.get(x, yy)).product();
                if ml_decode(&y, &cb, &w).unwrap().message != m {
                    err += p;
                }
            }
        }
        err /= cb.num_messages as f64;
        let trials = 20_000;
        let params = RdParams {
            p_x: Some(vec![0.5, 0.5]),
            codebook: CodebookMode::Shared,
            ..RdParams::new(rate, 1.0, n, trials, seed)
        };
        let mc = run_rd_experiment(&inst, &params).unwrap();
        let est = mc.p_error_hat.unwrap();
        assert!(within_sigmas(est, err, trials, 4.0), "n={n}: mc {est} vs exact {err}");
    }
}

#[test]
fn exact_ht_law_matches_monte_carlo() {
    let inst = small_instance();
    for (n, alpha) in [(10, 0.1), (25, 0.2)] {
        let exact = run_ht_experiment(&inst, &HtParams::new(vec![0.4, 0.6], n, alpha, SimulationMode::ExactDp, None)).unwrap();
        let trials = 40_000;
        let mut mc = HtParams::new(vec![0.4, 0.6], n, alpha, SimulationMode::MonteCarlo, Some(9));
        mc.trials = trials;
        let mc = run_ht_experiment(&inst, &mc).unwrap();
        assert_eq!(exact.threshold, mc.threshold);
        assert!(within_sigmas(mc.alpha_hat.unwrap(), exact.alpha_hat.unwrap(), trials, 4.0));
        assert!(within_sigmas(mc.beta.unwrap(), exact.beta.unwrap(), trials, 4.0));
        assert!(exact.alpha_hat.unwrap() <= alpha);
    }
}

#[test]
fn exact_exponent_approaches_expected_divergence() {
    let inst = small_instance();
    let mut last = 0.0;
    for n in [40, 160, 320] {
        let r = run_ht_experiment(&inst, &HtParams::new(vec![0.4, 0.6], n, 0.1, SimulationMode::ExactDp, None)).unwrap();
        let (e, limit) = (r.exponent_hat.unwrap(), r.stein_exponent.unwrap());
        assert!(e > last && e <= limit + 1e-9, "n={n}: {e} vs {limit}");
        last = e;
    }
}

#[test]
fn identical_priors_give_zero_exponent() {
    let mut inst = small_instance();
    inst.q_s = Some(inst.p_s.clone());
    let r = run_ht_experiment(&inst, &HtParams::new(vec![0.5, 0.5], 200, 0.05, SimulationMode::ExactDp, None)).unwrap();
    assert!(r.exponent_hat.unwrap().abs() < 1e-12);
    assert!((r.beta.unwrap() - (1.0 - r.alpha_hat.unwrap())).abs() < 1e-12);
}

#[test]
fn excess_distortion_concentrates_above_mean() {
    let inst = small_instance();
    let sc = isac::sensing::per_input_cost(&inst.channel, &inst.p_s, inst.distortion().unwrap());
    let mean = sc.expected_distortion(&[0.5, 0.5]);
    let params = |n| RdParams { p_x: Some(vec![0.5, 0.5]), ..RdParams::new(0.01, mean + 0.1, n, 2000, 1) };
    let short = run_rd_experiment(&inst, &params(20)).unwrap().excess_distortion_hat.unwrap();
    let long = run_rd_experiment(&inst, &params(200)).unwrap().excess_distortion_hat.unwrap();
    assert!(long < short && long < 0.01, "{short} -> {long}");
}
