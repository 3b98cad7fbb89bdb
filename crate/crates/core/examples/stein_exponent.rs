//! Neyman-Pearson detection with a perfect state echo: the exact type-II
//! exponent approaches D(Ber(0.1) || Ber(0.4)) from below.

use isac::model::{ChannelModel, Pmf};
use isac::simulator::{run_ht_experiment, HtParams, SimulationMode};
use isac::ProblemInstance;

pub fn run() -> isac::Result<()> {
    let channel = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| f64::from(y == x && z == s));
    let instance = ProblemInstance::new(channel, Pmf::bernoulli(0.1)).with_alternative(Pmf::bernoulli(0.4));

    for n in [250, 500, 1000, 2000] {
        let r = run_ht_experiment(&instance, &HtParams::new(vec![0.5, 0.5], n, 0.1, SimulationMode::ExactDp, None))?;
        println!(
            "n = {n:>4}: alpha = {:.4}, beta = {:.3e}, exponent = {:.5} (limit {:.5})",
            r.alpha_hat.unwrap_or(f64::NAN),
            r.beta.unwrap_or(f64::NAN),
            r.exponent_hat.unwrap_or(f64::NAN),
            r.stein_exponent.unwrap_or(f64::NAN),
        );
    }

    let mut mc = HtParams::new(vec![0.5, 0.5], 20, 0.1, SimulationMode::MonteCarlo, Some(3));
    mc.trials = 20_000;
    let exact = run_ht_experiment(&instance, &HtParams { mode: SimulationMode::ExactDp, trials: 0, ..mc.clone() })?;
    let r = run_ht_experiment(&instance, &mc)?;
    println!(
        "n = 20: exact beta {:.5}, monte carlo {:.5} [{:.5}, {:.5}]",
        exact.beta.unwrap_or(f64::NAN),
        r.beta.unwrap_or(f64::NAN),
        r.beta_lo.unwrap_or(f64::NAN),
        r.beta_hi.unwrap_or(f64::NAN),
    );
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
