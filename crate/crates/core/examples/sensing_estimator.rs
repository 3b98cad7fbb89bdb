//! Posterior, per-symbol Bayes estimator and sensing cost for the shipped
//! model, followed by a short simulated block.

use isac::sensing::{apply_estimator, per_input_cost, posterior, sequence_distortion};
use isac::simulator::{channel_sample, Hypothesis};
use isac::ProblemInstance;

pub fn run() -> isac::Result<()> {
    let instance = ProblemInstance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1.json"))?;
    let distortion = instance.distortion()?;
    let post = posterior(&instance.channel, &instance.p_s);
    let (nx, ns, _, nz) = instance.channel.dims();
    for x in 0..nx {
        for z in 0..nz {
            let q: Vec<String> = (0..ns).map(|s| format!("{:.3}", post.get(s, x, z))).collect();
            println!("x={x} z={z}  P(s|x,z) = [{}]", q.join(", "));
        }
    }

    let cost = per_input_cost(&instance.channel, &instance.p_s, distortion);
    println!("c(x) = {:?}, min = {}", cost.cost, cost.min_cost());
    println!("E[c] under uniform input = {}", cost.expected_distortion(&[0.5, 0.5]));

    let x: Vec<usize> = (0..2000).map(|t| t % 2).collect();
    let out = channel_sample(&instance, &x, Hypothesis::Null, 2024)?;
    let s_hat = apply_estimator(&cost.estimator, &x, &out.z)?;
    let d = sequence_distortion(distortion, &s_hat, &out.s)?;
    // half the symbols see no echo information, so about 0.25
    println!("empirical distortion over {} symbols: {d:.4}", x.len());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
