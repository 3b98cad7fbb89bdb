//! Entropy, mutual information and divergence on small channels.

use isac::infomeasures::{entropy, expected_kl, kl_divergence, mutual_information, row_divergences};
use isac::model::{mix_over_state, split_marginals};
use isac::{Kernel, ProblemInstance};

pub fn run() -> isac::Result<()> {
    println!("H(Ber(0.1))          = {:.5}", entropy(&[0.9, 0.1]));
    println!("I(uniform; BSC(0.1)) = {:.5}", mutual_information(&[0.5, 0.5], &Kernel::bsc(0.1)));
    println!("D(Ber(0.1)||Ber(0.4)) = {:.5}", kl_divergence(&[0.9, 0.1], &[0.6, 0.4]));

    // concavity of I in the input law
    let w = Kernel::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.1, 0.8]])?;
    let (p, q) = ([0.9, 0.1], [0.2, 0.8]);
    let mid = [0.55, 0.45];
    println!(
        "I(mid) = {:.5} >= avg = {:.5}",
        mutual_information(&mid, &w),
        0.5 * (mutual_information(&p, &w) + mutual_information(&q, &w))
    );

    let instance = ProblemInstance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1ht.json"))?;
    let (_, pz) = split_marginals(&instance.channel);
    let p_zx = mix_over_state(&pz, &instance.p_s);
    let q_zx = mix_over_state(&pz, instance.alternative()?);
    println!("e(x) = {:?}", row_divergences(&p_zx, &q_zx));
    println!("E[e] under [0.3, 0.7] = {:.5}", expected_kl(&[0.3, 0.7], &p_zx, &q_zx));
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
