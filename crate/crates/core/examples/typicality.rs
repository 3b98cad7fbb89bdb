//! Joint types, strong typicality and the Chebyshev mass bound.

use isac::typeclasses::{is_conditionally_typical, is_strongly_typical, joint_type, typical_set_probability, typicality_lower_bound};
use isac::Kernel;

pub fn run() -> isac::Result<()> {
    let x = [0, 1, 1, 0, 1, 1, 0, 1];
    let y = [0, 1, 0, 0, 1, 1, 0, 1];
    let t = joint_type(&[&x, &y], &[2, 2])?;
    println!("joint type of (x, y): counts {:?} over n = {}", t.counts(), t.n());
    println!("x typical for [0.4, 0.6] at mu = 0.1: {}", is_strongly_typical(&[&x], &[2], &[0.4, 0.6], 0.1)?);
    println!("y | x typical for BSC(0.1) at mu = 0.2: {}", is_conditionally_typical(&y, &x, &Kernel::bsc(0.1), 0.2)?);

    println!("{:>4} {:>6} {:>10} {:>10}", "n", "mu", "bound", "exact");
    for n in [8, 10, 12, 100] {
        for mu in [0.15, 0.2, 0.25] {
            let bound = typicality_lower_bound(mu, n, 2)?;
            let exact = typical_set_probability(&[0.5, 0.5], n, mu);
            println!("{n:>4} {mu:>6} {bound:>10.4} {exact:>10.4}");
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
