//! Rate-exponent frontier with an alternative state prior.

use isac::frontier::{grid_oracle, rate_under_exponent, re_frontier, ExponentProblem, OracleConstraint, OracleObjective};
use isac::{ProblemInstance, SolverConfig};

pub fn run() -> isac::Result<()> {
    let instance = ProblemInstance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1ht.json"))?;
    let cfg = SolverConfig::default();
    let problem = ExponentProblem::new(&instance, &cfg)?;
    println!("per-input exponents e(x) = {:?}", problem.exponents);

    for p in re_frontier(&instance, 6, &cfg)? {
        println!("E >= {:.4}: R = {:.5}  P_X = [{:.4}, {:.4}]  converged = {}", p.target, p.rate, p.p_x[0], p.p_x[1], p.converged);
    }

    let point = rate_under_exponent(&instance, 0.5, &cfg)?;
    let oracle = grid_oracle(&instance, OracleConstraint::ExponentAtLeast(0.5), OracleObjective::MinRate, 1.0 / 500.0)?;
    println!("E = 0.5: solver R = {:.5} at P_X(1) = {:.4}; oracle R = {:.5} at {:.4}", point.rate, point.p_x[1], oracle.rate, oracle.p_x[1]);

    if let Err(e) = rate_under_exponent(&instance, 1.0, &cfg) {
        println!("E = 1.0: {e}");
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
