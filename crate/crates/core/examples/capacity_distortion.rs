//! Capacity-distortion frontier of the shipped model, checked against the
//! closed form on the binding segment and against the brute-force oracle.

use isac::frontier::{capacity_under_cost, grid_oracle, rd_frontier, OracleConstraint, OracleObjective};
use isac::infomeasures::binary_entropy;
use isac::{ProblemInstance, SolverConfig};

pub fn run() -> isac::Result<()> {
    let instance = ProblemInstance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1.json"))?;
    let cfg = SolverConfig::default();

    println!("{:>8} {:>10} {:>10} {:>10}", "D", "C(D)", "P_X(0)", "closed");
    for p in rd_frontier(&instance, 9, &cfg)? {
        // c = (0.5, 0): P_X(0) = 2D on the binding segment, BSC(0.1) output
        let a = (2.0 * p.target).min(0.5);
        let closed = binary_entropy(a * 0.1 + (1.0 - a) * 0.9) - binary_entropy(0.1);
        println!("{:>8.4} {:>10.6} {:>10.6} {:>10.6}", p.target, p.rate, p.p_x[0], closed);
    }

    let point = capacity_under_cost(&instance, 0.1, &cfg)?;
    let oracle = grid_oracle(&instance, OracleConstraint::CostAtMost(0.1), OracleObjective::Rate, 1.0 / 200.0)?;
    println!("C(0.1): solver {:.6} at {:?}, oracle {:.6} at {:?}", point.rate, point.p_x, oracle.rate, oracle.p_x);

    match capacity_under_cost(&instance, -0.1, &cfg) {
        Err(e) => println!("D = -0.1: {e}"),
        Ok(p) => println!("D = -0.1 unexpectedly feasible: {p:?}"),
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
