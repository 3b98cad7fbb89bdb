mod common;

use common::{binary_scan, comm_prob, echo_prob, mi_direct, random_instance, rng};
use isac::frontier::{capacity_under_cost, grid_oracle, rate_under_exponent, CostProblem, ExponentProblem, OracleConstraint, OracleObjective};
use isac::infomeasures::{expected_kl, kl_divergence};
use isac::model::{mix_over_state, split_marginals, Pmf};
use isac::{ProblemInstance, SolverConfig};

fn sc1ht() -> ProblemInstance {
    ProblemInstance::load(concat!(env!("CARGO_MANIFEST_DIR"), "/models/sc1ht.json")).unwrap()
}

#[test]
fn capacity_matches_oracles_on_random_binary_instances() {
    let cfg = SolverConfig::default();
    let mut r = rng(21);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 2, 2, 2, 2, 2);
        let problem = CostProblem::new(&inst).unwrap();
        let (d_min, d_max) = (problem.min_cost(), problem.unconstrained(&cfg).objective);
        let cost = problem.sensing.cost.clone();
        let w = |x: usize, y: usize| comm_prob(&inst.channel, &inst.p_s, x, y);
        for d in [d_min, 0.5 * (d_min + d_max), d_max] {
            let ours = capacity_under_cost(&inst, d, &cfg).unwrap();
            let grid = grid_oracle(&inst, OracleConstraint::CostAtMost(d), OracleObjective::Rate, 1.0 / 200.0).unwrap();
            assert!((ours.rate - grid.rate).abs() <= 2e-3, "{} vs {}", ours.rate, grid.rate);
            // a 1/20000 scan loses at most slope * 5e-5 on a binding constraint
            let (fine, _) = binary_scan(20_000, |p| p[0] * cost[0] + p[1] * cost[1] <= d + 1e-12, |p| mi_direct(p, &w, 2));
            assert!((ours.rate - fine).abs() <= 2e-5, "{} vs fine {}", ours.rate, fine);
            assert!(ours.objective <= d + 1e-6);
        }
    }
}

#[test]
fn rate_exponent_matches_oracles_on_random_binary_instances() {
    let cfg = SolverConfig::default();
    let mut r = rng(22);
    for _ in 0..20 {
        let inst = random_instance(&mut r, 2, 2, 2, 2, 2);
        let problem = ExponentProblem::new(&inst, &cfg).unwrap();
        let e = problem.exponents.clone();
        let q_s = inst.q_s.clone().unwrap();
        let wp = |x: usize, y: usize| comm_prob(&inst.channel, &inst.p_s, x, y);
        let wq = |x: usize, y: usize| comm_prob(&inst.channel, &q_s, x, y);
        let e_max = e.iter().cloned().fold(0.0, f64::max);
        for target in [0.0, 0.5 * e_max, e_max] {
            let ours = rate_under_exponent(&inst, target, &cfg).unwrap();
            let grid = grid_oracle(&inst, OracleConstraint::ExponentAtLeast(target), OracleObjective::MinRate, 1.0 / 200.0).unwrap();
            assert!((ours.rate - grid.rate).abs() <= 2e-3, "{} vs {}", ours.rate, grid.rate);
            let (fine, _) = binary_scan(
                20_000,
                |p| p[0] * e[0] + p[1] * e[1] >= target - 1e-12,
                |p| mi_direct(p, &wp, 2).min(mi_direct(p, &wq, 2)),
            );
            assert!((ours.rate - fine).abs() <= 2e-5, "{} vs fine {}", ours.rate, fine);
        }
    }
}

#[test]
fn sc1ht_exponent_point() {
    let cfg = SolverConfig::default();
    let inst = sc1ht();
    let p = rate_under_exponent(&inst, 0.5, &cfg).unwrap();
    assert!((p.rate - 0.47131).abs() <= 2e-3);
    assert!((p.p_x[1] - 0.6785).abs() <= 2e-3);
    let top = rate_under_exponent(&inst, ExponentProblem::new(&inst, &cfg).unwrap().max_exponent(), &cfg).unwrap();
    assert!((top.objective - 0.73697).abs() <= 1e-3);
    assert!((top.p_x[1] - 1.0).abs() <= 1e-9);
}

#[test]
fn degenerate_priors_reduce_to_state_pair_divergence() {
    let mut r = rng(23);
    for _ in 0..20 {
        let mut inst = random_instance(&mut r, 3, 2, 2, 3, 2);
        inst.p_s = Pmf::point_mass(2, 0);
        inst.q_s = Some(Pmf::point_mass(2, 1));
        let p_x = common::random_pmf(&mut r, 3, 0.0);
        let (_, pz) = split_marginals(&inst.channel);
        let lhs = expected_kl(&p_x, &mix_over_state(&pz, &inst.p_s), &mix_over_state(&pz, inst.q_s.as_ref().unwrap()));
        let rhs: f64 = (0..3)
            .map(|x| {
                let a: Vec<f64> = (0..3).map(|z| echo_prob(&inst.channel, x, 0, z)).collect();
                let b: Vec<f64> = (0..3).map(|z| echo_prob(&inst.channel, x, 1, z)).collect();
                p_x[x] * kl_divergence(&a, &b)
            })
            .sum();
        assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }
}
