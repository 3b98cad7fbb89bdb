//! Capacity-distortion and rate-exponent frontiers.
//!
//! Both problems optimize over the input distribution `P_X` only:
//!
//! * `C(D) = max { I_P(X;Y) : Σ_x P_X(x) c(x) ≤ D }`, solved by
//!   Blahut-Arimoto with a Lagrangian cost penalty and bisection on the
//!   multiplier;
//! * `max { min(I_P(X;Y), I_Q(X;Y)) : Σ_x P_X(x) e(x) ≥ E }` with
//!   `e(x) = D(P_{Z|X}(·|x) ‖ Q_{Z|X}(·|x))`, solved by exponentiated
//!   subgradient ascent with a KL projection onto the constraint set.
//!
//! A brute-force simplex grid search is provided as an independent check.
//! Achievability is downward-closed in the rate, so each frontier point
//! stands for every smaller rate at the same distortion or exponent.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::infomeasures::{kl_divergence, mutual_information, output_distribution, row_divergences};
use crate::model::{mix_over_state, split_marginals, Kernel, ProblemInstance};
use crate::sensing::{per_input_cost, SensingCost};
use crate::typeclasses::Compositions;

/// Slack used when comparing a linear constraint against its bound.
const CONSTRAINT_SLACK: f64 = 1e-12;
/// Subgradient ascent stops after this many iterations without improvement.
const STALL_WINDOW: usize = 100;
/// Largest input alphabet accepted by [`grid_oracle`].
pub const ORACLE_MAX_INPUTS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Bits.
    pub convergence_tol: f64,
    /// Tolerance on the cost constraint during multiplier bisection.
    pub bisection_tol: f64,
    /// Replacement value (bits) for infinite per-input exponents.
    pub kl_clamp: f64,
    /// Resolution of [`grid_oracle`].
    pub grid_step: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 50_000,
            convergence_tol: 1e-9,
            bisection_tol: 1e-6,
            kl_clamp: 60.0,
            grid_step: 1.0 / 200.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations > 0
            && self.convergence_tol > 0.0
            && self.bisection_tol > 0.0
            && self.kl_clamp > 0.0
            && self.grid_step > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("solver settings must be positive: {self:?}")))
        }
    }
}

/// One point on a frontier.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    /// Requested distortion bound or exponent target.
    pub target: f64,
    /// Communication rate in bits per channel use.
    pub rate: f64,
    /// Achieved expected distortion, or achieved exponent in bits.
    pub objective: f64,
    pub p_x: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Set when an infinite per-input exponent was replaced by the clamp.
    pub clamped: bool,
}

/// The capacity-distortion problem in reduced form: the state-averaged
/// communication channel and the per-input sensing cost.
#[derive(Clone, Debug)]
pub struct CostProblem {
    pub channel: Kernel,
    pub sensing: SensingCost,
}

impl CostProblem {
    pub fn new(instance: &ProblemInstance) -> Result<Self> {
        let distortion = instance.distortion()?;
        let (py, _) = split_marginals(&instance.channel);
        Ok(Self {
            channel: mix_over_state(&py, &instance.p_s),
            sensing: per_input_cost(&instance.channel, &instance.p_s, distortion),
        })
    }

    pub fn min_cost(&self) -> f64 {
        self.sensing.min_cost()
    }

    fn point(&self, target: f64, p: Vec<f64>, iterations: usize, converged: bool) -> FrontierPoint {
        FrontierPoint {
            target,
            rate: mutual_information(&p, &self.channel),
            objective: self.sensing.expected_distortion(&p),
            p_x: p,
            converged,
            iterations,
            clamped: false,
        }
    }

    /// Unconstrained capacity achiever.
    pub fn unconstrained(&self, cfg: &SolverConfig) -> FrontierPoint {
        let nx = self.channel.rows();
        let ba = blahut_arimoto(&self.channel, &self.sensing.cost, 0.0, &vec![true; nx], cfg);
        self.point(f64::INFINITY, ba.p, ba.iterations, ba.converged)
    }

    pub fn solve(&self, d: f64, cfg: &SolverConfig) -> Result<FrontierPoint> {
        cfg.validate()?;
        let cost = &self.sensing.cost;
        let nx = cost.len();
        let d_min = self.min_cost();
        if d < d_min - CONSTRAINT_SLACK || d.is_nan() {
            return Err(Error::DistortionInfeasible { requested: d, min: d_min });
        }

        // At the minimum only the cheapest inputs are usable.
        if d <= d_min + CONSTRAINT_SLACK {
            let support: Vec<bool> = cost.iter().map(|&c| c <= d_min + CONSTRAINT_SLACK).collect();
            let ba = blahut_arimoto(&self.channel, cost, 0.0, &support, cfg);
            return Ok(self.point(d, ba.p, ba.iterations, ba.converged));
        }

        let all = vec![true; nx];
        let free = blahut_arimoto(&self.channel, cost, 0.0, &all, cfg);
        let mut iterations = free.iterations;
        let expected = |p: &[f64]| self.sensing.expected_distortion(p);
        if expected(&free.p) <= d + CONSTRAINT_SLACK {
            return Ok(self.point(d, free.p, iterations, free.converged));
        }

        // Expected cost is non-increasing in the multiplier.
        let (mut lo, mut lo_run) = (0.0, free);
        let mut hi = 1.0;
        let mut hi_run = loop {
            let run = blahut_arimoto(&self.channel, cost, hi, &all, cfg);
            iterations += run.iterations;
            if expected(&run.p) <= d || hi > 1e15 {
                break run;
            }
            lo = hi;
            lo_run = run;
            hi *= 2.0;
        };
        for _ in 0..200 {
            if d - expected(&hi_run.p) <= cfg.bisection_tol || hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let run = blahut_arimoto(&self.channel, cost, mid, &all, cfg);
            iterations += run.iterations;
            if expected(&run.p) <= d {
                hi = mid;
                hi_run = run;
            } else {
                lo = mid;
                lo_run = run;
            }
        }

        // A jump in the cost curve leaves a gap; the mixture that meets the
        // constraint exactly is feasible and, by concavity, no worse.
        let (c_lo, c_hi) = (expected(&lo_run.p), expected(&hi_run.p));
        let converged = hi_run.converged;
        let mut best = hi_run.p;
        if c_lo > d && c_hi < d {
            let theta = (d - c_hi) / (c_lo - c_hi);
            let mix: Vec<f64> = lo_run.p.iter().zip(&best).map(|(a, b)| theta * a + (1.0 - theta) * b).collect();
            if expected(&mix) <= d + CONSTRAINT_SLACK
                && mutual_information(&mix, &self.channel) > mutual_information(&best, &self.channel)
            {
                best = mix;
            }
        }
        Ok(self.point(d, best, iterations, converged))
    }
}

struct AscentRun {
    p: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Blahut-Arimoto for `max_p I(p) - λ Σ p c` over inputs marked in
/// `support`. Stops when the standard upper bound
/// `max_x [D(w_x ‖ q) - λ c(x)]` is within `convergence_tol` of the
/// current Lagrangian value.
fn blahut_arimoto(w: &Kernel, cost: &[f64], lambda: f64, support: &[bool], cfg: &SolverConfig) -> AscentRun {
    let nx = w.rows();
    let size = support.iter().filter(|&&s| s).count().max(1);
    let mut p: Vec<f64> = support.iter().map(|&s| if s { 1.0 / size as f64 } else { 0.0 }).collect();
    let mut score = vec![0.0; nx];
    for it in 1..=cfg.max_iterations {
        let q = output_distribution(&p, w);
        let mut upper = f64::NEG_INFINITY;
        let mut lower = 0.0;
        for x in 0..nx {
            if !support[x] {
                continue;
            }
            let v = kl_divergence(w.row(x), &q).min(1e6) - lambda * cost[x];
            score[x] = v;
            upper = upper.max(v);
            lower += p[x] * v;
        }
        if upper - lower < cfg.convergence_tol {
            return AscentRun { p, iterations: it, converged: true };
        }
        let mut total = 0.0;
        for x in 0..nx {
            if support[x] {
                p[x] *= (score[x] - upper).exp2();
                total += p[x];
            }
        }
        p.iter_mut().for_each(|v| *v /= total);
    }
    AscentRun { p, iterations: cfg.max_iterations, converged: false }
}

/// Plain channel capacity by Blahut-Arimoto.
pub fn channel_capacity(w: &Kernel, cfg: &SolverConfig) -> FrontierPoint {
    let nx = w.rows();
    let ba = blahut_arimoto(w, &vec![0.0; nx], 0.0, &vec![true; nx], cfg);
    FrontierPoint {
        target: f64::INFINITY,
        rate: mutual_information(&ba.p, w),
        objective: 0.0,
        p_x: ba.p,
        converged: ba.converged,
        iterations: ba.iterations,
        clamped: false,
    }
}

/// `C(D)`: the largest rate whose achiever meets the expected-distortion
/// bound `d`.
pub fn capacity_under_cost(instance: &ProblemInstance, d: f64, cfg: &SolverConfig) -> Result<FrontierPoint> {
    CostProblem::new(instance)?.solve(d, cfg)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
        .collect()
}

/// Sweeps `D` over `[min_x c(x), cost of the unconstrained achiever]`.
pub fn rd_frontier(instance: &ProblemInstance, n_points: usize, cfg: &SolverConfig) -> Result<Vec<FrontierPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("at least two frontier points required".into()));
    }
    cfg.validate()?;
    let problem = CostProblem::new(instance)?;
    let d_min = problem.min_cost();
    let d_max = problem.unconstrained(cfg).objective.max(d_min);
    let targets = linspace(d_min, d_max, n_points);
    let mut points = targets
        .par_iter()
        .map(|&d| problem.solve(d, cfg))
        .collect::<Result<Vec<_>>>()?;
    // The feasible set grows with D, so an earlier achiever is a valid
    // candidate for every later target.
    for k in 1..points.len() {
        if points[k - 1].rate > points[k].rate {
            let prev = points[k - 1].clone();
            points[k] = FrontierPoint { target: points[k].target, ..prev };
        }
    }
    Ok(points)
}

/// The rate-exponent problem in reduced form.
#[derive(Clone, Debug)]
pub struct ExponentProblem {
    /// `P_{Y|X}` under the null state prior.
    pub channel_p: Kernel,
    /// `P_{Y|X}` under the alternative state prior.
    pub channel_q: Kernel,
    /// Per-input exponents `e(x)`, clamped.
    pub exponents: Vec<f64>,
    pub clamped: bool,
}

impl ExponentProblem {
    pub fn new(instance: &ProblemInstance, cfg: &SolverConfig) -> Result<Self> {
        let q_s = instance.alternative()?;
        let (py, pz) = split_marginals(&instance.channel);
        let raw = row_divergences(&mix_over_state(&pz, &instance.p_s), &mix_over_state(&pz, q_s));
        let clamped = raw.iter().any(|e| e.is_infinite());
        Ok(Self {
            channel_p: mix_over_state(&py, &instance.p_s),
            channel_q: mix_over_state(&py, q_s),
            exponents: raw.into_iter().map(|e| e.min(cfg.kl_clamp)).collect(),
            clamped,
        })
    }

    pub fn max_exponent(&self) -> f64 {
        self.exponents.iter().copied().fold(0.0, f64::max)
    }

    pub fn exponent(&self, p_x: &[f64]) -> f64 {
        p_x.iter().zip(&self.exponents).map(|(p, e)| p * e).sum()
    }

    /// `min(I_P, I_Q)` at `p_x`.
    pub fn min_rate(&self, p_x: &[f64]) -> f64 {
        mutual_information(p_x, &self.channel_p).min(mutual_information(p_x, &self.channel_q))
    }

    fn point(&self, target: f64, p: Vec<f64>, iterations: usize, converged: bool) -> FrontierPoint {
        FrontierPoint {
            target,
            rate: self.min_rate(&p),
            objective: self.exponent(&p),
            p_x: p,
            converged,
            iterations,
            clamped: self.clamped,
        }
    }

    /// Largest `min(I_P, I_Q)` subject to `Σ P_X(x) e(x) ≥ target`.
    pub fn solve(&self, target: f64, cfg: &SolverConfig) -> Result<FrontierPoint> {
        cfg.validate()?;
        let e_max = self.max_exponent();
        if target > e_max + CONSTRAINT_SLACK || target.is_nan() {
            return Err(Error::ExponentInfeasible { requested: target, max: e_max });
        }
        let support: Vec<bool> = if target >= e_max - CONSTRAINT_SLACK {
            self.exponents.iter().map(|&e| e >= e_max - CONSTRAINT_SLACK).collect()
        } else {
            vec![true; self.exponents.len()]
        };
        let run = self.ascend(target, &support, cfg);
        Ok(self.point(target, run.p, run.iterations, run.converged))
    }

    fn ascend(&self, target: f64, support: &[bool], cfg: &SolverConfig) -> AscentRun {
        let nx = support.len();
        let size = support.iter().filter(|&&s| s).count();
        let mut p: Vec<f64> = support.iter().map(|&s| if s { 1.0 / size as f64 } else { 0.0 }).collect();
        project_onto_exponent(&mut p, &self.exponents, target);

        let mut best_value = self.min_rate(&p);
        let mut best = p.clone();
        let mut average = vec![0.0; nx];
        let mut weight = 0.0;
        let mut stall = 0;
        let mut iterations = 0;
        let mut converged = false;

        while iterations < cfg.max_iterations {
            iterations += 1;
            let (ip, gp) = rate_and_gradient(&p, &self.channel_p);
            let (iq, gq) = rate_and_gradient(&p, &self.channel_q);
            // Constant offsets in the gradient cancel in the normalization.
            let grad = if ip <= iq { gp } else { gq };
            let step = 1.0 / (iterations as f64).sqrt();
            let top = (0..nx).filter(|&x| support[x]).map(|x| grad[x]).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for x in 0..nx {
                if support[x] {
                    p[x] *= (step * (grad[x] - top)).exp2();
                    total += p[x];
                }
            }
            p.iter_mut().for_each(|v| *v /= total);
            project_onto_exponent(&mut p, &self.exponents, target);

            weight += step;
            for (a, v) in average.iter_mut().zip(&p) {
                *a += step * v;
            }
            let avg: Vec<f64> = average.iter().map(|a| a / weight).collect();

            let mut improved = false;
            for candidate in [&p, &avg] {
                let value = self.min_rate(candidate);
                if value > best_value + cfg.convergence_tol {
                    improved = true;
                }
                if value > best_value {
                    best_value = value;
                    best.clone_from(candidate);
                }
            }
            if improved {
                stall = 0;
            } else {
                stall += 1;
                if stall >= STALL_WINDOW {
                    converged = true;
                    break;
                }
            }
        }
        AscentRun { p: best, iterations, converged }
    }
}

/// Mutual information and its gradient `D(w_x ‖ q)` (offset dropped).
fn rate_and_gradient(p: &[f64], w: &Kernel) -> (f64, Vec<f64>) {
    let q = output_distribution(p, w);
    let grad: Vec<f64> = (0..w.rows()).map(|x| kl_divergence(w.row(x), &q).min(1e6)).collect();
    let rate = p.iter().zip(&grad).filter(|(&px, _)| px > 0.0).map(|(px, g)| px * g).sum::<f64>();
    (rate.max(0.0), grad)
}

/// KL projection of `p` onto `{Σ p e ≥ target}`: exponential tilting
/// `p(x) 2^{ν e(x)}` with the smallest feasible `ν ≥ 0`.
fn project_onto_exponent(p: &mut [f64], e: &[f64], target: f64) {
    let mean = |q: &[f64]| q.iter().zip(e).map(|(a, b)| a * b).sum::<f64>();
    if mean(p) >= target {
        return;
    }
    let top = p.iter().zip(e).filter(|(&v, _)| v > 0.0).map(|(_, &b)| b).fold(f64::NEG_INFINITY, f64::max);
    let tilt = |nu: f64| -> Vec<f64> {
        let mut q: Vec<f64> = p.iter().zip(e).map(|(&a, &b)| a * (nu * (b - top)).exp2()).collect();
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        q
    };
    let mut hi = 1.0;
    while mean(&tilt(hi)) < target && hi < 1e12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&tilt(mid)) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    p.copy_from_slice(&tilt(hi));
}

/// Largest `min(I_P, I_Q)` with exponent at least `e`.
pub fn rate_under_exponent(instance: &ProblemInstance, e: f64, cfg: &SolverConfig) -> Result<FrontierPoint> {
    ExponentProblem::new(instance, cfg)?.solve(e, cfg)
}

/// Sweeps the exponent target over `[0, max_x e(x)]`.
pub fn re_frontier(instance: &ProblemInstance, n_points: usize, cfg: &SolverConfig) -> Result<Vec<FrontierPoint>> {
    if n_points < 2 {
        return Err(Error::InvalidParameter("at least two frontier points required".into()));
    }
    cfg.validate()?;
    let problem = ExponentProblem::new(instance, cfg)?;
    let targets = linspace(0.0, problem.max_exponent(), n_points);
    let mut points = targets
        .par_iter()
        .map(|&e| problem.solve(e, cfg))
        .collect::<Result<Vec<_>>>()?;
    // A point feasible at a larger exponent is feasible at every smaller one.
    for k in (0..points.len().saturating_sub(1)).rev() {
        if points[k + 1].rate > points[k].rate {
            let next = points[k + 1].clone();
            points[k] = FrontierPoint { target: points[k].target, ..next };
        }
    }
    Ok(points)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleConstraint {
    CostAtMost(f64),
    ExponentAtLeast(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleObjective {
    /// `I_P(X;Y)`.
    Rate,
    /// `min(I_P(X;Y), I_Q(X;Y))`.
    MinRate,
}

/// Points of the probability simplex with resolution `1/resolution`.
pub fn simplex_grid(parts: usize, resolution: usize) -> impl Iterator<Item = Vec<f64>> {
    Compositions::new(parts, resolution)
        .map(move |c| c.into_iter().map(|k| k as f64 / resolution as f64).collect())
}

/// Exhaustive search over the simplex grid. Ties keep the
/// lexicographically smallest `P_X`.
pub fn grid_oracle(
    instance: &ProblemInstance,
    constraint: OracleConstraint,
    objective: OracleObjective,
    step: f64,
) -> Result<FrontierPoint> {
    let nx = instance.channel.x.len();
    if nx > ORACLE_MAX_INPUTS {
        return Err(Error::OracleTooLarge { size: nx, limit: ORACLE_MAX_INPUTS });
    }
    let resolution = (1.0 / step).round();
    if !(step > 0.0 && resolution >= 1.0 && (resolution * step - 1.0).abs() < 1e-9) {
        return Err(Error::InvalidParameter(format!("grid step {step} must be 1/k for a positive integer k")));
    }
    let resolution = resolution as usize;

    let (py, _) = split_marginals(&instance.channel);
    let channel_p = mix_over_state(&py, &instance.p_s);
    let needs_q = objective == OracleObjective::MinRate || matches!(constraint, OracleConstraint::ExponentAtLeast(_));
    let exponent = if needs_q {
        Some(ExponentProblem::new(instance, &SolverConfig::default())?)
    } else {
        None
    };
    let cost = match constraint {
        OracleConstraint::CostAtMost(_) => Some(CostProblem::new(instance)?.sensing),
        OracleConstraint::ExponentAtLeast(_) => None,
    };

    let metric = |p: &[f64]| match constraint {
        OracleConstraint::CostAtMost(_) => cost.as_ref().expect("cost").expected_distortion(p),
        OracleConstraint::ExponentAtLeast(_) => exponent.as_ref().expect("exponent").exponent(p),
    };
    let feasible = |p: &[f64]| match constraint {
        OracleConstraint::CostAtMost(d) => metric(p) <= d + CONSTRAINT_SLACK,
        OracleConstraint::ExponentAtLeast(e) => metric(p) >= e - CONSTRAINT_SLACK,
    };
    let value = |p: &[f64]| match objective {
        OracleObjective::Rate => mutual_information(p, &channel_p),
        OracleObjective::MinRate => exponent.as_ref().expect("exponent").min_rate(p),
    };

    let mut evaluated = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for p in simplex_grid(nx, resolution) {
        evaluated += 1;
        if !feasible(&p) {
            continue;
        }
        let v = value(&p);
        if best.as_ref().is_none_or(|(b, _)| v > *b) {
            best = Some((v, p));
        }
    }
    let (target, infeasible) = match constraint {
        OracleConstraint::CostAtMost(d) => (d, Error::DistortionInfeasible {
            requested: d,
            min: cost.as_ref().expect("cost").min_cost(),
        }),
        OracleConstraint::ExponentAtLeast(e) => (e, Error::ExponentInfeasible {
            requested: e,
            max: exponent.as_ref().expect("exponent").max_exponent(),
        }),
    };
    let (rate, p_x) = best.ok_or(infeasible)?;
    Ok(FrontierPoint {
        target,
        rate,
        objective: metric(&p_x),
        p_x,
        converged: true,
        iterations: evaluated,
        clamped: exponent.as_ref().is_some_and(|x| x.clamped),
    })
}
