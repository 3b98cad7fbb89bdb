//! State estimation at the radar receiver.
//!
//! The radar knows `x` and observes the echo `z`. The posterior
//! `P_{S|XZ}` and the per-symbol Bayes estimator
//! `ŝ(x,z) = argmin_ŝ Σ_s P_{S|XZ}(s|x,z) d(ŝ,s)` are blockwise optimal, so
//! the sensing side reduces to a per-input cost `c(x)` and the expected
//! distortion is linear in the input distribution.

use crate::error::{Error, Result};
use crate::model::{split_marginals, ChannelModel, DistortionSpec, StateKernel};

/// `q[s][x][z] = P_{S|XZ}(s|x,z)`.
///
/// Columns with zero echo probability are set to the uniform pmf and
/// flagged unsupported; they carry no weight in any expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorTable {
    ns: usize,
    nx: usize,
    nz: usize,
    q: Vec<f64>,
    supported: Vec<bool>,
}

impl PosteriorTable {
    pub fn get(&self, s: usize, x: usize, z: usize) -> f64 {
        self.q[(s * self.nx + x) * self.nz + z]
    }

    pub fn is_supported(&self, x: usize, z: usize) -> bool {
        self.supported[x * self.nz + z]
    }

    pub fn column(&self, x: usize, z: usize) -> Vec<f64> {
        (0..self.ns).map(|s| self.get(s, x, z)).collect()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.ns, self.nx, self.nz)
    }
}

/// Reconstruction index for every `(x, z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EstimatorTable {
    nx: usize,
    nz: usize,
    shat: Vec<usize>,
}

impl EstimatorTable {
    pub fn new(nx: usize, nz: usize, shat: Vec<usize>) -> Result<Self> {
        if shat.len() != nx * nz {
            return Err(Error::Dimension(format!(
                "estimator table needs {} entries, got {}",
                nx * nz,
                shat.len()
            )));
        }
        Ok(Self { nx, nz, shat })
    }

    pub fn get(&self, x: usize, z: usize) -> usize {
        self.shat[x * self.nz + z]
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.nz)
    }

    pub fn entries(&self) -> &[usize] {
        &self.shat
    }
}

/// Per-input sensing cost `c(x)` under the optimal estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct SensingCost {
    pub estimator: EstimatorTable,
    pub cost: Vec<f64>,
}

impl SensingCost {
    /// `Σ_x P_X(x) c(x)`.
    pub fn expected_distortion(&self, p_x: &[f64]) -> f64 {
        assert_eq!(p_x.len(), self.cost.len(), "input pmf length must match |X|");
        p_x.iter().zip(&self.cost).map(|(p, c)| p * c).sum()
    }

    pub fn min_cost(&self) -> f64 {
        self.cost.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

fn posterior_from_echo(pz: &StateKernel, prior: &[f64]) -> PosteriorTable {
    let (nx, ns, nz) = (pz.nx(), pz.ns(), pz.outputs());
    assert_eq!(prior.len(), ns, "prior length must match the state alphabet");
    let mut q = vec![0.0; ns * nx * nz];
    let mut supported = vec![false; nx * nz];
    for x in 0..nx {
        for z in 0..nz {
            let joint: Vec<f64> = (0..ns).map(|s| prior[s] * pz.get(x, s, z)).collect();
            let marginal: f64 = joint.iter().sum();
            let ok = marginal > 0.0;
            supported[x * nz + z] = ok;
            for (s, j) in joint.iter().enumerate() {
                q[(s * nx + x) * nz + z] = if ok { j / marginal } else { 1.0 / ns as f64 };
            }
        }
    }
    PosteriorTable { ns, nx, nz, q, supported }
}

pub fn posterior(channel: &ChannelModel, prior: &[f64]) -> PosteriorTable {
    let (_, pz) = split_marginals(channel);
    posterior_from_echo(&pz, prior)
}

/// Bayes estimator; ties go to the smallest reconstruction index.
pub fn optimal_estimator(posterior: &PosteriorTable, distortion: &DistortionSpec) -> EstimatorTable {
    let (ns, nx, nz) = posterior.dims();
    assert_eq!(distortion.states(), ns, "distortion state dimension must match");
    let mut shat = Vec::with_capacity(nx * nz);
    for x in 0..nx {
        for z in 0..nz {
            let mut best = (0, f64::INFINITY);
            for r in 0..distortion.reconstructions() {
                let risk: f64 = (0..ns).map(|s| posterior.get(s, x, z) * distortion.get(r, s)).sum();
                if risk < best.1 {
                    best = (r, risk);
                }
            }
            shat.push(best.0);
        }
    }
    EstimatorTable { nx, nz, shat }
}

/// `c(x) = Σ_{s,z} P_S(s) P_{Z|XS}(z|x,s) d(est(x,z), s)` for any estimator.
pub fn estimator_cost(pz: &StateKernel, prior: &[f64], distortion: &DistortionSpec, est: &EstimatorTable) -> Vec<f64> {
    let (nx, ns, nz) = (pz.nx(), pz.ns(), pz.outputs());
    (0..nx)
        .map(|x| {
            let mut c = 0.0;
            for s in 0..ns {
                if prior[s] == 0.0 {
                    continue;
                }
                for z in 0..nz {
                    c += prior[s] * pz.get(x, s, z) * distortion.get(est.get(x, z), s);
                }
            }
            c
        })
        .collect()
}

/// Optimal estimator and the resulting per-input costs.
pub fn per_input_cost(channel: &ChannelModel, prior: &[f64], distortion: &DistortionSpec) -> SensingCost {
    let (_, pz) = split_marginals(channel);
    let post = posterior_from_echo(&pz, prior);
    let estimator = optimal_estimator(&post, distortion);
    let cost = estimator_cost(&pz, prior, distortion, &estimator);
    SensingCost { estimator, cost }
}

/// Applies the estimator symbol by symbol.
pub fn apply_estimator(est: &EstimatorTable, x_seq: &[usize], z_seq: &[usize]) -> Result<Vec<usize>> {
    if x_seq.len() != z_seq.len() {
        return Err(Error::LengthMismatch);
    }
    x_seq
        .iter()
        .zip(z_seq)
        .map(|(&x, &z)| {
            if x >= est.nx {
                return Err(Error::SymbolOutOfRange { symbol: x, size: est.nx });
            }
            if z >= est.nz {
                return Err(Error::SymbolOutOfRange { symbol: z, size: est.nz });
            }
            Ok(est.get(x, z))
        })
        .collect()
}

/// Average per-symbol distortion `(1/n) Σ_t d(ŝ_t, s_t)`.
pub fn sequence_distortion(distortion: &DistortionSpec, shat_seq: &[usize], s_seq: &[usize]) -> Result<f64> {
    if shat_seq.len() != s_seq.len() {
        return Err(Error::LengthMismatch);
    }
    if s_seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let total: f64 = shat_seq.iter().zip(s_seq).map(|(&r, &s)| distortion.get(r, s)).sum();
    Ok(total / s_seq.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::model::{Alphabet, ChannelModel, Pmf};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn perfect_observation_posterior_and_estimator() {
        let inst = xor_perfect_echo(0.3);
        let post = posterior(&inst.channel, &inst.p_s);
        for s in 0..2 {
            for x in 0..2 {
                for z in 0..2 {
                    assert_eq!(post.get(s, x, z), f64::from(s == z));
                }
            }
        }
        let est = optimal_estimator(&post, inst.distortion.as_ref().unwrap());
        for x in 0..2 {
            for z in 0..2 {
                assert_eq!(est.get(x, z), z);
            }
        }
        let cost = per_input_cost(&inst.channel, &inst.p_s, inst.distortion.as_ref().unwrap());
        assert_eq!(cost.cost, vec![0.0, 0.0]);
    }

    #[test]
    fn uninformative_echo_gives_prior_and_prior_mode() {
        let inst = uninformative_echo(0.1);
        let post = posterior(&inst.channel, &inst.p_s);
        for x in 0..2 {
            for z in 0..2 {
                assert_abs_diff_eq!(post.get(0, x, z), 0.9, epsilon = 1e-15);
                assert_abs_diff_eq!(post.get(1, x, z), 0.1, epsilon = 1e-15);
            }
        }
        let cost = per_input_cost(&inst.channel, &inst.p_s, inst.distortion.as_ref().unwrap());
        assert_eq!(cost.estimator.entries(), &[0, 0, 0, 0]);
        for c in cost.cost {
            assert_abs_diff_eq!(c, 0.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn exact_tie_breaks_to_index_zero() {
        let inst = uninformative_echo(0.5);
        let cost = per_input_cost(&inst.channel, &inst.p_s, inst.distortion.as_ref().unwrap());
        assert_eq!(cost.estimator.entries(), &[0, 0, 0, 0]);
    }

    #[test]
    fn noisy_echo_posterior_and_cost() {
        let inst = noisy_echo(0.5, 0.2);
        let post = posterior(&inst.channel, &inst.p_s);
        // 0.5*0.8 / (0.5*0.8 + 0.5*0.2)
        assert_abs_diff_eq!(post.get(1, 0, 1), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(post.get(1, 1, 1), 0.8, epsilon = 1e-15);
        let cost = per_input_cost(&inst.channel, &inst.p_s, inst.distortion.as_ref().unwrap());
        for c in &cost.cost {
            assert_abs_diff_eq!(*c, 0.2, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(cost.expected_distortion(&[0.3, 0.7]), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn unsupported_columns_are_uniform_and_flagged() {
        // z = 1 never occurs when x = 0
        let ch = ChannelModel::from_fn(2, 3, 1, 2, |x, s, _, z| match (x, z) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            _ => if z == s % 2 { 1.0 } else { 0.0 },
        });
        let post = posterior(&ch, &[0.2, 0.3, 0.5]);
        assert!(!post.is_supported(0, 1));
        assert!(post.is_supported(0, 0));
        for s in 0..3 {
            assert_abs_diff_eq!(post.get(s, 0, 1), 1.0 / 3.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn apply_estimator_examples() {
        let identity = EstimatorTable::new(2, 2, vec![0, 1, 0, 1]).unwrap();
        assert_eq!(apply_estimator(&identity, &[], &[]).unwrap(), Vec::<usize>::new());
        assert_eq!(apply_estimator(&identity, &[0, 1, 0], &[0, 1, 1]).unwrap(), vec![0, 1, 1]);
        let zero = EstimatorTable::new(2, 2, vec![0; 4]).unwrap();
        assert_eq!(apply_estimator(&zero, &[0, 1, 1, 0, 1], &[1, 1, 0, 0, 1]).unwrap(), vec![0; 5]);
        assert!(matches!(apply_estimator(&zero, &[0], &[]), Err(Error::LengthMismatch)));
    }

    #[test]
    fn sequence_distortion_examples() {
        let d = DistortionSpec::hamming(2);
        assert_eq!(sequence_distortion(&d, &[0, 1, 1], &[0, 1, 1]).unwrap(), 0.0);
        assert_eq!(sequence_distortion(&d, &[0, 1, 1], &[1, 0, 0]).unwrap(), 1.0);
        assert_eq!(sequence_distortion(&d, &[0, 1, 0, 0], &[0, 1, 1, 1]).unwrap(), 0.5);
        assert!(matches!(sequence_distortion(&d, &[], &[]), Err(Error::EmptySequence)));
        assert!(matches!(sequence_distortion(&d, &[0], &[0, 1]), Err(Error::LengthMismatch)));
    }

    fn random_instance(raw: &[f64], prior: &[f64], dist: &[f64]) -> (ChannelModel, Vec<f64>, DistortionSpec) {
        let mut w = raw[..27].to_vec();
        for row in w.chunks_mut(3) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= s);
        }
        // |X| = 3, |S| = 3, |Y| = 1, |Z| = 3
        let ch = ChannelModel::from_fn(3, 3, 1, 3, |x, s, _, z| w[(x * 3 + s) * 3 + z]);
        let ps: f64 = prior.iter().sum();
        let prior: Vec<f64> = prior.iter().map(|v| v / ps).collect();
        let d = DistortionSpec::new(Alphabet::indexed(2), 3, dist[..6].to_vec()).unwrap();
        (ch, prior, d)
    }

    proptest! {
        #[test]
        fn cost_is_bounded_and_scales_linearly(
            raw in prop::collection::vec(0.0f64..1.0, 27),
            prior in prop::collection::vec(0.0f64..1.0, 3),
            dist in prop::collection::vec(0.0f64..5.0, 6),
            k in 0.1f64..10.0,
        ) {
            prop_assume!(raw.chunks(3).all(|c| c.iter().sum::<f64>() > 1e-3));
            prop_assume!(prior.iter().sum::<f64>() > 1e-3);
            let (ch, prior, d) = random_instance(&raw, &prior, &dist);
            let base = per_input_cost(&ch, &prior, &d);
            let post = posterior(&ch, &prior);
            for x in 0..3 {
                prop_assert!(base.cost[x] >= 0.0 && base.cost[x] <= d.max() + 1e-12);
                for z in 0..3 {
                    if post.is_supported(x, z) {
                        prop_assert!((post.column(x, z).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                    }
                }
            }
            let scaled = per_input_cost(&ch, &prior, &d.scaled(k));
            for x in 0..3 {
                prop_assert!((scaled.cost[x] - k * base.cost[x]).abs() <= 1e-9 * (1.0 + k * base.cost[x]));
            }
            // k is not a power of two, so rounding can in principle reorder
            // near-ties; compare risks rather than raw indices.
            let p_unit = Pmf::point_mass(3, 0);
            prop_assert!((scaled.expected_distortion(&p_unit) - k * base.expected_distortion(&p_unit)).abs() <= 1e-9 * (1.0 + k));
        }

        #[test]
        fn power_of_two_scaling_keeps_argmin(
            raw in prop::collection::vec(0.0f64..1.0, 27),
            prior in prop::collection::vec(0.0f64..1.0, 3),
            dist in prop::collection::vec(0.0f64..5.0, 6),
            e in -4i32..4,
        ) {
            prop_assume!(raw.chunks(3).all(|c| c.iter().sum::<f64>() > 1e-3));
            prop_assume!(prior.iter().sum::<f64>() > 1e-3);
            let (ch, prior, d) = random_instance(&raw, &prior, &dist);
            let k = 2f64.powi(e);
            prop_assert_eq!(per_input_cost(&ch, &prior, &d).estimator, per_input_cost(&ch, &prior, &d.scaled(k)).estimator);
        }
    }
}
