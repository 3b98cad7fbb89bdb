//! Random instances and brute-force oracles shared by the integration tests
//! and the acceptance runner.

#![allow(dead_code)]

use isac::model::{Alphabet, ChannelModel, DistortionSpec, Pmf, ProblemInstance};
use isac::sensing::EstimatorTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform-then-normalized pmf with every entry at least `floor` before
/// normalizing.
pub fn random_pmf(rng: &mut impl Rng, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| floor + rng.gen::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Random channel, prior, alternative prior and distortion table.
pub fn random_instance(rng: &mut impl Rng, nx: usize, ns: usize, ny: usize, nz: usize, nr: usize) -> ProblemInstance {
    let mut w = Vec::with_capacity(nx * ns * ny * nz);
    for _ in 0..nx * ns {
        w.extend(random_pmf(rng, ny * nz, 0.0));
    }
    let channel = ChannelModel::new(
        Alphabet::indexed(nx),
        Alphabet::indexed(ns),
        Alphabet::indexed(ny),
        Alphabet::indexed(nz),
        w,
    )
    .unwrap();
    let d: Vec<f64> = (0..nr * ns).map(|_| rng.gen::<f64>()).collect();
    let distortion = DistortionSpec::new(Alphabet::indexed(nr), ns, d).unwrap();
    ProblemInstance::new(channel, Pmf::new(random_pmf(rng, ns, 0.05)))
        .with_alternative(Pmf::new(random_pmf(rng, ns, 0.05)))
        .with_distortion(distortion)
}

/// `P_{Z|XS}(z|x,s)` summed straight from the joint tensor.
pub fn echo_prob(ch: &ChannelModel, x: usize, s: usize, z: usize) -> f64 {
    let (_, _, ny, _) = ch.dims();
    (0..ny).map(|y| ch.prob(x, s, y, z)).sum()
}

/// `P_{Y|X}(y|x)` averaged over `prior`.
pub fn comm_prob(ch: &ChannelModel, prior: &[f64], x: usize, y: usize) -> f64 {
    let (_, ns, _, nz) = ch.dims();
    (0..ns).map(|s| prior[s] * (0..nz).map(|z| ch.prob(x, s, y, z)).sum::<f64>()).sum()
}

/// Per-input expected distortion of an arbitrary estimator table.
pub fn table_cost(inst: &ProblemInstance, table: &[usize], nz: usize) -> Vec<f64> {
    let ch = &inst.channel;
    let d = inst.distortion.as_ref().unwrap();
    let (nx, ns, _, _) = ch.dims();
    (0..nx)
        .map(|x| {
            let mut c = 0.0;
            for s in 0..ns {
                for z in 0..nz {
                    c += inst.p_s[s] * echo_prob(ch, x, s, z) * d.get(table[x * nz + z], s);
                }
            }
            c
        })
        .collect()
}

/// Smallest per-input cost over all `nr^(nx nz)` estimator tables.
pub fn exhaustive_min_cost(inst: &ProblemInstance) -> Vec<f64> {
    let (nx, _, _, nz) = inst.channel.dims();
    let nr = inst.distortion.as_ref().unwrap().reconstructions();
    let cells = nx * nz;
    let mut best = vec![f64::INFINITY; nx];
    let mut table = vec![0usize; cells];
    loop {
        for (b, c) in best.iter_mut().zip(table_cost(inst, &table, nz)) {
            *b = b.min(c);
        }
        // odometer increment
        let mut k = 0;
        while k < cells {
            table[k] += 1;
            if table[k] < nr {
                break;
            }
            table[k] = 0;
            k += 1;
        }
        if k == cells {
            return best;
        }
    }
}

pub fn table_of(est: &EstimatorTable) -> Vec<usize> {
    est.entries().to_vec()
}

/// `I(X;Y)` straight from the definition `Σ p(x) w(y|x) log2(w(y|x)/p(y))`.
pub fn mi_direct(p_x: &[f64], w: &dyn Fn(usize, usize) -> f64, ny: usize) -> f64 {
    let p_y: Vec<f64> = (0..ny).map(|y| p_x.iter().enumerate().map(|(x, &p)| p * w(x, y)).sum()).collect();
    let mut total = 0.0;
    for (x, &p) in p_x.iter().enumerate() {
        for y in 0..ny {
            let v = w(x, y);
            if p > 0.0 && v > 0.0 {
                total += p * v * (v / p_y[y]).log2();
            }
        }
    }
    total
}

/// Binary-input brute force: best rate over a fine 1-D grid subject to a
/// linear constraint `Σ p g ≥ bound` (use negated costs for an upper bound).
pub fn binary_scan(steps: usize, feasible: impl Fn(&[f64]) -> bool, objective: impl Fn(&[f64]) -> f64) -> (f64, Vec<f64>) {
    let mut best = (f64::NEG_INFINITY, vec![]);
    for k in 0..=steps {
        let p = vec![1.0 - k as f64 / steps as f64, k as f64 / steps as f64];
        if feasible(&p) {
            let v = objective(&p);
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    best
}

/// Probability that a block of `n` i.i.d. draws from `pmf` over `cells`
/// cells is strongly `mu`-typical, by enumerating every sequence.
pub fn brute_typical_mass(pmf: &[f64], n: usize, mu: f64) -> f64 {
    let k = pmf.len();
    let total = k.pow(n as u32);
    let mut mass = 0.0;
    let mut counts = vec![0usize; k];
    for idx in 0..total {
        counts.iter_mut().for_each(|c| *c = 0);
        let mut prob = 1.0;
        let mut rest = idx;
        for _ in 0..n {
            let a = rest % k;
            rest /= k;
            counts[a] += 1;
            prob *= pmf[a];
        }
        let typical = (0..k).all(|a| {
            let freq = counts[a] as f64 / n as f64;
            if pmf[a] == 0.0 {
                counts[a] == 0
            } else {
                (freq - pmf[a]).abs() <= mu + 1e-12
            }
        });
        if typical {
            mass += prob;
        }
    }
    mass
}
