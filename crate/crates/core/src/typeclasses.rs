//! Joint types and strong typicality.
//!
//! A tuple of sequences `(x^n, y^n, ...)` is strongly `μ`-typical for a pmf
//! `P` on the product alphabet when every cell frequency is within `μ` of
//! `P` and cells with `P = 0` never occur. Counts are kept as integers;
//! frequencies are formed only when compared.

use crate::error::{Error, Result};
use crate::model::Kernel;

/// Rounding slack for `|count/n - P| ≤ μ` comparisons.
const TYPICALITY_SLACK: f64 = 1e-12;

/// Occurrence counts of symbol tuples over a product alphabet, stored
/// row-major in the order of `sizes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointType {
    sizes: Vec<usize>,
    counts: Vec<u64>,
    n: usize,
}

impl JointType {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn cells(&self) -> usize {
        self.counts.len()
    }

    fn flat_index(&self, cell: &[usize]) -> usize {
        assert_eq!(cell.len(), self.sizes.len(), "cell arity must match");
        cell.iter().zip(&self.sizes).fold(0, |acc, (&c, &s)| {
            assert!(c < s, "cell index out of range");
            acc * s + c
        })
    }

    pub fn count(&self, cell: &[usize]) -> u64 {
        self.counts[self.flat_index(cell)]
    }

    /// Empirical frequency `π(cell)`.
    pub fn prob(&self, cell: &[usize]) -> f64 {
        self.count(cell) as f64 / self.n as f64
    }

    pub fn pmf(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    /// Type of the concatenated sequences.
    pub fn merge(&self, other: &JointType) -> Result<JointType> {
        if self.sizes != other.sizes {
            return Err(Error::Dimension("joint types over different alphabets".into()));
        }
        Ok(JointType {
            sizes: self.sizes.clone(),
            counts: self.counts.iter().zip(&other.counts).map(|(a, b)| a + b).collect(),
            n: self.n + other.n,
        })
    }

    /// Strong typicality against a pmf on the same product alphabet
    /// (flattened row-major).
    pub fn is_strongly_typical(&self, target: &[f64], mu: f64) -> bool {
        assert_eq!(target.len(), self.counts.len(), "target pmf must cover the product alphabet");
        let n = self.n as f64;
        self.counts.iter().zip(target).all(|(&c, &p)| {
            if p == 0.0 {
                c == 0
            } else {
                (c as f64 / n - p).abs() <= mu + TYPICALITY_SLACK
            }
        })
    }
}

/// Joint type of one, two or three equal-length sequences over alphabets
/// of the given sizes.
pub fn joint_type(seqs: &[&[usize]], sizes: &[usize]) -> Result<JointType> {
    if !(1..=3).contains(&seqs.len()) {
        return Err(Error::InvalidParameter(format!(
            "joint types take 1 to 3 sequences, got {}",
            seqs.len()
        )));
    }
    if sizes.len() != seqs.len() {
        return Err(Error::Dimension("one alphabet size per sequence required".into()));
    }
    let n = seqs[0].len();
    if seqs.iter().any(|s| s.len() != n) {
        return Err(Error::LengthMismatch);
    }
    if n == 0 {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0u64; sizes.iter().product()];
    for t in 0..n {
        let mut idx = 0;
        for (seq, &size) in seqs.iter().zip(sizes) {
            let symbol = seq[t];
            if symbol >= size {
                return Err(Error::SymbolOutOfRange { symbol, size });
            }
            idx = idx * size + symbol;
        }
        counts[idx] += 1;
    }
    Ok(JointType {
        sizes: sizes.to_vec(),
        counts,
        n,
    })
}

pub fn is_strongly_typical(seqs: &[&[usize]], sizes: &[usize], target: &[f64], mu: f64) -> Result<bool> {
    if mu < 0.0 {
        return Err(Error::InvalidParameter("mu must be non-negative".into()));
    }
    let jt = joint_type(seqs, sizes)?;
    if target.len() != jt.cells() {
        return Err(Error::Dimension(format!(
            "target pmf has {} cells, product alphabet has {}",
            target.len(),
            jt.cells()
        )));
    }
    Ok(jt.is_strongly_typical(target, mu))
}

/// Conditional typicality of `y_seq` given `x_seq` under `w = P_{Y|X}`:
/// `|n(a,b)/n - (n(a)/n) w(b|a)| ≤ μ`, and `n(a,b) = 0` where `w(b|a) = 0`.
pub fn is_conditionally_typical(y_seq: &[usize], x_seq: &[usize], w: &Kernel, mu: f64) -> Result<bool> {
    if mu < 0.0 {
        return Err(Error::InvalidParameter("mu must be non-negative".into()));
    }
    let jt = joint_type(&[x_seq, y_seq], &[w.rows(), w.cols()])?;
    let n = jt.n as f64;
    for a in 0..w.rows() {
        let na: u64 = (0..w.cols()).map(|b| jt.count(&[a, b])).sum();
        for b in 0..w.cols() {
            let nab = jt.count(&[a, b]);
            let wb = w.get(a, b);
            if wb == 0.0 {
                if nab > 0 {
                    return Ok(false);
                }
                continue;
            }
            if (nab as f64 / n - na as f64 / n * wb).abs() > mu + TYPICALITY_SLACK {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Chebyshev lower bound `1 - cells / (4 μ² n)` on the probability that an
/// i.i.d. sequence is strongly `μ`-typical. May be negative (vacuous).
pub fn typicality_lower_bound(mu: f64, n: usize, cell_count: usize) -> Result<f64> {
    if mu == 0.0 {
        return Err(Error::BoundUndefined);
    }
    if mu < 0.0 || n == 0 {
        return Err(Error::InvalidParameter("mu must be positive and n at least 1".into()));
    }
    Ok(1.0 - cell_count as f64 / (4.0 * mu * mu * n as f64))
}

/// Compositions of `total` into `parts` non-negative integers (the possible
/// count vectors of a type), in lexicographic order.
#[derive(Clone, Debug)]
pub struct Compositions {
    counts: Vec<usize>,
    total: usize,
    done: bool,
}

impl Compositions {
    pub fn new(parts: usize, total: usize) -> Self {
        let mut counts = vec![0; parts];
        if let Some(last) = counts.last_mut() {
            *last = total;
        }
        Self {
            counts,
            total,
            done: parts == 0,
        }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let current = self.counts.clone();
        let n = self.counts.len();
        // Increment the rightmost position that still has mass to its right.
        let mut suffix = self.counts[n - 1];
        let mut pivot = None;
        for i in (0..n - 1).rev() {
            if suffix > 0 {
                pivot = Some(i);
                break;
            }
            suffix += self.counts[i];
        }
        match pivot {
            None => self.done = true,
            Some(i) => {
                self.counts[i] += 1;
                let used: usize = self.counts[..=i].iter().sum();
                self.counts[i + 1..].iter_mut().for_each(|c| *c = 0);
                self.counts[n - 1] = self.total - used;
            }
        }
        Some(current)
    }
}

/// Exact probability that `n` i.i.d. draws from `pmf` (over the cells of a
/// product alphabet) form a strongly `μ`-typical tuple, by summing the
/// multinomial law over all types.
pub fn typical_set_probability(pmf: &[f64], n: usize, mu: f64) -> f64 {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let nf = n as f64;
    let mut total = 0.0;
    for counts in Compositions::new(pmf.len(), n) {
        let typical = counts.iter().zip(pmf).all(|(&c, &p)| {
            if p == 0.0 {
                c == 0
            } else {
                (c as f64 / nf - p).abs() <= mu + TYPICALITY_SLACK
            }
        });
        if !typical {
            continue;
        }
        let mut log_p = ln_fact[n];
        for (&c, &p) in counts.iter().zip(pmf) {
            if c > 0 {
                log_p += c as f64 * p.ln() - ln_fact[c];
            }
        }
        total += log_p.exp();
    }
    total.min(1.0)
}
