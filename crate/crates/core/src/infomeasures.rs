//! Entropy, mutual information and Kullback-Leibler divergence in bits.
//!
//! `0 log 0` and `0 log(0/0)` are taken as zero. A divergence with `p(i) > 0`
//! and `q(i) = 0` is reported as `f64::INFINITY` and never clamped here.

use crate::model::Kernel;

pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&v| v > 0.0).map(|&v| v * v.log2()).sum::<f64>()
}

/// Output law `Σ_x p_x(x) w(·|x)`.
pub fn output_distribution(p_x: &[f64], w: &Kernel) -> Vec<f64> {
    assert_eq!(p_x.len(), w.rows(), "input pmf length must match kernel rows");
    let mut out = vec![0.0; w.cols()];
    for (x, &px) in p_x.iter().enumerate() {
        if px == 0.0 {
            continue;
        }
        for (o, v) in w.row(x).iter().enumerate() {
            out[o] += px * v;
        }
    }
    out
}

/// `I(X;Y) = H(P_Y) - Σ_x P_X(x) H(w(·|x))`, clamped below at zero to remove
/// rounding noise.
pub fn mutual_information(p_x: &[f64], w: &Kernel) -> f64 {
    let p_y = output_distribution(p_x, w);
    let cond: f64 = p_x
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| px * entropy(w.row(x)))
        .sum();
    (entropy(&p_y) - cond).max(0.0)
}

pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "pmfs must have equal length");
    let mut total = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        total += pi * (pi / qi).log2();
    }
    // Rounding can leave a tiny negative value when p == q.
    total.max(0.0)
}

/// Per-input divergences `e(x) = D(p_zx(·|x) ‖ q_zx(·|x))`.
pub fn row_divergences(p_zx: &Kernel, q_zx: &Kernel) -> Vec<f64> {
    assert_eq!((p_zx.rows(), p_zx.cols()), (q_zx.rows(), q_zx.cols()), "tables must share dimensions");
    (0..p_zx.rows())
        .map(|x| kl_divergence(p_zx.row(x), q_zx.row(x)))
        .collect()
}

/// `Σ_x P_X(x) D(p_zx(·|x) ‖ q_zx(·|x))`; infinite iff an input with
/// positive probability has an infinite row divergence.
pub fn expected_kl(p_x: &[f64], p_zx: &Kernel, q_zx: &Kernel) -> f64 {
    assert_eq!(p_x.len(), p_zx.rows(), "input pmf length must match table rows");
    row_divergences(p_zx, q_zx)
        .into_iter()
        .zip(p_x)
        .filter(|(_, &px)| px > 0.0)
        .map(|(e, &px)| px * e)
        .sum()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy(&[p, 1.0 - p])
}
