//! Desk-scale verification of the achievable side.
//!
//! Communication uses i.i.d. random codebooks and maximum-likelihood decoding
//! on the state-averaged channel `P_{Y|X}`; sensing uses the per-symbol Bayes
//! estimator or a deterministic Neyman-Pearson test on
//! `Σ_t log2 P_{Z|X}(z_t|x_t) / Q_{Z|X}(z_t|x_t)`.
//!
//! Randomness is counter based: every draw is a function of
//! `(seed, domain, index)` through a ChaCha stream, so trials are independent
//! streams and results do not depend on the number of worker threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frontier::{capacity_under_cost, SolverConfig};
use crate::infomeasures::expected_kl;
use crate::model::{mix_over_state, split_marginals, Kernel, Pmf, ProblemInstance, StatePrior};
use crate::sensing::{apply_estimator, per_input_cost, sequence_distortion};

/// `log2` of the largest codebook accepted.
pub const MAX_CODEBOOK_LOG2: u32 = 20;
/// Upper limit on the number of atoms of an exact LLR law.
pub const MAX_LLR_ATOMS: usize = 1_000_000;
/// Default merge width for LLR atoms, in bits.
pub const DEFAULT_BIN_WIDTH: f64 = 1e-9;
const WILSON_Z: f64 = 1.959_963_984_540_054;

const DOMAIN_CODEBOOK: u64 = 1;
const DOMAIN_CHANNEL: u64 = 2;
const DOMAIN_RD_TRIAL: u64 = 3;
const DOMAIN_HT_TRIAL: u64 = 4;

/// Deterministic random stream keyed by `(seed, domain, index)`.
fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Inverse-CDF draw from a pmf.
fn sample_index(pmf: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the total; fall back to the last atom with mass
    pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hypothesis {
    /// States drawn from `P_S`.
    #[serde(rename = "H0")]
    Null,
    /// States drawn from `Q_S`.
    #[serde(rename = "H1")]
    Alternative,
}

impl Hypothesis {
    fn prior(self, instance: &ProblemInstance) -> Result<&StatePrior> {
        match self {
            Hypothesis::Null => Ok(&instance.p_s),
            Hypothesis::Alternative => instance.alternative(),
        }
    }
}

/// `M = ⌈2^{nR}⌉` codewords of length `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    pub n: usize,
    pub num_messages: usize,
    pub seed: u64,
    words: Vec<usize>,
}

impl Codebook {
    pub fn from_words(words: Vec<Vec<usize>>) -> Result<Self> {
        let n = words.first().map_or(0, Vec::len);
        if words.len() < 2 || n == 0 || words.iter().any(|w| w.len() != n) {
            return Err(Error::InvalidParameter("codebook needs at least two equal-length words".into()));
        }
        Ok(Self {
            n,
            num_messages: words.len(),
            seed: 0,
            words: words.concat(),
        })
    }

    pub fn word(&self, message: usize) -> &[usize] {
        &self.words[message * self.n..(message + 1) * self.n]
    }
}

/// Number of messages for blocklength `n` and rate `rate`, subject to the
/// size guard.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if n == 0 || rate.is_nan() || rate <= 0.0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1 and rate > 0".into()));
    }
    let exponent = n as f64 * rate;
    if exponent > f64::from(MAX_CODEBOOK_LOG2) {
        return Err(Error::CodebookTooLarge { limit_log2: MAX_CODEBOOK_LOG2 });
    }
    Ok((exponent.exp2().ceil() as usize).max(2))
}

/// Random codebook with i.i.d. `p_x` entries. Entry `(m, t)` depends only on
/// `(seed, m, t)`.
pub fn generate_codebook(p_x: &[f64], n: usize, rate: f64, seed: u64) -> Result<Codebook> {
    let num_messages = codebook_size(n, rate)?;
    let mut words = Vec::with_capacity(num_messages * n);
    for m in 0..num_messages {
        let mut rng = stream(seed, DOMAIN_CODEBOOK, m as u64);
        words.extend((0..n).map(|_| sample_index(p_x, &mut rng)));
    }
    Ok(Codebook { n, num_messages, seed, words })
}

/// State, receiver output and echo sequences of one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelOutput {
    pub s: Vec<usize>,
    pub y: Vec<usize>,
    pub z: Vec<usize>,
}

fn sample_channel(instance: &ProblemInstance, x_seq: &[usize], prior: &[f64], rng: &mut impl Rng) -> Result<ChannelOutput> {
    let ch = &instance.channel;
    let (nx, _, _, nz) = ch.dims();
    let mut out = ChannelOutput {
        s: Vec::with_capacity(x_seq.len()),
        y: Vec::with_capacity(x_seq.len()),
        z: Vec::with_capacity(x_seq.len()),
    };
    for &x in x_seq {
        if x >= nx {
            return Err(Error::SymbolOutOfRange { symbol: x, size: nx });
        }
        let s = sample_index(prior, rng);
        let yz = sample_index(ch.joint_row(x, s), rng);
        out.s.push(s);
        out.y.push(yz / nz);
        out.z.push(yz % nz);
    }
    Ok(out)
}

/// Passes `x_seq` through the channel with states from the prior selected
/// by `hypothesis`.
pub fn channel_sample(instance: &ProblemInstance, x_seq: &[usize], hypothesis: Hypothesis, seed: u64) -> Result<ChannelOutput> {
    let prior = hypothesis.prior(instance)?;
    let mut rng = stream(seed, DOMAIN_CHANNEL, 0);
    sample_channel(instance, x_seq, prior, &mut rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decoded {
    pub message: usize,
    /// Every codeword had zero likelihood; `message` is then 0.
    pub all_impossible: bool,
}

/// Maximum-likelihood decoder for a memoryless channel.
#[derive(Clone, Debug)]
pub struct MlDecoder {
    log_w: Kernel,
}

impl MlDecoder {
    pub fn new(p_y_given_x: &Kernel) -> Self {
        let data = p_y_given_x.data().iter().map(|&v| if v > 0.0 { v.log2() } else { f64::NEG_INFINITY }).collect();
        Self {
            log_w: Kernel::new(p_y_given_x.rows(), p_y_given_x.cols(), data).expect("same shape"),
        }
    }

    pub fn decode(&self, y_seq: &[usize], codebook: &Codebook) -> Result<Decoded> {
        if y_seq.len() != codebook.n {
            return Err(Error::LengthMismatch);
        }
        if let Some(&y) = y_seq.iter().find(|&&y| y >= self.log_w.cols()) {
            return Err(Error::SymbolOutOfRange { symbol: y, size: self.log_w.cols() });
        }
        let mut best = (0, f64::NEG_INFINITY);
        for m in 0..codebook.num_messages {
            let mut score = 0.0;
            for (&x, &y) in codebook.word(m).iter().zip(y_seq) {
                score += self.log_w.get(x, y);
                if score == f64::NEG_INFINITY {
                    break;
                }
            }
            if score > best.1 {
                best = (m, score);
            }
        }
        Ok(Decoded {
            message: best.0,
            all_impossible: best.1 == f64::NEG_INFINITY,
        })
    }
}

/// `argmax_m Σ_t log2 p(y_t | word_m[t])`, ties to the smallest index.
pub fn ml_decode(y_seq: &[usize], codebook: &Codebook, p_y_given_x: &Kernel) -> Result<Decoded> {
    MlDecoder::new(p_y_given_x).decode(y_seq, codebook)
}

fn symbol_llr(p: f64, q: f64) -> Option<f64> {
    match (p > 0.0, q > 0.0) {
        (true, true) => Some((p / q).log2()),
        (true, false) => Some(f64::INFINITY),
        (false, true) => Some(f64::NEG_INFINITY),
        (false, false) => None,
    }
}

/// `Σ_t log2(P_{Z|X}(z_t|x_t) / Q_{Z|X}(z_t|x_t))`, with `±∞` when one side
/// has zero mass.
pub fn llr_statistic(x_seq: &[usize], z_seq: &[usize], p_zx: &Kernel, q_zx: &Kernel) -> Result<f64> {
    if x_seq.len() != z_seq.len() {
        return Err(Error::LengthMismatch);
    }
    let mut total = 0.0;
    for (t, (&x, &z)) in x_seq.iter().zip(z_seq).enumerate() {
        let v = symbol_llr(p_zx.get(x, z), q_zx.get(x, z)).ok_or(Error::OutsideBothSupports { position: t })?;
        total += v;
    }
    Ok(total)
}

/// Exact law of the LLR statistic under one hypothesis.
///
/// Finite atoms are sorted by value. Mass on `+∞` (possible under the null)
/// and `−∞` (possible under the alternative) is kept apart from the atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct LlrDistribution {
    atoms: Vec<(f64, f64)>,
    pos_inf_mass: f64,
    neg_inf_mass: f64,
    bin_width: f64,
}

impl LlrDistribution {
    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn pos_inf_mass(&self) -> f64 {
        self.pos_inf_mass
    }

    pub fn neg_inf_mass(&self) -> f64 {
        self.neg_inf_mass
    }

    /// True when some mass sits on an infinite LLR.
    pub fn has_infinite_mass(&self) -> bool {
        self.pos_inf_mass > 0.0 || self.neg_inf_mass > 0.0
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum::<f64>() + self.pos_inf_mass + self.neg_inf_mass
    }

    /// Width below which two LLR values are treated as equal.
    fn tie_width(&self, tau: f64) -> f64 {
        self.bin_width + 1e-12 * tau.abs().max(1.0)
    }
}

type SymbolLaw = (Vec<(f64, f64)>, f64);

fn merge_atoms(mut atoms: Vec<(f64, f64)>, bin_width: f64) -> Vec<(f64, f64)> {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
    let mut start = f64::NEG_INFINITY;
    for (v, m) in atoms {
        match merged.last_mut() {
            Some(last) if v - start <= bin_width => {
                let total = last.1 + m;
                // incremental form: products of tiny masses would underflow
                if total > 0.0 {
                    last.0 += (v - last.0) * (m / total);
                }
                last.1 = total;
            }
            _ => {
                start = v;
                merged.push((v, m));
            }
        }
    }
    merged
}

/// Law of `Σ_t LLR_t` given the input sequence, by iterated convolution of
/// the per-symbol laws with atoms closer than `bin_width` merged.
pub fn exact_llr_law(
    x_seq: &[usize],
    p_zx: &Kernel,
    q_zx: &Kernel,
    hypothesis: Hypothesis,
    bin_width: f64,
) -> Result<LlrDistribution> {
    if bin_width.is_nan() || bin_width < 0.0 {
        return Err(Error::InvalidParameter("bin width must be non-negative".into()));
    }
    let nx = p_zx.rows();
    // per-input symbol laws: finite atoms and mass on an infinite value
    let mut symbol_laws: Vec<Option<SymbolLaw>> = vec![None; nx];
    let mut atoms = vec![(0.0, 1.0)];
    let mut inf_mass = 0.0;
    for &x in x_seq {
        if x >= nx {
            return Err(Error::SymbolOutOfRange { symbol: x, size: nx });
        }
        let (sym, sym_inf) = symbol_laws[x].get_or_insert_with(|| {
            let mut finite = Vec::new();
            let mut inf = 0.0;
            for z in 0..p_zx.cols() {
                let (p, q) = (p_zx.get(x, z), q_zx.get(x, z));
                let mass = match hypothesis {
                    Hypothesis::Null => p,
                    Hypothesis::Alternative => q,
                };
                if mass == 0.0 {
                    continue;
                }
                match symbol_llr(p, q) {
                    Some(v) if v.is_finite() => finite.push((v, mass)),
                    _ => inf += mass,
                }
            }
            (merge_atoms(finite, bin_width), inf)
        });
        let finite_mass: f64 = atoms.iter().map(|a| a.1).sum();
        inf_mass += finite_mass * *sym_inf;
        let mut next = Vec::with_capacity(atoms.len() * sym.len());
        for &(v, m) in &atoms {
            for &(sv, sm) in sym.iter() {
                let mass = m * sm;
                if mass > 0.0 {
                    next.push((v + sv, mass));
                }
            }
        }
        atoms = merge_atoms(next, bin_width);
        if atoms.len() > MAX_LLR_ATOMS {
            return Err(Error::SupportExplosion { limit: MAX_LLR_ATOMS });
        }
    }
    let (pos_inf_mass, neg_inf_mass) = match hypothesis {
        Hypothesis::Null => (inf_mass, 0.0),
        Hypothesis::Alternative => (0.0, inf_mass),
    };
    Ok(LlrDistribution { atoms, pos_inf_mass, neg_inf_mass, bin_width })
}

/// Threshold of the test "decide H0 iff LLR ≥ τ" and its type-I error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub tau: f64,
    pub alpha: f64,
}

/// Largest `τ` among `{−∞} ∪ support` with `Pr_H0[LLR < τ] ≤ alpha_target`.
pub fn np_threshold(law_h0: &LlrDistribution, alpha_target: f64) -> Result<Threshold> {
    if !(alpha_target > 0.0 && alpha_target < 1.0) {
        return Err(Error::InvalidParameter("alpha must lie in (0, 1)".into()));
    }
    let feasible = |alpha: f64| alpha <= alpha_target + 1e-12;
    let mut best = Threshold { tau: f64::NEG_INFINITY, alpha: 0.0 };
    let mut below = law_h0.neg_inf_mass;
    for &(v, m) in &law_h0.atoms {
        if !feasible(below) {
            return Ok(best);
        }
        best = Threshold { tau: v, alpha: below };
        below += m;
    }
    if law_h0.pos_inf_mass > 0.0 && feasible(below) {
        best = Threshold { tau: f64::INFINITY, alpha: below };
    }
    Ok(best)
}

fn accepts_null(llr: f64, tau: f64, tie_width: f64) -> bool {
    tau == f64::NEG_INFINITY || llr == f64::INFINITY || llr >= tau - tie_width
}

/// Type-II error `Pr_H1[LLR ≥ τ]`.
pub fn exact_beta(law_h1: &LlrDistribution, tau: f64) -> f64 {
    if tau == f64::NEG_INFINITY {
        return law_h1.total_mass().min(1.0);
    }
    let width = law_h1.tie_width(tau);
    let finite: f64 = law_h1.atoms.iter().filter(|a| accepts_null(a.0, tau, width)).map(|a| a.1).sum();
    (finite + law_h1.pos_inf_mass).min(1.0)
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp so the interval always contains the point estimate
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulationMode {
    MonteCarlo,
    ExactDp,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    /// A fresh codebook for every trial (random-coding ensemble average).
    #[default]
    PerTrial,
    /// One codebook for all trials.
    Shared,
}

/// Parameters of a rate-distortion experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RdParams {
    pub rate: f64,
    pub distortion: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Codebook input law; defaults to the capacity-distortion achiever at
    /// `distortion`.
    pub p_x: Option<Vec<f64>>,
    pub codebook: CodebookMode,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl RdParams {
    pub fn new(rate: f64, distortion: f64, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            rate,
            distortion,
            n,
            trials,
            seed,
            p_x: None,
            codebook: CodebookMode::PerTrial,
            workers: None,
        }
    }
}

/// Parameters of a hypothesis-testing experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HtParams {
    pub p_x: Vec<f64>,
    pub n: usize,
    pub alpha: f64,
    pub mode: SimulationMode,
    pub bin_width: f64,
    pub trials: usize,
    pub seed: Option<u64>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl HtParams {
    pub fn new(p_x: Vec<f64>, n: usize, alpha: f64, mode: SimulationMode, seed: Option<u64>) -> Self {
        Self {
            p_x,
            n,
            alpha,
            mode,
            bin_width: DEFAULT_BIN_WIDTH,
            trials: 0,
            seed,
            workers: None,
        }
    }
}

/// Flat experiment report. Infinite values serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationReport {
    pub experiment: String,
    pub mode: SimulationMode,
    pub seed: Option<u64>,
    pub n: usize,
    pub trials: usize,
    pub p_x: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distortion: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub codebook: Option<CodebookMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_messages: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_error_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_error_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_error_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excess_distortion_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excess_distortion_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excess_distortion_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder_all_impossible: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_hat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_hat: Option<f64>,
    /// `E_{P_X}[D(P_{Z|X} ‖ Q_{Z|X})]`, the limit of `exponent_hat`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stein_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub llr_infinite_mass: Option<bool>,
}

impl SimulationReport {
    fn empty(experiment: &str, mode: SimulationMode, seed: Option<u64>, n: usize, trials: usize, p_x: Vec<f64>) -> Self {
        Self {
            experiment: experiment.into(),
            mode,
            seed,
            n,
            trials,
            p_x,
            rate: None,
            distortion: None,
            codebook: None,
            num_messages: None,
            p_error_hat: None,
            p_error_lo: None,
            p_error_hi: None,
            excess_distortion_hat: None,
            excess_distortion_lo: None,
            excess_distortion_hi: None,
            decoder_all_impossible: None,
            alpha_target: None,
            bin_width: None,
            threshold: None,
            alpha_hat: None,
            alpha_lo: None,
            alpha_hi: None,
            beta: None,
            beta_lo: None,
            beta_hi: None,
            exponent_hat: None,
            stein_exponent: None,
            llr_infinite_mass: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn run_parallel<T, F>(workers: Option<usize>, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let job = || (0..trials).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        None => job(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(job),
    }
}

fn check_input_pmf(p_x: &[f64], nx: usize) -> Result<()> {
    if p_x.len() != nx {
        return Err(Error::Dimension(format!("input pmf has {} entries, |X| = {nx}", p_x.len())));
    }
    Pmf::checked(p_x.to_vec()).map(|_| ())
}

/// Random coding over the channel, ML decoding at the receiver and the
/// per-symbol estimator at the radar. Counts decoding errors and blocks
/// whose distortion exceeds `params.distortion`.
pub fn run_rd_experiment(instance: &ProblemInstance, params: &RdParams) -> Result<SimulationReport> {
    let distortion = instance.distortion()?;
    let nx = instance.channel.x.len();
    let p_x = match &params.p_x {
        Some(p) => p.clone(),
        None => capacity_under_cost(instance, params.distortion, &SolverConfig::default())?.p_x,
    };
    check_input_pmf(&p_x, nx)?;
    let num_messages = codebook_size(params.n, params.rate)?;

    let (py, _) = split_marginals(&instance.channel);
    let decoder = MlDecoder::new(&mix_over_state(&py, &instance.p_s));
    let estimator = per_input_cost(&instance.channel, &instance.p_s, distortion).estimator;
    let shared = match params.codebook {
        CodebookMode::Shared => Some(generate_codebook(&p_x, params.n, params.rate, params.seed)?),
        CodebookMode::PerTrial => None,
    };

    let outcomes = run_parallel(params.workers, params.trials, |t| {
        let mut rng = stream(params.seed, DOMAIN_RD_TRIAL, t as u64);
        let fresh;
        let codebook = match &shared {
            Some(cb) => cb,
            None => {
                fresh = generate_codebook(&p_x, params.n, params.rate, rng.next_u64())?;
                &fresh
            }
        };
        let message = rng.gen_range(0..codebook.num_messages);
        let x = codebook.word(message);
        let out = sample_channel(instance, x, &instance.p_s, &mut rng)?;
        let decoded = decoder.decode(&out.y, codebook)?;
        let s_hat = apply_estimator(&estimator, x, &out.z)?;
        let dist = sequence_distortion(distortion, &s_hat, &out.s)?;
        Ok((decoded.message != message, dist > params.distortion, decoded.all_impossible))
    })?;

    let errors = outcomes.iter().filter(|o| o.0).count();
    let excess = outcomes.iter().filter(|o| o.1).count();
    let impossible = outcomes.iter().filter(|o| o.2).count();
    let trials = params.trials;
    let (pe_lo, pe_hi) = wilson_interval(errors, trials);
    let (ex_lo, ex_hi) = wilson_interval(excess, trials);
    let frac = |k: usize| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };

    let mut report = SimulationReport::empty("rd", SimulationMode::MonteCarlo, Some(params.seed), params.n, trials, p_x);
    report.rate = Some(params.rate);
    report.distortion = Some(params.distortion);
    report.codebook = Some(params.codebook);
    report.num_messages = Some(num_messages);
    report.p_error_hat = Some(frac(errors));
    report.p_error_lo = Some(pe_lo);
    report.p_error_hi = Some(pe_hi);
    report.excess_distortion_hat = Some(frac(excess));
    report.excess_distortion_lo = Some(ex_lo);
    report.excess_distortion_hi = Some(ex_hi);
    report.decoder_all_impossible = Some(impossible);
    Ok(report)
}

/// Echo laws `(P_{Z|X}, Q_{Z|X})` under the two hypotheses.
pub fn echo_laws(instance: &ProblemInstance) -> Result<(Kernel, Kernel)> {
    let q_s = instance.alternative()?;
    let (_, pz) = split_marginals(&instance.channel);
    Ok((mix_over_state(&pz, &instance.p_s), mix_over_state(&pz, q_s)))
}

/// Deterministic length-`n` input sequence whose type is the `n`-type
/// closest to `p_x` (largest-remainder rounding, ties to the smaller symbol),
/// laid out symbol by symbol.
pub fn type_sequence(p_x: &[f64], n: usize) -> Vec<usize> {
    let scaled: Vec<f64> = p_x.iter().map(|&p| p * n as f64).collect();
    let mut counts: Vec<usize> = scaled.iter().map(|v| v.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..p_x.len()).collect();
    order.sort_by(|&a, &b| (scaled[b] - scaled[b].floor()).total_cmp(&(scaled[a] - scaled[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts.iter().enumerate().flat_map(|(x, &c)| std::iter::repeat_n(x, c)).collect()
}

/// Neyman-Pearson detection of the state distribution at the radar.
///
/// The input sequence is [`type_sequence`]`(p_x, n)`; only its type matters
/// for either law. The threshold always comes from the exact null law.
/// `exact_dp` then computes `β` exactly and needs no seed, while
/// `monte_carlo` estimates `α` and `β` over `trials` seeded blocks.
pub fn run_ht_experiment(instance: &ProblemInstance, params: &HtParams) -> Result<SimulationReport> {
    let q_s = instance.alternative()?.clone();
    check_input_pmf(&params.p_x, instance.channel.x.len())?;
    if params.n == 0 {
        return Err(Error::InvalidParameter("blocklength must be >= 1".into()));
    }
    let (p_zx, q_zx) = echo_laws(instance)?;
    let x_seq = type_sequence(&params.p_x, params.n);
    let law_h0 = exact_llr_law(&x_seq, &p_zx, &q_zx, Hypothesis::Null, params.bin_width)?;
    let threshold = np_threshold(&law_h0, params.alpha)?;
    let n = params.n as f64;

    let mut report = SimulationReport::empty("ht", params.mode, params.seed, params.n, params.trials, params.p_x.clone());
    report.alpha_target = Some(params.alpha);
    report.bin_width = Some(params.bin_width);
    report.threshold = Some(threshold.tau);
    report.stein_exponent = Some(expected_kl(&params.p_x, &p_zx, &q_zx));

    match params.mode {
        SimulationMode::ExactDp => {
            let law_h1 = exact_llr_law(&x_seq, &p_zx, &q_zx, Hypothesis::Alternative, params.bin_width)?;
            let beta = exact_beta(&law_h1, threshold.tau);
            report.alpha_hat = Some(threshold.alpha);
            report.alpha_lo = Some(threshold.alpha);
            report.alpha_hi = Some(threshold.alpha);
            report.beta = Some(beta);
            report.beta_lo = Some(beta);
            report.beta_hi = Some(beta);
            report.exponent_hat = Some(-beta.log2() / n);
            report.llr_infinite_mass = Some(law_h0.has_infinite_mass() || law_h1.has_infinite_mass());
        }
        SimulationMode::MonteCarlo => {
            let seed = params.seed.ok_or_else(|| Error::InvalidParameter("monte carlo mode requires a seed".into()))?;
            let tie = law_h0.tie_width(threshold.tau);
            let null_instance = instance;
            let alt_instance = ProblemInstance { p_s: q_s, ..instance.clone() };
            let outcomes = run_parallel(params.workers, params.trials, |t| {
                let mut rng = stream(seed, DOMAIN_HT_TRIAL, t as u64);
                let under_h0 = sample_channel(null_instance, &x_seq, &null_instance.p_s, &mut rng)?;
                let llr0 = llr_statistic(&x_seq, &under_h0.z, &p_zx, &q_zx)?;
                let under_h1 = sample_channel(&alt_instance, &x_seq, &alt_instance.p_s, &mut rng)?;
                let llr1 = llr_statistic(&x_seq, &under_h1.z, &p_zx, &q_zx)?;
                Ok((
                    !accepts_null(llr0, threshold.tau, tie),
                    accepts_null(llr1, threshold.tau, tie),
                    llr0.is_infinite() || llr1.is_infinite(),
                ))
            })?;
            let trials = params.trials;
            let type1 = outcomes.iter().filter(|o| o.0).count();
            let type2 = outcomes.iter().filter(|o| o.1).count();
            let frac = |k: usize| if trials == 0 { 0.0 } else { k as f64 / trials as f64 };
            let (a_lo, a_hi) = wilson_interval(type1, trials);
            let (b_lo, b_hi) = wilson_interval(type2, trials);
            let beta = frac(type2);
            report.alpha_hat = Some(frac(type1));
            report.alpha_lo = Some(a_lo);
            report.alpha_hi = Some(a_hi);
            report.beta = Some(beta);
            report.beta_lo = Some(b_lo);
            report.beta_hi = Some(b_hi);
            report.exponent_hat = Some(-beta.log2() / n);
            report.llr_infinite_mass = Some(law_h0.has_infinite_mass() || outcomes.iter().any(|o| o.2));
        }
    }
    Ok(report)
}
