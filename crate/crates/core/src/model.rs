//! Problem instances: alphabets, the channel law `P_{YZ|XS}`, state priors,
//! distortion tables, and the JSON model-file format.
//!
//! Construction only checks that table shapes agree with the alphabets.
//! Numerical invariants (stochastic rows, normalized priors, non-negative
//! distortions) are reported by [`validate_model`] so that a malformed
//! instance can still be inspected. Every other operation in the crate
//! assumes a valid instance.

use std::fmt;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on row sums of stochastic tables and pmfs.
pub const STOCHASTIC_TOL: f64 = 1e-9;

/// Ordered list of symbol names. Index = position.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    /// Alphabet labelled `"0"`, `"1"`, ..., `"size-1"`.
    pub fn indexed(size: usize) -> Self {
        Self::new((0..size).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn first_duplicate(&self) -> Option<&str> {
        self.labels
            .iter()
            .enumerate()
            .find(|(i, l)| self.labels[..*i].contains(l))
            .map(|(_, l)| l.as_str())
    }
}

/// A probability vector. Used for state priors, input distributions and
/// generic pmfs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Pmf(Vec<f64>);

pub type StatePrior = Pmf;
pub type InputDistribution = Pmf;

impl Pmf {
    /// Wraps a vector without checking it. See [`Pmf::checked`].
    pub fn new(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn checked(p: Vec<f64>) -> Result<Self> {
        let pmf = Self(p);
        match pmf.violation() {
            None => Ok(pmf),
            Some(msg) => Err(Error::InvalidPmf(msg)),
        }
    }

    pub fn uniform(size: usize) -> Self {
        Self(vec![1.0 / size as f64; size])
    }

    pub fn point_mass(size: usize, index: usize) -> Self {
        let mut p = vec![0.0; size];
        p[index] = 1.0;
        Self(p)
    }

    /// Bernoulli pmf `(1 - p1, p1)`.
    pub fn bernoulli(p1: f64) -> Self {
        Self(vec![1.0 - p1, p1])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_valid(&self) -> bool {
        self.violation().is_none()
    }

    fn violation(&self) -> Option<String> {
        if self.0.is_empty() {
            return Some("empty".into());
        }
        if let Some(i) = self.0.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Some(format!("entry {i} = {} is negative or not finite", self.0[i]));
        }
        let sum: f64 = self.0.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Some(format!("sum {sum} != 1"));
        }
        None
    }
}

impl Deref for Pmf {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Pmf {
    fn from(p: Vec<f64>) -> Self {
        Self(p)
    }
}

/// Conditional table `P_{O|X}` stored row-major: `rows` conditioning values,
/// `cols` outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Kernel {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "kernel {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged kernel rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Self {
        Self::new(2, 2, vec![1.0 - p, p, p, 1.0 - p]).expect("2x2")
    }

    pub fn identity(size: usize) -> Self {
        let mut data = vec![0.0; size * size];
        for i in 0..size {
            data[i * size + i] = 1.0;
        }
        Self::new(size, size, data).expect("square")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Conditional table `P_{O|XS}` indexed `[x][s][o]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateKernel {
    nx: usize,
    ns: usize,
    no: usize,
    data: Vec<f64>,
}

impl StateKernel {
    pub fn new(nx: usize, ns: usize, no: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nx * ns * no {
            return Err(Error::Dimension(format!(
                "state kernel {nx}x{ns}x{no} needs {} entries, got {}",
                nx * ns * no,
                data.len()
            )));
        }
        Ok(Self { nx, ns, no, data })
    }

    pub fn from_fn(nx: usize, ns: usize, no: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(nx * ns * no);
        for x in 0..nx {
            for s in 0..ns {
                for o in 0..no {
                    data.push(f(x, s, o));
                }
            }
        }
        Self { nx, ns, no, data }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ns(&self) -> usize {
        self.ns
    }

    pub fn outputs(&self) -> usize {
        self.no
    }

    pub fn row(&self, x: usize, s: usize) -> &[f64] {
        let start = (x * self.ns + s) * self.no;
        &self.data[start..start + self.no]
    }

    pub fn get(&self, x: usize, s: usize, o: usize) -> f64 {
        self.data[(x * self.ns + s) * self.no + o]
    }
}

/// Stationary transition law `w[x][s][y][z] = P_{YZ|XS}(y,z|x,s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelModel {
    pub x: Alphabet,
    pub s: Alphabet,
    pub y: Alphabet,
    pub z: Alphabet,
    w: Vec<f64>,
}

impl ChannelModel {
    /// `w` is the flattened `[x][s][y][z]` tensor.
    pub fn new(x: Alphabet, s: Alphabet, y: Alphabet, z: Alphabet, w: Vec<f64>) -> Result<Self> {
        let expected = x.len() * s.len() * y.len() * z.len();
        if w.len() != expected {
            return Err(Error::Dimension(format!(
                "channel tensor needs {expected} entries, got {}",
                w.len()
            )));
        }
        Ok(Self { x, s, y, z, w })
    }

    /// Builds the tensor from `f(x, s, y, z)` over index alphabets.
    pub fn from_fn(
        nx: usize,
        ns: usize,
        ny: usize,
        nz: usize,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut w = Vec::with_capacity(nx * ns * ny * nz);
        for x in 0..nx {
            for s in 0..ns {
                for y in 0..ny {
                    for z in 0..nz {
                        w.push(f(x, s, y, z));
                    }
                }
            }
        }
        Self {
            x: Alphabet::indexed(nx),
            s: Alphabet::indexed(ns),
            y: Alphabet::indexed(ny),
            z: Alphabet::indexed(nz),
            w,
        }
    }

    /// Channel whose outputs are conditionally independent given `(x, s)`.
    pub fn product(py: &StateKernel, pz: &StateKernel) -> Self {
        assert_eq!((py.nx, py.ns), (pz.nx, pz.ns), "conditioning dimensions differ");
        Self::from_fn(py.nx, py.ns, py.no, pz.no, |x, s, y, z| {
            py.get(x, s, y) * pz.get(x, s, z)
        })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.x.len(), self.s.len(), self.y.len(), self.z.len())
    }

    pub fn prob(&self, x: usize, s: usize, y: usize, z: usize) -> f64 {
        let (_, ns, ny, nz) = self.dims();
        self.w[((x * ns + s) * ny + y) * nz + z]
    }

    /// The joint `(y, z)` law for a fixed `(x, s)`, flattened as `y * |Z| + z`.
    pub fn joint_row(&self, x: usize, s: usize) -> &[f64] {
        let (_, ns, ny, nz) = self.dims();
        let start = (x * ns + s) * ny * nz;
        &self.w[start..start + ny * nz]
    }

    pub fn tensor(&self) -> &[f64] {
        &self.w
    }
}

/// Distortion table `d[ŝ][s]` and the reconstruction alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct DistortionSpec {
    pub s_hat: Alphabet,
    states: usize,
    d: Vec<f64>,
}

impl DistortionSpec {
    pub fn new(s_hat: Alphabet, states: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != s_hat.len() * states {
            return Err(Error::Dimension(format!(
                "distortion table needs {}x{states} entries, got {}",
                s_hat.len(),
                d.len()
            )));
        }
        Ok(Self { s_hat, states, d })
    }

    /// Hamming distortion on a common alphabet of `size` symbols.
    pub fn hamming(size: usize) -> Self {
        let mut d = vec![1.0; size * size];
        for i in 0..size {
            d[i * size + i] = 0.0;
        }
        Self {
            s_hat: Alphabet::indexed(size),
            states: size,
            d,
        }
    }

    pub fn reconstructions(&self) -> usize {
        self.s_hat.len()
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn get(&self, s_hat: usize, s: usize) -> f64 {
        self.d[s_hat * self.states + s]
    }

    pub fn max(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            s_hat: self.s_hat.clone(),
            states: self.states,
            d: self.d.iter().map(|v| v * k).collect(),
        }
    }

    pub fn table(&self) -> &[f64] {
        &self.d
    }
}

/// Everything needed by the rate-distortion and rate-exponent problems.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub channel: ChannelModel,
    pub p_s: StatePrior,
    pub q_s: Option<StatePrior>,
    pub distortion: Option<DistortionSpec>,
}

impl ProblemInstance {
    pub fn new(channel: ChannelModel, p_s: StatePrior) -> Self {
        Self {
            channel,
            p_s,
            q_s: None,
            distortion: None,
        }
    }

    pub fn with_alternative(mut self, q_s: StatePrior) -> Self {
        self.q_s = Some(q_s);
        self
    }

    pub fn with_distortion(mut self, distortion: DistortionSpec) -> Self {
        self.distortion = Some(distortion);
        self
    }

    pub fn distortion(&self) -> Result<&DistortionSpec> {
        self.distortion.as_ref().ok_or(Error::MissingDistortion)
    }

    pub fn alternative(&self) -> Result<&StatePrior> {
        self.q_s.as_ref().ok_or(Error::MissingAlternativePrior)
    }

    /// Parses and validates a model file.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_model_file(&self) -> ModelFile {
        let ch = &self.channel;
        let (nx, ns, ny, nz) = ch.dims();
        let channel = (0..nx)
            .map(|x| {
                (0..ns)
                    .map(|s| {
                        (0..ny)
                            .map(|y| (0..nz).map(|z| ch.prob(x, s, y, z)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ModelFile {
            x: ch.x.labels.clone(),
            s: ch.s.labels.clone(),
            y: ch.y.labels.clone(),
            z: ch.z.labels.clone(),
            channel,
            p_s: self.p_s.as_slice().to_vec(),
            q_s: self.q_s.as_ref().map(|q| q.as_slice().to_vec()),
            s_hat: self.distortion.as_ref().map(|d| d.s_hat.labels.clone()),
            distortion: self.distortion.as_ref().map(|d| {
                (0..d.reconstructions())
                    .map(|r| (0..d.states()).map(|s| d.get(r, s)).collect())
                    .collect()
            }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_model_file()).expect("model serializes")
    }
}

/// On-disk JSON layout of a [`ProblemInstance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub x: Vec<String>,
    pub s: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
    pub channel: Vec<Vec<Vec<Vec<f64>>>>,
    pub p_s: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_hat: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<Vec<Vec<f64>>>,
}

impl ModelFile {
    fn shape_report(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let (nx, ns, ny, nz) = (self.x.len(), self.s.len(), self.y.len(), self.z.len());
        if self.channel.len() != nx {
            report.push("channel", format!("outer dimension {} != |x| = {nx}", self.channel.len()));
        }
        for (x, per_x) in self.channel.iter().enumerate() {
            if per_x.len() != ns {
                report.push(format!("channel[{x}]"), format!("length {} != |s| = {ns}", per_x.len()));
            }
            for (s, per_s) in per_x.iter().enumerate() {
                if per_s.len() != ny {
                    report.push(
                        format!("channel[{x}][{s}]"),
                        format!("length {} != |y| = {ny}", per_s.len()),
                    );
                }
                for (y, per_y) in per_s.iter().enumerate() {
                    if per_y.len() != nz {
                        report.push(
                            format!("channel[{x}][{s}][{y}]"),
                            format!("length {} != |z| = {nz}", per_y.len()),
                        );
                    }
                }
            }
        }
        match (&self.s_hat, &self.distortion) {
            (Some(s_hat), Some(d)) => {
                if d.len() != s_hat.len() {
                    report.push("distortion", format!("rows {} != |s_hat| = {}", d.len(), s_hat.len()));
                }
                for (r, row) in d.iter().enumerate() {
                    if row.len() != ns {
                        report.push(format!("distortion[{r}]"), format!("length {} != |s| = {ns}", row.len()));
                    }
                }
            }
            (None, Some(_)) => report.push("s_hat", "required when distortion is given"),
            (Some(_), None) => report.push("distortion", "required when s_hat is given"),
            (None, None) => {}
        }
        report
    }

    /// Checks shapes, builds the instance and runs [`validate_model`].
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let shape = self.shape_report();
        if !shape.is_valid() {
            return Err(Error::InvalidModel(shape));
        }
        let ns = self.s.len();
        let w: Vec<f64> = self.channel.into_iter().flatten().flatten().flatten().collect();
        let channel = ChannelModel::new(
            Alphabet::new(self.x),
            Alphabet::new(self.s),
            Alphabet::new(self.y),
            Alphabet::new(self.z),
            w,
        )?;
        let distortion = match (self.s_hat, self.distortion) {
            (Some(s_hat), Some(d)) => Some(DistortionSpec::new(
                Alphabet::new(s_hat),
                ns,
                d.into_iter().flatten().collect(),
            )?),
            _ => None,
        };
        let instance = ProblemInstance {
            channel,
            p_s: Pmf::new(self.p_s),
            q_s: self.q_s.map(Pmf::new),
            distortion,
        };
        let report = validate_model(&instance);
        if report.is_valid() {
            Ok(instance)
        } else {
            Err(Error::InvalidModel(report))
        }
    }
}

/// One failed invariant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub field: String,
    pub constraint: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.constraint)
    }
}

/// List of violations; empty means valid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, constraint: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            constraint: constraint.into(),
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn check_alphabet(report: &mut ValidationReport, name: &str, alphabet: &Alphabet) {
    if alphabet.is_empty() {
        report.push(name, "alphabet must contain at least one symbol");
    }
    if let Some(dup) = alphabet.first_duplicate() {
        report.push(name, format!("duplicate label {dup:?}"));
    }
}

fn check_prior(report: &mut ValidationReport, name: &str, prior: &Pmf, states: usize) {
    if prior.len() != states {
        report.push(name, format!("length {} != |s| = {states}", prior.len()));
        return;
    }
    if let Some(i) = prior.iter().position(|v| !v.is_finite() || *v < 0.0) {
        report.push(format!("{name}[{i}]"), "probability must be finite and >= 0");
    }
    let sum: f64 = prior.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        report.push(name, format!("prior sum {sum} != 1"));
    }
}

/// Reports every violated invariant of `instance`.
pub fn validate_model(instance: &ProblemInstance) -> ValidationReport {
    let mut report = ValidationReport::default();
    let ch = &instance.channel;
    check_alphabet(&mut report, "x", &ch.x);
    check_alphabet(&mut report, "s", &ch.s);
    check_alphabet(&mut report, "y", &ch.y);
    check_alphabet(&mut report, "z", &ch.z);

    let (nx, ns, _, _) = ch.dims();
    for x in 0..nx {
        for s in 0..ns {
            let row = ch.joint_row(x, s);
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                report.push(
                    format!("channel[{x}][{s}]"),
                    "entries must be finite and >= 0",
                );
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                report.push(
                    format!("channel[{x}][{s}]"),
                    format!("row (x={}, s={}) sums to {sum}, not 1", ch.x.label(x), ch.s.label(s)),
                );
            }
        }
    }

    check_prior(&mut report, "p_s", &instance.p_s, ns);
    if let Some(q_s) = &instance.q_s {
        check_prior(&mut report, "q_s", q_s, ns);
    }

    if let Some(d) = &instance.distortion {
        check_alphabet(&mut report, "s_hat", &d.s_hat);
        if d.states() != ns {
            report.push("distortion", format!("state dimension {} != |s| = {ns}", d.states()));
        }
        if d.table().iter().any(|v| !v.is_finite() || *v < 0.0) {
            report.push("distortion", "entries must be finite and >= 0");
        }
    }
    report
}

/// Coordinate marginals `(P_{Y|XS}, P_{Z|XS})` of the channel law.
pub fn split_marginals(channel: &ChannelModel) -> (StateKernel, StateKernel) {
    let (nx, ns, ny, nz) = channel.dims();
    let py = StateKernel::from_fn(nx, ns, ny, |x, s, y| {
        (0..nz).map(|z| channel.prob(x, s, y, z)).sum()
    });
    let pz = StateKernel::from_fn(nx, ns, nz, |x, s, z| {
        (0..ny).map(|y| channel.prob(x, s, y, z)).sum()
    });
    (py, pz)
}

/// Averages a state-dependent kernel over the prior:
/// `out(o|x) = Σ_s prior(s) cond(o|x,s)`.
///
/// Panics if the prior length differs from the state dimension.
pub fn mix_over_state(cond: &StateKernel, prior: &[f64]) -> Kernel {
    assert_eq!(prior.len(), cond.ns, "prior length must match the state alphabet");
    let mut data = vec![0.0; cond.nx * cond.no];
    for x in 0..cond.nx {
        let out = &mut data[x * cond.no..(x + 1) * cond.no];
        for (s, &ps) in prior.iter().enumerate() {
            if ps == 0.0 {
                continue;
            }
            for (o, v) in cond.row(x, s).iter().enumerate() {
                out[o] += ps * v;
            }
        }
    }
    Kernel {
        rows: cond.nx,
        cols: cond.no,
        data,
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// `Y = X xor S`, `Z = S` on binary alphabets.
    pub fn xor_perfect_echo(p1: f64) -> ProblemInstance {
        let ch = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| {
            f64::from(y == (x ^ s) && z == s)
        });
        ProblemInstance::new(ch, Pmf::bernoulli(p1)).with_distortion(DistortionSpec::hamming(2))
    }

    /// `Y = X`, `Z` uniform and independent of everything.
    pub fn uninformative_echo(p1: f64) -> ProblemInstance {
        let ch = ChannelModel::from_fn(2, 2, 2, 2, |x, _, y, _| if y == x { 0.5 } else { 0.0 });
        ProblemInstance::new(ch, Pmf::bernoulli(p1)).with_distortion(DistortionSpec::hamming(2))
    }

    /// `Y = X`, `Z = S xor N` with `N ~ Ber(flip)`.
    pub fn noisy_echo(p1: f64, flip: f64) -> ProblemInstance {
        let ch = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| {
            let pz = if z == s { 1.0 - flip } else { flip };
            if y == x {
                pz
            } else {
                0.0
            }
        });
        ProblemInstance::new(ch, Pmf::bernoulli(p1)).with_distortion(DistortionSpec::hamming(2))
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn well_formed_instance_is_valid() {
        let inst = xor_perfect_echo(0.1);
        assert!(validate_model(&inst).is_valid());
    }

    #[test]
    fn short_row_is_reported_by_position() {
        let mut inst = xor_perfect_echo(0.1);
        let mut w = inst.channel.tensor().to_vec();
        // row (x=1, s=0) is entries 8..12; its mass sits at (y=1, z=0)
        let idx = 8 + 2;
        assert_eq!(w[idx], 1.0);
        w[idx] = 0.99;
        inst.channel = ChannelModel::new(
            Alphabet::indexed(2),
            Alphabet::indexed(2),
            Alphabet::indexed(2),
            Alphabet::indexed(2),
            w,
        )
        .unwrap();
        let report = validate_model(&inst);
        assert_eq!(report.len(), 1, "{report}");
        assert_eq!(report.violations[0].field, "channel[1][0]");
    }

    #[test]
    fn bad_prior_sum_is_reported() {
        let mut inst = xor_perfect_echo(0.1);
        inst.p_s = Pmf::new(vec![0.5, 0.6]);
        let report = validate_model(&inst);
        assert_eq!(report.len(), 1);
        assert_eq!(report.violations[0].field, "p_s");
        assert!(report.violations[0].constraint.contains("prior sum"));
    }

    #[test]
    fn duplicate_labels_and_negative_distortion_are_reported() {
        let mut inst = xor_perfect_echo(0.1);
        inst.channel.y = Alphabet::new(["a", "a"]);
        inst.distortion = Some(DistortionSpec::new(Alphabet::indexed(2), 2, vec![0.0, -1.0, 1.0, 0.0]).unwrap());
        let fields: Vec<_> = validate_model(&inst).violations.into_iter().map(|v| v.field).collect();
        assert_eq!(fields, vec!["y", "distortion"]);
    }

    #[test]
    fn split_of_product_channel_recovers_factors() {
        let a = StateKernel::from_fn(2, 3, 2, |x, s, y| {
            let p = 0.1 + 0.2 * x as f64 + 0.05 * s as f64;
            if y == 0 { p } else { 1.0 - p }
        });
        let b = StateKernel::from_fn(2, 3, 3, |x, s, z| [0.2, 0.3, 0.5][(z + x + s) % 3]);
        let (py, pz) = split_marginals(&ChannelModel::product(&a, &b));
        for x in 0..2 {
            for s in 0..3 {
                for (o, v) in py.row(x, s).iter().enumerate() {
                    assert_abs_diff_eq!(*v, a.get(x, s, o), epsilon = 1e-15);
                }
                for (o, v) in pz.row(x, s).iter().enumerate() {
                    assert_abs_diff_eq!(*v, b.get(x, s, o), epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn split_of_deterministic_channel() {
        let inst = xor_perfect_echo(0.3);
        let (py, pz) = split_marginals(&inst.channel);
        for x in 0..2 {
            for s in 0..2 {
                assert_eq!(py.get(x, s, x ^ s), 1.0);
                assert_eq!(pz.get(x, s, s), 1.0);
            }
        }
    }

    #[test]
    fn mixing_with_degenerate_prior_selects_state() {
        let inst = noisy_echo(0.5, 0.2);
        let (_, pz) = split_marginals(&inst.channel);
        let mixed = mix_over_state(&pz, &[0.0, 1.0]);
        for x in 0..2 {
            assert_eq!(mixed.row(x), pz.row(x, 1));
        }
    }

    #[test]
    fn mixing_xor_channel_gives_bsc() {
        let inst = xor_perfect_echo(0.1);
        let (py, _) = split_marginals(&inst.channel);
        let mixed = mix_over_state(&py, &inst.p_s);
        assert_abs_diff_eq!(mixed.get(0, 1), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(mixed.get(1, 0), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn mixing_state_independent_kernel_is_identity() {
        let cond = StateKernel::from_fn(3, 2, 2, |x, _, o| if o == 0 { 0.1 * x as f64 } else { 1.0 - 0.1 * x as f64 });
        let mixed = mix_over_state(&cond, &[0.3, 0.7]);
        for x in 0..3 {
            for o in 0..2 {
                assert_abs_diff_eq!(mixed.get(x, o), cond.get(x, 0, o), epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn model_file_rejects_unknown_keys_and_ragged_tensors() {
        let base = xor_perfect_echo(0.1).to_json();
        let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(
            ProblemInstance::from_json_str(&v.to_string()),
            Err(Error::Parse(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&base).unwrap();
        v["channel"][1][0] = serde_json::json!([[1.0, 0.0]]);
        match ProblemInstance::from_json_str(&v.to_string()) {
            Err(Error::InvalidModel(r)) => assert_eq!(r.violations[0].field, "channel[1][0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn model_file_round_trip() {
        let inst = noisy_echo(0.25, 0.2).with_alternative(Pmf::bernoulli(0.75));
        let back = ProblemInstance::from_json_str(&inst.to_json()).unwrap();
        assert_eq!(back, inst);
    }

    fn random_state_kernel(nx: usize, ns: usize, no: usize, raw: &[f64]) -> StateKernel {
        let mut data = raw[..nx * ns * no].to_vec();
        for row in data.chunks_mut(no) {
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
        }
        StateKernel::new(nx, ns, no, data).unwrap()
    }

    proptest! {
        #[test]
        fn mixture_is_row_stochastic_and_linear_in_prior(
            raw in prop::collection::vec(0.01f64..1.0, 27),
            p in prop::collection::vec(0.01f64..1.0, 3),
            q in prop::collection::vec(0.01f64..1.0, 3),
            alpha in 0.0f64..=1.0,
        ) {
            let cond = random_state_kernel(3, 3, 3, &raw);
            let norm = |v: &[f64]| { let s: f64 = v.iter().sum(); v.iter().map(|x| x / s).collect::<Vec<_>>() };
            let (p, q) = (norm(&p), norm(&q));
            let mix: Vec<f64> = p.iter().zip(&q).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
            let (kp, kq, km) = (mix_over_state(&cond, &p), mix_over_state(&cond, &q), mix_over_state(&cond, &mix));
            for x in 0..3 {
                prop_assert!((km.row(x).iter().sum::<f64>() - 1.0).abs() <= 1e-9);
                for o in 0..3 {
                    let lin = alpha * kp.get(x, o) + (1.0 - alpha) * kq.get(x, o);
                    prop_assert!((km.get(x, o) - lin).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn relabeling_inputs_permutes_marginals(raw in prop::collection::vec(0.01f64..1.0, 32)) {
            let mut data = raw.clone();
            for row in data.chunks_mut(4) {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
            let ch = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| data[((x * 2 + s) * 2 + y) * 2 + z]);
            let swapped = ChannelModel::from_fn(2, 2, 2, 2, |x, s, y, z| ch.prob(1 - x, s, y, z));
            let (py, pz) = split_marginals(&ch);
            let (sy, sz) = split_marginals(&swapped);
            for x in 0..2 {
                for s in 0..2 {
                    prop_assert_eq!(py.row(1 - x, s), sy.row(x, s));
                    prop_assert_eq!(pz.row(1 - x, s), sz.row(x, s));
                }
            }
        }
    }
}
