use std::path::PathBuf;

use thiserror::Error;

use crate::model::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model:\n{0}")]
    InvalidModel(ValidationReport),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("sequence length mismatch")]
    LengthMismatch,

    #[error("empty sequence")]
    EmptySequence,

    #[error("symbol {symbol} out of range for alphabet of size {size}")]
    SymbolOutOfRange { symbol: usize, size: usize },

    #[error("invalid probability mass function: {0}")]
    InvalidPmf(String),

    #[error("distortion below minimum achievable (minimum is {min})")]
    DistortionInfeasible { requested: f64, min: f64 },

    #[error("exponent target {requested} exceeds maximum achievable exponent {max}")]
    ExponentInfeasible { requested: f64, max: f64 },

    #[error("distortion specification required")]
    MissingDistortion,

    #[error("alternative hypothesis prior required")]
    MissingAlternativePrior,

    #[error("oracle restricted to small alphabets (|X| = {size}, limit {limit})")]
    OracleTooLarge { size: usize, limit: usize },

    #[error("codebook size exceeds the limit of 2^{limit_log2} messages")]
    CodebookTooLarge { limit_log2: u32 },

    #[error("LLR support exceeds {limit} atoms after binning; use a larger bin width")]
    SupportExplosion { limit: usize },

    #[error("symbol outside both supports at position {position}")]
    OutsideBothSupports { position: usize },

    #[error("bound undefined for mu = 0")]
    BoundUndefined,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("failed to read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed model file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by parameters the problem cannot satisfy.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::DistortionInfeasible { .. }
                | Error::ExponentInfeasible { .. }
                | Error::MissingDistortion
                | Error::MissingAlternativePrior
                | Error::CodebookTooLarge { .. }
                | Error::OracleTooLarge { .. }
                | Error::SupportExplosion { .. }
                | Error::InvalidParameter(_)
                | Error::InvalidPmf(_)
                | Error::BoundUndefined
        )
    }
}
