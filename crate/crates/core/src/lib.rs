//! Finite-alphabet toolkit for memoryless bi-static integrated sensing and
//! communication (ISAC).
//!
//! A transmitter sends a message over a state-dependent memoryless channel
//! `P_{YZ|XS}`. The receiver sees `Y`; a radar co-located with the
//! transmitter sees the backscatter `Z` and knows the inputs `X`. This crate
//! computes:
//!
//! * the capacity-distortion frontier `C(D)` together with the optimal
//!   per-symbol state estimator ([`sensing`], [`frontier`]);
//! * the rate versus Stein-exponent frontier for a binary hypothesis on the
//!   state distribution ([`infomeasures`], [`frontier`]);
//! * joint types, strong typicality and the typical-set mass bound
//!   ([`typeclasses`]);
//! * Monte-Carlo and exact verification of the achievable side: random
//!   coding with maximum-likelihood decoding and a Neyman-Pearson detector
//!   ([`simulator`]).
//!
//! All information quantities are in bits.

pub mod cli;
pub mod error;
pub mod frontier;
pub mod infomeasures;
pub mod model;
pub mod sensing;
pub mod simulator;
pub mod typeclasses;

pub use error::{Error, Result};
pub use frontier::{FrontierPoint, SolverConfig};
pub use model::{
    Alphabet, ChannelModel, DistortionSpec, InputDistribution, Kernel, Pmf, ProblemInstance,
    StateKernel, StatePrior, ValidationReport,
};
