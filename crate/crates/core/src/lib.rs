//! Covert communication over classical-quantum channels.
//!
//! Divergences between finite-dimensional density operators, classification
//! of channel pairs into covertness scaling regimes, square-root-law
//! coefficients, and an exact small-blocklength simulator of the random
//! coding scheme with a square-root-measurement decoder and a Helstrom warden.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod divergence;
pub mod error;
pub mod operator;
pub mod random;
pub mod scaling;
pub mod sim;
pub mod verify;

pub use channel::{classify_scenario, CqChannelPair, Povm, ScenarioClass, ScenarioReport};
pub use divergence::{DivergenceValue, EnsembleDistribution};
pub use error::{Error, Result, Side};
pub use operator::{CMatrix, DensityOperator, HermitianMatrix, MatrixFunction, Projector, C64};
pub use scaling::ScalingReport;
pub use sim::{Codebook, DecoderPovm, TrialReport};
