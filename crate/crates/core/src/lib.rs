//! Hyperparameter optimization as a sequential decision problem.
//!
//! A deep Q-network with an LSTM state encoder, whose initial hidden state is
//! a projection of dataset metafeatures, learns across datasets which grid
//! configuration to evaluate next. Random search and Gaussian-process SMBO
//! serve as baselines; ADTM and average rank score them.

// `!(x > y)` deliberately rejects NaN; index loops mirror the matrix algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod agent;
pub mod baselines;
pub mod cli;
pub mod environment;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod metadata;
pub mod neuralnet;
pub mod scalar;
pub mod trial;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision Q-network used throughout the learner.
pub type QNetwork = neuralnet::QNetworkParams<f64>;
/// Double-precision LSTM parameters.
pub type Lstm = neuralnet::LstmParams<f64>;
/// Double-precision Gaussian-process surrogate.
pub type Gp = baselines::GpSurrogate<f64>;
