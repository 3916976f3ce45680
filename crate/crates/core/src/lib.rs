//! Incentive-salience simulation and sequence models of future play intensity.
//!
//! The crate is organised bottom-up:
//!
//! * [`data`]: telemetry sequences, targets, scaling and batching.
//! * [`simulator`]: TD-learning agents whose salience drives their sessions.
//! * [`numerics`]: tensors, dense/embedding/LSTM layers, Adam, gradient checks.
//! * [`models`]: lag-1, median, elastic-net, MLP and recurrent predictors.
//! * [`training`]: splits, Hyperband, early-stopped fitting, cross-validation.
//! * [`analysis`]: PCA, neighbour embedding, MIC, k-means and partition profiles.

pub mod analysis;
pub mod data;
pub mod error;
pub mod models;
pub mod numerics;
pub mod simulator;
pub mod training;

pub use error::{Error, Result};
