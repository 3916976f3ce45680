//! Predictors of future interaction intensity.
//!
//! Every model maps a sequence of length `T` to `T − 1` predictions of the
//! five targets, in original units. Neural models see the four scaled
//! session metrics plus a learned object embedding at each step.

mod baselines;
mod batch;
mod bundle;
mod network;
mod smape;
mod spec;

pub use baselines::{ewa, lag1_predict, MedianModel};
pub use batch::SeqBatch;
pub use bundle::{load_bundle, load_encoder, save_bundle, save_encoder};
pub use network::{summed_smape, Encoder, NetOutput, Network};
pub use smape::{smape, smape_grad, smape_term, target_smape};
pub use spec::{ModelKind, ModelSpec};

use crate::data::{Dataset, InteractionSequence, NUM_TARGETS};
use crate::error::Result;

/// A fitted predictor of any kind.
#[derive(Debug, Clone)]
pub enum Model {
    Lag1,
    Median(MedianModel),
    Net(Box<Network>),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Lag1 => ModelKind::Lag1,
            Model::Median(_) => ModelKind::Median,
            Model::Net(n) => n.spec.kind,
        }
    }

    pub fn predict_sequence(&self, seq: &InteractionSequence) -> Result<Vec<[f64; NUM_TARGETS]>> {
        match self {
            Model::Lag1 => lag1_predict(seq),
            Model::Median(m) => m.predict(seq),
            Model::Net(n) => Ok(n.predict_seqs(std::slice::from_ref(seq))?.remove(0)),
        }
    }

    /// Predictions for every sequence, aligned with `data.sequences`.
    pub fn predict(&self, data: &Dataset) -> Result<Vec<Vec<[f64; NUM_TARGETS]>>> {
        match self {
            Model::Net(n) => n.predict_seqs(&data.sequences),
            _ => data.sequences.iter().map(|s| self.predict_sequence(s)).collect(),
        }
    }
}
