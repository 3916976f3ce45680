//! Splitting, hyperparameter search, early-stopped training and
//! cross-validated evaluation.

mod compare;
mod cv;
mod early_stop;
mod fit;
mod hyperband;
mod split;

pub use compare::{compare_models, ModelSummary, PairedComparison, RankingReport};
pub use cv::{
    cross_validate, cross_validate_models, cv_folds, fold_datasets, read_cells, stratified_folds, write_cells, EvalCell,
};
pub use early_stop::EarlyStopping;
pub use fit::{fit, EpochLog, FitOutcome, Trainer};
pub use hyperband::{hyperband, hyperband_brackets, tune, Bracket, HyperbandReport, Rung, SearchSpace, Trial, TuneResult};
pub use split::split;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub early_stop_min_delta: f64,
    pub patience: usize,
    pub holdout_fraction: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 200,
            early_stop_min_delta: 1e-4,
            patience: 10,
            holdout_fraction: 0.2,
            batch_size: 256,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config("holdout_fraction must lie in (0, 1)".into()));
        }
        if self.patience == 0 || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::Config("patience, batch_size and max_epochs must be at least 1".into()));
        }
        if !(self.early_stop_min_delta >= 0.0) {
            return Err(Error::Config("early_stop_min_delta must be non-negative".into()));
        }
        Ok(())
    }
}

/// Independent child seed (splitmix64 of the pair).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(0x632b_e59b_d9b4_e019);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
