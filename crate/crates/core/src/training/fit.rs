use super::{derive_seed, split, EarlyStopping, TrainConfig};
use crate::data::{bucket_batches, Dataset, ScalingStats};
use crate::error::{Error, Result};
use crate::models::{MedianModel, Model, ModelKind, ModelSpec, Network, SeqBatch};
use crate::numerics::{Adam, AdamConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: Model,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub best_holdout: f64,
}

/// Incremental trainer for one network: Adam on length-bucketed batches
/// with a fixed holdout.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub net: Network,
    opt: Adam,
    train: Dataset,
    holdout: Vec<SeqBatch>,
    batch_size: usize,
    seed: u64,
    epoch: usize,
}

impl Trainer {
    /// Splits `data` into a training part and a holdout of `cfg.holdout_fraction`;
    /// scaling stats are fitted on all of `data`.
    pub fn new(spec: &ModelSpec, data: &Dataset, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let stats = ScalingStats::fit(data)?;
        let (holdout, train) = split(data, cfg.holdout_fraction, derive_seed(cfg.seed, 1))?;
        let mut spec = spec.clone();
        spec.seed = derive_seed(cfg.seed, 2);
        let net = Network::new(&spec, data.objects.len(), stats)?;
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in holdout.sequences.iter().enumerate() {
            by_len.entry(s.len()).or_default().push(i);
        }
        let holdout = by_len
            .values()
            .flat_map(|idx| idx.chunks(1024).map(|c| c.to_vec()).collect::<Vec<_>>())
            .map(|c| SeqBatch::new(c.iter().map(|&i| &holdout.sequences[i]), &net.stats))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            opt: Adam::new(AdamConfig { lr: spec.lr, ..Default::default() })?,
            net,
            train,
            holdout,
            batch_size: cfg.batch_size,
            seed: derive_seed(cfg.seed, 3),
            epoch: 0,
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// One pass over the training part; returns the cell-weighted mean loss.
    pub fn train_epoch(&mut self) -> Result<f64> {
        self.epoch += 1;
        let batches = bucket_batches(&self.train, self.batch_size, derive_seed(self.seed, self.epoch as u64));
        let (mut total, mut cells) = (0.0, 0usize);
        for b in batches {
            let batch = SeqBatch::new(b.indices.iter().map(|&i| &self.train.sequences[i]), &self.net.stats)?;
            self.net.zero_grad();
            let loss = self.net.loss_and_grad(&batch)?;
            let mut params = self.net.params_mut();
            self.opt.step(&mut params)?;
            total += loss * batch.cells() as f64;
            cells += batch.cells();
        }
        Ok(total / cells.max(1) as f64)
    }

    /// Summed five-target SMAPE on the holdout, weighted by cell count.
    pub fn holdout_loss(&self) -> Result<f64> {
        let (mut total, mut cells) = (0.0, 0usize);
        for b in &self.holdout {
            let out = self.net.infer(b)?;
            total += crate::models::summed_smape(b.y.data(), out.pred.data()) * b.cells() as f64;
            cells += b.cells();
        }
        let loss = total / cells.max(1) as f64;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("non-finite holdout loss at epoch {}", self.epoch)));
        }
        Ok(loss)
    }

    /// Train until `epochs` total epochs have run; returns the holdout loss.
    pub fn train_to(&mut self, epochs: usize) -> Result<f64> {
        while self.epoch < epochs {
            self.train_epoch()?;
        }
        self.holdout_loss()
    }
}

/// Fit any model kind. Networks use early stopping on an internal holdout
/// and return the best-holdout parameters.
pub fn fit(spec: &ModelSpec, train: &Dataset, cfg: &TrainConfig) -> Result<FitOutcome> {
    spec.validate()?;
    match spec.kind {
        ModelKind::Lag1 => Ok(FitOutcome {
            model: Model::Lag1,
            history: vec![],
            best_epoch: 0,
            best_holdout: f64::NAN,
        }),
        ModelKind::Median => Ok(FitOutcome {
            model: Model::Median(MedianModel::fit(train, spec.halflife)?),
            history: vec![],
            best_epoch: 0,
            best_holdout: f64::NAN,
        }),
        _ => {
            let mut trainer = Trainer::new(spec, train, cfg)?;
            let mut stop = EarlyStopping::new(cfg.early_stop_min_delta, cfg.patience);
            let mut best = trainer.net.state();
            let mut history = Vec::new();
            for epoch in 1..=cfg.max_epochs {
                let train_loss = trainer.train_epoch()?;
                let holdout_loss = trainer.holdout_loss()?;
                history.push(EpochLog { epoch, train_loss, holdout_loss });
                let (improved, halt) = stop.update(epoch, holdout_loss);
                if improved {
                    best = trainer.net.state();
                }
                if halt {
                    break;
                }
            }
            let mut net = trainer.net;
            net.load_state(&best)?;
            Ok(FitOutcome {
                model: Model::Net(Box::new(net)),
                history,
                best_epoch: stop.best_epoch(),
                best_holdout: stop.best(),
            })
        }
    }
}
