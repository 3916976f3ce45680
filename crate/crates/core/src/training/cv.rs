use super::{derive_seed, fit, TrainConfig};
use crate::data::{nearest_rank, Dataset, NUM_TARGETS, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::models::{smape, ModelKind, ModelSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// SMAPE of one model on one fold, object, timestep and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalCell {
    pub model: ModelKind,
    pub fold: usize,
    pub object: String,
    pub timestep: usize,
    pub target: String,
    pub smape: f64,
}

/// Fold id per sequence. Each object's agents are shuffled and dealt round
/// robin, continuing the deal across objects, so folds differ in size by at
/// most one and every fold sees every sufficiently common object.
pub fn stratified_folds(data: &Dataset, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config("cross-validation needs at least 2 folds".into()));
    }
    if data.len() < k {
        return Err(Error::Data(format!("{} agents cannot fill {k} folds", data.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; data.len()];
    let mut next = 0;
    for mut idx in data.indices_by_object() {
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Training and test datasets for fold `f`.
pub fn fold_datasets(data: &Dataset, folds: &[usize], f: usize) -> (Dataset, Dataset) {
    let train_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] != f).collect();
    let test_idx: Vec<usize> = (0..data.len()).filter(|&i| folds[i] == f).collect();
    (data.subset(&train_idx), data.subset(&test_idx))
}

/// Fold assignment used by [`cross_validate_models`] for a given config.
pub fn cv_folds(data: &Dataset, k: usize, cfg: &TrainConfig) -> Result<Vec<usize>> {
    stratified_folds(data, k, derive_seed(cfg.seed, 10))
}

/// Timesteps evaluated per object: up to the 95th-percentile number of
/// supervised steps, and no further than every test fold reaches.
fn timestep_caps(data: &Dataset, folds: &[usize], k: usize) -> Vec<usize> {
    data.indices_by_object()
        .iter()
        .map(|idx| {
            if idx.is_empty() {
                return 0;
            }
            let mut steps: Vec<f64> = idx.iter().map(|&i| (data.sequences[i].len() - 1) as f64).collect();
            steps.sort_by(f64::total_cmp);
            let p95 = nearest_rank(&steps, 95.0) as usize;
            let mut reach = vec![0; k];
            for &i in idx {
                reach[folds[i]] = reach[folds[i]].max(data.sequences[i].len() - 1);
            }
            p95.min(reach.into_iter().min().unwrap_or(0))
        })
        .collect()
}

/// Cross-validate several specs on identical folds. Cells are ordered by
/// spec, fold, object, timestep and target.
pub fn cross_validate_models(specs: &[ModelSpec], data: &Dataset, k: usize, cfg: &TrainConfig) -> Result<Vec<EvalCell>> {
    let folds = cv_folds(data, k, cfg)?;
    let caps = timestep_caps(data, &folds, k);
    let jobs: Vec<(usize, usize)> = (0..specs.len()).flat_map(|m| (0..k).map(move |f| (m, f))).collect();
    let results: Vec<Vec<EvalCell>> = jobs
        .par_iter()
        .map(|&(m, f)| {
            let (train, test) = fold_datasets(data, &folds, f);
            let fold_cfg = TrainConfig { seed: derive_seed(cfg.seed, 100 + f as u64), ..cfg.clone() };
            let model = fit(&specs[m], &train, &fold_cfg)?.model;
            let preds = model.predict(&test)?;
            let mut cells = Vec::new();
            for (o, &cap) in caps.iter().enumerate() {
                for t in 1..=cap {
                    for target in 0..NUM_TARGETS {
                        let (mut y, mut p) = (Vec::new(), Vec::new());
                        for (seq, pred) in test.sequences.iter().zip(&preds) {
                            if seq.object_id == o && seq.len() > t {
                                let truth = if target == NUM_TARGETS - 1 {
                                    (seq.len() - t) as f64
                                } else {
                                    seq.sessions[t].metrics()[target]
                                };
                                y.push(truth);
                                p.push(pred[t - 1][target]);
                            }
                        }
                        cells.push(EvalCell {
                            model: specs[m].kind,
                            fold: f,
                            object: data.objects[o].clone(),
                            timestep: t,
                            target: TARGET_NAMES[target].to_string(),
                            smape: smape(&y, &p)?,
                        });
                    }
                }
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;
    Ok(results.into_iter().flatten().collect())
}

/// Cross-validate a single spec.
pub fn cross_validate(spec: &ModelSpec, data: &Dataset, k: usize, cfg: &TrainConfig) -> Result<Vec<EvalCell>> {
    cross_validate_models(std::slice::from_ref(spec), data, k, cfg)
}

/// Headered `model,fold,object,timestep,target,smape` rows.
pub fn write_cells<W: Write>(cells: &[EvalCell], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for c in cells {
        out.serialize(c)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cells<R: Read>(r: R) -> Result<Vec<EvalCell>> {
    let mut rd = csv::Reader::from_reader(r);
    let cells = rd.deserialize().collect::<std::result::Result<Vec<EvalCell>, _>>()?;
    if let Some(c) = cells.iter().find(|c| !(0.0..=100.0).contains(&c.smape)) {
        return Err(Error::Data(format!("cell smape {} outside [0, 100]", c.smape)));
    }
    Ok(cells)
}
