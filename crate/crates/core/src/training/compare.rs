use super::EvalCell;
use crate::data::{NUM_TARGETS, TARGET_NAMES};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model: ModelKind,
    /// Mean over folds of the per-fold global SMAPE.
    pub mean_global: f64,
    /// Per-fold global SMAPE: the sum of per-target means divided by five.
    pub per_fold: Vec<f64>,
    /// Mean cell SMAPE per target, in head order.
    pub per_target: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub better: ModelKind,
    pub worse: ModelKind,
    /// `better − worse` per fold.
    pub fold_differences: Vec<f64>,
    pub mean_difference: f64,
    pub better_wins: usize,
    pub worse_wins: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingReport {
    pub folds: Vec<usize>,
    /// Sorted from lowest to highest mean global SMAPE.
    pub ranking: Vec<ModelSummary>,
    pub paired: Vec<PairedComparison>,
    pub expected_order_holds: Option<bool>,
}

impl RankingReport {
    pub fn summary(&self, model: ModelKind) -> Option<&ModelSummary> {
        self.ranking.iter().find(|s| s.model == model)
    }

    pub fn pair(&self, a: ModelKind, b: ModelKind) -> Option<&PairedComparison> {
        self.paired
            .iter()
            .find(|p| (p.better == a && p.worse == b) || (p.better == b && p.worse == a))
    }

    /// Folds in which `a` scored strictly below `b`.
    pub fn fold_wins(&self, a: ModelKind, b: ModelKind) -> Option<usize> {
        let (sa, sb) = (self.summary(a)?, self.summary(b)?);
        Some(sa.per_fold.iter().zip(&sb.per_fold).filter(|(x, y)| x < y).count())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

/// Rank models by mean global SMAPE with paired per-fold comparisons. When
/// `expected` is given, checks that its models appear in strictly
/// increasing order of mean global SMAPE.
pub fn compare_models(cells: &[EvalCell], expected: Option<&[ModelKind]>) -> Result<RankingReport> {
    if cells.is_empty() {
        return Err(Error::Data("no evaluation cells".into()));
    }
    // model -> fold -> target -> smape values
    let mut acc: BTreeMap<ModelKind, BTreeMap<usize, Vec<Vec<f64>>>> = BTreeMap::new();
    for c in cells {
        let t = TARGET_NAMES
            .iter()
            .position(|n| *n == c.target)
            .ok_or_else(|| Error::Data(format!("unknown target `{}`", c.target)))?;
        acc.entry(c.model)
            .or_default()
            .entry(c.fold)
            .or_insert_with(|| vec![Vec::new(); NUM_TARGETS])[t]
            .push(c.smape);
    }
    let folds: BTreeSet<usize> = acc.values().next().unwrap().keys().copied().collect();
    if acc.values().any(|f| f.keys().copied().collect::<BTreeSet<_>>() != folds) {
        return Err(Error::Data("models were evaluated on different fold sets".into()));
    }
    let mut ranking: Vec<ModelSummary> = acc
        .iter()
        .map(|(&model, by_fold)| {
            let per_fold: Vec<f64> = by_fold
                .values()
                .map(|targets| targets.iter().map(|v| mean(v)).sum::<f64>() / NUM_TARGETS as f64)
                .collect();
            let per_target = (0..NUM_TARGETS)
                .map(|t| {
                    let all: Vec<f64> = by_fold.values().flat_map(|v| v[t].iter().copied()).collect();
                    mean(&all)
                })
                .collect();
            ModelSummary { model, mean_global: mean(&per_fold), per_fold, per_target }
        })
        .collect();
    ranking.sort_by(|a, b| a.mean_global.total_cmp(&b.mean_global).then(a.model.cmp(&b.model)));
    let mut paired = Vec::new();
    for i in 0..ranking.len() {
        for j in i + 1..ranking.len() {
            let (a, b) = (&ranking[i], &ranking[j]);
            let d: Vec<f64> = a.per_fold.iter().zip(&b.per_fold).map(|(x, y)| x - y).collect();
            paired.push(PairedComparison {
                better: a.model,
                worse: b.model,
                mean_difference: mean(&d),
                better_wins: d.iter().filter(|&&x| x < 0.0).count(),
                worse_wins: d.iter().filter(|&&x| x > 0.0).count(),
                ties: d.iter().filter(|&&x| x == 0.0).count(),
                fold_differences: d,
            });
        }
    }
    let expected_order_holds = expected.map(|order| {
        let score: Vec<Option<f64>> = order
            .iter()
            .map(|m| ranking.iter().find(|s| s.model == *m).map(|s| s.mean_global))
            .collect();
        score.iter().all(Option::is_some) && score.windows(2).all(|w| w[0].unwrap() < w[1].unwrap())
    });
    Ok(RankingReport {
        folds: folds.into_iter().collect(),
        ranking,
        paired,
        expected_order_holds,
    })
}
