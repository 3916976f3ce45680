use super::{derive_seed, Trainer, TrainConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{ModelKind, ModelSpec};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Something that can be trained for a growing number of epochs and scored.
pub trait Trial {
    /// Continue training up to `epochs` in total and return the holdout loss.
    fn run_to(&mut self, epochs: usize) -> Result<f64>;
}

impl Trial for Trainer {
    fn run_to(&mut self, epochs: usize) -> Result<f64> {
        self.train_to(epochs)
    }
}

/// Planned shape of one successive-halving bracket: `(candidates, epochs)` per rung.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub s: usize,
    pub rungs: Vec<(usize, usize)>,
}

/// Bracket plan for one Hyperband iteration with maximum resource `budget`.
pub fn hyperband_brackets(budget: usize, eta: usize) -> Result<Vec<Bracket>> {
    if eta < 2 || budget < eta {
        return Err(Error::Config(format!("hyperband needs eta >= 2 and budget >= eta, got {budget}, {eta}")));
    }
    let mut s_max = 0;
    while eta.pow(s_max as u32 + 1) <= budget {
        s_max += 1;
    }
    let r_max = budget as f64;
    let eta_f = eta as f64;
    Ok((0..=s_max)
        .rev()
        .map(|s| {
            let n = ((s_max + 1) as f64 / (s + 1) as f64 * eta_f.powi(s as i32)).ceil() as usize;
            let r = r_max * eta_f.powi(-(s as i32));
            let rungs = (0..=s)
                .map(|i| {
                    let n_i = (n as f64 * eta_f.powi(-(i as i32))).floor() as usize;
                    let r_i = (r * eta_f.powi(i as i32)).round().max(1.0) as usize;
                    (n_i.max(1), r_i)
                })
                .collect();
            Bracket { s, rungs }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub bracket: usize,
    pub epochs: usize,
    pub candidates: Vec<usize>,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbandReport {
    pub best: usize,
    pub best_loss: f64,
    pub rungs: Vec<Rung>,
}

/// One Hyperband iteration over candidates `0..n_space`. Brackets draw
/// candidates in turn from one shuffled deck, so every candidate is tried
/// when the space is no larger than the total draw. Each sampled
/// candidate is built once by `make` and trained incrementally across rungs.
/// The winner is the lowest loss among the final rungs, which all run the
/// full budget.
pub fn hyperband<T, F>(n_space: usize, budget: usize, eta: usize, seed: u64, make: F) -> Result<HyperbandReport>
where
    T: Trial + Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if n_space == 0 {
        return Err(Error::Config("empty search space".into()));
    }
    let plan = hyperband_brackets(budget, eta)?;
    let mut deck: Vec<usize> = (0..n_space).collect();
    deck.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut deck = deck.into_iter().cycle();
    let mut rungs = Vec::new();
    let mut best: Option<(f64, usize)> = None;
    for bracket in &plan {
        let ids: Vec<usize> = deck.by_ref().take(bracket.rungs[0].0.min(n_space)).collect();
        let mut live: Vec<(usize, T)> = ids.iter().map(|&i| make(i).map(|t| (i, t))).collect::<Result<_>>()?;
        for (level, &(_, epochs)) in bracket.rungs.iter().enumerate() {
            let losses: Vec<f64> = live
                .par_iter_mut()
                .map(|(_, t)| t.run_to(epochs))
                .collect::<Result<_>>()?;
            rungs.push(Rung {
                bracket: bracket.s,
                epochs,
                candidates: live.iter().map(|(i, _)| *i).collect(),
                losses: losses.clone(),
            });
            let mut order: Vec<usize> = (0..live.len()).collect();
            order.sort_by(|&a, &b| losses[a].total_cmp(&losses[b]).then(live[a].0.cmp(&live[b].0)));
            if level + 1 == bracket.rungs.len() {
                let top = order[0];
                let cand = (losses[top], live[top].0);
                if best.map_or(true, |b| cand.0 < b.0 || (cand.0 == b.0 && cand.1 < b.1)) {
                    best = Some(cand);
                }
                break;
            }
            let keep = bracket.rungs[level + 1].0.min(live.len() / eta).max(1);
            let mut slots: Vec<Option<(usize, T)>> = live.into_iter().map(Some).collect();
            live = order[..keep].iter().map(|&k| slots[k].take().unwrap()).collect();
        }
    }
    let (best_loss, best) = best.expect("at least one bracket");
    Ok(HyperbandReport { best, best_loss, rungs })
}

/// Discrete hyperparameter grid shared by every network kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub layers: Vec<usize>,
    pub units: Vec<usize>,
    pub emb_dim: Vec<usize>,
    pub lr: Vec<f64>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            layers: vec![1, 2, 3],
            units: vec![32, 64, 128],
            emb_dim: vec![4, 8, 16],
            lr: vec![1e-3, 3e-4],
            l1: vec![0.0, 1e-4, 1e-3],
            l2: vec![0.0, 1e-4, 1e-3],
        }
    }
}

impl SearchSpace {
    /// Every candidate spec for `kind`. The elastic net trades the trunk
    /// axes (layers, units) for the two penalty strengths.
    pub fn candidates(&self, kind: ModelKind) -> Vec<ModelSpec> {
        let mut out = Vec::new();
        match kind {
            ModelKind::Mlp | ModelKind::Rnn => {
                for &layers in &self.layers {
                    for &units in &self.units {
                        for &emb_dim in &self.emb_dim {
                            for &lr in &self.lr {
                                out.push(ModelSpec { layers, units, emb_dim, lr, ..ModelSpec::new(kind) });
                            }
                        }
                    }
                }
            }
            ModelKind::ElasticNet => {
                for &emb_dim in &self.emb_dim {
                    for &lr in &self.lr {
                        for &l1 in &self.l1 {
                            for &l2 in &self.l2 {
                                out.push(ModelSpec { emb_dim, lr, l1, l2, ..ModelSpec::new(kind) });
                            }
                        }
                    }
                }
            }
            ModelKind::Lag1 | ModelKind::Median => out.push(ModelSpec::new(kind)),
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub spec: ModelSpec,
    pub holdout_loss: f64,
    pub report: Option<HyperbandReport>,
}

/// Hyperband over `space` for one model kind on the tuning set. Baselines
/// have nothing to tune and return their default spec.
pub fn tune(kind: ModelKind, tuning: &Dataset, space: &SearchSpace, budget: usize, eta: usize, cfg: &TrainConfig) -> Result<TuneResult> {
    let cands = space.candidates(kind);
    if !kind.is_neural() {
        return Ok(TuneResult { spec: cands[0].clone(), holdout_loss: f64::NAN, report: None });
    }
    if cands.is_empty() {
        return Err(Error::Config(format!("search space for {kind} is empty")));
    }
    let report = hyperband(cands.len(), budget, eta, derive_seed(cfg.seed, 20), |i| {
        Trainer::new(&cands[i], tuning, cfg)
    })?;
    Ok(TuneResult {
        spec: cands[report.best].clone(),
        holdout_loss: report.best_loss,
        report: Some(report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Synthetic {
        id: usize,
        planted: usize,
        epochs: usize,
    }

    impl Trial for Synthetic {
        fn run_to(&mut self, epochs: usize) -> Result<f64> {
            self.epochs = epochs;
            let base = if self.id == self.planted { 0.5 } else { 1.0 + (self.id * 7919 % 13) as f64 * 0.01 };
            Ok(base + 1.0 / epochs as f64)
        }
    }

    #[test]
    fn budget_nine_bracket_arithmetic() {
        let plan = hyperband_brackets(9, 3).unwrap();
        assert_eq!(plan[0].rungs, vec![(9, 1), (3, 3), (1, 9)]);
        assert_eq!(plan.len(), 3);
        let rep = hyperband(9, 9, 3, 0, |i| Ok(Synthetic { id: i, planted: 99, epochs: 0 })).unwrap();
        let first: Vec<(usize, usize)> =
            rep.rungs.iter().filter(|r| r.bracket == 2).map(|r| (r.candidates.len(), r.epochs)).collect();
        assert_eq!(first, vec![(9, 1), (3, 3), (1, 9)]);
    }

    #[test]
    fn budget_forty_brackets() {
        let plan = hyperband_brackets(40, 3).unwrap();
        let firsts: Vec<(usize, usize)> = plan.iter().map(|b| b.rungs[0]).collect();
        assert_eq!(firsts, vec![(27, 1), (12, 4), (6, 13), (4, 40)]);
        assert!(plan.iter().all(|b| b.rungs.last().unwrap().1 == 40));
    }

    #[test]
    fn planted_optimum_always_wins() {
        for seed in 0..20 {
            for planted in [0, 17, 48] {
                let rep = hyperband(49, 40, 3, seed, |i| Ok(Synthetic { id: i, planted, epochs: 0 })).unwrap();
                assert_eq!(rep.best, planted);
            }
        }
    }

    #[test]
    fn single_candidate_and_errors() {
        let rep = hyperband(1, 40, 3, 1, |i| Ok(Synthetic { id: i, planted: 5, epochs: 0 })).unwrap();
        assert_eq!(rep.best, 0);
        assert!(hyperband(0, 40, 3, 1, |i| Ok(Synthetic { id: i, planted: 0, epochs: 0 })).is_err());
        assert!(hyperband_brackets(2, 3).is_err());
    }

    #[test]
    fn equal_tuning_freedom() {
        let s = SearchSpace::default();
        let n = s.candidates(ModelKind::Rnn).len();
        assert_eq!(n, 54);
        assert_eq!(s.candidates(ModelKind::Mlp).len(), n);
        assert_eq!(s.candidates(ModelKind::ElasticNet).len(), n);
    }
}
