use super::mic::mic;
use super::stats::spearman;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransducerBin {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean; 0 for bins with one member.
    pub sem: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transducer {
    pub bins: Vec<TransducerBin>,
    /// `None` below 20 points.
    pub mic: Option<f64>,
    pub spearman: f64,
}

/// `Σ_{i ≥ from} γ^(i - from) · preds[i]`, with `from_step` 1-based.
pub fn discounted_future_sum(preds: &[f64], gamma: f64, from_step: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::InvalidInput(format!("gamma must lie in [0, 1), got {gamma}")));
    }
    if from_step == 0 || from_step > preds.len() {
        return Err(Error::InvalidInput(format!("from_step {from_step} outside 1..={}", preds.len())));
    }
    let mut acc = 0.0;
    let mut w = 1.0;
    for p in &preds[from_step - 1..] {
        acc += w * p;
        w *= gamma;
    }
    Ok(acc)
}

/// Equal-width bins over the activation range with the mean and SEM of the
/// response in each non-empty bin.
pub fn unit_transducer(activation: &[f64], response: &[f64], n_bins: usize) -> Result<Transducer> {
    if activation.len() != response.len() || activation.is_empty() {
        return Err(Error::Shape("activation and response must be non-empty and of equal length".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidInput("n_bins must be positive".into()));
    }
    let mut distinct: Vec<f64> = activation.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let bins = if distinct.len() < n_bins {
        log::warn!("only {} distinct activations; using that many bins instead of {n_bins}", distinct.len());
        distinct.len()
    } else {
        n_bins
    };
    let lo = distinct[0];
    let hi = distinct[distinct.len() - 1];
    let width = (hi - lo) / bins as f64;
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); bins];
    for (&a, &r) in activation.iter().zip(response) {
        let b = if width > 0.0 { (((a - lo) / width) as usize).min(bins - 1) } else { 0 };
        groups[b].push(r);
    }
    let out = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(b, g)| {
            let n = g.len();
            let mean = g.iter().sum::<f64>() / n as f64;
            let sem = if n > 1 {
                (g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
            } else {
                0.0
            };
            TransducerBin { lower: lo + b as f64 * width, upper: lo + (b + 1) as f64 * width, n, mean, sem }
        })
        .collect();
    let mic = if activation.len() >= 20 { Some(mic(activation, response)?.mic) } else { None };
    Ok(Transducer { bins: out, mic, spearman: spearman(activation, response) })
}
