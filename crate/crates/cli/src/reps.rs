//! Per-step encoder representations with their companions: agent ids,
//! object ids, dataset indices, discounted future predictions and (for
//! simulated data) the ground-truth latent value.

use salience::analysis::discounted_future_sum;
use salience::data::{Dataset, TARGET_NAMES};
use salience::models::{Encoder, Network};
use salience::numerics::serialize::{load_tensors, save_tensors};
use salience::numerics::Tensor;
use salience::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct StepReps {
    /// 1-based: the representation after observing `step` sessions.
    pub step: usize,
    pub agent_ids: Vec<u64>,
    pub objects: Vec<usize>,
    /// Positions in the dataset the representations were computed from.
    pub indices: Vec<usize>,
    pub reps: Vec<Vec<f64>>,
    pub discounted: Vec<f64>,
    pub latent: Option<Vec<f64>>,
}

/// Representations for every step `1..=T-1`, grouped by step.
pub fn step_representations(net: &Network, enc: &Encoder, data: &Dataset, target: &str, gamma: f64) -> Result<Vec<StepReps>> {
    let ti = TARGET_NAMES
        .iter()
        .position(|t| *t == target)
        .ok_or_else(|| Error::Config(format!("unknown target {target:?}")))?;
    let reps = enc.encode_seqs(&data.sequences)?;
    let preds = net.predict_seqs(&data.sequences)?;
    let max_steps = reps.iter().map(|r| r.shape()[0]).max().unwrap_or(0);
    let with_latent = data.sequences.iter().all(|s| s.latent_trace.is_some());
    let mut out: Vec<StepReps> = (1..=max_steps)
        .map(|step| StepReps {
            step,
            agent_ids: Vec::new(),
            objects: Vec::new(),
            indices: Vec::new(),
            reps: Vec::new(),
            discounted: Vec::new(),
            latent: with_latent.then(Vec::new),
        })
        .collect();
    for (i, (seq, r)) in data.sequences.iter().zip(&reps).enumerate() {
        let series: Vec<f64> = preds[i].iter().map(|p| p[ti]).collect();
        for (t, slot) in out.iter_mut().enumerate().take(r.shape()[0]) {
            slot.agent_ids.push(seq.agent_id);
            slot.objects.push(seq.object_id);
            slot.indices.push(i);
            slot.reps.push(r.row(t).to_vec());
            slot.discounted.push(discounted_future_sum(&series, gamma, t + 1)?);
            if let (Some(l), Some(trace)) = (slot.latent.as_mut(), &seq.latent_trace) {
                l.push(trace[t]);
            }
        }
    }
    Ok(out)
}

fn vector(v: impl Iterator<Item = f64>) -> Tensor {
    let d: Vec<f64> = v.collect();
    Tensor::from_vec(&[d.len()], d).expect("1-d tensor")
}

pub fn save_reps(path: &Path, steps: &[StepReps]) -> Result<()> {
    let mut owned: Vec<(String, Tensor)> = Vec::new();
    for s in steps {
        let h = s.reps.first().map_or(0, |r| r.len());
        let p = format!("step{}", s.step);
        owned.push((format!("{p}.agent"), vector(s.agent_ids.iter().map(|&a| a as f64))));
        owned.push((format!("{p}.object"), vector(s.objects.iter().map(|&o| o as f64))));
        owned.push((format!("{p}.index"), vector(s.indices.iter().map(|&o| o as f64))));
        owned.push((format!("{p}.rep"), Tensor::from_vec(&[s.reps.len(), h], s.reps.concat())?));
        owned.push((format!("{p}.discounted"), vector(s.discounted.iter().copied())));
        if let Some(l) = &s.latent {
            owned.push((format!("{p}.latent"), vector(l.iter().copied())));
        }
    }
    let entries: Vec<(&str, &Tensor)> = owned.iter().map(|(n, t)| (n.as_str(), t)).collect();
    save_tensors(path, &entries)
}

pub fn load_reps(path: &Path) -> Result<Vec<StepReps>> {
    let map: BTreeMap<String, Tensor> = load_tensors(path)?.into_iter().collect();
    let get = |name: &str| map.get(name).ok_or_else(|| Error::Data(format!("representation file lacks {name}")));
    let mut out = Vec::new();
    for step in 1.. {
        let p = format!("step{step}");
        if !map.contains_key(&format!("{p}.agent")) {
            break;
        }
        let rep = get(&format!("{p}.rep"))?;
        let h = rep.shape()[1];
        out.push(StepReps {
            step,
            agent_ids: get(&format!("{p}.agent"))?.data().iter().map(|&v| v as u64).collect(),
            objects: get(&format!("{p}.object"))?.data().iter().map(|&v| v as usize).collect(),
            indices: get(&format!("{p}.index"))?.data().iter().map(|&v| v as usize).collect(),
            reps: rep.data().chunks(h.max(1)).map(<[f64]>::to_vec).collect(),
            discounted: get(&format!("{p}.discounted"))?.data().to_vec(),
            latent: map.get(&format!("{p}.latent")).map(|t| t.data().to_vec()),
        });
    }
    if out.is_empty() {
        return Err(Error::Data("representation file holds no steps".into()));
    }
    Ok(out)
}
