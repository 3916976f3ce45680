use super::batch::SeqBatch;
use super::smape::{smape_grad, smape_term};
use super::spec::{ModelKind, ModelSpec};
use crate::data::{InteractionSequence, ScalingStats, NUM_METRICS, NUM_TARGETS};
use crate::error::{Error, Result};
use crate::numerics::{layer_rng, Activation, Dense, Embedding, Lstm, Param, Tensor};
use crate::simulator::softplus;
use std::collections::BTreeMap;

const COUNT: usize = NUM_TARGETS - 1;

#[derive(Debug, Clone)]
enum Trunk {
    Linear,
    Dense(Vec<Dense>),
    Lstm(Vec<Lstm>),
}

/// Predictions in original units and, for MLP/RNN, the shared representation.
#[derive(Debug, Clone, PartialEq)]
pub struct NetOutput {
    /// `[batch, steps, 5]`.
    pub pred: Tensor,
    /// `[batch, steps, units]`.
    pub repr: Option<Tensor>,
}

#[derive(Debug, Clone)]
struct NetCache {
    batch: usize,
    steps: usize,
    z: Vec<f64>,
}

/// The layers up to and including the shared representation.
#[derive(Debug, Clone)]
pub struct Encoder {
    pub spec: ModelSpec,
    pub stats: ScalingStats,
    embedding: Embedding,
    trunk: Trunk,
    repr: Dense,
}

/// ENet, MLP or RNN: object embedding and scaled metrics in, five heads out.
#[derive(Debug, Clone)]
pub struct Network {
    pub spec: ModelSpec,
    pub stats: ScalingStats,
    embedding: Embedding,
    trunk: Trunk,
    repr: Option<Dense>,
    head: Dense,
    cache: Option<NetCache>,
}

fn step_ids(batch: &SeqBatch) -> Vec<usize> {
    let s = batch.steps;
    batch.objects.iter().flat_map(|&o| std::iter::repeat(o).take(s)).collect()
}

/// Scaled metrics followed by the object embedding, `[batch, steps, 4 + e]`.
fn assemble(emb: &Tensor, batch: &SeqBatch) -> Result<Tensor> {
    let (b, s) = (batch.batch(), batch.steps);
    let e = emb.last_dim();
    let width = NUM_METRICS + e;
    let mut x = Vec::with_capacity(b * s * width);
    for r in 0..b * s {
        x.extend_from_slice(batch.x.row(r));
        x.extend_from_slice(emb.row(r));
    }
    Tensor::from_vec(&[b, s, width], x)
}

fn trunk_infer(trunk: &Trunk, x: Tensor) -> Result<Tensor> {
    match trunk {
        Trunk::Linear => Ok(x),
        Trunk::Dense(layers) => layers.iter().try_fold(x, |h, l| l.infer(&h)),
        Trunk::Lstm(layers) => layers.iter().try_fold(x, |h, l| Ok(l.infer(&h)?.0)),
    }
}

fn trunk_forward(trunk: &mut Trunk, x: Tensor) -> Result<Tensor> {
    match trunk {
        Trunk::Linear => Ok(x),
        Trunk::Dense(layers) => layers.iter_mut().try_fold(x, |h, l| l.forward(&h)),
        Trunk::Lstm(layers) => layers.iter_mut().try_fold(x, |h, l| Ok(l.forward(&h)?.0)),
    }
}

fn trunk_backward(trunk: &mut Trunk, g: Tensor) -> Result<Tensor> {
    match trunk {
        Trunk::Linear => Ok(g),
        Trunk::Dense(layers) => layers.iter_mut().rev().try_fold(g, |g, l| l.backward(&g)),
        Trunk::Lstm(layers) => layers.iter_mut().rev().try_fold(g, |g, l| l.backward(&g)),
    }
}

fn trunk_params(trunk: &Trunk) -> Vec<&Param> {
    match trunk {
        Trunk::Linear => vec![],
        Trunk::Dense(l) => l.iter().flat_map(|l| l.params()).collect(),
        Trunk::Lstm(l) => l.iter().flat_map(|l| l.params()).collect(),
    }
}

fn trunk_params_mut(trunk: &mut Trunk) -> Vec<&mut Param> {
    match trunk {
        Trunk::Linear => vec![],
        Trunk::Dense(l) => l.iter_mut().flat_map(|l| l.params_mut()).collect(),
        Trunk::Lstm(l) => l.iter_mut().flat_map(|l| l.params_mut()).collect(),
    }
}

fn split_embedding_grad(g: &Tensor, e: usize) -> Result<Tensor> {
    let width = NUM_METRICS + e;
    let rows = g.len() / width;
    let mut out = Vec::with_capacity(rows * e);
    for r in 0..rows {
        out.extend_from_slice(&g.data()[r * width + NUM_METRICS..(r + 1) * width]);
    }
    Tensor::from_vec(&[rows, e], out)
}

impl Network {
    /// Freshly initialised network for `vocab` objects.
    pub fn new(spec: &ModelSpec, vocab: usize, stats: ScalingStats) -> Result<Self> {
        spec.validate()?;
        if !spec.kind.is_neural() {
            return Err(Error::Config(format!("{} is not a network model", spec.kind)));
        }
        if vocab == 0 {
            return Err(Error::Config("object vocabulary is empty".into()));
        }
        let mut rng = layer_rng(spec.seed);
        let embedding = Embedding::new("embedding", vocab, spec.emb_dim, &mut rng);
        let input = NUM_METRICS + spec.emb_dim;
        let u = spec.units;
        let (trunk, repr, head_in) = match spec.kind {
            ModelKind::ElasticNet => (Trunk::Linear, None, input),
            ModelKind::Mlp => {
                let layers = (0..spec.layers)
                    .map(|i| Dense::new(&format!("dense{i}"), if i == 0 { input } else { u }, u, Activation::Relu, &mut rng))
                    .collect();
                (Trunk::Dense(layers), Some(Dense::new("repr", u, u, Activation::Relu, &mut rng)), u)
            }
            ModelKind::Rnn => {
                let layers = (0..spec.layers)
                    .map(|i| Lstm::new(&format!("lstm{i}"), if i == 0 { input } else { u }, u, &mut rng))
                    .collect();
                (Trunk::Lstm(layers), Some(Dense::new("repr", u, u, Activation::Relu, &mut rng)), u)
            }
            _ => unreachable!(),
        };
        let head = Dense::new("head", head_in, NUM_TARGETS, Activation::Linear, &mut rng);
        Ok(Self {
            spec: spec.clone(),
            stats,
            embedding,
            trunk,
            repr,
            head,
            cache: None,
        })
    }

    pub fn vocab(&self) -> usize {
        self.embedding.vocab()
    }

    fn to_original(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, &v)| {
                let k = i % NUM_TARGETS;
                let unit = if k == COUNT { softplus(v) } else { v };
                self.stats.min[k] + unit * self.stats.range(k)
            })
            .collect()
    }

    fn check_objects(&self, batch: &SeqBatch) -> Result<()> {
        if let Some(&o) = batch.objects.iter().find(|&&o| o >= self.vocab()) {
            return Err(Error::InvalidInput(format!("unknown object id {o}")));
        }
        Ok(())
    }

    pub fn infer(&self, batch: &SeqBatch) -> Result<NetOutput> {
        self.check_objects(batch)?;
        let x = assemble(&self.embedding.infer(&step_ids(batch))?, batch)?;
        let h = trunk_infer(&self.trunk, x)?;
        let (r, top) = match &self.repr {
            Some(d) => {
                let r = d.infer(&h)?;
                (Some(r.clone()), r)
            }
            None => (None, h),
        };
        let z = self.head.infer(&top)?;
        let pred = Tensor::from_vec(z.shape(), self.to_original(z.data()))?;
        Ok(NetOutput { pred, repr: r })
    }

    pub fn forward(&mut self, batch: &SeqBatch) -> Result<NetOutput> {
        self.check_objects(batch)?;
        let x = assemble(&self.embedding.forward(&step_ids(batch))?, batch)?;
        let h = trunk_forward(&mut self.trunk, x)?;
        let (r, top) = match self.repr.as_mut() {
            Some(d) => {
                let r = d.forward(&h)?;
                (Some(r.clone()), r)
            }
            None => (None, h),
        };
        let z = self.head.forward(&top)?;
        let pred = Tensor::from_vec(z.shape(), self.to_original(z.data()))?;
        self.cache = Some(NetCache {
            batch: batch.batch(),
            steps: batch.steps,
            z: z.into_data(),
        });
        Ok(NetOutput { pred, repr: r })
    }

    /// Backward pass from a gradient on predictions in original units.
    pub fn backward(&mut self, grad_pred: &Tensor) -> Result<()> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::InvalidInput("network backward before forward".into()))?;
        if grad_pred.shape() != [cache.batch, cache.steps, NUM_TARGETS] {
            return Err(Error::Shape("prediction gradient has wrong shape".into()));
        }
        let dz: Vec<f64> = grad_pred
            .data()
            .iter()
            .zip(&cache.z)
            .enumerate()
            .map(|(i, (&g, &z))| {
                let k = i % NUM_TARGETS;
                let d = g * self.stats.range(k);
                if k == COUNT {
                    d * crate::numerics::sigmoid(z)
                } else {
                    d
                }
            })
            .collect();
        let dz = Tensor::from_vec(grad_pred.shape(), dz)?;
        let mut g = self.head.backward(&dz)?;
        if let Some(d) = self.repr.as_mut() {
            g = d.backward(&g)?;
        }
        let g = trunk_backward(&mut self.trunk, g)?;
        let ge = split_embedding_grad(&g, self.embedding.dim())?;
        self.embedding.backward(&ge)
    }

    /// Elastic-net penalty on the linear weights (zero for other kinds).
    pub fn penalty(&self) -> f64 {
        if self.spec.kind != ModelKind::ElasticNet {
            return 0.0;
        }
        let w = self.head.w.value.data();
        self.spec.l1 * w.iter().map(|v| v.abs()).sum::<f64>() + self.spec.l2 * w.iter().map(|v| v * v).sum::<f64>()
    }

    fn penalty_grad(&mut self) {
        if self.spec.kind != ModelKind::ElasticNet {
            return;
        }
        let (l1, l2) = (self.spec.l1, self.spec.l2);
        let w = self.head.w.value.data().to_vec();
        for (g, v) in self.head.w.grad.data_mut().iter_mut().zip(w) {
            *g += l1 * v.signum() * (v != 0.0) as u8 as f64 + 2.0 * l2 * v;
        }
    }

    /// Summed per-target SMAPE (each `100 · mean`) plus any penalty.
    pub fn loss(&self, batch: &SeqBatch) -> Result<f64> {
        let out = self.infer(batch)?;
        Ok(summed_smape(batch.y.data(), out.pred.data()) + self.penalty())
    }

    /// [`Network::loss`] with gradients accumulated into the parameters.
    pub fn loss_and_grad(&mut self, batch: &SeqBatch) -> Result<f64> {
        let out = self.forward(batch)?;
        let y = batch.y.data();
        let p = out.pred.data();
        let n = batch.cells().max(1) as f64;
        let g: Vec<f64> = y.iter().zip(p).map(|(&a, &b)| 100.0 * smape_grad(a, b) / n).collect();
        self.backward(&Tensor::from_vec(out.pred.shape(), g)?)?;
        self.penalty_grad();
        let loss = summed_smape(y, p) + self.penalty();
        if !loss.is_finite() {
            return Err(Error::Numerical("non-finite training loss".into()));
        }
        Ok(loss)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.embedding.table];
        v.extend(trunk_params(&self.trunk));
        if let Some(d) = &self.repr {
            v.extend(d.params());
        }
        v.extend(self.head.params());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.embedding.table];
        v.extend(trunk_params_mut(&mut self.trunk));
        if let Some(d) = self.repr.as_mut() {
            v.extend(d.params_mut());
        }
        v.extend(self.head.params_mut());
        v
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.zero_grad());
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Closed-form parameter count for a spec and vocabulary.
    pub fn param_count(spec: &ModelSpec, vocab: usize) -> usize {
        let (e, u, l) = (spec.emb_dim, spec.units, spec.layers);
        let input = NUM_METRICS + e;
        let emb = vocab * e;
        let heads = |w: usize| w * NUM_TARGETS + NUM_TARGETS;
        let repr = u * u + u;
        match spec.kind {
            ModelKind::ElasticNet => emb + heads(input),
            ModelKind::Mlp => emb + (input * u + u) + (l - 1) * (u * u + u) + repr + heads(u),
            ModelKind::Rnn => emb + 4 * u * (input + u + 1) + (l - 1) * 4 * u * (2 * u + 1) + repr + heads(u),
            ModelKind::Lag1 | ModelKind::Median => 0,
        }
    }

    /// Values of every parameter by name.
    pub fn state(&self) -> BTreeMap<String, Tensor> {
        self.params().into_iter().map(|p| (p.name.clone(), p.value.clone())).collect()
    }

    /// Overwrite parameters from a [`Network::state`] snapshot.
    pub fn load_state(&mut self, state: &BTreeMap<String, Tensor>) -> Result<()> {
        for p in self.params_mut() {
            let v = state
                .get(&p.name)
                .ok_or_else(|| Error::Data(format!("missing parameter {}", p.name)))?;
            if v.shape() != p.value.shape() {
                return Err(Error::Shape(format!(
                    "parameter {} has shape {:?}, stored {:?}",
                    p.name,
                    p.value.shape(),
                    v.shape()
                )));
            }
            p.value = v.clone();
        }
        Ok(())
    }

    /// Predictions for each sequence, grouped internally by length.
    pub fn predict_seqs(&self, seqs: &[InteractionSequence]) -> Result<Vec<Vec<[f64; NUM_TARGETS]>>> {
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in seqs.iter().enumerate() {
            by_len.entry(s.len()).or_default().push(i);
        }
        let mut out = vec![Vec::new(); seqs.len()];
        for idx in by_len.values() {
            for chunk in idx.chunks(512) {
                let batch = SeqBatch::new(chunk.iter().map(|&i| &seqs[i]), &self.stats)?;
                let pred = self.infer(&batch)?.pred;
                for (b, &i) in chunk.iter().enumerate() {
                    out[i] = (0..batch.steps)
                        .map(|t| {
                            let mut row = [0.0; NUM_TARGETS];
                            row.copy_from_slice(pred.row(b * batch.steps + t));
                            row
                        })
                        .collect();
                }
            }
        }
        Ok(out)
    }

    /// The sub-network producing the shared representation.
    pub fn encoder(&self) -> Result<Encoder> {
        match &self.repr {
            Some(repr) => Ok(Encoder {
                spec: self.spec.clone(),
                stats: self.stats.clone(),
                embedding: self.embedding.clone(),
                trunk: self.trunk.clone(),
                repr: repr.clone(),
            }),
            None => Err(Error::InvalidInput(format!("{} has no representation layer", self.spec.kind))),
        }
    }
}

/// Σ over targets of `100 · mean` SMAPE for interleaved `[n, 5]` rows.
pub fn summed_smape(y: &[f64], p: &[f64]) -> f64 {
    let n = (y.len() / NUM_TARGETS).max(1) as f64;
    100.0 * y.iter().zip(p).map(|(&a, &b)| smape_term(a, b)).sum::<f64>() / n
}

impl Encoder {
    pub fn width(&self) -> usize {
        self.repr.output_dim()
    }

    pub fn infer(&self, batch: &SeqBatch) -> Result<Tensor> {
        if let Some(&o) = batch.objects.iter().find(|&&o| o >= self.embedding.vocab()) {
            return Err(Error::InvalidInput(format!("unknown object id {o}")));
        }
        let x = assemble(&self.embedding.infer(&step_ids(batch))?, batch)?;
        let h = trunk_infer(&self.trunk, x)?;
        self.repr.infer(&h)
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = vec![&self.embedding.table];
        v.extend(trunk_params(&self.trunk));
        v.extend(self.repr.params());
        v
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub(crate) fn from_network(mut net: Network) -> Result<Self> {
        let repr = net
            .repr
            .take()
            .ok_or_else(|| Error::InvalidInput(format!("{} has no representation layer", net.spec.kind)))?;
        Ok(Self {
            spec: net.spec,
            stats: net.stats,
            embedding: net.embedding,
            trunk: net.trunk,
            repr,
        })
    }

    /// Representations at every step of every sequence, `[steps, units]` each.
    pub fn encode_seqs(&self, seqs: &[InteractionSequence]) -> Result<Vec<Tensor>> {
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, s) in seqs.iter().enumerate() {
            by_len.entry(s.len()).or_default().push(i);
        }
        let mut out = vec![Tensor::zeros(&[0]); seqs.len()];
        let h = self.width();
        for idx in by_len.values() {
            for chunk in idx.chunks(512) {
                let batch = SeqBatch::new(chunk.iter().map(|&i| &seqs[i]), &self.stats)?;
                let r = self.infer(&batch)?;
                let s = batch.steps;
                for (b, &i) in chunk.iter().enumerate() {
                    out[i] = Tensor::from_vec(&[s, h], r.data()[b * s * h..(b + 1) * s * h].to_vec())?;
                }
            }
        }
        Ok(out)
    }
}
