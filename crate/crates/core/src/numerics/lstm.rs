use super::dense::sigmoid;
use super::init::{uniform_fan_in, LayerRng};
use super::tensor::{gemm, Param, Tensor};
use crate::error::{Error, Result};

/// Final hidden and cell state, each `[batch, hidden]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Tensor,
    pub c: Tensor,
}

#[derive(Debug, Clone)]
struct LstmCache {
    batch: usize,
    steps: usize,
    input: Tensor,
    /// Per step `[batch, 4h]` gate activations in order i, f, g, o.
    gates: Vec<Vec<f64>>,
    /// `steps + 1` entries; index 0 is the zero initial state.
    h: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
}

/// Single-direction LSTM over `[batch, time, features]` inputs.
///
/// Gates are laid out `[i | f | g | o]` along the `4h` axis. The forget-gate
/// bias starts at one.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub w_x: Param,
    pub w_h: Param,
    pub b: Param,
    cache: Option<LstmCache>,
}

impl Lstm {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut LayerRng) -> Self {
        let mut b = Tensor::zeros(&[4 * hidden]);
        b.data_mut()[hidden..2 * hidden].iter_mut().for_each(|x| *x = 1.0);
        Self {
            w_x: Param::new(format!("{name}.w_x"), uniform_fan_in(&[input, 4 * hidden], input, rng)),
            w_h: Param::new(format!("{name}.w_h"), uniform_fan_in(&[hidden, 4 * hidden], hidden, rng)),
            b: Param::new(format!("{name}.b"), b),
            cache: None,
        }
    }

    pub fn from_params(w_x: Param, w_h: Param, b: Param) -> Result<Self> {
        let ok = w_x.value.shape().len() == 2
            && w_h.value.shape().len() == 2
            && w_h.value.shape()[1] == 4 * w_h.value.shape()[0]
            && w_x.value.shape()[1] == w_h.value.shape()[1]
            && b.value.shape() == [w_h.value.shape()[1]];
        if !ok {
            return Err(Error::Shape("inconsistent LSTM parameter shapes".into()));
        }
        Ok(Self { w_x, w_h, b, cache: None })
    }

    pub fn input_dim(&self) -> usize {
        self.w_x.value.shape()[0]
    }

    pub fn hidden(&self) -> usize {
        self.w_h.value.shape()[0]
    }

    fn dims(&self, x: &Tensor) -> Result<(usize, usize)> {
        match x.shape() {
            [b, t, d] if *d == self.input_dim() => Ok((*b, *t)),
            s => Err(Error::Shape(format!(
                "LSTM expects [batch, time, {}], got {s:?}",
                self.input_dim()
            ))),
        }
    }

    fn run(&self, x: &Tensor, keep: bool) -> Result<(Tensor, LstmState, Option<LstmCache>)> {
        let (bsz, steps) = self.dims(x)?;
        let (d, h) = (self.input_dim(), self.hidden());
        let g4 = 4 * h;
        let n = bsz * steps;
        let mut xw = Vec::with_capacity(n * g4);
        for _ in 0..n {
            xw.extend_from_slice(self.b.value.data());
        }
        gemm(n, d, g4, 1.0, x.data(), false, self.w_x.value.data(), false, 1.0, &mut xw);

        let mut h_prev = vec![0.0; bsz * h];
        let mut c_prev = vec![0.0; bsz * h];
        let mut out = vec![0.0; n * h];
        let mut cache = keep.then(|| LstmCache {
            batch: bsz,
            steps,
            input: x.clone(),
            gates: Vec::with_capacity(steps),
            h: vec![h_prev.clone()],
            c: vec![c_prev.clone()],
        });
        let mut z = vec![0.0; bsz * g4];
        for t in 0..steps {
            for b in 0..bsz {
                let src = (b * steps + t) * g4;
                z[b * g4..(b + 1) * g4].copy_from_slice(&xw[src..src + g4]);
            }
            gemm(bsz, h, g4, 1.0, &h_prev, false, self.w_h.value.data(), false, 1.0, &mut z);
            let mut c_new = vec![0.0; bsz * h];
            let mut h_new = vec![0.0; bsz * h];
            for b in 0..bsz {
                let row = &mut z[b * g4..(b + 1) * g4];
                for j in 0..h {
                    let i = sigmoid(row[j]);
                    let f = sigmoid(row[h + j]);
                    let g = row[2 * h + j].tanh();
                    let o = sigmoid(row[3 * h + j]);
                    row[j] = i;
                    row[h + j] = f;
                    row[2 * h + j] = g;
                    row[3 * h + j] = o;
                    let c = f * c_prev[b * h + j] + i * g;
                    c_new[b * h + j] = c;
                    h_new[b * h + j] = o * c.tanh();
                }
                let dst = (b * steps + t) * h;
                out[dst..dst + h].copy_from_slice(&h_new[b * h..(b + 1) * h]);
            }
            if let Some(c) = cache.as_mut() {
                c.gates.push(z.clone());
                c.h.push(h_new.clone());
                c.c.push(c_new.clone());
            }
            h_prev = h_new;
            c_prev = c_new;
        }
        let state = LstmState {
            h: Tensor::from_vec(&[bsz, h], h_prev)?,
            c: Tensor::from_vec(&[bsz, h], c_prev)?,
        };
        Ok((Tensor::from_vec(&[bsz, steps, h], out)?, state, cache))
    }

    /// Hidden sequence `[batch, time, hidden]` and final state, no caching.
    pub fn infer(&self, x: &Tensor) -> Result<(Tensor, LstmState)> {
        let (y, s, _) = self.run(x, false)?;
        Ok((y, s))
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<(Tensor, LstmState)> {
        let (y, s, c) = self.run(x, true)?;
        self.cache = c;
        Ok((y, s))
    }

    /// Backpropagation through time from a gradient on the hidden sequence.
    pub fn backward(&mut self, grad_h: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("LSTM backward before forward".into()))?;
        let (bsz, steps) = (cache.batch, cache.steps);
        let (d, h) = (self.input_dim(), self.hidden());
        let g4 = 4 * h;
        if grad_h.shape() != [bsz, steps, h] {
            return Err(Error::Shape(format!(
                "LSTM upstream gradient {:?} does not match [{bsz}, {steps}, {h}]",
                grad_h.shape()
            )));
        }
        let n = bsz * steps;
        let mut dz_all = vec![0.0; n * g4];
        let mut dh_next = vec![0.0; bsz * h];
        let mut dc_next = vec![0.0; bsz * h];
        let mut dz = vec![0.0; bsz * g4];
        for t in (0..steps).rev() {
            let gates = &cache.gates[t];
            let c_t = &cache.c[t + 1];
            let c_prev = &cache.c[t];
            for b in 0..bsz {
                for j in 0..h {
                    let k = b * h + j;
                    let gi = gates[b * g4 + j];
                    let gf = gates[b * g4 + h + j];
                    let gg = gates[b * g4 + 2 * h + j];
                    let go = gates[b * g4 + 3 * h + j];
                    let tc = c_t[k].tanh();
                    let dh = grad_h.data()[(b * steps + t) * h + j] + dh_next[k];
                    let dc = dh * go * (1.0 - tc * tc) + dc_next[k];
                    dz[b * g4 + j] = dc * gg * gi * (1.0 - gi);
                    dz[b * g4 + h + j] = dc * c_prev[k] * gf * (1.0 - gf);
                    dz[b * g4 + 2 * h + j] = dc * gi * (1.0 - gg * gg);
                    dz[b * g4 + 3 * h + j] = dh * tc * go * (1.0 - go);
                    dc_next[k] = dc * gf;
                }
                let dst = (b * steps + t) * g4;
                dz_all[dst..dst + g4].copy_from_slice(&dz[b * g4..(b + 1) * g4]);
            }
            gemm(h, bsz, g4, 1.0, &cache.h[t], true, &dz, false, 1.0, self.w_h.grad.data_mut());
            gemm(bsz, g4, h, 1.0, &dz, false, self.w_h.value.data(), true, 0.0, &mut dh_next);
        }
        gemm(d, n, g4, 1.0, cache.input.data(), true, &dz_all, false, 1.0, self.w_x.grad.data_mut());
        let bg = self.b.grad.data_mut();
        for r in 0..n {
            for (j, g) in bg.iter_mut().enumerate() {
                *g += dz_all[r * g4 + j];
            }
        }
        let mut dx = vec![0.0; n * d];
        gemm(n, g4, d, 1.0, &dz_all, false, self.w_x.value.data(), true, 0.0, &mut dx);
        Tensor::from_vec(&[bsz, steps, d], dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_x, &mut self.w_h, &mut self.b]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w_x, &self.w_h, &self.b]
    }
}
