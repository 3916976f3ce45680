use super::init::{uniform_fan_in, LayerRng};
use super::tensor::{gemm, Param, Tensor};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Linear,
    Relu,
    Tanh,
    Sigmoid,
    Softplus,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Linear => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Softplus => crate::simulator::softplus(x),
        }
    }

    /// Derivative with respect to the pre-activation `x`, given `y = apply(x)`.
    pub fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Softplus => sigmoid(x),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone)]
struct DenseCache {
    input: Tensor,
    pre: Vec<f64>,
    out: Vec<f64>,
}

/// Affine map over the last axis followed by an activation.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Param,
    pub b: Param,
    pub activation: Activation,
    cache: Option<DenseCache>,
}

impl Dense {
    pub fn new(name: &str, input: usize, output: usize, activation: Activation, rng: &mut LayerRng) -> Self {
        Self {
            w: Param::new(format!("{name}.w"), uniform_fan_in(&[input, output], input, rng)),
            b: Param::new(format!("{name}.b"), Tensor::zeros(&[output])),
            activation,
            cache: None,
        }
    }

    pub fn from_params(w: Param, b: Param, activation: Activation) -> Result<Self> {
        if w.value.shape().len() != 2 || b.value.shape() != [w.value.shape()[1]] {
            return Err(Error::Shape(format!(
                "dense weights {:?} and bias {:?} disagree",
                w.value.shape(),
                b.value.shape()
            )));
        }
        Ok(Self { w, b, activation, cache: None })
    }

    pub fn input_dim(&self) -> usize {
        self.w.value.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.w.value.shape()[1]
    }

    fn out_shape(&self, x: &Tensor) -> Result<Vec<usize>> {
        if x.last_dim() != self.input_dim() {
            return Err(Error::Shape(format!(
                "dense expects last axis {}, got shape {:?}",
                self.input_dim(),
                x.shape()
            )));
        }
        let mut s = x.shape().to_vec();
        *s.last_mut().unwrap() = self.output_dim();
        Ok(s)
    }

    fn preact(&self, x: &Tensor) -> Vec<f64> {
        let (n, i, o) = (x.rows(), self.input_dim(), self.output_dim());
        let mut pre = Vec::with_capacity(n * o);
        for _ in 0..n {
            pre.extend_from_slice(self.b.value.data());
        }
        gemm(n, i, o, 1.0, x.data(), false, self.w.value.data(), false, 1.0, &mut pre);
        pre
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let shape = self.out_shape(x)?;
        let act = self.activation;
        let out = self.preact(x).into_iter().map(|v| act.apply(v)).collect();
        Tensor::from_vec(&shape, out)
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let shape = self.out_shape(x)?;
        let pre = self.preact(x);
        let act = self.activation;
        let out: Vec<f64> = pre.iter().map(|&v| act.apply(v)).collect();
        let y = Tensor::from_vec(&shape, out.clone())?;
        self.cache = Some(DenseCache { input: x.clone(), pre, out });
        Ok(y)
    }

    /// Accumulates weight gradients and returns the gradient for the input.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Tensor> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("dense backward before forward".into()))?;
        if grad_out.len() != cache.out.len() {
            return Err(Error::Shape("dense upstream gradient has wrong size".into()));
        }
        let (n, i, o) = (cache.input.rows(), self.input_dim(), self.output_dim());
        let act = self.activation;
        let dz: Vec<f64> = grad_out
            .data()
            .iter()
            .zip(cache.pre.iter().zip(&cache.out))
            .map(|(g, (&p, &y))| g * act.derivative(p, y))
            .collect();
        gemm(i, n, o, 1.0, cache.input.data(), true, &dz, false, 1.0, self.w.grad.data_mut());
        let bg = self.b.grad.data_mut();
        for r in 0..n {
            for (j, g) in bg.iter_mut().enumerate() {
                *g += dz[r * o + j];
            }
        }
        let mut dx = vec![0.0; n * i];
        gemm(n, o, i, 1.0, &dz, false, self.w.value.data(), true, 0.0, &mut dx);
        Tensor::from_vec(cache.input.shape(), dx)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn params(&self) -> Vec<&Param> {
        vec![&self.w, &self.b]
    }
}
