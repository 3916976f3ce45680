use super::init::{uniform_fan_in, LayerRng};
use super::tensor::{Param, Tensor};
use crate::error::{Error, Result};

/// Lookup table mapping integer ids to dense rows.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub table: Param,
    cache: Option<Vec<usize>>,
}

impl Embedding {
    pub fn new(name: &str, vocab: usize, dim: usize, rng: &mut LayerRng) -> Self {
        Self {
            table: Param::new(format!("{name}.table"), uniform_fan_in(&[vocab, dim], vocab, rng)),
            cache: None,
        }
    }

    pub fn from_param(table: Param) -> Result<Self> {
        if table.value.shape().len() != 2 {
            return Err(Error::Shape("embedding table must be rank 2".into()));
        }
        Ok(Self { table, cache: None })
    }

    pub fn vocab(&self) -> usize {
        self.table.value.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.table.value.shape()[1]
    }

    /// `[ids.len(), dim]`.
    pub fn infer(&self, ids: &[usize]) -> Result<Tensor> {
        let d = self.dim();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= self.vocab() {
                return Err(Error::InvalidInput(format!(
                    "embedding id {id} outside vocabulary of {}",
                    self.vocab()
                )));
            }
            out.extend_from_slice(self.table.value.row(id));
        }
        Tensor::from_vec(&[ids.len(), d], out)
    }

    pub fn forward(&mut self, ids: &[usize]) -> Result<Tensor> {
        let y = self.infer(ids)?;
        self.cache = Some(ids.to_vec());
        Ok(y)
    }

    pub fn backward(&mut self, grad_out: &Tensor) -> Result<()> {
        let ids = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("embedding backward before forward".into()))?;
        let d = self.dim();
        if grad_out.len() != ids.len() * d {
            return Err(Error::Shape("embedding upstream gradient has wrong size".into()));
        }
        let g = self.table.grad.data_mut();
        for (r, &id) in ids.iter().enumerate() {
            for j in 0..d {
                g[id * d + j] += grad_out.data()[r * d + j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::init::layer_rng;

    #[test]
    fn lookup_and_scatter() {
        let mut e = Embedding::new("e", 3, 2, &mut layer_rng(4));
        let y = e.forward(&[2, 0, 2]).unwrap();
        assert_eq!(y.row(0), e.table.value.row(2));
        assert_eq!(y.row(1), e.table.value.row(0));
        e.backward(&Tensor::from_vec(&[3, 2], vec![1.0; 6]).unwrap()).unwrap();
        assert_eq!(e.table.grad.data(), &[1.0, 1.0, 0.0, 0.0, 2.0, 2.0]);
        assert!(e.infer(&[3]).is_err());
    }
}
