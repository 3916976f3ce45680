use salience::numerics::{
    gradient_check, layer_rng, Activation, Dense, Differentiable, Embedding, Lstm, Param, Tensor,
};
use salience::Result;

const TOL: f64 = 1e-4;
const STEP: f64 = 1e-5;

fn probe(shape: &[usize], seed: f64) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|i| ((i as f64 + seed) * 0.731).sin()).collect()).unwrap()
}

/// `L = Σ y ⊙ R` for a fixed random projection `R`.
fn project(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

struct DenseCase {
    layer: Dense,
    x: Tensor,
    r: Tensor,
}

impl Differentiable for DenseCase {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layer.params_mut()
    }
    fn loss(&mut self) -> Result<f64> {
        Ok(project(&self.layer.infer(&self.x)?, &self.r))
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        let y = self.layer.forward(&self.x)?;
        self.layer.backward(&self.r)?;
        Ok(project(&y, &self.r))
    }
}

#[test]
fn dense_gradients_match_finite_differences() {
    for act in [
        Activation::Linear,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
        Activation::Softplus,
    ] {
        let mut case = DenseCase {
            layer: Dense::new("d", 4, 3, act, &mut layer_rng(7)),
            x: probe(&[5, 4], 0.3),
            r: probe(&[5, 3], 1.7),
        };
        let rep = gradient_check(&mut case, STEP).unwrap();
        assert!(rep.max_rel_error < TOL, "{act:?}: {rep:?}");
    }
}

#[test]
fn dense_input_gradient_matches_finite_differences() {
    let mut layer = Dense::new("d", 3, 2, Activation::Tanh, &mut layer_rng(1));
    let x = probe(&[2, 3], 0.9);
    let r = probe(&[2, 2], 2.2);
    layer.forward(&x).unwrap();
    let dx = layer.backward(&r).unwrap();
    for k in 0..x.len() {
        let mut up = x.clone();
        up.data_mut()[k] += STEP;
        let mut down = x.clone();
        down.data_mut()[k] -= STEP;
        let num = (project(&layer.infer(&up).unwrap(), &r) - project(&layer.infer(&down).unwrap(), &r)) / (2.0 * STEP);
        assert!((num - dx.data()[k]).abs() < 1e-7);
    }
}

struct EmbeddingCase {
    layer: Embedding,
    ids: Vec<usize>,
    r: Tensor,
}

impl Differentiable for EmbeddingCase {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.layer.table]
    }
    fn loss(&mut self) -> Result<f64> {
        let y = self.layer.infer(&self.ids)?;
        Ok(y.data().iter().zip(self.r.data()).map(|(a, b)| a * a * b).sum())
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        let y = self.layer.forward(&self.ids)?;
        let g: Vec<f64> = y.data().iter().zip(self.r.data()).map(|(a, b)| 2.0 * a * b).collect();
        self.layer.backward(&Tensor::from_vec(y.shape(), g)?)?;
        Ok(y.data().iter().zip(self.r.data()).map(|(a, b)| a * a * b).sum())
    }
}

#[test]
fn embedding_gradients_match_finite_differences() {
    let mut case = EmbeddingCase {
        layer: Embedding::new("e", 5, 3, &mut layer_rng(2)),
        ids: vec![4, 0, 4, 2],
        r: probe(&[4, 3], 0.1),
    };
    let rep = gradient_check(&mut case, STEP).unwrap();
    assert!(rep.max_rel_error < TOL, "{rep:?}");
}

struct LstmCase {
    layers: Vec<Lstm>,
    x: Tensor,
    r: Tensor,
}

impl LstmCase {
    fn run(&self) -> Result<Tensor> {
        let mut h = self.x.clone();
        for l in &self.layers {
            h = l.infer(&h)?.0;
        }
        Ok(h)
    }
}

impl Differentiable for LstmCase {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
    fn loss(&mut self) -> Result<f64> {
        Ok(project(&self.run()?, &self.r))
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        let mut h = self.x.clone();
        for l in &mut self.layers {
            h = l.forward(&h)?.0;
        }
        let mut g = self.r.clone();
        for l in self.layers.iter_mut().rev() {
            g = l.backward(&g)?;
        }
        Ok(project(&h, &self.r))
    }
}

#[test]
fn stacked_lstm_gradients_match_finite_differences() {
    let mut rng = layer_rng(3);
    let mut case = LstmCase {
        layers: vec![Lstm::new("a", 3, 4, &mut rng), Lstm::new("b", 4, 2, &mut rng)],
        x: probe(&[2, 6, 3], 0.5),
        r: probe(&[2, 6, 2], 3.1),
    };
    let rep = gradient_check(&mut case, STEP).unwrap();
    assert!(rep.max_rel_error < TOL, "{rep:?}");
}

#[test]
fn single_step_lstm_gradients_match_finite_differences() {
    let mut case = LstmCase {
        layers: vec![Lstm::new("a", 2, 3, &mut layer_rng(4))],
        x: probe(&[3, 1, 2], 0.2),
        r: probe(&[3, 1, 3], 0.8),
    };
    let rep = gradient_check(&mut case, STEP).unwrap();
    assert!(rep.max_rel_error < TOL, "{rep:?}");
}

/// A dense layer whose reported bias gradient is off by a factor of two.
struct Broken(DenseCase);

impl Differentiable for Broken {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.0.params_mut()
    }
    fn loss(&mut self) -> Result<f64> {
        self.0.loss()
    }
    fn loss_and_grad(&mut self) -> Result<f64> {
        let l = self.0.loss_and_grad()?;
        self.0.layer.b.grad.data_mut().iter_mut().for_each(|g| *g *= 2.0);
        Ok(l)
    }
}

#[test]
fn checker_flags_a_wrong_backward() {
    let mut case = Broken(DenseCase {
        layer: Dense::new("d", 3, 2, Activation::Tanh, &mut layer_rng(5)),
        x: probe(&[4, 3], 0.0),
        r: probe(&[4, 2], 1.0),
    });
    let rep = gradient_check(&mut case, STEP).unwrap();
    assert!(rep.max_rel_error > 0.1, "{rep:?}");
    assert_eq!(rep.worst_param, "d.b");
}
