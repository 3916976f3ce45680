use super::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seeded generator used for parameter initialisation.
pub type LayerRng = ChaCha8Rng;

pub fn layer_rng(seed: u64) -> LayerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `U(-√(3/fan_in), √(3/fan_in))`, which keeps unit input variance through a linear map.
pub fn uniform_fan_in(shape: &[usize], fan_in: usize, rng: &mut LayerRng) -> Tensor {
    let limit = (3.0 / fan_in.max(1) as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| rng.gen_range(-limit..=limit)).collect();
    Tensor::from_vec(shape, data).expect("shape product matches")
}
