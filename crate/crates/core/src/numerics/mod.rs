//! Dense tensors and differentiable layers with explicit backward passes.
//!
//! Every layer caches what its backward pass needs during `forward`, and
//! accumulates parameter gradients into [`Param::grad`] during `backward`.
//! `infer` runs the same arithmetic without touching the cache, so frozen
//! layers can be shared across threads.

mod adam;
mod dense;
mod embedding;
mod gradcheck;
mod init;
mod lstm;
pub mod serialize;
mod tensor;

pub use adam::{Adam, AdamConfig};
pub use dense::{sigmoid, Activation, Dense};
pub use embedding::Embedding;
pub use gradcheck::{gradient_check, Differentiable, GradCheckReport};
pub use init::{layer_rng, uniform_fan_in, LayerRng};
pub use lstm::{Lstm, LstmState};
pub use tensor::{gemm, Param, Tensor};
