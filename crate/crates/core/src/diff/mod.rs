//! Hand-written reverse-mode building blocks: MLP, cosine embeddings, Adam,
//! plus a finite-difference oracle.

mod adam;
mod embedding;
mod finite_diff;
mod mlp;
mod params;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use embedding::{CosineCache, EmbeddingModel};
pub use finite_diff::{finite_diff_grad, squared_error};
pub use mlp::{DenseLayer, MlpCache, MlpModel};
pub use params::Parameterized;
