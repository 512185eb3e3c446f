//! The learnable linear reparameterization `x = P y` and the y-space problem it induces.

mod problem;
mod reparam;

pub use problem::{
    compose, grad_wrt_p, transform_problem, SurrogateGradient, SurrogateProblem, TransformOptions,
};
pub use reparam::{default_surrogate_dim, init_reparam, lift, ReparamMode, Reparameterization};
