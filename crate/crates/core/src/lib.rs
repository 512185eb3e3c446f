//! Decision-focused learning through learnable low-dimensional linear
//! surrogates `x = P·y` of constrained optimization layers.

pub mod diff;
pub mod domains;
pub mod error;
pub mod numerics;
pub mod optlayer;
pub mod pipelines;
pub mod surrogate;
pub mod theory;

pub use error::{Error, Result};

/// Double-precision matrix used throughout the domain and pipeline code.
pub type Matrix = numerics::DenseMatrix<f64>;
/// Double-precision vector used throughout the domain and pipeline code.
pub type Vector = numerics::DenseVector<f64>;
