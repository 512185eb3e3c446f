//! The two benchmark decision problems: Markowitz portfolio selection and
//! budgeted movie broadcast, with data generators, objectives and oracles.

mod dataset;
mod movierec;
mod portfolio;

pub use dataset::{quantize, Dataset, Split};
pub use movierec::*;
pub use portfolio::*;
