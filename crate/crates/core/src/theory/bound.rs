use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// Symbols of the generalization bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs<T> {
    /// Surrogate dimension.
    pub m: T,
    /// Optimality-gap bound.
    pub c: T,
    /// Feature dimension.
    pub p_dim: T,
    /// Sample count.
    pub t: T,
    /// `‖P⁺‖`.
    pub pinv_norm: T,
    /// Diameter of the feasible set.
    pub diameter: T,
}

/// Leading term `2mC·√(2p·ln(2mt‖P⁺‖ρ) / t)`; the `O(1/t)` remainder is excluded.
pub fn rademacher_bound<T: Scalar>(b: &BoundInputs<T>) -> Result<T> {
    let fields = [b.m, b.c, b.p_dim, b.t, b.pinv_norm, b.diameter];
    if fields.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
        return Err(Error::InvalidInputs(
            "bound inputs must be positive and finite".into(),
        ));
    }
    if b.t < T::one() {
        return Err(Error::InvalidInputs("t must be ≥ 1".into()));
    }
    let two = T::lit(2.0);
    let arg = two * b.m * b.t * b.pinv_norm * b.diameter;
    if arg <= T::one() {
        return Err(Error::InvalidInputs(format!(
            "log argument 2·m·t·‖P⁺‖·ρ = {:e} must exceed 1",
            arg.to_f64_lossy()
        )));
    }
    Ok(two * b.m * b.c * (two * b.p_dim * arg.ln() / b.t).sqrt())
}
