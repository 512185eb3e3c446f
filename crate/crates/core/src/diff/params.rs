use crate::error::{Error, Result};
use crate::numerics::Scalar;

/// A bundle of named parameter tensors exposed as flat slices.
///
/// Gradients use the same container type as the parameters they belong to,
/// so `zeroed()` of a model is its gradient accumulator.
pub trait Parameterized<T: Scalar> {
    fn param_slices(&self) -> Vec<&[T]>;

    fn param_slices_mut(&mut self) -> Vec<&mut [T]>;

    /// `(name, rows, cols)` for every tensor, in `param_slices` order.
    fn param_shapes(&self) -> Vec<(String, usize, usize)>;

    fn num_params(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    fn flatten(&self) -> Vec<T> {
        self.param_slices().concat()
    }

    fn assign_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::dims(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        let mut offset = 0;
        for s in self.param_slices_mut() {
            s.copy_from_slice(&flat[offset..offset + s.len()]);
            offset += s.len();
        }
        Ok(())
    }

    fn zeroed(&self) -> Self
    where
        Self: Clone + Sized,
    {
        let mut z = self.clone();
        for s in z.param_slices_mut() {
            s.fill(T::zero());
        }
        z
    }

    /// `self += alpha * other`
    fn add_scaled(&mut self, alpha: T, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let src = other.param_slices();
        let dst = self.param_slices_mut();
        if src.len() != dst.len() || src.iter().zip(&dst).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::dims("parameter containers differ in shape"));
        }
        for (d, s) in dst.into_iter().zip(src) {
            for (x, &y) in d.iter_mut().zip(s) {
                *x = *x + alpha * y;
            }
        }
        Ok(())
    }

    fn scale(&mut self, alpha: T) {
        for s in self.param_slices_mut() {
            for x in s.iter_mut() {
                *x = *x * alpha;
            }
        }
    }
}
