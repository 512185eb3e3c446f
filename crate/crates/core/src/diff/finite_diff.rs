use crate::error::{Error, Result};
use crate::numerics::{DenseVector, Scalar};

/// Central differences `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn finite_diff_grad<T, F>(mut f: F, x: &[T], h: T) -> DenseVector<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let mut probe = x.to_vec();
    let two_h = h + h;
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / two_h
        })
        .collect()
}

/// Mean squared error `(1/N) Σ (pred − target)²` and its gradient in `pred`.
pub fn squared_error<T: Scalar>(pred: &[T], target: &[T]) -> Result<(T, DenseVector<T>)> {
    if pred.len() != target.len() {
        return Err(Error::dims(format!(
            "prediction length {} vs target length {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Ok((T::zero(), DenseVector::zeros(0)));
    }
    let n = T::from_usize(pred.len()).unwrap();
    let diff: Vec<T> = pred.iter().zip(target).map(|(&p, &t)| p - t).collect();
    let loss = diff.iter().map(|&d| d * d).sum::<T>() / n;
    let grad = diff.iter().map(|&d| (d + d) / n).collect();
    Ok((loss, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_quadratics() {
        let g = finite_diff_grad(|x: &[f64]| x[0] * x[0] + 3.0 * x[1], &[2.0, -1.0], 1e-5);
        assert!((g[0] - 4.0).abs() < 1e-9 && (g[1] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn squared_error_values() {
        let (l, g) = squared_error(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g.as_slice(), &[0.0, 2.0]);
        assert!(squared_error(&[1.0], &[1.0, 2.0]).is_err());
    }
}
