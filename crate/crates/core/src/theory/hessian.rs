use crate::error::{Error, Result};
use crate::numerics::{symmetric_eigen, DenseMatrix, Scalar};

/// Result of a preservation check over all sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOutcome<T> {
    pub passed: bool,
    /// Smallest eigenvalue (convexity) or largest entry (DR) seen.
    pub worst: T,
}

/// Hessian of `f(·, θ)` at a point.
pub trait HessianOracle<T> {
    fn hessian(&self, x: &[T]) -> Result<DenseMatrix<T>>;
}

impl<T, F> HessianOracle<T> for F
where
    F: Fn(&[T]) -> Result<DenseMatrix<T>>,
{
    fn hessian(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        self(x)
    }
}

/// Constant Hessian of a quadratic.
#[derive(Debug, Clone)]
pub struct ConstantHessian<T>(pub DenseMatrix<T>);

impl<T: Scalar> HessianOracle<T> for ConstantHessian<T> {
    fn hessian(&self, _x: &[T]) -> Result<DenseMatrix<T>> {
        Ok(self.0.clone())
    }
}

/// Central-difference Hessian of a scalar function, symmetrized.
pub fn finite_difference_hessian<T: Scalar>(
    f: impl Fn(&[T]) -> T,
    x: &[T],
    h: T,
) -> DenseMatrix<T> {
    let n = x.len();
    let two = T::lit(2.0);
    let eval = |i: usize, di: T, j: usize, dj: T| {
        let mut y = x.to_vec();
        y[i] = y[i] + di;
        y[j] = y[j] + dj;
        f(&y)
    };
    let mut out = DenseMatrix::from_fn(n, n, |i, j| {
        (eval(i, h, j, h) - eval(i, h, j, -h) - eval(i, -h, j, h) + eval(i, -h, j, -h))
            / (T::lit(4.0) * h * h)
    });
    for i in 0..n {
        for j in 0..i {
            let v = (out[(i, j)] + out[(j, i)]) / two;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn reduced<T: Scalar>(
    oracle: &impl HessianOracle<T>,
    p: &DenseMatrix<T>,
    x: &[T],
) -> Result<DenseMatrix<T>> {
    let h = oracle.hessian(x)?;
    if h.shape() != (p.rows(), p.rows()) {
        return Err(Error::dims(format!(
            "Hessian {:?} for P with {} rows",
            h.shape(),
            p.rows()
        )));
    }
    p.tr_matmul(&h.matmul(p)?)
}

/// Passes iff `λ_min(Pᵀ H(x) P) ≥ −tol` at every sample.
pub fn check_convexity_preservation<T: Scalar>(
    oracle: &impl HessianOracle<T>,
    p: &DenseMatrix<T>,
    samples: &[Vec<T>],
    tol: T,
) -> Result<CheckOutcome<T>> {
    let mut worst = T::infinity();
    for x in samples {
        let mut g = reduced(oracle, p, x)?;
        for i in 0..g.rows() {
            for j in 0..i {
                let v = (g[(i, j)] + g[(j, i)]) / T::lit(2.0);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        let eig = symmetric_eigen(&g)?;
        if let Some(&min) = eig.values.as_slice().first() {
            worst = worst.min(min);
        }
    }
    Ok(CheckOutcome {
        passed: worst >= -tol,
        worst,
    })
}

/// Passes iff every entry of `Pᵀ H(x) P` is `≤ tol` at every sample.
/// `P` must be entrywise nonnegative.
pub fn check_dr_preservation<T: Scalar>(
    oracle: &impl HessianOracle<T>,
    p: &DenseMatrix<T>,
    samples: &[Vec<T>],
    tol: T,
) -> Result<CheckOutcome<T>> {
    if let Some(&neg) = p.as_slice().iter().find(|&&v| v < T::lit(-1e-12)) {
        return Err(Error::HypothesisViolated(format!(
            "P has a negative entry {:e}",
            neg.to_f64_lossy()
        )));
    }
    let mut worst = T::neg_infinity();
    for x in samples {
        let g = reduced(oracle, p, x)?;
        worst = g.as_slice().iter().fold(worst, |a, &b| a.max(b));
    }
    Ok(CheckOutcome {
        passed: worst <= tol,
        worst,
    })
}
