use super::{DenseMatrix, DenseVector, Scalar};
use crate::error::{Error, Result};

/// Eigen-decomposition of a symmetric matrix: `A = V diag(values) Vᵀ`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T> {
    /// Ascending.
    pub values: DenseVector<T>,
    /// Column `j` is the eigenvector for `values[j]`.
    pub vectors: DenseMatrix<T>,
}

/// Cyclic Jacobi rotations. Accurate to working precision for the small
/// matrices this crate handles (`n` ≤ a few dozen).
pub fn symmetric_eigen<T: Scalar>(a: &DenseMatrix<T>) -> Result<SymmetricEigen<T>> {
    if !a.is_square() {
        return Err(Error::dims("eigen-decomposition of a non-square matrix"));
    }
    let n = a.rows();
    let mut w = a.clone();
    let mut v = DenseMatrix::identity(n);
    let scale = a.max_abs().max(T::min_positive_value());
    let eps = T::epsilon();

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..i).map(move |j| (i, j)))
            .map(|(i, j)| w[(i, j)] * w[(i, j)])
            .sum();
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = w[(p, q)];
                if apq.abs() <= T::min_positive_value() {
                    continue;
                }
                let theta = (w[(q, q)] - w[(p, p)]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (wkp, wkq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = c * wkp - s * wkq;
                    w[(k, q)] = s * wkp + c * wkq;
                }
                for k in 0..n {
                    let (wpk, wqk) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        w[(i, i)]
            .partial_cmp(&w[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| w[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

/// Least-squares solution of minimal norm, `x = A⁺ b`, via the eigen-decomposition of `AᵀA`.
/// Directions with singular value below `rcond · σ_max` are dropped.
pub fn lstsq<T: Scalar>(a: &DenseMatrix<T>, b: &[T], rcond: T) -> Result<DenseVector<T>> {
    if a.rows() != b.len() {
        return Err(Error::dims("lstsq right-hand side length"));
    }
    let gram = a.tr_matmul(a)?;
    let eig = symmetric_eigen(&gram)?;
    let atb = a.tr_matvec(b)?;
    let top = eig.values.iter().fold(T::zero(), |acc, &v| acc.max(v));
    let cutoff = rcond * rcond * top;
    let mut x = DenseVector::zeros(a.cols());
    for j in 0..a.cols() {
        let lam = eig.values[j];
        if lam > cutoff && lam > T::zero() {
            let vj = eig.vectors.column(j);
            let coef = vj.dot(&atb) / lam;
            x.axpy(coef, &vj);
        }
    }
    Ok(x)
}

/// Spectral norm `‖A⁺‖₂ = 1 / σ_min` over the nonzero singular values.
pub fn pinv_norm<T: Scalar>(a: &DenseMatrix<T>, rcond: T) -> Result<T> {
    let eig = symmetric_eigen(&a.tr_matmul(a)?)?;
    let top = eig.values.iter().fold(T::zero(), |acc, &v| acc.max(v));
    let cutoff = rcond * rcond * top;
    eig.values
        .iter()
        .filter(|&&v| v > cutoff && v > T::zero())
        .fold(None, |acc: Option<T>, &v| Some(acc.map_or(v, |a| a.min(v))))
        .map(|smallest| T::one() / smallest.sqrt())
        .ok_or_else(|| Error::InvalidInputs("matrix has no nonzero singular value".into()))
}
