use rand::Rng;

use super::Parameterized;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, Scalar};

const MIN_NORM: f64 = 1e-12;

/// One learned vector per item; the covariance estimate is their cosine-similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel<T> {
    /// `items × dim`
    pub embeddings: DenseMatrix<T>,
}

#[derive(Debug, Clone)]
pub struct CosineCache<T> {
    unit: DenseMatrix<T>,
    norms: Vec<T>,
}

impl<T: Scalar> EmbeddingModel<T> {
    /// Entries uniform in `[-1, 1]`.
    pub fn new<R: Rng + ?Sized>(items: usize, dim: usize, rng: &mut R) -> Result<Self> {
        if items < 2 || dim == 0 {
            return Err(Error::BadDimensions(format!(
                "embedding needs ≥ 2 items and dim ≥ 1, got {items}×{dim}"
            )));
        }
        Ok(Self {
            embeddings: DenseMatrix::from_fn(items, dim, |_, _| {
                T::lit(rng.random_range(-1.0..=1.0))
            }),
        })
    }

    pub fn from_matrix(embeddings: DenseMatrix<T>) -> Result<Self> {
        if embeddings.rows() < 2 || embeddings.cols() == 0 {
            return Err(Error::BadDimensions("embedding needs ≥ 2 items".into()));
        }
        Ok(Self { embeddings })
    }

    pub fn items(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    /// `Q_ij = ⟨e_i, e_j⟩ / (‖e_i‖ ‖e_j‖)`.
    pub fn cosine_matrix(&self) -> Result<(DenseMatrix<T>, CosineCache<T>)> {
        let e = &self.embeddings;
        let mut unit = e.clone();
        let mut norms = Vec::with_capacity(e.rows());
        for i in 0..e.rows() {
            let norm = e.row(i).iter().map(|&v| v * v).sum::<T>().sqrt();
            if !norm.is_finite() || norm <= T::lit(MIN_NORM) {
                return Err(Error::DegenerateEmbedding {
                    item: i,
                    norm: norm.to_f64_lossy(),
                });
            }
            for v in unit.row_mut(i) {
                *v = *v / norm;
            }
            norms.push(norm);
        }
        let q = unit.matmul_tr(&unit)?;
        Ok((q, CosineCache { unit, norms }))
    }

    pub fn cosine_backward(&self, cache: &CosineCache<T>, d_q: &DenseMatrix<T>) -> Result<Self> {
        let n = self.items();
        if d_q.shape() != (n, n) || cache.unit.shape() != self.embeddings.shape() {
            return Err(Error::dims(format!(
                "cosine gradient {:?} for {n} items",
                d_q.shape()
            )));
        }
        // dL/dU = (dQ + dQᵀ) U
        let sym = d_q.add(&d_q.transpose())?;
        let d_unit = sym.matmul(&cache.unit)?;
        let mut grad = DenseMatrix::zeros(n, self.dim());
        for i in 0..n {
            let u = cache.unit.row(i);
            let g = d_unit.row(i);
            let along: T = u.iter().zip(g).map(|(&a, &b)| a * b).sum();
            for ((out, &gi), &ui) in grad.row_mut(i).iter_mut().zip(g).zip(u) {
                *out = (gi - along * ui) / cache.norms[i];
            }
        }
        Ok(Self { embeddings: grad })
    }
}

impl<T: Scalar> Parameterized<T> for EmbeddingModel<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        vec![self.embeddings.as_slice()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.embeddings.as_mut_slice()]
    }

    fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        vec![("embeddings".into(), self.items(), self.dim())]
    }
}
