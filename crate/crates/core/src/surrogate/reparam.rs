use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diff::Parameterized;
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, Scalar};

/// How `P` is obtained from the unconstrained `P_raw`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReparamMode {
    /// Each column is the softmax of the matching `P_raw` column.
    ColumnSimplex,
    /// Elementwise softplus.
    Nonneg,
    Free,
}

impl ReparamMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ColumnSimplex => "column-simplex",
            Self::Nonneg => "nonneg",
            Self::Free => "free",
        }
    }
}

impl fmt::Display for ReparamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReparamMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "column-simplex" => Ok(Self::ColumnSimplex),
            "nonneg" => Ok(Self::Nonneg),
            "free" => Ok(Self::Free),
            other => Err(Error::Parse(format!(
                "unknown reparameterization mode {other:?}"
            ))),
        }
    }
}

/// Trainable linear map `x = P y`, `P` of shape `n × m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Reparameterization<T> {
    pub p_raw: DenseMatrix<T>,
    pub mode: ReparamMode,
}

/// `ceil(0.1 · n)`, at least 1.
pub fn default_surrogate_dim(n: usize) -> usize {
    n.div_ceil(10).max(1)
}

/// `P_raw` entries i.i.d. uniform in `[-0.5, 0.5]`.
pub fn init_reparam<T: Scalar>(
    n: usize,
    m: usize,
    mode: ReparamMode,
    seed: u64,
) -> Result<Reparameterization<T>> {
    if m == 0 || m > n {
        return Err(Error::BadDimensions(format!(
            "surrogate dimension m = {m} for n = {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Reparameterization {
        p_raw: DenseMatrix::from_fn(n, m, |_, _| T::lit(rng.random_range(-0.5..=0.5))),
        mode,
    })
}

fn softplus<T: Scalar>(r: T) -> T {
    r.max(T::zero()) + (-r.abs()).exp().ln_1p()
}

fn sigmoid<T: Scalar>(r: T) -> T {
    if r >= T::zero() {
        T::one() / (T::one() + (-r).exp())
    } else {
        let e = r.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Reparameterization<T> {
    /// `mode = Free`, `P_raw = I`.
    pub fn identity(n: usize) -> Self {
        Self {
            p_raw: DenseMatrix::identity(n),
            mode: ReparamMode::Free,
        }
    }

    pub fn n(&self) -> usize {
        self.p_raw.rows()
    }

    pub fn m(&self) -> usize {
        self.p_raw.cols()
    }

    pub fn materialize(&self) -> DenseMatrix<T> {
        let r = &self.p_raw;
        match self.mode {
            ReparamMode::Free => r.clone(),
            ReparamMode::Nonneg => {
                DenseMatrix::from_fn(r.rows(), r.cols(), |i, j| softplus(r[(i, j)]))
            }
            ReparamMode::ColumnSimplex => {
                let mut p = DenseMatrix::zeros(r.rows(), r.cols());
                for j in 0..r.cols() {
                    let col = r.column(j);
                    let top = col.iter().fold(T::neg_infinity(), |a, &b| a.max(b));
                    let e: DenseVector<T> = col.iter().map(|&v| (v - top).exp()).collect();
                    let total = e.sum();
                    p.set_column(j, &e.scaled(T::one() / total));
                }
                p
            }
        }
    }

    /// Chains `dL/dP` through the materialization to `dL/dP_raw`.
    pub fn pullback(&self, dl_dp: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if dl_dp.shape() != self.p_raw.shape() {
            return Err(Error::dims(format!(
                "dL/dP is {:?}, P is {:?}",
                dl_dp.shape(),
                self.p_raw.shape()
            )));
        }
        Ok(match self.mode {
            ReparamMode::Free => dl_dp.clone(),
            ReparamMode::Nonneg => DenseMatrix::from_fn(dl_dp.rows(), dl_dp.cols(), |i, j| {
                dl_dp[(i, j)] * sigmoid(self.p_raw[(i, j)])
            }),
            ReparamMode::ColumnSimplex => {
                let p = self.materialize();
                let mut out = DenseMatrix::zeros(p.rows(), p.cols());
                for j in 0..p.cols() {
                    let s = p.column(j);
                    let g = dl_dp.column(j);
                    let sg = s.dot(&g);
                    let col: DenseVector<T> = s
                        .iter()
                        .zip(g.iter())
                        .map(|(&si, &gi)| si * (gi - sg))
                        .collect();
                    out.set_column(j, &col);
                }
                out
            }
        })
    }

    pub fn export_csv(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.materialize().to_csv())?;
        Ok(())
    }
}

impl<T: Scalar> Parameterized<T> for Reparameterization<T> {
    fn param_slices(&self) -> Vec<&[T]> {
        vec![self.p_raw.as_slice()]
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        vec![self.p_raw.as_mut_slice()]
    }

    fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        vec![("p_raw".into(), self.n(), self.m())]
    }
}

/// `x = P y`.
pub fn lift<T: Scalar>(p: &DenseMatrix<T>, y: &[T]) -> Result<DenseVector<T>> {
    p.matvec(y)
}
