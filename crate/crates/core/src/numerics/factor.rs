//! Dense factorizations: Cholesky for SPD matrices and a Bunch-Kaufman
//! LDLᵀ for symmetric indefinite ones (KKT systems).

use super::{DenseMatrix, Scalar};
use crate::error::{Error, Result};

/// Pivot magnitudes below this are treated as singular.
pub const PIVOT_TOL: f64 = 1e-12;

/// Lower-triangular `L` with `L·Lᵀ = a`.
pub fn cholesky<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::dims("cholesky of a non-square matrix"));
    }
    let n = a.rows();
    let tol = T::lit(PIVOT_TOL);
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(d > tol) {
            return Err(Error::NotPositiveDefinite {
                index: j,
                pivot: d.to_f64_lossy(),
            });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

#[derive(Debug, Clone, Copy)]
enum Block<T> {
    One(T),
    /// Symmetric 2×2 pivot `[[a, b], [b, c]]`.
    Two {
        a: T,
        b: T,
        c: T,
    },
}

/// `Π A Πᵀ = L D Lᵀ` with `D` block diagonal (1×1 and 2×2 blocks).
#[derive(Debug, Clone)]
pub struct SymmetricFactorization<T> {
    n: usize,
    /// Unit lower factor; only the strictly lower part is meaningful.
    l: DenseMatrix<T>,
    blocks: Vec<(usize, Block<T>)>,
    swaps: Vec<(usize, usize)>,
}

impl<T: Scalar> SymmetricFactorization<T> {
    /// Bunch-Kaufman partial pivoting.
    pub fn new(a: &DenseMatrix<T>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::dims(
                "symmetric factorization of a non-square matrix",
            ));
        }
        let n = a.rows();
        let tol = T::lit(PIVOT_TOL);
        let alpha = (T::one() + T::lit(17.0).sqrt()) / T::lit(8.0);
        let mut w = a.clone();
        let mut blocks = Vec::with_capacity(n);
        let mut swaps = Vec::with_capacity(n);

        let mut k = 0;
        while k < n {
            let absakk = w[(k, k)].abs();
            let (imax, colmax) =
                (k + 1..n)
                    .map(|i| (i, w[(i, k)].abs()))
                    .fold(
                        (k, T::zero()),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if absakk.max(colmax) < tol {
                return Err(Error::SingularMatrix {
                    pivot: absakk.max(colmax).to_f64_lossy(),
                });
            }

            let (kp, kstep) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .fold(T::zero(), |acc, j| acc.max(w[(imax, j)].abs()));
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if w[(imax, imax)].abs() >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };

            let kk = k + kstep - 1;
            if kp != kk {
                swap_symmetric(&mut w, kk, kp);
            }
            // For a 2×2 step only the second row is interchanged.
            swaps.push((kk, kp));

            if kstep == 1 {
                let d = w[(k, k)];
                if d.abs() < tol {
                    return Err(Error::SingularMatrix {
                        pivot: d.abs().to_f64_lossy(),
                    });
                }
                for i in k + 1..n {
                    let lik = w[(i, k)] / d;
                    if lik != T::zero() {
                        for j in k + 1..=i {
                            let v = w[(i, j)] - lik * w[(j, k)];
                            w[(i, j)] = v;
                        }
                    }
                }
                for i in k + 1..n {
                    w[(i, k)] = w[(i, k)] / d;
                }
                mirror_trailing(&mut w, k + 1);
                blocks.push((k, Block::One(d)));
            } else {
                let (a11, b, c22) = (w[(k, k)], w[(k + 1, k)], w[(k + 1, k + 1)]);
                let min_eig = min_abs_eig2(a11, b, c22);
                if min_eig < tol {
                    return Err(Error::SingularMatrix {
                        pivot: min_eig.to_f64_lossy(),
                    });
                }
                let det = a11 * c22 - b * b;
                let mut lcols = Vec::with_capacity(n - k - 2);
                for i in k + 2..n {
                    let (x, y) = (w[(i, k)], w[(i, k + 1)]);
                    let li0 = (x * c22 - y * b) / det;
                    let li1 = (y * a11 - x * b) / det;
                    lcols.push((li0, li1));
                }
                for i in k + 2..n {
                    let (li0, li1) = lcols[i - k - 2];
                    for j in k + 2..=i {
                        let v = w[(i, j)] - li0 * w[(j, k)] - li1 * w[(j, k + 1)];
                        w[(i, j)] = v;
                    }
                }
                for i in k + 2..n {
                    let (li0, li1) = lcols[i - k - 2];
                    w[(i, k)] = li0;
                    w[(i, k + 1)] = li1;
                }
                w[(k + 1, k)] = T::zero();
                mirror_trailing(&mut w, k + 2);
                blocks.push((k, Block::Two { a: a11, b, c: c22 }));
            }
            k += kstep;
        }

        Ok(Self {
            n,
            l: w,
            blocks,
            swaps,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [T]) {
        debug_assert_eq!(b.len(), self.n);
        for &(i, j) in &self.swaps {
            b.swap(i, j);
        }
        // L z = b
        for i in 0..self.n {
            let mut s = b[i];
            for (j, &bj) in b[..i].iter().enumerate() {
                s = s - self.l[(i, j)] * bj;
            }
            b[i] = s;
        }
        // D w = z
        for &(k, block) in &self.blocks {
            match block {
                Block::One(d) => b[k] = b[k] / d,
                Block::Two { a, b: off, c } => {
                    let det = a * c - off * off;
                    let (x, y) = (b[k], b[k + 1]);
                    b[k] = (c * x - off * y) / det;
                    b[k + 1] = (a * y - off * x) / det;
                }
            }
        }
        // Lᵀ x = w
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..self.n {
                s = s - self.l[(j, i)] * b[j];
            }
            b[i] = s;
        }
        for &(i, j) in self.swaps.iter().rev() {
            b.swap(i, j);
        }
    }

    pub fn solve_vec(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        if b.rows() != self.n {
            return Err(Error::dims(format!(
                "right-hand side has {} rows, system has {}",
                b.rows(),
                self.n
            )));
        }
        let mut x = DenseMatrix::zeros(b.rows(), b.cols());
        let mut col = vec![T::zero(); self.n];
        for j in 0..b.cols() {
            for (i, c) in col.iter_mut().enumerate() {
                *c = b[(i, j)];
            }
            self.solve_in_place(&mut col);
            x.set_column(j, &col);
        }
        Ok(x)
    }

    /// Inertia `(positive, negative, zero)` of the factored matrix.
    pub fn inertia(&self) -> (usize, usize, usize) {
        let (mut pos, mut neg) = (0, 0);
        for &(_, block) in &self.blocks {
            match block {
                Block::One(d) => {
                    if d > T::zero() {
                        pos += 1
                    } else {
                        neg += 1
                    }
                }
                // A 2×2 Bunch-Kaufman pivot always has one eigenvalue of each sign.
                Block::Two { .. } => {
                    pos += 1;
                    neg += 1;
                }
            }
        }
        (pos, neg, self.n - pos - neg)
    }
}

fn swap_symmetric<T: Scalar>(w: &mut DenseMatrix<T>, i: usize, j: usize) {
    let n = w.rows();
    for c in 0..n {
        let tmp = w[(i, c)];
        w[(i, c)] = w[(j, c)];
        w[(j, c)] = tmp;
    }
    for r in 0..n {
        let tmp = w[(r, i)];
        w[(r, i)] = w[(r, j)];
        w[(r, j)] = tmp;
    }
}

/// Copies the lower triangle of the trailing block `[from.., from..]` to its upper triangle.
fn mirror_trailing<T: Scalar>(w: &mut DenseMatrix<T>, from: usize) {
    let n = w.rows();
    for i in from..n {
        for j in from..i {
            w[(j, i)] = w[(i, j)];
        }
    }
}

fn min_abs_eig2<T: Scalar>(a: T, b: T, c: T) -> T {
    let half = T::lit(0.5);
    let mean = (a + c) * half;
    let rad = ((a - c) * half).hypot(b);
    (mean - rad).abs().min((mean + rad).abs())
}

/// Solves `A X = B` for symmetric (possibly indefinite) nonsingular `A`, with
/// one step of iterative refinement.
pub fn solve_symmetric<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if !a.is_square() {
        return Err(Error::dims("solve_symmetric needs a square matrix"));
    }
    if !a.is_symmetric(T::lit(1e-10)) {
        return Err(Error::InvalidInputs("matrix is not symmetric".into()));
    }
    let fact = SymmetricFactorization::new(a)?;
    let mut x = fact.solve(b)?;
    let residual = b.sub(&a.matmul(&x)?)?;
    let correction = fact.solve(&residual)?;
    x.axpy(T::one(), &correction)?;
    Ok(x)
}
