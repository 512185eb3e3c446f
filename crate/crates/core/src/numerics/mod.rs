//! Dense linear algebra kernel: row-major matrices and vectors, symmetric
//! factorizations, a Jacobi eigensolver and the simplex projection.

mod eigen;
mod factor;
mod matrix;
mod scalar;
mod simplex;
mod vector;

pub use eigen::{lstsq, pinv_norm, symmetric_eigen, SymmetricEigen};
pub use factor::{cholesky, solve_symmetric, SymmetricFactorization, PIVOT_TOL};
pub use matrix::DenseMatrix;
pub use scalar::Scalar;
pub use simplex::project_simplex;
pub use vector::{dot, DenseVector};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix<f64> {
        let m = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let mut a = m.tr_matmul(&m).unwrap();
        a.add_diagonal(1.0);
        a
    }

    #[test]
    fn spd_inverse_recovers_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..12 {
            let a = random_spd(n, &mut rng);
            let inv = solve_symmetric(&a, &DenseMatrix::identity(n)).unwrap();
            let prod = inv.matmul(&a).unwrap();
            assert!(prod.sub(&DenseMatrix::identity(n)).unwrap().max_abs() <= 1e-7);
        }
    }

    proptest! {
        #[test]
        fn indefinite_solve_residual(seed in 0u64..500, n in 1usize..14) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            a = a.add(&a.transpose()).unwrap();
            let b = DenseMatrix::from_fn(n, 3, |_, _| rng.random_range(-1.0..1.0));
            if let Ok(x) = solve_symmetric(&a, &b) {
                let r = a.matmul(&x).unwrap().sub(&b).unwrap().max_abs();
                // Random symmetric matrices can be badly conditioned; scale by the solution size.
                prop_assert!(r <= 1e-8 * (1.0 + b.max_abs()) * (1.0 + x.max_abs()));
            }
        }
    }
}
