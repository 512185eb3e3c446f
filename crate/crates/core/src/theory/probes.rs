use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::lstsq;
use crate::optlayer::{solve_qp, QuadraticProgram};
use crate::surrogate::{compose, TransformOptions};
use crate::Matrix;

/// `min_y ‖P y − 1‖²` for a 3×2 `P`, by minimum-norm least squares.
pub fn counterexample_opt(p: &Matrix) -> Result<f64> {
    if p.shape() != (3, 2) {
        return Err(Error::dims(format!("P must be 3×2, got {:?}", p.shape())));
    }
    let ones = [1.0; 3];
    let y = lstsq(p, &ones, 1e-12)?;
    let r = p.matvec(&y)?;
    Ok(r.iter().map(|v| (v - 1.0) * (v - 1.0)).sum())
}

/// The three 3×2 matrices `P`, `P′` and their midpoint.
pub fn counterexample_matrices() -> [Matrix; 3] {
    let p = Matrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 2.0]]).expect("static");
    let q = Matrix::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0], vec![2.0, 0.0]]).expect("static");
    let mid = Matrix::from_fn(3, 2, |i, j| 0.5 * p[(i, j)] + 0.5 * q[(i, j)]);
    [p, q, mid]
}

/// Optimal value of the base QP restricted to `x = P y` with `y ≥ 0`.
pub fn surrogate_opt(base: &QuadraticProgram<f64>, p: &Matrix) -> Result<f64> {
    let opts = TransformOptions {
        nonneg_y: true,
        ridge: 0.0,
    };
    let sp = compose(base, p, &opts)?;
    let sol = solve_qp(&sp.qp)?;
    Ok(sp.qp.objective(&sol.y))
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeReport {
    pub trials: usize,
    pub violations: usize,
    /// Trials whose solves failed; recorded, not counted as violations.
    pub failures: usize,
    /// Largest `OPT(mid) − max(OPT(a), OPT(b))` seen.
    pub max_excess: f64,
}

impl ProbeReport {
    fn record(&mut self, mid: f64, a: f64, b: f64, tol: f64) {
        self.trials += 1;
        let excess = mid - a.max(b);
        self.max_excess = if self.trials == 1 {
            excess
        } else {
            self.max_excess.max(excess)
        };
        if excess > tol {
            self.violations += 1;
        }
    }

    pub fn merge(&mut self, other: &ProbeReport) {
        let first = self.trials == 0;
        self.trials += other.trials;
        self.violations += other.violations;
        self.failures += other.failures;
        self.max_excess = if first {
            other.max_excess
        } else {
            self.max_excess.max(other.max_excess)
        };
    }
}

/// Replaces column `column` of `P` by `a`, `b` and `s·a + (1−s)·b` with random
/// nonnegative `a`, `b` and `s ∈ (0, 1)`, and checks `OPT(mid) ≤ max(OPT(a), OPT(b)) + tol`.
pub fn coordinate_quasiconvexity_probe<R: Rng + ?Sized>(
    opt: impl Fn(&Matrix) -> Result<f64>,
    p: &Matrix,
    column: usize,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ProbeReport> {
    if column >= p.cols() {
        return Err(Error::InvalidInputs(format!(
            "column {column} of a {}-column P",
            p.cols()
        )));
    }
    if p.as_slice().iter().any(|&v| v < 0.0) {
        return Err(Error::HypothesisViolated("P must be nonnegative".into()));
    }
    let mut report = ProbeReport::default();
    for _ in 0..trials {
        let a: Vec<f64> = (0..p.rows()).map(|_| rng.random_range(0.0..1.0)).collect();
        let b: Vec<f64> = (0..p.rows()).map(|_| rng.random_range(0.0..1.0)).collect();
        let s: f64 = rng.random_range(0.01..0.99);
        let mid: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| s * x + (1.0 - s) * y)
            .collect();
        let with = |col: &[f64]| {
            let mut q = p.clone();
            q.set_column(column, col);
            opt(&q)
        };
        match (with(&a), with(&b), with(&mid)) {
            (Ok(fa), Ok(fb), Ok(fm)) => report.record(fm, fa, fb, tol),
            _ => report.failures += 1,
        }
    }
    Ok(report)
}

/// Checks `OPT((1−s)P₀ + sP₁) ≤ max(OPT(P₀), OPT(P₁)) + tol` at `points` interior values of `s`.
pub fn segment_probe(
    opt: impl Fn(&Matrix) -> Result<f64>,
    p0: &Matrix,
    p1: &Matrix,
    points: usize,
    tol: f64,
) -> Result<ProbeReport> {
    if p0.shape() != p1.shape() {
        return Err(Error::dims("segment endpoints differ in shape"));
    }
    let (f0, f1) = (opt(p0)?, opt(p1)?);
    let mut report = ProbeReport::default();
    for k in 1..=points {
        let s = k as f64 / (points + 1) as f64;
        let q = Matrix::from_fn(p0.rows(), p0.cols(), |i, j| {
            (1.0 - s) * p0[(i, j)] + s * p1[(i, j)]
        });
        match opt(&q) {
            Ok(fm) => report.record(fm, f0, f1, tol),
            Err(_) => report.failures += 1,
        }
    }
    Ok(report)
}
