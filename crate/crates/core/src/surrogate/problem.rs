use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, Scalar};
use crate::optlayer::{
    feasible_point, kkt_jacobian_p, kkt_vjp, solve_qp, PrimalDualSolution, QuadraticProgram,
};

use super::Reparameterization;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformOptions<T> {
    /// Append `-y ≤ 0` rows.
    pub nonneg_y: bool,
    /// Adds `ridge · I` to the y-space Hessian.
    pub ridge: T,
}

impl<T: Scalar> Default for TransformOptions<T> {
    fn default() -> Self {
        Self {
            nonneg_y: false,
            ridge: T::zero(),
        }
    }
}

/// The base x-space QP composed with `x = P y`:
/// `min ½yᵀ(PᵀHP + r·I)y + (Pᵀc)ᵀy  s.t.  APy = b,  GPy ≤ h  [, -y ≤ 0]`.
#[derive(Debug, Clone)]
pub struct SurrogateProblem<T> {
    pub base: QuadraticProgram<T>,
    pub p: DenseMatrix<T>,
    pub qp: QuadraticProgram<T>,
    pub extra_ineq: usize,
}

pub fn transform_problem<T: Scalar>(
    base: &QuadraticProgram<T>,
    p: &DenseMatrix<T>,
    opts: &TransformOptions<T>,
) -> Result<SurrogateProblem<T>> {
    let sp = compose(base, p, opts)?;
    match feasible_point(&sp.qp) {
        Ok(_) => Ok(sp),
        Err(Error::Infeasible { .. }) => Err(Error::EmptyFeasibleSet),
        Err(e) => Err(e),
    }
}

/// [`transform_problem`] without the feasibility check.
pub fn compose<T: Scalar>(
    base: &QuadraticProgram<T>,
    p: &DenseMatrix<T>,
    opts: &TransformOptions<T>,
) -> Result<SurrogateProblem<T>> {
    if p.rows() != base.dim() {
        return Err(Error::dims(format!(
            "P has {} rows, base dimension is {}",
            p.rows(),
            base.dim()
        )));
    }
    if !p.is_finite() {
        return Err(Error::NonFinite("materialized P".into()));
    }
    let mut h = p.tr_matmul(&base.h.matmul(p)?)?;
    // Exact symmetry; PᵀHP is symmetric only up to rounding.
    for i in 0..h.rows() {
        for j in 0..i {
            let v = (h[(i, j)] + h[(j, i)]) * T::lit(0.5);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    if opts.ridge != T::zero() {
        h.add_diagonal(opts.ridge);
    }
    let mut qp = QuadraticProgram::new(h, p.tr_matvec(&base.c)?)?
        .with_equalities(base.a_eq.matmul(p)?, base.b_eq.clone())?
        .with_inequalities(base.g_ineq.matmul(p)?, base.h_ineq.clone())?;
    let mut extra_ineq = 0;
    if opts.nonneg_y {
        qp = qp.with_nonnegativity()?;
        extra_ineq = p.cols();
    }
    Ok(SurrogateProblem {
        base: base.clone(),
        p: p.clone(),
        qp,
        extra_ineq,
    })
}

impl<T: Scalar> SurrogateProblem<T> {
    pub fn solve(&self) -> Result<PrimalDualSolution<T>> {
        solve_qp(&self.qp).map_err(|e| match e {
            Error::Infeasible { .. } => Error::EmptyFeasibleSet,
            other => other,
        })
    }

    pub fn lift(&self, y: &[T]) -> Result<DenseVector<T>> {
        self.p.matvec(y)
    }

    /// `dy*/dP`, shape `m × (n·m)`, column `i·m + j`.
    pub fn jacobian_p(&self, sol: &PrimalDualSolution<T>) -> Result<DenseMatrix<T>> {
        kkt_jacobian_p(&self.base, &self.p, &self.qp, sol)
    }

    /// One adjoint solve for the loss `L(x = P y*)` with upstream `dL/dx`.
    /// Returns the gradients for `P` (before the materialization chain) and the base data `H`, `c`.
    pub fn vjp(&self, sol: &PrimalDualSolution<T>, dl_dx: &[T]) -> Result<SurrogateGradient<T>> {
        let (n, m) = (self.p.rows(), self.p.cols());
        if dl_dx.len() != n || sol.y.len() != m {
            return Err(Error::dims("surrogate vjp dimensions"));
        }
        let dl_dy = self.p.tr_matvec(dl_dx)?;
        let g = kkt_vjp(&self.qp, sol, &dl_dy)?;
        let base = &self.base;

        let msym = g.h.add(&g.h.transpose())?;
        let mut dp = base.h.matmul(&self.p)?.matmul(&msym)?;
        dp.axpy(T::one(), &DenseMatrix::outer(&base.c, &g.c))?;
        dp.axpy(T::one(), &base.a_eq.tr_matmul(&g.a_eq)?)?;
        let q = base.num_ineq();
        let g_base = DenseMatrix::from_fn(q, m, |r, k| g.g_ineq[(r, k)]);
        dp.axpy(T::one(), &base.g_ineq.tr_matmul(&g_base)?)?;
        dp.axpy(T::one(), &DenseMatrix::outer(dl_dx, &sol.y))?;

        Ok(SurrogateGradient {
            p: dp,
            h: self.p.matmul(&g.h)?.matmul_tr(&self.p)?,
            c: self.p.matvec(&g.c)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateGradient<T> {
    /// `dL/dP` (materialized `P`).
    pub p: DenseMatrix<T>,
    /// `dL/dH` of the base problem.
    pub h: DenseMatrix<T>,
    /// `dL/dc` of the base problem.
    pub c: DenseVector<T>,
}

/// Total derivative in `P_raw` from a full Jacobian: explicit `dL/dx ⊗ y*` plus
/// implicit `Σ_k dL/dy_k · dy_k/dP`, chained through the materialization.
pub fn grad_wrt_p<T: Scalar>(
    dl_dx: &[T],
    y_star: &[T],
    dy_dp: &DenseMatrix<T>,
    dl_dy: &[T],
    rep: &Reparameterization<T>,
) -> Result<DenseMatrix<T>> {
    let (n, m) = (rep.n(), rep.m());
    if dl_dx.len() != n || y_star.len() != m || dl_dy.len() != m || dy_dp.shape() != (m, n * m) {
        return Err(Error::dims("grad_wrt_p argument shapes"));
    }
    let implicit = dy_dp.tr_matvec(dl_dy)?;
    let dp = DenseMatrix::from_fn(n, m, |i, j| dl_dx[i] * y_star[j] + implicit[i * m + j]);
    rep.pullback(&dp)
}
