use super::{PrimalDualSolution, QuadraticProgram};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, Scalar, SymmetricFactorization};

/// Derivative of the problem data with respect to one scalar parameter.
/// `None` means the block does not depend on it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QpDerivative<T> {
    pub h: Option<DenseMatrix<T>>,
    pub c: Option<DenseVector<T>>,
    pub a_eq: Option<DenseMatrix<T>>,
    pub b_eq: Option<DenseVector<T>>,
    pub g_ineq: Option<DenseMatrix<T>>,
    pub h_ineq: Option<DenseVector<T>>,
}

/// How the problem data depend on a parameter vector θ.
pub trait QpParameterization<T> {
    fn num_params(&self) -> usize;
    fn derivative(&self, index: usize) -> QpDerivative<T>;
}

impl<T: Clone> QpParameterization<T> for [QpDerivative<T>] {
    fn num_params(&self) -> usize {
        self.len()
    }

    fn derivative(&self, index: usize) -> QpDerivative<T> {
        self[index].clone()
    }
}

impl<T: Clone> QpParameterization<T> for Vec<QpDerivative<T>> {
    fn num_params(&self) -> usize {
        self.len()
    }

    fn derivative(&self, index: usize) -> QpDerivative<T> {
        self[index].clone()
    }
}

/// Gradient of a scalar loss with respect to every block of problem data,
/// active set frozen. Rows of `g_ineq`/`h_ineq` outside the active set are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QpDataGradient<T> {
    pub h: DenseMatrix<T>,
    pub c: DenseVector<T>,
    pub a_eq: DenseMatrix<T>,
    pub b_eq: DenseVector<T>,
    pub g_ineq: DenseMatrix<T>,
    pub h_ineq: DenseVector<T>,
}

/// Factored `[H Aᵀ G_Wᵀ; A 0 0; G_W 0 0]` at a solution.
pub struct KktSystem<'a, T> {
    qp: &'a QuadraticProgram<T>,
    sol: &'a PrimalDualSolution<T>,
    factor: SymmetricFactorization<T>,
}

impl<'a, T: Scalar> KktSystem<'a, T> {
    pub fn new(qp: &'a QuadraticProgram<T>, sol: &'a PrimalDualSolution<T>) -> Result<Self> {
        let n = qp.dim();
        let p = qp.num_eq();
        if sol.y.len() != n || sol.nu.len() != p || sol.lam.len() != qp.num_ineq() {
            return Err(Error::dims("solution does not match the problem"));
        }
        if sol.active_set.iter().any(|&i| i >= qp.num_ineq()) {
            return Err(Error::dims("active set index out of range"));
        }
        let w = &sol.active_set;
        let dim = n + p + w.len();
        let mut k = DenseMatrix::zeros(dim, dim);
        for i in 0..n {
            k.row_mut(i)[..n].copy_from_slice(qp.h.row(i));
        }
        let rows = (0..p)
            .map(|r| qp.a_eq.row(r))
            .chain(w.iter().map(|&r| qp.g_ineq.row(r)));
        for (r, row) in rows.enumerate() {
            for j in 0..n {
                k[(n + r, j)] = row[j];
                k[(j, n + r)] = row[j];
            }
        }
        let factor = SymmetricFactorization::new(&k).map_err(|e| match e {
            Error::SingularMatrix { .. } => Error::SingularKkt,
            other => other,
        })?;
        Ok(Self { qp, sol, factor })
    }

    /// Solves `K u = rhs` for the stacked `[y; ν; λ_W]` layout.
    pub fn solve(&self, rhs: &[T]) -> DenseVector<T> {
        self.factor.solve_vec(rhs).into()
    }

    /// `dy*` for one parameter direction.
    pub fn differential(&self, d: &QpDerivative<T>) -> Result<DenseVector<T>> {
        let (qp, sol) = (self.qp, self.sol);
        let n = qp.dim();
        let p = qp.num_eq();
        let w = &sol.active_set;
        let mut rhs = DenseVector::zeros(n + p + w.len());
        {
            let top = &mut rhs.as_mut_slice()[..n];
            if let Some(dh) = &d.h {
                add_into(top, &dh.matvec(&sol.y)?);
            }
            if let Some(dc) = &d.c {
                add_into(top, dc);
            }
            if let Some(da) = &d.a_eq {
                add_into(top, &da.tr_matvec(&sol.nu)?);
            }
            if let Some(dg) = &d.g_ineq {
                add_into(top, &dg.tr_matvec(&sol.lam)?);
            }
        }
        if let Some(da) = &d.a_eq {
            add_into(&mut rhs.as_mut_slice()[n..n + p], &da.matvec(&sol.y)?);
        }
        if let Some(db) = &d.b_eq {
            for (r, &v) in rhs.as_mut_slice()[n..n + p].iter_mut().zip(db.iter()) {
                *r = *r - v;
            }
        }
        for (idx, &row) in w.iter().enumerate() {
            let mut v = T::zero();
            if let Some(dg) = &d.g_ineq {
                v = crate::numerics::dot(dg.row(row), &sol.y);
            }
            if let Some(dh) = &d.h_ineq {
                v = v - dh[row];
            }
            rhs[n + p + idx] = v;
        }
        let z = self.solve(&rhs.scaled(-T::one()));
        Ok(z.as_slice()[..n].into())
    }
}

fn add_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d = *d + s;
    }
}

/// `dy*/dθ`, one column per parameter.
pub fn kkt_jacobian_theta<T, P>(
    qp: &QuadraticProgram<T>,
    sol: &PrimalDualSolution<T>,
    param: &P,
) -> Result<DenseMatrix<T>>
where
    T: Scalar,
    P: QpParameterization<T> + ?Sized,
{
    let sys = KktSystem::new(qp, sol)?;
    let mut jac = DenseMatrix::zeros(qp.dim(), param.num_params());
    for j in 0..param.num_params() {
        jac.set_column(j, &sys.differential(&param.derivative(j))?);
    }
    Ok(jac)
}

/// Data blocks of `min ½yᵀ(PᵀHP + R)y + (Pᵀc)ᵀy  s.t.  APy = b,  [GP; E]y ≤ [h; e]`
/// viewed as functions of the entries of `P`.
pub struct ComposedWithP<'a, T> {
    pub base: &'a QuadraticProgram<T>,
    pub p: &'a DenseMatrix<T>,
    /// Number of y-space rows appended after the composed base rows.
    pub extra_ineq: usize,
    hp: DenseMatrix<T>,
}

impl<'a, T: Scalar> ComposedWithP<'a, T> {
    pub fn new(
        base: &'a QuadraticProgram<T>,
        p: &'a DenseMatrix<T>,
        extra_ineq: usize,
    ) -> Result<Self> {
        if p.rows() != base.dim() {
            return Err(Error::dims(format!(
                "P has {} rows, base dimension {}",
                p.rows(),
                base.dim()
            )));
        }
        Ok(Self {
            hp: base.h.matmul(p)?,
            base,
            p,
            extra_ineq,
        })
    }
}

impl<T: Scalar> QpParameterization<T> for ComposedWithP<'_, T> {
    fn num_params(&self) -> usize {
        self.p.rows() * self.p.cols()
    }

    /// Index `i·m + j` is `∂/∂P_ij`.
    fn derivative(&self, index: usize) -> QpDerivative<T> {
        let m = self.p.cols();
        let (i, j) = (index / m, index % m);
        let base = self.base;
        let mut dh = DenseMatrix::zeros(m, m);
        for k in 0..m {
            let v = self.hp[(i, k)];
            dh[(j, k)] = dh[(j, k)] + v;
            dh[(k, j)] = dh[(k, j)] + v;
        }
        let dc = DenseVector::basis(m, j).scaled(base.c[i]);
        let da = DenseMatrix::from_fn(base.num_eq(), m, |r, k| {
            if k == j {
                base.a_eq[(r, i)]
            } else {
                T::zero()
            }
        });
        let q = base.num_ineq();
        let dg = DenseMatrix::from_fn(q + self.extra_ineq, m, |r, k| {
            if k == j && r < q {
                base.g_ineq[(r, i)]
            } else {
                T::zero()
            }
        });
        QpDerivative {
            h: Some(dh),
            c: Some(dc),
            a_eq: Some(da),
            g_ineq: Some(dg),
            ..Default::default()
        }
    }
}

/// `dy*/dP` for the composed problem `y_qp`, shape `m × (n·m)`, column `i·m + j`.
pub fn kkt_jacobian_p<T: Scalar>(
    base: &QuadraticProgram<T>,
    p: &DenseMatrix<T>,
    y_qp: &QuadraticProgram<T>,
    sol: &PrimalDualSolution<T>,
) -> Result<DenseMatrix<T>> {
    if y_qp.num_ineq() < base.num_ineq() || y_qp.num_eq() != base.num_eq() || y_qp.dim() != p.cols()
    {
        return Err(Error::dims(
            "y-space problem is not a composition of the base problem",
        ));
    }
    let param = ComposedWithP::new(base, p, y_qp.num_ineq() - base.num_ineq())?;
    kkt_jacobian_theta(y_qp, sol, &param)
}

/// Adjoint of the frozen-active-set KKT map: one solve gives `dL/d(data)` for `dL/dy*`.
pub fn kkt_vjp<T: Scalar>(
    qp: &QuadraticProgram<T>,
    sol: &PrimalDualSolution<T>,
    dl_dy: &[T],
) -> Result<QpDataGradient<T>> {
    let n = qp.dim();
    let p = qp.num_eq();
    if dl_dy.len() != n {
        return Err(Error::dims(format!(
            "dL/dy has length {}, expected {n}",
            dl_dy.len()
        )));
    }
    let sys = KktSystem::new(qp, sol)?;
    let w = &sol.active_set;
    let mut rhs = DenseVector::zeros(n + p + w.len());
    rhs.as_mut_slice()[..n].copy_from_slice(dl_dy);
    let u = sys.solve(&rhs);
    let (uy, rest) = u.as_slice().split_at(n);
    let (un, ul) = rest.split_at(p);
    let y = &sol.y;

    let h = DenseMatrix::from_fn(n, n, |i, j| -uy[i] * y[j]);
    let c: DenseVector<T> = uy.iter().map(|&v| -v).collect();
    let a_eq = DenseMatrix::from_fn(p, n, |i, j| -(uy[j] * sol.nu[i] + un[i] * y[j]));
    let b_eq: DenseVector<T> = un.into();
    let mut g_ineq = DenseMatrix::zeros(qp.num_ineq(), n);
    let mut h_ineq = DenseVector::zeros(qp.num_ineq());
    for (idx, &row) in w.iter().enumerate() {
        for (j, g) in g_ineq.row_mut(row).iter_mut().enumerate() {
            *g = -(uy[j] * sol.lam[row] + ul[idx] * y[j]);
        }
        h_ineq[row] = ul[idx];
    }
    Ok(QpDataGradient {
        h,
        c,
        a_eq,
        b_eq,
        g_ineq,
        h_ineq,
    })
}

impl<T: Scalar> QuadraticProgram<T> {
    /// Copy with `H + eps·I`, the usual retry after [`Error::SingularKkt`].
    pub fn with_ridge(&self, eps: T) -> Self {
        let mut out = self.clone();
        out.h.add_diagonal(eps);
        out
    }
}
