use super::{PrimalDualSolution, QuadraticProgram};
use crate::error::{Error, Result};
use crate::numerics::{lstsq, DenseMatrix, DenseVector, Scalar, SymmetricFactorization};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpOptions {
    /// Cap on working-set changes.
    pub max_iterations: usize,
    /// Absolute primal feasibility tolerance, scaled by `max(1, ‖b‖∞, ‖h‖∞)`.
    pub feas_tol: f64,
}

impl Default for QpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            feas_tol: 1e-9,
        }
    }
}

pub fn solve_qp<T: Scalar>(qp: &QuadraticProgram<T>) -> Result<PrimalDualSolution<T>> {
    solve_qp_with(qp, &QpOptions::default())
}

/// Primal active-set method. Rows of `G` with a single nonzero are treated as
/// variable bounds and eliminated from the linear systems while active.
pub fn solve_qp_with<T: Scalar>(
    qp: &QuadraticProgram<T>,
    opts: &QpOptions,
) -> Result<PrimalDualSolution<T>> {
    let y0 = feasible_point_with(qp, opts)?;
    ActiveSet::new(qp, feas_tol(qp, opts)).run(y0, opts.max_iterations)
}

/// A point satisfying every constraint: the minimal-norm equality solution when
/// it is feasible, else the result of the phase-one problem.
pub fn feasible_point<T: Scalar>(qp: &QuadraticProgram<T>) -> Result<DenseVector<T>> {
    feasible_point_with(qp, &QpOptions::default())
}

fn feas_tol<T: Scalar>(qp: &QuadraticProgram<T>, opts: &QpOptions) -> T {
    let scale = T::one().max(qp.b_eq.max_abs()).max(qp.h_ineq.max_abs());
    T::lit(opts.feas_tol) * scale
}

fn feasible_point_with<T: Scalar>(
    qp: &QuadraticProgram<T>,
    opts: &QpOptions,
) -> Result<DenseVector<T>> {
    qp.validate()?;
    let feas_tol = feas_tol(qp, opts);
    let y0 = if qp.num_eq() == 0 {
        DenseVector::zeros(qp.dim())
    } else {
        let gram = qp.a_eq.matmul_tr(&qp.a_eq)?;
        let z = lstsq(&gram, &qp.b_eq, T::lit(1e-12))?;
        let y0 = qp.a_eq.tr_matvec(&z)?;
        let residual = qp.a_eq.matvec(&y0)?.sub(&qp.b_eq)?.max_abs();
        if residual > feas_tol {
            return Err(Error::Infeasible {
                residual: residual.to_f64_lossy(),
            });
        }
        y0
    };
    if max_violation(qp, &y0)? > feas_tol {
        phase_one(qp, &y0, opts, feas_tol)
    } else {
        Ok(y0)
    }
}

fn max_violation<T: Scalar>(qp: &QuadraticProgram<T>, y: &[T]) -> Result<T> {
    let gy = qp.g_ineq.matvec(y)?;
    Ok(gy
        .iter()
        .zip(qp.h_ineq.iter())
        .fold(T::zero(), |acc, (&g, &h)| acc.max(g - h)))
}

/// `min s` over `(y, s)` with `A y = b`, `G y − s ≤ h`, `s ≥ 0`, lightly regularized.
fn phase_one<T: Scalar>(
    qp: &QuadraticProgram<T>,
    y0: &[T],
    opts: &QpOptions,
    feas_tol: T,
) -> Result<DenseVector<T>> {
    let n = qp.dim();
    let q = qp.num_ineq();
    let h = DenseMatrix::identity(n + 1).scaled(T::lit(1e-8));
    let c = DenseVector::basis(n + 1, n);
    let a = DenseMatrix::from_fn(qp.num_eq(), n + 1, |i, j| {
        if j < n {
            qp.a_eq[(i, j)]
        } else {
            T::zero()
        }
    });
    let g = DenseMatrix::from_fn(q + 1, n + 1, |i, j| match (i < q, j < n) {
        (true, true) => qp.g_ineq[(i, j)],
        (false, true) => T::zero(),
        (_, false) => -T::one(),
    });
    let hv: DenseVector<T> = qp
        .h_ineq
        .iter()
        .copied()
        .chain(std::iter::once(T::zero()))
        .collect();
    let aux = QuadraticProgram::new(h, c)?
        .with_equalities(a, qp.b_eq.clone())?
        .with_inequalities(g, hv)?;
    let s0 = max_violation(qp, y0)?.max(T::zero()) + T::one();
    let start: DenseVector<T> = y0.iter().copied().chain(std::iter::once(s0)).collect();
    let sol = ActiveSet::new(&aux, feas_tol).run(start, opts.max_iterations.max(2 * (n + q)))?;
    let s = sol.y[n];
    if s > feas_tol {
        return Err(Error::Infeasible {
            residual: s.to_f64_lossy(),
        });
    }
    Ok(sol.y.as_slice()[..n].into())
}

struct ActiveSet<'a, T> {
    qp: &'a QuadraticProgram<T>,
    feas_tol: T,
    /// For single-nonzero rows: (variable, coefficient).
    bound_of: Vec<Option<(usize, T)>>,
    /// Bound row currently fixing each variable.
    fixed: Vec<Option<usize>>,
    /// General (non-bound) rows in the working set.
    general: Vec<usize>,
}

impl<'a, T: Scalar> ActiveSet<'a, T> {
    fn new(qp: &'a QuadraticProgram<T>, feas_tol: T) -> Self {
        let bound_of = (0..qp.num_ineq())
            .map(|i| {
                let row = qp.g_ineq.row(i);
                let mut nz = row.iter().enumerate().filter(|(_, v)| **v != T::zero());
                match (nz.next(), nz.next()) {
                    (Some((k, &v)), None) => Some((k, v)),
                    _ => None,
                }
            })
            .collect();
        Self {
            qp,
            feas_tol,
            bound_of,
            fixed: vec![None; qp.dim()],
            general: Vec::new(),
        }
    }

    fn bound_value(&self, row: usize) -> T {
        let (_, g) = self.bound_of[row].expect("bound row");
        self.qp.h_ineq[row] / g
    }

    fn in_working_set(&self, row: usize) -> bool {
        match self.bound_of[row] {
            Some((k, _)) => self.fixed[k] == Some(row),
            None => self.general.contains(&row),
        }
    }

    fn run(
        mut self,
        mut y: DenseVector<T>,
        max_iterations: usize,
    ) -> Result<PrimalDualSolution<T>> {
        self.seed_bounds(&mut y);
        let obj_scale = T::one().max(self.qp.h.max_abs()).max(self.qp.c.max_abs());
        let dual_tol = T::lit(1e-11) * obj_scale;
        for _ in 0..max_iterations {
            let (y_hat, mu) = self.solve_eqp()?;
            let step = y_hat.sub(&y)?;
            if step.max_abs() <= T::lit(1e-12) * T::one().max(y.max_abs()) {
                y = y_hat;
                let lam = self.multipliers(&y, &mu)?;
                let worst = (0..lam.len())
                    .filter(|&i| self.in_working_set(i))
                    .min_by(|&i, &j| {
                        lam[i]
                            .partial_cmp(&lam[j])
                            .unwrap_or(std::cmp::Ordering::Equal)
                    });
                match worst {
                    Some(i) if lam[i] < -dual_tol => self.remove(i),
                    _ => return self.finish(y, &mu, lam),
                }
                continue;
            }

            let mut alpha = T::one();
            let mut blocking = None;
            for i in 0..self.qp.num_ineq() {
                if self.in_working_set(i) {
                    continue;
                }
                if let Some((k, _)) = self.bound_of[i] {
                    if self.fixed[k].is_some() {
                        continue;
                    }
                }
                let g = self.qp.g_ineq.row(i);
                let gp = crate::numerics::dot(g, &step);
                if gp <= T::lit(1e-14) * step.max_abs() {
                    continue;
                }
                let slack = (self.qp.h_ineq[i] - crate::numerics::dot(g, &y)).max(T::zero());
                let a = slack / gp;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
            match blocking {
                None => y = y_hat,
                Some(i) => {
                    y.axpy(alpha, &step);
                    self.add(i, &mut y);
                }
            }
        }
        Err(Error::MaxIterations {
            iterations: max_iterations,
        })
    }

    /// Activates bound rows tight at the start, one per variable, if the
    /// resulting reduced system is nonsingular.
    fn seed_bounds(&mut self, y: &mut DenseVector<T>) {
        let mut seeded = y.clone();
        for i in 0..self.qp.num_ineq() {
            if let Some((k, _)) = self.bound_of[i] {
                let v = self.bound_value(i);
                if self.fixed[k].is_none() && (y[k] - v).abs() <= self.feas_tol {
                    self.fixed[k] = Some(i);
                    seeded[k] = v;
                }
            }
        }
        if self.fixed.iter().any(Option::is_some) {
            if self.solve_eqp().is_ok() {
                *y = seeded;
            } else {
                self.fixed.iter_mut().for_each(|f| *f = None);
            }
        }
    }

    fn add(&mut self, row: usize, y: &mut DenseVector<T>) {
        match self.bound_of[row] {
            Some((k, _)) => {
                self.fixed[k] = Some(row);
                y[k] = self.bound_value(row);
            }
            None => self.general.push(row),
        }
    }

    fn remove(&mut self, row: usize) {
        match self.bound_of[row] {
            Some((k, _)) => self.fixed[k] = None,
            None => self.general.retain(|&r| r != row),
        }
    }

    /// Minimizer over the working set; returns `y` and the multipliers of
    /// `[A; G_general]` in that order.
    fn solve_eqp(&self) -> Result<(DenseVector<T>, DenseVector<T>)> {
        let qp = self.qp;
        let n = qp.dim();
        let p = qp.num_eq();
        let free: Vec<usize> = (0..n).filter(|&k| self.fixed[k].is_none()).collect();
        let mut vb = DenseVector::zeros(n);
        for k in 0..n {
            if let Some(row) = self.fixed[k] {
                vb[k] = self.bound_value(row);
            }
        }
        let nf = free.len();
        let nc = p + self.general.len();
        let constraint_row = |r: usize| -> (&[T], T) {
            if r < p {
                (qp.a_eq.row(r), qp.b_eq[r])
            } else {
                let g = self.general[r - p];
                (qp.g_ineq.row(g), qp.h_ineq[g])
            }
        };

        let dim = nf + nc;
        let mut k = DenseMatrix::zeros(dim, dim);
        let mut rhs = DenseVector::zeros(dim);
        let hvb = qp.h.matvec(&vb)?;
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate() {
                k[(a, b)] = qp.h[(i, j)];
            }
            rhs[a] = -qp.c[i] - hvb[i];
        }
        for r in 0..nc {
            let (row, d) = constraint_row(r);
            for (a, &i) in free.iter().enumerate() {
                k[(nf + r, a)] = row[i];
                k[(a, nf + r)] = row[i];
            }
            rhs[nf + r] = d - crate::numerics::dot(row, &vb);
        }

        let z = if dim == 0 {
            DenseVector::zeros(0)
        } else {
            let f = SymmetricFactorization::new(&k).map_err(|e| match e {
                Error::SingularMatrix { .. } => Error::SingularKkt,
                other => other,
            })?;
            let mut z: DenseVector<T> = f.solve_vec(&rhs).into();
            let r = rhs.sub(&k.matvec(&z)?)?;
            z.axpy(T::one(), &f.solve_vec(&r));
            z
        };
        if !z.is_finite() {
            return Err(Error::NumericalBreakdown("active-set subproblem".into()));
        }
        let mut y = vb;
        for (a, &i) in free.iter().enumerate() {
            y[i] = z[a];
        }
        Ok((y, z.as_slice()[nf..].into()))
    }

    /// Full inequality multiplier vector; bound multipliers from stationarity.
    fn multipliers(&self, y: &[T], mu: &[T]) -> Result<DenseVector<T>> {
        let qp = self.qp;
        let p = qp.num_eq();
        let mut lam = DenseVector::zeros(qp.num_ineq());
        for (idx, &row) in self.general.iter().enumerate() {
            lam[row] = mu[p + idx];
        }
        let mut r = qp.h.matvec(y)?;
        r.axpy(T::one(), &qp.c);
        r.axpy(T::one(), &qp.a_eq.tr_matvec(&mu[..p])?);
        r.axpy(T::one(), &qp.g_ineq.tr_matvec(&lam)?);
        for k in 0..qp.dim() {
            if let Some(row) = self.fixed[k] {
                let (_, g) = self.bound_of[row].expect("bound row");
                lam[row] = -r[k] / g;
            }
        }
        Ok(lam)
    }

    fn finish(
        &self,
        y: DenseVector<T>,
        mu: &[T],
        mut lam: DenseVector<T>,
    ) -> Result<PrimalDualSolution<T>> {
        let qp = self.qp;
        for l in lam.iter_mut() {
            *l = l.max(T::zero());
        }
        let nu: DenseVector<T> = mu[..qp.num_eq()].into();
        let mut active_set: Vec<usize> = (0..qp.num_ineq())
            .filter(|&i| self.in_working_set(i))
            .collect();
        active_set.sort_unstable();
        let mut grad = qp.h.matvec(&y)?;
        grad.axpy(T::one(), &qp.c);
        grad.axpy(T::one(), &qp.a_eq.tr_matvec(&nu)?);
        grad.axpy(T::one(), &qp.g_ineq.tr_matvec(&lam)?);
        Ok(PrimalDualSolution {
            kkt_residual: grad.max_abs(),
            y,
            nu,
            lam,
            active_set,
        })
    }
}
