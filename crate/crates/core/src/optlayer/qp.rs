use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, Scalar};

/// `min ½ yᵀHy + cᵀy  s.t.  A y = b,  G y ≤ h`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram<T> {
    pub h: DenseMatrix<T>,
    pub c: DenseVector<T>,
    pub a_eq: DenseMatrix<T>,
    pub b_eq: DenseVector<T>,
    pub g_ineq: DenseMatrix<T>,
    pub h_ineq: DenseVector<T>,
}

/// Primal optimum with multipliers for `Hy + c + Aᵀν + Gᵀλ = 0`, `λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualSolution<T> {
    pub y: DenseVector<T>,
    pub nu: DenseVector<T>,
    pub lam: DenseVector<T>,
    /// Sorted indices of inequality rows held tight by the solver.
    pub active_set: Vec<usize>,
    pub kkt_residual: T,
}

impl<T: Scalar> QuadraticProgram<T> {
    /// Unconstrained problem; add constraints with the `with_*` methods.
    pub fn new(h: DenseMatrix<T>, c: DenseVector<T>) -> Result<Self> {
        let n = c.len();
        Self {
            h,
            c,
            a_eq: DenseMatrix::zeros(0, n),
            b_eq: DenseVector::zeros(0),
            g_ineq: DenseMatrix::zeros(0, n),
            h_ineq: DenseVector::zeros(0),
        }
        .validated()
    }

    pub fn with_equalities(mut self, a: DenseMatrix<T>, b: DenseVector<T>) -> Result<Self> {
        self.a_eq = a;
        self.b_eq = b;
        self.validated()
    }

    pub fn with_inequalities(mut self, g: DenseMatrix<T>, h: DenseVector<T>) -> Result<Self> {
        self.g_ineq = g;
        self.h_ineq = h;
        self.validated()
    }

    /// Appends `G' y ≤ h'` below the existing inequality rows.
    pub fn append_inequalities(mut self, g: &DenseMatrix<T>, h: &[T]) -> Result<Self> {
        self.g_ineq = self.g_ineq.vstack(g)?;
        self.h_ineq = self.h_ineq.iter().chain(h).copied().collect();
        self.validated()
    }

    /// Adds `-y ≤ 0` rows.
    pub fn with_nonnegativity(self) -> Result<Self> {
        let n = self.dim();
        let neg = DenseMatrix::identity(n).scaled(-T::one());
        self.append_inequalities(&neg, &vec![T::zero(); n])
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn num_ineq(&self) -> usize {
        self.h_ineq.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.h.shape() != (n, n) {
            return Err(Error::dims(format!(
                "H is {:?}, c has length {n}",
                self.h.shape()
            )));
        }
        if self.a_eq.shape() != (self.b_eq.len(), n) {
            return Err(Error::dims(format!(
                "Aeq is {:?}, beq has length {}",
                self.a_eq.shape(),
                self.b_eq.len()
            )));
        }
        if self.g_ineq.shape() != (self.h_ineq.len(), n) {
            return Err(Error::dims(format!(
                "Gineq is {:?}, hineq has length {}",
                self.g_ineq.shape(),
                self.h_ineq.len()
            )));
        }
        let finite = self.h.is_finite()
            && self.c.is_finite()
            && self.a_eq.is_finite()
            && self.b_eq.is_finite()
            && self.g_ineq.is_finite()
            && self.h_ineq.is_finite();
        if !finite {
            return Err(Error::NonFinite("quadratic program data".into()));
        }
        let tol = T::lit(1e-10) * self.h.max_abs().max(T::one());
        if !self.h.is_symmetric(tol) {
            return Err(Error::InvalidInputs("H is not symmetric".into()));
        }
        Ok(())
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn objective(&self, y: &[T]) -> T {
        let hy = self.h.matvec(y).expect("dimension checked by caller");
        T::lit(0.5) * crate::numerics::dot(y, &hy) + crate::numerics::dot(&self.c, y)
    }

    /// Same feasible set, objective `α·(½yᵀHy + cᵀy)`.
    pub fn scaled_objective(&self, alpha: T) -> Self {
        Self {
            h: self.h.scaled(alpha),
            c: self.c.scaled(alpha),
            ..self.clone()
        }
    }

    /// Plain-text fixture: a header line, then labelled CSV blocks.
    pub fn to_fixture_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "qp n={} eq={} ineq={}",
            self.dim(),
            self.num_eq(),
            self.num_ineq()
        );
        let vector_csv = |v: &[T]| {
            let mut s = v
                .iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",");
            s.push('\n');
            s
        };
        out.push_str("H\n");
        out.push_str(&self.h.to_csv());
        out.push_str("c\n");
        out.push_str(&vector_csv(&self.c));
        out.push_str("Aeq\n");
        out.push_str(&self.a_eq.to_csv());
        out.push_str("beq\n");
        out.push_str(&vector_csv(&self.b_eq));
        out.push_str("Gineq\n");
        out.push_str(&self.g_ineq.to_csv());
        out.push_str("hineq\n");
        out.push_str(&vector_csv(&self.h_ineq));
        out
    }
}

impl QuadraticProgram<f64> {
    pub fn from_fixture_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty fixture".into()))?;
        let mut dims = [None; 3];
        let mut tokens = header.split_whitespace();
        if tokens.next() != Some("qp") {
            return Err(Error::Parse(format!("bad fixture header {header:?}")));
        }
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header token {tok:?}")))?;
            let val: usize = val
                .parse()
                .map_err(|_| Error::Parse(format!("bad count {tok:?}")))?;
            match key {
                "n" => dims[0] = Some(val),
                "eq" => dims[1] = Some(val),
                "ineq" => dims[2] = Some(val),
                _ => return Err(Error::Parse(format!("unknown header key {key:?}"))),
            }
        }
        let [Some(n), Some(p), Some(q)] = dims else {
            return Err(Error::Parse("header must give n, eq and ineq".into()));
        };
        let mut rest: Vec<&str> = lines.collect();
        rest.reverse();
        let mut block = |label: &str, rows: usize, cols: usize| -> Result<DenseMatrix<f64>> {
            match rest.pop() {
                Some(l) if l.trim() == label => {}
                other => return Err(Error::Parse(format!("expected {label:?}, found {other:?}"))),
            }
            let mut text = String::new();
            for _ in 0..rows {
                let l = rest
                    .pop()
                    .ok_or_else(|| Error::Parse(format!("block {label} truncated")))?;
                text.push_str(l);
                text.push('\n');
            }
            let m = if rows == 0 {
                DenseMatrix::zeros(0, cols)
            } else {
                DenseMatrix::from_csv(&text)?
            };
            if m.shape() != (rows, cols) {
                return Err(Error::Parse(format!(
                    "block {label} has shape {:?}",
                    m.shape()
                )));
            }
            Ok(m)
        };
        let h = block("H", n, n)?;
        let c = block("c", 1, n)?;
        let a = block("Aeq", p, n)?;
        let b = block("beq", usize::from(p > 0), p)?;
        let g = block("Gineq", q, n)?;
        let hv = block("hineq", usize::from(q > 0), q)?;
        let row = |m: DenseMatrix<f64>| DenseVector::from(m.into_vec());
        QuadraticProgram::new(h, row(c))?
            .with_equalities(a, row(b))?
            .with_inequalities(g, row(hv))
    }
}

/// Worst violation of each KKT condition, recomputed from the raw problem data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktAudit<T> {
    pub stationarity: T,
    pub primal_eq: T,
    pub primal_ineq: T,
    pub dual: T,
    pub complementarity: T,
}

impl<T: Scalar> KktAudit<T> {
    pub fn max(&self) -> T {
        self.stationarity
            .max(self.primal_eq)
            .max(self.primal_ineq)
            .max(self.dual)
            .max(self.complementarity)
    }
}

pub fn kkt_audit<T: Scalar>(
    qp: &QuadraticProgram<T>,
    sol: &PrimalDualSolution<T>,
) -> Result<KktAudit<T>> {
    let y = &sol.y;
    let mut grad = qp.h.matvec(y)?;
    grad.axpy(T::one(), &qp.c);
    grad.axpy(T::one(), &qp.a_eq.tr_matvec(&sol.nu)?);
    grad.axpy(T::one(), &qp.g_ineq.tr_matvec(&sol.lam)?);
    let eq = qp.a_eq.matvec(y)?.sub(&qp.b_eq)?;
    let slack = qp.g_ineq.matvec(y)?.sub(&qp.h_ineq)?;
    Ok(KktAudit {
        stationarity: grad.max_abs(),
        primal_eq: eq.max_abs(),
        primal_ineq: slack.iter().fold(T::zero(), |acc, &s| acc.max(s)),
        dual: sol.lam.iter().fold(T::zero(), |acc, &l| acc.max(-l)),
        complementarity: sol
            .lam
            .iter()
            .zip(slack.iter())
            .fold(T::zero(), |acc, (&l, &s)| acc.max((l * s).abs())),
    })
}
