use std::fmt::Debug;

use rand_chacha::ChaCha8Rng;

use crate::diff::Parameterized;
use crate::error::{Error, Result};
use crate::optlayer::{kkt_vjp, solve_qp_with, PrimalDualSolution, QpOptions, QuadraticProgram};
use crate::surrogate::{
    compose, ReparamMode, Reparameterization, SurrogateProblem, TransformOptions,
};
use crate::{Matrix, Vector};

use super::Method;

/// A predict-then-optimize problem family: how features become parameters,
/// how parameters become a QP, and how decisions are scored.
///
/// Non-QP objectives are handled by successive linearization: `base_problem`
/// freezes whatever depends on the reference point (`Frozen`) and the solve is
/// repeated until that frozen part stops changing.
pub trait DecisionTask: Sync {
    type Instance: Sync;
    type Model: Parameterized<f64> + Clone + Debug + Send + Sync;
    /// Predicted parameters; also the type of their gradient.
    type Prediction: Clone;
    type Cache;
    type Frozen: Clone + PartialEq;

    fn dim(&self) -> usize;

    fn init_model(&self, rng: &mut ChaCha8Rng) -> Result<Self::Model>;

    fn predict(
        &self,
        model: &Self::Model,
        inst: &Self::Instance,
    ) -> Result<(Self::Prediction, Self::Cache)>;

    fn backward(
        &self,
        model: &Self::Model,
        cache: &Self::Cache,
        d_pred: &Self::Prediction,
    ) -> Result<Self::Model>;

    /// Mean squared error against the true parameters and its gradient.
    fn prediction_loss(
        &self,
        pred: &Self::Prediction,
        inst: &Self::Instance,
    ) -> Result<(f64, Self::Prediction)>;

    /// Minimization QP in x-space under the predicted parameters, linearized at `x_ref`.
    fn base_problem(
        &self,
        pred: &Self::Prediction,
        inst: &Self::Instance,
        x_ref: &[f64],
    ) -> Result<(QuadraticProgram<f64>, Self::Frozen)>;

    /// Chains `dL/dH`, `dL/dc` of the base problem back to the prediction.
    fn pred_grad(
        &self,
        pred: &Self::Prediction,
        frozen: &Self::Frozen,
        d_h: &Matrix,
        d_c: &[f64],
    ) -> Result<Self::Prediction>;

    fn initial_point(&self, inst: &Self::Instance) -> Vector;

    fn max_linearizations(&self) -> usize {
        1
    }

    /// Added to the Hessian of every solved problem, full or surrogate.
    fn ridge(&self) -> f64 {
        0.0
    }

    fn reparam_mode(&self) -> ReparamMode;

    fn nonneg_y(&self) -> bool {
        false
    }

    /// True objective `f(x, θ)`, maximized.
    fn objective(&self, x: &[f64], inst: &Self::Instance) -> Result<f64>;

    fn objective_grad(&self, x: &[f64], inst: &Self::Instance) -> Result<Vector>;

    /// Turns a relaxed decision into the one that is reported.
    fn finalize(&self, x: Vector, _inst: &Self::Instance) -> Vector {
        x
    }

    fn feasibility_violation(&self, x: &[f64], inst: &Self::Instance) -> f64;

    fn oracle_value(&self, inst: &Self::Instance) -> Result<f64>;
}

#[derive(Debug, Clone, Copy)]
pub enum DecisionPath<'a> {
    Full,
    /// Materialized `P`.
    Surrogate(&'a Matrix),
}

#[derive(Debug, Clone)]
pub enum Solved {
    Full {
        qp: QuadraticProgram<f64>,
        sol: PrimalDualSolution<f64>,
    },
    Surrogate {
        sp: SurrogateProblem<f64>,
        sol: PrimalDualSolution<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Decision<F> {
    pub x: Vector,
    pub frozen: F,
    pub solved: Solved,
    pub linearizations: usize,
}

fn solve_path(
    base: &QuadraticProgram<f64>,
    path: DecisionPath<'_>,
    ridge: f64,
    nonneg_y: bool,
    opts: &QpOptions,
) -> Result<(Vector, Solved)> {
    match path {
        DecisionPath::Full => {
            let qp = base.with_ridge(ridge);
            let sol = solve_qp_with(&qp, opts)?;
            Ok((sol.y.clone(), Solved::Full { qp, sol }))
        }
        DecisionPath::Surrogate(p) => {
            let sp = compose(base, p, &TransformOptions { nonneg_y, ridge })?;
            let sol = solve_qp_with(&sp.qp, opts).map_err(|e| match e {
                Error::Infeasible { .. } => Error::EmptyFeasibleSet,
                other => other,
            })?;
            Ok((sp.lift(&sol.y)?, Solved::Surrogate { sp, sol }))
        }
    }
}

/// Relaxed decision under predicted parameters.
pub fn decide<D: DecisionTask>(
    task: &D,
    pred: &D::Prediction,
    inst: &D::Instance,
    path: DecisionPath<'_>,
    opts: &QpOptions,
) -> Result<Decision<D::Frozen>> {
    let mut x_ref = task.initial_point(inst);
    let mut last: Option<Decision<D::Frozen>> = None;
    for round in 0..task.max_linearizations().max(1) {
        let (base, frozen) = task.base_problem(pred, inst, &x_ref)?;
        if last.as_ref().is_some_and(|d| d.frozen == frozen) {
            break;
        }
        let (x, solved) = solve_path(&base, path, task.ridge(), task.nonneg_y(), opts)?;
        x_ref = x.clone();
        last = Some(Decision {
            x,
            frozen,
            solved,
            linearizations: round + 1,
        });
    }
    Ok(last.expect("at least one linearization"))
}

/// Model and reparameterization gradients for one training instance.
#[derive(Debug, Clone)]
pub struct InstanceGradient<M> {
    pub loss: f64,
    pub model: M,
    /// `dL/dP_raw`, surrogate method only.
    pub p_raw: Option<Matrix>,
}

/// Gradient of the training loss of `method` on one instance. Two-stage uses squared
/// error; the other two use `−f(x*, θ_true)` differentiated through the frozen active set.
pub fn instance_gradient<D: DecisionTask>(
    task: &D,
    method: Method,
    model: &D::Model,
    rep: Option<&Reparameterization<f64>>,
    inst: &D::Instance,
    opts: &QpOptions,
) -> Result<InstanceGradient<D::Model>> {
    let (pred, cache) = task.predict(model, inst)?;
    if method == Method::TwoStage {
        let (loss, d_pred) = task.prediction_loss(&pred, inst)?;
        return Ok(InstanceGradient {
            loss,
            model: task.backward(model, &cache, &d_pred)?,
            p_raw: None,
        });
    }
    let p = match (method, rep) {
        (Method::Surrogate, Some(r)) => Some(r.materialize()),
        (Method::Surrogate, None) => {
            return Err(Error::InvalidInputs(
                "surrogate method needs a reparameterization".into(),
            ))
        }
        _ => None,
    };
    let path = p
        .as_ref()
        .map_or(DecisionPath::Full, DecisionPath::Surrogate);
    let dec = decide(task, &pred, inst, path, opts)?;
    let loss = -task.objective(&dec.x, inst)?;
    let dl_dx = task.objective_grad(&dec.x, inst)?.scaled(-1.0);
    let (d_h, d_c, p_raw) = match &dec.solved {
        Solved::Full { qp, sol } => {
            let g = kkt_vjp(qp, sol, &dl_dx)?;
            (g.h, g.c, None)
        }
        Solved::Surrogate { sp, sol } => {
            let g = sp.vjp(sol, &dl_dx)?;
            let d_raw = rep.expect("checked above").pullback(&g.p)?;
            (g.h, g.c, Some(d_raw))
        }
    };
    let d_pred = task.pred_grad(&pred, &dec.frozen, &d_h, &d_c)?;
    Ok(InstanceGradient {
        loss,
        model: task.backward(model, &cache, &d_pred)?,
        p_raw,
    })
}

/// Predict and decide along `path`, without finalizing.
pub fn relaxed_decision<D: DecisionTask>(
    task: &D,
    model: &D::Model,
    p: Option<&Matrix>,
    inst: &D::Instance,
    opts: &QpOptions,
) -> Result<Vector> {
    let (pred, _) = task.predict(model, inst)?;
    let path = p.map_or(DecisionPath::Full, DecisionPath::Surrogate);
    Ok(decide(task, &pred, inst, path, opts)?.x)
}

/// Predict, decide along `path`, finalize.
pub fn final_decision<D: DecisionTask>(
    task: &D,
    model: &D::Model,
    p: Option<&Matrix>,
    inst: &D::Instance,
    opts: &QpOptions,
) -> Result<Vector> {
    Ok(task.finalize(relaxed_decision(task, model, p, inst, opts)?, inst))
}
