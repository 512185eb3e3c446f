use std::time::Instant;

use super::task::{final_decision, DecisionTask};
use super::TrainConfig;
use crate::domains::Dataset;
use crate::error::{Error, Result};
use crate::surrogate::Reparameterization;
use crate::Vector;

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// One entry per test instance, in split order.
    pub regrets: Vec<f64>,
    pub mean_regret: f64,
    /// Median over repeats of the time to decide the whole test split.
    pub inference_seconds: f64,
    pub max_violation: f64,
    pub decisions: Vec<Vector>,
}

/// `f(x_oracle, θ)` for every instance in `idx`; `NaN` elsewhere.
pub fn oracle_values<D: DecisionTask>(
    task: &D,
    data: &Dataset<D::Instance>,
    idx: &[usize],
) -> Result<Vec<f64>> {
    let mut out = vec![f64::NAN; data.instances.len()];
    for &i in idx {
        out[i] = task
            .oracle_value(&data.instances[i])
            .map_err(|e| e.at_instance(i))?;
    }
    Ok(out)
}

/// Decides every test instance `cfg.inference_repeats` times. With a
/// reparameterization only the surrogate problem is solved.
pub fn evaluate<D: DecisionTask>(
    task: &D,
    model: &D::Model,
    rep: Option<&Reparameterization<f64>>,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
) -> Result<Evaluation> {
    let idx = &data.split.test;
    if idx.is_empty() {
        return Err(Error::EmptySplit("test".into()));
    }
    let p = rep.map(|r| r.materialize());
    let mut times = Vec::with_capacity(cfg.inference_repeats.max(1));
    let mut decisions = Vec::new();
    for _ in 0..cfg.inference_repeats.max(1) {
        let started = Instant::now();
        decisions = idx
            .iter()
            .map(|&i| {
                final_decision(task, model, p.as_ref(), &data.instances[i], &cfg.solver)
                    .map_err(|e| e.at_instance(i))
            })
            .collect::<Result<Vec<_>>>()?;
        times.push(started.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    let mut regrets = Vec::with_capacity(idx.len());
    let mut max_violation = 0.0f64;
    for (x, &i) in decisions.iter().zip(idx) {
        let inst = &data.instances[i];
        regrets.push(oracle[i] - task.objective(x, inst)?);
        max_violation = max_violation.max(task.feasibility_violation(x, inst));
    }
    Ok(Evaluation {
        mean_regret: regrets.iter().sum::<f64>() / regrets.len() as f64,
        regrets,
        inference_seconds: times[times.len() / 2],
        max_violation,
        decisions,
    })
}
