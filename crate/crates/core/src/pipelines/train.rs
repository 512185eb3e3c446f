use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::task::{instance_gradient, relaxed_decision, DecisionTask};
use super::{Method, TrainConfig};
use crate::diff::{AdamConfig, AdamState, Parameterized};
use crate::domains::Dataset;
use crate::error::{Error, Result};
use crate::surrogate::{init_reparam, Reparameterization};

/// Stream offsets so model and `P` initialization never share random draws.
const MODEL_STREAM: u64 = 0x6d6f_6465_6c00_0001;
const REPARAM_STREAM: u64 = 0x7265_7061_7200_0002;

#[derive(Debug, Clone)]
pub struct Trained<M> {
    /// Best-validation checkpoint.
    pub model: M,
    pub rep: Option<Reparameterization<f64>>,
    pub epochs_run: usize,
    pub best_epoch: usize,
    /// Mean training loss per epoch, accumulated while stepping.
    pub train_loss: Vec<f64>,
    pub validation: Vec<f64>,
    /// Gradient and update time only; validation is excluded.
    pub train_seconds: f64,
}

impl<M> Trained<M> {
    pub fn seconds_per_epoch(&self) -> f64 {
        if self.epochs_run == 0 {
            0.0
        } else {
            self.train_seconds / self.epochs_run as f64
        }
    }
}

/// Seeded initial model, and `P` for the surrogate method.
pub fn init_for<D: DecisionTask>(
    task: &D,
    method: Method,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(D::Model, Option<Reparameterization<f64>>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ MODEL_STREAM);
    let model = task.init_model(&mut rng)?;
    let rep = if method != Method::Surrogate {
        None
    } else if cfg.identity_reparam {
        Some(Reparameterization::identity(task.dim()))
    } else {
        let mode = cfg.reparam_mode.unwrap_or_else(|| task.reparam_mode());
        Some(init_reparam(
            task.dim(),
            cfg.surrogate_dim_for(task.dim()),
            mode,
            seed ^ REPARAM_STREAM,
        )?)
    };
    Ok((model, rep))
}

/// Mean squared error for two-stage, otherwise mean regret of the decisions the
/// training loss sees (before finalization, so relaxations score continuously).
pub fn validation_score<D: DecisionTask>(
    task: &D,
    method: Method,
    model: &D::Model,
    rep: Option<&Reparameterization<f64>>,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
) -> Result<f64> {
    let idx = &data.split.validation;
    let mut total = 0.0;
    let p = rep.map(|r| r.materialize());
    for &i in idx {
        let inst = &data.instances[i];
        let score = if method == Method::TwoStage {
            let (pred, _) = task.predict(model, inst)?;
            task.prediction_loss(&pred, inst)?.0
        } else {
            let x = relaxed_decision(task, model, p.as_ref(), inst, &cfg.solver)
                .map_err(|e| e.at_instance(i))?;
            oracle[i] - task.objective(&x, inst)?
        };
        total += score;
    }
    Ok(total / idx.len() as f64)
}

/// Adam over the training split in index order, `cfg.batch_size` instances per
/// step (`0` is one full-batch step per epoch), with early stopping on the validation split.
///
/// Stops after `patience` consecutive epochs without a strict improvement and
/// returns the best checkpoint. `max_epochs = 0` returns the inputs untouched.
pub fn fit<D: DecisionTask>(
    task: &D,
    method: Method,
    mut model: D::Model,
    mut rep: Option<Reparameterization<f64>>,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
) -> Result<Trained<D::Model>> {
    if data.split.train.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if data.split.validation.is_empty() {
        return Err(Error::EmptySplit("validation".into()));
    }
    if method != Method::TwoStage && oracle.len() != data.instances.len() {
        return Err(Error::dims(format!(
            "{} oracle values for {} instances",
            oracle.len(),
            data.instances.len()
        )));
    }
    let adam = AdamConfig::with_lr(cfg.learning_rate);
    let mut model_opt = AdamState::new(&model, adam);
    let mut rep_opt = rep.as_ref().map(|r| AdamState::new(r, adam));
    let train_rep = rep.is_some() && !cfg.freeze_reparam;

    let mut out = Trained {
        model: model.clone(),
        rep: rep.clone(),
        epochs_run: 0,
        best_epoch: 0,
        train_loss: Vec::new(),
        validation: Vec::new(),
        train_seconds: 0.0,
    };
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let train = &data.split.train;
    let batch = if cfg.batch_size == 0 {
        train.len()
    } else {
        cfg.batch_size.min(train.len())
    };
    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        let mut loss = 0.0;
        for chunk in train.chunks(batch) {
            let scale = 1.0 / chunk.len() as f64;
            let mut g_model = model.zeroed();
            let mut g_rep = rep.as_ref().map(|r| r.zeroed());
            for &i in chunk {
                let g = instance_gradient(
                    task,
                    method,
                    &model,
                    rep.as_ref(),
                    &data.instances[i],
                    &cfg.solver,
                )
                .map_err(|e| e.at_instance(i))?;
                loss += g.loss / train.len() as f64;
                g_model.add_scaled(scale, &g.model)?;
                if let (Some(acc), Some(d)) = (g_rep.as_mut(), g.p_raw.as_ref()) {
                    acc.p_raw.axpy(scale, d)?;
                }
            }
            model_opt.step(&mut model, &g_model)?;
            if train_rep {
                if let (Some(r), Some(opt), Some(g)) =
                    (rep.as_mut(), rep_opt.as_mut(), g_rep.as_ref())
                {
                    opt.step(r, g)?;
                }
            }
        }
        out.train_seconds += started.elapsed().as_secs_f64();
        out.train_loss.push(loss);
        out.epochs_run = epoch;

        let val = validation_score(task, method, &model, rep.as_ref(), data, oracle, cfg)?;
        out.validation.push(val);
        if val < best {
            best = val;
            stale = 0;
            out.best_epoch = epoch;
            out.model = model.clone();
            out.rep = rep.clone();
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    Ok(out)
}

pub fn train_two_stage<D: DecisionTask>(
    task: &D,
    model: D::Model,
    data: &Dataset<D::Instance>,
    cfg: &TrainConfig,
) -> Result<Trained<D::Model>> {
    fit(task, Method::TwoStage, model, None, data, &[], cfg)
}

pub fn train_decision_focused<D: DecisionTask>(
    task: &D,
    model: D::Model,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
) -> Result<Trained<D::Model>> {
    fit(
        task,
        Method::DecisionFocused,
        model,
        None,
        data,
        oracle,
        cfg,
    )
}

pub fn train_surrogate<D: DecisionTask>(
    task: &D,
    model: D::Model,
    rep: Reparameterization<f64>,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
) -> Result<Trained<D::Model>> {
    fit(task, Method::Surrogate, model, Some(rep), data, oracle, cfg)
}
