use std::fmt::Write as _;
use std::path::Path;

use super::evaluate::{evaluate, oracle_values};
use super::task::DecisionTask;
use super::tasks::{MovieRecTask, PortfolioTask};
use super::train::{fit, init_for};
use super::{checkpoint, DomainConfig, DomainKind, ExperimentConfig, Method, TrainConfig};
use crate::diff::Parameterized;
use crate::domains::{
    gen_movierec_data_with, gen_portfolio_data, portfolio_dataset_from_prices, read_movierec_csv,
    read_portfolio_csv, Dataset, MovieRecGenParams, MovieRecInstance, PortfolioInstance,
};
use crate::error::Result;

pub const REPORT_HEADER: &str =
    "method,seed,mean_regret,train_sec_per_epoch,inference_sec,epochs_run,status";
pub const AGGREGATE_HEADER: &str =
    "method,mean_regret,stderr_regret,mean_train_sec,mean_inference_sec";
pub const NONDETERMINISTIC_NOTE: &str =
    "# nondeterministic columns: train_sec_per_epoch,inference_sec";
pub const AGGREGATE_NONDETERMINISTIC_NOTE: &str =
    "# nondeterministic columns: mean_train_sec,mean_inference_sec";

/// One (method, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub method: Method,
    pub seed: u64,
    /// `ok` or `error: <message>`.
    pub status: String,
    pub mean_regret: f64,
    pub train_sec_per_epoch: f64,
    pub inference_sec: f64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub regrets: Vec<f64>,
    pub max_violation: f64,
}

impl RunRecord {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(method: Method, seed: u64, err: &crate::Error) -> Self {
        let msg: String = err
            .to_string()
            .chars()
            .map(|c| if c == ',' || c == '\n' { ';' } else { c })
            .collect();
        Self {
            method,
            seed,
            status: format!("error: {msg}"),
            mean_regret: f64::NAN,
            train_sec_per_epoch: f64::NAN,
            inference_sec: f64::NAN,
            epochs_run: 0,
            best_epoch: 0,
            regrets: Vec::new(),
            max_violation: f64::NAN,
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.method,
            self.seed,
            self.mean_regret,
            self.train_sec_per_epoch,
            self.inference_sec,
            self.epochs_run,
            self.status
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub method: Method,
    pub runs: usize,
    pub mean_regret: f64,
    /// Sample standard deviation over `√runs`; 0 for a single run.
    pub stderr_regret: f64,
    pub mean_train_sec: f64,
    pub mean_inference_sec: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<RunRecord>,
    pub aggregate: Vec<AggregateRow>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn aggregate(rows: &[RunRecord], methods: &[Method]) -> Vec<AggregateRow> {
    methods
        .iter()
        .map(|&method| {
            let ok: Vec<&RunRecord> = rows
                .iter()
                .filter(|r| r.method == method && r.ok())
                .collect();
            let regrets: Vec<f64> = ok.iter().map(|r| r.mean_regret).collect();
            let m = mean(&regrets);
            let stderr = if regrets.len() < 2 {
                0.0
            } else {
                let var = regrets.iter().map(|r| (r - m) * (r - m)).sum::<f64>()
                    / (regrets.len() - 1) as f64;
                (var / regrets.len() as f64).sqrt()
            };
            AggregateRow {
                method,
                runs: ok.len(),
                mean_regret: m,
                stderr_regret: stderr,
                mean_train_sec: mean(&ok.iter().map(|r| r.train_sec_per_epoch).collect::<Vec<_>>()),
                mean_inference_sec: mean(&ok.iter().map(|r| r.inference_sec).collect::<Vec<_>>()),
            }
        })
        .collect()
}

impl ExperimentReport {
    pub fn report_csv(&self) -> String {
        let mut s = format!("{NONDETERMINISTIC_NOTE}\n{REPORT_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.csv_row());
        }
        s
    }

    pub fn aggregate_csv(&self) -> String {
        let mut s = format!("{AGGREGATE_NONDETERMINISTIC_NOTE}\n{AGGREGATE_HEADER}\n");
        for a in &self.aggregate {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                a.method, a.mean_regret, a.stderr_regret, a.mean_train_sec, a.mean_inference_sec
            );
        }
        s
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.csv"), self.report_csv())?;
        std::fs::write(dir.join("aggregate.csv"), self.aggregate_csv())?;
        Ok(())
    }
}

pub fn portfolio_task(d: &DomainConfig) -> PortfolioTask {
    PortfolioTask {
        n: d.n,
        risk_aversion: d.risk_aversion,
        hidden: d.hidden.clone(),
        embed_dim: d.embed_dim,
    }
}

pub fn movierec_task(d: &DomainConfig) -> MovieRecTask {
    MovieRecTask {
        n: d.n,
        n_features: d.n_feature_movies,
        budget: d.budget,
        picks: d.picks,
        gamma: d.gamma,
        hidden: d.hidden.clone(),
    }
}

fn check_width(path: &Path, found: usize, expected: usize) -> Result<()> {
    if found != expected {
        return Err(crate::Error::BadDimensions(format!(
            "{}: {found} columns where the config expects {expected}",
            path.display()
        )));
    }
    Ok(())
}

/// Generated for `seed`, or read from `d.data_path` when set (the same data for every seed).
pub fn portfolio_data(d: &DomainConfig, seed: u64) -> Result<Dataset<PortfolioInstance>> {
    let mut data = match &d.data_path {
        Some(path) => {
            let data = portfolio_dataset_from_prices(&read_portfolio_csv(path)?, d.risk_aversion)?;
            check_width(path, data.instances[0].n(), d.n)?;
            data
        }
        None => gen_portfolio_data(d.n, d.n_days, seed)?,
    };
    for inst in &mut data.instances {
        inst.risk_aversion = d.risk_aversion;
    }
    Ok(data)
}

pub fn movierec_data(d: &DomainConfig, seed: u64) -> Result<Dataset<MovieRecInstance>> {
    if let Some(path) = &d.data_path {
        let data = read_movierec_csv(path, d.n, d.users_per_group, d.budget, d.picks)?;
        if let Some(inst) = data.instances.first() {
            check_width(path, inst.features.cols(), d.n_feature_movies)?;
        }
        return Ok(data);
    }
    let params = MovieRecGenParams {
        budget: d.budget,
        picks: d.picks,
        ..MovieRecGenParams::default()
    };
    gen_movierec_data_with(
        d.n,
        d.users_per_group,
        d.n_groups,
        d.n_feature_movies,
        seed,
        &params,
    )
}

/// Train and evaluate one method on an already generated dataset.
pub fn run_method<D: DecisionTask>(
    task: &D,
    method: Method,
    data: &Dataset<D::Instance>,
    oracle: &[f64],
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(
    RunRecord,
    D::Model,
    Option<crate::surrogate::Reparameterization<f64>>,
)> {
    let (model, rep) = init_for(task, method, cfg, seed)?;
    let trained = fit(task, method, model, rep, data, oracle, cfg)?;
    let eval = evaluate(
        task,
        &trained.model,
        trained.rep.as_ref(),
        data,
        oracle,
        cfg,
    )?;
    let record = RunRecord {
        method,
        seed,
        status: "ok".into(),
        mean_regret: eval.mean_regret,
        train_sec_per_epoch: trained.seconds_per_epoch(),
        inference_sec: eval.inference_seconds,
        epochs_run: trained.epochs_run,
        best_epoch: trained.best_epoch,
        regrets: eval.regrets,
        max_violation: eval.max_violation,
    };
    Ok((record, trained.model, trained.rep))
}

fn run_seed<D: DecisionTask>(
    task: &D,
    data: Result<Dataset<D::Instance>>,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Vec<RunRecord> {
    let prepared = data.and_then(|d| {
        d.require_nonempty()?;
        let idx: Vec<usize> = d
            .split
            .validation
            .iter()
            .chain(&d.split.test)
            .copied()
            .collect();
        let oracle = oracle_values(task, &d, &idx)?;
        Ok((d, oracle))
    });
    cfg.methods
        .iter()
        .map(|&method| match &prepared {
            Err(e) => RunRecord::failed(method, seed, e),
            Ok((d, oracle)) => match run_method(task, method, d, oracle, &cfg.train, seed) {
                Ok((r, _, _)) => r,
                Err(e) => RunRecord::failed(method, seed, &e),
            },
        })
        .collect()
}

fn run_all<D, G>(task: &D, gen: G, cfg: &ExperimentConfig) -> Vec<RunRecord>
where
    D: DecisionTask,
    G: Fn(u64) -> Result<Dataset<D::Instance>> + Sync,
{
    let workers = cfg.workers();
    let mut per_seed: Vec<Vec<RunRecord>> = vec![Vec::new(); cfg.seeds.len()];
    if workers <= 1 {
        for (slot, &seed) in per_seed.iter_mut().zip(&cfg.seeds) {
            *slot = run_seed(task, gen(seed), seed, cfg);
        }
    } else {
        let results: Vec<(usize, Vec<RunRecord>)> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let gen = &gen;
                    s.spawn(move || {
                        (w..cfg.seeds.len())
                            .step_by(workers)
                            .map(|k| (k, run_seed(task, gen(cfg.seeds[k]), cfg.seeds[k], cfg)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("seed worker panicked"))
                .collect()
        });
        for (k, rows) in results {
            per_seed[k] = rows;
        }
    }
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        for seed_rows in &per_seed {
            rows.extend(seed_rows.iter().filter(|r| r.method == method).cloned());
        }
    }
    rows
}

/// Runs every (seed, method) pair in memory; nothing is written.
pub fn run_experiment_in_memory(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let d = &cfg.domain;
    let rows = match d.kind {
        DomainKind::Portfolio => run_all(&portfolio_task(d), |s| portfolio_data(d, s), cfg),
        DomainKind::MovieRec => run_all(&movierec_task(d), |s| movierec_data(d, s), cfg),
    };
    let aggregate = aggregate(&rows, &cfg.methods);
    Ok(ExperimentReport { rows, aggregate })
}

/// Runs the experiment and writes `report.csv`, `aggregate.csv` and `config.txt` to `cfg.out_dir`.
/// Seed-level failures are recorded in their rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run_experiment_in_memory(cfg)?;
    report.write(&cfg.out_dir)?;
    std::fs::write(cfg.out_dir.join("config.txt"), cfg.to_config_text())?;
    Ok(report)
}

fn checkpoint_path(dir: &Path, method: Method, seed: u64) -> std::path::PathBuf {
    dir.join(format!("checkpoint-{method}-{seed}.csv"))
}

fn train_generic<D, G>(
    task: &D,
    gen: G,
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
) -> Result<RunRecord>
where
    D: DecisionTask,
    G: Fn(u64) -> Result<Dataset<D::Instance>>,
{
    let data = gen(seed)?;
    data.require_nonempty()?;
    let idx: Vec<usize> = data
        .split
        .validation
        .iter()
        .chain(&data.split.test)
        .copied()
        .collect();
    let oracle = oracle_values(task, &data, &idx)?;
    let (record, model, rep) = run_method(task, method, &data, &oracle, &cfg.train, seed)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut parts: Vec<(&str, &dyn Parameterized<f64>)> = vec![("model.", &model)];
    if let Some(r) = rep.as_ref() {
        parts.push(("rep.", r));
        r.export_csv(&cfg.out_dir.join(format!("p-{seed}.csv")))?;
    }
    checkpoint::save_checkpoint(&checkpoint_path(&cfg.out_dir, method, seed), &parts)?;
    Ok(record)
}

/// Trains one method on one seed and saves `checkpoint-<method>-<seed>.csv` in `cfg.out_dir`.
pub fn train_single(cfg: &ExperimentConfig, method: Method, seed: u64) -> Result<RunRecord> {
    cfg.validate()?;
    let d = &cfg.domain;
    match d.kind {
        DomainKind::Portfolio => train_generic(
            &portfolio_task(d),
            |s| portfolio_data(d, s),
            cfg,
            method,
            seed,
        ),
        DomainKind::MovieRec => train_generic(
            &movierec_task(d),
            |s| movierec_data(d, s),
            cfg,
            method,
            seed,
        ),
    }
}

fn eval_generic<D, G>(
    task: &D,
    gen: G,
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
    path: &Path,
) -> Result<RunRecord>
where
    D: DecisionTask,
    G: Fn(u64) -> Result<Dataset<D::Instance>>,
{
    let data = gen(seed)?;
    let oracle = oracle_values(task, &data, &data.split.test)?;
    let (mut model, mut rep) = init_for(task, method, &cfg.train, seed)?;
    {
        let mut parts: Vec<(&str, &mut dyn Parameterized<f64>)> = vec![("model.", &mut model)];
        if let Some(r) = rep.as_mut() {
            parts.push(("rep.", r));
        }
        checkpoint::load_checkpoint(path, &mut parts)?;
    }
    let eval = evaluate(task, &model, rep.as_ref(), &data, &oracle, &cfg.train)?;
    Ok(RunRecord {
        method,
        seed,
        status: "ok".into(),
        mean_regret: eval.mean_regret,
        train_sec_per_epoch: 0.0,
        inference_sec: eval.inference_seconds,
        epochs_run: 0,
        best_epoch: 0,
        regrets: eval.regrets,
        max_violation: eval.max_violation,
    })
}

/// Loads a checkpoint written by [`train_single`] and evaluates it on the seed's test split.
pub fn eval_checkpoint(
    cfg: &ExperimentConfig,
    method: Method,
    seed: u64,
    path: &Path,
) -> Result<RunRecord> {
    let d = &cfg.domain;
    match d.kind {
        DomainKind::Portfolio => eval_generic(
            &portfolio_task(d),
            |s| portfolio_data(d, s),
            cfg,
            method,
            seed,
            path,
        ),
        DomainKind::MovieRec => eval_generic(
            &movierec_task(d),
            |s| movierec_data(d, s),
            cfg,
            method,
            seed,
            path,
        ),
    }
}

/// Default checkpoint location for `(method, seed)` under `cfg.out_dir`.
pub fn default_checkpoint(cfg: &ExperimentConfig, method: Method, seed: u64) -> std::path::PathBuf {
    checkpoint_path(&cfg.out_dir, method, seed)
}
