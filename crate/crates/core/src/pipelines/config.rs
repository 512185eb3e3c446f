use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::optlayer::QpOptions;
use crate::surrogate::{default_surrogate_dim, ReparamMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    TwoStage,
    DecisionFocused,
    Surrogate,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::TwoStage, Method::DecisionFocused, Method::Surrogate];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::TwoStage => "two-stage",
            Method::DecisionFocused => "decision-focused",
            Method::Surrogate => "surrogate",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "two-stage" | "ts" => Ok(Method::TwoStage),
            "decision-focused" | "df" => Ok(Method::DecisionFocused),
            "surrogate" => Ok(Method::Surrogate),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Portfolio,
    MovieRec,
}

impl DomainKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DomainKind::Portfolio => "portfolio",
            DomainKind::MovieRec => "movierec",
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DomainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "portfolio" => Ok(DomainKind::Portfolio),
            "movierec" | "movie-rec" | "movie" => Ok(DomainKind::MovieRec),
            other => Err(Error::Parse(format!("unknown domain `{other}`"))),
        }
    }
}

/// Data sizes and model shape for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig {
    pub kind: DomainKind,
    /// Securities or candidate movies.
    pub n: usize,
    pub n_days: usize,
    pub users_per_group: usize,
    pub n_groups: usize,
    pub n_feature_movies: usize,
    pub budget: usize,
    pub picks: usize,
    pub risk_aversion: f64,
    pub gamma: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
    /// Read the dataset from this CSV instead of generating it per seed.
    pub data_path: Option<PathBuf>,
}

impl DomainConfig {
    pub fn portfolio() -> Self {
        Self {
            kind: DomainKind::Portfolio,
            n: 50,
            n_days: 100,
            users_per_group: 30,
            n_groups: 20,
            n_feature_movies: 20,
            budget: crate::domains::DEFAULT_BUDGET,
            picks: crate::domains::DEFAULT_PICKS,
            risk_aversion: crate::domains::DEFAULT_RISK_AVERSION,
            gamma: crate::domains::DEFAULT_GAMMA,
            hidden: vec![100, 100],
            embed_dim: 32,
            data_path: None,
        }
    }

    pub fn movierec() -> Self {
        Self {
            kind: DomainKind::MovieRec,
            n: 100,
            hidden: vec![64],
            ..Self::portfolio()
        }
    }

    pub fn for_kind(kind: DomainKind) -> Self {
        match kind {
            DomainKind::Portfolio => Self::portfolio(),
            DomainKind::MovieRec => Self::movierec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Training instances per Adam step; `0` is full batch.
    pub batch_size: usize,
    /// `None` means `ceil(0.1·n)`.
    pub surrogate_dim: Option<usize>,
    /// `None` means the domain's default mode.
    pub reparam_mode: Option<ReparamMode>,
    /// Start the surrogate at `P = I` (`m = n`, free mode).
    pub identity_reparam: bool,
    /// Keep `P` fixed during surrogate training.
    pub freeze_reparam: bool,
    pub solver: QpOptions,
    pub inference_repeats: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            max_epochs: 100,
            patience: 3,
            batch_size: 0,
            surrogate_dim: None,
            reparam_mode: None,
            identity_reparam: false,
            freeze_reparam: false,
            solver: QpOptions::default(),
            inference_repeats: 5,
        }
    }
}

impl TrainConfig {
    pub fn surrogate_dim_for(&self, n: usize) -> usize {
        if self.identity_reparam {
            n
        } else {
            self.surrogate_dim
                .unwrap_or_else(|| default_surrogate_dim(n))
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInputs(format!(
                "learning_rate = {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidInputs("max_epochs must be ≥ 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::InvalidInputs("patience must be ≥ 1".into()));
        }
        if self.inference_repeats == 0 {
            return Err(Error::InvalidInputs("inference_repeats must be ≥ 1".into()));
        }
        if self.surrogate_dim == Some(0) {
            return Err(Error::InvalidInputs("surrogate_dim must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Everything needed to reproduce a multi-seed run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainConfig,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    /// `0` means one worker per seed, capped at the available cores.
    pub max_workers: usize,
    pub out_dir: PathBuf,
}

pub const DEFAULT_SEED_COUNT: u64 = 30;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            domain: DomainConfig::portfolio(),
            methods: Method::ALL.to_vec(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            train: TrainConfig::default(),
            max_workers: 0,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl ExperimentConfig {
    pub fn workers(&self) -> usize {
        let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
        let cap = if self.max_workers == 0 {
            cores
        } else {
            self.max_workers
        };
        cap.min(self.seeds.len()).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidInputs("no methods requested".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidInputs("no seeds requested".into()));
        }
        Ok(())
    }

    /// Flat `key = value` text, one fully resolved entry per line.
    pub fn to_config_text(&self) -> String {
        let d = &self.domain;
        let t = &self.train;
        let m = t.surrogate_dim_for(d.n);
        let mode = t
            .reparam_mode
            .map_or("auto".to_string(), |r| r.as_str().to_string());
        let entries: Vec<(&str, String)> = vec![
            ("domain", d.kind.to_string()),
            ("methods", join(&self.methods)),
            ("seeds", join(&self.seeds)),
            ("n", d.n.to_string()),
            ("n_days", d.n_days.to_string()),
            ("users_per_group", d.users_per_group.to_string()),
            ("n_groups", d.n_groups.to_string()),
            ("n_feature_movies", d.n_feature_movies.to_string()),
            ("budget", d.budget.to_string()),
            ("picks", d.picks.to_string()),
            ("risk_aversion", d.risk_aversion.to_string()),
            ("gamma", d.gamma.to_string()),
            ("hidden", join(&d.hidden)),
            ("embed_dim", d.embed_dim.to_string()),
            (
                "data_path",
                d.data_path
                    .as_ref()
                    .map_or(String::new(), |p| p.display().to_string()),
            ),
            ("learning_rate", t.learning_rate.to_string()),
            ("max_epochs", t.max_epochs.to_string()),
            ("patience", t.patience.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("surrogate_dim", m.to_string()),
            ("reparam_mode", mode),
            ("identity_reparam", t.identity_reparam.to_string()),
            ("freeze_reparam", t.freeze_reparam.to_string()),
            ("max_iterations", t.solver.max_iterations.to_string()),
            ("feas_tol", t.solver.feas_tol.to_string()),
            ("inference_repeats", t.inference_repeats.to_string()),
            ("max_workers", self.max_workers.to_string()),
            ("out_dir", self.out_dir.display().to_string()),
        ];
        entries
            .into_iter()
            .map(|(k, v)| {
                if v.is_empty() {
                    format!("{k} =\n")
                } else {
                    format!("{k} = {v}\n")
                }
            })
            .collect()
    }
}
