//! Flat `key = value` configuration.
//!
//! Resolution order, lowest to highest: built-in defaults (chosen by
//! `domain`), the config file, `SURROGATE_DFL_OUT` (output directory only),
//! then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use surrogate_dfl::pipelines::{DomainConfig, DomainKind, ExperimentConfig, Method};
use surrogate_dfl::surrogate::ReparamMode;
use thiserror::Error;

pub const OUT_ENV: &str = "SURROGATE_DFL_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown key `{key}` ({origin})")]
    UnknownKey { key: String, origin: String },

    #[error("key `{key}`: expected {expected}, got `{value}` ({origin})")]
    TypeMismatch {
        key: String,
        value: String,
        expected: &'static str,
        origin: String,
    },

    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("{origin}: expected `key = value`, got `{text}`")]
    Syntax { origin: String, text: String },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One `key = value` assignment and where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub origin: String,
}

impl Entry {
    pub fn new(key: &str, value: &str, origin: &str) -> Self {
        Self {
            key: key.trim().to_string(),
            value: value.trim().to_string(),
            origin: origin.to_string(),
        }
    }

    fn mismatch(&self, expected: &'static str) -> ConfigError {
        ConfigError::TypeMismatch {
            key: self.key.clone(),
            value: self.value.clone(),
            expected,
            origin: self.origin.clone(),
        }
    }
}

/// Fully resolved settings for one CLI invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub experiment: ExperimentConfig,
    /// Method for `train` and `eval`.
    pub method: Method,
    /// Seed for `train`, `eval` and `theory-check`.
    pub seed: u64,
    /// Checkpoint for `eval`; defaults to the one `train` writes.
    pub checkpoint: Option<PathBuf>,
    /// 0 quiet, 1 summaries, 2 per-run lines.
    pub verbosity: u8,
}

impl Default for CliConfig {
    fn default() -> Self {
        let mut cfg = Self {
            experiment: ExperimentConfig::default(),
            method: Method::Surrogate,
            seed: 0,
            checkpoint: None,
            verbosity: 1,
        };
        cfg.normalize();
        cfg
    }
}

/// Splits `key = value` lines; `#` starts a comment.
pub fn parse_entries(text: &str, origin: &str) -> Result<Vec<Entry>, ConfigError> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let at = format!("{origin}:{}", lineno + 1);
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Syntax {
                origin: at,
                text: line.to_string(),
            });
        };
        let value = value.trim();
        // Quoted numbers keep their quotes so numeric keys reject them.
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .filter(|v| v.parse::<f64>().is_err() && !v.is_empty())
            .unwrap_or(value);
        entries.push(Entry::new(key, value, &at));
    }
    Ok(entries)
}

pub fn read_entries(path: &Path) -> Result<Vec<Entry>, ConfigError> {
    if !path.is_file() {
        return Err(ConfigError::MissingFile(path.to_path_buf()));
    }
    parse_entries(&std::fs::read_to_string(path)?, &path.display().to_string())
}

fn parse_num<T: FromStr>(e: &Entry, expected: &'static str) -> Result<T, ConfigError> {
    e.value.parse().map_err(|_| e.mismatch(expected))
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(e.mismatch("a boolean")),
    }
}

fn parse_list<T: FromStr>(e: &Entry, expected: &'static str) -> Result<Vec<T>, ConfigError> {
    e.value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| e.mismatch(expected)))
        .collect()
}

fn parse_path(e: &Entry) -> Option<PathBuf> {
    (!e.value.is_empty()).then(|| PathBuf::from(&e.value))
}

impl CliConfig {
    /// Defaults for `domain`.
    pub fn for_domain(kind: DomainKind) -> Self {
        let mut cfg = Self::default();
        cfg.experiment.domain = DomainConfig::for_kind(kind);
        cfg.normalize();
        cfg
    }

    /// Pins derived values (`surrogate_dim`) so the echo round-trips exactly.
    fn normalize(&mut self) {
        let n = self.experiment.domain.n;
        let m = self.experiment.train.surrogate_dim_for(n);
        self.experiment.train.surrogate_dim = Some(m);
    }

    pub fn set(&mut self, e: &Entry) -> Result<(), ConfigError> {
        let x = &mut self.experiment;
        let d = &mut x.domain;
        let t = &mut x.train;
        const UINT: &str = "a non-negative integer";
        const FLOAT: &str = "a number";
        match e.key.as_str() {
            // Applied by `resolve`, since it selects the defaults.
            "domain" => {
                e.value
                    .parse::<DomainKind>()
                    .map_err(|_| e.mismatch("`portfolio` or `movierec`"))?;
            }
            "methods" => x.methods = parse_list(e, "a comma-separated list of methods")?,
            "seeds" => x.seeds = parse_list(e, "a comma-separated list of integers")?,
            "seed_count" => x.seeds = (0..parse_num::<u64>(e, UINT)?).collect(),
            "n" => d.n = parse_num(e, UINT)?,
            "n_days" => d.n_days = parse_num(e, UINT)?,
            "users_per_group" => d.users_per_group = parse_num(e, UINT)?,
            "n_groups" => d.n_groups = parse_num(e, UINT)?,
            "n_feature_movies" => d.n_feature_movies = parse_num(e, UINT)?,
            "budget" => d.budget = parse_num(e, UINT)?,
            "picks" => d.picks = parse_num(e, UINT)?,
            "risk_aversion" => d.risk_aversion = parse_num(e, FLOAT)?,
            "gamma" => d.gamma = parse_num(e, FLOAT)?,
            "hidden" => d.hidden = parse_list(e, "a comma-separated list of layer widths")?,
            "embed_dim" => d.embed_dim = parse_num(e, UINT)?,
            "data_path" => d.data_path = parse_path(e),
            "learning_rate" => t.learning_rate = parse_num(e, FLOAT)?,
            "max_epochs" => t.max_epochs = parse_num(e, UINT)?,
            "patience" => t.patience = parse_num(e, UINT)?,
            "batch_size" => t.batch_size = parse_num(e, UINT)?,
            "surrogate_dim" => {
                t.surrogate_dim = match e.value.as_str() {
                    "auto" => None,
                    _ => Some(parse_num(e, "a positive integer or `auto`")?),
                }
            }
            "reparam_mode" => {
                t.reparam_mode =
                    match e.value.as_str() {
                        "auto" => None,
                        v => Some(v.parse::<ReparamMode>().map_err(|_| {
                            e.mismatch("`auto`, `column-simplex`, `nonneg` or `free`")
                        })?),
                    }
            }
            "identity_reparam" => t.identity_reparam = parse_bool(e)?,
            "freeze_reparam" => t.freeze_reparam = parse_bool(e)?,
            "max_iterations" => t.solver.max_iterations = parse_num(e, UINT)?,
            "feas_tol" => t.solver.feas_tol = parse_num(e, FLOAT)?,
            "inference_repeats" => t.inference_repeats = parse_num(e, UINT)?,
            "max_workers" => x.max_workers = parse_num(e, UINT)?,
            "out_dir" => x.out_dir = parse_path(e).unwrap_or_else(|| PathBuf::from(".")),
            "method" => self.method = e.value.parse().map_err(|_| e.mismatch("a method name"))?,
            "seed" => self.seed = parse_num(e, UINT)?,
            "checkpoint" => self.checkpoint = parse_path(e),
            "verbosity" => self.verbosity = parse_num(e, "an integer 0-2")?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    key: e.key.clone(),
                    origin: e.origin.clone(),
                })
            }
        }
        Ok(())
    }

    /// Layers `file` entries, the output-directory override and `flags` over the domain defaults.
    pub fn resolve(
        file: &[Entry],
        env_out: Option<PathBuf>,
        flags: &[Entry],
    ) -> Result<Self, ConfigError> {
        let domain = file.iter().chain(flags).rfind(|e| e.key == "domain");
        let kind = match domain {
            Some(e) => e
                .value
                .parse()
                .map_err(|_| e.mismatch("`portfolio` or `movierec`"))?,
            None => DomainKind::Portfolio,
        };
        let mut cfg = Self::for_domain(kind);
        cfg.experiment.train.surrogate_dim = None;
        for e in file {
            cfg.set(e)?;
        }
        if let Some(out) = env_out {
            cfg.experiment.out_dir = out;
        }
        for e in flags {
            cfg.set(e)?;
        }
        cfg.normalize();
        cfg.experiment
            .validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        if cfg.verbosity > 2 {
            return Err(ConfigError::Invalid(format!(
                "verbosity = {}",
                cfg.verbosity
            )));
        }
        Ok(cfg)
    }

    /// Reads `path` (when given) and resolves it against `flags`.
    pub fn load(
        path: Option<&Path>,
        env_out: Option<PathBuf>,
        flags: &[Entry],
    ) -> Result<Self, ConfigError> {
        let file = match path {
            Some(p) => read_entries(p)?,
            None => Vec::new(),
        };
        Self::resolve(&file, env_out, flags)
    }

    /// Every key, resolved; parsing this text alone reproduces `self`.
    pub fn to_config_text(&self) -> String {
        let mut out = self.experiment.to_config_text();
        out.push_str(&format!("method = {}\n", self.method));
        out.push_str(&format!("seed = {}\n", self.seed));
        match &self.checkpoint {
            Some(p) => out.push_str(&format!("checkpoint = {}\n", p.display())),
            None => out.push_str("checkpoint =\n"),
        }
        out.push_str(&format!("verbosity = {}\n", self.verbosity));
        out
    }
}
