//! Command-line driver: layered flat configuration, subcommand dispatch and
//! CSV report emission.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{dispatch, Command, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK};
pub use config::{parse_entries, CliConfig, ConfigError, Entry, OUT_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "surrogate-dfl",
    version,
    about = "Decision-focused learning with learnable linear surrogates"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Write dataset CSVs, one per seed.
    GenData(Flags),
    /// Train one method on one seed and save a checkpoint.
    Train(Flags),
    /// Train and evaluate every method on every seed.
    Run(Flags),
    /// Evaluate a saved checkpoint on its seed's test split.
    Eval(Flags),
    /// Run the theory witness suite and write theory_report.csv.
    TheoryCheck(Flags),
}

/// Flags override the config file; `--set key=value` reaches any key.
#[derive(Debug, Args)]
struct Flags {
    /// Flat `key = value` config file.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    domain: Option<String>,
    /// Comma-separated methods for `run`.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated seed list.
    #[arg(long)]
    seeds: Option<String>,
    /// Use seeds 0..N.
    #[arg(long)]
    seed_count: Option<String>,
    /// Method for `train` and `eval`.
    #[arg(long)]
    method: Option<String>,
    /// Seed for `train`, `eval` and `theory-check`.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Dataset CSV written by `gen-data`.
    #[arg(long)]
    data_path: Option<String>,
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    max_epochs: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    surrogate_dim: Option<String>,
    #[arg(long)]
    max_workers: Option<String>,
    #[arg(long)]
    verbosity: Option<String>,
    /// Same as `--verbosity 0`.
    #[arg(long, short, conflicts_with = "verbosity")]
    quiet: bool,
}

impl Flags {
    fn entries(&self) -> Result<Vec<Entry>, ConfigError> {
        let mut out = Vec::new();
        for kv in &self.set {
            let Some((k, v)) = kv.split_once('=') else {
                return Err(ConfigError::Syntax {
                    origin: "--set".into(),
                    text: kv.clone(),
                });
            };
            out.push(Entry::new(k, v, "--set"));
        }
        let named = [
            ("domain", &self.domain),
            ("methods", &self.methods),
            ("seeds", &self.seeds),
            ("seed_count", &self.seed_count),
            ("method", &self.method),
            ("seed", &self.seed),
            ("out_dir", &self.out_dir),
            ("data_path", &self.data_path),
            ("checkpoint", &self.checkpoint),
            ("learning_rate", &self.learning_rate),
            ("max_epochs", &self.max_epochs),
            ("patience", &self.patience),
            ("surrogate_dim", &self.surrogate_dim),
            ("max_workers", &self.max_workers),
            ("verbosity", &self.verbosity),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                out.push(Entry::new(key, v, &format!("--{}", key.replace('_', "-"))));
            }
        }
        if self.quiet {
            out.push(Entry::new("verbosity", "0", "--quiet"));
        }
        Ok(out)
    }
}

/// Parses `args` (program name first), resolves the config and dispatches.
/// `env_out` is the value of `SURROGATE_DFL_OUT`, if any.
pub fn run_with_env<I, T>(args: I, env_out: Option<PathBuf>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (cmd, flags) = match &cli.command {
        Sub::GenData(f) => (Command::GenData, f),
        Sub::Train(f) => (Command::Train, f),
        Sub::Run(f) => (Command::Run, f),
        Sub::Eval(f) => (Command::Eval, f),
        Sub::TheoryCheck(f) => (Command::TheoryCheck, f),
    };
    let resolved = flags
        .entries()
        .and_then(|entries| CliConfig::load(flags.config.as_deref(), env_out, &entries));
    match resolved {
        Ok(cfg) => dispatch(cmd, &cfg),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

/// [`run_with_env`] reading `SURROGATE_DFL_OUT` from the environment.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_out = std::env::var_os(OUT_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from);
    run_with_env(args, env_out)
}
