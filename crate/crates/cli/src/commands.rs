//! Subcommand execution.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use surrogate_dfl::domains::{
    gen_portfolio_prices, write_movierec_csv, write_portfolio_csv, PortfolioGenParams,
};
use surrogate_dfl::pipelines::{
    default_checkpoint, eval_checkpoint, movierec_data, run_experiment, train_single, DomainKind,
    ExperimentReport, RunRecord, NONDETERMINISTIC_NOTE, REPORT_HEADER,
};
use surrogate_dfl::theory::{run_theory_checks, write_theory_report};

use crate::config::{CliConfig, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    GenData,
    Train,
    Run,
    Eval,
    TheoryCheck,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::GenData => "gen-data",
            Command::Train => "train",
            Command::Run => "run",
            Command::Eval => "eval",
            Command::TheoryCheck => "theory-check",
        }
    }
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Plain-text `run.log` in the output directory, mirrored to stderr by verbosity.
pub struct RunLog {
    file: File,
    verbosity: u8,
}

impl RunLog {
    pub fn create(dir: &Path, verbosity: u8) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            file: File::create(dir.join("run.log"))?,
            verbosity,
        })
    }

    /// `level` 1 is a summary line, 2 a detail line.
    pub fn line(&mut self, level: u8, msg: &str) {
        let _ = writeln!(self.file, "{msg}");
        if level <= self.verbosity {
            eprintln!("{msg}");
        }
    }
}

fn single_row_csv(rec: &RunRecord) -> String {
    format!(
        "{NONDETERMINISTIC_NOTE}\n{REPORT_HEADER}\n{}\n",
        rec.csv_row()
    )
}

fn describe(rec: &RunRecord) -> String {
    format!(
        "{} seed {}: {} mean_regret={} epochs={} best_epoch={} max_violation={:e}",
        rec.method,
        rec.seed,
        rec.status,
        rec.mean_regret,
        rec.epochs_run,
        rec.best_epoch,
        rec.max_violation
    )
}

fn gen_data(cfg: &CliConfig, log: &mut RunLog) -> surrogate_dfl::Result<Vec<PathBuf>> {
    let x = &cfg.experiment;
    let d = &x.domain;
    let mut written = Vec::new();
    for &seed in &x.seeds {
        let path = match d.kind {
            DomainKind::Portfolio => {
                let prices =
                    gen_portfolio_prices(d.n, d.n_days, seed, &PortfolioGenParams::default())?;
                let path = x.out_dir.join(format!("prices-{seed}.csv"));
                write_portfolio_csv(&prices, &path)?;
                path
            }
            DomainKind::MovieRec => {
                let generated = surrogate_dfl::pipelines::DomainConfig {
                    data_path: None,
                    ..d.clone()
                };
                let data = movierec_data(&generated, seed)?;
                let path = x.out_dir.join(format!("ratings-{seed}.csv"));
                write_movierec_csv(&data, &path)?;
                path
            }
        };
        log.line(2, &format!("wrote {}", path.display()));
        written.push(path);
    }
    Ok(written)
}

fn report_summary(report: &ExperimentReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<18} {:>5} {:>14} {:>12} {:>14} {:>14}",
        "method", "runs", "mean_regret", "stderr", "train_sec", "inference_sec"
    );
    for a in &report.aggregate {
        let _ = writeln!(
            out,
            "{:<18} {:>5} {:>14.6e} {:>12.3e} {:>14.4e} {:>14.4e}",
            a.method.as_str(),
            a.runs,
            a.mean_regret,
            a.stderr_regret,
            a.mean_train_sec,
            a.mean_inference_sec
        );
    }
    out
}

/// Runs `cmd`; returns the process exit status.
pub fn dispatch(cmd: Command, cfg: &CliConfig) -> i32 {
    let out = &cfg.experiment.out_dir;
    let mut log = match RunLog::create(out, cfg.verbosity) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", out.display());
            return EXIT_CONFIG;
        }
    };
    if let Err(e) = std::fs::write(out.join("config.txt"), cfg.to_config_text()) {
        eprintln!("error: cannot write config echo: {e}");
        return EXIT_CONFIG;
    }
    log.line(2, &format!("{} -> {}", cmd.as_str(), out.display()));
    match execute(cmd, cfg, &mut log) {
        Ok(status) => status,
        Err(e) => {
            log.line(0, &format!("error: {e}"));
            EXIT_FAILURE
        }
    }
}

fn execute(cmd: Command, cfg: &CliConfig, log: &mut RunLog) -> surrogate_dfl::Result<i32> {
    let x = &cfg.experiment;
    match cmd {
        Command::GenData => {
            let written = gen_data(cfg, log)?;
            log.line(
                1,
                &format!(
                    "wrote {} dataset file(s) to {}",
                    written.len(),
                    x.out_dir.display()
                ),
            );
            Ok(EXIT_OK)
        }
        Command::Train => {
            let rec = train_single(x, cfg.method, cfg.seed)?;
            std::fs::write(
                x.out_dir
                    .join(format!("train-{}-{}.csv", cfg.method, cfg.seed)),
                single_row_csv(&rec),
            )?;
            log.line(1, &describe(&rec));
            Ok(EXIT_OK)
        }
        Command::Eval => {
            let path = cfg
                .checkpoint
                .clone()
                .unwrap_or_else(|| default_checkpoint(x, cfg.method, cfg.seed));
            if !path.is_file() {
                log.line(0, &format!("error: {}", ConfigError::MissingFile(path)));
                return Ok(EXIT_CONFIG);
            }
            let rec = eval_checkpoint(x, cfg.method, cfg.seed, &path)?;
            std::fs::write(
                x.out_dir
                    .join(format!("eval-{}-{}.csv", cfg.method, cfg.seed)),
                single_row_csv(&rec),
            )?;
            log.line(1, &describe(&rec));
            Ok(EXIT_OK)
        }
        Command::Run => {
            let report = run_experiment(x)?;
            for rec in &report.rows {
                log.line(2, &describe(rec));
            }
            for rec in report.rows.iter().filter(|r| !r.ok()) {
                log.line(
                    0,
                    &format!("failed: {} seed {}: {}", rec.method, rec.seed, rec.status),
                );
            }
            log.line(1, report_summary(&report).trim_end());
            Ok(if report.failures() > 0 {
                EXIT_FAILURE
            } else {
                EXIT_OK
            })
        }
        Command::TheoryCheck => {
            let checks = run_theory_checks(cfg.seed)?;
            write_theory_report(&checks, &x.out_dir.join("theory_report.csv"))?;
            for c in &checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                log.line(
                    1,
                    &format!("{verdict}  {:<28} {:>14.6e}  {}", c.name, c.value, c.detail),
                );
                if !c.passed {
                    log.line(0, &format!("failed: theory check {}", c.name));
                }
            }
            Ok(if checks.iter().all(|c| c.passed) {
                EXIT_OK
            } else {
                EXIT_FAILURE
            })
        }
    }
}
