use std::path::{Path, PathBuf};
use std::process::Command as Process;

use surrogate_dfl::pipelines::{DomainKind, Method};
use surrogate_dfl_cli::{
    parse_entries, run_with_env, CliConfig, ConfigError, Entry, EXIT_CONFIG, EXIT_FAILURE, EXIT_OK,
};

const TINY: [&str; 10] = [
    "--set",
    "n=5",
    "--set",
    "n_days=36",
    "--set",
    "hidden=6",
    "--set",
    "embed_dim=3",
    "--max-epochs",
    "3",
];

fn flag(key: &str, value: &str) -> Entry {
    Entry::new(key, value, "flag")
}

fn resolve_text(text: &str, flags: &[Entry]) -> Result<CliConfig, ConfigError> {
    CliConfig::resolve(&parse_entries(text, "test.cfg").unwrap(), None, flags)
}

fn cli(args: &[&str], out: &Path) -> i32 {
    let mut full = vec!["surrogate-dfl".to_string()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.extend([
        "--out-dir".to_string(),
        out.display().to_string(),
        "--quiet".to_string(),
    ]);
    run_with_env(full, None)
}

/// Drops the columns named in the `# nondeterministic columns:` header line.
fn deterministic_part(csv: &str) -> String {
    let mut lines = csv.lines();
    let note = lines.next().unwrap();
    let skip: Vec<&str> = note
        .trim_start_matches("# nondeterministic columns:")
        .trim()
        .split(',')
        .collect();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let keep: Vec<usize> = (0..header.len())
        .filter(|&i| !skip.contains(&header[i]))
        .collect();
    std::iter::once(header)
        .chain(lines.map(|l| l.split(',').collect()))
        .map(|f: Vec<&str>| keep.iter().map(|&i| f[i]).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn empty_config_gives_protocol_defaults() {
    let cfg = resolve_text("", &[]).unwrap();
    let t = &cfg.experiment.train;
    assert_eq!(t.learning_rate, 0.01);
    assert_eq!(t.max_epochs, 100);
    assert_eq!(t.patience, 3);
    assert_eq!(cfg.experiment.seeds, (0..30).collect::<Vec<u64>>());
    assert_eq!(cfg.experiment.domain.n, 50);
    assert_eq!(t.surrogate_dim, Some(5));
    assert_eq!(cfg.experiment.methods, Method::ALL.to_vec());

    let movie = resolve_text("# movies\ndomain = movierec\n", &[]).unwrap();
    assert_eq!(movie.experiment.domain.kind, DomainKind::MovieRec);
    assert_eq!(movie.experiment.train.surrogate_dim, Some(10));
}

#[test]
fn flags_override_file_values() {
    let cfg = resolve_text(
        "learning_rate = 0.05\npatience = 7 # comment\n",
        &[flag("learning_rate", "0.02")],
    )
    .unwrap();
    assert_eq!(cfg.experiment.train.learning_rate, 0.02);
    assert_eq!(cfg.experiment.train.patience, 7);

    let cfg = resolve_text("domain = movierec\n", &[flag("domain", "portfolio")]).unwrap();
    assert_eq!(cfg.experiment.domain.kind, DomainKind::Portfolio);
    assert_eq!(cfg.experiment.domain.n, 50);
}

#[test]
fn output_env_sits_between_file_and_flags() {
    let file = parse_entries("out_dir = from-file\n", "f").unwrap();
    let env = Some(PathBuf::from("from-env"));
    let cfg = CliConfig::resolve(&file, env.clone(), &[]).unwrap();
    assert_eq!(cfg.experiment.out_dir, PathBuf::from("from-env"));
    let cfg = CliConfig::resolve(&file, env, &[flag("out_dir", "from-flag")]).unwrap();
    assert_eq!(cfg.experiment.out_dir, PathBuf::from("from-flag"));
}

#[test]
fn type_mismatch_names_the_key() {
    for text in [
        "patience = \"three\"\n",
        "patience = three\n",
        "patience = \"3\"\n",
    ] {
        match resolve_text(text, &[]) {
            Err(e @ ConfigError::TypeMismatch { .. }) => {
                assert!(e.to_string().contains("`patience`"), "{e}")
            }
            other => panic!("{text}: {other:?}"),
        }
    }
    assert!(matches!(
        resolve_text("", &[flag("identity_reparam", "maybe")]),
        Err(ConfigError::TypeMismatch { ref key, .. }) if key == "identity_reparam"
    ));
}

#[test]
fn unknown_key_and_missing_file_are_named() {
    let err = resolve_text("learning_rat = 0.1\n", &[]).unwrap_err();
    assert!(matches!(err, ConfigError::UnknownKey { ref key, .. } if key == "learning_rat"));
    assert!(err.to_string().contains("test.cfg:1"), "{err}");

    let path = Path::new("/definitely/not/here.cfg");
    let err = CliConfig::load(Some(path), None, &[]).unwrap_err();
    assert!(matches!(err, ConfigError::MissingFile(ref p) if p == path));
    assert!(err.to_string().contains("/definitely/not/here.cfg"));

    assert!(matches!(
        parse_entries("just words\n", "f"),
        Err(ConfigError::Syntax { .. })
    ));
    assert!(matches!(
        resolve_text("max_epochs = 0\n", &[]),
        Err(ConfigError::Invalid(_))
    ));
}

#[test]
fn echoed_config_parses_back_identically() {
    let custom = "domain = movierec\nseeds = 4,9\nmethods = surrogate,ts\nhidden =\nreparam_mode = free\n\
                  freeze_reparam = true\nfeas_tol = 1e-10\nmax_workers = 2\ndata_path = some/file.csv\n\
                  method = df\nseed = 3\ncheckpoint = ck.csv\nverbosity = 2\nsurrogate_dim = 7\n";
    for (text, flags) in [
        ("", vec![]),
        ("domain = movierec\n", vec![]),
        (custom, vec![]),
        ("", vec![flag("identity_reparam", "true"), flag("n", "12")]),
        ("", vec![flag("seed_count", "4"), flag("gamma", "0.25")]),
    ] {
        let cfg = resolve_text(text, &flags).unwrap();
        let echo = cfg.to_config_text();
        let back = resolve_text(&echo, &[]).unwrap();
        assert_eq!(back, cfg, "{echo}");
        assert_eq!(back.to_config_text(), echo);
    }
}

#[test]
fn binary_rejects_unknown_subcommand_with_usage() {
    let out = Process::new(env!("CARGO_BIN_EXE_surrogate-dfl"))
        .arg("frobnicate")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = Process::new(env!("CARGO_BIN_EXE_surrogate-dfl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
}

#[test]
fn binary_honours_output_env() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("env-out");
    let status = Process::new(env!("CARGO_BIN_EXE_surrogate-dfl"))
        .args(["theory-check", "--quiet"])
        .env("SURROGATE_DFL_OUT", &target)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    let report = std::fs::read_to_string(target.join("theory_report.csv")).unwrap();
    assert_eq!(report.lines().next(), Some("check,passed,value,detail"));
    assert_eq!(report.lines().count(), 10);
    assert!(
        report
            .lines()
            .skip(1)
            .all(|l| l.split(',').nth(1) == Some("true")),
        "{report}"
    );
    assert!(target.join("run.log").is_file());
    assert!(target.join("config.txt").is_file());
}

#[test]
fn run_two_seeds_all_methods_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let mut args = vec!["run", "--seeds", "0,1", "--max-workers", "2"];
    args.extend(TINY);
    assert_eq!(cli(&args, &a), EXIT_OK);
    let report = std::fs::read_to_string(a.join("report.csv")).unwrap();
    assert_eq!(report.lines().count(), 2 + 6);
    assert_eq!(
        std::fs::read_to_string(a.join("aggregate.csv"))
            .unwrap()
            .lines()
            .count(),
        2 + 3
    );

    // The echoed config alone reproduces the run.
    let b = dir.path().join("b");
    let echo = a.join("config.txt").display().to_string();
    assert_eq!(cli(&["run", "--config", &echo], &b), EXIT_OK);
    for name in ["report.csv", "aggregate.csv"] {
        let x = std::fs::read_to_string(a.join(name)).unwrap();
        let y = std::fs::read_to_string(b.join(name)).unwrap();
        assert_eq!(deterministic_part(&x), deterministic_part(&y), "{name}");
    }
}

#[test]
fn train_then_eval_reproduces_test_regret() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for method in ["two-stage", "decision-focused", "surrogate"] {
        let mut args = vec!["train", "--method", method, "--seed", "2"];
        args.extend(TINY);
        assert_eq!(cli(&args, out), EXIT_OK);
        args[0] = "eval";
        assert_eq!(cli(&args, out), EXIT_OK);
        let regret = |file: String| {
            let text = std::fs::read_to_string(out.join(file)).unwrap();
            text.lines()
                .nth(2)
                .unwrap()
                .split(',')
                .nth(2)
                .unwrap()
                .to_string()
        };
        assert_eq!(
            regret(format!("train-{method}-2.csv")),
            regret(format!("eval-{method}-2.csv"))
        );
    }
    let mut args = vec!["eval", "--seed", "5"];
    args.extend(TINY);
    assert_eq!(cli(&args, out), EXIT_CONFIG);
}

#[test]
fn generated_csv_ingests_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    let mut args = vec!["gen-data", "--seeds", "3"];
    args.extend(TINY);
    assert_eq!(cli(&args, &gen), EXIT_OK);
    let prices = gen.join("prices-3.csv").display().to_string();

    let direct = dir.path().join("direct");
    let mut args = vec!["run", "--seeds", "3", "--methods", "ts,surrogate"];
    args.extend(TINY);
    assert_eq!(cli(&args, &direct), EXIT_OK);
    let ingested = dir.path().join("ingested");
    args.extend(["--data-path", &prices]);
    assert_eq!(cli(&args, &ingested), EXIT_OK);
    let read =
        |d: &Path| deterministic_part(&std::fs::read_to_string(d.join("report.csv")).unwrap());
    assert_eq!(read(&direct), read(&ingested));

    // Wrong width is a recorded failure, not a crash.
    let failed = dir.path().join("failed");
    args.extend(["--set", "n=7"]);
    assert_eq!(cli(&args, &failed), EXIT_FAILURE);
    let report = std::fs::read_to_string(failed.join("report.csv")).unwrap();
    assert!(
        report.lines().skip(2).all(|l| l.contains("error:")),
        "{report}"
    );
}

#[test]
fn movie_data_round_trips_through_gen_data() {
    let dir = tempfile::tempdir().unwrap();
    let sizes = [
        "--domain",
        "movierec",
        "--set",
        "n=8",
        "--set",
        "users_per_group=3",
        "--set",
        "n_groups=10",
        "--set",
        "n_feature_movies=4",
        "--set",
        "budget=3",
        "--set",
        "picks=2",
        "--set",
        "hidden=5",
        "--max-epochs",
        "2",
        "--seeds",
        "1",
        "--methods",
        "ts,df",
    ];
    let gen = dir.path().join("gen");
    let mut args = vec!["gen-data"];
    args.extend(sizes);
    assert_eq!(cli(&args, &gen), EXIT_OK);
    let ratings = gen.join("ratings-1.csv").display().to_string();
    args[0] = "run";
    let direct = dir.path().join("direct");
    assert_eq!(cli(&args, &direct), EXIT_OK);
    args.extend(["--data-path", &ratings]);
    let ingested = dir.path().join("ingested");
    assert_eq!(cli(&args, &ingested), EXIT_OK);
    let read =
        |d: &Path| deterministic_part(&std::fs::read_to_string(d.join("report.csv")).unwrap());
    assert_eq!(read(&direct), read(&ingested));
}
