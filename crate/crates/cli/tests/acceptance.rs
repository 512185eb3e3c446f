//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surrogate_dfl::diff::Parameterized;
use surrogate_dfl::domains::{
    gen_movierec_data_with, gen_portfolio_data, MovieRecGenParams, DEFAULT_GAMMA,
};
use surrogate_dfl::numerics::DenseMatrix;
use surrogate_dfl::optlayer::{
    kkt_jacobian_theta, solve_qp, QpDerivative, QpOptions, QuadraticProgram,
};
use surrogate_dfl::pipelines::{
    decide, init_for, instance_gradient, run_experiment_in_memory, AggregateRow, DecisionPath,
    DecisionTask, DomainConfig, ExperimentConfig, Method, MovieRecTask, PortfolioTask, RunRecord,
    Solved, TrainConfig,
};
use surrogate_dfl::surrogate::{init_reparam, ReparamMode, Reparameterization};
use surrogate_dfl::theory::{
    counterexample_matrices, counterexample_opt, rademacher_bound, run_theory_checks,
    segment_probe, BoundInputs, PROBE_TOL,
};
use surrogate_dfl::{Matrix, Vector};
use surrogate_dfl_cli::{parse_entries, CliConfig};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

// ---------------------------------------------------------------- criterion 1

fn random_qp(rng: &mut ChaCha8Rng) -> QuadraticProgram<f64> {
    let n = rng.random_range(2..=10);
    let total = rng.random_range(0..=5usize);
    let p = rng.random_range(0..=total.min(2).min(n - 1));
    let q = total - p;
    let mf = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut h = mf.tr_matmul(&mf).unwrap();
    h.add_diagonal(0.1);
    let c: Vector = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let feasible: Vector = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let a = DenseMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let b = a.matvec(&feasible).unwrap();
    let g = DenseMatrix::from_fn(q, n, |_, _| rng.random_range(-1.0..1.0));
    let mut hv = g.matvec(&feasible).unwrap();
    for x in hv.iter_mut() {
        *x += rng.random_range(0.0..1.0);
    }
    QuadraticProgram::new(h, c)
        .unwrap()
        .with_equalities(a, b)
        .unwrap()
        .with_inequalities(g, hv)
        .unwrap()
}

fn perturbed(qp: &QuadraticProgram<f64>, d: &QpDerivative<f64>, t: f64) -> QuadraticProgram<f64> {
    let mut out = qp.clone();
    if let Some(x) = &d.h {
        out.h.axpy(t, x).unwrap();
    }
    if let Some(x) = &d.c {
        out.c.axpy(t, x);
    }
    if let Some(x) = &d.a_eq {
        out.a_eq.axpy(t, x).unwrap();
    }
    if let Some(x) = &d.b_eq {
        out.b_eq.axpy(t, x);
    }
    if let Some(x) = &d.g_ineq {
        out.g_ineq.axpy(t, x).unwrap();
    }
    if let Some(x) = &d.h_ineq {
        out.h_ineq.axpy(t, x);
    }
    out
}

/// Returns (worst relative error, checked, skipped).
fn qp_jacobians() -> (f64, usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut checked, mut skipped) = (0.0f64, 0, 0);
    for _ in 0..100 {
        let qp = random_qp(&mut rng);
        let (n, p, q) = (qp.dim(), qp.num_eq(), qp.num_ineq());
        let sym = DenseMatrix::from_fn(n, n, |i, j| {
            ((i + 2 * j) % 3) as f64 + ((j + 2 * i) % 3) as f64
        });
        let mut param = vec![
            QpDerivative {
                h: Some(sym),
                ..Default::default()
            },
            QpDerivative {
                a_eq: Some(DenseMatrix::from_fn(p, n, |_, _| {
                    rng.random_range(-1.0..1.0)
                })),
                g_ineq: Some(DenseMatrix::from_fn(q, n, |_, _| {
                    rng.random_range(-1.0..1.0)
                })),
                ..Default::default()
            },
        ];
        param.extend((0..n).map(|j| QpDerivative {
            c: Some(Vector::basis(n, j)),
            ..Default::default()
        }));
        param.extend((0..p).map(|j| QpDerivative {
            b_eq: Some(Vector::basis(p, j)),
            ..Default::default()
        }));
        param.extend((0..q).map(|j| QpDerivative {
            h_ineq: Some(Vector::basis(q, j)),
            ..Default::default()
        }));
        let sol = solve_qp(&qp).unwrap();
        let jac = kkt_jacobian_theta(&qp, &sol, &param).unwrap();
        let h = 1e-5;
        let mut changed = false;
        let mut fd = DenseMatrix::zeros(n, param.len());
        for (j, d) in param.iter().enumerate() {
            let up = solve_qp(&perturbed(&qp, d, h)).unwrap();
            let down = solve_qp(&perturbed(&qp, d, -h)).unwrap();
            changed |= up.active_set != sol.active_set || down.active_set != sol.active_set;
            fd.set_column(j, &up.y.sub(&down.y).unwrap().scaled(0.5 / h));
        }
        if changed {
            skipped += 1;
            continue;
        }
        checked += 1;
        for i in 0..n {
            for j in 0..param.len() {
                let (a, b) = (jac[(i, j)], fd[(i, j)]);
                worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-3));
            }
        }
    }
    (worst, checked, skipped)
}

fn pipeline_loss<D: DecisionTask>(
    task: &D,
    model: &D::Model,
    p: Option<&Matrix>,
    inst: &D::Instance,
) -> (f64, Vec<usize>, D::Frozen) {
    let (pred, _) = task.predict(model, inst).unwrap();
    let path = p.map_or(DecisionPath::Full, DecisionPath::Surrogate);
    let dec = decide(task, &pred, inst, path, &QpOptions::default()).unwrap();
    let active = match &dec.solved {
        Solved::Full { sol, .. } | Solved::Surrogate { sol, .. } => sol.active_set.clone(),
    };
    (-task.objective(&dec.x, inst).unwrap(), active, dec.frozen)
}

/// Central differences per coordinate; coordinates whose ±h solves leave the
/// current piece are skipped. Returns (fd, skipped).
fn fd_over<F>(x0: &[f64], h: f64, mut f: F) -> (Vec<Option<f64>>, usize)
where
    F: FnMut(&[f64]) -> (f64, bool),
{
    let mut out = Vec::with_capacity(x0.len());
    let mut skipped = 0;
    for i in 0..x0.len() {
        let mut xp = x0.to_vec();
        let mut xm = x0.to_vec();
        xp[i] += h;
        xm[i] -= h;
        let (fp, same_p) = f(&xp);
        let (fm, same_m) = f(&xm);
        if same_p && same_m {
            out.push(Some((fp - fm) / (2.0 * h)));
        } else {
            out.push(None);
            skipped += 1;
        }
    }
    (out, skipped)
}

fn relative_error(analytic: &[f64], fd: &[Option<f64>]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (a, f) in analytic.iter().zip(fd) {
        if let Some(f) = f {
            num += (a - f) * (a - f);
            den += f * f;
        }
    }
    num.sqrt() / den.sqrt().max(1e-5)
}

#[derive(Default)]
struct PipelineTally {
    worst: f64,
    coords: usize,
    skipped: usize,
}

impl PipelineTally {
    fn add(&mut self, analytic: &[f64], fd: &[Option<f64>], skipped: usize) {
        self.worst = self.worst.max(relative_error(analytic, fd));
        self.coords += fd.len();
        self.skipped += skipped;
    }
}

fn pipeline_case<D: DecisionTask>(
    task: &D,
    instances: &[&D::Instance],
    mode: ReparamMode,
    m: usize,
    tally: &mut PipelineTally,
) {
    for (k, inst) in instances.iter().enumerate() {
        let seed = k as u64;
        let model = init_for(task, Method::DecisionFocused, &TrainConfig::default(), seed)
            .unwrap()
            .0;
        let rep: Reparameterization<f64> = init_reparam(task.dim(), m, mode, 100 + seed).unwrap();
        for rep in [None, Some(&rep)] {
            let method = if rep.is_some() {
                Method::Surrogate
            } else {
                Method::DecisionFocused
            };
            let p = rep.map(|r| r.materialize());
            let g =
                instance_gradient(task, method, &model, rep, inst, &QpOptions::default()).unwrap();
            let (_, active0, frozen0) = pipeline_loss(task, &model, p.as_ref(), inst);
            let (fd, skipped) = fd_over(&model.flatten(), 1e-6, |w| {
                let mut mdl = model.clone();
                mdl.assign_flat(w).unwrap();
                let (l, a, f) = pipeline_loss(task, &mdl, p.as_ref(), inst);
                (l, a == active0 && f == frozen0)
            });
            tally.add(&g.model.flatten(), &fd, skipped);
            if let Some(r) = rep {
                let (fd, skipped) = fd_over(r.p_raw.as_slice(), 1e-6, |raw| {
                    let mut q = r.clone();
                    q.assign_flat(raw).unwrap();
                    let (l, a, f) = pipeline_loss(task, &model, Some(&q.materialize()), inst);
                    (l, a == active0 && f == frozen0)
                });
                tally.add(g.p_raw.as_ref().unwrap().as_slice(), &fd, skipped);
            }
        }
    }
}

fn criterion_gradients() -> Verdict {
    let (qp_err, checked, qp_skipped) = qp_jacobians();

    let mut tally = PipelineTally::default();
    let portfolio = PortfolioTask {
        n: 4,
        risk_aversion: 2.0,
        hidden: vec![5],
        embed_dim: 3,
    };
    let pdata = gen_portfolio_data(4, 30, 17).unwrap();
    let pinst: Vec<_> = pdata.instances.iter().take(4).collect();
    pipeline_case(
        &portfolio,
        &pinst,
        ReparamMode::ColumnSimplex,
        2,
        &mut tally,
    );

    let movie = MovieRecTask {
        n: 12,
        n_features: 4,
        budget: 3,
        picks: 2,
        gamma: DEFAULT_GAMMA,
        hidden: vec![6],
    };
    let params = MovieRecGenParams {
        budget: 3,
        picks: 2,
        ..MovieRecGenParams::default()
    };
    let mdata = gen_movierec_data_with(12, 5, 3, 4, 8, &params).unwrap();
    let minst: Vec<_> = mdata.instances.iter().take(2).collect();
    pipeline_case(&movie, &minst, ReparamMode::Nonneg, 3, &mut tally);

    let qp_ok = qp_err <= 1e-4 && qp_skipped * 5 < 100;
    let pipe_ok = tally.worst <= 1e-3 && tally.skipped * 5 < tally.coords;
    verdict(
        qp_ok && pipe_ok,
        format!(
            "QP Jacobian worst rel err {qp_err:.2e} on {checked} QPs, {qp_skipped}/100 skipped; \
             pipeline dL/dw, dL/dP_raw worst rel err {:.2e}, {}/{} coords skipped",
            tally.worst, tally.skipped, tally.coords
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn criterion_theory() -> Verdict {
    let checks = run_theory_checks(0).unwrap();
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();

    let [p, q, mid] = counterexample_matrices();
    let values = [
        counterexample_opt(&p).unwrap(),
        counterexample_opt(&q).unwrap(),
        counterexample_opt(&mid).unwrap(),
    ];
    let cx_err = values
        .iter()
        .zip([0.0, 0.0, 1.0 / 3.0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let seg = segment_probe(counterexample_opt, &p, &q, 9, PROBE_TOL).unwrap();

    let bound = rademacher_bound(&BoundInputs {
        m: 2.0,
        c: 1.0,
        p_dim: 3.0,
        t: 100.0,
        pinv_norm: 1.0,
        diameter: 2f64.sqrt(),
    })
    .unwrap();

    let qc = checks
        .iter()
        .find(|c| c.name == "coordinate_quasiconvexity")
        .map(|c| c.detail.clone())
        .unwrap_or_default();
    verdict(
        failed.is_empty()
            && cx_err <= 1e-9
            && seg.violations >= 1
            && (bound - 2.4668).abs() <= 1e-3,
        format!(
            "{}/{} checks pass{}; counterexample err {cx_err:.1e}; column probe: {qc}; \
             segment violations {}; bound {bound:.4}",
            checks.len() - failed.len(),
            checks.len(),
            if failed.is_empty() {
                String::new()
            } else {
                format!(" (failed: {})", failed.join(" "))
            },
            seg.violations
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn criterion_identity(records: &mut Vec<RunRecord>) -> Verdict {
    let base = ExperimentConfig {
        domain: DomainConfig {
            n: 10,
            ..DomainConfig::portfolio()
        },
        methods: vec![Method::DecisionFocused],
        seeds: vec![0, 1, 2],
        train: TrainConfig {
            inference_repeats: 1,
            ..TrainConfig::default()
        },
        max_workers: 1,
        ..ExperimentConfig::default()
    };
    let identity = ExperimentConfig {
        methods: vec![Method::Surrogate],
        train: TrainConfig {
            identity_reparam: true,
            freeze_reparam: true,
            reparam_mode: Some(ReparamMode::Free),
            ..base.train.clone()
        },
        ..base.clone()
    };
    let df = run_experiment_in_memory(&base).unwrap().rows;
    let sur = run_experiment_in_memory(&identity).unwrap().rows;
    let mut worst = 0.0f64;
    let mut all_ok = true;
    for (a, b) in df.iter().zip(&sur) {
        all_ok &= a.ok() && b.ok() && a.regrets.len() == b.regrets.len();
        worst = worst.max((a.mean_regret - b.mean_regret).abs());
        for (x, y) in a.regrets.iter().zip(&b.regrets) {
            worst = worst.max((x - y).abs());
        }
    }
    records.extend(df);
    records.extend(sur);
    verdict(
        all_ok && worst <= 1e-6,
        format!("max |regret difference| {worst:.2e} over 3 seeds"),
    )
}

// ---------------------------------------------------------------- criterion 5

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn criterion_speed(records: &mut Vec<RunRecord>) -> Verdict {
    let cfg = ExperimentConfig {
        domain: DomainConfig {
            n: 100,
            ..DomainConfig::portfolio()
        },
        methods: vec![Method::DecisionFocused, Method::Surrogate],
        seeds: vec![0],
        train: TrainConfig {
            max_epochs: 2,
            patience: 10,
            surrogate_dim: Some(10),
            inference_repeats: 1,
            ..TrainConfig::default()
        },
        max_workers: 1,
        ..ExperimentConfig::default()
    };
    let (mut train, mut infer) = ([Vec::new(), Vec::new()], [Vec::new(), Vec::new()]);
    for _ in 0..5 {
        let rows = run_experiment_in_memory(&cfg).unwrap().rows;
        for (k, r) in rows.iter().enumerate() {
            train[k].push(r.train_sec_per_epoch);
            infer[k].push(r.inference_sec);
        }
        records.extend(rows);
    }
    let [df_t, sur_t] = train.map(median);
    let [df_i, sur_i] = infer.map(median);
    verdict(
        sur_t <= 0.5 * df_t && sur_i <= 0.5 * df_i,
        format!(
            "train s/epoch surrogate {sur_t:.4} vs DF {df_t:.4} (ratio {:.3}); \
             inference s surrogate {sur_i:.4} vs DF {df_i:.4} (ratio {:.3})",
            sur_t / df_t,
            sur_i / df_i
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn row(agg: &[AggregateRow], m: Method) -> &AggregateRow {
    agg.iter().find(|a| a.method == m).unwrap()
}

fn criterion_quality(records: &mut Vec<RunRecord>) -> Verdict {
    let seeds: Vec<u64> = (0..10).collect();
    let movie = ExperimentConfig {
        domain: DomainConfig::movierec(),
        methods: Method::ALL.to_vec(),
        seeds: seeds.clone(),
        train: TrainConfig {
            inference_repeats: 1,
            ..TrainConfig::default()
        },
        max_workers: 1,
        ..ExperimentConfig::default()
    };
    let portfolio = ExperimentConfig {
        domain: DomainConfig::portfolio(),
        methods: vec![Method::DecisionFocused, Method::Surrogate],
        ..movie.clone()
    };
    let m = run_experiment_in_memory(&movie).unwrap();
    let p = run_experiment_in_memory(&portfolio).unwrap();
    let failures = m.failures() + p.failures();

    let (ms, mt, md) = (
        row(&m.aggregate, Method::Surrogate),
        row(&m.aggregate, Method::TwoStage),
        row(&m.aggregate, Method::DecisionFocused),
    );
    let pooled = |a: &AggregateRow, b: &AggregateRow| {
        (a.stderr_regret.powi(2) + b.stderr_regret.powi(2)).sqrt()
    };
    let beats_ts = ms.mean_regret + pooled(ms, mt) <= mt.mean_regret;
    let beats_df = ms.mean_regret + pooled(ms, md) <= md.mean_regret;
    let (ps, pd) = (
        row(&p.aggregate, Method::Surrogate),
        row(&p.aggregate, Method::DecisionFocused),
    );
    let comparable = ps.mean_regret <= 1.25 * pd.mean_regret;
    records.extend(m.rows);
    records.extend(p.rows);
    let mark = |b: bool| if b { "ok" } else { "NOT MET" };
    verdict(
        failures == 0 && beats_ts && beats_df && comparable,
        format!(
            "movie surrogate {:.4}±{:.4} vs two-stage {:.4}±{:.4} [{}] vs DF {:.4}±{:.4} [{}]; \
             portfolio surrogate {:.4} vs 1.25×DF {:.4} [{}]; {failures} failed runs",
            ms.mean_regret,
            ms.stderr_regret,
            mt.mean_regret,
            mt.stderr_regret,
            mark(beats_ts),
            md.mean_regret,
            md.stderr_regret,
            mark(beats_df),
            ps.mean_regret,
            1.25 * pd.mean_regret,
            mark(comparable)
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

fn criterion_feasibility(records: &[RunRecord]) -> Verdict {
    let failed = records.iter().filter(|r| !r.ok()).count();
    let decisions: usize = records.iter().map(|r| r.regrets.len()).sum();
    let infeasible = records.iter().filter(|r| r.max_violation > 1e-8).count();
    let worst_violation = records.iter().map(|r| r.max_violation).fold(0.0, f64::max);
    let negative: Vec<f64> = records
        .iter()
        .flat_map(|r| r.regrets.iter().copied())
        .filter(|&g| g < -1e-6)
        .collect();
    let min_regret = records
        .iter()
        .flat_map(|r| r.regrets.iter().copied())
        .fold(f64::INFINITY, f64::min);
    verdict(
        failed == 0 && infeasible == 0 && negative.is_empty(),
        format!(
            "{} runs, {decisions} test decisions; max violation {worst_violation:.1e} \
             ({infeasible} runs above 1e-8); {} regrets below -1e-6 (min {min_regret:.3e}); {failed} failed runs",
            records.len(),
            negative.len()
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_protocol() -> Verdict {
    let mut problems = Vec::new();
    for (domain, n) in [("portfolio", 50usize), ("movierec", 100)] {
        let flags = parse_entries(&format!("domain = {domain}"), "flags").unwrap();
        let cfg = CliConfig::resolve(&[], None, &flags).unwrap();
        let echo = cfg.to_config_text();
        let entries = parse_entries(&echo, "config.txt").unwrap();
        let get = |k: &str| {
            entries
                .iter()
                .find(|e| e.key == k)
                .map(|e| e.value.clone())
                .unwrap_or_default()
        };
        let seeds: Vec<String> = (0..30).map(|s| s.to_string()).collect();
        let m = (0.1 * n as f64).ceil() as usize;
        let expect = [
            ("learning_rate", "0.01".to_string()),
            ("max_epochs", "100".to_string()),
            ("patience", "3".to_string()),
            ("seeds", seeds.join(",")),
            ("n", n.to_string()),
            ("surrogate_dim", m.to_string()),
        ];
        for (k, v) in expect {
            if get(k) != v {
                problems.push(format!("{domain}: {k} = {} (want {v})", get(k)));
            }
        }
        let methods = get("methods");
        for name in ["two-stage", "decision-focused", "surrogate"] {
            if !methods.split(',').any(|m| m.trim() == name) {
                problems.push(format!("{domain}: methods lacks {name}"));
            }
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "lr 0.01, 100 epochs, patience 3, 30 seeds, m = ceil(0.1n) for n = 50 and 100".into()
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------- criterion 8

fn deterministic_part(csv: &str) -> String {
    let mut drop: Vec<usize> = Vec::new();
    let mut out = String::new();
    for line in csv.lines() {
        if let Some(cols) = line.strip_prefix("# nondeterministic columns: ") {
            drop = cols
                .split(',')
                .map(|c| c.trim().to_string())
                .map(|c| {
                    csv.lines()
                        .find(|l| !l.starts_with('#'))
                        .and_then(|h| h.split(',').position(|x| x == c))
                        .unwrap_or(usize::MAX)
                })
                .collect();
            continue;
        }
        let kept: Vec<&str> = line
            .split(',')
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, f)| f)
            .collect();
        out.push_str(&kept.join(","));
        out.push('\n');
    }
    out
}

fn cli_run(dir: &Path) -> i32 {
    let out = dir.display().to_string();
    surrogate_dfl_cli::run_with_env(
        [
            "surrogate-dfl",
            "run",
            "--quiet",
            "--set",
            "n=10",
            "--set",
            "n_days=60",
            "--seeds",
            "0,1",
            "--max-epochs",
            "5",
            "--out-dir",
            out.as_str(),
        ],
        None,
    )
}

fn criterion_determinism() -> Verdict {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ca, cb) = (cli_run(a.path()), cli_run(b.path()));
    let mut same = ca == 0 && cb == 0;
    let mut compared = Vec::new();
    for file in ["report.csv", "aggregate.csv", "config.txt"] {
        let read = |d: &Path| std::fs::read_to_string(d.join(file)).unwrap_or_default();
        let (x, y) = (read(a.path()), read(b.path()));
        let (x, y) = if file == "config.txt" {
            let strip = |s: &str| {
                s.lines()
                    .filter(|l| !l.starts_with("out_dir"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            (strip(&x), strip(&y))
        } else {
            (deterministic_part(&x), deterministic_part(&y))
        };
        let equal = !x.is_empty() && x == y;
        same &= equal;
        compared.push(format!(
            "{file} {}",
            if equal { "equal" } else { "DIFFERS" }
        ));
    }
    verdict(
        same,
        format!("exit codes {ca}, {cb}; {}", compared.join(", ")),
    )
}

// ----------------------------------------------------------------------------

fn main() {
    let mut records = Vec::new();
    let mut results: Vec<(u32, &str, Verdict, f64)> = Vec::new();
    let mut timed = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Verdict| {
        let started = Instant::now();
        let v = f();
        let secs = started.elapsed().as_secs_f64();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id} {name} ({secs:.1}s): {}", v.detail);
        results.push((id, name, v, secs));
    };
    timed(1, "gradient correctness", &mut criterion_gradients);
    timed(2, "theory witnesses", &mut criterion_theory);
    timed(3, "identity neutrality", &mut || {
        criterion_identity(&mut records)
    });
    timed(5, "scalability", &mut || criterion_speed(&mut records));
    timed(6, "decision quality", &mut || {
        criterion_quality(&mut records)
    });
    timed(4, "feasibility", &mut || criterion_feasibility(&records));
    timed(7, "protocol fidelity", &mut criterion_protocol);
    timed(8, "determinism", &mut criterion_determinism);

    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.2.passed)
        .map(|r| r.0.to_string())
        .collect();
    println!(
        "acceptance: {}/{} criteria pass",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {}", failed.join(", "));
        std::process::exit(1);
    }
}
