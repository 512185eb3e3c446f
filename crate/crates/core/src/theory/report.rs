use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    check_convexity_preservation, check_dr_preservation, coordinate_quasiconvexity_probe,
    counterexample_matrices, counterexample_opt, rademacher_bound, segment_probe, surrogate_opt,
    BoundInputs, ConstantHessian, ProbeReport,
};
use crate::domains::{
    cosine_columns, portfolio_hessian, portfolio_objective, portfolio_problem, PortfolioInstance,
    COVARIANCE_RIDGE,
};
use crate::error::{Error, Result};
use crate::optlayer::solve_qp;
use crate::{Matrix, Vector};

pub const P_DRAWS: usize = 50;
pub const QUASICONVEXITY_TRIALS: usize = 200;
pub const PROBE_TOL: f64 = 1e-6;
pub const HESSIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCheck {
    pub name: &'static str,
    pub passed: bool,
    pub value: f64,
    pub detail: String,
}

fn random_matrix(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let b = random_matrix(n, n, -1.0, 1.0, rng);
    let mut a = b.tr_matmul(&b).expect("square");
    a.add_diagonal(1e-3);
    a
}

/// Cosine similarity of random returns plus the standard ridge.
fn random_covariance(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut q = cosine_columns(&random_matrix(10, n, -0.02, 0.02, rng));
    q.add_diagonal(COVARIANCE_RIDGE);
    q
}

fn samples(n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| (0..n).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect()
}

fn convexity_check(
    name: &'static str,
    hessian: impl Fn(&mut ChaCha8Rng) -> Matrix,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TheoryCheck> {
    let mut worst = f64::INFINITY;
    let mut passed = true;
    for _ in 0..P_DRAWS {
        let m = rng.random_range(1..=n);
        let p = random_matrix(n, m, -1.0, 1.0, rng);
        let h = ConstantHessian(hessian(rng));
        let out = check_convexity_preservation(&h, &p, &samples(n, 3, rng), HESSIAN_TOL)?;
        passed &= out.passed;
        worst = worst.min(out.worst);
    }
    Ok(TheoryCheck {
        name,
        passed,
        value: worst,
        detail: format!("min eigenvalue of PᵀHP over {P_DRAWS} draws of P"),
    })
}

/// Estimate of the optimality gap `C` for portfolio instances: the largest
/// `max_S f − min_S f` over the given instances. The minimum of the concave
/// objective over the simplex is attained at a vertex.
pub fn estimate_portfolio_gap(instances: &[&PortfolioInstance]) -> Result<f64> {
    let mut gap = 0.0f64;
    for inst in instances {
        let n = inst.n();
        let sol = solve_qp(&portfolio_problem(
            &inst.returns,
            &inst.covariance,
            inst.risk_aversion,
        )?)?;
        let best =
            portfolio_objective(&sol.y, &inst.returns, &inst.covariance, inst.risk_aversion)?;
        let worst = (0..n)
            .map(|i| {
                portfolio_objective(
                    &Vector::basis(n, i),
                    &inst.returns,
                    &inst.covariance,
                    inst.risk_aversion,
                )
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        gap = gap.max(best - worst);
    }
    Ok(gap)
}

/// Every mechanical check, in a fixed order, from one seed.
pub fn run_theory_checks(seed: u64) -> Result<Vec<TheoryCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    out.push(convexity_check(
        "convexity_norm_squared",
        |_| Matrix::identity(6).scaled(2.0),
        6,
        &mut rng,
    )?);
    out.push(convexity_check(
        "convexity_portfolio_min_form",
        |r| portfolio_hessian(&random_covariance(6, r), 2.0).scaled(-1.0),
        6,
        &mut rng,
    )?);
    out.push(convexity_check(
        "convexity_random_spd",
        |r| random_spd(6, r),
        6,
        &mut rng,
    )?);

    let mut worst = f64::NEG_INFINITY;
    let mut passed = true;
    for _ in 0..P_DRAWS {
        let h = ConstantHessian(
            random_matrix(6, 6, 0.0, 1.0, &mut rng)
                .tr_matmul(&random_matrix(6, 6, 0.0, 1.0, &mut rng))?
                .scaled(-1.0),
        );
        let h = ConstantHessian(h.0.add(&h.0.transpose())?.scaled(0.5));
        let m = rng.random_range(1..=6);
        let p = random_matrix(6, m, 0.0, 1.0, &mut rng);
        let r = check_dr_preservation(&h, &p, &samples(6, 3, &mut rng), HESSIAN_TOL)?;
        passed &= r.passed;
        worst = worst.max(r.worst);
    }
    out.push(TheoryCheck {
        name: "dr_preservation",
        passed,
        value: worst,
        detail: format!("max entry of PᵀHP over {P_DRAWS} nonnegative P draws"),
    });

    let neg = Matrix::from_rows(&[vec![1.0, -0.5], vec![0.0, 1.0]])?;
    let guard = check_dr_preservation(
        &ConstantHessian(Matrix::filled(2, 2, -1.0)),
        &neg,
        &[vec![0.0, 0.0]],
        HESSIAN_TOL,
    );
    out.push(TheoryCheck {
        name: "dr_hypothesis_guard",
        passed: matches!(guard, Err(Error::HypothesisViolated(_))),
        value: f64::NAN,
        detail: "negative P entry rejected".into(),
    });

    let [p, q, mid] = counterexample_matrices();
    let values = [
        counterexample_opt(&p)?,
        counterexample_opt(&q)?,
        counterexample_opt(&mid)?,
    ];
    let expected = [0.0, 0.0, 1.0 / 3.0];
    let err = values
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(TheoryCheck {
        name: "counterexample_values",
        passed: err <= 1e-9,
        value: values[2],
        detail: format!(
            "OPT(P), OPT(P′), OPT(P″) = {:e}, {:e}, {:e}",
            values[0], values[1], values[2]
        ),
    });

    let mut probe = ProbeReport::default();
    let setups = QUASICONVEXITY_TRIALS / 10;
    for k in 0..setups {
        let cov = random_covariance(6, &mut rng);
        let returns: Vec<f64> = (0..6).map(|_| rng.random_range(-0.05..0.05)).collect();
        let base = portfolio_problem(&returns, &cov, 2.0)?;
        let p = random_matrix(6, 3, 0.0, 1.0, &mut rng);
        let r = coordinate_quasiconvexity_probe(
            |q| surrogate_opt(&base, q),
            &p,
            k % 3,
            10,
            PROBE_TOL,
            &mut rng,
        )?;
        probe.merge(&r);
    }
    out.push(TheoryCheck {
        name: "coordinate_quasiconvexity",
        passed: probe.violations == 0 && probe.trials == QUASICONVEXITY_TRIALS,
        value: probe.violations as f64,
        detail: format!(
            "{} violations in {} trials ({} solver failures; max excess {:e})",
            probe.violations, probe.trials, probe.failures, probe.max_excess
        ),
    });

    let seg = segment_probe(counterexample_opt, &p, &q, 9, PROBE_TOL)?;
    out.push(TheoryCheck {
        name: "full_matrix_segment",
        passed: seg.violations >= 1,
        value: seg.violations as f64,
        detail: format!(
            "{} violations on the P↔P′ segment; max excess {:e}",
            seg.violations, seg.max_excess
        ),
    });

    let worked = BoundInputs {
        m: 2.0,
        c: 1.0,
        p_dim: 3.0,
        t: 100.0,
        pinv_norm: 1.0,
        diameter: 2f64.sqrt(),
    };
    let b = rademacher_bound(&worked)?;
    out.push(TheoryCheck {
        name: "rademacher_worked_example",
        passed: (b - 2.4668).abs() <= 1e-3,
        value: b,
        detail: "m=2 C=1 p=3 t=100 ‖P⁺‖=1 ρ=√2".into(),
    });
    Ok(out)
}

pub fn theory_report_csv(checks: &[TheoryCheck]) -> String {
    let mut s = String::from("check,passed,value,detail\n");
    for c in checks {
        let detail = c.detail.replace(',', ";");
        let _ = writeln!(s, "{},{},{},{}", c.name, c.passed, c.value, detail);
    }
    s
}

pub fn write_theory_report(checks: &[TheoryCheck], path: &Path) -> Result<()> {
    std::fs::write(path, theory_report_csv(checks))?;
    Ok(())
}
