use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surrogate_dfl::diff::{finite_diff_grad, Parameterized};
use surrogate_dfl::numerics::DenseMatrix;
use surrogate_dfl::optlayer::{solve_qp, QuadraticProgram};
use surrogate_dfl::surrogate::*;
use surrogate_dfl::{Error, Matrix, Vector};

fn simplex_base(n: usize, rng: &mut ChaCha8Rng) -> QuadraticProgram<f64> {
    let mf = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let mut h = mf.tr_matmul(&mf).unwrap();
    h.add_diagonal(0.2);
    let c: Vector = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    QuadraticProgram::new(h, c)
        .unwrap()
        .with_equalities(Matrix::filled(1, n, 1.0), Vector::filled(1, 1.0))
        .unwrap()
        .with_nonnegativity()
        .unwrap()
}

fn box_budget_base(n: usize, k: f64) -> QuadraticProgram<f64> {
    let mut g = Matrix::identity(n)
        .scaled(-1.0)
        .vstack(&Matrix::identity(n))
        .unwrap();
    g = g.vstack(&Matrix::filled(1, n, 1.0)).unwrap();
    let h: Vector = (0..n)
        .map(|_| 0.0)
        .chain((0..n).map(|_| 1.0))
        .chain([k])
        .collect();
    QuadraticProgram::new(Matrix::zeros(n, n), Vector::filled(n, -1.0))
        .unwrap()
        .with_inequalities(g, h)
        .unwrap()
}

#[test]
#[allow(clippy::approx_constant)]
fn materialize_examples() {
    let rep = Reparameterization::<f64>::identity(3);
    assert_eq!(rep.materialize(), Matrix::identity(3));

    let rep = Reparameterization {
        p_raw: Matrix::zeros(4, 2),
        mode: ReparamMode::ColumnSimplex,
    };
    assert!(rep
        .materialize()
        .as_slice()
        .iter()
        .all(|&v| (v - 0.25).abs() < 1e-15));

    let rep = Reparameterization {
        p_raw: Matrix::zeros(1, 1),
        mode: ReparamMode::Nonneg,
    };
    assert!((rep.materialize()[(0, 0)] - 2f64.ln()).abs() < 1e-15);
    assert!((rep.materialize()[(0, 0)] - 0.6931).abs() < 1e-4);
}

#[test]
fn mode_names_round_trip() {
    for mode in [
        ReparamMode::ColumnSimplex,
        ReparamMode::Nonneg,
        ReparamMode::Free,
    ] {
        assert_eq!(mode.to_string().parse::<ReparamMode>().unwrap(), mode);
    }
    assert!("simplex".parse::<ReparamMode>().is_err());
}

proptest! {
    #[test]
    fn column_simplex_columns_sum_to_one(raw in proptest::collection::vec(-30.0f64..30.0, 12)) {
        let rep = Reparameterization { p_raw: Matrix::from_vec(4, 3, raw).unwrap(), mode: ReparamMode::ColumnSimplex };
        let p = rep.materialize();
        for j in 0..3 {
            prop_assert!((p.column(j).sum() - 1.0).abs() <= 1e-12);
        }
        prop_assert!(p.as_slice().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn nonneg_is_nonnegative_and_finite(raw in proptest::collection::vec(-800.0f64..800.0, 6)) {
        let rep = Reparameterization { p_raw: Matrix::from_vec(3, 2, raw).unwrap(), mode: ReparamMode::Nonneg };
        let p = rep.materialize();
        prop_assert!(p.is_finite() && p.as_slice().iter().all(|&v| v >= 0.0));
    }
}

#[test]
fn pullback_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for mode in [
        ReparamMode::ColumnSimplex,
        ReparamMode::Nonneg,
        ReparamMode::Free,
    ] {
        let rep = init_reparam::<f64>(5, 2, mode, 3).unwrap();
        let w = Matrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
        let analytic = rep.pullback(&w).unwrap();
        let f = |raw: &[f64]| {
            let r = Reparameterization {
                p_raw: Matrix::from_vec(5, 2, raw.to_vec()).unwrap(),
                mode,
            };
            r.materialize()
                .as_slice()
                .iter()
                .zip(w.as_slice())
                .map(|(a, b)| a * b)
                .sum::<f64>()
        };
        let fd = finite_diff_grad(f, rep.p_raw.as_slice(), 1e-5);
        for (a, b) in analytic.as_slice().iter().zip(fd.iter()) {
            assert!((a - b).abs() < 1e-8, "{mode}: {a} vs {b}");
        }
    }
}

#[test]
fn lift_examples() {
    let y = [0.3, -1.2];
    assert_eq!(lift(&Matrix::identity(2), &y).unwrap().as_slice(), &y);
    assert_eq!(
        lift(&Matrix::zeros(3, 2), &y).unwrap().as_slice(),
        &[0.0; 3]
    );
    assert!(matches!(
        lift(&Matrix::zeros(3, 3), &y),
        Err(Error::DimensionMismatch(_))
    ));
    let p = init_reparam::<f64>(6, 3, ReparamMode::ColumnSimplex, 9)
        .unwrap()
        .materialize();
    let x = lift(&p, &[0.2, 0.5, 0.3]).unwrap();
    assert!((x.sum() - 1.0).abs() < 1e-12 && x.iter().all(|&v| v >= 0.0));
}

#[test]
fn init_reparam_rules() {
    assert_eq!(default_surrogate_dim(50), 5);
    assert_eq!(default_surrogate_dim(7), 1);
    assert_eq!(default_surrogate_dim(100), 10);
    let a = init_reparam::<f64>(8, 2, ReparamMode::Free, 42).unwrap();
    let b = init_reparam::<f64>(8, 2, ReparamMode::Free, 42).unwrap();
    assert_eq!(a, b);
    assert!(a.p_raw.as_slice().iter().all(|v| (-0.5..=0.5).contains(v)));
    assert_ne!(a, init_reparam::<f64>(8, 2, ReparamMode::Free, 43).unwrap());
    assert!(matches!(
        init_reparam::<f64>(3, 4, ReparamMode::Free, 0),
        Err(Error::BadDimensions(_))
    ));
    assert!(matches!(
        init_reparam::<f64>(3, 0, ReparamMode::Free, 0),
        Err(Error::BadDimensions(_))
    ));
}

#[test]
fn transform_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let base = simplex_base(6, &mut rng);
    let p = init_reparam::<f64>(6, 2, ReparamMode::ColumnSimplex, 5)
        .unwrap()
        .materialize();
    let sp = transform_problem(&base, &p, &TransformOptions::default()).unwrap();
    assert!(sp
        .qp
        .a_eq
        .as_slice()
        .iter()
        .all(|&v| (v - 1.0).abs() < 1e-12));

    let id = transform_problem(&base, &Matrix::identity(6), &TransformOptions::default()).unwrap();
    assert_eq!(id.qp, base);

    let mb = box_budget_base(4, 2.0);
    let p = init_reparam::<f64>(4, 2, ReparamMode::Nonneg, 1)
        .unwrap()
        .materialize();
    let sp = transform_problem(&mb, &p, &TransformOptions::default()).unwrap();
    assert_eq!(sp.qp.num_ineq(), 2 * 4 + 1);
    let opts = TransformOptions {
        nonneg_y: true,
        ridge: 0.2,
    };
    let sp = transform_problem(&mb, &p, &opts).unwrap();
    assert_eq!(sp.qp.num_ineq(), 2 * 4 + 1 + 2);
    assert_eq!(sp.extra_ineq, 2);
}

#[test]
fn empty_surrogate_feasible_set() {
    // x₀ = 1 required, but P has a zero first row.
    let base = QuadraticProgram::new(Matrix::identity(3), Vector::zeros(3))
        .unwrap()
        .with_equalities(
            Matrix::from_rows(&[vec![1.0, 0.0, 0.0]]).unwrap(),
            Vector::filled(1, 1.0),
        )
        .unwrap();
    let p = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![1.0]]).unwrap();
    assert!(matches!(
        transform_problem(&base, &p, &TransformOptions::default()),
        Err(Error::EmptyFeasibleSet)
    ));
}

#[test]
fn lifted_solutions_are_base_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..50 {
        let n = rng.random_range(3..12);
        let m = rng.random_range(1..=n);
        let (base, mode) = if trial % 2 == 0 {
            (simplex_base(n, &mut rng), ReparamMode::ColumnSimplex)
        } else {
            (box_budget_base(n, 2.0).with_ridge(0.2), ReparamMode::Nonneg)
        };
        let p = init_reparam::<f64>(n, m, mode, trial)
            .unwrap()
            .materialize();
        let sp = transform_problem(
            &base,
            &p,
            &TransformOptions {
                nonneg_y: true,
                ridge: 0.0,
            },
        )
        .unwrap();
        let sol = sp.solve().unwrap();
        let x = sp.lift(&sol.y).unwrap();
        let eq = base
            .a_eq
            .matvec(&x)
            .unwrap()
            .sub(&base.b_eq)
            .unwrap()
            .max_abs();
        let ineq = base
            .g_ineq
            .matvec(&x)
            .unwrap()
            .iter()
            .zip(base.h_ineq.iter())
            .fold(0.0f64, |a, (g, h)| a.max(g - h));
        assert!(eq <= 1e-8 && ineq <= 1e-8);
    }
}

#[test]
fn grad_wrt_p_examples() {
    let rep = Reparameterization::<f64>::identity(3);
    let jac = Matrix::from_fn(3, 9, |i, j| (i + j) as f64);
    let g = grad_wrt_p(&[0.0; 3], &[1.0, 2.0, 3.0], &jac, &[0.0; 3], &rep).unwrap();
    assert!(g.max_abs() == 0.0);

    let rep = Reparameterization {
        p_raw: Matrix::from_fn(3, 2, |i, j| (i * 2 + j) as f64 * 0.1),
        mode: ReparamMode::Free,
    };
    let dl_dx = [1.0, -2.0, 0.5];
    let y = [0.3, 0.7];
    let g = grad_wrt_p(&dl_dx, &y, &Matrix::zeros(2, 6), &[4.0, 4.0], &rep).unwrap();
    for i in 0..3 {
        for j in 0..2 {
            assert_eq!(g[(i, j)], dl_dx[i] * y[j]);
        }
    }
    assert!(grad_wrt_p(&dl_dx, &y, &Matrix::zeros(2, 5), &[0.0, 0.0], &rep).is_err());
}

/// End-to-end loss `L = θᵀ P y*(P) + ½‖P y*‖²` through the solver.
fn e2e_loss(
    base: &QuadraticProgram<f64>,
    rep: &Reparameterization<f64>,
    theta: &[f64],
    opts: &TransformOptions<f64>,
) -> (f64, Vec<usize>) {
    let sp = compose(base, &rep.materialize(), opts).unwrap();
    let sol = sp.solve().unwrap();
    let x = sp.lift(&sol.y).unwrap();
    let l = x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() + 0.5 * x.dot(&x);
    (l, sol.active_set)
}

#[test]
fn surrogate_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut checked, mut skipped) = (0, 0);
    let mut trial = 0;
    while checked < 30 {
        trial += 1;
        let (n, m) = (4, 2);
        let mode = [
            ReparamMode::Free,
            ReparamMode::Nonneg,
            ReparamMode::ColumnSimplex,
        ][trial % 3];
        let (base, opts) = match mode {
            ReparamMode::ColumnSimplex => (
                simplex_base(n, &mut rng),
                TransformOptions {
                    nonneg_y: true,
                    ridge: 0.0,
                },
            ),
            ReparamMode::Nonneg => (
                box_budget_base(n, 1.5),
                TransformOptions {
                    nonneg_y: true,
                    ridge: 0.3,
                },
            ),
            ReparamMode::Free => {
                let mf = DenseMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
                let mut h = mf.tr_matmul(&mf).unwrap();
                h.add_diagonal(0.5);
                let base =
                    QuadraticProgram::new(h, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                        .unwrap()
                        .with_inequalities(
                            Matrix::from_fn(2, n, |_, _| rng.random_range(-1.0..1.0)),
                            Vector::filled(2, 0.2),
                        )
                        .unwrap();
                (base, TransformOptions::default())
            }
        };
        let rep = init_reparam::<f64>(n, m, mode, trial as u64).unwrap();
        let theta: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

        let p = rep.materialize();
        let sp = compose(&base, &p, &opts).unwrap();
        let sol = sp.solve().unwrap();
        let x = sp.lift(&sol.y).unwrap();
        let dl_dx: Vec<f64> = x.iter().zip(&theta).map(|(a, b)| a + b).collect();

        let via_vjp = rep.pullback(&sp.vjp(&sol, &dl_dx).unwrap().p).unwrap();
        let dl_dy = p.tr_matvec(&dl_dx).unwrap();
        let via_jac =
            grad_wrt_p(&dl_dx, &sol.y, &sp.jacobian_p(&sol).unwrap(), &dl_dy, &rep).unwrap();

        let raw0 = rep.flatten();
        let mut changed = false;
        let mut fd = Vec::new();
        for idx in 0..raw0.len() {
            let mut r = rep.clone();
            let mut w = raw0.clone();
            w[idx] += 1e-5;
            r.assign_flat(&w).unwrap();
            let (up, au) = e2e_loss(&base, &r, &theta, &opts);
            w[idx] -= 2e-5;
            r.assign_flat(&w).unwrap();
            let (down, ad) = e2e_loss(&base, &r, &theta, &opts);
            changed |= au != sol.active_set || ad != sol.active_set;
            fd.push((up - down) / 2e-5);
        }
        if changed {
            skipped += 1;
            continue;
        }
        checked += 1;
        for ((a, b), c) in via_vjp.as_slice().iter().zip(via_jac.as_slice()).zip(&fd) {
            assert!(
                (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                "vjp {a} vs jacobian {b}"
            );
            assert!(
                (a - c).abs() <= 1e-4 * a.abs().max(c.abs()).max(1e-3),
                "{mode}: {a} vs fd {c}"
            );
        }
    }
    assert!(
        skipped * 5 < checked + skipped,
        "skipped {skipped} of {}",
        checked + skipped
    );
}

#[test]
fn identity_reparam_vjp_equals_direct_vjp_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let base = simplex_base(6, &mut rng);
    let sp = compose(&base, &Matrix::identity(6), &TransformOptions::default()).unwrap();
    let sol = sp.solve().unwrap();
    let direct = solve_qp(&base).unwrap();
    assert_eq!(sol, direct);
    let dl_dx: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = sp.vjp(&sol, &dl_dx).unwrap();
    let d = surrogate_dfl::optlayer::kkt_vjp(&base, &direct, &dl_dx).unwrap();
    assert_eq!(g.h, d.h);
    assert_eq!(g.c, d.c);
}

#[test]
fn export_writes_materialized_p() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.csv");
    let rep = init_reparam::<f64>(4, 2, ReparamMode::ColumnSimplex, 0).unwrap();
    rep.export_csv(&path).unwrap();
    let back = Matrix::from_csv(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.shape(), (4, 2));
    assert!(back.sub(&rep.materialize()).unwrap().max_abs() < 1e-15);
}

#[test]
fn f32_materialize() {
    let rep = init_reparam::<f32>(5, 2, ReparamMode::ColumnSimplex, 0).unwrap();
    let p = rep.materialize();
    assert!((p.column(0).sum() - 1.0).abs() < 1e-6);
}
