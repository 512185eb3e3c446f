use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dataset::{quantize, Dataset};
use super::portfolio::sorted_labels;
use crate::error::{Error, Result};
use crate::optlayer::{solve_qp, QuadraticProgram};
use crate::{Matrix, Vector};

pub const DEFAULT_BUDGET: usize = 10;
pub const DEFAULT_PICKS: usize = 3;
/// Weight of the `−γ‖x‖²` term that makes the frozen problem strictly concave.
pub const DEFAULT_GAMMA: f64 = 0.1;
pub const MAX_LINEARIZATIONS: usize = 20;

/// One group of users.
#[derive(Debug, Clone, PartialEq)]
pub struct MovieRecInstance {
    /// `θ`, movies × users, entries in `[0, 1]`.
    pub preferences: Matrix,
    /// Users × feature movies, ratings in `[0, 1]`.
    pub features: Matrix,
    pub budget: usize,
    pub picks: usize,
}

impl MovieRecInstance {
    pub fn n(&self) -> usize {
        self.preferences.rows()
    }

    pub fn users(&self) -> usize {
        self.preferences.cols()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovieRecGenParams {
    pub latent_dim: usize,
    /// Standard deviation of user and movie factors.
    pub factor_scale: f64,
    /// Standard deviation of per-movie popularity.
    pub bias_scale: f64,
    /// Noise inside the sigmoid for `θ`.
    pub noise_scale: f64,
    /// Log-scale spread of per-movie noise multipliers; `0` gives every movie `noise_scale`.
    pub dispersion: f64,
    /// Noise inside the sigmoid for the feature ratings.
    pub feature_noise: f64,
    pub budget: usize,
    pub picks: usize,
}

impl Default for MovieRecGenParams {
    fn default() -> Self {
        Self {
            latent_dim: 4,
            factor_scale: 1.2,
            bias_scale: 0.5,
            noise_scale: 0.3,
            dispersion: 0.0,
            feature_noise: 1.0,
            budget: DEFAULT_BUDGET,
            picks: DEFAULT_PICKS,
        }
    }
}

pub fn gen_movierec_data(
    n_movies: usize,
    users_per_group: usize,
    n_groups: usize,
    n_feature_movies: usize,
    seed: u64,
) -> Result<Dataset<MovieRecInstance>> {
    gen_movierec_data_with(
        n_movies,
        users_per_group,
        n_groups,
        n_feature_movies,
        seed,
        &MovieRecGenParams::default(),
    )
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Low-rank latent model: `θᵢⱼ = clip(σ(uⱼ·vᵢ + bᵢ + sᵢ·ε), 0, 1)` with per-movie noise
/// scale `sᵢ = noise_scale·exp(dispersion·z)`. Feature ratings use
/// the same user factors on held-out movies with their own noise.
pub fn gen_movierec_data_with(
    n_movies: usize,
    users_per_group: usize,
    n_groups: usize,
    n_feature_movies: usize,
    seed: u64,
    params: &MovieRecGenParams,
) -> Result<Dataset<MovieRecInstance>> {
    if n_movies == 0 || users_per_group == 0 || n_groups == 0 || n_feature_movies == 0 {
        return Err(Error::BadDimensions(
            "movie-rec counts must all be ≥ 1".into(),
        ));
    }
    if params.budget > n_movies || params.picks > n_movies || params.picks == 0 {
        return Err(Error::BadDimensions(format!(
            "budget {} and picks {} for {n_movies} movies",
            params.budget, params.picks
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let r = params.latent_dim;
    let total_movies = n_movies + n_feature_movies;
    let movie_factors = Matrix::from_fn(total_movies, r, |_, _| params.factor_scale * normal());
    let bias: Vec<f64> = (0..total_movies)
        .map(|_| params.bias_scale * normal())
        .collect();
    let spread: Vec<f64> = (0..n_movies)
        .map(|_| params.noise_scale * (params.dispersion * normal()).exp())
        .collect();

    let instances = (0..n_groups)
        .map(|_| {
            let users = Matrix::from_fn(users_per_group, r, |_, _| params.factor_scale * normal());
            let score = |movie: usize, user: usize| -> f64 {
                (0..r)
                    .map(|k| movie_factors[(movie, k)] * users[(user, k)])
                    .sum::<f64>()
                    + bias[movie]
            };
            let mut preferences = Matrix::zeros(n_movies, users_per_group);
            for j in 0..users_per_group {
                for i in 0..n_movies {
                    let z = score(i, j) + spread[i] * normal();
                    preferences[(i, j)] = quantize(sigmoid(z).clamp(0.0, 1.0));
                }
            }
            let mut features = Matrix::zeros(users_per_group, n_feature_movies);
            for j in 0..users_per_group {
                for l in 0..n_feature_movies {
                    let z = score(n_movies + l, j) + params.feature_noise * normal();
                    features[(j, l)] = quantize(sigmoid(z).clamp(0.0, 1.0));
                }
            }
            MovieRecInstance {
                preferences,
                features,
                budget: params.budget,
                picks: params.picks,
            }
        })
        .collect();
    Ok(Dataset::new(instances))
}

fn check(x: &[f64], theta: &Matrix, picks: usize) -> Result<()> {
    if x.len() != theta.rows() {
        return Err(Error::dims(format!(
            "x has length {}, θ has {} movies",
            x.len(),
            theta.rows()
        )));
    }
    if picks > theta.rows() {
        return Err(Error::InvalidInputs(format!(
            "T = {picks} exceeds {} movies",
            theta.rows()
        )));
    }
    Ok(())
}

/// For each user, the `T` movies with the largest `xᵢθᵢⱼ`; ties go to the lowest index.
pub fn top_selections(x: &[f64], theta: &Matrix, picks: usize) -> Result<Vec<Vec<usize>>> {
    check(x, theta, picks)?;
    let n = theta.rows();
    Ok((0..theta.cols())
        .map(|j| {
            let mut idx: Vec<usize> = (0..n).collect();
            let val = |i: usize| x[i] * theta[(i, j)];
            idx.sort_by(|&a, &b| {
                val(b)
                    .partial_cmp(&val(a))
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.cmp(&b))
            });
            idx.truncate(picks);
            idx
        })
        .collect())
}

/// `Σⱼ` (sum of the `T` largest `xᵢθᵢⱼ`).
pub fn movierec_objective(x: &[f64], theta: &Matrix, picks: usize) -> Result<f64> {
    let sel = top_selections(x, theta, picks)?;
    Ok(sel
        .iter()
        .enumerate()
        .map(|(j, s)| s.iter().map(|&i| x[i] * theta[(i, j)]).sum::<f64>())
        .sum())
}

/// `gᵢ = Σⱼ θᵢⱼ·[i ∈ top-T of user j]`.
pub fn movierec_supergradient(x: &[f64], theta: &Matrix, picks: usize) -> Result<Vector> {
    let sel = top_selections(x, theta, picks)?;
    Ok(linear_coefficients(theta, &sel))
}

/// Coefficients of the objective with selections frozen.
pub fn linear_coefficients(theta: &Matrix, selections: &[Vec<usize>]) -> Vector {
    let mut g = Vector::zeros(theta.rows());
    for (j, s) in selections.iter().enumerate() {
        for &i in s {
            g[i] += theta[(i, j)];
        }
    }
    g
}

/// `[−I; I; 1ᵀ] x ≤ [0; 1; k]`.
pub fn box_budget_constraints(n: usize, budget: f64) -> (Matrix, Vector) {
    let g = Matrix::from_fn(2 * n + 1, n, |r, c| {
        if r < n {
            if r == c {
                -1.0
            } else {
                0.0
            }
        } else if r < 2 * n {
            if r - n == c {
                1.0
            } else {
                0.0
            }
        } else {
            1.0
        }
    });
    let h = (0..2 * n + 1)
        .map(|r| {
            if r < n {
                0.0
            } else if r < 2 * n {
                1.0
            } else {
                budget
            }
        })
        .collect();
    (g, h)
}

/// The linearized problem `min −cᵀx` over the box-budget set, with `c` from
/// selections frozen at `x_ref`. No quadratic term; callers add the ridge.
pub fn movierec_linearized_problem(
    theta: &Matrix,
    x_ref: &[f64],
    picks: usize,
    budget: usize,
) -> Result<(QuadraticProgram<f64>, Vec<Vec<usize>>)> {
    let n = theta.rows();
    let sel = top_selections(x_ref, theta, picks)?;
    let c = linear_coefficients(theta, &sel);
    let (g, h) = box_budget_constraints(n, budget as f64);
    let qp = QuadraticProgram::new(Matrix::zeros(n, n), c.scaled(-1.0))?.with_inequalities(g, h)?;
    Ok((qp, sel))
}

/// Uniform `k/n` starting point for the successive linearization.
pub fn uniform_start(n: usize, budget: usize) -> Vector {
    Vector::filled(n, budget as f64 / n as f64)
}

/// Successive linearization of `max f(x) − γ‖x‖²` over the box-budget set:
/// freeze selections, solve the concave QP, repeat until selections stop changing.
pub fn movierec_relaxed_solve(
    theta: &Matrix,
    picks: usize,
    budget: usize,
    gamma: f64,
) -> Result<Vector> {
    let mut x_ref = uniform_start(theta.rows(), budget);
    let mut prev = None;
    for _ in 0..MAX_LINEARIZATIONS {
        let (qp, sel) = movierec_linearized_problem(theta, &x_ref, picks, budget)?;
        if prev.as_ref() == Some(&sel) {
            break;
        }
        x_ref = solve_qp(&qp.with_ridge(2.0 * gamma))?.y;
        prev = Some(sel);
    }
    Ok(x_ref)
}

/// Indicator of the `k` largest coordinates (ties to the lowest index).
pub fn round_top_k(x: &[f64], k: usize) -> Vector {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| {
        x[b].partial_cmp(&x[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = Vector::zeros(x.len());
    for &i in idx.iter().take(k) {
        out[i] = 1.0;
    }
    out
}

/// Euclidean projection onto `{0 ≤ x ≤ 1, Σx ≤ k}` by bisection on the shift.
pub fn project_box_budget(v: &[f64], budget: f64) -> Vector {
    let clipped = |tau: f64| -> Vector { v.iter().map(|&a| (a - tau).clamp(0.0, 1.0)).collect() };
    let x0 = clipped(0.0);
    if x0.sum() <= budget {
        return x0;
    }
    let (mut lo, mut hi) = (0.0, v.iter().fold(0.0f64, |a, &b| a.max(b)));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if clipped(mid).sum() > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    clipped(hi)
}

/// Linear maximization over the box-budget set: ones on the `k` largest positive coordinates.
pub fn box_budget_linear_max(g: &[f64], budget: usize) -> Vector {
    let mut x = round_top_k(g, budget);
    for (xi, &gi) in x.iter_mut().zip(g) {
        if gi <= 0.0 {
            *xi = 0.0;
        }
    }
    x
}

/// Largest violation of `0 ≤ x ≤ 1`, `Σx ≤ k`.
pub fn box_budget_violation(x: &[f64], budget: usize) -> f64 {
    let over = (x.iter().sum::<f64>() - budget as f64).max(0.0);
    x.iter().fold(over, |acc, &v| acc.max(-v).max(v - 1.0))
}

fn set_value(set: &[usize], theta: &Matrix, picks: usize) -> f64 {
    (0..theta.cols())
        .map(|j| {
            let mut vals: Vec<f64> = set.iter().map(|&i| theta[(i, j)]).collect();
            vals.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
            vals.iter().take(picks).sum::<f64>()
        })
        .sum()
}

fn greedy_set(theta: &Matrix, picks: usize, budget: usize) -> Vec<usize> {
    let mut set = Vec::with_capacity(budget);
    for _ in 0..budget {
        let best = (0..theta.rows())
            .filter(|i| !set.contains(i))
            .map(|i| {
                let mut s = set.clone();
                s.push(i);
                (i, set_value(&s, theta, picks))
            })
            .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((i, v)),
            });
        match best {
            Some((i, _)) => set.push(i),
            None => break,
        }
    }
    set
}

/// Best-improvement 1-swap search.
fn local_search(mut set: Vec<usize>, theta: &Matrix, picks: usize) -> (Vec<usize>, f64) {
    let mut value = set_value(&set, theta, picks);
    loop {
        let mut best = None;
        for pos in 0..set.len() {
            for cand in 0..theta.rows() {
                if set.contains(&cand) {
                    continue;
                }
                let mut s = set.clone();
                s[pos] = cand;
                let v = set_value(&s, theta, picks);
                if v > value + 1e-12 && best.is_none_or(|(_, _, bv)| v > bv) {
                    best = Some((pos, cand, v));
                }
            }
        }
        match best {
            Some((pos, cand, v)) => {
                set[pos] = cand;
                value = v;
            }
            None => return (set, value),
        }
    }
}

/// Heuristic full-information decision: the better of (relaxed solve, rounded)
/// and greedy, each refined by 1-swap local search. Returns the binary decision and its value.
pub fn movierec_oracle(inst: &MovieRecInstance, gamma: f64) -> Result<(Vector, f64)> {
    let theta = &inst.preferences;
    let relaxed = movierec_relaxed_solve(theta, inst.picks, inst.budget, gamma)?;
    let rounded = round_top_k(&relaxed, inst.budget);
    let from_relaxed: Vec<usize> = (0..rounded.len()).filter(|&i| rounded[i] > 0.5).collect();
    let candidates = [from_relaxed, greedy_set(theta, inst.picks, inst.budget)];
    let (set, value) = candidates
        .into_iter()
        .map(|s| local_search(s, theta, inst.picks))
        .fold(None, |acc: Option<(Vec<usize>, f64)>, (s, v)| match acc {
            Some((_, bv)) if bv >= v => acc,
            _ => Some((s, v)),
        })
        .expect("two candidates");
    let mut x = Vector::zeros(theta.rows());
    for i in set {
        x[i] = 1.0;
    }
    Ok((x, value))
}

pub fn movierec_regret(x: &[f64], inst: &MovieRecInstance, gamma: f64) -> Result<f64> {
    let (_, best) = movierec_oracle(inst, gamma)?;
    Ok(best - movierec_objective(x, &inst.preferences, inst.picks)?)
}

/// `user,movie,rating`; movies below `n_movies` are candidates, the rest feature movies.
pub fn write_movierec_csv(data: &Dataset<MovieRecInstance>, path: &Path) -> Result<()> {
    let mut out = String::from("user,movie,rating\n");
    let mut user = 0;
    for inst in &data.instances {
        let n = inst.n();
        for j in 0..inst.users() {
            for i in 0..n {
                out.push_str(&format!("{user},{i},{}\n", inst.preferences[(i, j)]));
            }
            for l in 0..inst.features.cols() {
                out.push_str(&format!("{user},{},{}\n", n + l, inst.features[(j, l)]));
            }
            user += 1;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Inverse of [`write_movierec_csv`]; user `u` belongs to group `u / users_per_group`.
pub fn read_movierec_csv(
    path: &Path,
    n_movies: usize,
    users_per_group: usize,
    budget: usize,
    picks: usize,
) -> Result<Dataset<MovieRecInstance>> {
    if users_per_group == 0 || n_movies == 0 {
        return Err(Error::BadDimensions(
            "users_per_group and n_movies must be ≥ 1".into(),
        ));
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|s| s.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let (Some(cu), Some(cm), Some(cr)) = (col("user"), col("movie"), col("rating")) else {
        return Err(Error::Parse(format!(
            "{}: header must contain user, movie, rating",
            path.display()
        )));
    };
    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || {
            Error::Parse(format!(
                "{}: bad row on line {}",
                path.display(),
                lineno + 2
            ))
        };
        let u: usize = f.get(cu).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let m: usize = f.get(cm).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        let r: f64 = f.get(cr).and_then(|s| s.parse().ok()).ok_or_else(bad)?;
        cells.insert((u, m), r);
    }
    let users = sorted_labels(cells.keys().map(|(u, _)| u.to_string()));
    let n_total = cells.keys().map(|&(_, m)| m + 1).max().unwrap_or(0);
    if n_total <= n_movies {
        return Err(Error::Parse(
            "no feature movies (ids ≥ n_movies) in ratings file".into(),
        ));
    }
    if users.len() % users_per_group != 0 {
        return Err(Error::Parse(format!(
            "{} users do not form whole groups of {users_per_group}",
            users.len()
        )));
    }
    let n_feat = n_total - n_movies;
    let get = |u: usize, m: usize| {
        cells
            .get(&(u, m))
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing rating for user {u}, movie {m}")))
    };
    let mut instances = Vec::new();
    for group in users.chunks(users_per_group) {
        let ids: Vec<usize> = group.iter().map(|s| s.parse().unwrap()).collect();
        let mut preferences = Matrix::zeros(n_movies, ids.len());
        let mut features = Matrix::zeros(ids.len(), n_feat);
        for (j, &u) in ids.iter().enumerate() {
            for i in 0..n_movies {
                preferences[(i, j)] = get(u, i)?;
            }
            for l in 0..n_feat {
                features[(j, l)] = get(u, n_movies + l)?;
            }
        }
        instances.push(MovieRecInstance {
            preferences,
            features,
            budget,
            picks,
        });
    }
    Ok(Dataset::new(instances))
}
