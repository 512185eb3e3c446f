use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::dataset::{quantize, Dataset};
use crate::error::{Error, Result};
use crate::optlayer::{solve_qp, QuadraticProgram};
use crate::{Matrix, Vector};

pub const PORTFOLIO_FEATURES: usize = 7;
/// Longest look-back (10-day rolling mean) and look-ahead (covariance window).
const WINDOW: usize = 10;
pub const COVARIANCE_RIDGE: f64 = 1e-6;
pub const DEFAULT_RISK_AVERSION: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioInstance {
    /// `n × 7`: five lagged returns, 5-day and 10-day rolling means.
    pub features: Matrix,
    /// Next-day returns.
    pub returns: Vector,
    /// Cosine similarity of the next 10 returns plus `1e-6·I`.
    pub covariance: Matrix,
    pub risk_aversion: f64,
}

impl PortfolioInstance {
    pub fn n(&self) -> usize {
        self.returns.len()
    }
}

/// Price process knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortfolioGenParams {
    pub factors: usize,
    pub factor_vol: f64,
    pub idio_vol: f64,
    /// Pull of log price toward its long-run level per day.
    pub reversion: f64,
    /// Autocorrelation of daily returns.
    pub momentum: f64,
    pub drift_scale: f64,
}

impl Default for PortfolioGenParams {
    fn default() -> Self {
        Self {
            factors: 3,
            factor_vol: 0.01,
            idio_vol: 0.015,
            reversion: 0.05,
            momentum: 0.3,
            drift_scale: 0.002,
        }
    }
}

pub fn gen_portfolio_data(
    n_securities: usize,
    n_days: usize,
    seed: u64,
) -> Result<Dataset<PortfolioInstance>> {
    let prices = gen_portfolio_prices(n_securities, n_days, seed, &PortfolioGenParams::default())?;
    portfolio_dataset_from_prices(&prices, DEFAULT_RISK_AVERSION)
}

/// `(n_days + 20) × n` price matrix, so each of the `n_days` instances has a
/// full look-back and look-ahead window. Prices are quantized to 12 significant digits.
pub fn gen_portfolio_prices(
    n_securities: usize,
    n_days: usize,
    seed: u64,
    params: &PortfolioGenParams,
) -> Result<Matrix> {
    if n_securities == 0 || n_days <= 20 {
        return Err(Error::BadDimensions(format!(
            "portfolio data needs ≥ 1 security and > 20 days, got {n_securities} × {n_days}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let n = n_securities;
    let loadings = Matrix::from_fn(n, params.factors, |_, _| normal());
    let drift: Vec<f64> = (0..n).map(|_| params.drift_scale * normal()).collect();
    let start: Vec<f64> = (0..n).map(|_| 100f64.ln() + 0.3 * normal()).collect();

    let days = n_days + 2 * WINDOW;
    let mut log_price = start.clone();
    let mut last_ret = vec![0.0; n];
    let mut prices = Matrix::zeros(days, n);
    for t in 0..days {
        if t > 0 {
            let f: Vec<f64> = (0..params.factors).map(|_| normal()).collect();
            for i in 0..n {
                let common: f64 = (0..params.factors).map(|k| loadings[(i, k)] * f[k]).sum();
                let r = drift[i] + params.momentum * last_ret[i]
                    - params.reversion * (log_price[i] - start[i])
                    + params.factor_vol * common
                    + params.idio_vol * normal();
                log_price[i] += r;
                last_ret[i] = r;
            }
        }
        for i in 0..n {
            prices[(t, i)] = quantize(log_price[i].exp());
        }
    }
    Ok(prices)
}

/// Cosine similarity of the columns of `window` (`steps × n`); zero columns
/// get 1 on the diagonal and 0 elsewhere.
pub fn cosine_columns(window: &Matrix) -> Matrix {
    let n = window.cols();
    let norms: Vec<f64> = (0..n).map(|j| window.column(j).norm()).collect();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            return 1.0;
        }
        if norms[i] == 0.0 || norms[j] == 0.0 {
            return 0.0;
        }
        let dot: f64 = (0..window.rows())
            .map(|t| window[(t, i)] * window[(t, j)])
            .sum();
        dot / (norms[i] * norms[j])
    })
}

/// Featurizes a `days × n` price matrix; instance `k` sits at price day `k + 10`.
pub fn portfolio_dataset_from_prices(
    prices: &Matrix,
    risk_aversion: f64,
) -> Result<Dataset<PortfolioInstance>> {
    let (days, n) = prices.shape();
    if n == 0 || days <= 3 * WINDOW {
        return Err(Error::BadDimensions(format!(
            "{days} price days for {n} securities"
        )));
    }
    if prices
        .as_slice()
        .iter()
        .any(|&p| !(p.is_finite() && p > 0.0))
    {
        return Err(Error::InvalidInputs(
            "prices must be positive and finite".into(),
        ));
    }
    // ret[t] = P[t]/P[t-1] − 1 for t ≥ 1
    let ret = Matrix::from_fn(days, n, |t, i| {
        if t == 0 {
            0.0
        } else {
            prices[(t, i)] / prices[(t - 1, i)] - 1.0
        }
    });
    let n_instances = days - 2 * WINDOW;
    let instances = (0..n_instances)
        .map(|k| {
            let d = k + WINDOW;
            let features = Matrix::from_fn(n, PORTFOLIO_FEATURES, |i, f| match f {
                0..=4 => ret[(d - f, i)],
                5 => (0..5).map(|l| ret[(d - l, i)]).sum::<f64>() / 5.0,
                _ => (0..WINDOW).map(|l| ret[(d - l, i)]).sum::<f64>() / WINDOW as f64,
            });
            let returns: Vector = ret.row(d + 1).into();
            let window = Matrix::from_fn(WINDOW, n, |t, i| ret[(d + 1 + t, i)]);
            let mut covariance = cosine_columns(&window);
            covariance.add_diagonal(COVARIANCE_RIDGE);
            PortfolioInstance {
                features,
                returns,
                covariance,
                risk_aversion,
            }
        })
        .collect();
    Ok(Dataset::new(instances))
}

/// `pᵀx − λ·xᵀQx`.
pub fn portfolio_objective(x: &[f64], p: &[f64], q: &Matrix, risk_aversion: f64) -> Result<f64> {
    if x.len() != p.len() || q.shape() != (x.len(), x.len()) {
        return Err(Error::dims("portfolio objective dimensions"));
    }
    let qx = q.matvec(x)?;
    Ok(crate::numerics::dot(p, x) - risk_aversion * crate::numerics::dot(x, &qx))
}

/// `∇f = p − λ(Q + Qᵀ)x`.
pub fn portfolio_gradient(x: &[f64], p: &[f64], q: &Matrix, risk_aversion: f64) -> Result<Vector> {
    let mut g: Vector = p.into();
    g.axpy(-risk_aversion, &q.matvec(x)?);
    g.axpy(-risk_aversion, &q.tr_matvec(x)?);
    Ok(g)
}

/// Hessian of the maximization objective, `−2λQ`.
pub fn portfolio_hessian(q: &Matrix, risk_aversion: f64) -> Matrix {
    q.scaled(-2.0 * risk_aversion)
}

/// Minimization form on the simplex: `H = 2λQ`, `c = −p`, `1ᵀx = 1`, `−x ≤ 0`.
pub fn portfolio_problem(
    p: &[f64],
    q: &Matrix,
    risk_aversion: f64,
) -> Result<QuadraticProgram<f64>> {
    let n = p.len();
    QuadraticProgram::new(
        q.scaled(2.0 * risk_aversion),
        p.iter().map(|&v| -v).collect(),
    )?
    .with_equalities(Matrix::filled(1, n, 1.0), Vector::filled(1, 1.0))?
    .with_nonnegativity()
}

/// Optimal allocation under the true parameters and its objective value.
pub fn portfolio_oracle(inst: &PortfolioInstance) -> Result<(Vector, f64)> {
    let sol = solve_qp(&portfolio_problem(
        &inst.returns,
        &inst.covariance,
        inst.risk_aversion,
    )?)?;
    let value = portfolio_objective(&sol.y, &inst.returns, &inst.covariance, inst.risk_aversion)?;
    Ok((sol.y, value))
}

/// `f(x_oracle) − f(x)` under the true parameters.
pub fn portfolio_regret(x: &[f64], inst: &PortfolioInstance) -> Result<f64> {
    let (_, best) = portfolio_oracle(inst)?;
    Ok(best - portfolio_objective(x, &inst.returns, &inst.covariance, inst.risk_aversion)?)
}

/// Largest violation of `1ᵀx = 1`, `x ≥ 0`.
pub fn simplex_violation(x: &[f64]) -> f64 {
    let sum: f64 = x.iter().sum();
    x.iter().fold((sum - 1.0).abs(), |acc, &v| acc.max(-v))
}

pub fn write_portfolio_csv(prices: &Matrix, path: &Path) -> Result<()> {
    let mut out = String::from("day,security,price\n");
    for t in 0..prices.rows() {
        for i in 0..prices.cols() {
            out.push_str(&format!("{t},{i},{}\n", prices[(t, i)]));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads `day,security,price[,volume]` rows (first column may be named `date`).
/// Days and securities are ordered numerically when every label is an integer,
/// otherwise lexicographically.
pub fn read_portfolio_csv(path: &Path) -> Result<Matrix> {
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
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.as_str()));
    let (Some(c_day), Some(c_sec), Some(c_price)) =
        (col(&["day", "date"]), col(&["security"]), col(&["price"]))
    else {
        return Err(Error::Parse(format!(
            "{}: header must contain day, security, price",
            path.display()
        )));
    };
    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    for (lineno, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |c: usize| {
            fields.get(c).copied().ok_or_else(|| {
                Error::Parse(format!("{}: line {} is short", path.display(), lineno + 2))
            })
        };
        let price: f64 = get(c_price)?.parse().map_err(|_| {
            Error::Parse(format!(
                "{}: bad price on line {}",
                path.display(),
                lineno + 2
            ))
        })?;
        cells.insert((get(c_day)?.to_string(), get(c_sec)?.to_string()), price);
    }
    let days = sorted_labels(cells.keys().map(|(d, _)| d.clone()));
    let secs = sorted_labels(cells.keys().map(|(_, s)| s.clone()));
    let mut prices = Matrix::zeros(days.len(), secs.len());
    for (t, d) in days.iter().enumerate() {
        for (i, s) in secs.iter().enumerate() {
            prices[(t, i)] = *cells.get(&(d.clone(), s.clone())).ok_or_else(|| {
                Error::Parse(format!(
                    "{}: no price for day {d}, security {s}",
                    path.display()
                ))
            })?;
        }
    }
    Ok(prices)
}

pub(crate) fn sorted_labels(labels: impl Iterator<Item = String>) -> Vec<String> {
    let mut v: Vec<String> = labels.collect();
    v.sort();
    v.dedup();
    if v.iter().all(|s| s.parse::<i64>().is_ok()) {
        v.sort_by_key(|s| s.parse::<i64>().unwrap());
    }
    v
}
