use rand_chacha::ChaCha8Rng;

use super::DecisionTask;
use crate::diff::{squared_error, CosineCache, EmbeddingModel, MlpCache, MlpModel, Parameterized};
use crate::domains::{
    box_budget_constraints, box_budget_violation, linear_coefficients, movierec_objective,
    movierec_oracle, movierec_supergradient, portfolio_gradient, portfolio_objective,
    portfolio_oracle, portfolio_problem, round_top_k, simplex_violation, top_selections,
    uniform_start, MovieRecInstance, PortfolioInstance, COVARIANCE_RIDGE, PORTFOLIO_FEATURES,
};
use crate::error::{Error, Result};
use crate::optlayer::QuadraticProgram;
use crate::surrogate::ReparamMode;
use crate::{Matrix, Vector};

/// Per-security return regressor plus a learned cosine covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioModel {
    pub returns: MlpModel<f64>,
    pub covariance: EmbeddingModel<f64>,
}

impl Parameterized<f64> for PortfolioModel {
    fn param_slices(&self) -> Vec<&[f64]> {
        let mut v = self.returns.param_slices();
        v.extend(self.covariance.param_slices());
        v
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.returns.param_slices_mut();
        v.extend(self.covariance.param_slices_mut());
        v
    }

    fn param_shapes(&self) -> Vec<(String, usize, usize)> {
        let tag = |prefix: &str, s: Vec<(String, usize, usize)>| {
            s.into_iter()
                .map(|(n, r, c)| (format!("{prefix}.{n}"), r, c))
                .collect::<Vec<_>>()
        };
        let mut v = tag("returns", self.returns.param_shapes());
        v.extend(tag("covariance", self.covariance.param_shapes()));
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPrediction {
    pub p: Vector,
    /// Includes the `1e-6·I` ridge.
    pub q: Matrix,
}

#[derive(Debug, Clone)]
pub struct PortfolioTask {
    pub n: usize,
    pub risk_aversion: f64,
    pub hidden: Vec<usize>,
    pub embed_dim: usize,
}

impl DecisionTask for PortfolioTask {
    type Instance = PortfolioInstance;
    type Model = PortfolioModel;
    type Prediction = PortfolioPrediction;
    type Cache = (MlpCache<f64>, CosineCache<f64>);
    type Frozen = ();

    fn dim(&self) -> usize {
        self.n
    }

    fn init_model(&self, rng: &mut ChaCha8Rng) -> Result<PortfolioModel> {
        let mut dims = vec![PORTFOLIO_FEATURES];
        dims.extend(&self.hidden);
        dims.push(1);
        Ok(PortfolioModel {
            returns: MlpModel::new(&dims, rng)?,
            covariance: EmbeddingModel::new(self.n, self.embed_dim, rng)?,
        })
    }

    fn predict(
        &self,
        model: &PortfolioModel,
        inst: &PortfolioInstance,
    ) -> Result<(PortfolioPrediction, Self::Cache)> {
        if inst.n() != self.n {
            return Err(Error::dims(format!(
                "instance has {} securities, task {}",
                inst.n(),
                self.n
            )));
        }
        let (out, mc) = model.returns.forward_batch(&inst.features)?;
        let (mut q, cc) = model.covariance.cosine_matrix()?;
        q.add_diagonal(COVARIANCE_RIDGE);
        Ok((
            PortfolioPrediction {
                p: out.column(0),
                q,
            },
            (mc, cc),
        ))
    }

    fn backward(
        &self,
        model: &PortfolioModel,
        cache: &Self::Cache,
        d: &PortfolioPrediction,
    ) -> Result<PortfolioModel> {
        let d_out = Matrix::from_vec(d.p.len(), 1, d.p.as_slice().to_vec())?;
        let (returns, _) = model.returns.backward_batch(&cache.0, &d_out)?;
        let covariance = model.covariance.cosine_backward(&cache.1, &d.q)?;
        Ok(PortfolioModel {
            returns,
            covariance,
        })
    }

    fn prediction_loss(
        &self,
        pred: &PortfolioPrediction,
        inst: &PortfolioInstance,
    ) -> Result<(f64, PortfolioPrediction)> {
        let (lp, gp) = squared_error(&pred.p, &inst.returns)?;
        let (lq, gq) = squared_error(pred.q.as_slice(), inst.covariance.as_slice())?;
        Ok((
            lp + lq,
            PortfolioPrediction {
                p: gp,
                q: Matrix::from_vec(self.n, self.n, gq.into_vec())?,
            },
        ))
    }

    fn base_problem(
        &self,
        pred: &PortfolioPrediction,
        _inst: &PortfolioInstance,
        _x: &[f64],
    ) -> Result<(QuadraticProgram<f64>, ())> {
        Ok((portfolio_problem(&pred.p, &pred.q, self.risk_aversion)?, ()))
    }

    fn pred_grad(
        &self,
        _pred: &PortfolioPrediction,
        _f: &(),
        d_h: &Matrix,
        d_c: &[f64],
    ) -> Result<PortfolioPrediction> {
        Ok(PortfolioPrediction {
            p: d_c.iter().map(|&v| -v).collect(),
            q: d_h.scaled(2.0 * self.risk_aversion),
        })
    }

    fn initial_point(&self, _inst: &PortfolioInstance) -> Vector {
        Vector::filled(self.n, 1.0 / self.n as f64)
    }

    fn reparam_mode(&self) -> ReparamMode {
        ReparamMode::ColumnSimplex
    }

    fn objective(&self, x: &[f64], inst: &PortfolioInstance) -> Result<f64> {
        portfolio_objective(x, &inst.returns, &inst.covariance, inst.risk_aversion)
    }

    fn objective_grad(&self, x: &[f64], inst: &PortfolioInstance) -> Result<Vector> {
        portfolio_gradient(x, &inst.returns, &inst.covariance, inst.risk_aversion)
    }

    fn feasibility_violation(&self, x: &[f64], _inst: &PortfolioInstance) -> f64 {
        simplex_violation(x)
    }

    fn oracle_value(&self, inst: &PortfolioInstance) -> Result<f64> {
        Ok(portfolio_oracle(inst)?.1)
    }
}

/// Per-user preference regressor from held-out ratings; predicts `θ̂` (movies × users).
#[derive(Debug, Clone)]
pub struct MovieRecTask {
    pub n: usize,
    pub n_features: usize,
    pub budget: usize,
    pub picks: usize,
    /// Weight of `−γ‖x‖²` in the relaxed objective.
    pub gamma: f64,
    pub hidden: Vec<usize>,
}

impl DecisionTask for MovieRecTask {
    type Instance = MovieRecInstance;
    type Model = MlpModel<f64>;
    type Prediction = Matrix;
    type Cache = MlpCache<f64>;
    type Frozen = Vec<Vec<usize>>;

    fn dim(&self) -> usize {
        self.n
    }

    fn init_model(&self, rng: &mut ChaCha8Rng) -> Result<MlpModel<f64>> {
        let mut dims = vec![self.n_features];
        dims.extend(&self.hidden);
        dims.push(self.n);
        MlpModel::new(&dims, rng)
    }

    fn predict(
        &self,
        model: &MlpModel<f64>,
        inst: &MovieRecInstance,
    ) -> Result<(Matrix, MlpCache<f64>)> {
        let (out, cache) = model.forward_batch(&inst.features)?;
        Ok((out.transpose(), cache))
    }

    fn backward(
        &self,
        model: &MlpModel<f64>,
        cache: &MlpCache<f64>,
        d: &Matrix,
    ) -> Result<MlpModel<f64>> {
        Ok(model.backward_batch(cache, &d.transpose())?.0)
    }

    fn prediction_loss(&self, pred: &Matrix, inst: &MovieRecInstance) -> Result<(f64, Matrix)> {
        let (l, g) = squared_error(pred.as_slice(), inst.preferences.as_slice())?;
        Ok((l, Matrix::from_vec(pred.rows(), pred.cols(), g.into_vec())?))
    }

    fn base_problem(
        &self,
        pred: &Matrix,
        inst: &MovieRecInstance,
        x_ref: &[f64],
    ) -> Result<(QuadraticProgram<f64>, Vec<Vec<usize>>)> {
        let sel = top_selections(x_ref, pred, inst.picks)?;
        let c = linear_coefficients(pred, &sel).scaled(-1.0);
        let (g, h) = box_budget_constraints(self.n, inst.budget as f64);
        let qp =
            QuadraticProgram::new(Matrix::zeros(self.n, self.n), c)?.with_inequalities(g, h)?;
        Ok((qp, sel))
    }

    fn pred_grad(
        &self,
        pred: &Matrix,
        sel: &Vec<Vec<usize>>,
        _d_h: &Matrix,
        d_c: &[f64],
    ) -> Result<Matrix> {
        let mut d = Matrix::zeros(pred.rows(), pred.cols());
        for (j, s) in sel.iter().enumerate() {
            for &i in s {
                d[(i, j)] = -d_c[i];
            }
        }
        Ok(d)
    }

    fn initial_point(&self, inst: &MovieRecInstance) -> Vector {
        uniform_start(self.n, inst.budget)
    }

    fn max_linearizations(&self) -> usize {
        crate::domains::MAX_LINEARIZATIONS
    }

    /// `−γ‖y‖²` in whichever space is solved: `x` for the full problem, `y` for the surrogate.
    fn ridge(&self) -> f64 {
        2.0 * self.gamma
    }

    fn reparam_mode(&self) -> ReparamMode {
        ReparamMode::Nonneg
    }

    fn nonneg_y(&self) -> bool {
        true
    }

    fn objective(&self, x: &[f64], inst: &MovieRecInstance) -> Result<f64> {
        movierec_objective(x, &inst.preferences, inst.picks)
    }

    fn objective_grad(&self, x: &[f64], inst: &MovieRecInstance) -> Result<Vector> {
        movierec_supergradient(x, &inst.preferences, inst.picks)
    }

    fn finalize(&self, x: Vector, inst: &MovieRecInstance) -> Vector {
        round_top_k(&x, inst.budget)
    }

    fn feasibility_violation(&self, x: &[f64], inst: &MovieRecInstance) -> f64 {
        box_budget_violation(x, inst.budget)
    }

    fn oracle_value(&self, inst: &MovieRecInstance) -> Result<f64> {
        Ok(movierec_oracle(inst, self.gamma)?.1)
    }
}
