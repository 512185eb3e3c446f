use super::Parameterized;
use crate::error::{Error, Result};
use crate::numerics::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// First and second moment estimates for one parameter container.
#[derive(Debug, Clone)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
    t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<P: Parameterized<T> + ?Sized>(params: &P, config: AdamConfig) -> Self {
        let shapes: Vec<usize> = params.param_slices().iter().map(|s| s.len()).collect();
        Self {
            config,
            m: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![T::zero(); n]).collect(),
            t: 0,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn step<P, G>(&mut self, params: &mut P, grads: &G) -> Result<()>
    where
        P: Parameterized<T> + ?Sized,
        G: Parameterized<T> + ?Sized,
    {
        adam_step(params, grads, self)
    }
}

/// One bias-corrected Adam update, `params -= lr · m̂ / (√v̂ + ε)`.
pub fn adam_step<T, P, G>(params: &mut P, grads: &G, state: &mut AdamState<T>) -> Result<()>
where
    T: Scalar,
    P: Parameterized<T> + ?Sized,
    G: Parameterized<T> + ?Sized,
{
    let g = grads.param_slices();
    let p = params.param_slices_mut();
    let matches = g.len() == p.len()
        && g.len() == state.m.len()
        && g.iter()
            .zip(&p)
            .zip(&state.m)
            .all(|((a, b), c)| a.len() == b.len() && a.len() == c.len());
    if !matches {
        return Err(Error::dims(
            "adam: parameter, gradient and state shapes differ",
        ));
    }
    if g.iter().any(|s| s.iter().any(|v| !v.is_finite())) {
        return Err(Error::NonFinite("adam gradient".into()));
    }
    let c = state.config;
    let (b1, b2) = (T::lit(c.beta1), T::lit(c.beta2));
    let t = state.t + 1;
    let bc1 = T::one() - b1.powi(t as i32);
    let bc2 = T::one() - b2.powi(t as i32);
    let (lr, eps) = (T::lit(c.lr), T::lit(c.eps));
    for (k, (ps, gs)) in p.into_iter().zip(g).enumerate() {
        let (ms, vs) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..ps.len() {
            ms[i] = b1 * ms[i] + (T::one() - b1) * gs[i];
            vs[i] = b2 * vs[i] + (T::one() - b2) * gs[i] * gs[i];
            let m_hat = ms[i] / bc1;
            let v_hat = vs[i] / bc2;
            ps[i] = ps[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    state.t = t;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::MlpModel;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        let mut m = MlpModel::<f64>::zeros(&[2, 1]).unwrap();
        let mut g = m.zeroed();
        g.assign_flat(&[0.5, -3.0, 2.0]).unwrap();
        let mut st = AdamState::new(&m, AdamConfig::with_lr(0.1));
        st.step(&mut m, &g).unwrap();
        let p = m.flatten();
        let expected = [-0.1, 0.1, -0.1];
        for (a, b) in p.iter().zip(expected) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn minimizes_quadratic() {
        let mut m = MlpModel::<f64>::zeros(&[1, 1]).unwrap();
        m.assign_flat(&[3.0, -2.0]).unwrap();
        let mut st = AdamState::new(&m, AdamConfig::with_lr(0.05));
        for _ in 0..2000 {
            let mut g = m.zeroed();
            let p = m.flatten();
            g.assign_flat(&[2.0 * (p[0] - 1.0), 2.0 * p[1]]).unwrap();
            st.step(&mut m, &g).unwrap();
        }
        let p = m.flatten();
        assert!((p[0] - 1.0).abs() < 1e-3 && p[1].abs() < 1e-3);
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let mut m = MlpModel::<f64>::zeros(&[2, 1]).unwrap();
        let g = MlpModel::<f64>::zeros(&[3, 1]).unwrap();
        let mut st = AdamState::new(&m, AdamConfig::default());
        assert!(st.step(&mut m, &g).is_err());
    }
}
