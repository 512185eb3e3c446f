use crate::numerics::{DenseVector, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedGradientOptions {
    pub steps: usize,
    pub step_size: f64,
}

impl Default for ProjectedGradientOptions {
    fn default() -> Self {
        Self {
            steps: 500,
            step_size: 0.05,
        }
    }
}

/// Projected gradient ascent; returns the best iterate seen (including the projected start).
pub fn projected_gradient_maximize<T, F, G, P>(
    mut objective: F,
    mut gradient: G,
    mut project: P,
    y0: &[T],
    opts: &ProjectedGradientOptions,
) -> DenseVector<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
    G: FnMut(&[T]) -> DenseVector<T>,
    P: FnMut(&[T]) -> DenseVector<T>,
{
    let eta = T::lit(opts.step_size);
    let mut y = project(y0);
    let mut best = y.clone();
    let mut best_val = objective(&y);
    for _ in 0..opts.steps {
        let g = gradient(&y);
        let mut next = y.clone();
        next.axpy(eta, &g);
        y = project(&next);
        let val = objective(&y);
        if val > best_val {
            best_val = val;
            best = y.clone();
        }
    }
    best
}

/// Frank-Wolfe ascent with step `2/(t+2)`; `linear_max(g)` returns a feasible
/// maximizer of `gᵀy`. Returns the average of the last `⌈steps/2⌉` iterates,
/// which damps the vertex-to-vertex oscillation of the plain iterate.
pub fn frank_wolfe_maximize<T, G, L>(
    mut gradient: G,
    mut linear_max: L,
    y0: &[T],
    steps: usize,
) -> DenseVector<T>
where
    T: Scalar,
    G: FnMut(&[T]) -> DenseVector<T>,
    L: FnMut(&[T]) -> DenseVector<T>,
{
    let mut y: DenseVector<T> = y0.into();
    if steps == 0 {
        return y;
    }
    let tail_start = steps / 2;
    let mut avg = DenseVector::zeros(y.len());
    for t in 0..steps {
        let g = gradient(&y);
        let s = linear_max(&g);
        let gamma = T::lit(2.0 / (t as f64 + 2.0));
        for (yi, &si) in y.iter_mut().zip(s.iter()) {
            *yi = (T::one() - gamma) * *yi + gamma * si;
        }
        if t >= tail_start {
            avg.axpy(T::one(), &y);
        }
    }
    avg.scaled(T::one() / T::from_usize(steps - tail_start).unwrap())
}

pub const FRANK_WOLFE_DEFAULT_STEPS: usize = 200;
