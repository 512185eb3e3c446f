use super::{DenseVector, Scalar};

/// Euclidean projection of `v` onto `{w ≥ 0, Σw = total}` by the
/// sort-and-threshold rule.
pub fn project_simplex<T: Scalar>(v: &[T], total: T) -> DenseVector<T> {
    debug_assert!(total > T::zero(), "simplex total must be positive");
    if v.is_empty() {
        return DenseVector::zeros(0);
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));

    let mut cumsum = T::zero();
    let mut tau = T::zero();
    for (j, &u) in sorted.iter().enumerate() {
        cumsum = cumsum + u;
        let candidate = (cumsum - total) / T::from_usize(j + 1).unwrap();
        if u - candidate > T::zero() {
            tau = candidate;
        }
    }
    let mut w: DenseVector<T> = v.iter().map(|&x| (x - tau).max(T::zero())).collect();

    // Absorb rounding so the sum constraint holds to working precision.
    let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > T::zero()).collect();
    if !support.is_empty() {
        let drift = (w.sum() - total) / T::from_usize(support.len()).unwrap();
        for &i in &support {
            w[i] = (w[i] - drift).max(T::zero());
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(project_simplex(&[0.3, 0.7], 1.0).as_slice(), &[0.3, 0.7]);
        assert_eq!(project_simplex(&[2.0, 0.0], 1.0).as_slice(), &[1.0, 0.0]);
        assert_eq!(project_simplex(&[0.0, 0.0], 1.0).as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn matches_brute_force_on_small_case() {
        // Brute force over a fine grid of the 2-simplex scaled to total 2.
        let v = [1.7, -0.4, 0.9];
        let total = 2.0;
        let w = project_simplex(&v, total);
        let dist = |x: &[f64]| {
            x.iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let steps = 400;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let a = total * i as f64 / steps as f64;
                let b = total * j as f64 / steps as f64;
                best = best.min(dist(&[a, b, total - a - b]));
            }
        }
        assert!(dist(&w) <= best + 1e-12);
    }

    proptest! {
        #[test]
        fn feasible_and_idempotent(v in proptest::collection::vec(-5.0f64..5.0, 1..20), total in 0.1f64..10.0) {
            let w = project_simplex(&v, total);
            prop_assert!((w.sum() - total).abs() <= 1e-10);
            prop_assert!(w.iter().all(|&x| x >= -1e-12));
            let again = project_simplex(&w, total);
            for (a, b) in w.iter().zip(again.iter()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
