//! Central finite differences, the independent oracle the backpropagation
//! gradients are checked against.

/// Central-difference gradient of `f` at `w`, one coordinate at a time.
pub fn finite_difference_gradient<F>(f: &F, w: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = vec![0.0; w.len()];
    let mut probe = w.to_vec();
    for i in 0..w.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = f(&probe);
        probe[i] = orig - step;
        let minus = f(&probe);
        probe[i] = orig;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Max relative disagreement between two gradients; the denominator floors at
/// `scale` so near-zero entries compare absolutely.
pub fn max_relative_error(a: &[f64], b: &[f64], scale: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(scale))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn quadratic() {
        let f = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>();
        let g = finite_difference_gradient(&f, &[1.0, 2.0], 1e-6);
        assert_abs_diff_eq!(g[0], 2.0, epsilon = 1e-8);
        assert_abs_diff_eq!(g[1], 4.0, epsilon = 1e-8);
    }

    #[test]
    fn constant_and_linear() {
        let c = |_: &[f64]| 42.0;
        assert_eq!(finite_difference_gradient(&c, &[1.0, -3.0], 1e-5), vec![0.0, 0.0]);

        let lin = |w: &[f64]| 3.0 * w[0] - 0.5 * w[1];
        let g = finite_difference_gradient(&lin, &[0.3, 0.7], 1e-5);
        assert_abs_diff_eq!(g[0], 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g[1], -0.5, epsilon = 1e-9);
    }
}
