//! Optimal split of `N` points between pieces with per-piece constants.
//!
//! A measure made of pieces whose errors scale like `α_i x_i^{-1/d}` for a
//! fraction `x_i` of the points minimizes `F(α; x) = (Σ α_i^p x_i^{-p/d})^{1/p}`
//! on the simplex at `x_i ∝ α_i^{dp/(d+p)}`, with minimum `|α|_{dp/(d+p)}`.

use crate::error::{invalid, Result};

/// Returns the optimal fractions and `F_min`.
pub fn predict_allocation(alphas: &[f64], d: usize, p: f64) -> Result<(Vec<f64>, f64)> {
    if alphas.is_empty() {
        return Err(invalid!("need at least one alpha"));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(invalid!("alphas must be positive, got {a}"));
    }
    if d == 0 || !(p > 0.0 && p.is_finite()) {
        return Err(invalid!("need d >= 1 and p > 0"));
    }
    let df = d as f64;
    let r = df * p / (df + p);
    // scale out the largest alpha for stability
    let top = alphas.iter().copied().fold(0.0, f64::max);
    let w: Vec<f64> = alphas.iter().map(|a| (a / top).powf(r)).collect();
    let total: f64 = w.iter().sum();
    let fractions = w.iter().map(|v| v / total).collect();
    Ok((fractions, top * total.powf(1.0 / r)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn objective(alphas: &[f64], x: &[f64], d: f64, p: f64) -> f64 {
        alphas.iter().zip(x).map(|(a, x)| a.powf(p) * x.powf(-p / d)).sum::<f64>().powf(1.0 / p)
    }

    #[test]
    fn two_blocks_on_the_line() {
        let (x, _) = predict_allocation(&[1.0, 2.0 * 2f64.sqrt()], 1, 2.0).unwrap();
        assert_relative_eq!(x[0], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(x[1], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn planar_example() {
        let (x, f) = predict_allocation(&[1.0, 1.0, 2.0], 2, 2.0).unwrap();
        assert_relative_eq!(x[0], 0.25, epsilon = 1e-12);
        assert_relative_eq!(x[2], 0.5, epsilon = 1e-12);
        assert_relative_eq!(f, 4.0, epsilon = 1e-12);
        assert_relative_eq!(objective(&[1.0, 1.0, 2.0], &x, 2.0, 2.0), f, epsilon = 1e-12);
    }

    #[test]
    fn minimum_beats_perturbations() {
        let alphas = [0.3, 1.7, 0.9];
        let (x, f) = predict_allocation(&alphas, 2, 1.0).unwrap();
        assert_relative_eq!(objective(&alphas, &x, 2.0, 1.0), f, max_relative = 1e-12);
        for k in 0..3 {
            let mut y = x.clone();
            y[k] += 0.01;
            y[(k + 1) % 3] -= 0.01;
            assert!(objective(&alphas, &y, 2.0, 1.0) > f);
        }
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(predict_allocation(&[1.0, 0.0], 1, 2.0).is_err());
        assert!(predict_allocation(&[1.0, -2.0], 1, 2.0).is_err());
    }
}
