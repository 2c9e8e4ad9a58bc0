//! Weighted straight-line regression.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fit of `y = intercept + slope·x` with known per-point standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    pub slope: f64,
    pub intercept: f64,
    /// Covariance of `(slope, intercept)` from the inverse normal matrix.
    pub covariance: [[f64; 2]; 2],
    /// `y - prediction` per point.
    pub residuals: Vec<f64>,
    /// `1/σ²` per point.
    pub weights: Vec<f64>,
    pub chi2: f64,
    pub dof: usize,
}

impl RegressionResult {
    pub fn slope_se(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn intercept_se(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Standard error of the prediction at `x`.
    pub fn predict_se(&self, x: f64) -> f64 {
        let c = &self.covariance;
        (c[0][0] * x * x + 2.0 * c[0][1] * x + c[1][1]).max(0.0).sqrt()
    }

    /// Weighted mean of the residuals.
    pub fn weighted_residual_mean(&self) -> f64 {
        let sw: f64 = self.weights.iter().sum();
        self.residuals.iter().zip(&self.weights).map(|(r, w)| r * w).sum::<f64>() / sw
    }
}

/// Minimizes `Σ [(y - a - b x)/σ]²`.
///
/// The covariance is not rescaled by the reduced χ²: the σ are taken as known.
pub fn weighted_linreg(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<RegressionResult> {
    if x.len() != y.len() || x.len() != sigma.len() {
        return Err(Error::domain("x, y and sigma must have equal length"));
    }
    if x.len() < 2 {
        return Err(Error::domain("regression needs at least 2 points"));
    }
    if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::domain("all standard errors must be finite and > 0"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::domain("non-finite regression input"));
    }
    let weights: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = weights.iter().sum();
    // centre on the weighted mean of x for conditioning
    let xm = x.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(&weights).map(|(y, w)| y * w).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for ((&xi, &yi), &w) in x.iter().zip(y).zip(&weights) {
        sxx += w * (xi - xm) * (xi - xm);
        sxy += w * (xi - xm) * (yi - ym);
    }
    let spread = x.iter().fold(0.0f64, |m, &xi| m.max((xi - xm).abs()));
    if !(sxx > 0.0) || spread <= 1e-12 * xm.abs().max(1e-300) {
        return Err(Error::domain("degenerate design: need at least 2 distinct x"));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(&xi, &yi)| yi - intercept - slope * xi).collect();
    let chi2 = residuals.iter().zip(&weights).map(|(r, w)| r * r * w).sum();
    let var_slope = 1.0 / sxx;
    let cov = -xm / sxx;
    let var_intercept = 1.0 / sw + xm * xm / sxx;
    Ok(RegressionResult {
        slope,
        intercept,
        covariance: [[var_slope, cov], [cov, var_intercept]],
        residuals,
        weights,
        chi2,
        dof: x.len() - 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    #[test]
    fn exact_line() {
        let x = [0.5, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|x| 2.0 * x + 1.0).collect();
        let r = weighted_linreg(&x, &y, &[0.1, 1.0, 0.3, 2.0]).unwrap();
        assert!((r.slope - 2.0).abs() < 1e-12);
        assert!((r.intercept - 1.0).abs() < 1e-12);
        assert!(r.residuals.iter().all(|e| e.abs() < 1e-12));
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn equal_weights_match_ols() {
        let mut rng = rng_from_seed(11);
        for _ in 0..20 {
            let x: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..5.0)).collect();
            let y: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
            // textbook sums formula
            let n = 10.0;
            let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
            let sxx: f64 = x.iter().map(|v| v * v).sum();
            let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
            let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
            let a = (sy - b * sx) / n;
            let r = weighted_linreg(&x, &y, &[0.7; 10]).unwrap();
            assert!((r.slope - b).abs() < 1e-10 * b.abs().max(1.0));
            assert!((r.intercept - a).abs() < 1e-10 * a.abs().max(1.0));
            // OLS covariance with σ known: σ²(XᵀX)⁻¹
            let det = n * sxx - sx * sx;
            assert!((r.covariance[0][0] - 0.49 * n / det).abs() < 1e-10);
            assert!((r.covariance[1][1] - 0.49 * sxx / det).abs() < 1e-10);
            assert!((r.covariance[0][1] + 0.49 * sx / det).abs() < 1e-10);
            assert!(r.weighted_residual_mean().abs() < 1e-12);
        }
    }

    #[test]
    fn heavy_point_pins_the_fit() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0.3, 1.7, 1.9, 3.4];
        let r = weighted_linreg(&x, &y, &[1.0, 1.0, 1e-7, 1.0]).unwrap();
        assert!((r.predict(2.0) - 1.9).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(weighted_linreg(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], &[1.0; 3]).is_err());
        assert!(weighted_linreg(&[1.0], &[1.0], &[1.0]).is_err());
        assert!(weighted_linreg(&[1.0, 2.0], &[1.0, 2.0], &[1.0, 0.0]).is_err());
    }
}
