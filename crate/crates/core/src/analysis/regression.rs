use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub r_squared: f64,
}

/// Weighted least-squares line `y = slope·x + intercept`.
///
/// With `y_err` the weights are `1/σ²` and parameter errors come from the
/// stated uncertainties; without, errors are scaled by the residual variance.
pub fn linear_fit(x: &[f64], y: &[f64], y_err: Option<&[f64]>) -> Result<LinearFit> {
    let n = x.len();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: y.len() });
    }
    if n < 3 {
        return Err(Error::param(format!("linear fit needs at least 3 points, got {n}")));
    }
    let w: Vec<f64> = match y_err {
        Some(e) => {
            if e.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: e.len() });
            }
            if e.iter().any(|&s| !(s > 0.0)) {
                return Err(Error::param("y uncertainties must be positive"));
            }
            e.iter().map(|s| 1.0 / (s * s)).collect()
        }
        None => vec![1.0; n],
    };
    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = (0..n).map(|i| w[i] * (x[i] - xm).powi(2)).sum();
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - xm) * (y[i] - ym)).sum();
    let syy: f64 = (0..n).map(|i| w[i] * (y[i] - ym).powi(2)).sum();
    if !(sxx > 1e-300) || sxx <= 1e-24 * (xm * xm * sw).max(1e-300) {
        return Err(Error::DegenerateRegression);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..n).map(|i| w[i] * (y[i] - slope * x[i] - intercept).powi(2)).sum();
    let scale = if y_err.is_some() { 1.0 } else { rss / (n - 2) as f64 };
    let slope_err = (scale / sxx).sqrt();
    let intercept_err = (scale * (1.0 / sw + xm * xm / sxx)).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, slope_err, intercept_err, r_squared })
}
