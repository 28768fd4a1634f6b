//! Least-squares scaling laws for mixing-time data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Minimum number of points accepted by [`fit_scaling`].
pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingModel {
    /// `value = a n ln n`.
    PolyNlogn,
    /// `value = b e^{r n}`, fitted as `ln value = ln b + r n`.
    Exponential,
}

impl std::fmt::Display for ScalingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScalingModel::PolyNlogn => "poly_nlogn",
            ScalingModel::Exponential => "exponential",
        })
    }
}

impl std::str::FromStr for ScalingModel {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "poly_nlogn" | "poly" => Ok(ScalingModel::PolyNlogn),
            "exponential" | "exp" => Ok(ScalingModel::Exponential),
            other => Err(ScalingError::UnknownModel(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalingError {
    #[error("need at least {MIN_FIT_POINTS} points, got {0}")]
    TooFewPoints(usize),
    #[error("n must be strictly increasing (n = {0} follows n = {1})")]
    NotIncreasing(f64, f64),
    #[error("exponential model needs positive values, got {0} at n = {1}")]
    NonPositive(f64, f64),
    #[error("non-finite input at n = {0}")]
    NonFinite(f64),
    #[error("unknown scaling model `{0}` (expected poly_nlogn or exponential)")]
    UnknownModel(String),
}

/// Result of a scaling fit.
///
/// For [`ScalingModel::PolyNlogn`], `coefficient` is `a` and `exponent_or_rate`
/// is the log-log slope of value against `n`; residuals are `value - a n ln n`.
/// For [`ScalingModel::Exponential`], `coefficient` is `b`, `exponent_or_rate`
/// is `r`, and residuals are in log space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coefficient: f64,
    pub exponent_or_rate: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

pub fn fit_scaling(points: &[(f64, f64)], model: ScalingModel) -> Result<ScalingFit, ScalingError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(ScalingError::TooFewPoints(points.len()));
    }
    for &(n, v) in points {
        if !n.is_finite() || !v.is_finite() || n <= 0.0 {
            return Err(ScalingError::NonFinite(n));
        }
    }
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(ScalingError::NotIncreasing(w[1].0, w[0].0));
        }
    }
    let ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let fit = match model {
        ScalingModel::PolyNlogn => {
            let xs: Vec<f64> = ns.iter().map(|n| n * n.ln()).collect();
            let a = dot(&xs, &vs) / dot(&xs, &xs);
            let residuals: Vec<f64> = xs.iter().zip(&vs).map(|(x, v)| v - a * x).collect();
            let slope = if vs.iter().all(|&v| v > 0.0) {
                let ln_n: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
                let ln_v: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
                ols(&ln_n, &ln_v).1
            } else {
                f64::NAN
            };
            ScalingFit {
                model,
                coefficient: a,
                exponent_or_rate: slope,
                r_squared: r_squared(&vs, &residuals),
                residuals,
                points: points.to_vec(),
            }
        }
        ScalingModel::Exponential => {
            if let Some(&(n, v)) = points.iter().find(|p| p.1 <= 0.0) {
                return Err(ScalingError::NonPositive(v, n));
            }
            let ln_v: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
            let (intercept, rate) = ols(&ns, &ln_v);
            let residuals: Vec<f64> = ns.iter().zip(&ln_v).map(|(n, y)| y - intercept - rate * n).collect();
            ScalingFit {
                model,
                coefficient: intercept.exp(),
                exponent_or_rate: rate,
                r_squared: r_squared(&ln_v, &residuals),
                residuals,
                points: points.to_vec(),
            }
        }
    };
    Ok(fit)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordinary least squares `y = c0 + c1 x`.
fn ols(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let c1 = sxy / sxx;
    (my - c1 * mx, c1)
}

fn r_squared(y: &[f64], residuals: &[f64]) -> f64 {
    let m = y.len() as f64;
    let my = y.iter().sum::<f64>() / m;
    let ss_tot: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    if ss_tot == 0.0 {
        return if ss_res == 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_n_log_n() {
        let pts: Vec<_> = [20.0, 40.0, 80.0, 160.0, 320.0].iter().map(|&n: &f64| (n, 3.0 * n * n.ln())).collect();
        let fit = fit_scaling(&pts, ScalingModel::PolyNlogn).unwrap();
        assert_relative_eq!(fit.coefficient, 3.0, max_relative = 1e-14);
        assert!(fit.r_squared > 0.999);
        assert!(fit.residuals.iter().all(|r| r.abs() < 1e-9));
        assert!(fit.exponent_or_rate > 1.0 && fit.exponent_or_rate < 1.4);
    }

    #[test]
    fn recovers_exponential() {
        let pts: Vec<_> = (1..=6).map(|i| (20.0 * i as f64, 2.0 * (0.1 * 20.0 * i as f64).exp())).collect();
        let fit = fit_scaling(&pts, ScalingModel::Exponential).unwrap();
        assert_relative_eq!(fit.exponent_or_rate, 0.1, max_relative = 1e-12);
        assert_relative_eq!(fit.coefficient, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let ok = [(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 4.0)];
        assert_eq!(fit_scaling(&ok[..3], ScalingModel::PolyNlogn), Err(ScalingError::TooFewPoints(3)));
        let unordered = [(1.0, 1.0), (3.0, 2.0), (3.0, 3.0), (4.0, 4.0)];
        assert!(matches!(fit_scaling(&unordered, ScalingModel::PolyNlogn), Err(ScalingError::NotIncreasing(..))));
        let neg = [(1.0, 1.0), (2.0, -2.0), (3.0, 3.0), (4.0, 4.0)];
        assert!(matches!(fit_scaling(&neg, ScalingModel::Exponential), Err(ScalingError::NonPositive(..))));
        assert!(fit_scaling(&neg, ScalingModel::PolyNlogn).is_ok());
        assert_eq!("exp".parse::<ScalingModel>().unwrap(), ScalingModel::Exponential);
        assert!("cubic".parse::<ScalingModel>().is_err());
    }

    #[test]
    fn r_squared_stays_in_unit_interval() {
        // data far from a n ln n through the origin
        let pts = [(10.0, 100.0), (20.0, 90.0), (30.0, 80.0), (40.0, 70.0)];
        let fit = fit_scaling(&pts, ScalingModel::PolyNlogn).unwrap();
        assert!((0.0..=1.0).contains(&fit.r_squared));
    }
}
