//! Log-linear least-squares scaling fits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// y = c * base^x; parameter is the base.
    Exponential,
    /// y = c * x^a; parameter is a.
    Power,
    /// y = c * x^-a with x = eps; parameter is a.
    InverseEpsilon,
}

impl FromStr for FitModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" | "exp" => Ok(FitModel::Exponential),
            "power" => Ok(FitModel::Power),
            "inverse_epsilon" | "inverse-epsilon" | "eps" => Ok(FitModel::InverseEpsilon),
            other => Err(Error::input(format!("unknown fit model `{other}`"))),
        }
    }
}

impl fmt::Display for FitModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitModel::Exponential => "exponential",
            FitModel::Power => "power",
            FitModel::InverseEpsilon => "inverse_epsilon",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: FitModel,
    pub parameter: f64,
    pub prefactor: f64,
    pub points_used: usize,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Fit `model` to the `tail` points with the largest x (all points when
/// `tail` is None). At least three points are required.
pub fn fit_scaling(points: &[(f64, f64)], model: FitModel, tail: Option<usize>) -> Result<FitResult> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let take = tail.unwrap_or(pts.len()).min(pts.len());
    let pts = &pts[pts.len() - take..];
    if pts.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 points, got {}", pts.len())));
    }
    let mut xs = Vec::with_capacity(pts.len());
    let mut ys = Vec::with_capacity(pts.len());
    for &(x, y) in pts {
        if !(y > 0.0) || !y.is_finite() || !x.is_finite() {
            return Err(Error::Fit(format!("point ({x}, {y}) is not positive and finite")));
        }
        let u = match model {
            FitModel::Exponential => x,
            FitModel::Power | FitModel::InverseEpsilon if x <= 0.0 => {
                return Err(Error::Fit(format!("abscissa {x} must be positive for a power fit")));
            }
            FitModel::Power => x.ln(),
            FitModel::InverseEpsilon => (1.0 / x).ln(),
        };
        xs.push(u);
        ys.push(y.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let parameter = match model {
        FitModel::Exponential => slope.exp(),
        FitModel::Power | FitModel::InverseEpsilon => slope,
    };
    if !parameter.is_finite() {
        return Err(Error::Fit("non-finite fitted parameter".into()));
    }
    Ok(FitResult {
        model,
        parameter,
        prefactor: intercept.exp(),
        points_used: pts.len(),
        residual: (rss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_exponential() {
        let pts: Vec<_> = (6..=16).map(|n| (n as f64, 2f64.powi(n))).collect();
        let r = fit_scaling(&pts, FitModel::Exponential, Some(5)).unwrap();
        assert!((r.parameter - 2.0).abs() < 1e-9);
        assert_eq!(r.points_used, 5);
    }

    #[test]
    fn exact_power() {
        let pts: Vec<_> = (4..=12).map(|n| (n as f64, (n as f64).powi(3))).collect();
        let r = fit_scaling(&pts, FitModel::Power, None).unwrap();
        assert!((r.parameter - 3.0).abs() < 1e-9);
    }

    #[test]
    fn exact_inverse_epsilon() {
        let pts: Vec<_> = [0.1, 0.2, 0.3, 0.5].iter().map(|&e: &f64| (e, 7.0 * e.powi(-2))).collect();
        let r = fit_scaling(&pts, FitModel::InverseEpsilon, None).unwrap();
        assert!((r.parameter - 2.0).abs() < 1e-9);
        assert!((r.prefactor - 7.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(fit_scaling(&[(1.0, 1.0), (2.0, 2.0)], FitModel::Exponential, None), Err(Error::Fit(_))));
        let pts = [(1.0, 1.0), (2.0, 0.0), (3.0, 2.0)];
        assert!(matches!(fit_scaling(&pts, FitModel::Exponential, None), Err(Error::Fit(_))));
    }
}
