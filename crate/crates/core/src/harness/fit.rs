//! Log-log regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One regression point: abscissa, value and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    pub x: f64,
    pub y: f64,
    pub se: f64,
}

/// Ordinary least squares on `(log x, log y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: Vec<FitPoint>,
    pub points_used: usize,
}

/// Fits `log y = intercept + slope · log x` over `(x, y, se)` triples.
pub fn loglog_fit(points: &[(f64, f64, f64)]) -> Result<RateFit> {
    if points.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 points, got {}", points.len())));
    }
    if points.iter().any(|p| !(p.0 > 0.0 && p.1 > 0.0) || !p.0.is_finite() || !p.1.is_finite()) {
        return Err(Error::DegenerateFit("log-log fit needs strictly positive finite points".into()));
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: points.iter().map(|&(x, y, se)| FitPoint { x, y, se }).collect(),
        points_used: points.len(),
    })
}
