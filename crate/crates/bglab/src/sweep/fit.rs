//! Power-law decay fits of norms along a scaling sequence.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Slope of log(norm) against log(N): the empirical decay exponent.
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence half-width of the slope, from the fit residuals.
    pub half_width: f64,
    pub residual_rms: f64,
    pub points_used: usize,
    pub points_excluded: usize,
}

/// Two-sided 95% Student-t quantile for small degrees of freedom.
fn t975(df: usize) -> f64 {
    const TABLE: [f64; 10] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228,
    ];
    if df == 0 {
        f64::INFINITY
    } else if df <= TABLE.len() {
        TABLE[df - 1]
    } else if df <= 30 {
        2.09
    } else {
        1.96
    }
}

/// Least-squares fit of `log(norm)` against `log(N)`.
///
/// Points with non-positive norms are excluded; fewer than three survivors
/// is an error.
pub fn fit_decay_exponent(points: &[(f64, f64)]) -> Result<ExponentFit> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(n, norm)| *n > 0.0 && *norm > 0.0 && norm.is_finite())
        .map(|&(n, norm)| (n.ln(), norm.ln()))
        .collect();
    let excluded = points.len() - usable.len();
    if usable.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "exponent fit needs at least 3 positive norms, got {}",
            usable.len()
        )));
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sxx: f64 = usable
        .iter()
        .map(|(x, _)| (x - mean_x) * (x - mean_x))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParam("degenerate abscissae in fit".into()));
    }
    let sxy: f64 = usable
        .iter()
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = usable
        .iter()
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let df = usable.len() - 2;
    let (se_slope, rms) = if df > 0 {
        let var = ss_res / df as f64;
        ((var / sxx).sqrt(), (ss_res / usable.len() as f64).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(ExponentFit {
        slope,
        intercept,
        half_width: t975(df) * se_slope,
        residual_rms: rms,
        points_used: usable.len(),
        points_excluded: excluded,
    })
}
