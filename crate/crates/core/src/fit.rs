//! Ordinary least squares for growth-rate fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::math;

/// Fitted line `y = intercept + slope · x`, with a two-sided 95% band on
/// the slope from Student's t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub slope_ci_low: f64,
    pub slope_ci_high: f64,
    pub points: usize,
}

/// Two-sided 97.5% quantiles of Student's t for 1..=30 degrees of freedom.
const T_975: [f64; 30] = [
    12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
    2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
    2.052, 2.048, 2.045, 2.042,
];

fn t_quantile(dof: usize) -> f64 {
    match dof {
        0 => f64::INFINITY,
        1..=30 => T_975[dof - 1],
        _ => 1.960,
    }
}

pub fn ols(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(invalid(
            "at least two (x, y) points",
            xs.len().min(ys.len()),
        ));
    }
    let n = xs.len() as f64;
    let mx = math::sum(xs.iter().copied()) / n;
    let my = math::sum(ys.iter().copied()) / n;
    let sxx = math::sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    if sxx == 0.0 {
        return Err(invalid("distinct x values", "all equal"));
    }
    let sxy = math::sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = xs.len() - 2;
    let rss = math::sum(
        xs.iter()
            .zip(ys)
            .map(|(x, y)| (y - intercept - slope * x) * (y - intercept - slope * x)),
    );
    let slope_stderr = if dof == 0 {
        f64::INFINITY
    } else {
        math::sqrt(rss / dof as f64 / sxx)
    };
    let half = t_quantile(dof) * slope_stderr;
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        slope_ci_low: slope - half,
        slope_ci_high: slope + half,
        points: xs.len(),
    })
}
