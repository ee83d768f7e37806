//! Log-log rate regression.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub slope_se: f64,
    pub r_squared: f64,
    pub ci95: (f64, f64),
    pub points: usize,
}

impl RateFit {
    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }
}

/// Fewest points a rate is fitted from.
pub const MIN_POINTS: usize = 4;

/// Least-squares fit of `ln y = a + b ln n`.
pub fn rate_fit(ns: &[f64], ys: &[f64]) -> Result<RateFit> {
    if ns.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: ns.len(),
            got: ys.len(),
        });
    }
    if ns.len() < MIN_POINTS {
        return Err(Error::TooFewPoints(ns.len()));
    }
    for (i, (&n, &y)) in ns.iter().zip(ys).enumerate() {
        if !(n > 0.0) {
            return Err(Error::NonPositive { index: i, value: n });
        }
        if !(y > 0.0) {
            return Err(Error::NonPositive { index: i, value: y });
        }
    }
    let x: Vec<f64> = ns.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(crate::error::domain("rate fit needs at least two distinct n"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - rss / syy).clamp(0.0, 1.0) } else { 1.0 };
    let dof = m - 2.0;
    let q = t_quantile(dof);
    let slope_se = (rss / dof / sxx).sqrt();
    Ok(RateFit {
        slope,
        intercept,
        slope_se,
        r_squared,
        ci95: (slope - q * slope_se, slope + q * slope_se),
        points: x.len(),
    })
}

fn t_quantile(dof: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    StudentsT::new(0.0, 1.0, dof)
        .map(|t| t.inverse_cdf(0.975))
        .unwrap_or(1.96)
}
