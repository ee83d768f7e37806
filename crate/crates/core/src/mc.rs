//! Moments of Monte Carlo samples with their standard errors.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    /// `|value − target| ≤ k · se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.se
    }

    pub fn z(&self, target: f64) -> f64 {
        (self.value - target) / self.se
    }
}

fn check(x: &[f64], min: usize) -> Result<()> {
    if x.len() < min {
        Err(Error::TooFewPoints(x.len()))
    } else {
        Ok(())
    }
}

pub fn mean(x: &[f64]) -> Result<Estimate> {
    check(x, 2)?;
    let m = x.len() as f64;
    let mu = x.iter().sum::<f64>() / m;
    let var = x.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0);
    Ok(Estimate {
        value: mu,
        se: (var / m).sqrt(),
    })
}

/// Sample variance with the delta-method SE `√((m₄ − s⁴)/m)`.
pub fn variance(x: &[f64]) -> Result<Estimate> {
    check(x, 4)?;
    let m = x.len() as f64;
    let mu = x.iter().sum::<f64>() / m;
    let (mut s2, mut s4) = (0.0, 0.0);
    for v in x {
        let d = (v - mu) * (v - mu);
        s2 += d;
        s4 += d * d;
    }
    let var = s2 / (m - 1.0);
    let m4 = s4 / m;
    Ok(Estimate {
        value: var,
        se: ((m4 - var * var).max(0.0) / m).sqrt(),
    })
}

/// Unbiased fourth cumulant `k₄` from centered power sums.
fn k4_from_sums(m: f64, p1: f64, p2: f64, p3: f64, p4: f64) -> f64 {
    let a1 = p1 / m;
    let a2 = p2 / m;
    let a3 = p3 / m;
    let a4 = p4 / m;
    let c2 = a2 - a1 * a1;
    let c4 = a4 - 4.0 * a1 * a3 + 6.0 * a1 * a1 * a2 - 3.0 * a1.powi(4);
    m * m * ((m + 1.0) * c4 - 3.0 * (m - 1.0) * c2 * c2) / ((m - 1.0) * (m - 2.0) * (m - 3.0))
}

/// Fourth cumulant (`k`-statistic) with a delete-one jackknife SE.
pub fn fourth_cumulant(x: &[f64]) -> Result<Estimate> {
    check(x, 8)?;
    let m = x.len() as f64;
    let shift = x.iter().sum::<f64>() / m;
    let mut p = [0.0f64; 4];
    for v in x {
        let d = v - shift;
        let d2 = d * d;
        p[0] += d;
        p[1] += d2;
        p[2] += d2 * d;
        p[3] += d2 * d2;
    }
    let value = k4_from_sums(m, p[0], p[1], p[2], p[3]);
    let loo: Vec<f64> = x
        .iter()
        .map(|v| {
            let d = v - shift;
            let d2 = d * d;
            k4_from_sums(m - 1.0, p[0] - d, p[1] - d2, p[2] - d2 * d, p[3] - d2 * d2)
        })
        .collect();
    let bar = loo.iter().sum::<f64>() / m;
    let ss = loo.iter().map(|t| (t - bar).powi(2)).sum::<f64>();
    Ok(Estimate {
        value,
        se: ((m - 1.0) / m * ss).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    #[test]
    fn small_sample_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let m = mean(&x).unwrap();
        assert_abs_diff_eq!(m.value, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(variance(&x).unwrap().value, 5.0 / 3.0, epsilon = 1e-15);
        assert!(fourth_cumulant(&x).is_err());
    }

    #[test]
    fn normal_has_zero_fourth_cumulant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let k = fourth_cumulant(&x).unwrap();
        assert!(k.within(0.0, 4.0), "{k:?}");
        let v = variance(&x).unwrap();
        assert!(v.within(1.0, 4.0), "{v:?}");
    }

    #[test]
    fn exponential_fourth_cumulant_is_six() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..400_000).map(|_| Exp1.sample(&mut rng)).collect();
        let k: Estimate = fourth_cumulant(&x).unwrap();
        assert!(k.within(6.0, 4.0), "{k:?}");
        assert!(k.se > 0.05 && k.se < 0.5, "{k:?}");
    }

    #[test]
    fn jackknife_matches_direct_leave_one_out() {
        let x = [0.3, -1.2, 2.2, 0.7, -0.4, 1.9, -2.5, 0.1, 0.05, 1.1];
        let full = fourth_cumulant(&x).unwrap();
        let direct: Vec<f64> = (0..x.len())
            .map(|i| {
                let y: Vec<f64> = x.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, v)| *v).collect();
                fourth_cumulant(&y).unwrap().value
            })
            .collect();
        let m = x.len() as f64;
        let bar = direct.iter().sum::<f64>() / m;
        let se = ((m - 1.0) / m * direct.iter().map(|t| (t - bar).powi(2)).sum::<f64>()).sqrt();
        assert_abs_diff_eq!(full.se, se, epsilon = 1e-10 * se);
    }
}
