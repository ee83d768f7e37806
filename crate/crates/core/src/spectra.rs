//! Spectral densities, weight functions and their Fourier coefficients.
//!
//! Conventions: autocovariances are `r(k) = ∫_{-π}^{π} e^{ikλ} f(λ) dλ` and
//! weight coefficients are `γ_g(k) = (2π)^{-1} ∫_{-π}^{π} e^{ikλ} g(λ) dλ`.

use std::f64::consts::PI;

use rayon::prelude::*;
use statrs::function::gamma::gamma;

use crate::error::{domain, Error, Result};
use crate::quadrature::{Integrator, QuadratureSpec};

/// Slowly varying factor `L` on `(0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SlowVaryingSpec {
    Constant { c: f64 },
    /// `L(λ) = c (1 + ln(π/|λ|))^a`
    LogPower { c: f64, a: f64 },
}

impl SlowVaryingSpec {
    pub fn validate(&self) -> Result<()> {
        let (c, a) = match *self {
            SlowVaryingSpec::Constant { c } => (c, 0.0),
            SlowVaryingSpec::LogPower { c, a } => (c, a),
        };
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain("slowly varying constant must be positive"));
        }
        if !a.is_finite() {
            return Err(domain("slowly varying log exponent must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, lambda: f64) -> f64 {
        match *self {
            SlowVaryingSpec::Constant { c } => c,
            SlowVaryingSpec::LogPower { c, a } => c * (1.0 + (PI / lambda.abs()).ln()).powf(a),
        }
    }
}

/// Spectral density models with a power-law singularity at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralModel {
    /// `f(λ) = |λ|^{-α} L(λ)`
    PowerLaw { alpha: f64, l: SlowVaryingSpec },
    /// `f(λ) = (σ²/2π) |2 sin(λ/2)|^{-2d}`
    Farima { d_frac: f64, innov_var: f64 },
    /// Unit-variance fractional Gaussian noise.
    Fgn { hurst: f64 },
    /// `f ≡ 1/(2π)`
    WhiteNoise,
}

impl SpectralModel {
    pub fn power_law(alpha: f64, l: SlowVaryingSpec) -> Result<Self> {
        let m = SpectralModel::PowerLaw { alpha, l };
        m.validate()?;
        Ok(m)
    }

    pub fn farima(d_frac: f64, innov_var: f64) -> Result<Self> {
        let m = SpectralModel::Farima { d_frac, innov_var };
        m.validate()?;
        Ok(m)
    }

    pub fn fgn(hurst: f64) -> Result<Self> {
        let m = SpectralModel::Fgn { hurst };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralModel::PowerLaw { alpha, l } => {
                if !(alpha > -1.0 && alpha < 1.0) {
                    return Err(domain(format!("power-law alpha {alpha} outside (-1, 1)")));
                }
                l.validate()
            }
            SpectralModel::Farima { d_frac, innov_var } => {
                if !(d_frac.abs() < 0.5) {
                    return Err(domain(format!("FARIMA d {d_frac} outside (-1/2, 1/2)")));
                }
                if !(innov_var > 0.0 && innov_var.is_finite()) {
                    return Err(domain("FARIMA innovation variance must be positive"));
                }
                Ok(())
            }
            SpectralModel::Fgn { hurst } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    return Err(domain(format!("Hurst index {hurst} outside (0, 1)")));
                }
                Ok(())
            }
            SpectralModel::WhiteNoise => Ok(()),
        }
    }

    /// Exponent of the singularity at the origin (FARIMA: `2d`, fGn: `1 - 2H`).
    pub fn alpha(&self) -> f64 {
        match *self {
            SpectralModel::PowerLaw { alpha, .. } => alpha,
            SpectralModel::Farima { d_frac, .. } => 2.0 * d_frac,
            SpectralModel::Fgn { hurst } => 1.0 - 2.0 * hurst,
            SpectralModel::WhiteNoise => 0.0,
        }
    }

    /// `f(λ)` with domain checks: `λ ≠ 0` and `|λ| ≤ π`.
    pub fn eval_density(&self, lambda: f64) -> Result<f64> {
        check_frequency(lambda)?;
        Ok(self.density(lambda))
    }

    /// `f(λ)` without domain checks.
    #[inline]
    pub fn density(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        match *self {
            SpectralModel::PowerLaw { alpha, l } => x.powf(-alpha) * l.eval(x),
            SpectralModel::Farima { d_frac, innov_var } => {
                innov_var / (2.0 * PI) * (2.0 * (0.5 * x).sin()).powf(-2.0 * d_frac)
            }
            SpectralModel::Fgn { hurst } => fgn_density(hurst, x),
            SpectralModel::WhiteNoise => 1.0 / (2.0 * PI),
        }
    }

    /// The slowly varying part `f(λ) |λ|^{α}`.
    pub fn slow_part(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        self.density(x) * x.powf(self.alpha())
    }

    /// Autocovariances in closed form, when the model has one.
    pub fn exact_autocov(&self, k_max: usize) -> Option<CovSequence> {
        match *self {
            SpectralModel::Farima { d_frac, innov_var } => farima_autocov(d_frac, innov_var, k_max).ok(),
            SpectralModel::Fgn { hurst } => Some(fgn_autocov(hurst, k_max)),
            SpectralModel::WhiteNoise => {
                let mut r = vec![0.0; k_max + 1];
                r[0] = 1.0;
                Some(CovSequence::new(r, CovSource::ClosedForm))
            }
            SpectralModel::PowerLaw { .. } => None,
        }
    }
}

fn check_frequency(lambda: f64) -> Result<()> {
    if lambda == 0.0 || !lambda.is_finite() || lambda.abs() > PI {
        return Err(domain(format!("frequency {lambda} outside (-π, π) \\ {{0}}")));
    }
    Ok(())
}

/// fGn density `2 c_H (1 - cos λ) Σ_j |2πj + λ|^{-2H-1}` with
/// `c_H = sin(πH) Γ(2H+1) / (2π)`; the series is summed to `|j| ≤ 200` and
/// the remainder replaced by its midpoint integral.
fn fgn_density(hurst: f64, x: f64) -> f64 {
    const TERMS: usize = 200;
    let s = 2.0 * hurst + 1.0;
    let c = (PI * hurst).sin() * gamma(2.0 * hurst + 1.0) / (2.0 * PI);
    let mut sum = x.powf(-s);
    for j in 1..=TERMS {
        let t = 2.0 * PI * j as f64;
        sum += (t + x).powf(-s) + (t - x).powf(-s);
    }
    let edge = 2.0 * PI * (TERMS as f64 + 0.5);
    sum += ((edge + x).powf(1.0 - s) + (edge - x).powf(1.0 - s)) / (2.0 * PI * (s - 1.0));
    let s2 = (0.5 * x).sin();
    4.0 * c * s2 * s2 * sum
}

/// Even weight function `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightModel {
    /// `g(λ) = sign |λ|^{-β} L(λ)`
    PowerLaw {
        beta: f64,
        l: SlowVaryingSpec,
        sign: f64,
    },
    Unit,
    /// `g(λ) = ln|λ| / (2π f(λ))`
    LogScore(SpectralModel),
    /// `g(λ) = ln²|λ| / (2π f(λ))`
    LogSqHess(SpectralModel),
}

impl WeightModel {
    pub fn power_law(beta: f64, l: SlowVaryingSpec, sign: f64) -> Result<Self> {
        let w = WeightModel::PowerLaw { beta, l, sign };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            WeightModel::PowerLaw { beta, l, sign } => {
                if !(*beta > -1.0 && *beta < 1.0) {
                    return Err(domain(format!("power-law beta {beta} outside (-1, 1)")));
                }
                if *sign != 1.0 && *sign != -1.0 {
                    return Err(domain("weight sign must be +1 or -1"));
                }
                l.validate()
            }
            WeightModel::Unit => Ok(()),
            WeightModel::LogScore(m) | WeightModel::LogSqHess(m) => m.validate(),
        }
    }

    /// Exponent of the singularity at the origin (log factors ignored).
    pub fn beta(&self) -> f64 {
        match self {
            WeightModel::PowerLaw { beta, .. } => *beta,
            WeightModel::Unit => 0.0,
            WeightModel::LogScore(m) | WeightModel::LogSqHess(m) => -m.alpha(),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, WeightModel::Unit)
    }

    pub fn eval_weight(&self, lambda: f64) -> Result<f64> {
        check_frequency(lambda)?;
        Ok(self.weight(lambda))
    }

    #[inline]
    pub fn weight(&self, lambda: f64) -> f64 {
        let x = lambda.abs();
        match self {
            WeightModel::PowerLaw { beta, l, sign } => sign * x.powf(-beta) * l.eval(x),
            WeightModel::Unit => 1.0,
            WeightModel::LogScore(m) => x.ln() / (2.0 * PI * m.density(x)),
            WeightModel::LogSqHess(m) => x.ln().powi(2) / (2.0 * PI * m.density(x)),
        }
    }
}

/// Where a covariance sequence came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovSource {
    Quadrature,
    ClosedForm,
}

/// Autocovariances `r(0..=K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovSequence {
    pub r: Vec<f64>,
    pub source: CovSource,
}

impl CovSequence {
    pub fn new(r: Vec<f64>, source: CovSource) -> Self {
        Self { r, source }
    }

    /// Largest lag stored.
    pub fn max_lag(&self) -> usize {
        self.r.len().saturating_sub(1)
    }

    pub fn lag(&self, k: isize) -> f64 {
        self.r[k.unsigned_abs()]
    }

    /// Deterministic fingerprint of the values (FNV-1a over the bit patterns).
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.r.iter().map(|x| x.to_bits()))
    }
}

pub(crate) fn fnv1a(words: impl Iterator<Item = u64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Fourier coefficients `γ_g(0..=K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFourier {
    pub gamma: Vec<f64>,
}

impl WeightFourier {
    pub fn new(gamma: Vec<f64>) -> Self {
        Self { gamma }
    }

    /// `γ ≡ δ_0`, the coefficients of `g ≡ 1`.
    pub fn unit(k_max: usize) -> Self {
        let mut gamma = vec![0.0; k_max + 1];
        gamma[0] = 1.0;
        Self { gamma }
    }

    pub fn max_lag(&self) -> usize {
        self.gamma.len().saturating_sub(1)
    }

    pub fn lag(&self, k: isize) -> f64 {
        self.gamma[k.unsigned_abs()]
    }

    /// True when the coefficients are those of the identity.
    pub fn is_identity(&self) -> bool {
        self.gamma.first() == Some(&1.0) && self.gamma[1..].iter().all(|&g| g == 0.0)
    }
}

/// Panel width resolving `cos(kλ)` with two periods per panel.
pub(crate) fn cosine_panel_width(k: usize) -> f64 {
    if k == 0 {
        PI
    } else {
        (4.0 * PI / k as f64).min(PI)
    }
}

/// `r(k) = ∫ cos(kλ) f(λ) dλ` for `k = 0..=K`, by graded quadrature.
///
/// fGn uses its closed form instead of the slowly converging spectral series.
pub fn autocovariance(model: &SpectralModel, k_max: usize, quad: &QuadratureSpec) -> Result<CovSequence> {
    model.validate()?;
    if let SpectralModel::Fgn { hurst } = *model {
        return Ok(fgn_autocov(hurst, k_max));
    }
    if model.alpha() >= 1.0 {
        return Err(domain("spectral density is not integrable"));
    }
    let integ = Integrator::new(*quad)?;
    let r = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let kf = k as f64;
            integ.integrate_even(|x| (kf * x).cos() * model.density(x), &[], cosine_panel_width(k))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CovSequence::new(r, CovSource::Quadrature))
}

/// FARIMA(0,d,0) autocovariances from `r(0) = σ² Γ(1-2d)/Γ(1-d)²` and
/// `r(k) = r(k-1) (k-1+d)/(k-d)`.
pub fn farima_autocov(d_frac: f64, innov_var: f64, k_max: usize) -> Result<CovSequence> {
    if !(d_frac.abs() < 0.5) {
        return Err(domain(format!("FARIMA d {d_frac} outside (-1/2, 1/2)")));
    }
    if !(innov_var > 0.0) {
        return Err(domain("FARIMA innovation variance must be positive"));
    }
    let mut r = Vec::with_capacity(k_max + 1);
    r.push(innov_var * gamma(1.0 - 2.0 * d_frac) / gamma(1.0 - d_frac).powi(2));
    for k in 1..=k_max {
        let kf = k as f64;
        let prev = r[k - 1];
        r.push(prev * (kf - 1.0 + d_frac) / (kf - d_frac));
    }
    Ok(CovSequence::new(r, CovSource::ClosedForm))
}

/// Unit-variance fGn: `r(k) = ½(|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})`.
pub fn fgn_autocov(hurst: f64, k_max: usize) -> CovSequence {
    let h2 = 2.0 * hurst;
    let r = (0..=k_max)
        .map(|k| {
            let k = k as f64;
            0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
        })
        .collect();
    CovSequence::new(r, CovSource::ClosedForm)
}

/// `γ_g(k) = (2π)^{-1} ∫ cos(kλ) g(λ) dλ` for `k = 0..=K`.
pub fn weight_fourier(weight: &WeightModel, k_max: usize, quad: &QuadratureSpec) -> Result<WeightFourier> {
    weight.validate()?;
    if weight.is_unit() {
        return Ok(WeightFourier::unit(k_max));
    }
    if weight.beta() >= 1.0 {
        return Err(domain("weight is not integrable"));
    }
    let integ = Integrator::new(*quad)?;
    let gamma = (0..=k_max)
        .into_par_iter()
        .map(|k| {
            let kf = k as f64;
            integ
                .integrate_even(|x| (kf * x).cos() * weight.weight(x), &[], cosine_panel_width(k))
                .map(|v| v / (2.0 * PI))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightFourier::new(gamma))
}

/// `σ₀² = 4π ∫ f² g² dλ`.
pub fn sigma0_sq(model: &SpectralModel, weight: &WeightModel, quad: &QuadratureSpec) -> Result<f64> {
    model.validate()?;
    weight.validate()?;
    let integ = Integrator::new(*quad)?;
    let v = integ.integrate_even(
        |x| {
            let fg = model.density(x) * weight.weight(x);
            fg * fg
        },
        &[],
        PI,
    )?;
    if !v.is_finite() {
        return Err(Error::Divergence { point: 0.0 });
    }
    Ok(4.0 * PI * v)
}

/// `∫_{-π}^{π} ln²|λ| dλ = 2π(ln²π - 2 ln π + 2)`.
pub fn log_square_integral() -> f64 {
    let l = PI.ln();
    2.0 * PI * (l * l - 2.0 * l + 2.0)
}

/// Closed-form `4π∫f²` for FARIMA: `2 σ⁴ Γ(1-4d)/Γ(1-2d)²` (requires `d < 1/4`).
pub fn farima_sigma0_sq_unit(d_frac: f64, innov_var: f64) -> Result<f64> {
    if !(d_frac < 0.25 && d_frac > -0.5) {
        return Err(Error::Divergence { point: 0.0 });
    }
    Ok(2.0 * innov_var * innov_var * gamma(1.0 - 4.0 * d_frac) / gamma(1.0 - 2.0 * d_frac).powi(2))
}
