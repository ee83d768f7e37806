//! One-parameter Whittle estimation of the memory exponent with `L` known.
//!
//! The model family is `f_α(λ) = |λ|^{-α} L(λ)` and the contrast
//! `Q_n(α) = (1/2π) ∫ [log f_α + I_n / f_α]`, whose derivatives are
//!
//! ```text
//! Q_n'(α)  = (1/2π) ∫ ln|λ| (I_n/f_α − 1)
//! Q_n''(α) = (1/2π) ∫ ln²|λ| I_n/f_α
//! ```

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{domain, Error, Result};
use crate::mc::{self, Estimate};
use crate::quadrature::{HalfGrid, QuadratureSpec};
use crate::simulate::{mix_seed, plan_circulant, SamplerPlan};
use crate::spectra::{log_square_integral, SpectralModel};
use crate::statistic::{periodogram_fourier, periodogram_on_grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhittleConfig {
    pub a: f64,
    pub b: f64,
    /// Model whose slowly varying part `f(λ)|λ|^{α₀}` is the known `L`.
    pub l_model: SpectralModel,
    pub quad: QuadratureSpec,
    pub minimizer_tol: f64,
    /// Riemann sum over Fourier frequencies instead of the continuous integral.
    pub riemann: bool,
}

impl WhittleConfig {
    pub fn new(a: f64, b: f64, l_model: SpectralModel) -> Result<Self> {
        let cfg = Self {
            a,
            b,
            l_model,
            quad: QuadratureSpec::default(),
            minimizer_tol: 1e-8,
            riemann: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.a && self.a < self.b && self.b < 1.0) {
            return Err(domain(format!("need 0 <= a < b < 1, got [{}, {}]", self.a, self.b)));
        }
        if !(self.minimizer_tol > 0.0) {
            return Err(domain("minimizer_tol must be positive"));
        }
        self.l_model.validate()?;
        self.quad.validate()
    }

    fn slow(&self, lambda: f64) -> f64 {
        self.l_model.slow_part(lambda)
    }
}

/// Periodogram values with the quadrature weights and logs they are integrated against.
#[derive(Debug, Clone)]
pub struct WhittleData {
    /// Weights for `(1/2π) ∫_{-π}^{π}`, already folded onto `(0, π)`.
    w: Vec<f64>,
    ln_lambda: Vec<f64>,
    ln_l: Vec<f64>,
    /// `I_n(λ) / L(λ)`.
    ratio: Vec<f64>,
}

impl WhittleData {
    /// Periodogram of `x` on the contrast grid.
    pub fn from_path(x: &[f64], cfg: &WhittleConfig) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::TooFewPoints(x.len()));
        }
        if cfg.riemann {
            let n = x.len();
            let pg = periodogram_fourier(x);
            let half = n.div_ceil(2);
            let nodes: Vec<f64> = (1..half).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
            let vals = pg[1..half].to_vec();
            let w = vec![2.0 / n as f64; nodes.len()];
            return Ok(Self::assemble(&nodes, &w, &vals, cfg));
        }
        let grid = HalfGrid::for_length(x.len(), &cfg.quad)?;
        let vals = periodogram_on_grid(x, &grid);
        let w: Vec<f64> = grid.weights.iter().map(|w| w / PI).collect();
        Ok(Self::assemble(&grid.nodes, &w, &vals, cfg))
    }

    /// Plug-in `I_n := i_fn` on the contrast grid of a length-`n` sample.
    pub fn from_function(i_fn: impl Fn(f64) -> f64, n: usize, cfg: &WhittleConfig) -> Result<Self> {
        let grid = HalfGrid::for_length(n, &cfg.quad)?;
        let vals: Vec<f64> = grid.nodes.iter().map(|&l| i_fn(l)).collect();
        let w: Vec<f64> = grid.weights.iter().map(|w| w / PI).collect();
        Ok(Self::assemble(&grid.nodes, &w, &vals, cfg))
    }

    fn assemble(nodes: &[f64], w: &[f64], vals: &[f64], cfg: &WhittleConfig) -> Self {
        let l: Vec<f64> = nodes.iter().map(|&x| cfg.slow(x)).collect();
        Self {
            w: w.to_vec(),
            ln_lambda: nodes.iter().map(|x| x.ln()).collect(),
            ln_l: l.iter().map(|v| v.ln()).collect(),
            ratio: vals.iter().zip(&l).map(|(i, l)| i / l).collect(),
        }
    }

    /// `(Q, Q', Q'')` at `α`.
    pub fn derivatives(&self, alpha: f64) -> (f64, f64, f64) {
        let (mut q, mut s, mut h) = (0.0, 0.0, 0.0);
        for i in 0..self.w.len() {
            let ll = self.ln_lambda[i];
            // I / f_α = (I / L) λ^α
            let r = self.ratio[i] * (alpha * ll).exp();
            let w = self.w[i];
            q += w * (-alpha * ll + self.ln_l[i] + r);
            s += w * ll * (r - 1.0);
            h += w * ll * ll * r;
        }
        (q, s, h)
    }

    pub fn contrast(&self, alpha: f64) -> f64 {
        self.derivatives(alpha).0
    }

    pub fn score(&self, alpha: f64) -> f64 {
        self.derivatives(alpha).1
    }

    pub fn hessian(&self, alpha: f64) -> f64 {
        self.derivatives(alpha).2
    }
}

fn check_alpha(alpha: f64, cfg: &WhittleConfig) -> Result<()> {
    if !(cfg.a <= alpha && alpha <= cfg.b) {
        return Err(domain(format!("alpha {alpha} outside [{}, {}]", cfg.a, cfg.b)));
    }
    Ok(())
}

pub fn contrast(x: &[f64], alpha: f64, cfg: &WhittleConfig) -> Result<f64> {
    check_alpha(alpha, cfg)?;
    Ok(WhittleData::from_path(x, cfg)?.contrast(alpha))
}

pub fn score(x: &[f64], alpha: f64, cfg: &WhittleConfig) -> Result<f64> {
    check_alpha(alpha, cfg)?;
    Ok(WhittleData::from_path(x, cfg)?.score(alpha))
}

pub fn hessian(x: &[f64], alpha: f64, cfg: &WhittleConfig) -> Result<f64> {
    check_alpha(alpha, cfg)?;
    Ok(WhittleData::from_path(x, cfg)?.hessian(alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhittleFit {
    pub alpha_hat: f64,
    pub at_boundary: bool,
    pub q_value: f64,
    pub iterations: usize,
}

/// Golden-section search followed by a safeguarded Newton polish on the score.
pub fn fit_data(data: &WhittleData, cfg: &WhittleConfig) -> WhittleFit {
    let tol = cfg.minimizer_tol;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (cfg.a, cfg.b);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (data.contrast(c), data.contrast(d));
    let mut iterations = 0;
    while hi - lo > 1e-3 * (cfg.b - cfg.a) {
        iterations += 1;
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = data.contrast(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = data.contrast(d);
        }
    }
    // the score is increasing; bracket its root inside [a, b]
    let (mut bl, mut bh) = (lo, hi);
    if data.score(bl) > 0.0 {
        bl = cfg.a;
    }
    if data.score(bh) < 0.0 {
        bh = cfg.b;
    }
    let alpha_hat = if data.score(cfg.a) >= 0.0 {
        cfg.a
    } else if data.score(cfg.b) <= 0.0 {
        cfg.b
    } else {
        let mut x = 0.5 * (bl + bh);
        while bh - bl > tol && iterations < 500 {
            iterations += 1;
            let (_, s, h) = data.derivatives(x);
            if s == 0.0 {
                break;
            }
            if s > 0.0 {
                bh = x;
            } else {
                bl = x;
            }
            let step = s / h;
            if h > 0.0 && step.abs() < 0.1 * tol {
                x -= step;
                break;
            }
            let newton = x - step;
            x = if h > 0.0 && newton > bl && newton < bh {
                newton
            } else {
                0.5 * (bl + bh)
            };
        }
        x
    };
    let at_boundary = (alpha_hat - cfg.a).abs() < 10.0 * tol || (alpha_hat - cfg.b).abs() < 10.0 * tol;
    WhittleFit {
        alpha_hat,
        at_boundary,
        q_value: data.contrast(alpha_hat),
        iterations,
    }
}

pub fn fit(x: &[f64], cfg: &WhittleConfig) -> Result<WhittleFit> {
    cfg.validate()?;
    Ok(fit_data(&WhittleData::from_path(x, cfg)?, cfg))
}

/// The two candidate limit variances `4π/L₂` and `8π/L₂`, `L₂ = ∫ ln²|λ|`.
pub fn candidate_variances() -> (f64, f64) {
    let l2 = log_square_integral();
    (4.0 * PI / l2, 8.0 * PI / l2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub n: usize,
    pub alpha0: f64,
    pub replicates: usize,
    pub failures: usize,
    pub boundary_hits: usize,
    pub mean_alpha_hat: Estimate,
    /// Mean of `√n(α̂ − α₀)`.
    pub mean_scaled: Estimate,
    /// Variance of `√n(α̂ − α₀)`.
    pub var_scaled: Estimate,
    pub candidate_vars: (f64, f64),
    /// Root mean square error of `α̂`.
    pub rmse: f64,
    pub alpha_hats: Vec<f64>,
}

impl McSummary {
    pub const CSV_HEADER: &'static str = "n,alpha0,replicates,failures,boundary_hits,mean_alpha_hat,mean_alpha_hat_se,\
mean_scaled,mean_scaled_se,var_scaled,var_scaled_se,cand_4pi_l2,cand_8pi_l2,z_4pi_l2,z_8pi_l2,rmse,adjudicated";

    /// Signed distances of the variance estimate to each candidate, in SEs.
    pub fn z_scores(&self) -> (f64, f64) {
        (
            self.var_scaled.z(self.candidate_vars.0),
            self.var_scaled.z(self.candidate_vars.1),
        )
    }

    /// The candidate the variance is within 4 SE of, when exactly one is.
    pub fn adjudicated(&self) -> Option<f64> {
        let (z0, z1) = self.z_scores();
        match (z0.abs() <= 4.0, z1.abs() <= 4.0) {
            (true, false) => Some(self.candidate_vars.0),
            (false, true) => Some(self.candidate_vars.1),
            _ => None,
        }
    }

    pub fn adjudicated_label(&self) -> &'static str {
        match self.adjudicated() {
            Some(v) if v == self.candidate_vars.0 => "4pi/L2",
            Some(_) => "8pi/L2",
            None => "none",
        }
    }

    pub fn csv_fields(&self) -> Vec<String> {
        use crate::io::sig15;
        let (z0, z1) = self.z_scores();
        vec![
            self.n.to_string(),
            sig15(self.alpha0),
            self.replicates.to_string(),
            self.failures.to_string(),
            self.boundary_hits.to_string(),
            sig15(self.mean_alpha_hat.value),
            sig15(self.mean_alpha_hat.se),
            sig15(self.mean_scaled.value),
            sig15(self.mean_scaled.se),
            sig15(self.var_scaled.value),
            sig15(self.var_scaled.se),
            sig15(self.candidate_vars.0),
            sig15(self.candidate_vars.1),
            sig15(z0),
            sig15(z1),
            sig15(self.rmse),
            self.adjudicated_label().to_string(),
        ]
    }
}

/// Sampler for the generating model at length `n`.
pub fn sampler(model: &SpectralModel, n: usize, quad: &QuadratureSpec) -> Result<SamplerPlan> {
    let cov = match model.exact_autocov(n) {
        Some(c) => c,
        None => crate::spectra::autocovariance(model, n, quad)?,
    };
    plan_circulant(&cov, n)
}

/// Fits `replicates` paths of `model` and summarizes `√n(α̂ − α₀)`.
///
/// Replicates `2j` and `2j + 1` are the two paths drawn from seed `mix(master, j)`.
pub fn mc_normality(
    cfg: &WhittleConfig,
    model: &SpectralModel,
    n: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<McSummary> {
    if replicates < 100 {
        return Err(domain(format!("need at least 100 replicates, got {replicates}")));
    }
    cfg.validate()?;
    let alpha0 = model.alpha();
    let plan = sampler(model, n, &cfg.quad)?;
    let pairs = replicates.div_ceil(2);
    let fits: Vec<[Result<WhittleFit>; 2]> = (0..pairs)
        .into_par_iter()
        .map(|j| {
            let (p, q) = plan.sample_pair(mix_seed(master_seed, j as u64));
            [fit(&p.x, cfg), fit(&q.x, cfg)]
        })
        .collect();
    let mut alpha_hats = Vec::with_capacity(replicates);
    let mut failures = 0;
    let mut boundary_hits = 0;
    for r in fits.into_iter().flatten().take(replicates) {
        match r {
            Ok(f) => {
                boundary_hits += f.at_boundary as usize;
                alpha_hats.push(f.alpha_hat);
            }
            Err(_) => failures += 1,
        }
    }
    let sn = (n as f64).sqrt();
    let scaled: Vec<f64> = alpha_hats.iter().map(|a| sn * (a - alpha0)).collect();
    let rmse = (alpha_hats.iter().map(|a| (a - alpha0).powi(2)).sum::<f64>() / alpha_hats.len().max(1) as f64).sqrt();
    Ok(McSummary {
        n,
        alpha0,
        replicates,
        failures,
        boundary_hits,
        mean_alpha_hat: mc::mean(&alpha_hats)?,
        mean_scaled: mc::mean(&scaled)?,
        var_scaled: mc::variance(&scaled)?,
        candidate_vars: candidate_variances(),
        rmse,
        alpha_hats,
    })
}
