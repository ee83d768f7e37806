//! Experiment configuration files.
//!
//! A config is a TOML document with top-level keys and at most one level of
//! tables (`[model]`, `[weight]`, `[quadrature]`, `[whittle]`, `[checks]`).
//! Unknown keys are rejected.
//!
//! ```toml
//! experiment = "variance-rate"
//! n_list = [128, 256, 512, 1024]
//! master_seed = 7
//!
//! [model]
//! kind = "farima"
//! d_frac = 0.2
//!
//! [weight]
//! kind = "unit"
//! ```

use std::path::Path;

use quadclt_core::{QuadratureSpec, SlowVaryingSpec, SpectralModel, WeightModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    VarianceRate,
    Kappa4Rate,
    Wasserstein,
    Kernels,
    WhittleMc,
    FullReport,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::VarianceRate => "variance-rate",
            ExperimentKind::Kappa4Rate => "kappa4-rate",
            ExperimentKind::Wasserstein => "wasserstein",
            ExperimentKind::Kernels => "kernels",
            ExperimentKind::WhittleMc => "whittle-mc",
            ExperimentKind::FullReport => "full-report",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    WhiteNoise,
    Farima,
    Fgn,
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlowKind {
    Constant,
    LogPower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Unit,
    PowerLaw,
    LogScore,
    LogSqHess,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub kind: ModelKind,
    pub d_frac: Option<f64>,
    pub innov_var: Option<f64>,
    pub hurst: Option<f64>,
    pub alpha: Option<f64>,
    pub slow: Option<SlowKind>,
    pub c: Option<f64>,
    pub a: Option<f64>,
}

impl Default for ModelCfg {
    fn default() -> Self {
        Self {
            kind: ModelKind::WhiteNoise,
            d_frac: None,
            innov_var: None,
            hurst: None,
            alpha: None,
            slow: None,
            c: None,
            a: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightCfg {
    pub kind: WeightKind,
    pub beta: Option<f64>,
    pub slow: Option<SlowKind>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub sign: Option<f64>,
}

impl Default for WeightCfg {
    fn default() -> Self {
        Self {
            kind: WeightKind::Unit,
            beta: None,
            slow: None,
            c: None,
            a: None,
            sign: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadCfg {
    pub dyadic_levels: usize,
    pub points_per_panel: usize,
    pub abs_tol: f64,
}

impl Default for QuadCfg {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            dyadic_levels: q.dyadic_levels,
            points_per_panel: q.points_per_panel,
            abs_tol: q.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WhittleCfg {
    pub a: f64,
    pub b: f64,
    pub minimizer_tol: f64,
    /// Riemann sum over Fourier frequencies instead of the continuous contrast.
    pub riemann: bool,
    /// Write every replicate's estimate.
    pub dump_estimates: bool,
}

impl Default for WhittleCfg {
    fn default() -> Self {
        Self {
            a: 0.0,
            b: 0.9,
            minimizer_tol: 1e-8,
            riemann: false,
            dump_estimates: false,
        }
    }
}

/// Tolerances of the pass/fail checks written to the summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChecksCfg {
    /// Half-width of the window around a reference slope (moment rates, kernel lemmas).
    pub slope_tol: f64,
    /// Half-width of the window around `d − 1/2` for the distance slope.
    pub w1_slope_tol: f64,
    /// Largest admissible distance slope.
    pub w1_slope_max: f64,
    /// Measured distance must not exceed this multiple of the Stein bound.
    pub bound_factor: f64,
    /// Exact-versus-empirical distance agreement, in combined standard errors.
    pub w1_se_k: f64,
    /// Whittle mean check, in standard errors.
    pub mean_se_k: f64,
    /// Whittle variance adjudication, in standard errors.
    pub var_se_k: f64,
}

impl Default for ChecksCfg {
    fn default() -> Self {
        Self {
            slope_tol: 0.2,
            w1_slope_tol: 0.25,
            w1_slope_max: -0.05,
            bound_factor: 3.0,
            w1_se_k: 3.0,
            mean_se_k: 3.0,
            var_se_k: 4.0,
        }
    }
}

fn default_w1_tol() -> f64 {
    1e-6
}

fn default_schur_beta() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Not part of the fingerprint.
    #[serde(default, skip_serializing)]
    pub out_dir: Option<String>,
    /// Sizes at which the exact distance is cross-checked by simulation.
    #[serde(default)]
    pub empirical_n: Vec<usize>,
    #[serde(default = "default_w1_tol")]
    pub w1_tol: f64,
    /// Weight exponent paired with the model in the Schur row-sum check.
    #[serde(default = "default_schur_beta")]
    pub schur_beta: f64,
    #[serde(default)]
    pub model: ModelCfg,
    #[serde(default)]
    pub weight: WeightCfg,
    #[serde(default)]
    pub quadrature: QuadCfg,
    #[serde(default)]
    pub whittle: WhittleCfg,
    #[serde(default)]
    pub checks: ChecksCfg,
}

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

fn need(v: Option<f64>, key: &str, kind: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| bad(key, format!("required for kind = \"{kind}\"")))
}

fn slow_spec(kind: Option<SlowKind>, c: Option<f64>, a: Option<f64>, table: &str) -> Result<SlowVaryingSpec, CliError> {
    let c = c.unwrap_or(1.0);
    let spec = match kind.unwrap_or(SlowKind::Constant) {
        SlowKind::Constant => SlowVaryingSpec::Constant { c },
        SlowKind::LogPower => SlowVaryingSpec::LogPower {
            c,
            a: a.ok_or_else(|| bad(&format!("{table}.a"), "required for slow = \"log-power\""))?,
        },
    };
    spec.validate().map_err(|e| bad(&format!("{table}.c"), e))?;
    Ok(spec)
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_list.is_empty() {
            return Err(bad("n_list", "must not be empty"));
        }
        if self.n_list[0] < 2 {
            return Err(bad("n_list", "sizes must be at least 2"));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("n_list", "must be strictly increasing"));
        }
        for n in &self.empirical_n {
            if !self.n_list.contains(n) {
                return Err(bad("empirical_n", format!("{n} is not in n_list")));
            }
        }
        if !self.empirical_n.is_empty() && self.replicates < 2 {
            return Err(bad("replicates", "at least 2 needed for the empirical distance"));
        }
        if !(self.w1_tol > 0.0) {
            return Err(bad("w1_tol", "must be positive"));
        }
        match self.experiment {
            ExperimentKind::Wasserstein => {
                let cap = quadclt_core::oracle::dense_cap();
                if let Some(n) = self.n_list.iter().find(|&&n| n > cap) {
                    return Err(bad("n_list", format!("{n} exceeds dense_cap {cap}")));
                }
            }
            ExperimentKind::WhittleMc if self.replicates < 100 => {
                return Err(bad("replicates", "whittle-mc needs at least 100"));
            }
            _ => {}
        }
        self.quad()?;
        let model = self.spectral_model()?;
        self.weight_model()?;
        if self.experiment == ExperimentKind::WhittleMc {
            let w = self.whittle;
            if !(0.0 <= w.a && w.a < w.b && w.b < 1.0) {
                return Err(bad("whittle.a", "need 0 <= a < b < 1"));
            }
            if !(w.minimizer_tol > 0.0) {
                return Err(bad("whittle.minimizer_tol", "must be positive"));
            }
            let a0 = model.alpha();
            if !(w.a <= a0 && a0 <= w.b) {
                return Err(bad("whittle.b", format!("model exponent {a0} outside [a, b]")));
            }
        }
        Ok(())
    }

    pub fn quad(&self) -> Result<QuadratureSpec, CliError> {
        let q = self.quadrature;
        QuadratureSpec::new(q.dyadic_levels, q.points_per_panel, q.abs_tol).map_err(|e| bad("quadrature", e))
    }

    pub fn spectral_model(&self) -> Result<SpectralModel, CliError> {
        let m = &self.model;
        let r = match m.kind {
            ModelKind::WhiteNoise => Ok(SpectralModel::WhiteNoise),
            ModelKind::Farima => SpectralModel::farima(
                need(m.d_frac, "model.d_frac", "farima")?,
                m.innov_var.unwrap_or(1.0),
            ),
            ModelKind::Fgn => SpectralModel::fgn(need(m.hurst, "model.hurst", "fgn")?),
            ModelKind::PowerLaw => SpectralModel::power_law(
                need(m.alpha, "model.alpha", "power-law")?,
                slow_spec(m.slow, m.c, m.a, "model")?,
            ),
        };
        r.map_err(|e| bad("model", e))
    }

    pub fn weight_model(&self) -> Result<WeightModel, CliError> {
        let w = &self.weight;
        let r = match w.kind {
            WeightKind::Unit => Ok(WeightModel::Unit),
            WeightKind::PowerLaw => WeightModel::power_law(
                need(w.beta, "weight.beta", "power-law")?,
                slow_spec(w.slow, w.c, w.a, "weight")?,
                w.sign.unwrap_or(1.0),
            ),
            WeightKind::LogScore => Ok(WeightModel::LogScore(self.spectral_model()?)),
            WeightKind::LogSqHess => Ok(WeightModel::LogSqHess(self.spectral_model()?)),
        };
        r.map_err(|e| bad("weight", e))
    }

    /// First 16 hex digits of the SHA-256 of the canonical serialization (output directory excluded).
    pub fn fingerprint(&self) -> String {
        let canonical = toml::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
experiment = "variance-rate"
n_list = [16, 256, 2048]
master_seed = 3
"#;

    #[test]
    fn defaults_are_white_noise_and_unit() {
        let c = ExperimentConfig::from_toml(BASIC).unwrap();
        assert_eq!(c.spectral_model().unwrap(), SpectralModel::WhiteNoise);
        assert_eq!(c.weight_model().unwrap(), WeightModel::Unit);
        assert_eq!(c.quad().unwrap(), QuadratureSpec::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let e = ExperimentConfig::from_toml(&format!("{BASIC}\nbogus_key = 1\n")).unwrap_err();
        assert!(e.to_string().contains("bogus_key"), "{e}");
        let e = ExperimentConfig::from_toml(&format!("{BASIC}\n[model]\nkind = \"farima\"\ndfrac = 0.2\n")).unwrap_err();
        assert!(e.to_string().contains("dfrac"), "{e}");
    }

    #[test]
    fn semantic_errors_name_the_key() {
        let e = ExperimentConfig::from_toml("experiment = \"kernels\"\nn_list = [4, 4]\n").unwrap_err();
        assert!(e.to_string().starts_with("n_list"), "{e}");
        let e = ExperimentConfig::from_toml(&format!("{BASIC}\n[model]\nkind = \"farima\"\n")).unwrap_err();
        assert!(e.to_string().contains("model.d_frac"), "{e}");
        let e = ExperimentConfig::from_toml(&format!("{BASIC}\n[model]\nkind = \"farima\"\nd_frac = 0.7\n")).unwrap_err();
        assert!(e.to_string().starts_with("model"), "{e}");
        let e = ExperimentConfig::from_toml("experiment = \"wasserstein\"\nn_list = [4096]\n").unwrap_err();
        assert!(e.to_string().contains("dense_cap"), "{e}");
        let e = ExperimentConfig::from_toml("experiment = \"whittle-mc\"\nn_list = [64]\nreplicates = 10\n").unwrap_err();
        assert!(e.to_string().starts_with("replicates"), "{e}");
    }

    #[test]
    fn fingerprint_ignores_out_dir_and_layout() {
        let a = ExperimentConfig::from_toml(BASIC).unwrap();
        let b = ExperimentConfig::from_toml(&format!("# comment\n{BASIC}\nout_dir = \"elsewhere\"\n")).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 16);
        let c = ExperimentConfig::from_toml(&BASIC.replace("master_seed = 3", "master_seed = 4")).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn log_power_needs_exponent() {
        let t = format!("{BASIC}\n[model]\nkind = \"power-law\"\nalpha = 0.3\nslow = \"log-power\"\n");
        let e = ExperimentConfig::from_toml(&t).unwrap_err();
        assert!(e.to_string().contains("model.a"), "{e}");
        let ok = ExperimentConfig::from_toml(&format!("{t}a = 1.0\n")).unwrap();
        assert_eq!(ok.spectral_model().unwrap().alpha(), 0.3);
    }
}
