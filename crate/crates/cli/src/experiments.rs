//! Experiment drivers: each returns CSV tables and pass/fail checks.

use std::f64::consts::PI;

use quadclt_core::distance::{wasserstein_empirical_se, wasserstein_exact};
use quadclt_core::io::sig15;
use quadclt_core::kernels::{self, LemmaRow, Profile};
use quadclt_core::oracle::{self, exact_law, stein_bound};
use quadclt_core::rates::{rate_fit, RateFit};
use quadclt_core::spectra::{farima_sigma0_sq_unit, sigma0_sq, weight_fourier};
use quadclt_core::statistic::simulate_statistics;
use quadclt_core::whittle::{mc_normality, McSummary, WhittleConfig};
use quadclt_core::{
    autocovariance, mix_seed, CovSequence, QuadratureSpec, SlowVaryingSpec, SpectralModel, WeightFourier,
    WeightModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ChecksCfg, ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::report::{Check, Report, Table};

type Res<T> = Result<T, CliError>;

/// Model, weight and quadrature resolved from a config.
#[derive(Debug, Clone)]
pub struct Setup {
    pub model: SpectralModel,
    pub weight: WeightModel,
    pub quad: QuadratureSpec,
}

impl Setup {
    pub fn from_config(cfg: &ExperimentConfig) -> Res<Self> {
        Ok(Self {
            model: cfg.spectral_model()?,
            weight: cfg.weight_model()?,
            quad: cfg.quad()?,
        })
    }

    /// `d = α + β`.
    pub fn d(&self) -> f64 {
        self.model.alpha() + self.weight.beta()
    }

    fn white_unit(&self) -> bool {
        self.model == SpectralModel::WhiteNoise && self.weight == WeightModel::Unit
    }

    pub fn cov(&self, n: usize) -> Res<CovSequence> {
        Ok(match self.model.exact_autocov(n) {
            Some(c) => c,
            None => autocovariance(&self.model, n, &self.quad)?,
        })
    }

    pub fn weight_fourier(&self, n: usize) -> Res<WeightFourier> {
        Ok(match self.weight {
            WeightModel::Unit => WeightFourier::unit(n),
            _ => weight_fourier(&self.weight, n, &self.quad)?,
        })
    }

    /// `σ₀²`, in closed form when one is known.
    pub fn sigma0_sq(&self) -> Res<f64> {
        Ok(match (&self.model, &self.weight) {
            (SpectralModel::WhiteNoise, WeightModel::Unit) => 2.0,
            (SpectralModel::Farima { d_frac, innov_var }, WeightModel::Unit) => {
                farima_sigma0_sq_unit(*d_frac, *innov_var)?
            }
            _ => sigma0_sq(&self.model, &self.weight, &self.quad)?,
        })
    }
}

fn fit_usize(ns: &[usize], ys: &[f64]) -> quadclt_core::Result<RateFit> {
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    rate_fit(&x, ys)
}

/// Check that a fitted slope lies in `[target − tol, target + tol]`.
fn slope_check(name: &str, ns: &[usize], ys: &[f64], target: f64, tol: f64) -> (Check, f64) {
    match fit_usize(ns, ys) {
        Ok(f) => {
            let pass = f.within(target - tol, target + tol);
            (
                Check::new(
                    name,
                    pass,
                    format!(
                        "slope {:.4} (ci95 [{:.4}; {:.4}] r2 {:.4}) window [{:.4}; {:.4}]",
                        f.slope,
                        f.ci95.0,
                        f.ci95.1,
                        f.r_squared,
                        target - tol,
                        target + tol
                    ),
                ),
                f.slope,
            )
        }
        Err(e) => (Check::new(name, false, format!("no slope: {e}")), f64::NAN),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MomentRow {
    pub n: usize,
    pub v_n: f64,
    pub sigma0_sq: f64,
    pub kappa4: f64,
    pub bound: f64,
    pub method: &'static str,
}

pub fn moment_rows(setup: &Setup, ns: &[usize]) -> Res<Vec<MomentRow>> {
    let s0 = setup.sigma0_sq()?;
    ns.iter()
        .map(|&n| {
            let cov = setup.cov(n)?;
            let wf = setup.weight_fourier(n)?;
            let (v_n, kappa4, method) = oracle::moments(&cov, &wf, n)?;
            let b = stein_bound(v_n, kappa4, s0)?;
            Ok(MomentRow {
                n,
                v_n,
                sigma0_sq: s0,
                kappa4,
                bound: b.bound,
                method: method.as_str(),
            })
        })
        .collect()
}

fn moments_table(rows: &[MomentRow]) -> Table {
    let mut t = Table::new(
        "moments",
        &[
            "n",
            "V_n",
            "sigma0_sq",
            "abs_gap",
            "kappa4",
            "kappa4_times_n",
            "contraction_sq",
            "stein_bound",
            "method",
        ],
    );
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            sig15(r.v_n),
            sig15(r.sigma0_sq),
            sig15((r.v_n - r.sigma0_sq).abs()),
            sig15(r.kappa4),
            sig15(r.kappa4 * r.n as f64),
            sig15(r.kappa4 / 48.0),
            sig15(r.bound),
            r.method.to_string(),
        ]);
    }
    t
}

fn variance_checks(setup: &Setup, rows: &[MomentRow], checks: &ChecksCfg) -> Vec<Check> {
    if setup.white_unit() {
        let worst = rows.iter().map(|r| (r.v_n - 2.0).abs()).fold(0.0, f64::max);
        return vec![Check::new(
            "variance_exact",
            worst <= 1e-12,
            format!("max |V_n - 2| = {worst:.3e} (tol 1e-12)"),
        )];
    }
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| (r.v_n - r.sigma0_sq).abs()).collect();
    vec![slope_check("variance_slope", &ns, &gaps, 2.0 * setup.d() - 1.0, checks.slope_tol).0]
}

fn kappa4_checks(setup: &Setup, rows: &[MomentRow], checks: &ChecksCfg) -> Vec<Check> {
    if setup.white_unit() {
        let worst = rows
            .iter()
            .map(|r| (r.kappa4 * r.n as f64 - 48.0).abs())
            .fold(0.0, f64::max);
        return vec![Check::new(
            "kappa4_exact",
            worst <= 1e-10,
            format!("max |n kappa4 - 48| = {worst:.3e} (tol 1e-10)"),
        )];
    }
    let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let c: Vec<f64> = rows.iter().map(|r| r.kappa4 / 48.0).collect();
    vec![slope_check("kappa4_slope", &ns, &c, 2.0 * setup.d() - 1.0, checks.slope_tol).0]
}

pub fn variance_rate(cfg: &ExperimentConfig) -> Res<Report> {
    let setup = Setup::from_config(cfg)?;
    let rows = moment_rows(&setup, &cfg.n_list)?;
    Ok(Report {
        tables: vec![moments_table(&rows)],
        checks: variance_checks(&setup, &rows, &cfg.checks),
    })
}

pub fn kappa4_rate(cfg: &ExperimentConfig) -> Res<Report> {
    let setup = Setup::from_config(cfg)?;
    let rows = moment_rows(&setup, &cfg.n_list)?;
    Ok(Report {
        tables: vec![moments_table(&rows)],
        checks: kappa4_checks(&setup, &rows, &cfg.checks),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct DistanceRow {
    pub n: usize,
    pub exact: f64,
    pub empirical: Option<(f64, f64)>,
    pub bound: f64,
    pub v_n: f64,
    pub kappa4: f64,
}

pub fn wasserstein(cfg: &ExperimentConfig) -> Res<Report> {
    let setup = Setup::from_config(cfg)?;
    let ns: Vec<usize> = cfg.n_list.clone();
    wasserstein_for(cfg, &setup, &ns)
}

fn wasserstein_for(cfg: &ExperimentConfig, setup: &Setup, ns: &[usize]) -> Res<Report> {
    let s0 = setup.sigma0_sq()?;
    let sigma0 = s0.sqrt();
    let mut rows = Vec::new();
    for &n in ns {
        let cov = setup.cov(n)?;
        let wf = setup.weight_fourier(n)?;
        let law = exact_law(&cov, &wf, n)?;
        let b = stein_bound(law.v_n, law.kappa4, s0)?;
        let exact = wasserstein_exact(&law.weights, sigma0, cfg.w1_tol)?;
        let empirical = if cfg.empirical_n.contains(&n) {
            let samples = simulate_statistics(&cov, &wf, n, cfg.replicates, mix_seed(cfg.master_seed, n as u64))?;
            let e = wasserstein_empirical_se(&samples, sigma0)?;
            Some((e.value, e.se))
        } else {
            None
        };
        rows.push(DistanceRow {
            n,
            exact,
            empirical,
            bound: b.bound,
            v_n: law.v_n,
            kappa4: law.kappa4,
        });
    }

    let mut t = Table::new(
        "wasserstein",
        &[
            "n",
            "dW_exact",
            "dW_empirical",
            "dW_empirical_se",
            "stein_bound",
            "V_n",
            "sigma0_sq",
            "kappa4",
        ],
    );
    for r in &rows {
        let (e, se) = match r.empirical {
            Some((e, se)) => (sig15(e), sig15(se)),
            None => (String::new(), String::new()),
        };
        t.push(vec![
            r.n.to_string(),
            sig15(r.exact),
            e,
            se,
            sig15(r.bound),
            sig15(r.v_n),
            sig15(s0),
            sig15(r.kappa4),
        ]);
    }

    let c = &cfg.checks;
    let mut checks = Vec::new();
    if rows.len() >= 2 {
        let dec = rows.windows(2).all(|w| w[1].exact < w[0].exact);
        let vals: Vec<String> = rows.iter().map(|r| format!("{:.6}", r.exact)).collect();
        checks.push(Check::new("w1_decreasing", dec, format!("dW = [{}]", vals.join("; "))));
    }
    if rows.len() >= 4 {
        let ds: Vec<f64> = rows.iter().map(|r| r.exact).collect();
        let target = setup.d() - 0.5;
        let (mut chk, slope) = slope_check("w1_slope", ns, &ds, target, c.w1_slope_tol);
        chk.pass &= slope <= c.w1_slope_max;
        chk.detail = format!("{} and at most {}", chk.detail, c.w1_slope_max);
        checks.push(chk);
    }
    let worst = rows.iter().map(|r| r.exact / r.bound).fold(0.0, f64::max);
    checks.push(Check::new(
        "w1_dominance",
        worst <= c.bound_factor,
        format!("max dW / stein_bound = {worst:.4} (limit {})", c.bound_factor),
    ));
    for r in &rows {
        if let Some((e, se)) = r.empirical {
            let combined = se + 2.0 * cfg.w1_tol;
            let diff = (e - r.exact).abs();
            checks.push(Check::new(
                format!("w1_crosscheck_n{}", r.n),
                diff <= c.w1_se_k * combined,
                format!(
                    "|{e:.6} - {:.6}| = {diff:.3e} vs {} x {combined:.3e} ({} samples)",
                    r.exact, c.w1_se_k, cfg.replicates
                ),
            ));
        }
    }
    Ok(Report {
        tables: vec![t],
        checks,
    })
}

/// Identifiers accepted by [`lemma`].
pub const LEMMA_IDS: [&str; 7] = [
    "fejer-mass",
    "convolution",
    "envelope",
    "bessel",
    "delta",
    "one-denom",
    "schur",
];

fn row(lemma: &str, n: usize, value: f64, ref_slope: f64, fitted: f64, pass: bool) -> LemmaRow {
    LemmaRow {
        lemma: lemma.to_string(),
        n,
        value,
        ref_slope,
        fitted_slope: fitted,
        pass,
    }
}

fn rate_rows(lemma: &str, ns: &[usize], vals: &[f64], target: f64, check: &Check, slope: f64) -> Vec<LemmaRow> {
    ns.iter()
        .zip(vals)
        .map(|(&n, &v)| row(lemma, n, v, target, slope, check.pass))
        .collect()
}

/// One lemma check over `ns` (ignored by the fixed-size checks).
pub fn lemma(id: &str, cfg: &ExperimentConfig, ns: &[usize]) -> Res<(Vec<LemmaRow>, Vec<Check>)> {
    let setup = Setup::from_config(cfg)?;
    let q = setup.quad;
    let tol = cfg.checks.slope_tol;
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    match id {
        "fejer-mass" => {
            let mut worst: f64 = 0.0;
            for n in [1usize, 64, 1024] {
                let m = kernels::fejer_mass(n, &q)?;
                let ok = (m - 1.0).abs() <= 1e-6;
                worst = worst.max((m - 1.0).abs());
                rows.push(row("fejer-mass", n, m, f64::NAN, f64::NAN, ok));
            }
            checks.push(Check::new(
                "fejer_mass",
                worst <= 1e-6,
                format!("max |mass - 1| = {worst:.3e} over n = 1, 64, 1024"),
            ));
        }
        "convolution" => {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, 0xc0));
            let mut worst: f64 = 0.0;
            for _ in 0..20 {
                let n = 1usize << rng.random_range(3..=8);
                let l = rng.random_range(-PI..PI);
                let m = rng.random_range(-PI..PI);
                let r = kernels::convolution_identity_residual(n, l, m, &q)?;
                worst = worst.max(r);
                rows.push(row("convolution", n, r, f64::NAN, f64::NAN, r < 1e-6));
            }
            checks.push(Check::new(
                "convolution_identity",
                worst < 1e-6,
                format!("max residual {worst:.3e} over 20 random (n, lambda, mu)"),
            ));
        }
        "envelope" => {
            let ns = [4usize, 16, 64, 256, 1024];
            let c = kernels::envelope_constants(&ns, 10_000);
            rows.push(row("envelope-h", 1024, c.c_h, f64::NAN, f64::NAN, c.c_h <= 4.0));
            rows.push(row("envelope-min", 1024, c.c_min, f64::NAN, f64::NAN, c.c_min <= 4.0));
            checks.push(Check::new(
                "dirichlet_envelope",
                c.c_h <= 4.0 && c.c_min <= 4.0,
                format!("C_H = {:.4}, C_min = {:.4} (limit 4)", c.c_h, c.c_min),
            ));
        }
        "bessel" => {
            let log_power = SpectralModel::power_law(0.4, SlowVaryingSpec::LogPower { c: 1.0, a: 1.0 })?;
            let points = [
                (SpectralModel::farima(0.2, 1.0)?, 32usize, 1.0),
                (log_power, 64, 0.3),
                (setup.model, 64, 0.5),
            ];
            let mut all = true;
            let mut ratios = Vec::new();
            for (m, n, l) in points {
                let b = kernels::bessel_check(&m, n, l, &q)?;
                all &= b.holds();
                let ratio = if b.rhs > 0.0 { b.lhs / b.rhs } else { 0.0 };
                ratios.push(format!("{ratio:.4}"));
                rows.push(row("bessel", n, ratio, f64::NAN, f64::NAN, b.holds()));
            }
            checks.push(Check::new(
                "bessel",
                all,
                format!("lhs/rhs = [{}] (need <= 1 + 1e-6)", ratios.join("; ")),
            ));
        }
        "delta" => {
            let vals = ns
                .iter()
                .map(|&n| kernels::delta_n(&setup.model, &setup.weight, n, &q))
                .collect::<quadclt_core::Result<Vec<f64>>>()?;
            if vals.iter().all(|v| *v == 0.0) {
                let pass = setup.weight == WeightModel::Unit;
                checks.push(Check::new("delta_slope", pass, "Delta_n vanishes identically"));
                rows.extend(ns.iter().map(|&n| row("delta", n, 0.0, f64::NAN, f64::NAN, pass)));
            } else {
                let target = setup.d() - 1.0;
                let (c, s) = slope_check("delta_slope", ns, &vals, target, tol);
                rows.extend(rate_rows("delta", ns, &vals, target, &c, s));
                checks.push(c);
            }
        }
        "one-denom" => {
            let unit = Profile::Weight(WeightModel::Unit);
            let vals = ns
                .iter()
                .map(|&n| kernels::one_denom_integral(&unit, 0.0, n, &q))
                .collect::<quadclt_core::Result<Vec<f64>>>()?;
            let (mut c, s) = slope_check("one_denom_unit_slope", ns, &vals, -0.5, tol);
            c.pass &= s <= -0.35;
            c.detail = format!("{} and at most -0.35", c.detail);
            rows.extend(rate_rows("one-denom-unit", ns, &vals, -0.5, &c, s));
            checks.push(c);

            let h = Profile::Density(setup.model);
            let gamma = h.exponent();
            let vals = ns
                .iter()
                .map(|&n| kernels::one_denom_sup(&h, &kernels::mu_grid(n, 32), n, &q))
                .collect::<quadclt_core::Result<Vec<f64>>>()?;
            let target = gamma - 0.5;
            let (c, s) = slope_check("one_denom_sup_slope", ns, &vals, target, tol);
            rows.extend(rate_rows("one-denom-sup", ns, &vals, target, &c, s));
            checks.push(c);
        }
        "schur" => {
            let pairs = [
                ("schur-white", SpectralModel::WhiteNoise, WeightModel::Unit),
                (
                    "schur-model",
                    setup.model,
                    WeightModel::power_law(cfg.schur_beta, SlowVaryingSpec::Constant { c: 1.0 }, 1.0)?,
                ),
            ];
            for (name, m, g) in pairs {
                let mut rel: f64 = 0.0;
                let mut vals = Vec::new();
                for &n in ns {
                    let r = kernels::schur_rowsup(&m, &g, n, &kernels::mu_grid(n, 32), &q)?;
                    rel = rel.max((r.schur - r.reduced).abs() / r.reduced);
                    vals.push(r.schur);
                }
                let target = m.alpha() + g.beta() - 1.0;
                let (mut c, s) = slope_check(&format!("{}_slope", name.replace('-', "_")), ns, &vals, target, tol);
                c.pass &= rel <= 1e-6;
                c.detail = format!("{}; weighted vs reduced form rel diff {rel:.2e}", c.detail);
                rows.extend(rate_rows(name, ns, &vals, target, &c, s));
                checks.push(c);
            }
        }
        other => {
            return Err(CliError::Config(format!(
                "lemma: unknown id {other:?} (expected one of {})",
                LEMMA_IDS.join(", ")
            )))
        }
    }
    Ok((rows, checks))
}

fn lemma_table(rows: &[LemmaRow]) -> Table {
    let mut t = Table::new("lemmas", &["lemma", "n", "value", "ref_slope", "fitted_slope", "pass"]);
    for r in rows {
        t.push(vec![
            r.lemma.clone(),
            r.n.to_string(),
            sig15(r.value),
            sig15(r.ref_slope),
            sig15(r.fitted_slope),
            r.pass.to_string(),
        ]);
    }
    t
}

/// Lemma checks for the given ids, in order.
pub fn lemmas(cfg: &ExperimentConfig, ids: &[&str]) -> Res<Report> {
    let mut rows = Vec::new();
    let mut checks = Vec::new();
    for id in ids {
        let (r, c) = lemma(id, cfg, &cfg.n_list)?;
        rows.extend(r);
        checks.extend(c);
    }
    Ok(Report {
        tables: vec![lemma_table(&rows)],
        checks,
    })
}

pub fn kernel_suite(cfg: &ExperimentConfig) -> Res<Report> {
    lemmas(cfg, &LEMMA_IDS)
}

pub fn whittle_config(cfg: &ExperimentConfig, setup: &Setup) -> Res<WhittleConfig> {
    let w = cfg.whittle;
    let mut wc = WhittleConfig::new(w.a, w.b, setup.model)?;
    wc.quad = setup.quad;
    wc.minimizer_tol = w.minimizer_tol;
    wc.riemann = w.riemann;
    Ok(wc)
}

pub fn whittle_mc(cfg: &ExperimentConfig) -> Res<Report> {
    let setup = Setup::from_config(cfg)?;
    let wc = whittle_config(cfg, &setup)?;
    let mut summaries: Vec<McSummary> = Vec::new();
    for &n in &cfg.n_list {
        summaries.push(mc_normality(
            &wc,
            &setup.model,
            n,
            cfg.replicates,
            mix_seed(cfg.master_seed, n as u64),
        )?);
    }
    let header: Vec<&str> = McSummary::CSV_HEADER.split(',').collect();
    let mut t = Table::new("whittle", &header);
    let mut tables = Vec::new();
    let mut checks = Vec::new();
    let c = &cfg.checks;
    for s in &summaries {
        t.push(s.csv_fields());
        checks.push(Check::new(
            format!("whittle_mean_n{}", s.n),
            s.mean_alpha_hat.within(s.alpha0, c.mean_se_k),
            format!(
                "mean alpha_hat {:.5} +- {:.5} vs alpha0 {} (z {:.2}; limit {})",
                s.mean_alpha_hat.value,
                s.mean_alpha_hat.se,
                s.alpha0,
                s.mean_alpha_hat.z(s.alpha0),
                c.mean_se_k
            ),
        ));
        let (z0, z1) = s.z_scores();
        let k = c.var_se_k;
        let exactly_one = (z0.abs() <= k) != (z1.abs() <= k);
        checks.push(Check::new(
            format!("whittle_variance_n{}", s.n),
            exactly_one,
            format!(
                "Var sqrt(n)(alpha_hat - alpha0) = {:.4} +- {:.4}; z vs 4pi/L2 {:.2}, vs 8pi/L2 {:.2}; adjudicated {}",
                s.var_scaled.value,
                s.var_scaled.se,
                z0,
                z1,
                s.adjudicated_label()
            ),
        ));
    }
    tables.push(t);
    if summaries.len() >= 4 {
        let ns: Vec<usize> = summaries.iter().map(|s| s.n).collect();
        let r: Vec<f64> = summaries.iter().map(|s| s.rmse).collect();
        checks.push(slope_check("whittle_rmse_slope", &ns, &r, -0.5, c.slope_tol).0);
    }
    if cfg.whittle.dump_estimates {
        let mut d = Table::new("whittle_estimates", &["n", "replicate", "alpha_hat"]);
        for s in &summaries {
            for (i, a) in s.alpha_hats.iter().enumerate() {
                d.push(vec![s.n.to_string(), i.to_string(), sig15(*a)]);
            }
        }
        tables.push(d);
    }
    Ok(Report { tables, checks })
}

/// Moments, distances (sizes within the dense cap), kernel lemmas and, with
/// at least 100 replicates, the Whittle study.
pub fn full_report(cfg: &ExperimentConfig) -> Res<Report> {
    let setup = Setup::from_config(cfg)?;
    let rows = moment_rows(&setup, &cfg.n_list)?;
    let mut report = Report {
        tables: vec![moments_table(&rows)],
        checks: variance_checks(&setup, &rows, &cfg.checks),
    };
    report.checks.extend(kappa4_checks(&setup, &rows, &cfg.checks));
    let cap = oracle::dense_cap();
    let small: Vec<usize> = cfg.n_list.iter().copied().filter(|&n| n <= cap).collect();
    if !small.is_empty() {
        report.merge(wasserstein_for(cfg, &setup, &small)?);
    }
    report.merge(kernel_suite(cfg)?);
    if cfg.replicates >= 100 {
        report.merge(whittle_mc(cfg)?);
    }
    Ok(report)
}

pub fn run(cfg: &ExperimentConfig) -> Res<Report> {
    match cfg.experiment {
        ExperimentKind::VarianceRate => variance_rate(cfg),
        ExperimentKind::Kappa4Rate => kappa4_rate(cfg),
        ExperimentKind::Wasserstein => wasserstein(cfg),
        ExperimentKind::Kernels => kernel_suite(cfg),
        ExperimentKind::WhittleMc => whittle_mc(cfg),
        ExperimentKind::FullReport => full_report(cfg),
    }
}
