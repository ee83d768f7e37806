//! Dirichlet and Fejér kernels and the operator kernels built from them.
//!
//! Every quantity here is computed directly from its defining integral so
//! that the rates claimed for it can be checked by regression on `n`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::quadrature::{GaussLegendre, Integrator, QuadratureSpec};
use crate::spectra::{SpectralModel, WeightModel};

/// `D_n(ω) = (2πn)^{-1/2} Σ_{t=1}^n e^{itω}` in closed form.
pub fn dirichlet(n: usize, omega: f64) -> Complex64 {
    let nf = n as f64;
    let w = wrap(omega);
    let s = (0.5 * w).sin();
    let amp = if s == 0.0 {
        (nf / (2.0 * PI)).sqrt()
    } else {
        (0.5 * nf * w).sin() / ((2.0 * PI * nf).sqrt() * s)
    };
    Complex64::cis(0.5 * (nf + 1.0) * w) * amp
}

/// `D_n(ω)` by the direct sum.
pub fn dirichlet_direct(n: usize, omega: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for t in 1..=n {
        acc += Complex64::cis(t as f64 * omega);
    }
    acc / (2.0 * PI * n as f64).sqrt()
}

/// `Φ_n(ω) = |D_n(ω)|²`.
pub fn fejer(n: usize, omega: f64) -> f64 {
    let nf = n as f64;
    let w = wrap(omega);
    let s = (0.5 * w).sin();
    if s == 0.0 {
        return nf / (2.0 * PI);
    }
    let r = (0.5 * nf * w).sin() / s;
    r * r / (2.0 * PI * nf)
}

/// `H_n(ω) = √n / (1 + n|ω|)`.
pub fn envelope(n: usize, omega: f64) -> f64 {
    let nf = n as f64;
    nf.sqrt() / (1.0 + nf * omega.abs())
}

/// Representative of `ω` in `[-π, π]`.
fn wrap(omega: f64) -> f64 {
    if omega.abs() <= PI {
        omega
    } else {
        omega - 2.0 * PI * (omega / (2.0 * PI)).round()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub n: usize,
    pub omega: f64,
    pub d_n: Complex64,
    pub phi_n: f64,
    pub h_n: f64,
}

pub fn kernel_eval(n: usize, omega: f64) -> KernelPoint {
    let d_n = dirichlet(n, omega);
    KernelPoint {
        n,
        omega,
        d_n,
        phi_n: d_n.norm_sqr(),
        h_n: envelope(n, wrap(omega)),
    }
}

/// Smallest constants with `|D_n| ≤ C H_n` and `|D_n| ≤ C min(√n, 1/(√n|ω|))`
/// over `points` equispaced frequencies in `[-π, π]` for every `n` given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConstants {
    pub c_h: f64,
    pub c_min: f64,
}

pub fn envelope_constants(ns: &[usize], points: usize) -> EnvelopeConstants {
    let points = points.max(2);
    let mut c_h: f64 = 0.0;
    let mut c_min: f64 = 0.0;
    for &n in ns {
        let nf = n as f64;
        for j in 0..points {
            let w = -PI + 2.0 * PI * j as f64 / (points - 1) as f64;
            let d = dirichlet(n, w).norm();
            c_h = c_h.max(d / envelope(n, w));
            let m = if w == 0.0 {
                nf.sqrt()
            } else {
                nf.sqrt().min(1.0 / (nf.sqrt() * w.abs()))
            };
            c_min = c_min.max(d / m);
        }
    }
    EnvelopeConstants { c_h, c_min }
}

/// `∫ Φ_n`.
pub fn fejer_mass(n: usize, quad: &QuadratureSpec) -> Result<f64> {
    let integ = Integrator::new(*quad)?;
    integ.integrate(|w: f64| fejer(n, w), -PI, PI, &[], PI / n as f64)
}

/// `|∫ D_n(λ−ω) D_n(ω−μ) dω − √(2π/n) D_n(λ−μ)|`.
pub fn convolution_identity_residual(n: usize, lambda: f64, mu: f64, quad: &QuadratureSpec) -> Result<f64> {
    let integ = Integrator::new(*quad)?;
    let lhs: Complex64 = integ.integrate(
        |w: f64| dirichlet(n, lambda - w) * dirichlet(n, w - mu),
        -PI,
        PI,
        &[],
        PI / n as f64,
    )?;
    let rhs = dirichlet(n, lambda - mu) * (2.0 * PI / n as f64).sqrt();
    Ok((lhs - rhs).norm())
}

/// A spectral density or a weight, as the profile `h` in the kernel integrals.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Density(SpectralModel),
    Weight(WeightModel),
}

impl Profile {
    #[inline]
    pub fn eval(&self, lambda: f64) -> f64 {
        match self {
            Profile::Density(m) => m.density(lambda),
            Profile::Weight(g) => g.weight(lambda),
        }
    }

    /// Singularity exponent at 0.
    pub fn exponent(&self) -> f64 {
        match self {
            Profile::Density(m) => m.alpha(),
            Profile::Weight(g) => g.beta(),
        }
    }

    /// Points in `(-π, π)` other than 0 where `|h|` has a kink.
    fn kinks(&self) -> Vec<f64> {
        match self {
            Profile::Weight(WeightModel::LogScore(_)) => vec![-1.0, 1.0],
            _ => Vec::new(),
        }
    }
}

/// `A_{n,h}(λ,μ) = ∫ h(ω) D_n(λ−ω) D_n(ω−μ) dω`.
pub fn a_nh(h: &Profile, n: usize, lambda: f64, mu: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    let integ = Integrator::new(*quad)?;
    integ.integrate(
        |w: f64| dirichlet(n, lambda - w) * dirichlet(n, w - mu) * h.eval(w),
        -PI,
        PI,
        &[0.0],
        PI / n as f64,
    )
}

/// `E_{n,f}(λ,μ) = ∫ (f(ω) − f(λ)) D_n(λ−ω) D_n(ω−μ) dω`.
pub fn e_nf(model: &SpectralModel, n: usize, lambda: f64, mu: f64, quad: &QuadratureSpec) -> Result<Complex64> {
    e_nf_with(&Integrator::new(*quad)?, model, n, lambda, mu)
}

fn e_nf_with(integ: &Integrator, model: &SpectralModel, n: usize, lambda: f64, mu: f64) -> Result<Complex64> {
    if lambda == 0.0 {
        return Err(domain("E_{n,f}(λ, μ) needs λ ≠ 0"));
    }
    let fl = model.density(lambda);
    integ.integrate(
        |w: f64| dirichlet(n, lambda - w) * dirichlet(n, w - mu) * (model.density(w) - fl),
        -PI,
        PI,
        &[0.0],
        PI / n as f64,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselCheck {
    /// `∫ |E_{n,f}(λ,μ)|² dμ`.
    pub lhs: f64,
    /// `(2π/n) ∫ |f(ω) − f(λ)|² Φ_n(λ−ω) dω`.
    pub rhs: f64,
}

impl BesselCheck {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-6)
    }
}

/// Both sides of the Bessel bound for `E_{n,f}(λ, ·)`.
///
/// `μ ↦ E_{n,f}(λ,μ)` is a trigonometric polynomial of degree below `n`, so
/// the outer integral uses uniform panels of width `π/n` without grading.
pub fn bessel_check(model: &SpectralModel, n: usize, lambda: f64, quad: &QuadratureSpec) -> Result<BesselCheck> {
    let integ = Integrator::new(*quad)?;
    let (nodes, weights) = uniform_rule(integ.rule(), -PI, PI, PI / n as f64);
    let vals = nodes
        .par_iter()
        .map(|&mu| e_nf_with(&integ, model, n, lambda, mu).map(|e| e.norm_sqr()))
        .collect::<Result<Vec<f64>>>()?;
    let lhs = vals.iter().zip(&weights).map(|(v, w)| v * w).sum();
    let fl = model.density(lambda);
    let rhs = integ.integrate(
        |w: f64| (model.density(w) - fl).powi(2) * fejer(n, lambda - w),
        -PI,
        PI,
        &[0.0],
        PI / n as f64,
    )? * 2.0
        * PI
        / n as f64;
    Ok(BesselCheck { lhs, rhs })
}

/// `∫ |E_{n,f}(λ,μ)|² dμ` through its Fourier coefficients:
/// `n^{-1} Σ_{t=1}^n |∫ (f(ω) − f(λ)) D_n(λ−ω) e^{itω} dω|²`.
pub fn bessel_lhs_parseval(model: &SpectralModel, n: usize, lambda: f64, quad: &QuadratureSpec) -> Result<f64> {
    let integ = Integrator::new(*quad)?;
    let fl = model.density(lambda);
    let terms = (1..=n)
        .into_par_iter()
        .map(|t| {
            let tf = t as f64;
            integ
                .integrate(
                    |w: f64| dirichlet(n, lambda - w) * Complex64::cis(tf * w) * (model.density(w) - fl),
                    -PI,
                    PI,
                    &[0.0],
                    PI / n as f64,
                )
                .map(|c: Complex64| c.norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum::<f64>() / n as f64)
}

/// `Δ_n = ∫∫ f(λ) |g(λ) − g(μ)| H_n²(λ−μ) dλ dμ`.
pub fn delta_n(model: &SpectralModel, weight: &WeightModel, n: usize, quad: &QuadratureSpec) -> Result<f64> {
    if model.alpha() + weight.beta() >= 1.0 {
        return Err(domain(format!(
            "Δ_n needs α + β < 1, got {}",
            model.alpha() + weight.beta()
        )));
    }
    let integ = Integrator::new(*quad)?;
    let inner = |lambda: f64| -> Result<f64> {
        let gl = weight.weight(lambda);
        integ.integrate(
            |mu: f64| (gl - weight.weight(mu)).abs() * envelope(n, lambda - mu).powi(2),
            -PI,
            PI,
            &[0.0, lambda, -lambda],
            PI / 4.0,
        )
    };
    // the integrand is invariant under (λ, μ) ↦ (−λ, −μ)
    let err = std::cell::RefCell::new(None);
    let v = integ.integrate(
        |lambda: f64| match inner(lambda) {
            Ok(i) => model.density(lambda) * i,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        },
        0.0,
        PI,
        &[0.0],
        PI / 4.0,
    )?;
    match err.into_inner() {
        Some(e) => Err(e),
        None => Ok(2.0 * v),
    }
}

/// `∫ |h(λ)| |D_n(λ−μ)| dλ`, with panels cut at the zeros of `D_n(· − μ)`.
fn abs_dirichlet_integral(
    integ: &Integrator,
    h: impl Fn(f64) -> f64,
    kinks: &[f64],
    singular_at_zero: bool,
    n: usize,
    mu: f64,
) -> Result<f64> {
    let step = 2.0 * PI / n as f64;
    let mut cuts = vec![-PI, PI, 0.0];
    cuts.extend(kinks.iter().copied().filter(|k| k.abs() < PI));
    let j_lo = ((-PI - mu) / step).ceil() as i64;
    let j_hi = ((PI - mu) / step).floor() as i64;
    for j in j_lo..=j_hi {
        if j.rem_euclid(n as i64) != 0 {
            let z = mu + j as f64 * step;
            if z > -PI && z < PI {
                cuts.push(z);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let f = |l: f64| h(l).abs() * dirichlet(n, l - mu).norm();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if singular_at_zero && (a == 0.0 || b == 0.0) {
            total += integ.integrate(f, a, b, &[0.0], b - a)?;
        } else {
            total += integ.uniform(&f, a, b, b - a);
        }
    }
    Ok(total)
}

/// `∫ |h(λ) D_n(λ−μ)| dλ`.
pub fn one_denom_integral(h: &Profile, mu: f64, n: usize, quad: &QuadratureSpec) -> Result<f64> {
    let gamma = h.exponent();
    if !(0.0..1.0).contains(&gamma) {
        return Err(domain(format!("one-denominator integral needs γ in [0, 1), got {gamma}")));
    }
    let integ = Integrator::new(*quad)?;
    abs_dirichlet_integral(&integ, |l| h.eval(l), &h.kinks(), gamma > 0.0 || !is_constant(h), n, mu)
}

fn is_constant(h: &Profile) -> bool {
    matches!(
        h,
        Profile::Density(SpectralModel::WhiteNoise) | Profile::Weight(WeightModel::Unit)
    )
}

/// `sup_μ ∫ |h(λ) D_n(λ−μ)| dλ` over `mu_grid`.
pub fn one_denom_sup(h: &Profile, mu_grid: &[f64], n: usize, quad: &QuadratureSpec) -> Result<f64> {
    let vals = mu_grid
        .par_iter()
        .map(|&mu| one_denom_integral(h, mu, n, quad))
        .collect::<Result<Vec<f64>>>()?;
    Ok(vals.into_iter().fold(0.0, f64::max))
}

/// `m` equispaced points in `(0, π]` together with `π 2^{-k}` down to about `1/(16n)`.
pub fn mu_grid(n: usize, m: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=m).map(|j| PI * j as f64 / m as f64).collect();
    let levels = (16.0 * PI * n as f64).log2().ceil() as i32;
    g.extend((1..=levels).map(|k| PI * 0.5f64.powi(k)));
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchurRow {
    /// `max_μ p(μ)^{-1} ∫ |ℓ_n^{(0)}(λ,μ)| p(λ) dλ`, `p = √(f|g|)`.
    pub schur: f64,
    /// `max_μ √(2π/n) ∫ f(λ) |g(λ) D_n(λ−μ)| dλ`.
    pub reduced: f64,
    pub argmax_mu: f64,
}

/// Weighted Schur row sums of `ℓ_n^{(0)}(λ,μ) = √(2π/n) √(f(λ)f(μ)g(λ)g(μ)) D_n(λ−μ)`.
pub fn schur_rowsup(
    model: &SpectralModel,
    weight: &WeightModel,
    n: usize,
    mu_grid: &[f64],
    quad: &QuadratureSpec,
) -> Result<SchurRow> {
    if model.alpha() + weight.beta() >= 1.0 {
        return Err(domain("f|g| is not integrable"));
    }
    let integ = Integrator::new(*quad)?;
    let kinks = Profile::Weight(weight.clone()).kinks();
    let scale = (2.0 * PI / n as f64).sqrt();
    let p = |l: f64| (model.density(l) * weight.weight(l).abs()).sqrt();
    let rows = mu_grid
        .par_iter()
        .filter(|&&mu| p(mu) > 0.0)
        .map(|&mu| {
            let pm = p(mu);
            let schur = abs_dirichlet_integral(&integ, |l| scale * pm * p(l) * p(l), &kinks, true, n, mu)? / pm;
            let reduced =
                scale * abs_dirichlet_integral(&integ, |l| model.density(l) * weight.weight(l), &kinks, true, n, mu)?;
            Ok((mu, schur, reduced))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = SchurRow {
        schur: 0.0,
        reduced: 0.0,
        argmax_mu: f64::NAN,
    };
    for (mu, s, r) in rows {
        if r > best.reduced {
            best.reduced = r;
            best.argmax_mu = mu;
        }
        best.schur = best.schur.max(s);
    }
    Ok(best)
}

/// Nodes and weights of uniform Gauss panels of width at most `width` on `[lo, hi]`.
fn uniform_rule(rule: &GaussLegendre, lo: f64, hi: f64, width: f64) -> (Vec<f64>, Vec<f64>) {
    let m = (((hi - lo) / width).ceil() as usize).max(1);
    let h = (hi - lo) / m as f64;
    let mut nodes = Vec::with_capacity(m * rule.len());
    let mut weights = Vec::with_capacity(m * rule.len());
    for j in 0..m {
        let mid = lo + (j as f64 + 0.5) * h;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            nodes.push(mid + 0.5 * h * x);
            weights.push(0.5 * h * w);
        }
    }
    (nodes, weights)
}

/// One line of a lemma-check report.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRow {
    pub lemma: String,
    pub n: usize,
    pub value: f64,
    pub ref_slope: f64,
    pub fitted_slope: f64,
    pub pass: bool,
}

pub fn write_lemma_csv(rows: &[LemmaRow], mut w: impl Write) -> std::io::Result<()> {
    use crate::io::sig15;
    writeln!(w, "lemma,n,value,ref_slope,fitted_slope,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.lemma,
            r.n,
            sig15(r.value),
            sig15(r.ref_slope),
            sig15(r.fitted_slope),
            r.pass
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::SlowVaryingSpec;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn dirichlet_examples() {
        let p = kernel_eval(100, 0.0);
        assert_abs_diff_eq!(p.d_n.re, 3.989_422_804_014_327, epsilon = 1e-12);
        assert_abs_diff_eq!(p.d_n.im, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(kernel_eval(4, PI).d_n.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.h_n, 10.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.phi_n, 100.0 / (2.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let n = rng.random_range(1..300);
            let w = rng.random_range(-7.0..7.0);
            let a = dirichlet(n, w);
            let b = dirichlet_direct(n, w);
            assert!((a - b).norm() < 1e-12, "n={n} w={w}: {a} vs {b}");
            assert_abs_diff_eq!(fejer(n, w), b.norm_sqr(), epsilon = 1e-11);
        }
    }

    #[test]
    fn envelope_constant_is_small() {
        let c = envelope_constants(&[4, 16, 64, 256, 1024], 10_000);
        assert!(c.c_h <= 4.0, "{c:?}");
        assert!(c.c_min <= 4.0, "{c:?}");
        assert!(c.c_h > 0.3);
    }

    #[test]
    fn fejer_has_unit_mass() {
        assert_abs_diff_eq!(fejer_mass(1, &q()).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fejer_mass(64, &q()).unwrap(), 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fejer_mass(1024, &q()).unwrap(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn convolution_identity() {
        assert!(convolution_identity_residual(8, 0.0, 0.0, &q()).unwrap() < 1e-10);
        assert!(convolution_identity_residual(64, 0.3, -1.1, &q()).unwrap() < 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let l = rng.random_range(-PI..PI);
            let m = rng.random_range(-PI..PI);
            assert!(convolution_identity_residual(256, l, m, &q()).unwrap() < 1e-6);
        }
    }

    #[test]
    fn e_nf_vanishes_for_white_noise() {
        for (l, m) in [(0.5, 0.8), (-1.0, 2.0), (3.0, 3.0)] {
            assert!(e_nf(&SpectralModel::WhiteNoise, 32, l, m, &q()).unwrap().norm() < 1e-12);
        }
        assert!(e_nf(&SpectralModel::WhiteNoise, 32, 0.0, 1.0, &q()).is_err());
    }

    #[test]
    fn a_decomposes_into_leading_term_and_e() {
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let n = 64;
        for (l, mu) in [(0.5, 0.8), (1.3, -0.2), (0.05, 0.05)] {
            let a = a_nh(&Profile::Density(m), n, l, mu, &q()).unwrap();
            let e = e_nf(&m, n, l, mu, &q()).unwrap();
            let lead = dirichlet(n, l - mu) * ((2.0 * PI / n as f64).sqrt() * m.density(l));
            assert!((a - lead - e).norm() < 1e-8, "{a} {lead} {e}");
        }
    }

    #[test]
    fn e_nf_fixture() {
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let e = e_nf(&m, 64, 0.5, 0.8, &q()).unwrap();
        assert_abs_diff_eq!(e.re, E_NF_FIXTURE.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.im, E_NF_FIXTURE.1, epsilon = 1e-9);
    }

    // Farima d=0.2, n=64, (λ, μ) = (0.5, 0.8)
    const E_NF_FIXTURE: (f64, f64) = (1.099_160_906_689_742e-3, -3.706_315_870_096_285e-4);

    #[test]
    fn bessel_white_noise_is_zero() {
        let b = bessel_check(&SpectralModel::WhiteNoise, 16, 1.0, &q()).unwrap();
        assert!(b.lhs.abs() < 1e-20 && b.rhs.abs() < 1e-20, "{b:?}");
        assert!(b.holds());
    }

    #[test]
    fn bessel_farima() {
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let b = bessel_check(&m, 32, 1.0, &q()).unwrap();
        assert!(b.lhs > 0.0 && b.rhs > 0.0);
        assert!(b.holds(), "{b:?}");
        let p = bessel_lhs_parseval(&m, 32, 1.0, &q()).unwrap();
        assert_abs_diff_eq!(b.lhs, p, epsilon = 1e-10 * p.max(1.0));
    }

    #[test]
    fn bessel_log_power() {
        let m = SpectralModel::power_law(0.4, SlowVaryingSpec::LogPower { c: 1.0, a: 1.0 }).unwrap();
        let b = bessel_check(&m, 64, 0.3, &q()).unwrap();
        assert!(b.lhs > 0.0);
        assert!(b.holds(), "{b:?}");
    }

    #[test]
    fn delta_unit_weight_is_zero() {
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        assert_eq!(delta_n(&m, &WeightModel::Unit, 64, &q()).unwrap(), 0.0);
        let g = WeightModel::power_law(0.7, SlowVaryingSpec::Constant { c: 1.0 }, 1.0).unwrap();
        assert!(delta_n(&SpectralModel::farima(0.2, 1.0).unwrap(), &g, 64, &q()).is_err());
    }

    #[test]
    fn one_denom_examples() {
        let unit = Profile::Weight(WeightModel::Unit);
        // ∫|D_1| = 2π/√(2π)
        assert_abs_diff_eq!(
            one_denom_integral(&unit, 0.0, 1, &q()).unwrap(),
            (2.0 * PI).sqrt(),
            epsilon = 1e-12
        );
        let v = one_denom_integral(&unit, 0.0, 64, &q()).unwrap();
        let lobes = one_denom_integral(&unit, 0.3, 64, &q()).unwrap();
        assert!(v > 0.0 && lobes > 0.0);
        let h = Profile::Weight(WeightModel::power_law(0.5, SlowVaryingSpec::Constant { c: 1.0 }, 1.0).unwrap());
        let a = one_denom_integral(&h, 0.1, 256, &q()).unwrap();
        let fine = QuadratureSpec::new(400, 32, 1e-12).unwrap();
        let b = one_denom_integral(&h, 0.1, 256, &fine).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-9 * b);
    }

    #[test]
    fn schur_forms_agree() {
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let g = WeightModel::power_law(0.05, SlowVaryingSpec::Constant { c: 1.0 }, 1.0).unwrap();
        let r = schur_rowsup(&m, &g, 128, &mu_grid(128, 32), &q()).unwrap();
        assert_abs_diff_eq!(r.schur, r.reduced, epsilon = 1e-10 * r.reduced);
        assert!(r.argmax_mu < 0.1);
    }

    #[test]
    fn lemma_csv_format() {
        let mut out = Vec::new();
        write_lemma_csv(
            &[LemmaRow {
                lemma: "fejer-mass".into(),
                n: 64,
                value: 1.0,
                ref_slope: 0.0,
                fitted_slope: 0.0,
                pass: true,
            }],
            &mut out,
        )
        .unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().nth(1).unwrap(), "fejer-mass,64,1.00000000000000e0,0,0,true");
    }
}
