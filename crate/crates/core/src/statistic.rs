//! Periodogram and the centered integrated periodogram `F_n`.
//!
//! `F_n` is computed two ways. The time-domain route evaluates the quadratic
//! form `n^{-1/2}(XᵀG_nX − tr(Γ_nG_n))` exactly with an FFT Toeplitz product.
//! The frequency route integrates `g · I_n` by graded quadrature with the
//! periodogram evaluated at every node, and serves as an independent check.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::quadrature::{HalfGrid, Integrator, QuadratureSpec};
use crate::spectra::{CovSequence, SpectralModel, WeightFourier, WeightModel};
use crate::toeplitz::ToeplitzOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    TimeDomain,
    FrequencyDomain,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatisticResult {
    pub f_n: f64,
    /// `XᵀG_nX` (frequency route: `n ∫ g I_n`).
    pub quad_form: f64,
    /// `Σ_{|k|<n} (n − |k|) r(k) γ_g(k)`.
    pub centering: f64,
    pub route: Route,
}

/// `d_n(λ) = (2πn)^{-1/2} Σ_{t=1}^n x_t e^{itλ}`.
pub fn dft_ordinate(x: &[f64], lambda: f64) -> Complex64 {
    let n = x.len();
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    let z = Complex64::cis(lambda);
    // Horner: Σ x_t z^t = z (x_1 + z (x_2 + ... ))
    let mut acc = Complex64::new(0.0, 0.0);
    for &v in x.iter().rev() {
        acc = acc * z + v;
    }
    acc * z / (2.0 * PI * n as f64).sqrt()
}

/// `I_n(λ) = |d_n(λ)|²` on `grid`; uses the FFT when `grid` is the Fourier grid `2πj/n`.
pub fn periodogram(x: &[f64], grid: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n > 0 && grid.len() == n && is_fourier_grid(grid) {
        return periodogram_fourier(x);
    }
    grid.iter().map(|&l| dft_ordinate(x, l).norm_sqr()).collect()
}

fn is_fourier_grid(grid: &[f64]) -> bool {
    let n = grid.len() as f64;
    grid.iter()
        .enumerate()
        .all(|(j, &l)| (l - 2.0 * PI * j as f64 / n).abs() <= 1e-12)
}

/// `I_n(2πj/n)` for `j = 0..n`.
pub fn periodogram_fourier(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let norm = 1.0 / (2.0 * PI * n as f64);
    // index t runs 1..=n: the shift multiplies d_n by a unit phase, which |·|² ignores
    buf.iter().map(|c| c.norm_sqr() * norm).collect()
}

/// Periodogram at every node of a [`HalfGrid`].
///
/// Graded nodes are evaluated directly; for each Gauss offset `θ` the uniform
/// nodes `θ + 2πp/M` are obtained from one inverse FFT of length `M` of the
/// folded sequence `x_t e^{itθ}`.
pub fn periodogram_on_grid(x: &[f64], grid: &HalfGrid) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(grid.nodes.len());
    for &l in grid.graded_nodes() {
        out.push(dft_ordinate(x, l).norm_sqr());
    }
    let panels = grid.panels();
    let m = 2 * panels;
    let fft = FftPlanner::new().plan_fft_inverse(m);
    let norm = 1.0 / (2.0 * PI * n as f64);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for &theta in grid.offsets() {
        buf.iter_mut().for_each(|b| *b = Complex64::new(0.0, 0.0));
        for (i, &v) in x.iter().enumerate() {
            let t = i + 1;
            buf[t % m] += Complex64::cis(t as f64 * theta) * v;
        }
        fft.process(&mut buf);
        for b in &buf[1..panels] {
            out.push(b.norm_sqr() * norm);
        }
    }
    out
}

/// `E I_n(λ) = ∫ f(ω) Φ_n(λ − ω) dω` by graded quadrature.
pub fn mean_periodogram(model: &SpectralModel, lambda: f64, n: usize, quad: &QuadratureSpec) -> Result<f64> {
    model.validate()?;
    let integ = Integrator::new(*quad)?;
    let width = (PI / n as f64).min(PI);
    integ.integrate(
        |w: f64| model.density(w) * crate::kernels::fejer(n, lambda - w),
        -PI,
        PI,
        &[0.0, lambda],
        width,
    )
}

/// `E I_n(λ) = (2πn)^{-1} Σ_{|k|<n} (n − |k|) r(k) cos(kλ)`.
pub fn mean_periodogram_lagsum(cov: &CovSequence, lambda: f64, n: usize) -> Result<f64> {
    if cov.max_lag() + 1 < n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cov.r.len(),
        });
    }
    let mut s = n as f64 * cov.r[0];
    for k in 1..n {
        s += 2.0 * (n - k) as f64 * cov.r[k] * (k as f64 * lambda).cos();
    }
    Ok(s / (2.0 * PI * n as f64))
}

/// `tr(Γ_n G_n) = Σ_{|k|<n} (n − |k|) r(k) γ_g(k)`.
pub fn centering(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<f64> {
    check_lengths(cov, wf, n)?;
    let mut s = n as f64 * cov.r[0] * wf.gamma[0];
    for k in 1..n {
        s += 2.0 * (n - k) as f64 * cov.r[k] * wf.gamma[k];
    }
    Ok(s)
}

pub(crate) fn check_lengths(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<()> {
    if cov.max_lag() + 1 < n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cov.r.len(),
        });
    }
    if wf.max_lag() + 1 < n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: wf.gamma.len(),
        });
    }
    Ok(())
}

/// Precomputed time-domain `F_n` for repeated evaluation on paths of one length.
#[derive(Debug, Clone)]
pub struct QuadraticStatistic {
    n: usize,
    weight_op: ToeplitzOperator,
    centering: f64,
}

impl QuadraticStatistic {
    pub fn new(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<Self> {
        let centering = centering(cov, wf, n)?;
        Ok(Self {
            n,
            weight_op: ToeplitzOperator::new(&wf.gamma, n),
            centering,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn centering(&self) -> f64 {
        self.centering
    }

    /// `XᵀG_nX`, reusing scratch buffers.
    pub fn quad_form_with(&self, x: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>) -> f64 {
        self.weight_op.apply_with(x, out, buf);
        x.iter().zip(out.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<StatisticResult> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.n];
        let mut buf = Vec::new();
        let q = self.quad_form_with(x, &mut out, &mut buf);
        Ok(StatisticResult {
            f_n: (q - self.centering) / (self.n as f64).sqrt(),
            quad_form: q,
            centering: self.centering,
            route: Route::TimeDomain,
        })
    }
}

/// Time-domain `F_n = n^{-1/2}(XᵀG_nX − Σ_{|k|<n}(n−|k|) r(k) γ_g(k))`.
pub fn integrated_statistic(x: &[f64], cov: &CovSequence, wf: &WeightFourier) -> Result<StatisticResult> {
    QuadraticStatistic::new(cov, wf, x.len())?.eval(x)
}

/// Frequency-domain `F_n = √n [∫ g I_n − n^{-1} Σ (n−|k|) r(k) γ_g(k)]`.
pub fn integrated_statistic_freq(
    x: &[f64],
    weight: &WeightModel,
    cov: &CovSequence,
    wf: &WeightFourier,
    quad: &QuadratureSpec,
) -> Result<StatisticResult> {
    let n = x.len();
    let c = centering(cov, wf, n)?;
    let grid = HalfGrid::for_length(n, quad)?;
    let pg = periodogram_on_grid(x, &grid);
    let vals: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&pg)
        .map(|(&l, &i)| weight.weight(l) * i)
        .collect();
    let integral = grid.integrate_even_values(&vals);
    let nf = n as f64;
    Ok(StatisticResult {
        f_n: nf.sqrt() * (integral - c / nf),
        quad_form: nf * integral,
        centering: c,
        route: Route::FrequencyDomain,
    })
}

/// `replicates` independent draws of `F_n` from exact Gaussian paths.
///
/// Draw `2j` and `2j + 1` come from the two paths of seed `mix(master, j)`;
/// the result does not depend on the number of threads.
pub fn simulate_statistics(
    cov: &CovSequence,
    wf: &WeightFourier,
    n: usize,
    replicates: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    use rand::SeedableRng;
    use rayon::prelude::*;

    let plan = crate::simulate::plan_circulant(cov, n)?;
    let stat = QuadraticStatistic::new(cov, wf, n)?;
    let sn = (n as f64).sqrt();
    let pairs = replicates.div_ceil(2);
    let draws: Vec<[f64; 2]> = (0..pairs)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n], Vec::new(), Vec::new()),
            |(a, b, out, pbuf, sbuf), j| {
                let seed = crate::simulate::mix_seed(master_seed, j as u64);
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                plan.sample_pair_into(&mut rng, pbuf, a, b);
                let qa = stat.quad_form_with(a, out, sbuf);
                let qb = stat.quad_form_with(b, out, sbuf);
                [(qa - stat.centering) / sn, (qb - stat.centering) / sn]
            },
        )
        .collect();
    Ok(draws.into_iter().flatten().take(replicates).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{mix_seed, plan_circulant};
    use crate::spectra::{farima_autocov, weight_fourier, CovSource, SlowVaryingSpec};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn white(k: usize) -> CovSequence {
        let mut r = vec![0.0; k + 1];
        r[0] = 1.0;
        CovSequence::new(r, CovSource::ClosedForm)
    }

    fn random_path(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    #[test]
    fn dft_examples() {
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        assert_abs_diff_eq!(dft_ordinate(&x, 0.0).re, 1.0 / (20.0 * PI).sqrt(), epsilon = 1e-15);
        let ones = vec![1.0; 100];
        let d = dft_ordinate(&ones, 0.0);
        assert_abs_diff_eq!(d.re, 3.989_422_804, epsilon = 1e-9);
        assert_abs_diff_eq!(d.im, 0.0, epsilon = 1e-15);
        let x = random_path(37, 3);
        for l in [0.3, 1.7, -2.9] {
            let a = dft_ordinate(&x, l);
            let b = dft_ordinate(&x, -l);
            assert_abs_diff_eq!((a - b.conj()).norm(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn periodogram_of_impulse_is_flat() {
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        let grid: Vec<f64> = (0..16).map(|j| 2.0 * PI * j as f64 / 16.0).collect();
        for v in periodogram(&x, &grid) {
            assert_abs_diff_eq!(v, 1.0 / (32.0 * PI), epsilon = 1e-15);
        }
        for v in periodogram(&x, &[0.1, 2.0]) {
            assert_abs_diff_eq!(v, 1.0 / (32.0 * PI), epsilon = 1e-15);
        }
    }

    #[test]
    fn discrete_parseval() {
        let x = random_path(64, 11);
        let grid: Vec<f64> = (0..64).map(|j| 2.0 * PI * j as f64 / 64.0).collect();
        let pg = periodogram(&x, &grid);
        let lhs = 2.0 * PI / 64.0 * pg.iter().sum::<f64>();
        let rhs = x.iter().map(|v| v * v).sum::<f64>() / 64.0;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
        // FFT and direct paths agree
        let direct: Vec<f64> = grid.iter().map(|&l| dft_ordinate(&x, l).norm_sqr()).collect();
        for (a, b) in pg.iter().zip(&direct) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
        let p = periodogram(&x, &[0.4, -0.4]);
        assert_abs_diff_eq!(p[0], p[1], epsilon = 1e-15);
    }

    #[test]
    fn grid_periodogram_matches_direct_evaluation() {
        let x = random_path(50, 5);
        let grid = HalfGrid::new(50, &QuadratureSpec { dyadic_levels: 10, ..Default::default() }).unwrap();
        let fast = periodogram_on_grid(&x, &grid);
        for (l, v) in grid.nodes.iter().zip(&fast) {
            assert_abs_diff_eq!(*v, dft_ordinate(&x, *l).norm_sqr(), epsilon = 1e-13);
        }
    }

    #[test]
    fn white_noise_mean_periodogram() {
        let q = QuadratureSpec::default();
        for (l, n) in [(1.0, 8), (0.2, 64), (-2.5, 33)] {
            let v = mean_periodogram(&SpectralModel::WhiteNoise, l, n, &q).unwrap();
            assert_abs_diff_eq!(v, 1.0 / (2.0 * PI), epsilon = 1e-10);
        }
    }

    #[test]
    fn mean_periodogram_routes_agree_and_converge() {
        let q = QuadratureSpec::default();
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let f1 = m.density(1.0);
        let mut prev = f64::INFINITY;
        for j in 7..=12 {
            let n = 1usize << j;
            let cov = farima_autocov(0.2, 1.0, n).unwrap();
            let a = mean_periodogram(&m, 1.0, n, &q).unwrap();
            let b = mean_periodogram_lagsum(&cov, 1.0, n).unwrap();
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
            let err = (a - f1).abs();
            assert!(err < prev, "n={n}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn mean_periodogram_matches_monte_carlo() {
        let n = 256;
        let cov = farima_autocov(0.2, 1.0, n - 1).unwrap();
        let plan = plan_circulant(&cov, n).unwrap();
        let reps = 10_000u64;
        let mut vals = Vec::with_capacity(reps as usize);
        for i in 0..reps / 2 {
            let (a, b) = plan.sample_pair(mix_seed(77, i));
            vals.push(dft_ordinate(&a.x, 1.0).norm_sqr());
            vals.push(dft_ordinate(&b.x, 1.0).norm_sqr());
        }
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let se = (var / reps as f64).sqrt();
        let exact =
            mean_periodogram(&SpectralModel::farima(0.2, 1.0).unwrap(), 1.0, n, &QuadratureSpec::default()).unwrap();
        assert!((mean - exact).abs() < 4.0 * se, "{mean} vs {exact} (se {se})");
    }

    #[test]
    fn hand_computed_statistic() {
        let r = integrated_statistic(&[1.0, 0.0, 0.0, 0.0], &white(3), &WeightFourier::unit(3)).unwrap();
        assert_abs_diff_eq!(r.f_n, -1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.quad_form, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.centering, 4.0, epsilon = 1e-15);

        let f = integrated_statistic_freq(
            &[1.0, 0.0, 0.0, 0.0],
            &WeightModel::Unit,
            &white(3),
            &WeightFourier::unit(3),
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(f.f_n, -1.5, epsilon = 1e-12);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            integrated_statistic(&[1.0; 8], &white(3), &WeightFourier::unit(7)),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn routes_agree_on_farima_paths() {
        let n = 512;
        let q = QuadratureSpec::default();
        let cov = farima_autocov(0.2, 1.0, n - 1).unwrap();
        let wf = WeightFourier::unit(n - 1);
        let plan = plan_circulant(&cov, n).unwrap();
        for i in 0..50u64 {
            let (a, b) = plan.sample_pair(mix_seed(3, i));
            for p in [a, b] {
                let t = integrated_statistic(&p.x, &cov, &wf).unwrap();
                let f = integrated_statistic_freq(&p.x, &WeightModel::Unit, &cov, &wf, &q).unwrap();
                let rel = (t.f_n - f.f_n).abs() / t.f_n.abs().max(1e-3);
                assert!(rel < 1e-6, "rep {i}: {} vs {}", t.f_n, f.f_n);
            }
        }
    }

    #[test]
    fn routes_agree_with_singular_weight() {
        let n = 256;
        let q = QuadratureSpec::default();
        let g = WeightModel::power_law(0.3, SlowVaryingSpec::Constant { c: 1.0 }, 1.0).unwrap();
        let cov = farima_autocov(0.1, 1.0, n - 1).unwrap();
        let wf = weight_fourier(&g, n - 1, &q).unwrap();
        let plan = plan_circulant(&cov, n).unwrap();
        for i in 0..5u64 {
            let p = crate::simulate::sample_path(&plan, mix_seed(8, i));
            let t = integrated_statistic(&p.x, &cov, &wf).unwrap();
            let f = integrated_statistic_freq(&p.x, &g, &cov, &wf, &q).unwrap();
            assert!((t.f_n - f.f_n).abs() < 1e-7, "{} vs {}", t.f_n, f.f_n);
        }
    }

    #[test]
    fn centering_identity() {
        // ∫ g E I_n = n^{-1} Σ (n−|k|) r(k) γ_g(k)
        let n = 64;
        let q = QuadratureSpec::default();
        let m = SpectralModel::farima(0.2, 1.0).unwrap();
        let g = WeightModel::power_law(0.3, SlowVaryingSpec::Constant { c: 1.0 }, 1.0).unwrap();
        let cov = farima_autocov(0.2, 1.0, n - 1).unwrap();
        let wf = weight_fourier(&g, n - 1, &q).unwrap();
        let integ = Integrator::new(q).unwrap();
        let lhs = integ
            .integrate_even(
                |l| g.weight(l) * mean_periodogram_lagsum(&cov, l, n).unwrap(),
                &[],
                PI / n as f64,
            )
            .unwrap();
        let rhs = centering(&cov, &wf, n).unwrap() / n as f64;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-9);
        let _ = m;
    }

    #[test]
    fn white_noise_statistic_moments() {
        let n = 64;
        let cov = white(n - 1);
        let stat = QuadraticStatistic::new(&cov, &WeightFourier::unit(n - 1), n).unwrap();
        let plan = plan_circulant(&cov, n).unwrap();
        let reps = 100_000u64;
        let mut v = Vec::with_capacity(reps as usize);
        for i in 0..reps / 2 {
            let (a, b) = plan.sample_pair(mix_seed(21, i));
            v.push(stat.eval(&a.x).unwrap().f_n);
            v.push(stat.eval(&b.x).unwrap().f_n);
        }
        let m = v.iter().sum::<f64>() / reps as f64;
        let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
        let m4 = v.iter().map(|x| (x - m).powi(4)).sum::<f64>() / reps as f64;
        assert!(m.abs() < 4.0 * (var / reps as f64).sqrt(), "mean {m}");
        let se_var = ((m4 - var * var) / reps as f64).sqrt();
        assert!((var - 2.0).abs() < 4.0 * se_var, "var {var}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn scale_equivariance(c in 0.1f64..5.0, seed in 0u64..1000) {
                let n = 32;
                let x = random_path(n, seed);
                let cov = farima_autocov(0.2, 1.0, n - 1).unwrap();
                let wf = WeightFourier::new((0..n).map(|k| 1.0 / (1.0 + k as f64)).collect());
                let a = integrated_statistic(&x, &cov, &wf).unwrap();
                let y: Vec<f64> = x.iter().map(|v| c * v).collect();
                let b = integrated_statistic(&y, &cov, &wf).unwrap();
                prop_assert!((b.quad_form - c * c * a.quad_form).abs() < 1e-10 * (1.0 + a.quad_form.abs()) * c * c);
                prop_assert_eq!(a.centering, b.centering);
            }
        }
    }

    #[test]
    fn simulated_draws_match_paths() {
        let cov = crate::spectra::farima_autocov(0.2, 1.0, 64).unwrap();
        let wf = WeightFourier::unit(64);
        let draws = simulate_statistics(&cov, &wf, 64, 5, 77).unwrap();
        assert_eq!(draws.len(), 5);
        let plan = crate::simulate::plan_circulant(&cov, 64).unwrap();
        let (a, b) = plan.sample_pair(crate::simulate::mix_seed(77, 1));
        let fa = integrated_statistic(&a.x, &cov, &wf).unwrap().f_n;
        let fb = integrated_statistic(&b.x, &cov, &wf).unwrap().f_n;
        assert_eq!(draws[2], fa);
        assert_eq!(draws[3], fb);
        assert_eq!(draws, simulate_statistics(&cov, &wf, 64, 5, 77).unwrap());
    }
}
