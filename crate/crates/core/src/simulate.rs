//! Exact simulation of stationary Gaussian paths by circulant embedding.
//!
//! The covariance `r(0..n)` is embedded in the first row of a circulant of
//! power-of-two size `m ≥ 2(n-1)`. When that circulant is positive
//! semidefinite, `Re FFT(√(λ/m) Z)` for complex white noise `Z` has exactly
//! the Toeplitz covariance of `r`, and so does the imaginary part,
//! independently of the real one.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::spectra::CovSequence;

/// Relative tolerance below which negative circulant eigenvalues are clamped to zero.
pub const TOL_EMBED: f64 = 1e-12;
/// Number of times the embedding size may be doubled before giving up.
pub const MAX_DOUBLINGS: usize = 4;

/// Per-replicate seed: SplitMix64 finalizer applied to
/// `master + (index + 1) * 0x9E3779B97F4A7C15`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone)]
pub struct SamplerPlan {
    pub n: usize,
    pub m: usize,
    /// Eigenvalues of the embedding circulant, clamped at zero.
    pub circ_eigs: Vec<f64>,
    /// Smallest eigenvalue before clamping.
    pub min_eig: f64,
    pub cov_hash: u64,
    scale: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SamplerPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SamplerPlan")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("min_eig", &self.min_eig)
            .field("cov_hash", &self.cov_hash)
            .finish()
    }
}

/// A simulated path `X_1..X_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub x: Vec<f64>,
    pub seed: u64,
    pub plan_ref: u64,
}

impl Path {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// One column with header `x`, 15 significant digits.
    pub fn write_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "x")?;
        for v in &self.x {
            writeln!(w, "{}", crate::io::sig15(*v))?;
        }
        Ok(())
    }
}

/// Builds the circulant embedding for paths of length `n`.
///
/// Lags beyond `n - 1` are taken from `cov` when it has them and are zero
/// otherwise. The size is doubled up to [`MAX_DOUBLINGS`] times while the
/// embedding has eigenvalues below `-TOL_EMBED * max`.
pub fn plan_circulant(cov: &CovSequence, n: usize) -> Result<SamplerPlan> {
    if n == 0 {
        return Err(crate::error::domain("path length must be positive"));
    }
    if cov.max_lag() + 1 < n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: cov.r.len(),
        });
    }
    let base = (2 * (n - 1)).max(2).next_power_of_two();
    let mut planner = FftPlanner::new();
    let mut worst = (0.0, 0.0, base);
    for doubling in 0..=MAX_DOUBLINGS {
        let m = base << doubling;
        let half = m / 2;
        let mut row = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..=half.min(cov.max_lag()) {
            let v = if k < n || cov.max_lag() >= half { cov.r[k] } else { 0.0 };
            row[k].re = v;
            if k > 0 && k < m - k {
                row[m - k].re = v;
            }
        }
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let eigs: Vec<f64> = row.iter().map(|c| c.re).collect();
        let max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        if min >= -TOL_EMBED * max {
            let circ_eigs: Vec<f64> = eigs.iter().map(|&e| e.max(0.0)).collect();
            let scale = circ_eigs.iter().map(|&e| (e / m as f64).sqrt()).collect();
            return Ok(SamplerPlan {
                n,
                m,
                circ_eigs,
                min_eig: min,
                cov_hash: cov.fingerprint(),
                scale,
                fft,
            });
        }
        worst = (min, min / max, m);
    }
    Err(Error::NegativeEmbedding {
        min_eig: worst.0,
        relative: worst.1,
        size: worst.2,
    })
}

impl SamplerPlan {
    pub fn fingerprint(&self) -> u64 {
        crate::spectra::fnv1a([self.cov_hash, self.n as u64, self.m as u64].into_iter())
    }

    /// Fills `a` and `b` with two independent paths driven by `rng`.
    pub fn sample_pair_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        buf: &mut Vec<Complex64>,
        a: &mut [f64],
        b: &mut [f64],
    ) {
        buf.clear();
        buf.extend(self.scale.iter().map(|&s| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(s * re, s * im)
        }));
        self.fft.process(buf);
        for i in 0..self.n {
            a[i] = buf[i].re;
            b[i] = buf[i].im;
        }
    }

    /// Two independent paths from one seed.
    pub fn sample_pair(&self, seed: u64) -> (Path, Path) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut buf = Vec::with_capacity(self.m);
        let mut a = vec![0.0; self.n];
        let mut b = vec![0.0; self.n];
        self.sample_pair_into(&mut rng, &mut buf, &mut a, &mut b);
        let plan_ref = self.fingerprint();
        (
            Path { x: a, seed, plan_ref },
            Path { x: b, seed, plan_ref },
        )
    }
}

/// A Gaussian path with the plan's covariance; bit-identical for equal `(plan, seed)`.
pub fn sample_path(plan: &SamplerPlan, seed: u64) -> Path {
    plan.sample_pair(seed).0
}
