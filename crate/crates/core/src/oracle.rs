//! Exact finite-`n` law of `F_n` through Toeplitz trace identities.
//!
//! With `P = Γ_n G_n`, `Var F_n = (2/n) tr(P²)` and `κ₄(F_n) = (48/n²) tr(P⁴)`.
//! `F_n` has the law of `Σ λ_i (ξ_i² − 1)` with `λ_i = μ_i / √n` and `μ_i` the
//! eigenvalues of `LᵀG_nL`, `Γ_n = LLᵀ`.

use std::io::Write;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mc::Estimate;
use crate::spectra::{CovSequence, WeightFourier};
use crate::statistic::check_lengths;
use crate::toeplitz::ToeplitzOperator;

/// Default largest `n` for dense computations.
pub const DENSE_CAP: usize = 2048;
/// Environment variable overriding [`DENSE_CAP`].
pub const DENSE_CAP_ENV: &str = "QUADCLT_DENSE_CAP";

pub fn dense_cap() -> usize {
    std::env::var(DENSE_CAP_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DENSE_CAP)
}

fn check_cap(n: usize) -> Result<()> {
    let cap = dense_cap();
    if n > cap {
        Err(Error::SizeOverCap { n, cap })
    } else if n == 0 {
        Err(crate::error::domain("n must be positive"))
    } else {
        Ok(())
    }
}

/// Dense `Γ_n` and `G_n`.
#[derive(Debug, Clone)]
pub struct ToeplitzPair {
    pub n: usize,
    pub gamma_mat: DMatrix<f64>,
    pub weight_mat: DMatrix<f64>,
    weight_is_identity: bool,
}

impl ToeplitzPair {
    pub fn new(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<Self> {
        check_cap(n)?;
        check_lengths(cov, wf, n)?;
        Ok(Self {
            n,
            gamma_mat: DMatrix::from_fn(n, n, |i, j| cov.r[i.abs_diff(j)]),
            weight_mat: DMatrix::from_fn(n, n, |i, j| wf.gamma[i.abs_diff(j)]),
            weight_is_identity: wf.is_identity(),
        })
    }

    /// `Γ_n G_n`.
    pub fn product(&self) -> DMatrix<f64> {
        if self.weight_is_identity {
            self.gamma_mat.clone()
        } else {
            &self.gamma_mat * &self.weight_mat
        }
    }

    /// `tr((Γ_n G_n)²) = Σ_{ij} P_ij P_ji`.
    pub fn trace_p2(&self) -> f64 {
        let p = self.product();
        let n = self.n;
        let mut s = 0.0;
        for j in 0..n {
            for i in 0..n {
                s += p[(i, j)] * p[(j, i)];
            }
        }
        s
    }

    /// Eigenvalues of `LᵀG_nL` (those of `Γ_n^{1/2} G_n Γ_n^{1/2}`).
    pub fn whitened_eigenvalues(&self) -> Result<Vec<f64>> {
        let l = match self.gamma_mat.clone().cholesky() {
            Some(c) => c.l(),
            None => {
                let eig = self.gamma_mat.clone().symmetric_eigenvalues();
                let min = eig.min();
                let max = eig.max();
                if min < -1e-10 * max.abs() {
                    return Err(Error::NotPsd { min_eig: min });
                }
                // semidefinite: symmetric square root from the eigendecomposition
                let se = self.gamma_mat.clone().symmetric_eigen();
                let sq = se.eigenvalues.map(|v| v.max(0.0).sqrt());
                &se.eigenvectors * DMatrix::from_diagonal(&sq) * se.eigenvectors.transpose()
            }
        };
        let s = if self.weight_is_identity {
            let g0 = self.weight_mat[(0, 0)];
            (l.transpose() * &l) * g0
        } else {
            l.transpose() * &self.weight_mat * &l
        };
        let s = (&s + s.transpose()) * 0.5;
        Ok(s.symmetric_eigenvalues().iter().copied().collect())
    }
}

/// `V_n = (2/n) tr((Γ_n G_n)²)`, dense.
pub fn variance_exact(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<f64> {
    let pair = ToeplitzPair::new(cov, wf, n)?;
    Ok(2.0 * pair.trace_p2() / n as f64)
}

/// `κ₄ = (48/n²) Σ μ_i⁴`, dense.
pub fn kappa4_exact(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<f64> {
    let mu = ToeplitzPair::new(cov, wf, n)?.whitened_eigenvalues()?;
    Ok(kappa4_from_eigs(&mu, n))
}

fn kappa4_from_eigs(mu: &[f64], n: usize) -> f64 {
    48.0 * mu.iter().map(|m| m.powi(4)).sum::<f64>() / (n as f64).powi(2)
}

/// Weights `λ_i` of `F_n =ᵈ Σ λ_i (ξ_i² − 1)`, sorted by decreasing `|λ_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareWeights {
    pub lambda: Vec<f64>,
}

impl ChiSquareWeights {
    pub fn new(mut lambda: Vec<f64>) -> Self {
        lambda.sort_by(|a, b| b.abs().total_cmp(&a.abs()));
        Self { lambda }
    }

    /// `Σ 2λ_i²`.
    pub fn variance(&self) -> f64 {
        2.0 * self.lambda.iter().map(|l| l * l).sum::<f64>()
    }

    /// `Σ 48λ_i⁴`.
    pub fn kappa4(&self) -> f64 {
        48.0 * self.lambda.iter().map(|l| l.powi(4)).sum::<f64>()
    }
}

pub fn chisquare_weights(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<ChiSquareWeights> {
    let mu = ToeplitzPair::new(cov, wf, n)?.whitened_eigenvalues()?;
    let s = (n as f64).sqrt();
    Ok(ChiSquareWeights::new(mu.iter().map(|m| m / s).collect()))
}

/// Everything the dense oracle produces for one `n`.
#[derive(Debug, Clone)]
pub struct ExactLaw {
    pub n: usize,
    pub v_n: f64,
    pub kappa4: f64,
    pub weights: ChiSquareWeights,
}

/// `V_n`, `κ₄` and the weights from one dense factorization.
pub fn exact_law(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<ExactLaw> {
    let pair = ToeplitzPair::new(cov, wf, n)?;
    let v_n = 2.0 * pair.trace_p2() / n as f64;
    let mu = pair.whitened_eigenvalues()?;
    let s = (n as f64).sqrt();
    Ok(ExactLaw {
        n,
        v_n,
        kappa4: kappa4_from_eigs(&mu, n),
        weights: ChiSquareWeights::new(mu.iter().map(|m| m / s).collect()),
    })
}

/// `Γ_n` and `G_n` as FFT operators.
struct Operators {
    n: usize,
    gamma: ToeplitzOperator,
    weight: ToeplitzOperator,
}

impl Operators {
    fn new(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<Self> {
        check_lengths(cov, wf, n)?;
        Ok(Self {
            n,
            gamma: ToeplitzOperator::new(&cov.r, n),
            weight: ToeplitzOperator::new(&wf.gamma, n),
        })
    }
}

/// `(2/n) tr(P²)` and `(48/n²) tr(P⁴)` by exact column sweeps of FFT products,
/// without forming any matrix: `tr(P^{2k}) = Σ_j (P^k e_j) · ((Pᵀ)^k e_j)`.
pub fn moments_streaming(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<(f64, f64)> {
    let ops = Operators::new(cov, wf, n)?;
    let cols: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; n], vec![0.0; n], Vec::new()),
            |(a, b, tmp, buf), j| {
                // a = P e_j = Γ g_j, b = Pᵀ e_j = G r_j
                let g_j: Vec<f64> = (0..n).map(|i| wf.gamma[i.abs_diff(j)]).collect();
                let r_j: Vec<f64> = (0..n).map(|i| cov.r[i.abs_diff(j)]).collect();
                ops.gamma.apply_with(&g_j, a, buf);
                ops.weight.apply_with(&r_j, b, buf);
                let t2: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                // P² e_j = Γ G a, (Pᵀ)² e_j = G Γ b
                ops.weight.apply_with(a, tmp, buf);
                ops.gamma.apply_with(tmp, a, buf);
                ops.gamma.apply_with(b, tmp, buf);
                ops.weight.apply_with(tmp, b, buf);
                let t4: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
                (t2, t4)
            },
        )
        .collect();
    // summed in column order so results do not depend on scheduling
    let (t2, t4) = cols.iter().fold((0.0, 0.0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    let nf = n as f64;
    Ok((2.0 * t2 / nf, 48.0 * t4 / (nf * nf)))
}

/// Hutchinson estimate of `κ₄` with Rademacher probes; approximate by construction.
pub fn kappa4_hutchinson(
    cov: &CovSequence,
    wf: &WeightFourier,
    n: usize,
    probes: usize,
    seed: u64,
) -> Result<Estimate> {
    if probes < 2 {
        return Err(Error::TooFewPoints(probes));
    }
    let ops = Operators::new(cov, wf, n)?;
    let vals: Vec<f64> = (0..probes as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = ChaCha8Rng::seed_from_u64(crate::simulate::mix_seed(seed, p));
            let z: Vec<f64> = (0..ops.n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let mut buf = Vec::new();
            let mut a = z.clone();
            let mut b = z;
            let mut tmp = vec![0.0; ops.n];
            // a = P² z, b = (Pᵀ)² z
            for _ in 0..2 {
                ops.weight.apply_with(&a, &mut tmp, &mut buf);
                ops.gamma.apply_with(&tmp, &mut a, &mut buf);
                ops.gamma.apply_with(&b, &mut tmp, &mut buf);
                ops.weight.apply_with(&tmp, &mut b, &mut buf);
            }
            a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
        })
        .collect();
    let est = crate::mc::mean(&vals)?;
    let s = 48.0 / (n as f64).powi(2);
    Ok(Estimate {
        value: est.value * s,
        se: est.se * s,
    })
}

/// How `V_n` and `κ₄` were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceMethod {
    Dense,
    Streaming,
    Hutchinson,
}

impl TraceMethod {
    pub fn approximate(&self) -> bool {
        matches!(self, TraceMethod::Hutchinson)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMethod::Dense => "dense",
            TraceMethod::Streaming => "streaming",
            TraceMethod::Hutchinson => "hutchinson",
        }
    }
}

/// `V_n` and `κ₄`: dense up to [`dense_cap`], exact streaming sweeps above it.
pub fn moments(cov: &CovSequence, wf: &WeightFourier, n: usize) -> Result<(f64, f64, TraceMethod)> {
    if n <= dense_cap() {
        let law = exact_law(cov, wf, n)?;
        Ok((law.v_n, law.kappa4, TraceMethod::Dense))
    } else {
        let (v, k) = moments_streaming(cov, wf, n)?;
        Ok((v, k, TraceMethod::Streaming))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub v_n: f64,
    pub sigma0_sq: f64,
    pub kappa4: f64,
    /// `κ₄/48 = ‖k_n ⊗₁ k_n‖²`.
    pub contraction_sq: f64,
    pub bound: f64,
    /// `α + β`.
    pub d: f64,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "n,V_n,sigma0_sq,kappa4,contraction_sq,bound";

    pub fn with_context(mut self, n: usize, d: f64) -> Self {
        self.n = n;
        self.d = d;
        self
    }

    pub fn csv_fields(&self) -> String {
        use crate::io::sig15;
        format!(
            "{},{},{},{},{},{}",
            self.n,
            sig15(self.v_n),
            sig15(self.sigma0_sq),
            sig15(self.kappa4),
            sig15(self.contraction_sq),
            sig15(self.bound)
        )
    }
}

/// `√((σ₀² − V_n)² + κ₄/48)`, constant taken as 1.
pub fn stein_bound(v_n: f64, kappa4: f64, sigma0_sq: f64) -> Result<BoundReport> {
    if !(kappa4 >= 0.0) {
        return Err(crate::error::domain(format!("fourth cumulant {kappa4} is negative")));
    }
    let contraction_sq = kappa4 / 48.0;
    Ok(BoundReport {
        n: 0,
        v_n,
        sigma0_sq,
        kappa4,
        contraction_sq,
        bound: ((sigma0_sq - v_n).powi(2) + contraction_sq).sqrt(),
        d: f64::NAN,
    })
}

pub fn write_bound_csv(rows: &[BoundReport], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{}", BoundReport::CSV_HEADER)?;
    for r in rows {
        writeln!(w, "{}", r.csv_fields())?;
    }
    Ok(())
}
