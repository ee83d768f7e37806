//! Numerical laboratory for centered integrated periodograms of long-memory
//! Gaussian sequences.
//!
//! The statistic `F_n = √n ∫ g (I_n − E I_n)` is a centered Toeplitz quadratic
//! form. This crate computes its exact finite-`n` law (variance, fourth
//! cumulant, chi-square weights), its Wasserstein distance to the Gaussian
//! limit, Monte Carlo replicates, the kernel estimates that drive the
//! convergence rates, and a one-parameter Whittle estimator built on top.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distance;
pub mod error;
pub mod io;
pub mod kernels;
pub mod mc;
pub mod oracle;
pub mod quadrature;
pub mod rates;
pub mod simulate;
pub mod spectra;
pub mod statistic;
pub mod toeplitz;
pub mod whittle;

pub use error::{Error, Result};
pub use quadrature::{HalfGrid, Integrator, QuadratureSpec};
pub use spectra::{
    autocovariance, farima_autocov, log_square_integral, sigma0_sq, weight_fourier, CovSequence,
    CovSource, SlowVaryingSpec, SpectralModel, WeightFourier, WeightModel,
};
pub use simulate::{mix_seed, plan_circulant, sample_path, Path, SamplerPlan};
pub use toeplitz::ToeplitzOperator;
