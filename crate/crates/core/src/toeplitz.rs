//! Symmetric Toeplitz matrix-vector products in `O(n log n)` by circulant embedding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Symmetric `n × n` Toeplitz operator with first column `c`.
#[derive(Clone)]
pub struct ToeplitzOperator {
    n: usize,
    size: usize,
    identity_scale: Option<f64>,
    spectrum: Vec<Complex64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ToeplitzOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzOperator")
            .field("n", &self.n)
            .field("size", &self.size)
            .finish()
    }
}

impl ToeplitzOperator {
    /// Builds the operator from lags `c[0..n]` (extra lags are ignored).
    pub fn new(column: &[f64], n: usize) -> Self {
        assert!(column.len() >= n && n > 0, "need {n} lags, got {}", column.len());
        let col = &column[..n];
        let size = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);
        let identity_scale = if col[1..].iter().all(|&v| v == 0.0) {
            Some(col[0])
        } else {
            None
        };
        let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
        if identity_scale.is_none() {
            spectrum[0].re = col[0];
            for k in 1..n {
                spectrum[k].re = col[k];
                spectrum[size - k].re = col[k];
            }
            fwd.process(&mut spectrum);
        }
        Self {
            n,
            size,
            identity_scale,
            spectrum,
            fwd,
            inv,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `T x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.size];
        let mut out = vec![0.0; self.n];
        self.apply_with(x, &mut out, &mut buf);
        out
    }

    /// `T x` into `out`, reusing `buf` (length at least the embedding size).
    pub fn apply_with(&self, x: &[f64], out: &mut [f64], buf: &mut Vec<Complex64>) {
        assert_eq!(x.len(), self.n);
        if let Some(s) = self.identity_scale {
            for (o, v) in out.iter_mut().zip(x) {
                *o = s * v;
            }
            return;
        }
        buf.clear();
        buf.extend(x.iter().map(|&v| Complex64::new(v, 0.0)));
        buf.resize(self.size, Complex64::new(0.0, 0.0));
        self.fwd.process(buf);
        for (b, s) in buf.iter_mut().zip(&self.spectrum) {
            *b *= s;
        }
        self.inv.process(buf);
        let scale = 1.0 / self.size as f64;
        for (o, b) in out.iter_mut().zip(buf.iter()) {
            *o = b.re * scale;
        }
    }

    /// Dense matrix, row-major, for tests and small oracles.
    pub fn dense(column: &[f64], n: usize) -> Vec<f64> {
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = column[i.abs_diff(j)];
            }
        }
        m
    }
}
