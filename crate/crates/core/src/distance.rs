//! 1-Wasserstein distance between the law of `F_n` and `N(0, σ₀²)`.
//!
//! On the line `d_W(F, G) = ∫ |F(x) − G(x)| dx`. The CDF of
//! `Q = Σ λ_i (ξ_i² − 1)` comes from Imhof's inversion formula
//!
//! ```text
//! P(Q ≤ x) = 1/2 − (1/π) ∫₀^∞ sin θ(u) / (u ρ(u)) du,
//! θ(u) = ½ Σ atan(λ_i u) − ½ (x + Σ λ_i) u,   ρ(u) = Π (1 + λ_i² u²)^{1/4}.
//! ```

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rayon::prelude::*;
use libm::{erf, erfc};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::mc::Estimate;
use crate::oracle::ChiSquareWeights;
use crate::quadrature::{GaussLegendre, Integrator, QuadratureSpec};

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * erfc(z * FRAC_1_SQRT_2)
}

pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

pub fn norm_quantile(p: f64) -> f64 {
    let mut z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    // one Newton step against the accurate CDF
    if z.is_finite() {
        let d = norm_pdf(z);
        if d > 0.0 {
            z -= (norm_cdf(z) - p) / d;
        }
    }
    z
}

/// `∫_z^∞ Φ̄(t) dt = φ(z) − z Φ̄(z)`.
fn norm_tail_integral(z: f64) -> f64 {
    (norm_pdf(z) - z * norm_sf(z)).max(0.0)
}

/// Weights with negligible entries dropped.
fn active(w: &ChiSquareWeights) -> Vec<f64> {
    let max = w.lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    if max == 0.0 {
        return Vec::new();
    }
    w.lambda.iter().copied().filter(|l| l.abs() > 1e-15 * max).collect()
}

/// Precomputed Imhof integrand on a node grid over `(0, U]`, valid for `|x| ≤ x_max`.
#[derive(Debug, Clone)]
pub struct ImhofGrid {
    u: Vec<f64>,
    /// `½ Σ (atan(λ_i u) − λ_i u)`.
    phase: Vec<f64>,
    /// quadrature weight times `1 / (u ρ(u))`.
    amp: Vec<f64>,
    pub upper: f64,
    pub trunc_bound: f64,
    pub x_max: f64,
}

impl ImhofGrid {
    pub fn new(lambda: &[f64], x_max: f64, tol: f64) -> Result<Self> {
        if lambda.len() < 2 {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: format!("inversion needs at least 2 nonzero weights, got {}", lambda.len()),
            });
        }
        let lmax = lambda.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let s = |u: f64| lambda.iter().map(|l| 0.25 * (l * l * u * u).ln_1p()).sum::<f64>();
        let kappa = |u: f64| {
            lambda
                .iter()
                .map(|l| {
                    let a = l * l * u * u;
                    0.5 * a / (1.0 + a)
                })
                .sum::<f64>()
        };
        // s is convex in ln u with slope κ, so ∫_U^∞ e^{-s}/u du ≤ e^{-s(U)}/κ(U)
        let bound = |u: f64| (-s(u)).exp() / (PI * kappa(u));
        let target = 0.5 * tol;
        let mut hi = 1.0 / lmax;
        let mut doublings = 0;
        while bound(hi) > target {
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(Error::ToleranceUnreachable {
                    tol,
                    reason: "inversion integrand decays too slowly".into(),
                });
            }
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if bound(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let upper = hi;
        // bound on |θ'(u)| = |½ Σ λ_i (1/(1+λ_i²u²) − 1) − ½x|
        let rate = |u: f64| {
            0.5 * (lambda
                .iter()
                .map(|l| {
                    let a = l * l * u * u;
                    l.abs() * a / (1.0 + a)
                })
                .sum::<f64>()
                + x_max)
        };
        let rule = GaussLegendre::new(16);
        let mut u_nodes = Vec::new();
        let mut wts = Vec::new();
        let mut a = 0.0;
        let h_amp = 1.0 / lmax;
        while a < upper {
            let h0 = (1.0 / rate(a).max(1e-300)).min(h_amp);
            let h = (1.0 / rate(a + h0).max(1e-300)).min(h_amp).min(upper - a);
            let mid = a + 0.5 * h;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                u_nodes.push(mid + 0.5 * h * x);
                wts.push(0.5 * h * w);
            }
            a += h;
            if u_nodes.len() > 50_000_000 {
                return Err(Error::ToleranceUnreachable {
                    tol,
                    reason: "inversion grid too large".into(),
                });
            }
        }
        let (phase, amp): (Vec<f64>, Vec<f64>) = u_nodes
            .par_iter()
            .zip(&wts)
            .map(|(&u, &w)| {
                let mut ph = 0.0;
                let mut lr = 0.0;
                for l in lambda {
                    let z = l * u;
                    ph += z.atan() - z;
                    lr += (z * z).ln_1p();
                }
                (0.5 * ph, w * (-0.25 * lr).exp() / u)
            })
            .unzip();
        Ok(Self {
            u: u_nodes,
            phase,
            amp,
            upper,
            trunc_bound: bound(upper),
            x_max,
        })
    }

    pub fn nodes(&self) -> usize {
        self.u.len()
    }

    /// `P(Q ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        let mut s = 0.0;
        for i in 0..self.u.len() {
            s += (self.phase[i] - 0.5 * x * self.u[i]).sin() * self.amp[i];
        }
        0.5 - s / PI
    }
}

/// Law of `Q` for the three weight-count regimes.
#[derive(Debug, Clone)]
enum QuadLaw {
    /// `Q ≡ 0`.
    Point,
    /// `Q = λ (ξ² − 1)`.
    Single(f64),
    Imhof(ImhofGrid),
}

impl QuadLaw {
    fn new(w: &ChiSquareWeights, x_max: f64, tol: f64) -> Result<Self> {
        let act = active(w);
        Ok(match act.len() {
            0 => QuadLaw::Point,
            1 => QuadLaw::Single(act[0]),
            _ => QuadLaw::Imhof(ImhofGrid::new(&act, x_max, tol)?),
        })
    }

    fn cdf(&self, x: f64) -> f64 {
        match self {
            QuadLaw::Point => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            QuadLaw::Single(l) => {
                let y = 1.0 + x / l;
                let below = if y <= 0.0 { 0.0 } else { erf((0.5 * y).sqrt()) };
                if *l > 0.0 {
                    below
                } else {
                    1.0 - below
                }
            }
            QuadLaw::Imhof(g) => g.cdf(x),
        }
    }
}

/// `P(Σ λ_i (ξ_i² − 1) ≤ x)` within `tol`.
pub fn imhof_cdf(w: &ChiSquareWeights, x: f64, tol: f64) -> Result<f64> {
    if active(w).is_empty() {
        return Err(crate::error::domain("at least one weight must be nonzero"));
    }
    let law = QuadLaw::new(w, x.abs(), tol)?;
    Ok(law.cdf(x).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    pub xs: Vec<f64>,
    pub ps: Vec<f64>,
    /// Probability outside `[xs[0], xs[last]]`.
    pub tail_bound: f64,
}

/// CDF of `Q` on `xs` (sorted), clamped to `[0, 1]` and made nondecreasing.
pub fn cdf_curve(w: &ChiSquareWeights, xs: &[f64], tol: f64) -> Result<CdfCurve> {
    if xs.is_empty() {
        return Err(Error::TooFewPoints(0));
    }
    let x_max = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let law = QuadLaw::new(w, x_max, tol)?;
    let mut ps: Vec<f64> = xs.par_iter().map(|&x| law.cdf(x).clamp(0.0, 1.0)).collect();
    for i in 1..ps.len() {
        ps[i] = ps[i].max(ps[i - 1]);
    }
    let act = active(w);
    let tail_bound = chernoff_tail(&act, xs[xs.len() - 1]) + chernoff_tail(&neg(&act), -xs[0]);
    if !(tail_bound < tol) {
        return Err(Error::ToleranceUnreachable {
            tol,
            reason: format!("grid leaves up to {tail_bound:.3e} of the mass outside; widen it"),
        });
    }
    Ok(CdfCurve {
        xs: xs.to_vec(),
        ps,
        tail_bound,
    })
}

/// [`cdf_curve`] on `points` equispaced nodes over a range whose tails hold less than `tol`.
pub fn cdf_curve_auto(w: &ChiSquareWeights, points: usize, tol: f64) -> Result<CdfCurve> {
    if points < 2 {
        return Err(Error::TooFewPoints(points));
    }
    let act = active(w);
    let sd = w.variance().sqrt().max(f64::MIN_POSITIVE);
    let edge = |l: &[f64]| {
        let mut x = sd;
        for _ in 0..200 {
            if chernoff_tail(l, x) < 0.25 * tol {
                return Ok(x);
            }
            x *= 1.25;
        }
        Err(Error::ToleranceUnreachable {
            tol,
            reason: "tail bound does not fall below the tolerance".into(),
        })
    };
    let hi = edge(&act)?;
    let lo = -edge(&neg(&act))?;
    let h = (hi - lo) / (points - 1) as f64;
    let xs: Vec<f64> = (0..points).map(|i| lo + h * i as f64).collect();
    cdf_curve(w, &xs, tol)
}

fn neg(l: &[f64]) -> Vec<f64> {
    l.iter().map(|v| -v).collect()
}

/// Chernoff bound on `P(Q > x)`.
fn chernoff_tail(lambda: &[f64], x: f64) -> f64 {
    chernoff(lambda, x, false)
}

/// Chernoff bound on `∫_x^∞ P(Q > y) dy`.
fn chernoff_tail_integral(lambda: &[f64], x: f64) -> f64 {
    chernoff(lambda, x, true)
}

fn chernoff(lambda: &[f64], x: f64, integrated: bool) -> f64 {
    let pos_max = lambda.iter().fold(0.0f64, |m, &l| m.max(l));
    let t_max = if pos_max > 0.0 { 0.5 / pos_max } else { 1e6 };
    // log E e^{tQ}
    let log_mgf = |t: f64| {
        lambda
            .iter()
            .map(|&l| -0.5 * (-2.0 * t * l).ln_1p() - t * l)
            .sum::<f64>()
    };
    let obj = |t: f64| {
        let mut v = -t * x + log_mgf(t);
        if integrated {
            v -= t.ln();
        }
        v
    };
    // the objective is convex in t on (0, t_max); golden-section search
    let (mut a, mut b) = (t_max * 1e-9, t_max * (1.0 - 1e-9));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = obj(d);
        }
    }
    let best = fc.min(fd);
    if integrated {
        best.exp()
    } else {
        best.exp().min(1.0)
    }
}

/// `∫ |F_Q − Φ_{σ₀}|` within `2·tol`.
pub fn wasserstein_exact(w: &ChiSquareWeights, sigma0: f64, tol: f64) -> Result<f64> {
    if !(sigma0 > 0.0) {
        return Err(crate::error::domain("sigma0 must be positive"));
    }
    if !(tol > 0.0) {
        return Err(crate::error::domain("tol must be positive"));
    }
    let act = active(w);
    if act.is_empty() {
        return Ok(sigma0 * (2.0 / PI).sqrt());
    }
    let sd_q = (2.0 * act.iter().map(|l| l * l).sum::<f64>()).sqrt();
    let tails = |t: f64| {
        2.0 * sigma0 * norm_tail_integral(t / sigma0)
            + chernoff_tail_integral(&act, t)
            + chernoff_tail_integral(&neg(&act), t)
    };
    let mut t = 4.0 * sigma0.max(sd_q);
    let mut guard = 0;
    while tails(t) > 0.5 * tol {
        t *= 1.25;
        guard += 1;
        if guard > 200 {
            return Err(Error::ToleranceUnreachable {
                tol,
                reason: "tail bound not achievable".into(),
            });
        }
    }
    let law = QuadLaw::new(w, t, 0.05 * tol / (2.0 * t))?;
    let diff = |x: f64| law.cdf(x) - norm_cdf(x / sigma0);

    let mut edges = Vec::new();
    if act.iter().all(|&l| l > 0.0) {
        edges.push(-act.iter().sum::<f64>());
    }
    if act.iter().all(|&l| l < 0.0) {
        edges.push(-act.iter().sum::<f64>());
    }
    if act.len() <= 2 {
        edges.push(0.0);
    }
    edges.retain(|e| e.abs() < t);

    // sign changes located on a fine grid, then by bisection
    let h = 0.125 * sigma0.min(sd_q);
    let steps = ((2.0 * t / h).ceil() as usize).max(8);
    let grid: Vec<f64> = (0..=steps).map(|i| -t + 2.0 * t * i as f64 / steps as f64).collect();
    let vals: Vec<f64> = grid.par_iter().map(|&x| diff(x)).collect();
    let mut cuts = vec![-t, t];
    cuts.extend(edges.iter().copied());
    for i in 0..steps {
        let (a, b) = (vals[i], vals[i + 1]);
        if a == 0.0 {
            cuts.push(grid[i]);
        } else if a * b < 0.0 {
            let (mut lo, mut hi, mut flo) = (grid[i], grid[i + 1], a);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let fm = diff(mid);
                if fm == 0.0 || hi - lo < 1e-15 * t {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm < 0.0) == (flo < 0.0) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            cuts.push(0.5 * (lo + hi));
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let integ = Integrator::new(QuadratureSpec {
        abs_tol: (0.1 * tol / cuts.len() as f64).max(1e-15),
        ..QuadratureSpec::default()
    })?;
    let pieces: Vec<Result<f64>> = cuts
        .par_windows(2)
        .map(|p| {
            let (a, b) = (p[0], p[1]);
            let sing: Vec<f64> = edges.iter().copied().filter(|e| *e == a || *e == b).collect();
            integ.integrate(diff, a, b, &sing, h).map(f64::abs)
        })
        .collect();
    let mut total = 0.0;
    for p in pieces {
        total += p?;
    }
    Ok(total)
}

/// Exact W1 between the empirical law of `samples` and `N(0, σ₀²)`.
pub fn wasserstein_empirical(samples: &[f64], sigma0: f64) -> Result<f64> {
    Ok(wasserstein_empirical_se(samples, sigma0)?.value)
}

/// Empirical W1 with the standard error `m^{-1/2} ∫ √(F̂(1 − F̂))`.
pub fn wasserstein_empirical_se(samples: &[f64], sigma0: f64) -> Result<Estimate> {
    if samples.len() < 2 {
        return Err(Error::TooFewPoints(samples.len()));
    }
    if !(sigma0 > 0.0) {
        return Err(crate::error::domain("sigma0 must be positive"));
    }
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let m = x.len();
    let mf = m as f64;
    let s = sigma0;
    // ∫ Φ(x/σ) dx
    let big_g = |v: f64| {
        let z = v / s;
        s * (z * norm_cdf(z) + norm_pdf(z))
    };
    let mut total = big_g(x[0]).max(0.0) + s * norm_tail_integral(x[m - 1] / s);
    let mut spread = 0.0;
    for i in 1..m {
        let (a, b) = (x[i - 1], x[i]);
        if b <= a {
            continue;
        }
        let c = i as f64 / mf;
        spread += (b - a) * (c * (1.0 - c)).sqrt();
        let (da, db) = (c - norm_cdf(a / s), c - norm_cdf(b / s));
        if da * db >= 0.0 {
            total += (c * (b - a) - (big_g(b) - big_g(a))).abs();
        } else {
            let r = (s * norm_quantile(c)).clamp(a, b);
            total += (c * (r - a) - (big_g(r) - big_g(a))).abs();
            total += (c * (b - r) - (big_g(b) - big_g(r))).abs();
        }
    }
    Ok(Estimate {
        value: total,
        se: spread / mf.sqrt(),
    })
}
