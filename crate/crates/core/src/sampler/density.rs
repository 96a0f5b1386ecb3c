//! The exact joint density of the zeros of `P_{N,L}`:
//!
//! `f(z) = A_L^N |Δ(z)|² S(z)^{-(N+1)}`, `S(z) = ∫ |q_z|² dμ_L = Σ |c_k|² k!/L^{2k}`,
//!
//! where `q_z` is the monic polynomial with zeros `z` and
//! `dμ_L = (L²/π) exp(-L²|w|²) dm`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{arg_err, Error, Result};
use crate::roots::{min_gap, vieta, ZeroConfig};
use crate::series::ln_factorial;

/// Zeros closer than this are treated as coincident.
pub const COINCIDENT_GAP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointDensityContext {
    pub n: usize,
    pub l: f64,
    /// `log A_L^N = Σ_{j≤N} log j! - N log π - N(N+1) log L`, so that `f`
    /// integrates to 1 over `C^N` (zeros in uniform random order)
    pub log_a: f64,
    /// `log(k!/L^{2k})` for `k = 0..=N`
    pub moment_logs: Vec<f64>,
}

impl JointDensityContext {
    pub fn new(n: usize, l: f64) -> Result<Self> {
        if n == 0 {
            return arg_err("the joint density needs N >= 1");
        }
        if !(l > 0.0 && l.is_finite()) {
            return arg_err(format!("L must be positive, got {l}"));
        }
        let nf = n as f64;
        let log_a = (1..=n).map(ln_factorial).sum::<f64>()
            - nf * std::f64::consts::PI.ln()
            - nf * (nf + 1.0) * l.ln();
        let moment_logs = (0..=n).map(|k| ln_factorial(k) - 2.0 * k as f64 * l.ln()).collect();
        Ok(JointDensityContext { n, l, log_a, moment_logs })
    }

    /// `α = N/L²`
    pub fn alpha(&self) -> f64 {
        self.n as f64 / (self.l * self.l)
    }

    /// `log S(z)` from monic coefficients rescaled by `exp(log_scale)`.
    pub fn log_s_from_coeffs(&self, c: &[Complex64], log_scale: f64) -> f64 {
        let terms = c.iter().zip(&self.moment_logs).filter(|(x, _)| x.norm_sqr() > 0.0);
        let logs: Vec<f64> = terms.map(|(x, m)| x.norm_sqr().ln() + m).collect();
        2.0 * log_scale + log_sum_exp(&logs)
    }

    /// `log S(z)`.
    pub fn log_s(&self, zeros: &[Complex64]) -> f64 {
        let (c, ls) = vieta(zeros);
        self.log_s_from_coeffs(&c, ls)
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `Σ_{j≠k} log|z_j - z_k| = log |Δ(z)|²`.
pub fn log_vandermonde_sq(zeros: &[Complex64]) -> f64 {
    let mut s = 0.0;
    for (j, a) in zeros.iter().enumerate() {
        for b in &zeros[j + 1..] {
            s += (a - b).norm().ln();
        }
    }
    2.0 * s
}

/// `log f(z)` for the zeros of `P_{N,L}` (in the scaled plane of `ctx.l`).
pub fn log_joint_density(zc: &ZeroConfig, ctx: &JointDensityContext) -> Result<f64> {
    log_joint_density_of(&zc.zeros, ctx)
}

pub fn log_joint_density_of(zeros: &[Complex64], ctx: &JointDensityContext) -> Result<f64> {
    if zeros.len() != ctx.n {
        return arg_err(format!("expected {} zeros, got {}", ctx.n, zeros.len()));
    }
    if let Some((i, j, gap)) = min_gap(zeros) {
        if gap <= COINCIDENT_GAP {
            return Err(Error::CoincidentZeros { i, j, gap });
        }
    }
    let v = ctx.log_a + log_vandermonde_sq(zeros) - (ctx.n as f64 + 1.0) * ctx.log_s(zeros);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Domain(format!("log density is not finite ({v})")))
    }
}

/// `log ∫ |h|² dμ_L = log Σ |h_k|² k!/L^{2k}` for plain coefficients `h_k`.
pub fn log_mu_l_norm(h: &[Complex64], l: f64) -> f64 {
    let logs: Vec<f64> = h
        .iter()
        .enumerate()
        .filter(|(_, x)| x.norm_sqr() > 0.0)
        .map(|(k, x)| x.norm_sqr().ln() + ln_factorial(k) - 2.0 * k as f64 * l.ln())
        .collect();
    log_sum_exp(&logs)
}

/// `log sup_w |h(w)|² exp(-L²|w|²)` over a polar probe grid of radius `r_max`.
pub fn log_weighted_sup(h: &[Complex64], l: f64, r_max: f64, radii: usize, angles: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=radii {
        let s = r_max * i as f64 / radii as f64;
        for k in 0..angles {
            let w = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * k as f64 / angles as f64);
            let v = h.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * w + c);
            best = best.max(v.norm_sqr().ln() - l * l * s * s);
        }
    }
    best
}

/// `log A(z) = log sup_w |q_z(w)|² exp(-L²|w|²)`, with `q_z` evaluated as a
/// product over the zeros.
pub fn log_a_of_zeros(zeros: &[Complex64], l: f64, r_max: f64, radii: usize, angles: usize) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for i in 0..=radii {
        let s = r_max * i as f64 / radii as f64;
        for k in 0..angles {
            let w = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * k as f64 / angles as f64);
            let v: f64 = zeros.iter().map(|z| (w - z).norm_sqr().ln()).sum();
            best = best.max(v - l * l * s * s);
        }
    }
    best
}

/// `log S(z)` as `∫ |q_z|² dμ_L` with `q_z` evaluated as a product over the
/// zeros: a trapezoid rule with `N + 1` angles and Gauss–Laguerre with
/// `⌊N/2⌋ + 1` radial nodes, both exact for `|q_z|²`. Costs `O(N³)` but
/// never forms the monomial coefficients.
pub fn log_s_quadrature(zeros: &[Complex64], l: f64) -> f64 {
    let n = zeros.len();
    let rule = crate::quad::gauss_laguerre(n / 2 + 1);
    let m = n + 1;
    let mut terms = Vec::with_capacity(rule.len() * m);
    for (u, lw) in &rule {
        let s = u.sqrt() / l;
        for k in 0..m {
            let w = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * k as f64 / m as f64);
            let v: f64 = zeros.iter().map(|z| (w - z).norm_sqr().ln()).sum();
            terms.push(lw + v);
        }
    }
    log_sum_exp(&terms) - (m as f64).ln()
}

/// `∫ |w|^{2k} dμ_L` by radial quadrature, for checking the moment identity.
pub fn mu_l_moment_quadrature(k: usize, l: f64) -> f64 {
    // substitute u = L² s², so the integral is ∫ u^k e^{-u} du / L^{2k}
    let upper = (k as f64 + 40.0) * 2.0 + 10.0 * (k as f64).sqrt();
    let peak = k as f64;
    let f = |u: f64| if u == 0.0 { if k == 0 { 1.0 } else { 0.0 } } else { (k as f64 * u.ln() - u).exp() };
    let v = crate::quad::integrate_pieces(f, 0.0, upper, &[peak], 0.0, 1e-13);
    v / l.powi(2 * k as i32)
}
