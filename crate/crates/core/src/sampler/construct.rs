//! Constructive sampling on the event `{n(r) = ⌊p r²⌋}`.
//!
//! One coefficient `ξ_{k₀}` is made large and the coefficients that could
//! compete with it on `|z| = r` are made small, so that Rouché's theorem
//! pins the zero count. The resulting law is the Gaussian law restricted to a
//! sub-event of the rare event, not the conditional law itself.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::constants::{k0, main_term_logratio, q_of_p};
use crate::error::{arg_err, Result};
use crate::roots::{count_in_disk, roots, ZeroConfig};
use crate::sampler::density::log_sum_exp;
use crate::series::{log_b, standard_complex, CoeffVector};

/// Exponent in the polynomial slack `(k+1)^{C₁}`.
pub const C1: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// the dominant coefficient `k₀`
    Main,
    /// `k/r² ∈ I_p`
    MainTerms,
    /// `k ≤ N` outside `I_p`
    CloseTail,
    /// `N < k ≤ 4N`, unconstrained
    FarTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Certificate {
    /// `1 - Σ_{k≠k₀} |ξ_k| b_k / (|ξ_{k₀}| b_{k₀})`
    pub rouche_margin: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RareEventSample {
    /// `ξ_0..ξ_{4N}` with scale `L = r`.
    pub coeffs: CoeffVector,
    pub k0: usize,
    /// Truncation degree used for the zeros.
    pub n: usize,
    pub r: f64,
    pub p: f64,
    pub roles: Vec<Role>,
    /// Log of the per-coefficient bound `|ξ_k| ≤ ρ_k` (`+∞` when unbounded).
    pub log_bounds: Vec<f64>,
    pub certificate: Certificate,
}

impl RareEventSample {
    /// Zeros of the degree-`N` truncation in the plane scaled by `r`.
    pub fn zeros(&self) -> Result<ZeroConfig> {
        roots(&self.coeffs.truncated(self.n))
    }

    /// Number of zeros in `|z| ≤ r`.
    pub fn zero_count(&self) -> Result<usize> {
        Ok(count_in_disk(&self.zeros()?, 1.0))
    }
}

/// `I_p`: `[p, q]` for `p < 1`, `[q, p]` for `1 < p < e`, `[0, p]` for `p ≥ e`.
pub fn main_interval(p: f64) -> Result<(f64, f64)> {
    let q = q_of_p(p)?;
    Ok(if p < 1.0 {
        (p, q)
    } else if p < std::f64::consts::E {
        (q, p)
    } else {
        (0.0, p)
    })
}

/// Truncation degree `N = ⌊α_p r²⌋ + 1` with `α_p = 16` for `p ≤ 11`, else `5 + p`.
pub fn truncation_degree(p: f64, r: f64) -> usize {
    let a = if p <= 11.0 { 16.0 } else { 5.0 + p };
    (a * r * r).floor() as usize + 1
}

/// Per-coefficient roles and log bounds for `(r, p)`.
pub fn event_bounds(r: f64, p: f64) -> Result<(usize, usize, Vec<Role>, Vec<f64>)> {
    if !(r >= 3.0) {
        return arg_err(format!("construction needs r >= 3, got {r}"));
    }
    if !(p >= 0.0) || p == 1.0 {
        return arg_err(format!("construction needs p >= 0, p != 1, got {p}"));
    }
    let (lo, hi) = main_interval(p)?;
    let k0 = k0(p, r);
    let n = truncation_degree(p, r);
    let saturated = p >= std::f64::consts::E;
    let r2 = r * r;
    let (m_const, tail_const) = if saturated { (4.0 * p * r2, 24.0 * r2) } else { (6.0 * r2, 70.0 * r2) };
    let mut roles = Vec::with_capacity(4 * n + 1);
    let mut bounds = Vec::with_capacity(4 * n + 1);
    for k in 0..=4 * n {
        let kf = (k + 1) as f64;
        let x = k as f64 / r2;
        let (role, b) = if k == k0 {
            (Role::Main, f64::INFINITY)
        } else if k > n {
            (Role::FarTail, f64::INFINITY)
        } else if x >= lo && x <= hi {
            (Role::MainTerms, main_term_logratio(p, k, r) - m_const.ln() - 2.0 * C1 * kf.ln())
        } else {
            (Role::CloseTail, -tail_const.ln() - C1 * kf.ln())
        };
        roles.push(role);
        bounds.push(b);
    }
    Ok((k0, n, roles, bounds))
}

/// `log|ξ|` for a standard complex Gaussian conditioned on `|ξ| ≤ e^{log_rho}`,
/// by inverting the truncated exponential law of `|ξ|²`.
pub fn truncated_log_abs<R: Rng + ?Sized>(log_rho: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
    let rho2_log = 2.0 * log_rho;
    if rho2_log < -30.0 {
        // |ξ|² / ρ² is uniform to within ρ²
        0.5 * (u.ln() + rho2_log)
    } else {
        let rho2 = rho2_log.exp();
        let x = -(u * (-rho2).exp_m1()).ln_1p();
        0.5 * x.ln()
    }
}

/// One draw from the event-restricted law.
pub fn construct_rare_event<R: Rng + ?Sized>(r: f64, p: f64, rng: &mut R) -> Result<RareEventSample> {
    let (k0, n, roles, log_bounds) = event_bounds(r, p)?;
    let mut log_abs = Vec::with_capacity(roles.len());
    let mut coeffs = Vec::with_capacity(roles.len());
    for (role, lb) in roles.iter().zip(&log_bounds) {
        let phase = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * rng.random::<f64>());
        let la = match role {
            Role::Main => {
                // |ξ|² = 1 + Exp(1) given |ξ| ≥ 1
                let e: f64 = -(1.0 - rng.random::<f64>()).ln();
                0.5 * (1.0 + e).ln()
            }
            Role::FarTail => {
                let xi = standard_complex(rng);
                log_abs.push(xi.norm().ln());
                coeffs.push(xi);
                continue;
            }
            _ => truncated_log_abs(*lb, rng),
        };
        log_abs.push(la);
        coeffs.push(phase * la.exp());
    }
    let lead = log_abs[k0] + log_b(k0, r);
    let others: Vec<f64> =
        log_abs.iter().enumerate().filter(|(k, _)| *k != k0).map(|(k, la)| la + log_b(k, r)).collect();
    let ratio = (log_sum_exp(&others) - lead).exp();
    let certificate = Certificate { rouche_margin: 1.0 - ratio, holds: ratio < 1.0 };
    Ok(RareEventSample { coeffs: CoeffVector::new(coeffs, r)?, k0, n, r, p, roles, log_bounds, certificate })
}
