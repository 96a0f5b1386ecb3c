//! Scalar rate constants: the companion value `q(p)`, the large-deviation
//! rate `Z_p`, its Ginibre analogue `G_p`, the JLM exponents and the
//! moderate-fluctuation rate.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::series::log_b;

/// `h(x) = x (log x - 1)`, with `h(0) = 0`.
pub fn h(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * (x.ln() - 1.0)
    }
}

/// Safeguarded Newton for `h(x) = target` on a bracket where `h` is monotone.
fn solve_h(target: f64, mut lo: f64, mut hi: f64) -> f64 {
    let increasing = h(hi) > h(lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = h(x) - target;
        if f == 0.0 {
            return x;
        }
        if (f > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let d = x.ln();
        let newton = x - f / d;
        x = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-16 * hi.max(1e-300) {
            break;
        }
    }
    // final polish: Newton steps near the root where the residual still moves
    for _ in 0..3 {
        let d = x.ln();
        if d == 0.0 {
            break;
        }
        let nx = x - (h(x) - target) / d;
        if (nx - x).abs() == 0.0 || !nx.is_finite() {
            break;
        }
        if (h(nx) - target).abs() < (h(x) - target).abs() {
            x = nx;
        } else {
            break;
        }
    }
    x
}

/// The companion value `q ≠ p` with `q(log q - 1) = p(log p - 1)`:
/// `q ∈ (1, e]` for `p < 1`, `q ∈ [0, 1)` for `1 < p < e`, `e` at `p = 0`,
/// `1` at `p = 1` and `0` for `p ≥ e`.
pub fn q_of_p(p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return arg_err(format!("q(p) needs p >= 0, got {p}"));
    }
    Ok(if p == 0.0 {
        E
    } else if p == 1.0 {
        1.0
    } else if p >= E {
        0.0
    } else if p < 1.0 {
        solve_h(h(p), 1.0, E)
    } else {
        solve_h(h(p), 0.0, 1.0)
    })
}

/// `x²(2 log x - 1)/4`, the antiderivative of `x log x`, with value 0 at 0.
fn x_log_x_antiderivative(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x * (2.0 * x.ln() - 1.0) / 4.0
    }
}

/// `Z_p = |∫_p^{q(p)} x log x dx|` (also written `H_p`).
pub fn z_const(p: f64) -> Result<f64> {
    let q = q_of_p(p)?;
    Ok((x_log_x_antiderivative(q) - x_log_x_antiderivative(p)).abs())
}

/// `G_p = |∫_1^p (1 - x + x log x) dx|`, the Ginibre rate.
pub fn ginibre_g(p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return arg_err(format!("G_p needs p >= 0, got {p}"));
    }
    let f = |x: f64| {
        let l = if x == 0.0 { 0.0 } else { x * x / 2.0 * x.ln() };
        x - x * x / 2.0 + l - x * x / 4.0
    };
    Ok((f(p) - f(1.0)).abs())
}

/// JLM exponent `ψ(b)` for fluctuations of size `r^b`.
pub fn jlm_exponent(b: f64) -> Result<f64> {
    if !(b > 0.5) {
        return arg_err(format!("psi(b) needs b > 1/2, got {b}"));
    }
    Ok(if b <= 1.0 {
        2.0 * b - 1.0
    } else if b <= 2.0 {
        3.0 * b - 2.0
    } else {
        2.0 * b
    })
}

/// Coefficient `2a³/3` of `r^{3b-2}` for fluctuations `a r^b`, `4/3 < b < 2`.
pub fn moderate_rate(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0) {
        return arg_err(format!("moderate rate needs a > 0, got {a}"));
    }
    if !(b > 4.0 / 3.0 && b < 2.0) {
        return Err(Error::Range(format!(
            "b = {b} outside (4/3, 2); the lower bound alone extends to (1, 2)"
        )));
    }
    Ok(2.0 * a * a * a / 3.0)
}

/// `k₀ = ⌊p r²⌋`
pub fn k0(p: f64, r: f64) -> usize {
    (p * r * r).floor() as usize
}

/// `log A_{p,k} = log b_{k₀} - log b_k`.
pub fn main_term_logratio(p: f64, k: usize, r: f64) -> f64 {
    log_b(k0(p, r), r) - log_b(k, r)
}

/// `(p/2) log(e/p) r² - (k/2) log(e r²/k)`, the leading part of `log A_{p,k}`.
pub fn main_term_leading(p: f64, k: usize, r: f64) -> f64 {
    let half_xlog = |x: f64| if x == 0.0 { 0.0 } else { x / 2.0 * (E / x).ln() };
    (half_xlog(p) - half_xlog(k as f64 / (r * r))) * r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `p = 0`
    Hole,
    /// `0 < p ≤ 1`
    Deficit,
    /// `1 < p < e`
    Overcrowd,
    /// `p ≥ e`
    Saturated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstant {
    pub p: f64,
    pub q: f64,
    #[serde(rename = "Z")]
    pub z: f64,
    pub branch: Branch,
}

pub fn rate_constant(p: f64) -> Result<RateConstant> {
    let q = q_of_p(p)?;
    let branch = if p == 0.0 {
        Branch::Hole
    } else if p <= 1.0 {
        Branch::Deficit
    } else if p < E {
        Branch::Overcrowd
    } else {
        Branch::Saturated
    };
    Ok(RateConstant { p, q, z: z_const(p)?, branch })
}
