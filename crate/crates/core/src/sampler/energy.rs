//! Energies of finite zero configurations: the smoothed empirical measure
//! `μ_z^t` (each zero spread over a circle of radius `t`) and the discrete
//! functional `I*(z)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::roots::ZeroConfig;

/// Angular nodes used for the circle-circle interaction of overlapping circles.
pub const INTERACTION_NODES: usize = 64;

/// Interaction `∫∫ log|x - y|` of two uniform circles of radius `t` whose
/// centres are `d` apart.
pub fn circle_interaction(d: f64, t: f64) -> f64 {
    if d >= 2.0 * t {
        return d.ln();
    }
    // the potential of a circle of radius t is log max(|·|, t)
    crate::quad::circle_mean(
        |th| {
            let x = Complex64::new(d, 0.0) + Complex64::from_polar(t, th);
            x.norm().max(t).ln()
        },
        INTERACTION_NODES,
    )
}

/// `Σ(μ_z^t) = (1/N²)[Σ_{j≠k} K_t(z_j, z_k) + N log t]`.
pub fn smoothed_energy(zc: &ZeroConfig) -> f64 {
    smoothed_energy_of(&zc.zeros, zc.smoothing_t)
}

pub fn smoothed_energy_of(zeros: &[Complex64], t: f64) -> f64 {
    let n = zeros.len() as f64;
    let mut s = 0.0;
    for (j, a) in zeros.iter().enumerate() {
        for b in &zeros[j + 1..] {
            s += circle_interaction((a - b).norm(), t);
        }
    }
    (2.0 * s + n * t.ln()) / (n * n)
}

/// `(1/N²) Σ_{j≠k} log|z_j - z_k|`.
pub fn discrete_energy(zeros: &[Complex64]) -> f64 {
    let n = zeros.len() as f64;
    crate::sampler::density::log_vandermonde_sq(zeros) / (n * n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteFunctional {
    /// `B_α(μ_z) - Σ(μ_z^t)`
    pub i_alpha: f64,
    /// `B_α(μ_z) - (1/N²) Σ_{j≠k} log|z_j - z_k|`
    pub i_star: f64,
    pub b_alpha: f64,
    pub smoothed_energy: f64,
    pub argmax: Complex64,
}

/// `B_α(μ_z) = 2 sup_w [(1/N) Σ log|w - z_j| - |w|²/2α]` from a polar probe
/// grid refined by a local pattern search.
pub fn b_alpha_points(zeros: &[Complex64], alpha: f64) -> (f64, Complex64) {
    let n = zeros.len() as f64;
    let g = |w: Complex64| zeros.iter().map(|z| (w - z).norm().ln()).sum::<f64>() / n - w.norm_sqr() / (2.0 * alpha);
    let r_max = zeros.iter().map(|z| z.norm()).fold(alpha.sqrt(), f64::max) * 1.25;
    let (nr, na) = (120, 96);
    let mut best = (g(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
    for i in 1..=nr {
        let s = r_max * i as f64 / nr as f64;
        for k in 0..na {
            let w = Complex64::from_polar(s, 2.0 * std::f64::consts::PI * (k as f64 + 0.5 * (i % 2) as f64) / na as f64);
            let v = g(w);
            if v > best.0 {
                best = (v, w);
            }
        }
    }
    let mut h = r_max / nr as f64;
    while h > 1e-9 {
        let mut moved = false;
        for d in [Complex64::new(h, 0.0), Complex64::new(-h, 0.0), Complex64::new(0.0, h), Complex64::new(0.0, -h)] {
            let v = g(best.1 + d);
            if v > best.0 {
                best = (v, best.1 + d);
                moved = true;
            }
        }
        if !moved {
            h /= 2.0;
        }
    }
    (2.0 * best.0, best.1)
}

/// `I_α` of the smoothed empirical measure, alongside the discrete `I*(z)`.
pub fn functional_i_discrete(zc: &ZeroConfig, alpha: f64) -> DiscreteFunctional {
    let (b, argmax) = b_alpha_points(&zc.zeros, alpha);
    let se = smoothed_energy(zc);
    let de = discrete_energy(&zc.zeros);
    DiscreteFunctional { i_alpha: b - se, i_star: b - de, b_alpha: b, smoothed_energy: se, argmax }
}
