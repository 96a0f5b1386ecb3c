//! Conditional samplers for zero configurations and their radial statistics.

pub mod construct;
pub mod density;
pub mod energy;
pub mod histogram;
pub mod mcmc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{arg_err, Result};
use crate::rng::StreamSeed;
use crate::roots::{count_in_disk, roots, ZeroConfig};
use crate::series::CoeffVector;

pub use construct::{construct_rare_event, Certificate, RareEventSample};
pub use density::{log_joint_density, JointDensityContext};
pub use energy::{functional_i_discrete, smoothed_energy, DiscreteFunctional};
pub use histogram::{radial_histogram, Normalization, RadialHistogram};
pub use mcmc::{mh_hole_chain, Chain, ChainConfig};

/// Zeros of one unconditional draw of `P_{N,L}` (scaled plane).
pub fn sample_zeros<R: rand::Rng + ?Sized>(n: usize, l: f64, rng: &mut R) -> Result<ZeroConfig> {
    roots(&CoeffVector::sample(n, l, rng)?)
}

/// `count` independent draws, sample `i` using stream `i` of `seed`.
pub fn sample_batch(n: usize, l: f64, count: usize, seed: StreamSeed) -> Result<Vec<ZeroConfig>> {
    (0..count).into_par_iter().map(|i| sample_zeros(n, l, &mut seed.stream(i as u64))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoleEstimate {
    pub r: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub hits: usize,
    /// truncation degree `⌈4r² + 40⌉`
    pub degree: usize,
}

/// Zeros of `c` in the closed unit disk of its scaled plane.
///
/// The winding number of `P` around the unit circle is read off `nodes`
/// equispaced values, doubling the nodes while some step turns by more than
/// π/3. Polynomials that stay ambiguous at 1024 nodes go to the root finder.
pub fn unit_disk_count(c: &CoeffVector, nodes: usize) -> Result<usize> {
    let logs = c.monomial_log_abs();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a: Vec<Complex64> = c
        .coeffs()
        .iter()
        .zip(&logs)
        .map(|(x, l)| if x.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { x / x.norm() * (l - m).exp() })
        .collect();
    let eval = |w: Complex64| a.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, x| acc * w + x);
    let mut k = nodes.max(16);
    while k <= 1024 {
        let vals: Vec<Complex64> =
            (0..k).map(|j| eval(Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64))).collect();
        let mut total = 0.0;
        let mut clean = vals.iter().all(|v| v.norm() > 0.0);
        for j in 0..k {
            let d = (vals[(j + 1) % k] / vals[j]).arg();
            if d.abs() > std::f64::consts::FRAC_PI_3 {
                clean = false;
                break;
            }
            total += d;
        }
        if clean {
            return Ok((total / std::f64::consts::TAU).round() as usize);
        }
        k *= 2;
    }
    Ok(count_in_disk(&roots(c)?, 1.0))
}

/// `#{zeros in |z| ≤ r} = 0` for one draw.
fn is_hole<R: rand::Rng + ?Sized>(r: f64, n: usize, rng: &mut R) -> Result<bool> {
    Ok(unit_disk_count(&CoeffVector::sample(n, r, rng)?, 128)? == 0)
}

/// Plain Monte Carlo for `P[n(r) = 0]` on the truncated series.
pub fn hole_probability_mc(r: f64, samples: usize, seed: StreamSeed) -> Result<HoleEstimate> {
    if !(r > 0.0) || samples == 0 {
        return arg_err("hole probability needs r > 0 and at least one sample");
    }
    let degree = (4.0 * r * r + 40.0).ceil() as usize;
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| is_hole(r, degree, &mut seed.stream(i as u64)).map(|h| h as usize))
        .sum::<Result<usize>>()?;
    let p = hits as f64 / samples as f64;
    Ok(HoleEstimate { r, estimate: p, stderr: (p * (1.0 - p) / samples as f64).sqrt(), samples, hits, degree })
}
