//! Metropolis–Hastings over zero configurations, targeting the exact joint
//! density restricted to `{|z_j| ≥ hole_radius for all j}`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::roots::{Plane, ZeroConfig, DEFAULT_SMOOTHING};
use crate::sampler::density::{log_joint_density_of, JointDensityContext};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Sweeps (N single-site proposals each) discarded while tuning.
    pub burn_in: usize,
    /// Sweeps after burn-in.
    pub sweeps: usize,
    /// Keep one configuration every `thin` sweeps.
    pub thin: usize,
    /// Initial proposal standard deviation per coordinate.
    pub proposal_scale: f64,
    pub target_acceptance: f64,
    /// Starting configuration; defaults to [`default_start`].
    #[serde(default)]
    pub start: Option<Vec<Complex64>>,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig { burn_in: 500, sweeps: 5000, thin: 5, proposal_scale: 0.1, target_acceptance: 0.3, start: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chain {
    pub samples: Vec<ZeroConfig>,
    pub log_density: Vec<f64>,
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    /// Frozen proposal scale.
    pub proposal_scale: f64,
    pub hole_radius: f64,
}

/// `N` points equally spaced on `|z| = max(1.05 hole, √α/2)`.
///
/// For `N ≳ 100` the monic coefficients of such a configuration cancel so
/// strongly that `S` loses all accuracy; see [`default_start`].
pub fn circle_start(ctx: &JointDensityContext, hole_radius: f64) -> Vec<Complex64> {
    let rad = (1.05 * hole_radius).max(ctx.alpha().sqrt() / 2.0);
    let n = ctx.n;
    (0..n).map(|k| Complex64::from_polar(rad, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64)).collect()
}

/// Golden-angle points spread with uniform area density over
/// `1.05 hole ≤ |z| ≤ max(√α, 1.1 · 1.05 hole)`.
pub fn default_start(ctx: &JointDensityContext, hole_radius: f64) -> Vec<Complex64> {
    let lo = 1.05 * hole_radius;
    let hi = ctx.alpha().sqrt().max(1.1 * lo).max(1e-3);
    let n = ctx.n;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let u = (k as f64 + 0.5) / n as f64;
            Complex64::from_polar((lo * lo + u * (hi * hi - lo * lo)).sqrt(), golden * k as f64)
        })
        .collect()
}

/// Running state: zeros and rescaled monic coefficients of the proposal.
struct State<'a> {
    ctx: &'a JointDensityContext,
    z: Vec<Complex64>,
    log_f: f64,
    buf: Vec<Complex64>,
    logs: Vec<f64>,
}

impl<'a> State<'a> {
    fn log_s_with(&mut self, j: usize, w: Complex64) -> f64 {
        let n = self.z.len();
        let c = &mut self.buf;
        c.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        c[0] = Complex64::new(1.0, 0.0);
        let mut log_scale = 0.0;
        for k in 0..n {
            let a = if k == j { w } else { self.z[k] };
            c[k + 1] = c[k];
            for i in (1..=k).rev() {
                c[i] = c[i - 1] - a * c[i];
            }
            c[0] = -a * c[0];
            if k % 8 == 7 || k + 1 == n {
                let m = c[..=k + 1].iter().map(|x| x.re.abs().max(x.im.abs())).fold(0.0, f64::max);
                if !(1e-80..=1e80).contains(&m) {
                    let inv = 1.0 / m;
                    c[..=k + 1].iter_mut().for_each(|x| *x *= inv);
                    log_scale += m.ln();
                }
            }
        }
        self.logs.clear();
        for (x, m) in c.iter().zip(&self.ctx.moment_logs) {
            let a = x.norm_sqr();
            if a > 0.0 {
                self.logs.push(a.ln() + m);
            }
        }
        2.0 * log_scale + crate::sampler::density::log_sum_exp(&self.logs)
    }

    /// Change of `Σ_{j≠k} log|z_j - z_k|` when `z_j` moves to `w`.
    fn delta_vandermonde(&self, j: usize, w: Complex64) -> f64 {
        let old = self.z[j];
        let mut d = 0.0;
        for (k, z) in self.z.iter().enumerate() {
            if k != j {
                d += ((w - z).norm_sqr() / (old - z).norm_sqr()).ln();
            }
        }
        d
    }
}

/// Run a hole-constrained chain. Proposals with `|w| < hole_radius` are
/// rejected. The proposal scale is tuned towards `target_acceptance` during
/// burn-in and frozen afterwards.
pub fn mh_hole_chain<R: Rng + ?Sized>(
    ctx: &JointDensityContext,
    hole_radius: f64,
    cfg: &ChainConfig,
    rng: &mut R,
) -> Result<Chain> {
    if !(hole_radius >= 0.0) {
        return arg_err(format!("hole radius must be nonnegative, got {hole_radius}"));
    }
    if cfg.thin == 0 || !(cfg.proposal_scale > 0.0) {
        return arg_err("thin must be positive and the proposal scale positive");
    }
    let z = cfg.start.clone().unwrap_or_else(|| default_start(ctx, hole_radius));
    if z.len() != ctx.n {
        return arg_err(format!("start has {} points, expected {}", z.len(), ctx.n));
    }
    if let Some(bad) = z.iter().find(|w| w.norm() < hole_radius) {
        return Err(Error::InfeasibleStart(format!("point {bad} lies inside the hole of radius {hole_radius}")));
    }
    let log_f = log_joint_density_of(&z, ctx).map_err(|e| Error::InfeasibleStart(e.to_string()))?;
    let n = ctx.n;
    let mut st = State { ctx, z, log_f, buf: vec![Complex64::new(0.0, 0.0); n + 1], logs: Vec::with_capacity(n + 1) };
    let mut log_s = st.log_s_with(usize::MAX, Complex64::new(0.0, 0.0));
    let np1 = n as f64 + 1.0;

    let mut scale = cfg.proposal_scale;
    let mut samples = Vec::new();
    let mut log_density = Vec::new();
    let (mut acc, mut tried) = (0usize, 0usize);
    let (mut win_acc, mut win_tried) = (0usize, 0usize);
    for sweep in 0..cfg.burn_in + cfg.sweeps {
        for j in 0..n {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            let w = st.z[j] + Complex64::new(dx, dy) * scale;
            let mut accepted = false;
            if w.norm() >= hole_radius {
                let dv = st.delta_vandermonde(j, w);
                let ls = st.log_s_with(j, w);
                let log_ratio = dv - np1 * (ls - log_s);
                if log_ratio.is_finite() && (log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()) {
                    st.z[j] = w;
                    st.log_f += log_ratio;
                    log_s = ls;
                    accepted = true;
                }
            }
            win_tried += 1;
            win_acc += accepted as usize;
            if sweep >= cfg.burn_in {
                tried += 1;
                acc += accepted as usize;
            }
        }
        if sweep < cfg.burn_in && (sweep + 1) % 10 == 0 {
            let rate = win_acc as f64 / win_tried as f64;
            scale *= (2.0 * (rate - cfg.target_acceptance)).exp();
            (win_acc, win_tried) = (0, 0);
        }
        if sweep + 1 == cfg.burn_in {
            // refresh against drift in the running log density
            st.log_f = log_joint_density_of(&st.z, ctx)?;
        }
        if sweep >= cfg.burn_in && (sweep - cfg.burn_in + 1) % cfg.thin == 0 {
            samples.push(ZeroConfig::new(st.z.clone(), DEFAULT_SMOOTHING, Plane::Scaled, ctx.l)?);
            log_density.push(st.log_f);
        }
    }
    Ok(Chain {
        samples,
        log_density,
        acceptance_rate: if tried == 0 { 0.0 } else { acc as f64 / tried as f64 },
        proposal_scale: scale,
        hole_radius,
    })
}
