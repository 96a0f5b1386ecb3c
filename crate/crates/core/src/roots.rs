//! Zeros of `P_{N,L}`: Aberth–Ehrlich simultaneous iteration (default) or
//! companion-matrix eigenvalues, both finished by Newton steps on the
//! log-scaled evaluator. Also disk counts, an argument-principle oracle and
//! linear statistics.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Error, Result};
use crate::series::CoeffVector;
use crate::testfn::TestFunction;

/// Gap below which two polished zeros are reported as a near-multiple pair.
pub const CLUSTER_GAP: f64 = 1e-14;

/// `log 10⁻³⁰⁰`: leading coefficients below this are treated as zero.
pub const LEADING_FLOOR: f64 = -690.7755278982137;

/// Default smoothing radius attached to freshly extracted zeros.
pub const DEFAULT_SMOOTHING: f64 = 1e-4;

/// Newton residual target `|P/P'| < RESIDUAL_TOL · max(1, |z|)`.
pub const RESIDUAL_TOL: f64 = 1e-12;

/// Which plane a set of zeros lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plane {
    /// Zeros of `P_{N,L}(z)`; multiply by `L` for the physical plane.
    Scaled,
    /// Zeros of `P_N` itself.
    Physical,
}

/// A finite zero configuration with its smoothing radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroConfig {
    pub zeros: Vec<Complex64>,
    pub smoothing_t: f64,
    pub plane: Plane,
    /// The `L` of the polynomial the zeros came from.
    pub scale: f64,
    /// Two zeros closer than [`CLUSTER_GAP`]: the sample should be redrawn.
    #[serde(default)]
    pub near_multiple: bool,
}

impl ZeroConfig {
    pub fn new(zeros: Vec<Complex64>, smoothing_t: f64, plane: Plane, scale: f64) -> Result<Self> {
        if zeros.is_empty() {
            return arg_err("a zero configuration needs at least one point");
        }
        if !(smoothing_t > 0.0) {
            return arg_err(format!("smoothing radius must be positive, got {smoothing_t}"));
        }
        let near_multiple = min_gap(&zeros).map_or(false, |(_, _, g)| g < CLUSTER_GAP);
        Ok(ZeroConfig { zeros, smoothing_t, plane, scale, near_multiple })
    }

    pub fn len(&self) -> usize {
        self.zeros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn with_smoothing(mut self, t: f64) -> Self {
        self.smoothing_t = t;
        self
    }

    /// Zeros of `P_N` (physical plane).
    pub fn physical(&self) -> Vec<Complex64> {
        match self.plane {
            Plane::Physical => self.zeros.clone(),
            Plane::Scaled => self.zeros.iter().map(|z| z * self.scale).collect(),
        }
    }

    /// Moduli, sorted ascending.
    pub fn sorted_moduli(&self) -> Vec<f64> {
        let mut m: Vec<f64> = self.zeros.iter().map(|z| z.norm()).collect();
        m.sort_by(f64::total_cmp);
        m
    }

    pub fn to_record(&self, seed: u64) -> ZeroRecord {
        ZeroRecord {
            seed,
            n: self.len(),
            l: self.scale,
            zeros: self.zeros.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

/// One NDJSON line of a sample stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroRecord {
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub zeros: Vec<[f64; 2]>,
}

impl ZeroRecord {
    pub fn to_config(&self, smoothing_t: f64) -> Result<ZeroConfig> {
        let zeros = self.zeros.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        ZeroConfig::new(zeros, smoothing_t, Plane::Scaled, self.l)
    }
}

/// Smallest pairwise distance `(i, j, gap)`, `None` for fewer than two points.
pub fn min_gap(zeros: &[Complex64]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..zeros.len() {
        for j in i + 1..zeros.len() {
            let g = (zeros[i] - zeros[j]).norm();
            if best.map_or(true, |b| g < b.2) {
                best = Some((i, j, g));
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    #[default]
    Aberth,
    Companion,
}

/// Zeros of `P_{N,L}` in its own (`z`) plane, by Aberth–Ehrlich.
pub fn roots(c: &CoeffVector) -> Result<ZeroConfig> {
    roots_with(c, RootMethod::Aberth)
}

pub fn roots_with(c: &CoeffVector, method: RootMethod) -> Result<ZeroConfig> {
    let n = c.degree();
    if n == 0 {
        return Err(Error::Domain("a degree-0 polynomial has no zeros to extract".into()));
    }
    let lead = c.coeffs()[n].norm().ln();
    if !(lead >= LEADING_FLOOR) {
        return Err(Error::DegenerateLeading { log_abs: lead });
    }
    let logs = c.monomial_log_abs();

    // zeros at the origin split off exactly
    let low = logs.iter().take_while(|l| **l == f64::NEG_INFINITY).count();
    let mut zeros = vec![Complex64::new(0.0, 0.0); low];
    if low < n {
        let scaled = ScaledPoly::new(c, low);
        let found = match method {
            RootMethod::Aberth => aberth(&scaled),
            RootMethod::Companion => companion(&scaled),
        };
        zeros.extend(found.into_iter().map(|w| w * scaled.s));
        polish(c, &mut zeros[low..]);
    }
    ZeroConfig::new(zeros, DEFAULT_SMOOTHING, Plane::Scaled, c.scale())
}

/// `Σ_{k} b_k w^k` with `z = s w`, the `b_k` max-normalized, after dividing
/// out `z^low`.
struct ScaledPoly {
    b: Vec<Complex64>,
    s: f64,
    /// `log |b_k|` before normalization (for the Newton polygon)
    logs: Vec<f64>,
}

impl ScaledPoly {
    fn new(c: &CoeffVector, low: usize) -> Self {
        let all = c.monomial_log_abs();
        let phases: Vec<Complex64> = c
            .coeffs()
            .iter()
            .map(|x| if x.norm() == 0.0 { Complex64::new(0.0, 0.0) } else { x / x.norm() })
            .collect();
        let logs0 = &all[low..];
        let ph = &phases[low..];
        let n = logs0.len() - 1;
        let ls = (logs0[0] - logs0[n]) / n as f64;
        let logs: Vec<f64> = logs0.iter().enumerate().map(|(k, l)| l + k as f64 * ls).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let b = logs
            .iter()
            .zip(ph)
            .map(|(l, u)| if l.is_finite() { u * (l - m).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        ScaledPoly { b, s: ls.exp(), logs }
    }

    fn degree(&self) -> usize {
        self.b.len() - 1
    }

    /// `p(w) / p'(w)` by Horner, reversed when `|w| > 1`.
    fn newton_ratio(&self, w: Complex64) -> Complex64 {
        let n = self.degree();
        let zero = Complex64::new(0.0, 0.0);
        if w.norm_sqr() <= 1.0 {
            let (mut p, mut d) = (self.b[n], zero);
            for k in (0..n).rev() {
                d = d * w + p;
                p = p * w + self.b[k];
            }
            p / d
        } else {
            let y = w.inv();
            let (mut p, mut d) = (self.b[0], zero);
            for k in 1..=n {
                d = d * y + p;
                p = p * y + self.b[k];
            }
            w * p / (p * n as f64 - y * d)
        }
    }
}

/// Initial guesses on circles read off the upper convex hull of `(k, log|b_k|)`.
fn newton_polygon_guesses(p: &ScaledPoly) -> Vec<Complex64> {
    let pts: Vec<(usize, f64)> = p.logs.iter().copied().enumerate().filter(|(_, l)| l.is_finite()).collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &q in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b.0 as f64 - a.0 as f64) * (q.1 - a.1) - (b.1 - a.1) * (q.0 as f64 - a.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(q);
    }
    let mut out = Vec::with_capacity(p.degree());
    for (e, win) in hull.windows(2).enumerate() {
        let (i, li) = win[0];
        let (j, lj) = win[1];
        let m = j - i;
        let u = ((li - lj) / m as f64).exp();
        let offset = 0.7 + 1.3 * e as f64;
        for t in 0..m {
            out.push(Complex64::from_polar(u, TAU * t as f64 / m as f64 + offset));
        }
    }
    out
}

const ABERTH_MAX_ITER: usize = 500;

fn aberth(p: &ScaledPoly) -> Vec<Complex64> {
    let n = p.degree();
    let mut w = newton_polygon_guesses(p);
    debug_assert_eq!(w.len(), n);
    let mut done = vec![false; n];
    for _ in 0..ABERTH_MAX_ITER {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let ratio = p.newton_ratio(w[i]);
            let mut sum = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    sum += (w[i] - w[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * sum);
            if step.re.is_finite() && step.im.is_finite() {
                w[i] -= step;
            }
            if !(step.norm() > 4.0 * f64::EPSILON * w[i].norm().max(1e-300)) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all {
            break;
        }
    }
    w
}

fn companion(p: &ScaledPoly) -> Vec<Complex64> {
    let n = p.degree();
    let lead = p.b[n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        m[(0, k)] = -p.b[n - 1 - k] / lead;
    }
    for k in 1..n {
        m[(k, k - 1)] = Complex64::new(1.0, 0.0);
    }
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::new(m);
    let t = schur.unpack().1;
    (0..n).map(|k| t[(k, k)]).collect()
}

/// Diagonal similarity scaling by powers of two (Parlett–Reinsch).
fn balance(m: &mut DMatrix<Complex64>) {
    let n = m.nrows();
    loop {
        let mut changed = false;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m[(j, i)].l1_norm();
                    r += m[(i, j)].l1_norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut f = 1.0;
            let s = c + r;
            let (mut cc, mut rr) = (c, r);
            while cc < rr / 2.0 {
                cc *= 2.0;
                rr /= 2.0;
                f *= 2.0;
            }
            while cc >= rr * 2.0 {
                cc /= 2.0;
                rr *= 2.0;
                f /= 2.0;
            }
            if (cc + rr) < 0.95 * s {
                changed = true;
                for j in 0..n {
                    m[(i, j)] /= f;
                    m[(j, i)] *= f;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Newton steps on the log-domain evaluator, accepted only while they shrink.
fn polish(c: &CoeffVector, zeros: &mut [Complex64]) {
    for i in 0..zeros.len() {
        let mut z = zeros[i];
        let mut last = f64::INFINITY;
        for _ in 0..4 {
            let step = c.newton_ratio(z);
            let a = step.norm();
            if !a.is_finite() || a >= last {
                break;
            }
            z -= step;
            last = a;
            if a < 1e-3 * RESIDUAL_TOL * z.norm().max(1.0) {
                break;
            }
        }
        zeros[i] = z;
    }
}

/// `|P(z)/P'(z)|` at each zero, relative to `max(1, |z|)`.
pub fn relative_residuals(c: &CoeffVector, zc: &ZeroConfig) -> Vec<f64> {
    zc.zeros.iter().map(|z| c.newton_ratio(*z).norm() / z.norm().max(1.0)).collect()
}

/// `#{ j : |z_j| ≤ ρ }` in the configuration's own coordinates.
pub fn count_in_disk(zc: &ZeroConfig, rho: f64) -> usize {
    zc.zeros.iter().filter(|z| z.norm() <= rho).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContourCount {
    pub count: usize,
    /// The raw trapezoid value of the winding number.
    pub winding: f64,
    /// Smallest `|P/P'|` seen on the nodes, a proxy for the distance to the nearest zero.
    pub distance: f64,
    /// Heuristic trapezoid error `N exp(-n d/ρ)`.
    pub error_bound: f64,
}

/// Upper limit for the adaptive node doubling in [`argument_principle_count`].
pub const MAX_CONTOUR_NODES: usize = 1 << 22;

/// Number of zeros in `|z| < ρ` from the argument principle, independent of
/// any root extraction.
pub fn argument_principle_count(c: &CoeffVector, rho: f64, quad_points: usize) -> Result<ContourCount> {
    if !(rho > 0.0) || quad_points < 8 {
        return arg_err("argument principle needs rho > 0 and at least 8 nodes");
    }
    let n = c.degree() as f64;
    // double the node count until the trapezoid value settles on an integer
    let mut nodes = quad_points;
    let mut dist = f64::INFINITY;
    loop {
        let mut sum = 0.0;
        for j in 0..nodes {
            let z = Complex64::from_polar(rho, TAU * j as f64 / nodes as f64);
            let ratio = c.newton_ratio(z);
            dist = dist.min(ratio.norm());
            sum += (z / ratio).re;
        }
        if dist < 1e-6 * rho {
            return Err(Error::NearCircleRoot { distance: dist });
        }
        let winding = sum / nodes as f64;
        let count = winding.round();
        let error_bound = n * (-(nodes as f64) * dist / rho).exp();
        if (winding - count).abs() < 1e-3 && error_bound < 0.25 && count >= 0.0 {
            return Ok(ContourCount { count: count as usize, winding, distance: dist, error_bound });
        }
        if nodes >= MAX_CONTOUR_NODES {
            return Err(Error::NearCircleRoot { distance: dist });
        }
        nodes *= 2;
    }
}

/// `Σ_j φ(z_j / r)` over the physical zeros.
pub fn linear_statistics<F: TestFunction + ?Sized>(zc: &ZeroConfig, phi: &F, r: f64) -> f64 {
    zc.physical().iter().map(|z| phi.eval(z / r)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub difference: f64,
    /// `M ω(φ; 2Mγ/r)`
    pub bound: f64,
    pub within: bool,
}

/// Compare linear statistics of `f` and `f + g` against the Rouché-chain bound.
pub fn perturbation_match<F: TestFunction + ?Sized>(
    f_roots: &ZeroConfig,
    g_roots: &ZeroConfig,
    m: usize,
    gamma: f64,
    phi: &F,
    r: f64,
) -> PerturbationReport {
    let difference = (linear_statistics(f_roots, phi, r) - linear_statistics(g_roots, phi, r)).abs();
    let mf = m as f64;
    let bound = mf * phi.modulus(2.0 * mf * gamma / r);
    PerturbationReport { difference, bound, within: difference <= bound + 1e-12 }
}

/// Monic coefficients `c_0..c_N` (`c_N = 1`) of `Π (z - z_j)` by the Vieta
/// recurrence, rescaled by the running max. Returns the rescaled coefficients
/// and the log of the factor removed.
pub fn vieta(zeros: &[Complex64]) -> (Vec<Complex64>, f64) {
    let n = zeros.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[0] = Complex64::new(1.0, 0.0);
    let mut log_scale = 0.0;
    // c holds coefficients of degree 0..=k, highest at index k
    for (k, z) in zeros.iter().enumerate() {
        c[k + 1] = c[k];
        for i in (1..=k).rev() {
            c[i] = c[i - 1] - z * c[i];
        }
        c[0] = -z * c[0];
        let m = c[..=k + 1].iter().map(|x| x.norm()).fold(0.0, f64::max);
        if m > 1e100 || m < 1e-100 {
            for x in c[..=k + 1].iter_mut() {
                *x /= m;
            }
            log_scale += m.ln();
        }
    }
    (c, log_scale)
}
