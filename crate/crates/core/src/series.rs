//! Gaussian Taylor coefficients, their scaled polynomial truncations
//! `P_{N,L}(z) = Σ_{k≤N} ξ_k (Lz)^k / √k!`, and the regularity predicates used
//! to decide whether a truncation is trustworthy.
//!
//! Magnitudes are carried in the log domain throughout: the coefficients
//! `L^k/√k!` span hundreds of orders of magnitude already for `N` in the low
//! hundreds.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial as ln_fact_u64;

use crate::error::{arg_err, Result};

/// `log k!`, exact table for small `k` and log-gamma beyond.
pub fn ln_factorial(k: usize) -> f64 {
    ln_fact_u64(k as u64)
}

/// Draw `n + 1` independent standard complex Gaussians (`E|ξ|² = 1`).
pub fn sample_coeffs<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..=n).map(|_| standard_complex(rng)).collect()
}

/// One standard complex Gaussian: real and imaginary parts `N(0, 1/2)`.
pub fn standard_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// A complex number stored as `(log |w|, arg w)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub ln_abs: f64,
    pub arg: f64,
}

impl LogComplex {
    pub fn to_complex(self) -> Complex64 {
        if self.ln_abs == f64::NEG_INFINITY {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.ln_abs.exp(), self.arg)
    }

    pub fn from_complex(w: Complex64) -> Self {
        LogComplex { ln_abs: w.norm().ln(), arg: w.arg() }
    }
}

/// Truncated Gaussian Taylor coefficients `ξ_0..ξ_N` together with the scale `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffVector {
    coeffs: Vec<Complex64>,
    scale: f64,
    /// `log|ξ_k| - ½ log k!` (−∞ for a zero coefficient)
    log_weights: Vec<f64>,
    /// `ξ_k / |ξ_k|`
    phases: Vec<Complex64>,
}

impl CoeffVector {
    pub fn new(coeffs: Vec<Complex64>, scale: f64) -> Result<Self> {
        if coeffs.is_empty() {
            return arg_err("coefficient vector must hold at least xi_0");
        }
        if !(scale > 0.0 && scale.is_finite()) {
            return arg_err(format!("scale L must be positive and finite, got {scale}"));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return arg_err("coefficients must be finite");
        }
        let log_weights = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let a = c.norm();
                if a == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    a.ln() - 0.5 * ln_factorial(k)
                }
            })
            .collect();
        let phases = coeffs
            .iter()
            .map(|c| {
                let a = c.norm();
                if a == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    c / a
                }
            })
            .collect();
        Ok(CoeffVector { coeffs, scale, log_weights, phases })
    }

    /// Sample a fresh degree-`n` truncation with scale `scale`.
    pub fn sample<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> Result<Self> {
        Self::new(sample_coeffs(n, rng), scale)
    }

    /// Coefficients for a polynomial given by its plain monomial coefficients
    /// `a_k` (so that `P_{N,L}(z) = Σ a_k z^k`).
    pub fn from_monomial(monomial: &[Complex64], scale: f64) -> Result<Self> {
        let xi = monomial
            .iter()
            .enumerate()
            .map(|(k, a)| a * (0.5 * ln_factorial(k) - k as f64 * scale.ln()).exp())
            .collect();
        Self::new(xi, scale)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same coefficients, different scale.
    pub fn with_scale(&self, scale: f64) -> Result<Self> {
        Self::new(self.coeffs.clone(), scale)
    }

    /// First `n + 1` coefficients.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.degree());
        CoeffVector {
            coeffs: self.coeffs[..=n].to_vec(),
            scale: self.scale,
            log_weights: self.log_weights[..=n].to_vec(),
            phases: self.phases[..=n].to_vec(),
        }
    }

    /// `log |a_k|` of the monomial coefficients `a_k = ξ_k L^k / √k!`.
    pub fn monomial_log_abs(&self) -> Vec<f64> {
        let ll = self.scale.ln();
        self.log_weights.iter().enumerate().map(|(k, w)| w + k as f64 * ll).collect()
    }

    /// Monomial coefficients divided by the largest one, with the log of that
    /// largest magnitude. Underflowing entries become zero.
    pub fn normalized_monomial(&self) -> (Vec<Complex64>, f64) {
        let logs = self.monomial_log_abs();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let a = logs
            .iter()
            .zip(&self.phases)
            .map(|(l, u)| if l.is_finite() { u * (l - m).exp() } else { Complex64::new(0.0, 0.0) })
            .collect();
        (a, m)
    }

    /// Term logs `log|ξ_k (Lz)^k/√k!|` and the common shift (their maximum).
    fn shifted_terms(&self, z: Complex64) -> (Vec<f64>, f64) {
        let lz = (self.scale * z.norm()).ln();
        let logs: Vec<f64> = self.log_weights.iter().enumerate().map(|(k, w)| w + k as f64 * lz).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (logs, m)
    }

    /// `P_{N,L}(z)` as `(log-magnitude, phase)`, accumulated with max-term rescaling.
    pub fn eval(&self, z: Complex64) -> LogComplex {
        if z.norm() == 0.0 {
            return LogComplex::from_complex(self.coeffs[0]);
        }
        let (logs, m) = self.shifted_terms(z);
        if m == f64::NEG_INFINITY {
            return LogComplex { ln_abs: f64::NEG_INFINITY, arg: 0.0 };
        }
        let theta = z.arg();
        let mut sum = Complex64::new(0.0, 0.0);
        for (k, (l, u)) in logs.iter().zip(&self.phases).enumerate() {
            let d = l - m;
            if d > -60.0 {
                sum += u * Complex64::from_polar(d.exp(), k as f64 * theta);
            }
        }
        let mut out = LogComplex::from_complex(sum);
        out.ln_abs += m;
        out
    }

    /// Newton correction `P(z) / P'(z)` (derivative in `z`), from the same
    /// rescaled terms as [`eval`](Self::eval).
    pub fn newton_ratio(&self, z: Complex64) -> Complex64 {
        if z.norm() == 0.0 {
            let d1 = if self.degree() >= 1 { self.coeffs[1] * self.scale } else { Complex64::new(0.0, 0.0) };
            return self.coeffs[0] / d1;
        }
        let (logs, m) = self.shifted_terms(z);
        let theta = z.arg();
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for (k, (l, u)) in logs.iter().zip(&self.phases).enumerate() {
            let d = l - m;
            if d > -60.0 {
                let t = u * Complex64::from_polar(d.exp(), k as f64 * theta);
                p += t;
                dp += t * k as f64;
            }
        }
        z * p / dp
    }

    /// `Σ_{k≤N} |ξ_k|²`
    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `log b_k(r) = k log r - ½ log k!` with `b_k = r^k/√k!`.
pub fn log_b(k: usize, r: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    k as f64 * r.ln() - 0.5 * ln_factorial(k)
}

/// Log-domain factorial bracket `(k/e)^k ≤ k! ≤ 3√k (k/e)^k`, valid for `k ≥ 1`.
pub fn stirling_bounds(k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return arg_err("stirling bounds need k >= 1");
    }
    let kf = k as f64;
    let lo = kf * (kf.ln() - 1.0);
    Ok((lo, lo + 3f64.ln() + 0.5 * kf.ln()))
}

/// Log of the tail envelope `(N/2) log(16B²/λ)` bounding `|T_N|` on `|z| ≤ 2Br`.
pub fn tail_envelope(n: usize, b: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 16.0) {
        return arg_err(format!("tail envelope needs lambda > 16, got {lambda}"));
    }
    if !(1.0..=lambda.sqrt() / 2.0).contains(&b) {
        return arg_err(format!("B = {b} outside [1, sqrt(lambda)/2]"));
    }
    Ok(0.5 * n as f64 * (16.0 * b * b / lambda).ln())
}

/// Parameters of the truncation scheme for a disk of radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPlan {
    pub r: f64,
    pub lambda: f64,
    pub n0: usize,
    pub n1: usize,
    /// `γ = t = r^{-C2}`
    pub gamma: f64,
    pub t: f64,
    pub c2: f64,
}

impl TruncationPlan {
    /// `α = N r⁻²` for a degree in the admissible window.
    pub fn alpha(&self, n: usize) -> f64 {
        n as f64 / (self.r * self.r)
    }
}

pub const DEFAULT_C2: f64 = 4.0;

pub fn make_truncation_plan(r: f64, c2: f64) -> Result<TruncationPlan> {
    if !(r > std::f64::consts::E) || !r.is_finite() {
        return arg_err(format!("truncation plan needs r > e, got {r}"));
    }
    if !(c2 >= 4.0) {
        return arg_err(format!("C2 must be >= 4, got {c2}"));
    }
    let lambda = r.ln();
    let r2 = r * r;
    let n0 = (lambda * r2).floor() as usize + 1;
    let n1 = (2.0 * lambda * r2).floor() as usize + 1;
    let t = r.powf(-c2);
    Ok(TruncationPlan { r, lambda, n0, n1, gamma: t, t, c2 })
}

/// Constant in `Σ|ξ_k|² ≤ C λ r⁴`.
pub const REGULARITY_ENERGY_CONSTANT: f64 = 3.0;

/// Which regularity predicates a coefficient vector satisfies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    /// `|ξ_k| ≤ √(r⁶ + k)` for all `k ≤ N`
    pub coeffs_bounded: bool,
    /// `Σ_{k≤N} |ξ_k|² ≤ C λ r⁴`
    pub energy_bounded: bool,
    pub energy_constant: f64,
    /// `|ξ_N| ≥ exp(-r²)` for the vector's own degree
    pub leading_not_small: bool,
    /// Smallest `k ∈ [N0, N1]` with `|ξ_k| ≥ exp(-r²)`.
    pub selected_degree: Option<usize>,
}

impl RegularityReport {
    pub fn all_ok(&self) -> bool {
        self.coeffs_bounded && self.energy_bounded && self.leading_not_small
    }
}

pub fn regularity_check(c: &CoeffVector, plan: &TruncationPlan) -> RegularityReport {
    let r2 = plan.r * plan.r;
    let r6 = r2 * r2 * r2;
    let xi = c.coeffs();
    let coeffs_bounded = xi.iter().enumerate().all(|(k, x)| x.norm() <= (r6 + k as f64).sqrt());
    let energy_bounded = c.norm_sq() <= REGULARITY_ENERGY_CONSTANT * plan.lambda * r2 * r2;
    let floor = (-r2).exp();
    let leading_not_small = xi[c.degree()].norm() >= floor;
    let hi = plan.n1.min(c.degree());
    let selected_degree = (plan.n0..=hi).find(|&k| xi[k].norm() >= floor);
    RegularityReport {
        coeffs_bounded,
        energy_bounded,
        energy_constant: REGULARITY_ENERGY_CONSTANT,
        leading_not_small,
        selected_degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamSeed;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coefficient_moments() {
        let mut rng = StreamSeed(11).stream(0);
        let n = 100_000;
        let draws: Vec<Complex64> = (0..n).map(|_| standard_complex(&mut rng)).collect();
        let m2 = draws.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        assert!((m2 - 1.0).abs() < 0.02, "E|xi|^2 = {m2}");

        // P[|xi| >= 1.5] = exp(-2.25)
        let p = (-2.25f64).exp();
        let hits = draws.iter().filter(|x| x.norm() >= 1.5).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits - p).abs() < 3.0 * se, "tail {hits} vs {p}");
    }

    #[test]
    fn degenerate_length() {
        let mut rng = StreamSeed(1).stream(0);
        assert_eq!(sample_coeffs(0, &mut rng).len(), 1);
    }

    #[test]
    fn log_b_values() {
        assert_eq!(log_b(0, 3.7), 0.0);
        let want = 4.0 * 2f64.ln() - 0.5 * 24f64.ln();
        assert!((log_b(4, 2.0) - want).abs() < 1e-14);
    }

    #[test]
    fn log_b_brackets() {
        for &r in &[2.0f64, 5.0, 10.0] {
            for k in 1..=200usize {
                let kf = k as f64;
                let hi = kf / 2.0 * (std::f64::consts::E * r * r / kf).ln();
                let lo = hi - (2.0 * kf.powf(0.25)).ln();
                let v = log_b(k, r);
                assert!(v <= hi + 1e-12 && v >= lo - 1e-12, "k={k} r={r}: {lo} <= {v} <= {hi}");
            }
        }
    }

    #[test]
    fn log_b_telescopes() {
        for k in 0..300usize {
            let d = log_b(k + 1, 3.3) - log_b(k, 3.3);
            let want = 3.3f64.ln() - 0.5 * ((k + 1) as f64).ln();
            assert!((d - want).abs() < 1e-10 * (1.0 + log_b(k, 3.3).abs()), "k={k}");
        }
    }

    #[test]
    fn stirling_cases() {
        let (lo, hi) = stirling_bounds(1).unwrap();
        assert!((lo + 1.0).abs() < 1e-15);
        assert!((hi - (3f64.ln() - 1.0)).abs() < 1e-15);
        assert!(lo <= 0.0 && 0.0 <= hi);
        let (lo, hi) = stirling_bounds(10).unwrap();
        let l10 = 3_628_800f64.ln();
        assert!(lo <= l10 && l10 <= hi);
        let (lo, hi) = stirling_bounds(170).unwrap();
        let lg = statrs::function::gamma::ln_gamma(171.0);
        assert!(lo <= lg && lg <= hi);
        assert!(stirling_bounds(0).is_err());
        for k in 1..2000 {
            let (lo, hi) = stirling_bounds(k).unwrap();
            let lf = ln_factorial(k);
            assert!(lo <= lf && lf <= hi, "k={k}");
        }
    }

    #[test]
    fn eval_trivial_cases() {
        let mut xi = vec![c(0.0, 0.0); 6];
        xi[0] = c(1.0, 0.0);
        let p = CoeffVector::new(xi, 2.5).unwrap();
        for z in [c(0.3, -1.0), c(5.0, 2.0), c(-40.0, 0.1)] {
            let v = p.eval(z).to_complex();
            assert!((v - c(1.0, 0.0)).norm() < 1e-15);
        }
        let mut rng = StreamSeed(2).stream(0);
        let q = CoeffVector::sample(10, 1.7, &mut rng).unwrap();
        assert!((q.eval(c(0.0, 0.0)).to_complex() - q.coeffs()[0]).norm() < 1e-15);
    }

    /// Reference evaluation by the term recurrence `t_{k+1} = t_k · Lz/√(k+1)`
    /// with Neumaier-compensated summation.
    fn reference_eval(p: &CoeffVector, z: Complex64) -> Complex64 {
        let lz = z * p.scale();
        let mut power = c(1.0, 0.0);
        let (mut sum, mut comp) = (c(0.0, 0.0), c(0.0, 0.0));
        for (k, xi) in p.coeffs().iter().enumerate() {
            if k > 0 {
                power = power * lz / (k as f64).sqrt();
            }
            let term = xi * power;
            let t = sum + term;
            let fix = |s: f64, x: f64, t: f64| if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            comp += c(fix(sum.re, term.re, t.re), fix(sum.im, term.im, t.im));
            sum = t;
        }
        sum + comp
    }

    #[test]
    fn eval_matches_compensated_reference() {
        let mut rng = StreamSeed(3).stream(0);
        let mut worst: f64 = 0.0;
        for i in 0..200 {
            let n = 5 + (i % 60);
            let p = CoeffVector::sample(n, 1.3, &mut rng).unwrap();
            let z = standard_complex(&mut rng) * 2.0;
            let reference = reference_eval(&p, z);
            let got = p.eval(z).to_complex();
            let scale: f64 = {
                // condition of the sum: Σ|terms| / |sum|
                let mut power = 1.0;
                let lz = (z * p.scale()).norm();
                p.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, xi)| {
                        if k > 0 {
                            power *= lz / (k as f64).sqrt();
                        }
                        xi.norm() * power
                    })
                    .sum()
            };
            let cond = scale / reference.norm();
            if cond < 100.0 {
                worst = worst.max((got - reference).norm() / reference.norm());
            }
        }
        assert!(worst < 1e-12, "worst relative error {worst}");
    }

    #[test]
    fn eval_survives_extreme_ranges() {
        let mut rng = StreamSeed(4).stream(0);
        let p = CoeffVector::sample(10_000, 1.0, &mut rng).unwrap();
        let v = p.eval(c(600.0, 800.0));
        assert!(v.ln_abs.is_finite() && v.ln_abs > 700.0);
    }

    proptest! {
        #[test]
        fn eval_is_linear(seed in 0u64..500, zr in -3.0f64..3.0, zi in -3.0f64..3.0) {
            let mut rng = StreamSeed(seed).stream(9);
            let a = CoeffVector::sample(20, 1.0, &mut rng).unwrap();
            let b = CoeffVector::sample(20, 1.0, &mut rng).unwrap();
            let sum: Vec<Complex64> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x + y).collect();
            let s = CoeffVector::new(sum, 1.0).unwrap();
            let z = c(zr, zi);
            let lhs = s.eval(z).to_complex();
            let rhs = a.eval(z).to_complex() + b.eval(z).to_complex();
            let mag = a.eval(z).to_complex().norm() + b.eval(z).to_complex().norm();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * mag.max(1e-300));
        }
    }

    #[test]
    fn tail_envelope_values() {
        assert_eq!(tail_envelope(40, 1.5, 36.0).unwrap(), 0.0);
        let v = tail_envelope(100, 1.0, 64.0).unwrap();
        assert!((v - 50.0 * 0.25f64.ln()).abs() < 1e-12);
        assert!(tail_envelope(100, 0.5, 64.0).is_err());
        assert!(tail_envelope(100, 5.0, 64.0).is_err());
        assert!(tail_envelope(100, 1.0, 10.0).is_err());
    }

    #[test]
    fn tail_stays_below_envelope() {
        // at r = 4 the envelope needs λ > 16, so N = ⌈17 r²⌉
        let r: f64 = 4.0;
        let lambda: f64 = 17.0;
        let n = (lambda * r * r).ceil() as usize;
        let env = tail_envelope(n, 1.0, lambda).unwrap();
        let seed = StreamSeed(5);
        let mut below = 0;
        let trials = 1000;
        for i in 0..trials {
            let mut rng = seed.stream(i);
            let xi = sample_coeffs(5 * n, &mut rng);
            let mut tail = xi.clone();
            for t in tail.iter_mut().take(n + 1) {
                *t = c(0.0, 0.0);
            }
            let p = CoeffVector::new(tail, 1.0).unwrap();
            let worst = (0..64)
                .map(|j| p.eval(Complex64::from_polar(2.0 * r, j as f64 * std::f64::consts::TAU / 64.0)).ln_abs)
                .fold(f64::NEG_INFINITY, f64::max);
            if worst <= env {
                below += 1;
            }
        }
        assert!(below as f64 >= 0.99 * trials as f64, "{below}/{trials}");
    }

    #[test]
    fn truncation_plan_values() {
        let p = make_truncation_plan(10.0, 4.0).unwrap();
        assert!((p.lambda - 10f64.ln()).abs() < 1e-15);
        assert_eq!(p.n0, 231);
        assert_eq!(p.n1, 461);
        assert!((p.t - 1e-4).abs() < 1e-18);
        let e2 = std::f64::consts::E.powi(2);
        assert!((make_truncation_plan(e2, 4.0).unwrap().lambda - 2.0).abs() < 1e-14);
        let p = make_truncation_plan(20.0, 4.0).unwrap();
        let ratio = p.n1 as f64 / p.n0 as f64;
        assert!((ratio - 2.0).abs() < 2.0 / p.n0 as f64);
        for n in [p.n0, p.n1] {
            assert!(p.alpha(n) <= 3.0 * p.lambda);
        }
        assert!(make_truncation_plan(2.0, 4.0).is_err());
        assert!(make_truncation_plan(10.0, 3.0).is_err());
    }

    #[test]
    fn regularity_selection() {
        let plan = make_truncation_plan(5.0, 4.0).unwrap();
        let mut xi = vec![c(0.5, 0.0); plan.n1 + 1];
        for x in xi.iter_mut().skip(plan.n0) {
            *x = c(0.0, 0.0);
        }
        xi[plan.n0] = c(1.0, 0.0);
        let rep = regularity_check(&CoeffVector::new(xi, 1.0).unwrap(), &plan);
        assert_eq!(rep.selected_degree, Some(plan.n0));

        let tiny = (-2.0 * 25.0f64).exp();
        let xi = vec![c(tiny, 0.0); plan.n1 + 1];
        let rep = regularity_check(&CoeffVector::new(xi, 1.0).unwrap(), &plan);
        assert!(!rep.leading_not_small);
        assert_eq!(rep.selected_degree, None);
    }

    #[test]
    fn regularity_failures_are_rare() {
        let plan = make_truncation_plan(5.0, 4.0).unwrap();
        let seed = StreamSeed(6);
        let fails = (0..10_000u64)
            .filter(|&i| {
                let c = CoeffVector::sample(plan.n1, 1.0, &mut seed.stream(i)).unwrap();
                let rep = regularity_check(&c, &plan);
                !rep.all_ok() || rep.selected_degree.is_none()
            })
            .count();
        assert!((fails as f64) < 1e-3 * 10_000.0, "{fails} failures");
    }
}
