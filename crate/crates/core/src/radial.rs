//! Exact potential theory for radial measures built from circle atoms and
//! annuli of constant planar density.
//!
//! Between consecutive breakpoints every potential has the form
//! `U(s) = A + B log s + C s²`, so potentials, energies, the obstacle term
//! `B_α` and the functionals `I_α`, `J_α` all reduce to closed forms.

use serde::{Deserialize, Serialize};

use crate::constants::{q_of_p, z_const};
use crate::error::{arg_err, Error, Result};
use crate::quad::{integrate, integrate_pieces};
use crate::testfn::TestFunction;

/// Uniform mass on the circle `|z| = r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub r: f64,
    pub mass: f64,
}

/// Density `c · dm/π` on `lo ≤ |z| ≤ hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub lo: f64,
    pub hi: f64,
    pub c: f64,
}

impl Annulus {
    pub fn mass(&self) -> f64 {
        self.c * (self.hi * self.hi - self.lo * self.lo)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialMeasure {
    pub atoms: Vec<Atom>,
    pub annuli: Vec<Annulus>,
}

/// `u² log u - u²/2`, so that `∫_a^b 2u log u du = F(b) - F(a)`.
fn f_ann(u: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u * u * u.ln() - u * u / 2.0
    }
}

fn s2_log_s(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s * s.ln()
    }
}

/// Coefficients of `U(s) = A + B log s + C s²` on one segment.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Segment {
    a: f64,
    b: f64,
    c: f64,
}

impl Segment {
    fn eval(&self, s: f64) -> f64 {
        let log_part = if self.b == 0.0 { 0.0 } else { self.b * s.ln() };
        self.a + log_part + self.c * s * s
    }

    /// `∫_u^v U(s) · 2 s ds`
    fn moment(&self, u: f64, v: f64) -> f64 {
        let anti = |s: f64| self.a * s * s + self.b * (s2_log_s(s) - s * s / 2.0) + self.c * s.powi(4) / 2.0;
        anti(v) - anti(u)
    }
}

impl RadialMeasure {
    /// Validated construction; zero-mass pieces are dropped.
    pub fn new(atoms: Vec<Atom>, annuli: Vec<Annulus>) -> Result<Self> {
        for a in &atoms {
            if !(a.r >= 0.0 && a.r.is_finite() && a.mass >= 0.0 && a.mass.is_finite()) {
                return arg_err(format!("invalid atom {a:?}"));
            }
        }
        let mut annuli: Vec<Annulus> = annuli.into_iter().filter(|a| a.c != 0.0).collect();
        for a in &annuli {
            if !(a.lo >= 0.0 && a.lo < a.hi && a.hi.is_finite() && a.c > 0.0) {
                return arg_err(format!("invalid annulus {a:?}"));
            }
        }
        annuli.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        for w in annuli.windows(2) {
            if w[1].lo < w[0].hi {
                return arg_err("annuli overlap");
            }
        }
        let atoms = atoms.into_iter().filter(|a| a.mass > 0.0).collect();
        Ok(RadialMeasure { atoms, annuli })
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum::<f64>() + self.annuli.iter().map(Annulus::mass).sum::<f64>()
    }

    pub fn is_probability(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= 1e-12
    }

    /// The same measure multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        RadialMeasure {
            atoms: self.atoms.iter().map(|a| Atom { r: a.r, mass: a.mass * k }).collect(),
            annuli: self.annuli.iter().map(|a| Annulus { c: a.c * k, ..*a }).collect(),
        }
    }

    /// Outer radius of the support.
    pub fn support_radius(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a.r).fold(0.0, f64::max);
        self.annuli.iter().map(|a| a.hi).fold(a, f64::max)
    }

    /// Sorted radii where the potential changes form.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().map(|a| a.r).collect();
        for a in &self.annuli {
            b.push(a.lo);
            b.push(a.hi);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn segment_at(&self, s: f64) -> Segment {
        let mut seg = Segment::default();
        for a in &self.atoms {
            if s <= a.r {
                if a.r == 0.0 {
                    seg.a = f64::NEG_INFINITY;
                } else {
                    seg.a += a.mass * a.r.ln();
                }
            } else {
                seg.b += a.mass;
            }
        }
        for an in &self.annuli {
            if s <= an.lo {
                seg.a += an.c * (f_ann(an.hi) - f_ann(an.lo));
            } else if s < an.hi {
                seg.a += an.c * f_ann(an.hi);
                seg.b -= an.c * an.lo * an.lo;
                seg.c += an.c / 2.0;
            } else {
                seg.b += an.c * (an.hi * an.hi - an.lo * an.lo);
            }
        }
        seg
    }

    /// Logarithmic potential `U_ν(s)` at radius `s`.
    pub fn log_potential(&self, s: f64) -> f64 {
        if s == 0.0 && self.atoms.iter().any(|a| a.r == 0.0) {
            return f64::NEG_INFINITY;
        }
        self.segment_at(s).eval(s)
    }

    /// `ν(D_s)` (open) or `ν(D̄_s)` (closed).
    pub fn mass_in_disk(&self, s: f64, closed: bool) -> f64 {
        let atoms: f64 =
            self.atoms.iter().filter(|a| if closed { a.r <= s } else { a.r < s }).map(|a| a.mass).sum();
        let ann: f64 = self
            .annuli
            .iter()
            .map(|a| {
                let top = s.clamp(a.lo, a.hi);
                a.c * (top * top - a.lo * a.lo)
            })
            .sum();
        atoms + ann
    }

    /// `∫ |w|² dν`
    pub fn second_moment(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass * a.r * a.r).sum::<f64>()
            + self.annuli.iter().map(|a| a.c * (a.hi.powi(4) - a.lo.powi(4)) / 2.0).sum::<f64>()
    }

    /// `∫ U_self dμ` for another measure `μ`.
    pub fn potential_against(&self, mu: &RadialMeasure) -> f64 {
        let mut total = 0.0;
        for a in &mu.atoms {
            total += a.mass * self.log_potential(a.r);
        }
        let bps = self.breakpoints();
        for an in &mu.annuli {
            let mut cuts = vec![an.lo];
            cuts.extend(bps.iter().copied().filter(|b| *b > an.lo && *b < an.hi));
            cuts.push(an.hi);
            for w in cuts.windows(2) {
                let seg = self.segment_at(0.5 * (w[0] + w[1]));
                total += an.c * seg.moment(w[0], w[1]);
            }
        }
        total
    }

    /// `∫ φ dν` for a test function, through its circle means.
    pub fn integrate_test<F: TestFunction + ?Sized>(&self, phi: &F) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|a| a.mass * phi.circle_mean(a.r)).sum();
        let ann: f64 = self
            .annuli
            .iter()
            .map(|a| integrate(|s| 2.0 * a.c * s * phi.circle_mean(s), a.lo, a.hi, 1e-13, 1e-12).value)
            .sum();
        atoms + ann
    }
}

/// Logarithmic potential at radius `s`.
pub fn log_potential(nu: &RadialMeasure, s: f64) -> f64 {
    nu.log_potential(s)
}

/// `Σ(ν) = ∫ U_ν dν`; a circle atom of radius `t` contributes self-energy `m² log t`.
pub fn log_energy(nu: &RadialMeasure) -> Result<f64> {
    if nu.atoms.iter().any(|a| a.r == 0.0) {
        return Err(Error::InfiniteEnergy("point mass at the origin".into()));
    }
    Ok(nu.potential_against(nu))
}

/// `Σ(ν - μ) = Σ(ν) - 2∫U_ν dμ + Σ(μ)`
pub fn signed_energy(nu: &RadialMeasure, mu: &RadialMeasure) -> Result<f64> {
    Ok(log_energy(nu)? - 2.0 * nu.potential_against(mu) + log_energy(mu)?)
}

/// `B_α(ν) = 2 max_{0≤s≤√α} (U_ν(s) - s²/(2α))` and the smallest maximizing radius.
pub fn b_alpha(nu: &RadialMeasure, alpha: f64) -> (f64, f64) {
    b_alpha_on(nu, alpha, alpha.sqrt())
}

/// As [`b_alpha`] but with the sup taken over `[0, s_max]`.
pub fn b_alpha_on(nu: &RadialMeasure, alpha: f64, s_max: f64) -> (f64, f64) {
    let g = |s: f64| nu.log_potential(s) - s * s / (2.0 * alpha);
    let mut cuts = vec![0.0];
    cuts.extend(nu.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < s_max));
    cuts.push(s_max);
    let mut best = (f64::NEG_INFINITY, 0.0);
    let consider = |s: f64, best: &mut (f64, f64)| {
        let v = g(s);
        if best.0 == f64::NEG_INFINITY || v > best.0 + 1e-13 * best.0.abs().max(1.0) {
            *best = (v, s);
        }
    };
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        consider(u, &mut best);
        let seg = nu.segment_at(0.5 * (u + v));
        let c = seg.c - 1.0 / (2.0 * alpha);
        if c != 0.0 && -seg.b / c > 0.0 {
            let st = (-seg.b / (2.0 * c)).sqrt();
            if st > u && st < v {
                consider(st, &mut best);
            }
        }
    }
    consider(s_max, &mut best);
    (2.0 * best.0, best.1)
}

/// `g_ν(s) = U_ν(s) - s²/(2α) - B_α(ν)/2`, nonpositive everywhere.
pub fn g_nu(nu: &RadialMeasure, alpha: f64, b: f64, s: f64) -> f64 {
    nu.log_potential(s) - s * s / (2.0 * alpha) - b / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
}

/// Convention note carried by every report.
pub const J_CONVENTION: &str =
    "j_alpha uses |w|^2/alpha; j_alpha_half uses |w|^2/(2 alpha), the convention inside B_alpha";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    /// `(radius, U_ν(radius))` at the breakpoints and the maximizer
    pub u_at: Vec<(f64, f64)>,
    pub energy: f64,
    pub b_alpha: f64,
    pub i_alpha: f64,
    pub j_alpha: f64,
    pub j_alpha_half: f64,
    pub argmax_w: f64,
    pub method: Method,
    pub convention: &'static str,
}

fn check_probability(nu: &RadialMeasure) -> Result<()> {
    if !nu.is_probability() {
        return arg_err(format!("expected a probability measure, total mass {}", nu.total_mass()));
    }
    Ok(())
}

/// `I_α(ν) = B_α(ν) - Σ(ν)` together with its ingredients.
pub fn functional_i(nu: &RadialMeasure, alpha: f64) -> Result<FunctionalReport> {
    check_probability(nu)?;
    let energy = log_energy(nu)?;
    let (b, argmax) = b_alpha(nu, alpha);
    let mut u_at: Vec<(f64, f64)> = nu.breakpoints().into_iter().map(|s| (s, nu.log_potential(s))).collect();
    u_at.push((argmax, nu.log_potential(argmax)));
    let m2 = nu.second_moment();
    Ok(FunctionalReport {
        u_at,
        energy,
        b_alpha: b,
        i_alpha: b - energy,
        j_alpha: m2 / alpha - energy,
        j_alpha_half: m2 / (2.0 * alpha) - energy,
        argmax_w: argmax,
        method: Method::ClosedForm,
        convention: J_CONVENTION,
    })
}

/// `J_α(ν) = ∫ |w|²/α dν - Σ(ν)`
pub fn functional_j(nu: &RadialMeasure, alpha: f64) -> Result<f64> {
    Ok(nu.second_moment() / alpha - log_energy(nu)?)
}

/// `∫ |w|²/(2α) dν - Σ(ν)`, the weighted energy whose minimum is `F_α`.
pub fn functional_j_half(nu: &RadialMeasure, alpha: f64) -> Result<f64> {
    Ok(nu.second_moment() / (2.0 * alpha) - log_energy(nu)?)
}

/// Both sides of Jensen's formula `U(r) - U(0) = ∫_0^r ν(D̄_t)/t dt`, the
/// right side from the mass profile alone.
pub fn jensen_check(nu: &RadialMeasure, r: f64) -> Result<(f64, f64)> {
    if nu.atoms.iter().any(|a| a.r == 0.0) {
        return Err(Error::InfiniteEnergy("point mass at the origin".into()));
    }
    if !(r > 0.0) {
        return arg_err("Jensen check needs r > 0");
    }
    let lhs = nu.log_potential(r) - nu.log_potential(0.0);
    let mut rhs = 0.0;
    for a in &nu.atoms {
        if a.r < r {
            rhs += a.mass * (r / a.r).ln();
        }
    }
    for an in &nu.annuli {
        if an.lo >= r {
            continue;
        }
        let top = an.hi.min(r);
        // ∫ c (t² - lo²)/t dt from lo to top
        let log_part = if an.lo == 0.0 { 0.0 } else { an.lo * an.lo * (top / an.lo).ln() };
        rhs += an.c * ((top * top - an.lo * an.lo) / 2.0 - log_part);
        if r > an.hi {
            rhs += an.mass() * (r / an.hi).ln();
        }
    }
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapBound {
    pub lhs: f64,
    pub rhs: f64,
    pub signed_energy: f64,
    pub holds: bool,
}

/// `|∫φ dν - ∫φ dμ| ≤ (2π)^{-1/2} √𝔇(φ) √(-Σ(ν-μ))`, with `𝔇(φ)` supplied.
pub fn lin_stats_gap_bound<F: TestFunction + ?Sized>(
    nu: &RadialMeasure,
    mu: &RadialMeasure,
    phi: &F,
    dirichlet: f64,
) -> Result<GapBound> {
    let se = signed_energy(nu, mu)?;
    if se > 1e-12 {
        return Err(Error::NegativeDiscriminant(se));
    }
    let lhs = (nu.integrate_test(phi) - mu.integrate_test(phi)).abs();
    let rhs = (dirichlet / (2.0 * std::f64::consts::PI)).sqrt() * (-se).max(0.0).sqrt();
    Ok(GapBound { lhs, rhs, signed_energy: se, holds: lhs <= rhs * (1.0 + 1e-6) + 1e-12 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Catalog {
    GefConstrained,
    GefGlobalRadon,
    Ginibre,
}

/// The equilibrium measure: uniform probability on the disk of radius `√α`.
pub fn equilibrium(alpha: f64) -> RadialMeasure {
    RadialMeasure { atoms: vec![], annuli: vec![Annulus { lo: 0.0, hi: alpha.sqrt(), c: 1.0 / alpha }] }
}

/// Closed-form constrained minimizers.
pub fn catalog(p: f64, alpha: f64, which: Catalog) -> Result<RadialMeasure> {
    if !(p >= 0.0) || p == 1.0 {
        return arg_err(format!("catalog needs p >= 0, p != 1, got {p}"));
    }
    let e = std::f64::consts::E;
    let q = q_of_p(p)?;
    let floor = match which {
        Catalog::Ginibre => p.max(1.0),
        _ => p.max(q).max(e),
    };
    if !(alpha > floor) {
        return arg_err(format!("alpha = {alpha} must exceed {floor}"));
    }
    let ia = 1.0 / alpha;
    let disk = |hi: f64| Annulus { lo: 0.0, hi, c: ia };
    let outer = |lo: f64| Annulus { lo, hi: alpha.sqrt(), c: ia };
    let ring = |m: f64| Atom { r: 1.0, mass: m };
    let (atoms, annuli) = match which {
        Catalog::Ginibre if p < 1.0 => (vec![ring((1.0 - p) * ia)], vec![disk(p.sqrt()), outer(1.0)]),
        Catalog::Ginibre => (vec![ring((p - 1.0) * ia)], vec![disk(1.0), outer(p.sqrt())]),
        _ if p < 1.0 => (vec![ring((q - p) * ia)], vec![disk(p.sqrt()), outer(q.sqrt())]),
        _ if p < e => (vec![ring((p - q) * ia)], vec![disk(q.sqrt()), outer(p.sqrt())]),
        _ => (vec![ring(p * ia)], vec![outer(p.sqrt())]),
    };
    let annuli = annuli.into_iter().filter(|a| a.hi > a.lo).collect();
    let nu = RadialMeasure::new(atoms, annuli)?;
    Ok(if which == Catalog::GefGlobalRadon { nu.scaled(alpha) } else { nu })
}

/// `I_α` of the GEF minimizer in closed form, `log α/2 - 3/4 + Z_p/α²`.
///
/// For `p < 1` this is `log α/2 - 3/4 + [q²(2log q - 1) - p²(2log p - 1)]/(4α²)`;
/// for `p > 1` the bracket enters with the opposite sign, which keeps `I_α`
/// above its global minimum `log α/2 - 3/4`.
pub fn catalog_i_closed_form(p: f64, alpha: f64) -> Result<f64> {
    Ok(alpha.ln() / 2.0 - 0.75 + z_const(p)? / (alpha * alpha))
}

/// `U_ν(s)` from the defining double integral, by nested adaptive quadrature
/// in the angle and the radius. Independent of the closed forms above.
pub fn log_potential_quadrature(nu: &RadialMeasure, s: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let circle = |rho: f64| {
        let f = |th: f64| (s * s + rho * rho - 2.0 * s * rho * th.cos()).max(1e-300).ln() / 2.0;
        integrate(f, 0.0, pi, 1e-13, 1e-12).value / pi
    };
    let mut total = 0.0;
    for a in &nu.atoms {
        total += a.mass * circle(a.r);
    }
    for an in &nu.annuli {
        total += integrate_pieces(|rho| 2.0 * an.c * rho * circle(rho), an.lo, an.hi, &[s], 1e-12, 1e-11);
    }
    total
}

/// `I_α(ν)` by one-dimensional quadrature: the potential through the radial
/// identity `∫ log max(ρ, s) dν(ρ)`, the energy by integrating it against
/// `ν`, and `B_α` by a grid search refined with golden sections.
pub fn functional_i_quadrature(nu: &RadialMeasure, alpha: f64) -> Result<FunctionalReport> {
    check_probability(nu)?;
    if nu.atoms.iter().any(|a| a.r == 0.0) {
        return Err(Error::InfiniteEnergy("point mass at the origin".into()));
    }
    let u = |s: f64| -> f64 {
        let mut v: f64 = nu.atoms.iter().map(|a| a.mass * a.r.max(s).ln()).sum();
        for an in &nu.annuli {
            v += integrate_pieces(
                |rho| 2.0 * an.c * rho * if rho == 0.0 && s == 0.0 { 0.0 } else { rho.max(s).ln() },
                an.lo,
                an.hi,
                &[s],
                1e-14,
                1e-13,
            );
        }
        v
    };
    let bps = nu.breakpoints();
    let mut energy: f64 = nu.atoms.iter().map(|a| a.mass * u(a.r)).sum();
    for an in &nu.annuli {
        energy += integrate_pieces(|s| 2.0 * an.c * s * u(s), an.lo, an.hi, &bps, 1e-12, 1e-11);
    }
    let g = |s: f64| u(s) - s * s / (2.0 * alpha);
    let sa = alpha.sqrt();
    let grid = 2000;
    let (mut best_s, mut best) = (0.0, g(0.0));
    for k in 1..=grid {
        let s = sa * k as f64 / grid as f64;
        let v = g(s);
        if v > best {
            best = v;
            best_s = s;
        }
    }
    let h = sa / grid as f64;
    let (mut a, mut b) = ((best_s - h).max(0.0), (best_s + h).min(sa));
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let x1 = b - ratio * (b - a);
        let x2 = a + ratio * (b - a);
        if g(x1) >= g(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let mid = 0.5 * (a + b);
    if g(mid) > best {
        best = g(mid);
        best_s = mid;
    }
    let m2 = nu.second_moment();
    let b_val = 2.0 * best;
    Ok(FunctionalReport {
        u_at: vec![(best_s, u(best_s))],
        energy,
        b_alpha: b_val,
        i_alpha: b_val - energy,
        j_alpha: m2 / alpha - energy,
        j_alpha_half: m2 / (2.0 * alpha) - energy,
        argmax_w: best_s,
        method: Method::Quadrature,
        convention: J_CONVENTION,
    })
}
