//! Minimization of `I_α` over radial probability measures carried by
//! concentric circles ("shells"), under the disk-mass constraints
//! `ν(D) ≤ p/α` or `ν(D̄) ≥ p/α`.
//!
//! Shell `i` is the uniform measure on `|z| = r_i`; the shell at the origin is
//! smoothed to the circle of radius `t`. With these conventions the discrete
//! objective is the exact `I_α` of the shell measure, and all the linear
//! operators below are evaluated in `O(M)` with prefix sums.

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, Result};
use crate::radial::{self, Atom, RadialMeasure};
use crate::testfn::TestFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    None,
    /// `ν(|z| < 1) ≤ bound`
    Fp { bound: f64 },
    /// `ν(|z| ≤ 1) ≥ bound`
    Mp { bound: f64 },
}

impl Constraint {
    /// `ℱ_p` for `p < 1` and `ℳ_p` for `p > 1`, with bound `p/α`.
    pub fn for_p(p: f64, alpha: f64) -> Result<Self> {
        if !(p >= 0.0) || p == 1.0 {
            return arg_err(format!("constraint needs p >= 0, p != 1, got {p}"));
        }
        Ok(if p < 1.0 { Constraint::Fp { bound: p / alpha } } else { Constraint::Mp { bound: p / alpha } })
    }

    /// Whether shell radius `r` counts towards the constrained disk.
    fn inner(&self, r: f64) -> bool {
        match self {
            Constraint::None => false,
            Constraint::Fp { .. } => r < 1.0,
            Constraint::Mp { .. } => r <= 1.0,
        }
    }

    /// Amount by which the inner mass violates the constraint (0 if feasible).
    fn violation(&self, inner_mass: f64) -> f64 {
        match *self {
            Constraint::None => 0.0,
            Constraint::Fp { bound } => (inner_mass - bound).max(0.0),
            Constraint::Mp { bound } => (bound - inner_mass).max(0.0),
        }
    }
}

/// Masses on circles of increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellGrid {
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub constraint: Constraint,
}

impl ShellGrid {
    pub fn new(radii: Vec<f64>, masses: Vec<f64>, constraint: Constraint) -> Result<Self> {
        if radii.is_empty() || radii.len() != masses.len() {
            return arg_err("radii and masses must be nonempty and of equal length");
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return arg_err("radii must be nonnegative and strictly increasing");
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return arg_err("masses must be nonnegative");
        }
        Ok(ShellGrid { radii, masses, constraint })
    }

    /// Radii uniform on `[0, 1)` and on `[1, √α]` (so 1 is a shell), `m` in total.
    pub fn uniform_radii(m: usize, alpha: f64) -> Result<Vec<f64>> {
        if !(alpha > 1.0) || m < 4 {
            return arg_err("shell grid needs alpha > 1 and at least 4 shells");
        }
        let sa = alpha.sqrt();
        let n0 = ((m as f64 / sa).round() as usize).clamp(1, m - 2);
        let n1 = m - n0;
        let mut radii: Vec<f64> = (0..n0).map(|i| i as f64 / n0 as f64).collect();
        radii.extend((0..n1).map(|j| 1.0 + (sa - 1.0) * j as f64 / (n1 - 1) as f64));
        Ok(radii)
    }

    /// Shells approximating the uniform measure on `D(0, √α)`.
    pub fn equilibrium(m: usize, alpha: f64) -> Result<Self> {
        let radii = Self::uniform_radii(m, alpha)?;
        let masses = cell_masses(&radii, |_| 1.0 / alpha);
        let mut g = ShellGrid::new(radii, masses, Constraint::None)?;
        g.normalize();
        Ok(g)
    }

    /// Shells approximating a radial measure: annulus mass is lumped onto the
    /// nearest shells, atoms onto the nearest radius.
    pub fn from_measure(nu: &RadialMeasure, radii: Vec<f64>, constraint: Constraint) -> Result<Self> {
        let mut masses = cell_masses(&radii, |s| {
            nu.annuli.iter().filter(|a| s >= a.lo && s <= a.hi).map(|a| a.c).sum::<f64>()
        });
        for a in &nu.atoms {
            let k = nearest(&radii, a.r);
            masses[k] += a.mass;
        }
        let mut g = ShellGrid::new(radii, masses, constraint)?;
        g.normalize();
        Ok(g)
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    fn normalize(&mut self) {
        let t = self.total_mass();
        for m in &mut self.masses {
            *m /= t;
        }
    }

    /// Half the minimal gap between radii, the default self-energy smoothing.
    pub fn default_smoothing(&self) -> f64 {
        let g = self.radii.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if g.is_finite() {
            g / 2.0
        } else {
            self.radii[0].max(1e-3) / 2.0
        }
    }

    /// Mass counted by the constraint (open unit disk for `ℱ_p`, closed for `ℳ_p`).
    pub fn inner_mass(&self) -> f64 {
        self.radii.iter().zip(&self.masses).filter(|(r, _)| self.constraint.inner(**r)).map(|(_, m)| m).sum()
    }

    /// Mass on shells with radius in `(lo, hi)`.
    pub fn mass_between(&self, lo: f64, hi: f64) -> f64 {
        self.radii.iter().zip(&self.masses).filter(|(r, _)| **r > lo && **r < hi).map(|(_, m)| m).sum()
    }

    /// `|Σ m - 1|` plus the constraint violation.
    pub fn infeasibility(&self) -> f64 {
        (self.total_mass() - 1.0).abs() + self.constraint.violation(self.inner_mass())
    }

    /// Effective radii: the shell at the origin sits at `t`.
    fn rho(&self, t: f64) -> Vec<f64> {
        self.radii.iter().map(|r| r.max(t)).collect()
    }

    /// The shell measure as circle atoms.
    pub fn to_measure(&self, t: f64) -> RadialMeasure {
        let atoms = self.rho(t).into_iter().zip(&self.masses).map(|(r, m)| Atom { r, mass: *m }).collect();
        RadialMeasure { atoms, annuli: vec![] }
    }
}

/// Mass of the cells around each radius for density `c(s) dm/π`, cells split
/// at midpoints.
fn cell_masses<F: Fn(f64) -> f64>(radii: &[f64], c: F) -> Vec<f64> {
    let n = radii.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { radii[0] } else { 0.5 * (radii[i - 1] + radii[i]) };
            let hi = if i + 1 == n { radii[n - 1] } else { 0.5 * (radii[i] + radii[i + 1]) };
            // midpoint density over the cell
            c(radii[i]) * (hi * hi - lo * lo)
        })
        .collect()
}

fn nearest(radii: &[f64], r: f64) -> usize {
    let k = radii.partition_point(|x| *x < r);
    if k == 0 {
        0
    } else if k == radii.len() || (r - radii[k - 1]) <= (radii[k] - r) {
        k - 1
    } else {
        k
    }
}

/// `(K m)_i = Σ_j m_j log max(ρ_i, ρ_j)` for increasing `ρ`.
fn kernel_apply(rho: &[f64], log_rho: &[f64], m: &[f64], out: &mut [f64]) {
    let n = rho.len();
    let mut suffix = 0.0;
    for i in (0..n).rev() {
        out[i] = suffix;
        suffix += m[i] * log_rho[i];
    }
    let mut prefix = 0.0;
    for i in 0..n {
        prefix += m[i];
        out[i] += prefix * log_rho[i];
    }
}

/// Probe operator `(P m)_k = Σ_j m_j log max(s_k, ρ_j)` and its transpose.
struct Probes {
    s: Vec<f64>,
    log_s: Vec<f64>,
    w: Vec<f64>,
}

impl Probes {
    fn new(rho: &[f64], alpha: f64, per_gap: usize) -> Self {
        let sa = alpha.sqrt();
        // probes start at ρ_0 > 0; below it g only decreases by s²/2α
        let mut s = Vec::new();
        for (i, r) in rho.iter().enumerate() {
            let next = rho.get(i + 1).copied().unwrap_or(sa).min(sa);
            if *r > sa {
                break;
            }
            s.push(*r);
            for k in 1..per_gap {
                let x = r + (next - r) * k as f64 / per_gap as f64;
                if x > *r && x < next {
                    s.push(x);
                }
            }
        }
        if *s.last().unwrap() < sa {
            s.push(sa);
        }
        s.sort_by(f64::total_cmp);
        s.dedup();
        let log_s = s.iter().map(|x| x.ln()).collect();
        let w = s.iter().map(|x| x * x / (2.0 * alpha)).collect();
        Probes { s, log_s, w }
    }

    fn apply(&self, rho: &[f64], log_rho: &[f64], m: &[f64], out: &mut [f64]) {
        // walk probes upward, shells with ρ_j ≤ s_k contribute log s_k
        let n = rho.len();
        let total_tail: f64 = m.iter().zip(log_rho).map(|(a, b)| a * b).sum();
        let (mut j, mut below, mut tail) = (0, 0.0, total_tail);
        for (k, s) in self.s.iter().enumerate() {
            while j < n && rho[j] <= *s {
                below += m[j];
                tail -= m[j] * log_rho[j];
                j += 1;
            }
            out[k] = below * self.log_s[k] + tail;
        }
    }

    fn apply_t(&self, rho: &[f64], log_rho: &[f64], lam: &[f64], out: &mut [f64]) {
        // (Pᵀλ)_j = log ρ_j Σ_{s_k < ρ_j} λ_k + Σ_{s_k ≥ ρ_j} λ_k log s_k
        let ns = self.s.len();
        let total: f64 = lam.iter().zip(&self.log_s).map(|(a, b)| a * b).sum();
        let (mut k, mut below, mut tail) = (0, 0.0, total);
        for j in 0..rho.len() {
            while k < ns && self.s[k] < rho[j] {
                below += lam[k];
                tail -= lam[k] * self.log_s[k];
                k += 1;
            }
            out[j] = below * log_rho[j] + tail;
        }
    }
}

/// Exact `B_α` of a shell measure and the smallest maximizing radius. On the
/// gap after shell `k` the potential is `A_k + B_k log s`, stationary for
/// `g = U - s²/2α` at `s² = α B_k`.
fn shell_b_alpha(rho: &[f64], log_rho: &[f64], m: &[f64], alpha: f64) -> (f64, f64) {
    let n = rho.len();
    let sa = alpha.sqrt();
    let mut tail: f64 = m.iter().zip(log_rho).map(|(a, b)| a * b).sum();
    let mut best = (tail, 0.0); // s = 0
    let mut below = 0.0;
    let consider = |s: f64, v: f64, best: &mut (f64, f64)| {
        if v > best.0 + 1e-14 * best.0.abs().max(1.0) {
            *best = (v, s);
        }
    };
    for j in 0..n {
        if rho[j] > sa {
            break;
        }
        below += m[j];
        tail -= m[j] * log_rho[j];
        let u = rho[j];
        consider(u, below * log_rho[j] + tail - u * u / (2.0 * alpha), &mut best);
        let v = if j + 1 < n { rho[j + 1].min(sa) } else { sa };
        let st = (alpha * below).sqrt();
        if st > u && st < v {
            consider(st, below * st.ln() + tail - st * st / (2.0 * alpha), &mut best);
        }
        if v == sa && v > u {
            consider(sa, below * sa.ln() + tail - alpha / (2.0 * alpha), &mut best);
        }
    }
    (2.0 * best.0, best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscreteReport {
    pub i_alpha: f64,
    pub b_alpha: f64,
    pub energy: f64,
    pub argmax: f64,
}

/// `I_α` of the shell measure with self-energy smoothing `t`.
pub fn discrete_i(grid: &ShellGrid, alpha: f64, t: f64) -> DiscreteReport {
    let rho = grid.rho(t);
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let mut u = vec![0.0; rho.len()];
    kernel_apply(&rho, &log_rho, &grid.masses, &mut u);
    let energy: f64 = u.iter().zip(&grid.masses).map(|(a, b)| a * b).sum();
    let (b, argmax) = shell_b_alpha(&rho, &log_rho, &grid.masses, alpha);
    DiscreteReport { i_alpha: b - energy, b_alpha: b, energy, argmax }
}

/// Euclidean projection onto `{x ≥ 0, Σx = total}`.
fn project_simplex(v: &mut [f64], total: f64) {
    if v.is_empty() {
        return;
    }
    if total <= 0.0 {
        v.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, x) in u.iter().enumerate() {
        cum += x;
        let th = (cum - total) / (k + 1) as f64;
        if x - th > 0.0 {
            theta = th;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Projection onto the simplex intersected with the disk-mass constraint:
/// if the plain simplex projection is infeasible the constraint is active,
/// and the inner and outer groups are projected onto simplices of mass
/// `bound` and `1 - bound`.
fn project_feasible(v: &mut [f64], inner: &[bool], constraint: Constraint) {
    let orig = v.to_vec();
    project_simplex(v, 1.0);
    let inner_mass: f64 = v.iter().zip(inner).filter(|(_, i)| **i).map(|(x, _)| x).sum();
    let bound = match constraint {
        Constraint::None => return,
        Constraint::Fp { bound } | Constraint::Mp { bound } => bound,
    };
    if constraint.violation(inner_mass) == 0.0 {
        return;
    }
    let (mut a, mut b): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for (x, i) in orig.iter().zip(inner) {
        if *i {
            a.push(*x)
        } else {
            b.push(*x)
        }
    }
    project_simplex(&mut a, bound);
    project_simplex(&mut b, 1.0 - bound);
    let (mut ia, mut ib) = (a.into_iter(), b.into_iter());
    for (x, i) in v.iter_mut().zip(inner) {
        *x = if *i { ia.next().unwrap() } else { ib.next().unwrap() };
    }
}

/// Projection onto `{λ ≥ 0, Σλ = 2}`.
fn project_dual(v: &mut [f64]) {
    project_simplex(v, 2.0);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Primal-dual splitting on `min_m max_{λ ∈ 2Δ} λ·(Pm - w) - mᵀKm`.
    #[default]
    PrimalDual,
    /// Projected subgradient with steps `a/√k`.
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub shells: usize,
    /// Probes per shell gap used by the primal-dual solver.
    pub probes_per_gap: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { shells: 800, probes_per_gap: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub max_iter: usize,
    /// Stop once the best objective improved by less than this over the last
    /// `patience` iterations.
    pub tol: f64,
    pub patience: usize,
    pub solver: Solver,
    /// Subgradient step scale `a`.
    pub step: f64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_iter: 200_000, tol: 1e-8, patience: 10_000, solver: Solver::PrimalDual, step: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    /// best-so-far exact objective
    pub i_alpha: f64,
    pub feasibility: f64,
    pub argmax_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimized {
    pub grid: ShellGrid,
    pub smoothing_t: f64,
    pub report: DiscreteReport,
    pub trace: Vec<TraceRow>,
    pub iterations: usize,
    /// Budget ran out before the stall criterion fired.
    pub budget_exhausted: bool,
    /// `⟨g, m⟩ - min_{m' feasible} ⟨g, m'⟩` for a subgradient `g`; bounds the
    /// optimality gap from above.
    pub gap_estimate: f64,
}

/// A feasible starting point: the equilibrium shell weights with the
/// constraint enforced by projection.
fn initial_masses(radii: &[f64], alpha: f64, constraint: Constraint, inner: &[bool]) -> Vec<f64> {
    let mut m = cell_masses(radii, |_| 1.0 / alpha);
    let s: f64 = m.iter().sum();
    m.iter_mut().for_each(|x| *x /= s);
    project_feasible(&mut m, inner, constraint);
    m
}

/// Minimize `I_α` over shell measures on `grid_spec.shells` radii.
pub fn minimize(alpha: f64, constraint: Constraint, grid_spec: GridSpec, budget: Budget) -> Result<Minimized> {
    if !(alpha > std::f64::consts::E) {
        return arg_err(format!("minimize needs alpha > e, got {alpha}"));
    }
    match constraint {
        Constraint::Fp { bound } | Constraint::Mp { bound } if !(0.0..1.0).contains(&bound) => {
            return arg_err(format!("constraint bound {bound} outside [0, 1)"));
        }
        _ => {}
    }
    let radii = ShellGrid::uniform_radii(grid_spec.shells, alpha)?;
    let inner: Vec<bool> = radii.iter().map(|r| constraint.inner(*r)).collect();
    let masses = if grid_spec.shells >= 2 * COARSEST {
        // warm start from the solution on half as many shells
        let coarse = minimize(alpha, constraint, GridSpec { shells: grid_spec.shells / 2, ..grid_spec }, budget)?;
        let mut m = transfer(&coarse.grid, &radii);
        project_feasible(&mut m, &inner, constraint);
        m
    } else {
        initial_masses(&radii, alpha, constraint, &inner)
    };
    let grid = ShellGrid::new(radii, masses, constraint)?;
    let t = grid.default_smoothing();
    match budget.solver {
        Solver::PrimalDual => primal_dual(grid, t, alpha, &inner, grid_spec, budget),
        Solver::Subgradient => subgradient(grid, t, alpha, &inner, budget),
    }
}

/// Grids below this size are solved from a cold start.
const COARSEST: usize = 100;

/// Move each coarse shell's mass onto the fine radii, splitting it linearly
/// between the two neighbours. Coarse shells on the unit circle stay there.
fn transfer(coarse: &ShellGrid, radii: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; radii.len()];
    for (r, w) in coarse.radii.iter().zip(&coarse.masses) {
        let k = radii.partition_point(|x| x < r);
        if k == radii.len() {
            m[k - 1] += w;
        } else if radii[k] == *r || k == 0 {
            m[k] += w;
        } else {
            let f = (r - radii[k - 1]) / (radii[k] - radii[k - 1]);
            m[k - 1] += w * (1.0 - f);
            m[k] += w * f;
        }
    }
    m
}

struct Tracker {
    best: Vec<f64>,
    best_val: f64,
    best_report: DiscreteReport,
    trace: Vec<TraceRow>,
}

impl Tracker {
    fn new(grid: &ShellGrid, t: f64, alpha: f64) -> Self {
        let r = discrete_i(grid, alpha, t);
        Tracker {
            best: grid.masses.clone(),
            best_val: r.i_alpha,
            best_report: r,
            trace: vec![TraceRow { iter: 0, i_alpha: r.i_alpha, feasibility: grid.infeasibility(), argmax_radius: r.argmax }],
        }
    }

    fn offer(&mut self, it: usize, grid: &ShellGrid, t: f64, alpha: f64) {
        let r = discrete_i(grid, alpha, t);
        if r.i_alpha < self.best_val {
            self.best_val = r.i_alpha;
            self.best_report = r;
            self.best.clone_from(&grid.masses);
        }
        self.trace.push(TraceRow {
            iter: it,
            i_alpha: self.best_val,
            feasibility: grid.infeasibility(),
            argmax_radius: r.argmax,
        });
    }

    fn stalled(&self, it: usize, patience: usize, tol: f64) -> bool {
        if it < patience {
            return false;
        }
        let k = self.trace.partition_point(|row| row.iter + patience <= it);
        k > 0 && self.trace[k - 1].i_alpha - self.best_val < tol
    }
}

/// Largest singular value of an operator by power iteration.
fn operator_norm<F: Fn(&[f64], &mut [f64]), G: Fn(&[f64], &mut [f64])>(n: usize, m: usize, a: F, at: G) -> f64 {
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; m];
    let mut norm = 0.0;
    for _ in 0..60 {
        a(&x, &mut y);
        at(&y, &mut x);
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 {
            return 0.0;
        }
        norm = nx.sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
    }
    norm
}

fn primal_dual(
    mut grid: ShellGrid,
    t: f64,
    alpha: f64,
    inner: &[bool],
    spec: GridSpec,
    budget: Budget,
) -> Result<Minimized> {
    let rho = grid.rho(t);
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let probes = Probes::new(&rho, alpha, spec.probes_per_gap.max(1));
    let (n, ns) = (rho.len(), probes.s.len());

    let p_norm = operator_norm(
        n,
        ns,
        |x, y| probes.apply(&rho, &log_rho, x, y),
        |y, x| probes.apply_t(&rho, &log_rho, y, x),
    );
    let k_norm = operator_norm(n, n, |x, y| kernel_apply(&rho, &log_rho, x, y), |y, x| kernel_apply(&rho, &log_rho, y, x));
    // f(m) = -mᵀKm has gradient Lipschitz constant 2‖K‖
    let lf = 2.0 * k_norm;
    let sigma = 1.0 / p_norm;
    let tau = 0.99 / (lf / 2.0 + sigma * p_norm * p_norm);

    let mut lam = vec![2.0 / ns as f64; ns];
    let mut km = vec![0.0; n];
    let mut ptl = vec![0.0; n];
    let mut pm = vec![0.0; ns];
    let mut next = vec![0.0; n];
    let mut tracker = Tracker::new(&grid, t, alpha);
    let every = 50;
    let mut it = 0;
    let mut exhausted = true;
    while it < budget.max_iter {
        it += 1;
        kernel_apply(&rho, &log_rho, &grid.masses, &mut km);
        probes.apply_t(&rho, &log_rho, &lam, &mut ptl);
        for j in 0..n {
            next[j] = grid.masses[j] - tau * (-2.0 * km[j] + ptl[j]);
        }
        project_feasible(&mut next, inner, grid.constraint);
        // extrapolated primal point for the dual step
        let bar: Vec<f64> = next.iter().zip(&grid.masses).map(|(a, b)| 2.0 * a - b).collect();
        probes.apply(&rho, &log_rho, &bar, &mut pm);
        for k in 0..ns {
            lam[k] += sigma * (pm[k] - probes.w[k]);
        }
        project_dual(&mut lam);
        std::mem::swap(&mut grid.masses, &mut next);
        if it % every == 0 {
            tracker.offer(it, &grid, t, alpha);
            if tracker.stalled(it, budget.patience, budget.tol) {
                exhausted = false;
                break;
            }
        }
    }
    finish(grid, t, alpha, inner, tracker, it, exhausted)
}

fn subgradient(mut grid: ShellGrid, t: f64, alpha: f64, inner: &[bool], budget: Budget) -> Result<Minimized> {
    let rho = grid.rho(t);
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let n = rho.len();
    let mut km = vec![0.0; n];
    let mut tracker = Tracker::new(&grid, t, alpha);
    let mut it = 0;
    let mut exhausted = true;
    while it < budget.max_iter {
        it += 1;
        let g = subgradient_at(&rho, &log_rho, &grid.masses, alpha, &mut km);
        let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let step = budget.step / (it as f64).sqrt() / gn;
        for j in 0..n {
            grid.masses[j] -= step * g[j];
        }
        project_feasible(&mut grid.masses, inner, grid.constraint);
        if it % 20 == 0 {
            tracker.offer(it, &grid, t, alpha);
            if tracker.stalled(it, budget.patience, budget.tol) {
                exhausted = false;
                break;
            }
        }
    }
    finish(grid, t, alpha, inner, tracker, it, exhausted)
}

/// Subgradient of `I_α = B_α - Σ`: `2 log max(s*, ρ_j) - 2 U_j`.
fn subgradient_at(rho: &[f64], log_rho: &[f64], m: &[f64], alpha: f64, km: &mut [f64]) -> Vec<f64> {
    kernel_apply(rho, log_rho, m, km);
    let (_, s_star) = shell_b_alpha(rho, log_rho, m, alpha);
    rho.iter().zip(km.iter()).map(|(r, u)| 2.0 * r.max(s_star).ln() - 2.0 * u).collect()
}

fn finish(
    mut grid: ShellGrid,
    t: f64,
    alpha: f64,
    inner: &[bool],
    tracker: Tracker,
    iterations: usize,
    budget_exhausted: bool,
) -> Result<Minimized> {
    grid.masses = tracker.best;
    let rho = grid.rho(t);
    let log_rho: Vec<f64> = rho.iter().map(|r| r.ln()).collect();
    let mut km = vec![0.0; rho.len()];
    let g = subgradient_at(&rho, &log_rho, &grid.masses, alpha, &mut km);
    let gap_estimate = frank_wolfe_gap(&g, &grid.masses, inner, grid.constraint);
    Ok(Minimized {
        report: tracker.best_report,
        grid,
        smoothing_t: t,
        trace: tracker.trace,
        iterations,
        budget_exhausted,
        gap_estimate,
    })
}

/// `⟨g, m⟩ - min_{m' feasible} ⟨g, m'⟩`.
fn frank_wolfe_gap(g: &[f64], m: &[f64], inner: &[bool], constraint: Constraint) -> f64 {
    let dot: f64 = g.iter().zip(m).map(|(a, b)| a * b).sum();
    let min_in = g.iter().zip(inner).filter(|(_, i)| **i).map(|(a, _)| *a).fold(f64::INFINITY, f64::min);
    let min_out = g.iter().zip(inner).filter(|(_, i)| !**i).map(|(a, _)| *a).fold(f64::INFINITY, f64::min);
    let lmo = match constraint {
        Constraint::None => min_in.min(min_out),
        Constraint::Fp { bound } => {
            // at most `bound` inside
            if min_in < min_out {
                bound * min_in + (1.0 - bound) * min_out
            } else {
                min_out
            }
        }
        Constraint::Mp { bound } => {
            // at least `bound` inside
            if min_out < min_in {
                bound * min_in + (1.0 - bound) * min_out
            } else {
                min_in
            }
        }
    };
    (dot - lmo).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationalReport {
    /// `max_ν [∫U_ν dμ - B_α(ν)/2] - [∫U_μ dμ - B_α(μ)/2]`, positive means violated
    pub max_violation: f64,
    pub violations: Vec<f64>,
}

/// Check `∫U_ν dμ - B_α(ν)/2 ≤ ∫U_μ dμ - B_α(μ)/2` for every probe `ν`.
pub fn variational_check(candidate: &RadialMeasure, probes: &[RadialMeasure], alpha: f64) -> VariationalReport {
    let (b_mu, _) = radial::b_alpha(candidate, alpha);
    let base = candidate.potential_against(candidate) - b_mu / 2.0;
    let violations: Vec<f64> = probes
        .iter()
        .map(|nu| {
            let (b_nu, _) = radial::b_alpha(nu, alpha);
            nu.potential_against(candidate) - b_nu / 2.0 - base
        })
        .collect();
    let max_violation = violations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    VariationalReport { max_violation, violations }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityGap {
    /// `I_α(ν) - I_α(μ_min)`
    pub gap_lhs: f64,
    /// `(2π/𝔇(φ)) x²` with `x = |∫φ dν - ∫φ dμ_min|`
    pub gap_rhs: f64,
    /// `-Σ(ν - μ_min)`, which sits between the two
    pub neg_signed_energy: f64,
    pub holds: bool,
}

/// Effective strict convexity: `I(ν) - I(μ_min) ≥ (2π/𝔇(φ)) x²`.
pub fn convexity_gap_check<F: TestFunction + ?Sized>(
    nu: &RadialMeasure,
    mu_min: &RadialMeasure,
    alpha: f64,
    phi: &F,
    dirichlet: f64,
) -> Result<ConvexityGap> {
    let i_nu = radial::functional_i(nu, alpha)?.i_alpha;
    let i_mu = radial::functional_i(mu_min, alpha)?.i_alpha;
    let x = (nu.integrate_test(phi) - mu_min.integrate_test(phi)).abs();
    let gap_lhs = i_nu - i_mu;
    let gap_rhs = 2.0 * std::f64::consts::PI / dirichlet * x * x;
    let neg_signed_energy = -radial::signed_energy(nu, mu_min)?;
    Ok(ConvexityGap { gap_lhs, gap_rhs, neg_signed_energy, holds: gap_lhs >= gap_rhs - 1e-9 })
}
