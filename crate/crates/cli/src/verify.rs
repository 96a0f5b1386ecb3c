//! Invariant checks across all modules, printed as a pass/fail table.

use std::f64::consts::{E, PI};
use std::time::Instant;

use clap::Args;
use gef_core::constants::{ginibre_g, q_of_p, z_const};
use gef_core::optimizer::{minimize, variational_check, Budget, GridSpec};
use gef_core::quad::integrate;
use gef_core::radial::{
    b_alpha, catalog, catalog_i_closed_form, equilibrium, functional_i_quadrature, g_nu, jensen_check, log_energy,
    Catalog,
};
use gef_core::roots::{count_in_disk, roots};
use gef_core::sampler::construct_rare_event;
use gef_core::sampler::density::{log_joint_density_of, log_mu_l_norm, log_weighted_sup};
use gef_core::sampler::energy::{discrete_energy, smoothed_energy_of};
use gef_core::sampler::{unit_disk_count, JointDensityContext};
use gef_core::series::{ln_factorial, standard_complex};
use gef_core::stats::mean_stderr;
use gef_core::{Annulus, Atom, CoeffVector, Complex64, Constraint, RadialMeasure, StreamSeed};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::resolve;
use crate::output::{Meta, Sink};
use crate::{Context, Failure, Format};

#[derive(Args, Serialize)]
pub struct VerifyArgs {
    /// Smaller sweeps; finishes in well under a minute.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub fast: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyParams {
    fast: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub check: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn(bool, StreamSeed) -> (bool, String);

const CHECKS: &[(&str, Check)] = &[
    ("constants", constants),
    ("equilibrium identities", equilibrium_identities),
    ("catalog functional", catalog_functional),
    ("optimizer", optimizer),
    ("variational", variational),
    ("joint density", joint_density),
    ("jensen", jensen),
    ("g nonpositive", g_nonpositive),
    ("smoothed energy", smoothed_energy),
    ("bernstein-markov", bernstein_markov),
    ("winding count", winding_count),
    ("first moment", first_moment),
    ("construction", construction),
];

pub fn run(ctx: &Context, a: &VerifyArgs) -> Result<(), Failure> {
    let p: VerifyParams = resolve(VerifyParams { fast: false }, &ctx.file, a)?;
    let seed = StreamSeed(ctx.seed);
    let rows: Vec<Row> = CHECKS
        .iter()
        .enumerate()
        .map(|(i, (name, check))| {
            let t0 = Instant::now();
            let (pass, detail) = check(p.fast, seed.derive(i as u64));
            Row { check: name, pass, detail, seconds: t0.elapsed().as_secs_f64() }
        })
        .collect();
    let m = Meta::new("verify", ctx.seed, serde_json::to_value(&p).expect("params serialize"), ctx.timestamp);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            sink.csv_header(&m, &["check", "status", "seconds", "detail"])?;
            for r in &rows {
                let status = if r.pass { "PASS" } else { "FAIL" };
                let detail = format!("\"{}\"", r.detail.replace('"', "'"));
                sink.csv_row(&[r.check.to_string(), status.into(), format!("{:.2}", r.seconds), detail])?;
            }
        }
        Format::Json => sink.json(&m, &json!({ "checks": rows }))?,
    }
    sink.finish()?;
    let failed: Vec<&str> = rows.iter().filter(|r| !r.pass).map(|r| r.check).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!("failed checks: {}", failed.join(", "))))
    }
}

fn constants(fast: bool, _: StreamSeed) -> (bool, String) {
    let mut ok = q_of_p(0.0) == Ok(E) && q_of_p(1.0) == Ok(1.0) && q_of_p(E) == Ok(0.0);
    let z0 = (z_const(0.0).unwrap() - E * E / 4.0).abs();
    ok &= z0 <= 1e-10;
    let step = if fast { 10 } else { 1 };
    let mut worst = 0.0f64;
    for i in (0..=300).step_by(step) {
        let p = i as f64 / 100.0;
        let q = q_of_p(p).unwrap();
        let xlx = |x: f64| if x == 0.0 { 0.0 } else { x * x.ln() };
        let z = integrate(xlx, p.min(q), p.max(q), 1e-15, 1e-14).value.abs();
        let g = integrate(|x| 1.0 - x + xlx(x), p.min(1.0), p.max(1.0), 1e-15, 1e-14).value.abs();
        worst = worst.max((z_const(p).unwrap() - z).abs()).max((ginibre_g(p).unwrap() - g).abs());
    }
    ok &= worst <= 1e-10;
    (ok, format!("|Z_0 - e^2/4| = {z0:.1e}; max quadrature gap {worst:.1e}"))
}

fn equilibrium_identities(_: bool, _: StreamSeed) -> (bool, String) {
    let mut worst = 0.0f64;
    for alpha in [8.0f64, 16.0] {
        let mu = equilibrium(alpha);
        for k in 0..=20 {
            let s = 1.5 * alpha.sqrt() * k as f64 / 20.0;
            let want = if s * s <= alpha { s * s / (2.0 * alpha) + alpha.ln() / 2.0 - 0.5 } else { s.ln() };
            worst = worst.max((mu.log_potential(s) - want).abs());
        }
        worst = worst.max((log_energy(&mu).unwrap() - (alpha.ln() / 2.0 - 0.25)).abs());
    }
    (worst <= 1e-10, format!("max deviation {worst:.1e}"))
}

fn catalog_functional(fast: bool, _: StreamSeed) -> (bool, String) {
    let ps: &[f64] = if fast { &[0.0, 0.5, 2.0, 4.0] } else { &[0.0, 0.25, 0.5, 2.0, 2.5, E, 4.0] };
    let mut worst = 0.0f64;
    for alpha in [8.0, 16.0] {
        for &p in ps {
            let nu = catalog(p, alpha, Catalog::GefConstrained).unwrap();
            let q = functional_i_quadrature(&nu, alpha).unwrap().i_alpha;
            worst = worst.max((q - catalog_i_closed_form(p, alpha).unwrap()).abs());
        }
    }
    (worst <= 1e-6, format!("max |I_quad - I_closed| = {worst:.1e}"))
}

fn optimizer(fast: bool, _: StreamSeed) -> (bool, String) {
    let alpha: f64 = 10.0;
    let shells = if fast { 300 } else { 800 };
    let c = Constraint::for_p(0.0, alpha).unwrap();
    let out = match minimize(alpha, c, GridSpec { shells, probes_per_gap: 4 }, Budget::default()) {
        Ok(o) => o,
        Err(e) => return (false, e.to_string()),
    };
    let spike = out.grid.mass_between(0.95, 1.05);
    let forbidden = out.grid.mass_between(1.05, 0.95 * E.sqrt());
    let di = (out.report.i_alpha - catalog_i_closed_form(0.0, alpha).unwrap()).abs();
    let ok = (spike - E / alpha).abs() <= 0.01 && forbidden < 1e-3 && di <= 1e-3;
    (ok, format!("{shells} shells: spike {spike:.4} (e/10 = {:.4}), forbidden {forbidden:.1e}, dI {di:.1e}", E / alpha))
}

fn random_measure<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> RadialMeasure {
    let mut cuts: Vec<f64> = (0..4).map(|_| rng.random_range(lo..hi)).collect();
    cuts.sort_by(f64::total_cmp);
    let annuli = vec![
        Annulus { lo: cuts[0], hi: cuts[1], c: rng.random_range(0.1..1.0) },
        Annulus { lo: cuts[2], hi: cuts[3], c: rng.random_range(0.1..1.0) },
    ];
    let atoms = (0..3).map(|_| Atom { r: rng.random_range(lo.max(0.05)..hi), mass: rng.random_range(0.0..1.0) }).collect();
    let nu = RadialMeasure::new(atoms, annuli).unwrap();
    nu.scaled(1.0 / nu.total_mass())
}

fn variational(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let alpha = 10.0;
    let mu = catalog(0.0, alpha, Catalog::GefConstrained).unwrap();
    let n = if fast { 20 } else { 50 };
    let probes: Vec<RadialMeasure> = (0..n).map(|_| random_measure(&mut rng, 1.0, 4.0)).collect();
    let rep = variational_check(&mu, &probes, alpha);
    (rep.max_violation <= 1e-6, format!("{n} probes, max violation {:.1e}", rep.max_violation))
}

fn joint_density(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let l = rng.random_range(0.5..4.0);
        let ctx = JointDensityContext::new(1, l).unwrap();
        let z = Complex64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let want = l * l / (PI * (1.0 + l * l * z.norm_sqr()).powi(2));
        worst = worst.max((log_joint_density_of(&[z], &ctx).unwrap().exp() / want - 1.0).abs());
    }
    let n = if fast { 8 } else { 40 };
    let ctx = JointDensityContext::new(n, 1.3).unwrap();
    let mut z: Vec<Complex64> = (0..n).map(|_| standard_complex(&mut rng) * 1.5).collect();
    let a = log_joint_density_of(&z, &ctx).unwrap();
    z.reverse();
    let perm = (a - log_joint_density_of(&z, &ctx).unwrap()).abs() / a.abs().max(1.0);
    (worst <= 1e-10 && perm <= 1e-12, format!("N=1 rel err {worst:.1e}, permutation {perm:.1e}"))
}

fn jensen(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let mut worst = 0.0f64;
    for _ in 0..if fast { 20 } else { 100 } {
        let nu = random_measure(&mut rng, 0.0, 3.0);
        for _ in 0..10 {
            let (a, b) = jensen_check(&nu, rng.random_range(0.01..4.0)).unwrap();
            worst = worst.max((a - b).abs());
        }
    }
    (worst <= 1e-10, format!("max |lhs - rhs| = {worst:.1e}"))
}

fn g_nonpositive(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..if fast { 10 } else { 50 } {
        let nu = random_measure(&mut rng, 0.0, 4.0);
        let alpha: f64 = rng.random_range(4.0..16.0);
        let (b, _) = b_alpha(&nu, alpha);
        for k in 0..1000 {
            worst = worst.max(g_nu(&nu, alpha, b, 10.0 * alpha.sqrt() * k as f64 / 999.0));
        }
    }
    (worst <= 1e-10, format!("max g = {worst:.1e}"))
}

fn smoothed_energy(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let mut bad = 0;
    let total = if fast { 100 } else { 1000 };
    for _ in 0..total {
        let n = rng.random_range(2..=64);
        let t = 10f64.powf(rng.random_range(-4.0..-1.0));
        let z: Vec<Complex64> = (0..n).map(|_| standard_complex(&mut rng)).collect();
        bad += (discrete_energy(&z) > smoothed_energy_of(&z, t) + 2.0 * (1.0 / t).ln() / n as f64) as usize;
    }
    (bad == 0, format!("{bad}/{total} violations with C = 2"))
}

fn bernstein_markov(fast: bool, seed: StreamSeed) -> (bool, String) {
    let mut rng = seed.stream(0);
    let total = if fast { 100 } else { 1000 };
    let mut bad = 0;
    for _ in 0..total {
        let n = rng.random_range(1..=24);
        let l: f64 = rng.random_range(0.5..3.0);
        let h: Vec<Complex64> = (0..=n)
            .map(|k| standard_complex(&mut rng) * (k as f64 * l.ln() - ln_factorial(k) / 2.0).exp())
            .collect();
        let norm = log_mu_l_norm(&h, l);
        let sup = log_weighted_sup(&h, l, 2.0 * (n as f64).sqrt() / l + 2.0, 80, 64);
        bad += ((sup - norm).exp() > 1.0 + 1e-9 * (-norm).exp()) as usize;
    }
    (bad == 0, format!("{bad}/{total} violations"))
}

fn winding_count(fast: bool, seed: StreamSeed) -> (bool, String) {
    let total = if fast { 200 } else { 2000 };
    let bad: usize = (0..total as u64)
        .into_par_iter()
        .map(|i| {
            let r = [0.5, 1.0, 2.0, 3.0][(i % 4) as usize];
            let c = CoeffVector::sample((4.0 * r * r + 40.0) as usize, r, &mut seed.stream(i)).unwrap();
            (unit_disk_count(&c, 128).unwrap() != count_in_disk(&roots(&c).unwrap(), 1.0)) as usize
        })
        .sum();
    (bad == 0, format!("{bad}/{total} disagreements with root counts"))
}

fn first_moment(fast: bool, seed: StreamSeed) -> (bool, String) {
    let r: f64 = 3.0;
    let n = (4.0 * r * r + 40.0).ceil() as usize;
    let total = if fast { 2000 } else { 10_000 };
    let counts: Vec<f64> = (0..total as u64)
        .into_par_iter()
        .map(|i| unit_disk_count(&CoeffVector::sample(n, r, &mut seed.stream(i)).unwrap(), 128).unwrap() as f64)
        .collect();
    let (m, se) = mean_stderr(&counts);
    let rel = (m / (r * r) - 1.0).abs();
    (rel <= 0.02, format!("E n(3) = {m:.3} +- {se:.3} over {total} samples"))
}

fn construction(fast: bool, seed: StreamSeed) -> (bool, String) {
    let total = if fast { 30 } else { 300 };
    let mut parts = Vec::new();
    let mut ok = true;
    for (j, p) in [0.0, 0.5, 2.0].into_iter().enumerate() {
        let s = seed.derive(j as u64);
        let (cert, exact) = (0..total as u64)
            .into_par_iter()
            .map(|i| {
                let d = construct_rare_event(4.0, p, &mut s.stream(i)).unwrap();
                let c = d.certificate.holds;
                (c as usize, (c && d.zero_count().unwrap() == d.k0) as usize)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        ok &= exact == cert && cert == total;
        parts.push(format!("p={p}: {cert}/{total} certified, {exact} exact"));
    }
    (ok, parts.join("; "))
}
