use std::io::BufRead;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use gef_core::constants::{ginibre_g, q_of_p, z_const};
use gef_core::optimizer::{minimize, Budget, GridSpec, Solver};
use gef_core::radial::{
    catalog, catalog_i_closed_form, equilibrium, functional_i, functional_i_quadrature, Catalog,
};
use gef_core::roots::{count_in_disk, ZeroRecord};
use gef_core::sampler::{
    construct_rare_event, mh_hole_chain, sample_zeros, ChainConfig, JointDensityContext, Normalization,
    RadialHistogram,
};
use gef_core::{Constraint, StreamSeed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::resolve;
use crate::output::{Meta, Sink};
use crate::{Context, Failure, Format};

/// Samples generated in parallel before being written out in order.
const CHUNK: usize = 1024;

fn meta<P: Serialize>(ctx: &Context, command: &str, params: &P) -> Meta {
    Meta::new(command, ctx.seed, serde_json::to_value(params).expect("params serialize"), ctx.timestamp)
}

fn no_csv(command: &str) -> Failure {
    Failure::config(format!("{command} writes NDJSON; --format does not apply"))
}

// ---------------------------------------------------------------- constants

#[derive(Args, Serialize)]
pub struct ConstantsArgs {
    /// `start:stop:step`, stop included.
    #[arg(long)]
    pub p_grid: Option<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantsParams {
    p_grid: String,
}

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, Failure> {
    let parts: Vec<f64> = spec
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::config(format!("grid '{spec}': {e}")))?;
    let [start, stop, step] = parts[..] else {
        return Err(Failure::config(format!("grid '{spec}' must be start:stop:step")));
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Failure::config(format!("grid '{spec}' needs step > 0 and stop >= start")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(Failure::config(format!("grid '{spec}' has too many points")));
    }
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn constants(ctx: &Context, a: &ConstantsArgs) -> Result<(), Failure> {
    let p: ConstantsParams = resolve(ConstantsParams { p_grid: "0:3:0.01".into() }, &ctx.file, a)?;
    let grid = parse_grid(&p.p_grid)?;
    let rows = grid
        .iter()
        .map(|&x| Ok((x, q_of_p(x)?, z_const(x)?, ginibre_g(x)?)))
        .collect::<Result<Vec<_>, gef_core::Error>>()?;
    let m = meta(ctx, "constants", &p);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            sink.csv_header(&m, &["p", "q", "z_p", "g_p"])?;
            for (x, q, z, g) in rows {
                sink.csv_row(&[x, q, z, g])?;
            }
        }
        Format::Json => {
            let data: Vec<Value> = rows.iter().map(|(x, q, z, g)| json!({"p": x, "q": q, "z_p": z, "g_p": g})).collect();
            sink.json(&m, &data)?;
        }
    }
    sink.finish()
}

// ---------------------------------------------------------------- measures

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    Equilibrium,
    GefConstrained,
    GefGlobalRadon,
    Ginibre,
}

#[derive(Args, Serialize)]
pub struct MeasuresArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, value_enum)]
    pub which: Option<Which>,
    /// Also evaluate the functional by independent quadrature.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub quadrature: bool,
    /// Radii in the CSV potential table.
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasuresParams {
    p: f64,
    alpha: f64,
    which: Which,
    quadrature: bool,
    points: usize,
}

pub fn measures(ctx: &Context, a: &MeasuresArgs) -> Result<(), Failure> {
    let defaults = MeasuresParams { p: 0.0, alpha: 10.0, which: Which::GefConstrained, quadrature: false, points: 200 };
    let p: MeasuresParams = resolve(defaults, &ctx.file, a)?;
    let nu = match p.which {
        Which::Equilibrium => equilibrium(p.alpha),
        Which::GefConstrained => catalog(p.p, p.alpha, Catalog::GefConstrained)?,
        Which::GefGlobalRadon => catalog(p.p, p.alpha, Catalog::GefGlobalRadon)?,
        Which::Ginibre => catalog(p.p, p.alpha, Catalog::Ginibre)?,
    };
    let m = meta(ctx, "measures", &p);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    match ctx.format_or(Format::Json) {
        Format::Csv => {
            sink.csv_header(&m, &["s", "potential", "mass_in_closed_disk"])?;
            let top = 1.5 * p.alpha.sqrt();
            let n = p.points.max(2);
            for i in 0..n {
                let s = top * i as f64 / (n - 1) as f64;
                sink.csv_row(&[s, nu.log_potential(s), nu.mass_in_disk(s, true)])?;
            }
        }
        Format::Json => {
            // the functional needs a probability measure
            let report = if p.which == Which::GefGlobalRadon { None } else { Some(functional_i(&nu, p.alpha)?) };
            let quad = if p.quadrature && report.is_some() { Some(functional_i_quadrature(&nu, p.alpha)?) } else { None };
            let closed = if p.which == Which::GefConstrained { Some(catalog_i_closed_form(p.p, p.alpha)?) } else { None };
            let data = json!({
                "measure": nu,
                "total_mass": nu.total_mass(),
                "functional": report,
                "functional_quadrature": quad,
                "i_alpha_closed_form": closed,
            });
            sink.json(&m, &data)?;
        }
    }
    sink.finish()
}

// ---------------------------------------------------------------- optimize

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverArg {
    PrimalDual,
    Subgradient,
}

#[derive(Args, Serialize)]
pub struct OptimizeArgs {
    /// Hole parameter; omit for the unconstrained problem.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub shells: Option<usize>,
    #[arg(long)]
    pub probes_per_gap: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverArg>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Trace CSV path (default: next to --out).
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeParams {
    p: Option<f64>,
    alpha: f64,
    shells: usize,
    probes_per_gap: usize,
    max_iter: usize,
    tol: f64,
    patience: usize,
    solver: SolverArg,
    step: f64,
    trace: Option<PathBuf>,
}

fn trace_path(out: Option<&Path>, explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let out = out?;
    let stem = out.file_stem()?.to_string_lossy();
    Some(out.with_file_name(format!("{stem}.trace.csv")))
}

pub fn optimize(ctx: &Context, a: &OptimizeArgs) -> Result<(), Failure> {
    let g = GridSpec::default();
    let b = Budget::default();
    let defaults = OptimizeParams {
        p: None,
        alpha: 10.0,
        shells: g.shells,
        probes_per_gap: g.probes_per_gap,
        max_iter: b.max_iter,
        tol: b.tol,
        patience: b.patience,
        solver: SolverArg::PrimalDual,
        step: b.step,
        trace: None,
    };
    let p: OptimizeParams = resolve(defaults, &ctx.file, a)?;
    let constraint = match p.p {
        Some(x) => Constraint::for_p(x, p.alpha)?,
        None => Constraint::None,
    };
    let solver = match p.solver {
        SolverArg::PrimalDual => Solver::PrimalDual,
        SolverArg::Subgradient => Solver::Subgradient,
    };
    let budget = Budget { max_iter: p.max_iter, tol: p.tol, patience: p.patience, solver, step: p.step };
    let out = minimize(p.alpha, constraint, GridSpec { shells: p.shells, probes_per_gap: p.probes_per_gap }, budget)?;
    if out.budget_exhausted {
        log::warn!("iteration budget exhausted; gap estimate {:e}", out.gap_estimate);
    }
    let closed = match p.p {
        Some(x) if x != 1.0 => catalog_i_closed_form(x, p.alpha).ok(),
        Some(_) => None,
        None => Some(p.alpha.ln() / 2.0 - 0.75),
    };
    let m = meta(ctx, "optimize", &p);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    match ctx.format_or(Format::Json) {
        Format::Csv => {
            sink.csv_header(&m, &["radius", "mass"])?;
            for (r, w) in out.grid.radii.iter().zip(&out.grid.masses) {
                sink.csv_row(&[r, w])?;
            }
        }
        Format::Json => {
            let data = json!({
                "grid": out.grid,
                "smoothing_t": out.smoothing_t,
                "report": out.report,
                "iterations": out.iterations,
                "budget_exhausted": out.budget_exhausted,
                "gap_estimate": out.gap_estimate,
                "i_alpha_closed_form": closed,
                "boundary_mass": out.grid.mass_between(0.95, 1.05),
            });
            sink.json(&m, &data)?;
        }
    }
    sink.finish()?;
    match trace_path(ctx.out.as_deref(), p.trace.as_deref()) {
        Some(path) => {
            let mut t = Sink::open(Some(&path))?;
            t.csv_header(&m, &["iter", "i_alpha", "feasibility", "argmax_radius"])?;
            for row in &out.trace {
                t.csv_row(&[row.iter as f64, row.i_alpha, row.feasibility, row.argmax_radius])?;
            }
            t.finish()
        }
        None => {
            log::info!("no --out or --trace given; trace not written");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------- sample

#[derive(Args, Serialize)]
pub struct SampleArgs {
    /// Truncation degree.
    #[arg(long)]
    pub n: Option<usize>,
    /// Scale L of the truncated series.
    #[arg(long)]
    pub l: Option<f64>,
    /// Disk radius: sets L = r and, unless --n is given, N = ceil(4r² + 40).
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SampleParams {
    n: Option<usize>,
    l: Option<f64>,
    r: Option<f64>,
    count: usize,
}

fn degree_and_scale(n: Option<usize>, l: Option<f64>, r: Option<f64>) -> Result<(usize, f64), Failure> {
    match (r, l) {
        (Some(_), Some(_)) => Err(Failure::config("give either --r or --l, not both")),
        (Some(r), None) => Ok((n.unwrap_or((4.0 * r * r + 40.0).ceil() as usize), r)),
        (None, l) => Ok((n.unwrap_or(64), l.unwrap_or(1.0))),
    }
}

pub fn sample(ctx: &Context, a: &SampleArgs) -> Result<(), Failure> {
    let p: SampleParams = resolve(SampleParams { n: None, l: None, r: None, count: 100 }, &ctx.file, a)?;
    if ctx.format == Some(Format::Csv) {
        return Err(no_csv("sample"));
    }
    let (n, l) = degree_and_scale(p.n, p.l, p.r)?;
    let seed = StreamSeed(ctx.seed);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    sink.ndjson_meta(&meta(ctx, "sample", &p))?;
    for start in (0..p.count).step_by(CHUNK) {
        let end = (start + CHUNK).min(p.count);
        let batch = (start..end)
            .into_par_iter()
            .map(|i| sample_zeros(n, l, &mut seed.stream(i as u64)))
            .collect::<Result<Vec<_>, _>>()?;
        for zc in batch {
            sink.ndjson(&zc.to_record(ctx.seed))?;
        }
    }
    sink.finish()
}

// ---------------------------------------------------------------- hole-mcmc

#[derive(Args, Serialize)]
pub struct HoleMcmcArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub l: Option<f64>,
    /// Radius of the hole in the scaled plane.
    #[arg(long)]
    pub hole_radius: Option<f64>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub proposal_scale: Option<f64>,
    #[arg(long)]
    pub target_acceptance: Option<f64>,
    /// Independent chains, run in parallel.
    #[arg(long)]
    pub chains: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoleMcmcParams {
    n: usize,
    l: f64,
    hole_radius: f64,
    burn_in: usize,
    sweeps: usize,
    thin: usize,
    proposal_scale: f64,
    target_acceptance: f64,
    chains: usize,
}

#[derive(Serialize)]
struct ChainRecord {
    #[serde(flatten)]
    record: ZeroRecord,
    chain: usize,
    step: usize,
    log_density: f64,
}

pub fn hole_mcmc(ctx: &Context, a: &HoleMcmcArgs) -> Result<(), Failure> {
    let c = ChainConfig::default();
    let defaults = HoleMcmcParams {
        n: 64,
        l: 8.0 / 3.0,
        hole_radius: 1.0,
        burn_in: c.burn_in,
        sweeps: c.sweeps,
        thin: c.thin,
        proposal_scale: c.proposal_scale,
        target_acceptance: c.target_acceptance,
        chains: 1,
    };
    let p: HoleMcmcParams = resolve(defaults, &ctx.file, a)?;
    if ctx.format == Some(Format::Csv) {
        return Err(no_csv("hole-mcmc"));
    }
    let jd = JointDensityContext::new(p.n, p.l)?;
    let cfg = ChainConfig {
        burn_in: p.burn_in,
        sweeps: p.sweeps,
        thin: p.thin,
        proposal_scale: p.proposal_scale,
        target_acceptance: p.target_acceptance,
        start: None,
    };
    let seed = StreamSeed(ctx.seed);
    let chains = (0..p.chains)
        .into_par_iter()
        .map(|k| mh_hole_chain(&jd, p.hole_radius, &cfg, &mut seed.stream(k as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut sink = Sink::open(ctx.out.as_deref())?;
    sink.ndjson_meta(&meta(ctx, "hole-mcmc", &p))?;
    for (k, chain) in chains.iter().enumerate() {
        log::info!("chain {k}: acceptance {:.3}, proposal scale {:.4}", chain.acceptance_rate, chain.proposal_scale);
        for (i, (zc, ld)) in chain.samples.iter().zip(&chain.log_density).enumerate() {
            let rec = ChainRecord { record: zc.to_record(ctx.seed), chain: k, step: i * p.thin, log_density: *ld };
            sink.ndjson(&rec)?;
        }
    }
    sink.finish()
}

// ---------------------------------------------------------------- construct

#[derive(Args, Serialize)]
pub struct ConstructArgs {
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstructParams {
    r: f64,
    p: f64,
    count: usize,
}

#[derive(Serialize)]
struct ConstructRecord {
    #[serde(flatten)]
    record: ZeroRecord,
    k0: usize,
    zero_count: usize,
    rouche_margin: f64,
    certified: bool,
}

pub fn construct(ctx: &Context, a: &ConstructArgs) -> Result<(), Failure> {
    let p: ConstructParams = resolve(ConstructParams { r: 4.0, p: 0.0, count: 100 }, &ctx.file, a)?;
    if ctx.format == Some(Format::Csv) {
        return Err(no_csv("construct"));
    }
    let seed = StreamSeed(ctx.seed);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    sink.ndjson_meta(&meta(ctx, "construct", &p))?;
    for start in (0..p.count).step_by(CHUNK) {
        let end = (start + CHUNK).min(p.count);
        let batch = (start..end)
            .into_par_iter()
            .map(|i| {
                let s = construct_rare_event(p.r, p.p, &mut seed.stream(i as u64))?;
                let zc = s.zeros()?;
                Ok(ConstructRecord {
                    zero_count: count_in_disk(&zc, 1.0),
                    record: zc.to_record(ctx.seed),
                    k0: s.k0,
                    rouche_margin: s.certificate.rouche_margin,
                    certified: s.certificate.holds,
                })
            })
            .collect::<Result<Vec<_>, gef_core::Error>>()?;
        for rec in batch {
            if rec.certified && rec.zero_count != rec.k0 {
                return Err(Failure::numerical(format!(
                    "certified draw has {} zeros in the disk, expected {}",
                    rec.zero_count, rec.k0
                )));
            }
            sink.ndjson(&rec)?;
        }
    }
    sink.finish()
}

// ---------------------------------------------------------------- hist

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    PerArea,
    PerSample,
}

#[derive(Args, Serialize)]
pub struct HistArgs {
    /// NDJSON sample files (stdin when none).
    #[arg(value_name = "INPUT")]
    #[serde(skip)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub lo: Option<f64>,
    #[arg(long)]
    pub hi: Option<f64>,
    /// Explicit bin edges, comma separated; overrides --bins/--lo/--hi.
    #[arg(long, value_delimiter = ',')]
    pub edges: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormArg>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HistParams {
    bins: usize,
    lo: f64,
    hi: f64,
    edges: Option<Vec<f64>>,
    normalization: NormArg,
}

fn read_samples(reader: impl BufRead, source: &str, hist: &mut RadialHistogram) -> Result<(), Failure> {
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Failure::config(format!("{source}: {e}")))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value =
            serde_json::from_str(&line).map_err(|e| Failure::config(format!("{source}:{}: {e}", i + 1)))?;
        if v.get("meta").is_some() {
            continue;
        }
        let rec: ZeroRecord =
            serde_json::from_value(v).map_err(|e| Failure::config(format!("{source}:{}: {e}", i + 1)))?;
        let zeros: Vec<gef_core::Complex64> = rec.zeros.iter().map(|z| gef_core::Complex64::new(z[0], z[1])).collect();
        hist.add(&zeros);
    }
    Ok(())
}

pub fn hist(ctx: &Context, a: &HistArgs) -> Result<(), Failure> {
    let defaults = HistParams { bins: 20, lo: 0.0, hi: 2.0, edges: None, normalization: NormArg::PerArea };
    let p: HistParams = resolve(defaults, &ctx.file, a)?;
    let norm = match p.normalization {
        NormArg::PerArea => Normalization::PerArea,
        NormArg::PerSample => Normalization::PerSample,
    };
    let mut h = match &p.edges {
        Some(e) => RadialHistogram::with_edges(e.clone(), norm)?,
        None => RadialHistogram::new(p.bins, p.lo, p.hi, norm)?,
    };
    if a.input.is_empty() {
        read_samples(std::io::stdin().lock(), "stdin", &mut h)?;
    }
    for path in &a.input {
        let f = std::fs::File::open(path).map_err(|e| Failure::config(format!("cannot open {}: {e}", path.display())))?;
        read_samples(std::io::BufReader::new(f), &path.display().to_string(), &mut h)?;
    }
    if h.samples == 0 {
        return Err(Failure::config("no samples in the input"));
    }
    let inputs: Vec<String> = a.input.iter().map(|p| p.display().to_string()).collect();
    let mut cfg = serde_json::to_value(&p).expect("params serialize");
    cfg["input"] = json!(inputs);
    let m = Meta::new("hist", ctx.seed, cfg, ctx.timestamp);
    let mut sink = Sink::open(ctx.out.as_deref())?;
    let density = h.density();
    let stderr = h.stderr();
    match ctx.format_or(Format::Csv) {
        Format::Csv => {
            sink.csv_header(&m, &["bin_lo", "bin_hi", "density", "stderr"])?;
            for i in 0..h.bins() {
                sink.csv_row(&[h.bin_edges[i], h.bin_edges[i + 1], density[i], stderr[i]])?;
            }
        }
        Format::Json => {
            let data = json!({
                "bin_edges": h.bin_edges,
                "counts": h.counts,
                "density": density,
                "stderr": stderr,
                "samples": h.samples,
            });
            sink.json(&m, &data)?;
        }
    }
    sink.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = parse_grid("0:3:0.01").unwrap();
        assert_eq!(g.len(), 301);
        assert!((g[300] - 3.0).abs() < 1e-12);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert_eq!(parse_grid("0:1").unwrap_err().code, 2);
        assert_eq!(parse_grid("0:1:-1").unwrap_err().code, 2);
        assert_eq!(parse_grid("a:1:1").unwrap_err().code, 2);
    }

    #[test]
    fn trace_next_to_output() {
        let t = trace_path(Some(Path::new("/tmp/run/grid.json")), None).unwrap();
        assert_eq!(t, PathBuf::from("/tmp/run/grid.trace.csv"));
        assert!(trace_path(None, None).is_none());
    }

    #[test]
    fn degree_from_radius() {
        assert_eq!(degree_and_scale(None, None, Some(3.0)).unwrap(), (76, 3.0));
        assert_eq!(degree_and_scale(Some(10), None, Some(3.0)).unwrap(), (10, 3.0));
        assert!(degree_and_scale(None, Some(1.0), Some(3.0)).is_err());
    }
}
