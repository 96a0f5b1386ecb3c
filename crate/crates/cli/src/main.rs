//! `gef`: experiments on the zeros of the Gaussian entire function.

mod commands;
mod config;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Parser)]
#[command(name = "gef", version, about = "GEF zeros on rare events: constants, energy minimizers and samplers")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Master seed, recorded in every output header.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Omit the wall-clock time from headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Table of q(p), Z_p and G_p.
    Constants(commands::ConstantsArgs),
    /// Closed-form minimizers and their functionals.
    Measures(commands::MeasuresArgs),
    /// Minimize I_alpha over shell measures.
    Optimize(commands::OptimizeArgs),
    /// Unconditional zero samples (NDJSON).
    Sample(commands::SampleArgs),
    /// Hole-conditioned Metropolis chain (NDJSON).
    HoleMcmc(commands::HoleMcmcArgs),
    /// Draws from the coefficient-suppression construction (NDJSON).
    Construct(commands::ConstructArgs),
    /// Reduce NDJSON samples to a radial histogram.
    Hist(commands::HistArgs),
    /// Run the invariant checks and print a pass/fail table.
    Verify(verify::VerifyArgs),
}

/// A failed run: exit code 2 for configuration problems, 3 for numerical ones.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Failure {
        Failure { code: 2, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Failure {
        Failure { code: 3, message: message.into() }
    }
}

impl From<gef_core::Error> for Failure {
    fn from(e: gef_core::Error) -> Failure {
        match e {
            gef_core::Error::Argument(_) => Failure::config(e.to_string()),
            _ => Failure::numerical(e.to_string()),
        }
    }
}

/// Settings shared by every command after merging flags and config file.
pub struct Context {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub timestamp: bool,
    pub file: serde_json::Map<String, serde_json::Value>,
}

impl Context {
    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }
}

fn setup(global: &Global) -> Result<Context, Failure> {
    let file = config::load_file(global.config.as_deref())?;
    let from_file = |k: &str| file.get(k).cloned();
    let seed = match (global.seed, from_file("seed")) {
        (Some(s), _) => s,
        (None, Some(v)) => v.as_u64().ok_or_else(|| Failure::config("config 'seed' must be an unsigned integer"))?,
        (None, None) => 0,
    };
    let threads = match (global.threads, from_file("threads")) {
        (Some(t), _) => Some(t),
        (None, Some(v)) => Some(v.as_u64().ok_or_else(|| Failure::config("config 'threads' must be an integer"))? as usize),
        (None, None) => None,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::config(format!("thread pool: {e}")))?;
    }
    let format = match (global.format, from_file("format")) {
        (Some(f), _) => Some(f),
        (None, Some(v)) => Some(serde_json::from_value(v).map_err(|e| Failure::config(format!("config 'format': {e}")))?),
        (None, None) => None,
    };
    Ok(Context { seed, out: global.out.clone(), format, timestamp: !global.no_timestamp, file })
}

fn run(cli: Cli) -> Result<(), Failure> {
    let ctx = setup(&cli.global)?;
    match cli.command {
        Command::Constants(a) => commands::constants(&ctx, &a),
        Command::Measures(a) => commands::measures(&ctx, &a),
        Command::Optimize(a) => commands::optimize(&ctx, &a),
        Command::Sample(a) => commands::sample(&ctx, &a),
        Command::HoleMcmc(a) => commands::hole_mcmc(&ctx, &a),
        Command::Construct(a) => commands::construct(&ctx, &a),
        Command::Hist(a) => commands::hist(&ctx, &a),
        Command::Verify(a) => verify::run(&ctx, &a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GEF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let kind = if f.code == 2 { "config" } else { "numerical" };
            eprintln!("{}", json!({ "error": kind, "message": f.message, "exit_code": f.code }));
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_codes() {
        assert_eq!(Failure::from(gef_core::Error::Argument("x".into())).code, 2);
        assert_eq!(Failure::from(gef_core::Error::Domain("x".into())).code, 3);
        assert_eq!(Failure::from(gef_core::Error::InfeasibleStart("x".into())).code, 3);
    }
}
