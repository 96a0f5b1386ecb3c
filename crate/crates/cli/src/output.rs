//! Emitting CSV, JSON and NDJSON with a provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::Failure;

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unix_time: Option<u64>,
}

impl Meta {
    pub fn new(command: &str, seed: u64, config: Value, timestamp: bool) -> Meta {
        let hashed = json!({ "command": command, "seed": seed, "config": config });
        let unix_time = timestamp.then(|| {
            std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
        });
        Meta {
            tool: "gef",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            config_sha256: crate::config::config_hash(&hashed),
            config,
            unix_time,
        }
    }
}

pub struct Sink {
    w: Box<dyn Write>,
}

fn io_err(e: std::io::Error) -> Failure {
    Failure::config(format!("write failed: {e}"))
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Sink, Failure> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| Failure::config(format!("cannot create {}: {e}", p.display())))?,
            )),
            None => Box::new(BufWriter::new(std::io::stdout().lock())),
        };
        Ok(Sink { w })
    }

    /// `# key: value` comment lines, then the column names.
    pub fn csv_header(&mut self, meta: &Meta, columns: &[&str]) -> Result<(), Failure> {
        writeln!(self.w, "# {} {}", meta.tool, meta.version).map_err(io_err)?;
        writeln!(self.w, "# command: {}", meta.command).map_err(io_err)?;
        writeln!(self.w, "# seed: {}", meta.seed).map_err(io_err)?;
        writeln!(self.w, "# config_sha256: {}", meta.config_sha256).map_err(io_err)?;
        writeln!(self.w, "# config: {}", meta.config).map_err(io_err)?;
        if let Some(t) = meta.unix_time {
            writeln!(self.w, "# unix_time: {t}").map_err(io_err)?;
        }
        writeln!(self.w, "{}", columns.join(",")).map_err(io_err)
    }

    pub fn csv_row<T: std::fmt::Display>(&mut self, cells: &[T]) -> Result<(), Failure> {
        let line: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        writeln!(self.w, "{}", line.join(",")).map_err(io_err)
    }

    pub fn json<T: Serialize>(&mut self, meta: &Meta, data: &T) -> Result<(), Failure> {
        let doc = json!({ "meta": meta, "data": data });
        serde_json::to_writer_pretty(&mut self.w, &doc).map_err(|e| Failure::config(e.to_string()))?;
        writeln!(self.w).map_err(io_err)
    }

    /// NDJSON stream: the first line is `{"meta": …}`.
    pub fn ndjson_meta(&mut self, meta: &Meta) -> Result<(), Failure> {
        self.ndjson(&json!({ "meta": meta }))
    }

    pub fn ndjson<T: Serialize>(&mut self, record: &T) -> Result<(), Failure> {
        serde_json::to_writer(&mut self.w, record).map_err(|e| Failure::config(e.to_string()))?;
        writeln!(self.w).map_err(io_err)
    }

    pub fn finish(mut self) -> Result<(), Failure> {
        self.w.flush().map_err(io_err)
    }
}
