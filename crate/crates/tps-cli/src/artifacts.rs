//! Durable run artifacts: CSV payloads and the JSON run summary.
//!
//! CSV numbers use Rust's shortest round-trip float formatting, so identical
//! runs produce byte-identical payloads.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use tps_core::thermal::{interface_series, MaterialProperties, TemperatureField};
use tps_core::uq::Chain;

use crate::error::{CliError, CliResult};

/// Field exports are thinned to at most this many data rows.
pub const MAX_FIELD_ROWS: usize = 2000;

fn create(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(std::io::BufWriter::new(file))
}

fn finish(mut w: std::io::BufWriter<std::fs::File>, path: &Path) -> CliResult<()> {
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// `t,<x positions...>` header, one row per kept step.
pub fn write_field_csv(path: &Path, field: &TemperatureField) -> CliResult<()> {
    let mut w = create(path)?;
    let mut header = String::from("t");
    for x in field.positions() {
        header.push(',');
        header.push_str(&format!("{x}"));
    }
    let rows = field.n_steps() + 1;
    let stride = rows.div_ceil(MAX_FIELD_ROWS);
    let mut line = String::new();
    for n in (0..rows).step_by(stride).chain(if (rows - 1) % stride != 0 {
        Some(rows - 1)
    } else {
        None
    }) {
        line.clear();
        line.push_str(&format!("{}", field.time(n)));
        for v in field.values.row(n) {
            line.push(',');
            line.push_str(&format!("{v}"));
        }
        if n == 0 {
            writeln!(w, "{header}").map_err(CliError::from)?;
        }
        writeln!(w, "{line}").map_err(CliError::from)?;
    }
    finish(w, path)
}

/// `t,T` history of the interface node.
pub fn write_interface_csv(path: &Path, field: &TemperatureField) -> CliResult<()> {
    let series = interface_series(field);
    let mut w = create(path)?;
    writeln!(w, "t,T").map_err(CliError::from)?;
    for (t, v) in &series.samples {
        writeln!(w, "{t},{v}").map_err(CliError::from)?;
    }
    finish(w, path)
}

/// Exact chain schema: `rho,k,cp,log_posterior,T_interface`.
pub fn write_chain_csv(path: &Path, chain: &Chain) -> CliResult<()> {
    let mut w = create(path)?;
    writeln!(w, "rho,k,cp,log_posterior,T_interface").map_err(CliError::from)?;
    for ((q, lp), t) in chain.samples.iter().zip(&chain.log_posteriors).zip(&chain.interface_temps) {
        writeln!(w, "{},{},{},{lp},{t}", q.rho, q.k, q.cp).map_err(CliError::from)?;
    }
    finish(w, path)
}

/// Reads the sample columns back from a chain CSV.
pub fn read_chain_csv(path: &Path) -> CliResult<(Vec<MaterialProperties>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Io(format!(
            "cannot read chain {}: {e}; run `tps sample` first to produce one",
            path.display()
        ))
    })?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != "rho,k,cp,log_posterior,T_interface" {
        return Err(CliError::Validation(format!(
            "chain {} has unexpected header `{header}`",
            path.display()
        )));
    }
    let mut samples = Vec::new();
    let mut temps = Vec::new();
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(CliError::Validation(format!(
                "chain {} row {} has {} columns, expected 5",
                path.display(),
                i + 2,
                cols.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| {
                CliError::Validation(format!("chain {} row {}: {e}", path.display(), i + 2))
            })
        };
        samples.push(MaterialProperties {
            rho: parse(cols[0])?,
            k: parse(cols[1])?,
            cp: parse(cols[2])?,
        });
        temps.push(parse(cols[4])?);
    }
    Ok((samples, temps))
}

/// Machine-readable record of one command invocation.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: usize,
    /// Wall time per phase, seconds (not part of any reproducibility hash).
    pub wall_times_s: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub artifacts: Vec<PathBuf>,
}

impl RunSummary {
    pub fn new(command: &str, config_hash: String, seed: u64, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            config_hash,
            seed,
            threads,
            wall_times_s: BTreeMap::new(),
            metrics: BTreeMap::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn time(&mut self, phase: &str, seconds: f64) {
        self.wall_times_s.insert(phase.to_string(), seconds);
    }

    pub fn metric(&mut self, key: &str, value: impl Into<serde_json::Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn artifact(&mut self, path: &Path) {
        self.artifacts.push(path.to_path_buf());
    }

    pub fn write(&self, dir: &Path) -> CliResult<PathBuf> {
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(self).expect("summary serializes");
        std::fs::write(&path, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}
