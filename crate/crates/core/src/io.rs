//! Config files, result tables and metadata sidecars.
//!
//! Result tables are CSV with a fixed column order. Floats are written in
//! scientific notation with nine significant digits so a table read back by
//! [`read_table`] re-serialises to the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, ResultRow, ResultTable, Sweep};

pub const CSV_HEADER: [&str; 9] = [
    "architecture",
    "sweep_name",
    "sweep_value",
    "metric",
    "mean",
    "std",
    "p05",
    "p95",
    "n_iters",
];

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn config_to_toml(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configs serialise to TOML")
}

/// Nine significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn table_to_csv(table: &ResultTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in &table.rows {
        w.write_record([
            r.architecture.clone(),
            r.sweep_name.clone(),
            format_float(r.sweep_value),
            r.metric.clone(),
            format_float(r.mean),
            format_float(r.std),
            format_float(r.p05),
            format_float(r.p95),
            r.n_iters.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
}

pub fn table_from_csv(text: &str) -> Result<ResultTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| Error::Table(e.to_string()))?;
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Table(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let rec = record.map_err(|e| Error::Table(e.to_string()))?;
        let float = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| {
                Error::Table(format!("row {}: `{}` is not a number", line + 1, &rec[i]))
            })
        };
        rows.push(ResultRow {
            architecture: rec[0].to_string(),
            sweep_name: rec[1].to_string(),
            sweep_value: float(2)?,
            metric: rec[3].to_string(),
            mean: float(4)?,
            std: float(5)?,
            p05: float(6)?,
            p95: float(7)?,
            n_iters: rec[8].parse().map_err(|_| {
                Error::Table(format!("row {}: `{}` is not a count", line + 1, &rec[8]))
            })?,
        });
    }
    Ok(ResultTable { rows })
}

pub fn read_table(path: &Path) -> Result<ResultTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    table_from_csv(&text)
}

/// Provenance recorded next to every result table.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub master_seed: u64,
    pub n_iters: usize,
    /// Per-iteration scenario seeds, shared by every row.
    pub iteration_seeds: Vec<u64>,
    pub labels: Vec<String>,
    pub sweep: Sweep,
    /// True while the downlink SAR is the built-in stand-in value.
    pub sar_dl_placeholder: bool,
    pub config: ExperimentConfig,
}

impl Sidecar {
    pub fn new(
        command: &str,
        config: &ExperimentConfig,
        labels: Vec<String>,
        sweep: Sweep,
        n_iters: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            master_seed,
            n_iters,
            iteration_seeds: crate::harness::iteration_seeds(master_seed, n_iters),
            labels,
            sweep,
            sar_dl_placeholder: config.params.sar_dl_is_placeholder(),
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sidecars serialise")
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`, creating it if needed.
pub fn emit_results(
    table: &ResultTable,
    sidecar: &Sidecar,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    write(&csv_path, &table_to_csv(table))?;
    write(&json_path, &(sidecar.to_json() + "\n"))?;
    Ok((csv_path, json_path))
}

pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write(path, contents)
}
