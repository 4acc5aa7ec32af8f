//! CSV series files and TOML run manifests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::{Agreement, AssertionResult, NamedMetrics};
use super::scenario::{OutputGrid, Scenario};
use super::TimeSeries;
use crate::pbs::{PbsConfig, PbsManifest};
use crate::{Error, Result};

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.display().to_string(),
            source,
        },
        other => Error::Csv(format!("{}: {other:?}", path.display())),
    }
}

/// Writes `t_s,<label1>,<label2>,…` with every value in `{:.16e}`
/// (17 significant digits, so parsing restores the exact doubles).
pub fn emit_csv(series: &[TimeSeries], path: &Path) -> Result<()> {
    let first = series
        .first()
        .ok_or_else(|| Error::invalid("series", "nothing to write"))?;
    for s in &series[1..] {
        if s.t != first.t {
            return Err(Error::GridMismatch(format!(
                "`{}` and `{}` are on different grids",
                first.label, s.label
            )));
        }
    }
    let mut out = csv::Writer::from_path(path).map_err(csv_error(path))?;
    let header = std::iter::once("t_s").chain(series.iter().map(|s| s.label.as_str()));
    out.write_record(header).map_err(csv_error(path))?;
    for (i, t) in first.t.iter().enumerate() {
        let row = std::iter::once(format!("{t:.16e}"))
            .chain(series.iter().map(|s| format!("{:.16e}", s.values[i])));
        out.write_record(row).map_err(csv_error(path))?;
    }
    out.flush().map_err(io_error(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<TimeSeries>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_error(path))?;
    let header = reader.headers().map_err(csv_error(path))?.clone();
    if header.get(0) != Some("t_s") {
        return Err(Error::Csv(format!(
            "{}: first column must be `t_s`",
            path.display()
        )));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error(path))?;
        for (col, field) in record.iter().enumerate() {
            let value = field.trim().parse::<f64>().map_err(|e| {
                Error::Csv(format!(
                    "{}: row {}, column {}: {e}",
                    path.display(),
                    row + 2,
                    col + 1
                ))
            })?;
            columns[col].push(value);
        }
    }
    let t = columns.remove(0);
    header
        .iter()
        .skip(1)
        .zip(columns)
        .map(|(label, values)| TimeSeries::new(label, t.clone(), values))
        .collect()
}

/// Everything needed to reproduce and audit one CLI run. Apart from
/// `created_unix` and the `elapsed_seconds` of each simulation, identical
/// inputs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub created_unix: u64,
    pub csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: OutputGrid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pbs_config: Option<PbsConfig>,
    /// Each scenario carries its regime report.
    pub scenarios: Vec<Scenario>,
    pub metrics: Vec<NamedMetrics>,
    pub agreement: Vec<Agreement>,
    pub assertions: Vec<AssertionResult>,
    pub pbs_runs: Vec<PbsManifest>,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, csv: impl Into<String>, grid: OutputGrid) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            tool: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            command: command.into(),
            created_unix,
            csv: csv.into(),
            seed: None,
            grid,
            pbs_config: None,
            scenarios: Vec::new(),
            metrics: Vec::new(),
            agreement: Vec::new(),
            assertions: Vec::new(),
            pbs_runs: Vec::new(),
        }
    }
}

pub fn emit_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let text = toml::to_string(manifest).map_err(|e| Error::config("manifest", e.to_string()))?;
    std::fs::write(path, text).map_err(io_error(path))
}
