//! Reading gap data back from files written by earlier runs.

use std::f64::consts::TAU;
use std::path::Path;

use circlezeros::samplers::{AngleDomain, EnsembleSpec, SampleBatch};
use circlezeros::stats::{circular_gaps, unfolded_gaps};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::output::sidecar_name;

/// Batch description stored in the sidecar of an `angles.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchHeader {
    pub spec: EnsembleSpec,
    pub domain: AngleDomain,
    pub accepted: usize,
    pub attempted: u64,
    pub acceptance_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub move_acceptance: Option<f64>,
}

impl BatchHeader {
    pub fn of(batch: &SampleBatch) -> Self {
        Self {
            spec: batch.spec.clone(),
            domain: batch.domain,
            accepted: batch.accepted,
            attempted: batch.attempted,
            acceptance_rate: batch.acceptance_rate(),
            move_acceptance: batch.move_acceptance,
        }
    }
}

fn format_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_header(path: &Path) -> Result<Option<BatchHeader>> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| format_error(path, "not a file name"))?;
    let meta = path.with_file_name(sidecar_name(name));
    if !meta.exists() {
        return Ok(None);
    }
    let bytes = std::fs::read(&meta).map_err(|e| CliError::io(&meta, e))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| format_error(&meta, e.to_string()))?;
    match value.get("batch") {
        Some(b) => serde_json::from_value(b.clone())
            .map(Some)
            .map_err(|e| format_error(&meta, e.to_string())),
        None => Ok(None),
    }
}

/// Unfolded nearest-neighbour gaps from a file.
///
/// `.jsonl` files hold one angle set per line; their sidecar, when present,
/// says how to complete upper-half sets to the full circle, and without one
/// every line is taken as a full set of angles on the circle. Any other file
/// is read as CSV of gap values: the `unfolded_gap` column if the header has
/// one, otherwise the first column.
pub fn load_gaps(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let values = if path.extension().is_some_and(|e| e == "jsonl") {
        let mut sets = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let set: Vec<f64> =
                serde_json::from_str(line).map_err(|e| format_error(path, format!("line {}: {e}", i + 1)))?;
            sets.push(set);
        }
        match read_header(path)? {
            Some(h) => {
                let batch = SampleBatch {
                    spec: h.spec,
                    domain: h.domain,
                    accepted: sets.len(),
                    attempted: h.attempted,
                    angle_sets: sets,
                    seed_chain: Vec::new(),
                    move_acceptance: h.move_acceptance,
                };
                unfolded_gaps(&batch)
                    .map_err(|e| format_error(path, e.to_string()))?
                    .unfolded_gaps
            }
            None => {
                let mut gaps = Vec::new();
                for (i, mut set) in sets.into_iter().enumerate() {
                    if set.len() < 2 {
                        return Err(format_error(path, format!("line {}: need at least 2 angles", i + 1)));
                    }
                    for a in &mut set {
                        *a = a.rem_euclid(TAU);
                    }
                    set.sort_by(f64::total_cmp);
                    let scale = set.len() as f64 / TAU;
                    gaps.extend(circular_gaps(&set).into_iter().map(|g| g * scale));
                }
                gaps
            }
        }
    } else {
        read_csv_column(path, &text)?
    };
    if values.is_empty() {
        return Err(format_error(path, "no data"));
    }
    Ok(values)
}

fn read_csv_column(path: &Path, text: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut column = 0;
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_error(path, e.to_string()))?;
        if i == 0 && record.get(0).is_some_and(|f| f.trim().parse::<f64>().is_err()) {
            column = record.iter().position(|h| h.trim() == "unfolded_gap").unwrap_or(0);
            continue;
        }
        let field = record
            .get(column)
            .ok_or_else(|| format_error(path, format!("row {} has no column {column}", i + 1)))?;
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|_| format_error(path, format!("row {}: '{field}' is not a number", i + 1)))?;
        values.push(v);
    }
    Ok(values)
}
