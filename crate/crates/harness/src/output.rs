//! On-disk layout.
//!
//! `points.csv` has the header `m,mean,stderr`; `m` is an integer and both
//! floats are written as `{:.11e}` (12 significant digits). JSON files are
//! pretty-printed with a trailing newline. Nothing written to `result.json`
//! depends on the clock or on the worker count; the run time goes to
//! `timing.json`.

use std::fs;
use std::path::Path;

use serde::Serialize;
use zerofid_core::PointRecord;

use crate::HarnessError;

pub const POINTS_HEADER: [&str; 3] = ["m", "mean", "stderr"];

fn io_error(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(format!("{}: {e}", path.display()))
}

pub fn points_csv(points: &[PointRecord]) -> String {
    let mut out = POINTS_HEADER.join(",");
    out.push('\n');
    for p in points {
        out.push_str(&format!("{},{:.11e},{:.11e}\n", p.m, p.mean, p.stderr));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    write_text(path, &text)
}

/// Reads `(m, mean)` pairs from a points CSV. The `stderr` column is optional.
pub fn read_points_csv(path: &Path) -> Result<Vec<(f64, f64)>, HarnessError> {
    let usage = |msg: String| HarnessError::Usage(format!("{}: {msg}", path.display()));
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| usage(e.to_string()))?;
    let headers = reader.headers().map_err(|e| usage(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(im), Some(iy)) = (col("m"), col("mean")) else {
        return Err(usage(format!(
            "expected header with columns m and mean, got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    };
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| usage(format!("line {line}: {e}")))?;
        let parse = |i: usize, name: &str| -> Result<f64, HarnessError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| usage(format!("line {line}: column {name}: not a finite number: {raw:?}")))
        };
        points.push((parse(im, "m")?, parse(iy, "mean")?));
    }
    if points.len() < 3 {
        return Err(usage(format!("need at least 3 rows, found {}", points.len())));
    }
    Ok(points)
}
