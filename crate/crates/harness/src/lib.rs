//! Experiment harness for zero-fidelity benchmarking: config files, seeded
//! batch runs, result persistence, decay fits and comparison reports.

pub mod config;
pub mod experiment;
pub mod output;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use thiserror::Error;
use zerofid_core::rbfold::{fit_decay, DecayFit};

pub use config::{ExperimentConfig, Kind};
pub use experiment::ExperimentResult;

/// Largest spread of fitted `p` still reported as SPAM-invariant.
pub const SPAM_INVARIANCE_TOL: f64 = 0.005;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad arguments, config or input files.
    #[error("{0}")]
    Usage(String),
    /// Failure while simulating or writing results.
    #[error("{0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Runtime(_) => 3,
        }
    }
}

/// Runs `f` on a pool of `workers` threads, or on the global pool.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match workers {
        None => Ok(f()),
        Some(0) => Err(HarnessError::Usage("--workers must be at least 1".into())),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| HarnessError::Runtime(e.to_string())),
    }
}

/// Loads, validates and runs a config, writing its outputs. Returns the
/// output directory and the result.
pub fn cmd_run(config_path: &Path, output_dir: Option<&Path>) -> Result<(PathBuf, ExperimentResult), HarnessError> {
    let cfg = config::load(config_path)?;
    let dir = output_dir
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let prepared = config::prepare(cfg)?;
    let start = Instant::now();
    let result = experiment::execute(&prepared)?;
    let elapsed = start.elapsed().as_secs_f64();

    output::write_json(&dir.join("result.json"), &result)?;
    output::write_text(&dir.join("points.csv"), &output::points_csv(&result.points))?;
    if let Some(reference) = &result.reference_points {
        output::write_text(&dir.join("points_reference.csv"), &output::points_csv(reference))?;
    }
    output::write_json(&dir.join("timing.json"), &serde_json::json!({ "wall_clock_seconds": elapsed }))?;
    Ok((dir, result))
}

fn qubits_from_sibling(csv: &Path) -> Option<usize> {
    let text = fs::read_to_string(csv.parent()?.join("result.json")).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    value.get("config")?.get("n_qubits")?.as_u64().map(|n| n as usize)
}

/// Fits a points CSV and writes `fit.json` next to it, or into `output_dir`.
pub fn cmd_fit(
    csv: &Path,
    qubits: Option<usize>,
    output_dir: Option<&Path>,
) -> Result<(PathBuf, DecayFit), HarnessError> {
    let n = qubits.or_else(|| qubits_from_sibling(csv)).ok_or_else(|| {
        HarnessError::Usage("cannot tell the register size: pass --qubits or keep result.json next to the CSV".into())
    })?;
    if n == 0 {
        return Err(HarnessError::Usage("--qubits must be at least 1".into()));
    }
    let points = output::read_points_csv(csv)?;
    let fit = fit_decay(&points, n).map_err(|e| HarnessError::Usage(e.to_string()))?;
    let dir =
        output_dir.map(Path::to_path_buf).unwrap_or_else(|| csv.parent().map(Path::to_path_buf).unwrap_or_default());
    let path = dir.join("fit.json");
    output::write_json(&path, &fit)?;
    Ok((path, fit))
}

pub fn format_fit(fit: &DecayFit) -> String {
    format!(
        "A0        {:.6}\np         {:.6}\nB0        {:.6}\nF_avg     {:.6}\nEPC       {:.4e}\nrms       {:.3e}\n",
        fit.a0, fit.p, fit.b0, fit.f_avg, fit.epc, fit.rms_residual
    )
}

fn dash(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

/// Comparison table over result directories, with a SPAM-invariance verdict
/// for every (kind, n_qubits) group holding two or more fits.
pub fn cmd_report(dirs: &[PathBuf]) -> Result<String, HarnessError> {
    if dirs.is_empty() {
        return Err(HarnessError::Usage("report needs at least one result directory".into()));
    }
    let mut rows = Vec::new();
    for d in dirs {
        let path = d.join("result.json");
        let text = fs::read_to_string(&path).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
        let result: ExperimentResult =
            serde_json::from_str(&text).map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?;
        rows.push((d.display().to_string(), result));
    }

    let header = ["run", "kind", "n", "readout", "prep_deg", "F(m0)", "p", "F_avg", "EPC", "F_gate"];
    let table: Vec<[String; 10]> = rows
        .iter()
        .map(|(name, r)| {
            let c = &r.config;
            [
                name.clone(),
                c.kind.name().into(),
                c.n_qubits.to_string(),
                c.noise.readout.label(),
                format!("{:.3}", c.noise.prep_sigma_degrees),
                dash(r.points.first().map(|p| p.mean), 4),
                dash(r.fit.map(|f| f.p), 5),
                dash(r.fit.map(|f| f.f_avg), 5),
                r.fit.map_or_else(|| "-".into(), |f| format!("{:.3e}", f.epc)),
                dash(r.gate_fidelity, 5),
            ]
        })
        .collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| table.iter().map(|row| row[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |cells: Vec<&str>| {
        cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ").trim_end().to_string()
    };
    writeln!(out, "{}", line(header.to_vec())).unwrap();
    for row in &table {
        writeln!(out, "{}", line(row.iter().map(String::as_str).collect())).unwrap();
    }

    let mut groups: BTreeMap<(&str, usize), Vec<f64>> = BTreeMap::new();
    for (_, r) in &rows {
        if let Some(f) = r.fit {
            groups.entry((r.config.kind.name(), r.config.n_qubits)).or_default().push(f.p);
        }
    }
    for ((kind, n), ps) in groups.iter().filter(|(_, ps)| ps.len() >= 2) {
        let spread =
            ps.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ps.iter().cloned().fold(f64::INFINITY, f64::min);
        let verdict = if spread <= SPAM_INVARIANCE_TOL { "yes" } else { "no" };
        writeln!(out, "SPAM-invariant ({kind}, n={n}): {verdict} (max |dp| = {spread:.2e} over {} runs)", ps.len())
            .unwrap();
    }
    Ok(out)
}
