//! Experiment configuration files.
//!
//! A config is a TOML document:
//!
//! ```toml
//! kind = "rb"            # single_zero_fidelity | rb | irb | folding | twirl_check
//! n_qubits = 2
//! master_seed = 7
//! m_grid = [1, 2, 4, 8]
//! sequences = 20         # rb, irb
//! runs = 10              # single_zero_fidelity, folding
//! samples = 2000         # twirl_check
//! shots = 1024           # or exact = true
//! target = "cz_layer"    # builtin name or path to a circuit file
//! output_dir = "out/rb"
//!
//! [noise]
//! depolarizing_1q = 0.0008
//! depolarizing_2q = 0.008
//! readout = "weak"       # none | weak | strong | [[p00, p01], [p10, p11]]
//! prep_sigma_degrees = 2.236
//! ```
//!
//! A `result.json` is also accepted: its `config` object is used as-is.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zerofid_core::rbfold::CliffordElement;
use zerofid_core::{Circuit, Estimation, NoiseModel, ReadoutConfusion};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    SingleZeroFidelity,
    Rb,
    Irb,
    Folding,
    TwirlCheck,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::SingleZeroFidelity => "single_zero_fidelity",
            Kind::Rb => "rb",
            Kind::Irb => "irb",
            Kind::Folding => "folding",
            Kind::TwirlCheck => "twirl_check",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReadoutSpec {
    Named(String),
    Matrix([[f64; 2]; 2]),
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        ReadoutSpec::Named("none".into())
    }
}

impl ReadoutSpec {
    pub fn label(&self) -> String {
        match self {
            ReadoutSpec::Named(s) => s.clone(),
            ReadoutSpec::Matrix(m) => format!("{m:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default)]
    pub depolarizing_1q: f64,
    #[serde(default)]
    pub depolarizing_2q: f64,
    #[serde(default)]
    pub readout: ReadoutSpec,
    #[serde(default)]
    pub prep_sigma_degrees: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub n_qubits: usize,
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequences: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
    #[serde(default)]
    pub exact: bool,
    /// Builtin name or circuit file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    /// Inline circuit text; takes the place of a file `target` in echoes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub noise: NoiseConfig,
}

/// A validated config with its target resolved.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub noise: NoiseModel,
    pub estimation: Estimation,
    pub target: Option<Circuit>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Usage(format!("config field `{field}`: {msg}"))
}

#[derive(Deserialize)]
struct ResultEcho {
    config: ExperimentConfig,
}

/// Reads a TOML config, or the `config` echo of a `result.json`.
pub fn load(path: &Path) -> Result<ExperimentConfig, HarnessError> {
    let text = fs::read_to_string(path)
        .map_err(|e| HarnessError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str::<ResultEcho>(&text)
            .map(|r| r.config)
            .map_err(|e| HarnessError::Usage(format!("{}: line {}: {e}", path.display(), e.line())))?
    } else {
        toml::from_str::<ExperimentConfig>(&text)
            .map_err(|e| HarnessError::Usage(format!("{}: {e}", path.display())))?
    };
    if let Some(t) = &config.target {
        if t != "cz_layer" && config.target_text.is_none() {
            let file = path.parent().unwrap_or(Path::new(".")).join(t);
            let circuit = fs::read_to_string(&file)
                .map_err(|e| field_error("target", format!("cannot read {}: {e}", file.display())))?;
            config.target_text = Some(circuit);
            config.target = None;
        }
    }
    Ok(config)
}

fn readout(spec: &ReadoutSpec) -> Result<Option<ReadoutConfusion>, HarnessError> {
    match spec {
        ReadoutSpec::Named(s) => match s.to_ascii_lowercase().as_str() {
            "none" => Ok(None),
            "weak" => Ok(Some(ReadoutConfusion::weak())),
            "strong" => Ok(Some(ReadoutConfusion::strong())),
            other => Err(field_error(
                "noise.readout",
                format!("unknown setting {other:?}, expected none, weak, strong or a 2x2 matrix"),
            )),
        },
        ReadoutSpec::Matrix(m) => ReadoutConfusion::new(*m).map(Some).map_err(|e| field_error("noise.readout", e)),
    }
}

fn require<T: Copy>(value: Option<T>, field: &str, kind: Kind) -> Result<T, HarnessError> {
    value.ok_or_else(|| field_error(field, format!("required for kind = {}", kind.name())))
}

/// Checks every kind-specific requirement before any simulation starts.
pub fn prepare(config: ExperimentConfig) -> Result<Prepared, HarnessError> {
    let kind = config.kind;
    let n = config.n_qubits;
    let max_n = match kind {
        Kind::Rb | Kind::Irb | Kind::TwirlCheck => 3,
        _ => 8,
    };
    if n == 0 || n > max_n {
        return Err(field_error("n_qubits", format!("must be in 1..={max_n} for kind = {}, got {n}", kind.name())));
    }

    let nc = &config.noise;
    for (field, v) in [("noise.depolarizing_1q", nc.depolarizing_1q), ("noise.depolarizing_2q", nc.depolarizing_2q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(field_error(field, format!("must lie in [0, 1], got {v}")));
        }
    }
    if !(nc.prep_sigma_degrees.is_finite() && nc.prep_sigma_degrees >= 0.0) {
        return Err(field_error("noise.prep_sigma_degrees", "must be a finite non-negative number"));
    }
    let mut noise = NoiseModel::noiseless()
        .with_depolarizing(1, nc.depolarizing_1q)
        .with_depolarizing(2, nc.depolarizing_2q)
        .with_prep_sigma(nc.prep_sigma_degrees);
    if let Some(r) = readout(&nc.readout)? {
        noise = noise.with_readout(r);
    }

    let needs_grid = matches!(kind, Kind::Rb | Kind::Irb | Kind::Folding);
    if needs_grid {
        let grid = config
            .m_grid
            .as_ref()
            .ok_or_else(|| field_error("m_grid", format!("required for kind = {}", kind.name())))?;
        if grid.is_empty() {
            return Err(field_error("m_grid", "must not be empty"));
        }
        if matches!(kind, Kind::Rb | Kind::Irb) && grid.contains(&0) {
            return Err(field_error("m_grid", "sequence lengths start at 1"));
        }
    }
    match kind {
        Kind::Rb | Kind::Irb => {
            if require(config.sequences, "sequences", kind)? == 0 {
                return Err(field_error("sequences", "must be at least 1"));
            }
        }
        Kind::SingleZeroFidelity | Kind::Folding => {
            if require(config.runs, "runs", kind)? == 0 {
                return Err(field_error("runs", "must be at least 1"));
            }
        }
        Kind::TwirlCheck => {
            if require(config.samples, "samples", kind)? == 0 {
                return Err(field_error("samples", "must be at least 1"));
            }
        }
    }

    let estimation = match (config.exact, config.shots) {
        _ if kind == Kind::TwirlCheck => Estimation::Exact,
        (true, Some(_)) => return Err(field_error("shots", "give either shots or exact = true, not both")),
        (true, None) => Estimation::Exact,
        (false, Some(0)) => return Err(field_error("shots", "must be at least 1")),
        (false, Some(s)) => Estimation::Shots(s),
        (false, None) => {
            return Err(field_error("shots", format!("required for kind = {} unless exact = true", kind.name())))
        }
    };

    let target = match (&config.target, &config.target_text) {
        (Some(_), Some(_)) => return Err(field_error("target", "give either target or target_text, not both")),
        (Some(name), None) if name == "cz_layer" => Some(Circuit::cz_layer(n).map_err(|e| field_error("target", e))?),
        (Some(name), None) => return Err(field_error("target", format!("unknown builtin {name:?}"))),
        (None, Some(text)) => Some(Circuit::parse(text).map_err(|e| field_error("target", e))?),
        (None, None) => None,
    };
    match (&target, kind) {
        (None, Kind::Rb) => {}
        (None, _) => return Err(field_error("target", format!("required for kind = {}", kind.name()))),
        (Some(t), _) if t.n_qubits() != n => {
            return Err(field_error("target", format!("circuit acts on {} qubits, n_qubits is {n}", t.n_qubits())))
        }
        (Some(t), Kind::Irb) => {
            CliffordElement::from_circuit(t)
                .map_err(|e| field_error("target", format!("interleaved target must be Clifford: {e}")))?;
        }
        _ => {}
    }

    Ok(Prepared { config, noise, estimation, target })
}
