//! Runs a prepared config and collects everything `result.json` records.

use serde::{Deserialize, Serialize};
use zerofid_core::channel::{twirl_estimate, TwirlReport};
use zerofid_core::circuit::noisy_channel;
use zerofid_core::fidelity::estimate_zero_fidelity;
use zerofid_core::rbfold::{fit_decay, folding_experiment, interleaved_gate_fidelity, rb_experiment, DecayFit};
use zerofid_core::rng::{fork_seed, stream};
use zerofid_core::{Channel, IdealReference, PointRecord};

use crate::config::{ExperimentConfig, Kind, Prepared};
use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Toolkit {
    pub name: String,
    pub version: String,
}

impl Toolkit {
    pub fn current() -> Self {
        Self { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub toolkit: Toolkit,
    pub config: ExperimentConfig,
    pub points: Vec<PointRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<DecayFit>,
    /// Non-interleaved curve of an IRB run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_points: Option<Vec<PointRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_fit: Option<DecayFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_fidelity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub twirl: Option<TwirlReport>,
}

fn runtime(e: zerofid_core::Error) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

/// Fits when the grid allows it. A flat or too-short curve leaves `fit` empty
/// rather than failing the run.
fn try_fit(points: &[PointRecord], n: usize) -> Option<DecayFit> {
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.m as f64, p.mean)).collect();
    fit_decay(&xy, n).ok()
}

pub fn execute(prepared: &Prepared) -> Result<ExperimentResult, HarnessError> {
    let Prepared { config, noise, estimation, target } = prepared;
    let n = config.n_qubits;
    let seed = config.master_seed;
    let grid = config.m_grid.clone().unwrap_or_default();
    let mut echo = config.clone();
    echo.output_dir = None;
    let mut result = ExperimentResult {
        toolkit: Toolkit::current(),
        config: echo,
        points: Vec::new(),
        fit: None,
        reference_points: None,
        reference_fit: None,
        gate_fidelity: None,
        twirl: None,
    };

    match config.kind {
        Kind::SingleZeroFidelity => {
            let target = target.as_ref().expect("validated");
            let runs = config.runs.expect("validated");
            let values = (0..runs)
                .map(|r| {
                    let s = fork_seed(&mut stream(seed, "single", &[r as u64]));
                    estimate_zero_fidelity(IdealReference::Circuit(target), target, noise, *estimation, s)
                        .map(|f| f.normalized)
                })
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime)?;
            result.points = vec![PointRecord::from_values(1, values)];
        }
        Kind::Rb => {
            let seqs = config.sequences.expect("validated");
            let mut rng = stream(seed, "rb", &[]);
            result.points = rb_experiment(n, &grid, seqs, noise, *estimation, None, &mut rng).map_err(runtime)?;
            result.fit = try_fit(&result.points, n);
        }
        Kind::Irb => {
            let seqs = config.sequences.expect("validated");
            let reference = rb_experiment(n, &grid, seqs, noise, *estimation, None, &mut stream(seed, "rb", &[]))
                .map_err(runtime)?;
            result.points =
                rb_experiment(n, &grid, seqs, noise, *estimation, target.as_ref(), &mut stream(seed, "rb", &[]))
                    .map_err(runtime)?;
            result.fit = try_fit(&result.points, n);
            result.reference_fit = try_fit(&reference, n);
            result.reference_points = Some(reference);
            if let (Some(fr), Some(fi)) = (&result.reference_fit, &result.fit) {
                result.gate_fidelity = Some(interleaved_gate_fidelity(fr, fi, n).map_err(runtime)?);
            }
        }
        Kind::Folding => {
            let target = target.as_ref().expect("validated");
            let runs = config.runs.expect("validated");
            let mut rng = stream(seed, "folding", &[]);
            result.points = folding_experiment(target, &grid, noise, *estimation, runs, &mut rng).map_err(runtime)?;
            result.fit = try_fit(&result.points, n);
        }
        Kind::TwirlCheck => {
            let target = target.as_ref().expect("validated");
            let samples = config.samples.expect("validated");
            // error channel of the noisy target: noisy run followed by the ideal inverse
            let undo = Channel::unitary(&target.adjoint().unitary()).map_err(runtime)?;
            let error = undo.compose(&noisy_channel(target, noise).map_err(runtime)?).map_err(runtime)?;
            let report = twirl_estimate(&error, samples, &mut stream(seed, "twirl", &[])).map_err(runtime)?;
            result.points = vec![PointRecord {
                m: 0,
                mean: report.p_empirical,
                stderr: report.p_empirical_stderr,
                values: vec![report.p_empirical],
            }];
            result.twirl = Some(report);
        }
    }
    Ok(result)
}
