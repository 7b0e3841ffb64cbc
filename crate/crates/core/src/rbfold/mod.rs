//! Randomized benchmarking, identity folding and decay fitting.

pub mod clifford;
pub mod fit;
pub mod fold;
pub mod sequence;

use serde::{Deserialize, Serialize};

pub use clifford::{CliffordElement, SignedPauli};
pub use fit::{fit_decay, interleaved_gate_fidelity, DecayFit};
pub use fold::{fold_circuit, folding_experiment};
pub use sequence::{rb_experiment, rb_sequence, sequence_zero_fidelity, RBSequence};

/// Averaged zero-fidelity at one sequence length or fold count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub m: usize,
    pub mean: f64,
    pub stderr: f64,
    pub values: Vec<f64>,
}

impl PointRecord {
    pub fn from_values(m: usize, values: Vec<f64>) -> Self {
        let (mean, stderr) = mean_stderr(&values);
        Self { m, mean, stderr, values }
    }
}

/// Mean and standard error (sample deviation over `√k`); zero error for a
/// single value.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    if k == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / k as f64;
    if k == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
    (mean, (var / k as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }
}
