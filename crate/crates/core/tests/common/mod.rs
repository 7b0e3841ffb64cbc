#![allow(dead_code)]

use rand::Rng;
use rand_distr::StandardNormal;
use zerofid_core::qstate::random_unitary;
use zerofid_core::{Channel, ComplexMatrix, C64};

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// Random CPTP map from the first `d` columns of a Haar unitary on `d·k`.
pub fn random_channel<R: Rng>(n_qubits: usize, n_kraus: usize, rng: &mut R) -> Channel {
    let d = 1 << n_qubits;
    let u = random_unitary(d * n_kraus, rng);
    let kraus = (0..n_kraus).map(|i| u.view((i * d, 0), (d, d)).into_owned()).collect();
    Channel::from_kraus(kraus).unwrap()
}

pub fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    zerofid_core::qstate::max_abs_diff(a, b)
}

/// Whether `a = e^{iφ} b` for some phase, to `tol`.
pub fn equal_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    let (idx, _) =
        b.iter().enumerate().fold((0, 0.0), |acc, (i, v)| if v.norm() > acc.1 { (i, v.norm()) } else { acc });
    let phase = a.as_slice()[idx] / b.as_slice()[idx];
    if (phase.norm() - 1.0).abs() > tol {
        return false;
    }
    max_diff(a, &(b * phase)) < tol
}
