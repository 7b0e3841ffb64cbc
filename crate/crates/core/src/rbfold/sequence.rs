//! Random Clifford sequences and the RB / interleaved-RB experiment.

use rand::Rng;
use rayon::prelude::*;

use super::clifford::CliffordElement;
use super::PointRecord;
use crate::circuit::{Circuit, NoiseModel};
use crate::error::{invalid, Result};
use crate::fidelity::{estimate_zero_fidelity, Estimation, IdealReference};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct RBSequence {
    n_qubits: usize,
    elements: Vec<CliffordElement>,
    interleaved: Option<Circuit>,
    inverse_element: CliffordElement,
}

impl RBSequence {
    pub fn length_m(&self) -> usize {
        self.elements.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn interleaved(&self) -> Option<&Circuit> {
        self.interleaved.as_ref()
    }

    pub fn inverse_element(&self) -> &CliffordElement {
        &self.inverse_element
    }

    /// Compiled gates: each Clifford, the target after it when interleaving,
    /// then the inverting element.
    pub fn to_circuit(&self) -> Circuit {
        let mut c = Circuit::empty(self.n_qubits).expect("valid size");
        for e in &self.elements {
            c.extend(&e.to_circuit()).expect("same size");
            if let Some(t) = &self.interleaved {
                c.extend(t).expect("same size");
            }
        }
        c.extend(&self.inverse_element.to_circuit()).expect("same size");
        c
    }
}

/// `m` uniform Cliffords, optionally each followed by `interleave_target`,
/// closed by the element that inverts the whole ideal word.
pub fn rb_sequence<R: Rng + ?Sized>(
    n_qubits: usize,
    m: usize,
    rng: &mut R,
    interleave_target: Option<&Circuit>,
) -> Result<RBSequence> {
    if m == 0 {
        return invalid("sequence length must be at least 1");
    }
    let target = match interleave_target {
        Some(t) => {
            if t.n_qubits() != n_qubits {
                return invalid(format!("interleaved target has {} qubits, expected {n_qubits}", t.n_qubits()));
            }
            Some(CliffordElement::from_circuit(t)?)
        }
        None => None,
    };
    let mut total = CliffordElement::identity(n_qubits);
    let mut elements = Vec::with_capacity(m);
    for _ in 0..m {
        let c = CliffordElement::random(n_qubits, rng)?;
        total = c.compose(&total)?;
        if let Some(t) = &target {
            total = t.compose(&total)?;
        }
        elements.push(c);
    }
    Ok(RBSequence { n_qubits, elements, interleaved: interleave_target.cloned(), inverse_element: total.inverse() })
}

/// Normalized zero-fidelity of a noisy run of `seq` against the identity.
pub fn sequence_zero_fidelity<R: Rng + ?Sized>(
    seq: &RBSequence,
    noise: &NoiseModel,
    estimation: Estimation,
    rng: &mut R,
) -> Result<f64> {
    let f = estimate_zero_fidelity(IdealReference::Identity, &seq.to_circuit(), noise, estimation, rng.next_u64())?;
    Ok(f.normalized)
}

/// Runs `sequences` random sequences at every length in `m_grid`.
///
/// Sequence `(m, l)` draws its Cliffords from stream `("rb-sequence", m, l)`
/// of a master seed taken from `rng`, independently of the noise model, so
/// runs that differ only in SPAM or in the interleaved target see the same
/// Clifford words.
pub fn rb_experiment<R: Rng + ?Sized>(
    n_qubits: usize,
    m_grid: &[usize],
    sequences: usize,
    noise: &NoiseModel,
    estimation: Estimation,
    interleave_target: Option<&Circuit>,
    rng: &mut R,
) -> Result<Vec<PointRecord>> {
    if m_grid.is_empty() {
        return invalid("m_grid must not be empty");
    }
    if sequences == 0 {
        return invalid("at least one sequence per length is required");
    }
    noise.validate()?;
    let master = rng.next_u64();
    let mut grid = m_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let tasks: Vec<(usize, usize)> = grid.iter().flat_map(|&m| (0..sequences).map(move |l| (m, l))).collect();
    let values: Vec<f64> = tasks
        .par_iter()
        .map(|&(m, l)| {
            let idx = [m as u64, l as u64];
            let seq = rb_sequence(n_qubits, m, &mut stream(master, "rb-sequence", &idx), interleave_target)?;
            sequence_zero_fidelity(&seq, noise, estimation, &mut stream(master, "rb-simulation", &idx))
        })
        .collect::<Result<_>>()?;
    Ok(grid.iter().zip(values.chunks(sequences)).map(|(&m, v)| PointRecord::from_values(m, v.to_vec())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::run_exact;
    use crate::qstate::{max_abs_diff, random_density_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_sequences_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=3 {
            for m in [1, 4] {
                let seq = rb_sequence(n, m, &mut rng, None).unwrap();
                assert_eq!(seq.length_m(), m);
                let rho = random_density_matrix(n, &mut rng);
                let out = run_exact(&seq.to_circuit(), None, &rho).unwrap();
                assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-9);
            }
        }
    }

    #[test]
    fn interleaved_noiseless_sequence_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let target = Circuit::parse("CZ 0 1\nH 2\nCZ 1 2").unwrap();
        let seq = rb_sequence(3, 3, &mut rng, Some(&target)).unwrap();
        let rho = random_density_matrix(3, &mut rng);
        let out = run_exact(&seq.to_circuit(), None, &rho).unwrap();
        assert!(max_abs_diff(out.matrix(), rho.matrix()) < 1e-9);
    }

    #[test]
    fn zero_length_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rb_sequence(1, 0, &mut rng, None).is_err());
    }

    #[test]
    fn noiseless_experiment_is_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = rb_experiment(1, &[1], 1, &NoiseModel::noiseless(), Estimation::Exact, None, &mut rng).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].mean - 1.0).abs() < 1e-12);
    }
}
