//! CPTP channels in Kraus and superoperator form.
//!
//! The superoperator acts on column-stacked operators, so a channel with
//! Kraus operators `Aₖ` has `Λ̂ = Σₖ Aₖ* ⊗ Aₖ` and `vec(Λ(ρ)) = Λ̂ vec(ρ)`.

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::qstate::{
    check_qubits, hermitian_eigenvalues, kron, max_abs_diff, pauli_basis, random_unitary, unvec, vec, ComplexMatrix,
    DensityMatrix, Pauli, PauliString, VectorizedOperator, C64, ONE, ZERO,
};
use crate::rbfold::clifford::CliffordElement;
use crate::rng::stream;

pub const TP_TOL: f64 = 1e-9;
pub const UNITARY_TOL: f64 = 1e-9;

/// Relative cutoff below which Choi eigenvalues are dropped when extracting
/// Kraus operators.
const KRAUS_CUTOFF: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    n_qubits: usize,
    kraus: Vec<ComplexMatrix>,
    superop: ComplexMatrix,
}

fn superop_from_kraus(kraus: &[ComplexMatrix]) -> ComplexMatrix {
    let d = kraus[0].nrows();
    let mut s = ComplexMatrix::zeros(d * d, d * d);
    for k in kraus {
        s += kron(&k.map(|c| c.conj()), k);
    }
    s
}

fn dim_to_qubits(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return invalid(format!("operator dimension {dim} is not a qubit register"));
    }
    let n = dim.trailing_zeros() as usize;
    check_qubits(n)?;
    Ok(n)
}

impl Channel {
    /// Builds a channel from Kraus operators, checking `Σ A†A = I`.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = kraus.first() else {
            return invalid("channel needs at least one Kraus operator");
        };
        let d = first.nrows();
        if kraus.iter().any(|k| k.nrows() != d || k.ncols() != d) {
            return invalid("Kraus operators must be square and of equal size");
        }
        let n_qubits = dim_to_qubits(d)?;
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs_diff(&sum, &ComplexMatrix::identity(d, d));
        if dev > TP_TOL {
            return invalid(format!("Kraus operators are not trace preserving (deviation {dev:.3e})"));
        }
        let superop = superop_from_kraus(&kraus);
        Ok(Self { n_qubits, kraus, superop })
    }

    pub fn identity(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let d = 1 << n_qubits;
        Ok(Self {
            n_qubits,
            kraus: vec![ComplexMatrix::identity(d, d)],
            superop: ComplexMatrix::identity(d * d, d * d),
        })
    }

    /// `ρ ↦ UρU†`.
    pub fn unitary(u: &ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return invalid("unitary must be square");
        }
        let n_qubits = dim_to_qubits(u.nrows())?;
        let d = u.nrows();
        let dev = max_abs_diff(&(u.adjoint() * u), &ComplexMatrix::identity(d, d));
        if dev > UNITARY_TOL {
            return invalid(format!("matrix is not unitary (deviation {dev:.3e})"));
        }
        Ok(Self { n_qubits, kraus: vec![u.clone()], superop: kron(&u.map(|c| c.conj()), u) })
    }

    /// `E(ρ) = (1−λ)ρ + λ Tr[ρ] I/2ⁿ`.
    pub fn depolarizing(lambda: f64, n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        if !(0.0..=1.0).contains(&lambda) {
            return invalid(format!("depolarizing parameter must be in [0, 1], got {lambda}"));
        }
        let d = 1usize << n_qubits;
        let d2 = d * d;
        let paulis = pauli_basis(n_qubits)?;
        let kraus = paulis
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let w = if i == 0 { 1.0 - lambda + lambda / d2 as f64 } else { lambda / d2 as f64 };
                (w > 0.0).then(|| p.to_matrix().scale(w.sqrt()))
            })
            .collect();
        // Σ_P P* ⊗ P = d |vec I⟩⟨vec I|
        let vid = vec(&ComplexMatrix::identity(d, d))?.into_entries();
        let mut superop = ComplexMatrix::identity(d2, d2).scale(1.0 - lambda);
        superop += (&vid * vid.adjoint()).scale(lambda / d as f64);
        Ok(Self { n_qubits, kraus, superop })
    }

    /// Depolarizing channel acting on `qubits` of an `n`-qubit register.
    pub fn depolarizing_on(lambda: f64, qubits: &[usize], n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        if !(0.0..=1.0).contains(&lambda) {
            return invalid(format!("depolarizing parameter must be in [0, 1], got {lambda}"));
        }
        let k = qubits.len();
        if k == 0 || qubits.iter().any(|&q| q >= n_qubits) {
            return invalid("depolarizing support must be a non-empty subset of the register");
        }
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != k {
            return invalid("depolarizing support has repeated qubits");
        }
        let n_paulis = 1usize << (2 * k);
        let kraus = (0..n_paulis)
            .filter_map(|idx| {
                let local = PauliString::from_index(idx, k);
                let mut factors = vec![Pauli::I; n_qubits];
                for (t, &q) in qubits.iter().enumerate() {
                    factors[q] = local.factors()[t];
                }
                let w = if idx == 0 { 1.0 - lambda + lambda / n_paulis as f64 } else { lambda / n_paulis as f64 };
                (w > 0.0).then(|| PauliString::new(factors).to_matrix().scale(w.sqrt()))
            })
            .collect();
        Self::from_kraus(kraus)
    }

    /// Builds a channel from its Choi matrix `J = Σ vec(A)vec(A)†`.
    pub fn from_choi(choi: &ComplexMatrix) -> Result<Self> {
        let d2 = choi.nrows();
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 || !choi.is_square() {
            return invalid("Choi matrix must be d²×d²");
        }
        Self::from_kraus(kraus_from_choi(choi, d))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn superop(&self) -> &ComplexMatrix {
        &self.superop
    }

    /// Choi matrix `Σ vec(A)vec(A)†`, assembled from the superoperator.
    pub fn choi(&self) -> ComplexMatrix {
        choi_from_superop(&self.superop, self.dim())
    }

    fn check_same(&self, other: &Channel) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return invalid(format!("qubit count mismatch: {} vs {}", self.n_qubits, other.n_qubits));
        }
        Ok(())
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Channel) -> Result<Channel> {
        self.check_same(other)?;
        let superop = &self.superop * &other.superop;
        Ok(Self::from_superop_unchecked(self.n_qubits, superop))
    }

    /// `m`-fold application; `power(0)` is the identity channel.
    pub fn power(&self, m: usize) -> Channel {
        match m {
            0 => Self::identity(self.n_qubits).expect("valid qubit count"),
            1 => self.clone(),
            _ => {
                let d2 = self.dim() * self.dim();
                let mut acc = ComplexMatrix::identity(d2, d2);
                let mut base = self.superop.clone();
                let mut e = m;
                while e > 0 {
                    if e & 1 == 1 {
                        acc = &acc * &base;
                    }
                    e >>= 1;
                    if e > 0 {
                        base = &base * &base;
                    }
                }
                Self::from_superop_unchecked(self.n_qubits, acc)
            }
        }
    }

    fn from_superop_unchecked(n_qubits: usize, superop: ComplexMatrix) -> Channel {
        let d = 1 << n_qubits;
        let kraus = kraus_from_choi(&choi_from_superop(&superop, d), d);
        Channel { n_qubits, kraus, superop }
    }

    /// Kraus-form application.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.n_qubits() != self.n_qubits {
            return invalid(format!("state has {} qubits, channel has {}", rho.n_qubits(), self.n_qubits));
        }
        let m = rho.matrix();
        let mut out = ComplexMatrix::zeros(m.nrows(), m.ncols());
        for k in &self.kraus {
            out += k * m * k.adjoint();
        }
        DensityMatrix::from_matrix_unchecked(out)
    }

    /// Superoperator-form application to an arbitrary operator.
    pub fn apply_operator(&self, a: &ComplexMatrix) -> Result<ComplexMatrix> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return invalid(format!("operator must be {0}×{0}", self.dim()));
        }
        let v = vec(a)?;
        let out = &self.superop * v.entries();
        Ok(unvec(&VectorizedOperator::from_entries(self.dim(), out)?))
    }

    pub fn apply_superop(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix_unchecked(self.apply_operator(rho.matrix())?)
    }

    /// `max |Σ A†A − I|`.
    pub fn trace_preservation_error(&self) -> f64 {
        let d = self.dim();
        let mut sum = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            sum += k.adjoint() * k;
        }
        max_abs_diff(&sum, &ComplexMatrix::identity(d, d))
    }

    /// Smallest Choi eigenvalue.
    pub fn min_choi_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.choi()).into_iter().fold(f64::INFINITY, f64::min)
    }
}

/// `J[(e·d+b), (c·d+a)] = Λ̂[(a·d+b), (c·d+e)]`, i.e. the realignment that
/// turns `Σ A*⊗A` into `Σ vec(A)vec(A)†`.
fn choi_from_superop(s: &ComplexMatrix, d: usize) -> ComplexMatrix {
    let mut j = ComplexMatrix::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for e in 0..d {
                    j[(e * d + b, c * d + a)] = s[(a * d + b, c * d + e)];
                }
            }
        }
    }
    j
}

fn kraus_from_choi(choi: &ComplexMatrix, d: usize) -> Vec<ComplexMatrix> {
    let h = (choi + choi.adjoint()).scale(0.5);
    let eig = h.symmetric_eigen();
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut kraus: Vec<ComplexMatrix> = order
        .into_iter()
        .filter(|&i| eig.eigenvalues[i] > KRAUS_CUTOFF * top.max(1.0))
        .map(|i| {
            let v: DVector<C64> = eig.eigenvectors.column(i).into_owned() * C64::new(eig.eigenvalues[i].sqrt(), 0.0);
            ComplexMatrix::from_column_slice(d, d, v.as_slice())
        })
        .collect();
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(d, d));
    }
    kraus
}

/// Outcome of averaging a channel over a unitary ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwirlReport {
    /// Contraction of the traceless probe `|0…0⟩⟨0…0| − I/D` under the
    /// averaged channel.
    pub p_empirical: f64,
    pub p_empirical_stderr: f64,
    /// `(Tr Λ̂ − 1)/(D² − 1)`.
    pub p_formula: f64,
    /// Largest entry of `|avg − depolarizing(p_formula)|` in superoperator form.
    pub max_deviation_from_depolarizing: f64,
    pub n_samples: usize,
}

/// Superoperator of the depolarizing map `ρ ↦ pρ + (1−p)Tr[ρ]I/D`.
pub fn depolarizing_superop(p: f64, d: usize) -> ComplexMatrix {
    let vid = DVector::from_fn(d * d, |k, _| if k % (d + 1) == 0 { ONE } else { ZERO });
    let mut s = ComplexMatrix::identity(d * d, d * d).scale(p);
    s += (&vid * vid.adjoint()).scale((1.0 - p) / d as f64);
    s
}

/// `(Tr Λ̂ − 1)/(D² − 1)`.
pub fn twirl_parameter(c: &Channel) -> f64 {
    let d2 = (c.dim() * c.dim()) as f64;
    (c.superop().trace().re - 1.0) / (d2 - 1.0)
}

fn twirl_report(c: &Channel, sampled: Vec<ComplexMatrix>) -> TwirlReport {
    let d = c.dim();
    let n_samples = sampled.len();
    let mut probe = ComplexMatrix::identity(d, d).scale(-1.0 / d as f64);
    probe[(0, 0)] += ONE;
    let probe_vec = vec(&probe).expect("square").into_entries();
    let norm = probe_vec.norm_squared();
    let contraction = |s: &ComplexMatrix| (probe_vec.adjoint() * s * &probe_vec)[(0, 0)].re / norm;

    let values: Vec<f64> = sampled.iter().map(contraction).collect();
    let mut avg = ComplexMatrix::zeros(d * d, d * d);
    for s in &sampled {
        avg += s;
    }
    avg /= C64::new(n_samples as f64, 0.0);

    let (mean, stderr) = crate::rbfold::mean_stderr(&values);
    let p_formula = twirl_parameter(c);
    TwirlReport {
        p_empirical: mean,
        p_empirical_stderr: stderr,
        p_formula,
        max_deviation_from_depolarizing: max_abs_diff(&avg, &depolarizing_superop(p_formula, d)),
        n_samples,
    }
}

fn conjugated(c: &Channel, u: &ComplexMatrix) -> ComplexMatrix {
    let su = kron(&u.map(|x| x.conj()), u);
    su.adjoint() * c.superop() * su
}

/// Averages `U†Λ(U·U†)U` over uniformly random Cliffords. Sample `k` draws its
/// element from its own stream, so the report does not depend on the number
/// of worker threads.
pub fn twirl_estimate<R: Rng + ?Sized>(c: &Channel, n_samples: usize, rng: &mut R) -> Result<TwirlReport> {
    if n_samples == 0 {
        return invalid("twirl needs at least one sample");
    }
    let seed = rng.next_u64();
    let n = c.n_qubits();
    let sampled: Vec<ComplexMatrix> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = stream(seed, "twirl-clifford", &[k]);
            let cl = CliffordElement::random(n, &mut r)?;
            Ok(conjugated(c, &cl.to_unitary()))
        })
        .collect::<Result<_>>()?;
    Ok(twirl_report(c, sampled))
}

/// Same as [`twirl_estimate`] with Haar-random unitaries.
pub fn twirl_estimate_haar<R: Rng + ?Sized>(c: &Channel, n_samples: usize, rng: &mut R) -> Result<TwirlReport> {
    if n_samples == 0 {
        return invalid("twirl needs at least one sample");
    }
    let seed = rng.next_u64();
    let d = c.dim();
    let sampled: Vec<ComplexMatrix> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = stream(seed, "twirl-haar", &[k]);
            conjugated(c, &random_unitary(d, &mut r))
        })
        .collect();
    Ok(twirl_report(c, sampled))
}
