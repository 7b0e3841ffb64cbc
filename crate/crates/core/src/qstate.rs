//! Dense complex linear algebra for qubit registers: density matrices, Pauli
//! strings, SIC states and column-stacking vectorization.
//!
//! Qubit 0 is the most significant factor of every tensor product, so basis
//! index `k` holds qubit `q` in bit `n - 1 - q`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_FLOOR: f64 = -1e-9;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Largest register handled by the dense routines.
pub const MAX_QUBITS: usize = 8;

pub(crate) fn check_qubits(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return invalid(format!("qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"));
    }
    Ok(())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Pauli {
        Self::ALL[i & 3]
    }

    /// Whether the factor flips the computational basis state.
    pub fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn matrix(self) -> ComplexMatrix {
        let m = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        };
        ComplexMatrix::from_row_slice(2, 2, &m)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, unnormalized (`Tr[P²] = 2ⁿ`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PauliString {
    factors: Vec<Pauli>,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>) -> Self {
        Self { factors }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { factors: vec![Pauli::I; n_qubits] }
    }

    /// String number `index` in lexicographic order over `{I,X,Y,Z}ⁿ`.
    pub fn from_index(index: usize, n_qubits: usize) -> Self {
        let factors = (0..n_qubits).map(|q| Pauli::from_index(index >> (2 * (n_qubits - 1 - q)))).collect();
        Self { factors }
    }

    pub fn index(&self) -> usize {
        self.factors.iter().fold(0, |acc, p| acc * 4 + p.index())
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn weight(&self) -> usize {
        self.factors.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity(&self) -> bool {
        self.weight() == 0
    }

    /// Basis-index mask of the qubits this string flips.
    pub fn flip_mask(&self) -> usize {
        let n = self.n_qubits();
        self.factors.iter().enumerate().filter(|(_, p)| p.flips()).fold(0, |m, (q, _)| m | (1 << (n - 1 - q)))
    }

    /// `P|k⟩ = phase(k) |k ⊕ flip_mask⟩`.
    pub fn phase_on(&self, k: usize) -> C64 {
        let n = self.n_qubits();
        let mut phase = ONE;
        for (q, p) in self.factors.iter().enumerate() {
            let bit = (k >> (n - 1 - q)) & 1;
            match (p, bit) {
                (Pauli::Y, 0) => phase *= I,
                (Pauli::Y, _) => phase *= -I,
                (Pauli::Z, 1) => phase = -phase,
                _ => {}
            }
        }
        phase
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let dim = 1usize << self.n_qubits();
        let mask = self.flip_mask();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for k in 0..dim {
            m[(k ^ mask, k)] = self.phase_on(k);
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.factors {
            write!(f, "{}", p.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factors = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => invalid(format!("not a Pauli symbol: {other:?}")),
            })
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return invalid("empty Pauli string");
        }
        Ok(Self { factors })
    }
}

/// All `4ⁿ` Pauli strings in lexicographic order; index 0 is the identity.
pub fn pauli_basis(n_qubits: usize) -> Result<Vec<PauliString>> {
    check_qubits(n_qubits)?;
    Ok((0..1usize << (2 * n_qubits)).map(|i| PauliString::from_index(i, n_qubits)).collect())
}

/// A validated `2ⁿ×2ⁿ` density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let rho = Self::from_matrix_unchecked(matrix)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Wraps a matrix whose shape is a qubit register without checking the
    /// state invariants. Used on hot paths whose outputs are valid by
    /// construction.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.nrows();
        if matrix.ncols() != dim || !dim.is_power_of_two() || dim < 2 {
            return invalid(format!("density matrix must be 2ⁿ×2ⁿ, got {}×{}", dim, matrix.ncols()));
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, matrix })
    }

    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return invalid(format!("state vector norm is {norm}, expected 1"));
        }
        Self::from_matrix_unchecked(&v * v.adjoint())
    }

    /// `|0…0⟩⟨0…0|`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        let mut m = ComplexMatrix::zeros(dim, dim);
        m[(0, 0)] = ONE;
        Ok(Self { n_qubits, matrix: m })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let dim = 1 << n_qubits;
        Ok(Self { n_qubits, matrix: ComplexMatrix::identity(dim, dim).scale(1.0 / dim as f64) })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        hs_product(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// Checks the three state invariants at the module tolerances.
    pub fn validate(&self) -> Result<()> {
        let herm = max_abs_diff(&self.matrix, &self.matrix.adjoint());
        if herm > HERMITIAN_TOL {
            return invalid(format!("matrix is not Hermitian (deviation {herm:.3e})"));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > TRACE_TOL {
            return invalid(format!("trace is {tr}, expected 1"));
        }
        let min_eig = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < PSD_FLOOR {
            return invalid(format!("matrix is not positive semidefinite (eigenvalue {min_eig:.3e})"));
        }
        Ok(())
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix_unchecked(kron(&self.matrix, &other.matrix))
    }

    /// `Tr[ρP]` for every Pauli string, in lexicographic order.
    pub fn pauli_expectations(&self) -> Vec<f64> {
        pauli_expectations(&self.matrix, self.n_qubits)
    }
}

/// `Tr[AP]` for every Pauli string `P` (real part), in lexicographic order.
///
/// Entries are regrouped so each qubit owns one base-4 digit `2r + c`, then a
/// 4-point transform per digit maps `(a₀₀, a₀₁, a₁₀, a₁₁)` to the I, X, Y, Z
/// traces.
pub(crate) fn pauli_expectations(a: &ComplexMatrix, n_qubits: usize) -> Vec<f64> {
    let dim = 1usize << n_qubits;
    let mut t = vec![ZERO; dim * dim];
    for c in 0..dim {
        for r in 0..dim {
            t[interleave(r, c, n_qubits)] = a[(r, c)];
        }
    }
    for q in 0..n_qubits {
        let stride = 1usize << (2 * (n_qubits - 1 - q));
        for base in 0..t.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let [a00, a01, a10, a11] = [0, 1, 2, 3].map(|k| t[base + k * stride]);
            t[base] = a00 + a11;
            t[base + stride] = a01 + a10;
            t[base + 2 * stride] = I * (a01 - a10);
            t[base + 3 * stride] = a00 - a11;
        }
    }
    t.into_iter().map(|c| c.re).collect()
}

fn interleave(r: usize, c: usize, n_qubits: usize) -> usize {
    let mut idx = 0;
    for q in 0..n_qubits {
        let bit = n_qubits - 1 - q;
        idx = idx * 4 + 2 * ((r >> bit) & 1) + ((c >> bit) & 1);
    }
    idx
}

pub(crate) fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()).scale(0.5);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Column-stacked vectorization of a square operator.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedOperator {
    dim: usize,
    entries: DVector<C64>,
}

impl VectorizedOperator {
    pub fn from_entries(dim: usize, entries: DVector<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return invalid(format!(
                "vectorized operator of dim {dim} needs {} entries, got {}",
                dim * dim,
                entries.len()
            ));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &DVector<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DVector<C64> {
        self.entries
    }
}

/// `Vec(A) = (a₁₁, …, a_d1, a₁₂, …)ᵀ`.
pub fn vec(a: &ComplexMatrix) -> Result<VectorizedOperator> {
    if !a.is_square() {
        return invalid(format!("vec expects a square matrix, got {}×{}", a.nrows(), a.ncols()));
    }
    // nalgebra storage is already column-major.
    Ok(VectorizedOperator { dim: a.nrows(), entries: DVector::from_column_slice(a.as_slice()) })
}

pub fn unvec(v: &VectorizedOperator) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(v.dim, v.dim, v.entries.as_slice())
}

/// `Tr[A†B]` without forming the product.
pub(crate) fn hs_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Hilbert–Schmidt inner product `Tr[A†B]`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<C64> {
    if a.shape() != b.shape() {
        return invalid(format!("shape mismatch {:?} vs {:?}", a.shape(), b.shape()));
    }
    Ok(hs_product(a, b))
}

/// `Tr[ρW]`; exactly 1 for the identity string.
pub fn expectation(rho: &DensityMatrix, w: &PauliString) -> Result<f64> {
    if rho.n_qubits() != w.n_qubits() {
        return invalid(format!("state has {} qubits, Pauli string has {}", rho.n_qubits(), w.n_qubits()));
    }
    if w.is_identity() {
        return Ok(1.0);
    }
    let mask = w.flip_mask();
    let m = rho.matrix();
    Ok((0..rho.dim()).map(|k| w.phase_on(k) * m[(k, k ^ mask)]).sum::<C64>().re)
}

/// Amplitudes of single-qubit SIC state `k ∈ 0..4`.
pub fn sic_amplitudes(k: usize) -> [C64; 2] {
    assert!(k < 4, "SIC index {k} out of range");
    if k == 0 {
        return [ONE, ZERO];
    }
    let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (k - 1) as f64 / 3.0);
    [C64::new(1.0 / 3f64.sqrt(), 0.0), phase * (2.0f64 / 3.0).sqrt()]
}

/// Polar angles `(θ, φ)` with `|ψ⟩ = cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩` for SIC
/// state `k`.
pub fn sic_angles(k: usize) -> (f64, f64) {
    assert!(k < 4, "SIC index {k} out of range");
    if k == 0 {
        (0.0, 0.0)
    } else {
        (2.0 * (1.0 / 3f64.sqrt()).acos(), 2.0 * std::f64::consts::PI * (k - 1) as f64 / 3.0)
    }
}

/// Per-qubit SIC labels of product state `index` (qubit 0 first).
pub fn sic_labels(index: usize, n_qubits: usize) -> Vec<usize> {
    (0..n_qubits).map(|q| (index >> (2 * (n_qubits - 1 - q))) & 3).collect()
}

/// Pure product state from per-qubit amplitudes.
pub(crate) fn product_state(qubits: &[[C64; 2]]) -> ComplexMatrix {
    let mut v = DVector::from_element(1, ONE);
    for amp in qubits {
        let q = DVector::from_column_slice(amp);
        v = v.kronecker(&q);
    }
    &v * v.adjoint()
}

/// All `4ⁿ` SIC product states in lexicographic index order.
pub fn sic_states(n_qubits: usize) -> Result<Vec<DensityMatrix>> {
    check_qubits(n_qubits)?;
    (0..1usize << (2 * n_qubits))
        .map(|idx| {
            let amps: Vec<[C64; 2]> = sic_labels(idx, n_qubits).into_iter().map(sic_amplitudes).collect();
            DensityMatrix::from_matrix_unchecked(product_state(&amps))
        })
        .collect()
}

/// Bloch-type components `(1, ⟨X⟩, ⟨Y⟩, ⟨Z⟩)` of single-qubit SIC state `k`.
pub(crate) fn sic_components(k: usize) -> [f64; 4] {
    let (theta, phi) = sic_angles(k);
    [1.0, theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

/// `Tr[ρᵢ Wⱼ]` for every SIC state `i` and Pauli string `j`, computed from
/// per-qubit Bloch components.
pub fn sic_pauli_table(n_qubits: usize) -> Result<Vec<Vec<f64>>> {
    check_qubits(n_qubits)?;
    let single: Vec<[f64; 4]> = (0..4).map(sic_components).collect();
    let n_ops = 1usize << (2 * n_qubits);
    Ok((0..n_ops)
        .map(|i| {
            let labels = sic_labels(i, n_qubits);
            (0..n_ops)
                .map(|j| {
                    let w = PauliString::from_index(j, n_qubits);
                    labels.iter().zip(w.factors()).map(|(&l, p)| single[l][p.index()]).product()
                })
                .collect()
        })
        .collect())
}

/// Haar-random unitary of dimension `dim` (QR of a Ginibre matrix with the
/// phases of `R` absorbed).
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random full-rank mixed state `GG†/Tr[GG†]` with Ginibre `G`.
pub fn random_density_matrix<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> DensityMatrix {
    let dim = 1 << n_qubits;
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    DensityMatrix { n_qubits, matrix: m / tr }
}
