//! Stabilizer tableaux for Clifford elements on up to three qubits.
//!
//! Row `j` holds the image of `X_j` and row `n + j` the image of `Z_j` under
//! conjugation `P ↦ UPU†`. Bit `q` of a mask refers to qubit `q`.

use std::fmt;

use rand::Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::error::{invalid, Error, Result};
use crate::qstate::{ComplexMatrix, Pauli, PauliString};

/// Largest register supported by the sampler.
pub const MAX_CLIFFORD_QUBITS: usize = 3;

/// Hermitian signed Pauli `(−1)^sign · i^{popcount(x & z)} X^x Z^z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignedPauli {
    pub x: u64,
    pub z: u64,
    pub negative: bool,
}

impl SignedPauli {
    pub fn x(q: usize) -> Self {
        Self { x: 1 << q, z: 0, negative: false }
    }

    pub fn z(q: usize) -> Self {
        Self { x: 0, z: 1 << q, negative: false }
    }

    pub fn identity() -> Self {
        Self { x: 0, z: 0, negative: false }
    }

    fn neg(self) -> Self {
        Self { negative: !self.negative, ..self }
    }

    /// Exponent `e` in the form `i^e X^x Z^z`.
    fn phase_exponent(self) -> u32 {
        (2 * self.negative as u32 + (self.x & self.z).count_ones()) % 4
    }

    pub(crate) fn from_phase(x: u64, z: u64, e: u32) -> Self {
        let rel = (e + 4 - (x & z).count_ones() % 4) % 4;
        debug_assert!(rel.is_multiple_of(2), "product of Hermitian Paulis lost Hermiticity");
        Self { x, z, negative: rel == 2 }
    }

    /// Symplectic form: 1 when the two anticommute.
    pub fn anticommutes(self, other: Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    pub fn to_pauli_string(self, n_qubits: usize) -> (bool, PauliString) {
        let factors = (0..n_qubits)
            .map(|q| match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => Pauli::I,
                (1, 0) => Pauli::X,
                (1, 1) => Pauli::Y,
                _ => Pauli::Z,
            })
            .collect();
        (self.negative, PauliString::new(factors))
    }

    pub fn from_pauli_string(p: &PauliString) -> Self {
        let mut s = Self::identity();
        for (q, f) in p.factors().iter().enumerate() {
            match f {
                Pauli::X => s.x |= 1 << q,
                Pauli::Z => s.z |= 1 << q,
                Pauli::Y => {
                    s.x |= 1 << q;
                    s.z |= 1 << q;
                }
                Pauli::I => {}
            }
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CliffordElement {
    n_qubits: usize,
    rows: Vec<SignedPauli>,
}

impl CliffordElement {
    pub fn identity(n_qubits: usize) -> Self {
        let rows = (0..n_qubits).map(SignedPauli::x).chain((0..n_qubits).map(SignedPauli::z)).collect();
        Self { n_qubits, rows }
    }

    /// Builds an element from the images of `X_0…X_{n−1}, Z_0…Z_{n−1}`,
    /// checking the commutation relations.
    pub fn from_rows(n_qubits: usize, rows: Vec<SignedPauli>) -> Result<Self> {
        if rows.len() != 2 * n_qubits {
            return invalid(format!("tableau needs {} rows, got {}", 2 * n_qubits, rows.len()));
        }
        let limit = 1u64 << n_qubits;
        if rows.iter().any(|r| r.x >= limit || r.z >= limit) {
            return invalid("tableau row acts outside the register");
        }
        for i in 0..2 * n_qubits {
            for j in 0..2 * n_qubits {
                let expected = i % n_qubits == j % n_qubits && i / n_qubits != j / n_qubits;
                if rows[i].anticommutes(rows[j]) != expected {
                    return invalid("tableau is not symplectic");
                }
            }
        }
        Ok(Self { n_qubits, rows })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn rows(&self) -> &[SignedPauli] {
        &self.rows
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n_qubits)
    }

    /// `UPU†`.
    pub fn conjugate(&self, p: SignedPauli) -> SignedPauli {
        // Accumulate i^e X^x Z^z; intermediate products need not be Hermitian.
        let (mut x, mut z) = (0u64, 0u64);
        let mut e = (p.x & p.z).count_ones() + 2 * p.negative as u32;
        let images = (0..self.n_qubits)
            .filter(|q| (p.x >> q) & 1 == 1)
            .map(|q| self.rows[q])
            .chain((0..self.n_qubits).filter(|q| (p.z >> q) & 1 == 1).map(|q| self.rows[self.n_qubits + q]));
        for r in images {
            e += r.phase_exponent() + 2 * (z & r.x).count_ones();
            x ^= r.x;
            z ^= r.z;
        }
        SignedPauli::from_phase(x, z, e % 4)
    }

    /// `self · other`: `other` acts first.
    pub fn compose(&self, other: &CliffordElement) -> Result<CliffordElement> {
        if self.n_qubits != other.n_qubits {
            return invalid(format!("qubit count mismatch: {} vs {}", self.n_qubits, other.n_qubits));
        }
        Ok(Self { n_qubits: self.n_qubits, rows: other.rows.iter().map(|&r| self.conjugate(r)).collect() })
    }

    pub fn inverse(&self) -> CliffordElement {
        let n = self.n_qubits;
        // Symplectic inverse with zero signs: component of X_j in the image
        // expansion is read off with the symplectic form.
        let target = |t: SignedPauli| {
            let mut q = SignedPauli::identity();
            for k in 0..n {
                if t.anticommutes(self.rows[n + k]) {
                    q.x |= 1 << k;
                }
                if t.anticommutes(self.rows[k]) {
                    q.z |= 1 << k;
                }
            }
            q
        };
        let inv0 = Self {
            n_qubits: n,
            rows: (0..n).map(SignedPauli::x).chain((0..n).map(SignedPauli::z)).map(target).collect(),
        };
        let d = inv0.compose(self).expect("same size");
        d.compose(&inv0).expect("same size")
    }

    pub fn from_gate(gate: &Gate, n_qubits: usize) -> Result<CliffordElement> {
        let t = gate.targets();
        if t.iter().any(|&q| q >= n_qubits) {
            return invalid(format!("gate {gate} outside {n_qubits}-qubit register"));
        }
        let mut c = Self::identity(n_qubits);
        let n = n_qubits;
        let y = |q: usize| SignedPauli { x: 1 << q, z: 1 << q, negative: false };
        match gate.kind() {
            GateKind::H => {
                c.rows[t[0]] = SignedPauli::z(t[0]);
                c.rows[n + t[0]] = SignedPauli::x(t[0]);
            }
            GateKind::S => c.rows[t[0]] = y(t[0]),
            GateKind::Sdg => c.rows[t[0]] = y(t[0]).neg(),
            GateKind::X => c.rows[n + t[0]] = SignedPauli::z(t[0]).neg(),
            GateKind::Y => {
                c.rows[t[0]] = SignedPauli::x(t[0]).neg();
                c.rows[n + t[0]] = SignedPauli::z(t[0]).neg();
            }
            GateKind::Z => c.rows[t[0]] = SignedPauli::x(t[0]).neg(),
            GateKind::CNOT => {
                let (ctl, tgt) = (t[0], t[1]);
                c.rows[ctl] = SignedPauli { x: (1 << ctl) | (1 << tgt), z: 0, negative: false };
                c.rows[n + tgt] = SignedPauli { x: 0, z: (1 << ctl) | (1 << tgt), negative: false };
            }
            GateKind::CZ => {
                let (a, b) = (t[0], t[1]);
                c.rows[a] = SignedPauli { x: 1 << a, z: 1 << b, negative: false };
                c.rows[b] = SignedPauli { x: 1 << b, z: 1 << a, negative: false };
            }
            GateKind::U3 { .. } => return Err(Error::Unsupported("U3 is not a Clifford gate".into())),
        }
        Ok(c)
    }

    /// Tableau of a circuit made of Clifford gates.
    pub fn from_circuit(circuit: &Circuit) -> Result<CliffordElement> {
        let n = circuit.n_qubits();
        if n > 64 {
            return Err(Error::Unsupported("tableau masks hold at most 64 qubits".into()));
        }
        let mut c = Self::identity(n);
        for g in circuit.gates() {
            c = Self::from_gate(g, n)?.compose(&c)?;
        }
        Ok(c)
    }

    /// Uniformly random element: images of `X_k`, `Z_k` are drawn by rejection
    /// so each symplectic basis appears once, then signs are uniform.
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<CliffordElement> {
        if !(1..=MAX_CLIFFORD_QUBITS).contains(&n_qubits) {
            return Err(Error::Unsupported(format!(
                "Clifford sampling supports 1 to {MAX_CLIFFORD_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let n = n_qubits;
        let full = (1u64 << n) - 1;
        let mut chosen: Vec<SignedPauli> = Vec::with_capacity(2 * n);
        let mut xs = Vec::with_capacity(n);
        let mut zs = Vec::with_capacity(n);
        let draw = |rng: &mut R| {
            let bits: u64 = rng.random();
            SignedPauli { x: bits & full, z: (bits >> n) & full, negative: false }
        };
        for _ in 0..n {
            let a = loop {
                let p = draw(rng);
                if (p.x | p.z) != 0 && chosen.iter().all(|c| !c.anticommutes(p)) {
                    break p;
                }
            };
            let b = loop {
                let p = draw(rng);
                if p.anticommutes(a) && chosen.iter().all(|c| !c.anticommutes(p)) {
                    break p;
                }
            };
            chosen.push(a);
            chosen.push(b);
            xs.push(a);
            zs.push(b);
        }
        let signs: u64 = rng.random();
        let rows = xs
            .into_iter()
            .chain(zs)
            .enumerate()
            .map(|(i, p)| SignedPauli { negative: (signs >> i) & 1 == 1, ..p })
            .collect();
        Ok(Self { n_qubits: n, rows })
    }

    /// Gate sequence over {H, S, CNOT} and Paulis realizing the element up to
    /// global phase.
    pub fn to_circuit(&self) -> Circuit {
        let n = self.n_qubits;
        let mut work = self.clone();
        let mut applied: Vec<Gate> = Vec::new();
        let mut apply = |work: &mut CliffordElement, g: Gate| {
            *work = CliffordElement::from_gate(&g, n).expect("Clifford gate").compose(work).expect("same size");
            applied.push(g);
        };

        for k in 0..n {
            // Make the image of X_k a pure X-type string.
            let row = work.rows[k];
            for j in k..n {
                match ((row.x >> j) & 1, (row.z >> j) & 1) {
                    (1, 1) => apply(&mut work, Gate::single(GateKind::S, j)),
                    (0, 1) => apply(&mut work, Gate::h(j)),
                    _ => {}
                }
            }
            let row = work.rows[k];
            if (row.x >> k) & 1 == 0 {
                let j0 = row.x.trailing_zeros() as usize;
                apply(&mut work, Gate::cnot(k, j0));
                apply(&mut work, Gate::cnot(j0, k));
                apply(&mut work, Gate::cnot(k, j0));
            }
            let row = work.rows[k];
            for j in (k + 1)..n {
                if (row.x >> j) & 1 == 1 {
                    apply(&mut work, Gate::cnot(k, j));
                }
            }

            let zrow = work.rows[n + k];
            if zrow.x != 0 || zrow.z != 1 << k {
                apply(&mut work, Gate::h(k));
                let zrow = work.rows[n + k];
                for j in k..n {
                    match ((zrow.x >> j) & 1, (zrow.z >> j) & 1) {
                        (1, 1) => apply(&mut work, Gate::single(GateKind::S, j)),
                        (0, 1) => apply(&mut work, Gate::h(j)),
                        _ => {}
                    }
                }
                let zrow = work.rows[n + k];
                for j in (k + 1)..n {
                    if (zrow.x >> j) & 1 == 1 {
                        apply(&mut work, Gate::cnot(k, j));
                    }
                }
                apply(&mut work, Gate::h(k));
            }
        }
        for k in 0..n {
            if work.rows[k].negative {
                apply(&mut work, Gate::single(GateKind::Z, k));
            }
            if work.rows[n + k].negative {
                apply(&mut work, Gate::single(GateKind::X, k));
            }
        }
        debug_assert!(work.is_identity(), "synthesis did not reach the identity");

        let mut gates = Vec::with_capacity(applied.len());
        for g in applied.iter().rev() {
            if g.kind() == GateKind::S {
                let q = g.targets()[0];
                gates.push(Gate::single(GateKind::S, q));
                gates.push(Gate::single(GateKind::Z, q));
            } else {
                gates.push(g.adjoint());
            }
        }
        Circuit::new(n, gates).expect("targets inside register")
    }

    pub fn to_unitary(&self) -> ComplexMatrix {
        self.to_circuit().unitary()
    }
}

impl fmt::Display for CliffordElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n_qubits;
        for (i, r) in self.rows.iter().enumerate() {
            let (neg, p) = r.to_pauli_string(n);
            let label = if i < n { format!("X{i}") } else { format!("Z{}", i - n) };
            writeln!(f, "{label} -> {}{p}", if neg { "-" } else { "+" })?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn commutation_of_single_qubit_paulis() {
        let x = SignedPauli::x(0);
        let z = SignedPauli::z(0);
        let y = SignedPauli { x: 1, z: 1, negative: false };
        assert!(x.anticommutes(z) && y.anticommutes(x) && y.anticommutes(z));
        assert!(!x.anticommutes(x));
        assert!(!SignedPauli::x(0).anticommutes(SignedPauli::z(1)));
    }

    #[test]
    fn hadamard_swaps_x_and_z() {
        let h = CliffordElement::from_gate(&Gate::h(0), 1).unwrap();
        assert_eq!(h.conjugate(SignedPauli::x(0)), SignedPauli::z(0));
        assert_eq!(h.conjugate(SignedPauli::z(0)), SignedPauli::x(0));
        let y = SignedPauli { x: 1, z: 1, negative: false };
        assert_eq!(h.conjugate(y), y.neg());
    }

    #[test]
    fn identity_has_empty_circuit() {
        assert!(CliffordElement::identity(3).to_circuit().is_empty());
    }

    #[test]
    fn inverse_composes_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=3 {
            for _ in 0..50 {
                let c = CliffordElement::random(n, &mut rng).unwrap();
                assert!(c.inverse().compose(&c).unwrap().is_identity());
                assert!(c.compose(&c.inverse()).unwrap().is_identity());
            }
        }
    }

    #[test]
    fn synthesized_circuit_reproduces_tableau() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=3 {
            for _ in 0..50 {
                let c = CliffordElement::random(n, &mut rng).unwrap();
                let back = CliffordElement::from_circuit(&c.to_circuit()).unwrap();
                assert_eq!(back, c);
            }
        }
    }

    #[test]
    fn sampler_rejects_large_registers() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(CliffordElement::random(4, &mut rng), Err(Error::Unsupported(_))));
        assert!(matches!(CliffordElement::random(0, &mut rng), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_clifford_circuit_rejected() {
        let c = Circuit::new(1, vec![Gate::u3(0, 0.1, 0.0, 0.0)]).unwrap();
        assert!(matches!(CliffordElement::from_circuit(&c), Err(Error::Unsupported(_))));
    }
}
