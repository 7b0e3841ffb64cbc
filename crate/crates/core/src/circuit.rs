//! Gate-level circuits, per-gate noise, SIC preparation and Pauli measurement.
//!
//! Text format: one gate per line, `NAME target… [angles…]`, e.g. `CZ 0 1` or
//! `U3 0 0.1 0.2 0.3`. An optional `qubits N` line fixes the register size;
//! otherwise it is one more than the largest target. `#` starts a comment.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::error::{invalid, Error, Result};
use crate::qstate::{
    check_qubits, product_state, sic_angles, ComplexMatrix, DensityMatrix, Pauli, PauliString, C64, I, ONE, ZERO,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    CNOT,
    CZ,
    U3 { theta: f64, phi: f64, lambda: f64 },
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::CNOT | GateKind::CZ => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::CNOT => "CNOT",
            GateKind::CZ => "CZ",
            GateKind::U3 { .. } => "U3",
        }
    }

    pub fn adjoint(self) -> GateKind {
        match self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            GateKind::U3 { theta, phi, lambda } => GateKind::U3 { theta: -theta, phi: -lambda, lambda: -phi },
            other => other,
        }
    }

    fn is_diagonal(self) -> bool {
        matches!(self, GateKind::S | GateKind::Sdg | GateKind::Z | GateKind::CZ)
    }

    /// Local matrix; for two-qubit gates the first target is the more
    /// significant factor (the control of CNOT).
    pub fn matrix(self) -> ComplexMatrix {
        let r = |x: f64| C64::new(x, 0.0);
        match self {
            GateKind::H => ComplexMatrix::from_row_slice(
                2,
                2,
                &[r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(FRAC_1_SQRT_2), r(-FRAC_1_SQRT_2)],
            ),
            GateKind::S => ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]),
            GateKind::Sdg => ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -I]),
            GateKind::X => Pauli::X.matrix(),
            GateKind::Y => Pauli::Y.matrix(),
            GateKind::Z => Pauli::Z.matrix(),
            GateKind::CNOT => {
                let mut m = ComplexMatrix::zeros(4, 4);
                m[(0, 0)] = ONE;
                m[(1, 1)] = ONE;
                m[(2, 3)] = ONE;
                m[(3, 2)] = ONE;
                m
            }
            GateKind::CZ => ComplexMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[ONE, ONE, ONE, -ONE])),
            GateKind::U3 { theta, phi, lambda } => u3_matrix(theta, phi, lambda),
        }
    }
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[C64::new(c, 0.0), -C64::from_polar(s, lambda), C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, targets: Vec<usize>) -> Result<Self> {
        if targets.len() != kind.arity() {
            return invalid(format!("{} takes {} target(s), got {}", kind.name(), kind.arity(), targets.len()));
        }
        if targets.len() == 2 && targets[0] == targets[1] {
            return invalid(format!("{} targets must be distinct", kind.name()));
        }
        Ok(Self { kind, targets })
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, targets: vec![q] }
    }

    pub fn single(kind: GateKind, q: usize) -> Self {
        assert_eq!(kind.arity(), 1);
        Self { kind, targets: vec![q] }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::CNOT, vec![control, target]).expect("distinct CNOT targets")
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::new(GateKind::CZ, vec![a, b]).expect("distinct CZ targets")
    }

    pub fn u3(q: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        Self { kind: GateKind::U3 { theta, phi, lambda }, targets: vec![q] }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn arity(&self) -> usize {
        self.targets.len()
    }

    pub fn adjoint(&self) -> Gate {
        Gate { kind: self.kind.adjoint(), targets: self.targets.clone() }
    }

    /// Full `2ⁿ×2ⁿ` matrix of the gate on an `n`-qubit register.
    pub fn full_matrix(&self, n_qubits: usize) -> ComplexMatrix {
        let d = 1 << n_qubits;
        let mut u = ComplexMatrix::identity(d, d);
        apply_left(&mut u, &self.kind.matrix(), &positions(&self.targets, n_qubits));
        u
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind.name())?;
        for t in &self.targets {
            write!(f, " {t}")?;
        }
        if let GateKind::U3 { theta, phi, lambda } = self.kind {
            write!(f, " {theta:?} {phi:?} {lambda:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut c = Self { n_qubits, gates: Vec::with_capacity(gates.len()) };
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new())
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        if let Some(&t) = gate.targets.iter().find(|&&t| t >= self.n_qubits) {
            return invalid(format!("gate {gate} targets qubit {t} on a {}-qubit register", self.n_qubits));
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return invalid(format!(
                "cannot append a {}-qubit circuit to a {}-qubit one",
                other.n_qubits, self.n_qubits
            ));
        }
        self.gates.extend(other.gates.iter().cloned());
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Reversed sequence of adjoint gates.
    pub fn adjoint(&self) -> Circuit {
        Circuit { n_qubits: self.n_qubits, gates: self.gates.iter().rev().map(Gate::adjoint).collect() }
    }

    pub fn unitary(&self) -> ComplexMatrix {
        let d = 1 << self.n_qubits;
        let mut u = ComplexMatrix::identity(d, d);
        for g in &self.gates {
            apply_left(&mut u, &g.kind.matrix(), &positions(&g.targets, self.n_qubits));
        }
        u
    }

    /// CZ ladder `CZ(0,1) … CZ(n−2,n−1)` followed by its mirror image, which
    /// composes to the identity. At three qubits this is the four-CZ target.
    pub fn cz_layer(n_qubits: usize) -> Result<Circuit> {
        if n_qubits < 2 {
            return invalid("cz_layer needs at least two qubits");
        }
        let forward: Vec<Gate> = (0..n_qubits - 1).map(|q| Gate::cz(q, q + 1)).collect();
        let gates = forward.iter().cloned().chain(forward.iter().rev().cloned()).collect();
        Circuit::new(n_qubits, gates)
    }

    pub fn parse(text: &str) -> Result<Circuit> {
        let mut declared = None;
        let mut gates = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { line: line_no, message };
            let mut tok = line.split_whitespace();
            let name = tok.next().unwrap_or("").to_ascii_uppercase();
            let rest: Vec<&str> = tok.collect();
            let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad qubit index {s:?}")));
            let float = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad angle {s:?}")));
            if name == "QUBITS" {
                if rest.len() != 1 || declared.is_some() {
                    return Err(err("expected a single `qubits N` line".into()));
                }
                declared = Some(int(rest[0])?);
                continue;
            }
            let kind = match name.as_str() {
                "H" => GateKind::H,
                "S" => GateKind::S,
                "SDG" | "SDAG" => GateKind::Sdg,
                "X" => GateKind::X,
                "Y" => GateKind::Y,
                "Z" => GateKind::Z,
                "CNOT" | "CX" => GateKind::CNOT,
                "CZ" => GateKind::CZ,
                "U3" | "U" => {
                    if rest.len() != 4 {
                        return Err(err("U3 expects a qubit and three angles".into()));
                    }
                    GateKind::U3 { theta: float(rest[1])?, phi: float(rest[2])?, lambda: float(rest[3])? }
                }
                other => return Err(err(format!("unknown gate {other:?}"))),
            };
            let n_targets = kind.arity();
            let expected = if matches!(kind, GateKind::U3 { .. }) { 4 } else { n_targets };
            if rest.len() != expected {
                return Err(err(format!("{} expects {} argument(s), got {}", kind.name(), expected, rest.len())));
            }
            let targets = rest[..n_targets].iter().map(|s| int(s)).collect::<Result<Vec<_>>>()?;
            let gate = Gate::new(kind, targets).map_err(|e| err(e.to_string()))?;
            gates.push((line_no, gate));
        }
        let max_target = gates.iter().flat_map(|(_, g)| g.targets.iter().copied()).max();
        let n_qubits = match (declared, max_target) {
            (Some(n), _) => n,
            (None, Some(t)) => t + 1,
            (None, None) => {
                return Err(Error::Parse { line: 0, message: "circuit has no gates and no `qubits` line".into() })
            }
        };
        check_qubits(n_qubits).map_err(|e| Error::Parse { line: 0, message: e.to_string() })?;
        let mut c = Circuit { n_qubits, gates: Vec::new() };
        for (line, g) in gates {
            c.push(g).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        }
        Ok(c)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.n_qubits)?;
        for g in &self.gates {
            writeln!(f, "{g}")?;
        }
        Ok(())
    }
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Circuit::parse(s)
    }
}

/// Row-stochastic single-qubit readout matrix: entry `[t][r]` is the
/// probability of reporting `r` when the true outcome is `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutConfusion {
    matrix: [[f64; 2]; 2],
}

impl ReadoutConfusion {
    pub fn new(matrix: [[f64; 2]; 2]) -> Result<Self> {
        for row in &matrix {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return invalid(format!("confusion entries must lie in [0, 1], got {row:?}"));
            }
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return invalid(format!("confusion rows must sum to 1, got {row:?}"));
            }
        }
        Ok(Self { matrix })
    }

    pub fn weak() -> Self {
        Self { matrix: [[0.997, 0.003], [0.005, 0.995]] }
    }

    pub fn strong() -> Self {
        Self { matrix: [[0.97, 0.03], [0.05, 0.95]] }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        self.matrix
    }

    /// Probability that a true outcome `t` is reported flipped.
    pub fn flip_probability(&self, t: usize) -> f64 {
        self.matrix[t][1 - t]
    }

    /// Reported `⟨(−1)^b⟩` is `α(−1)^t + β` for true outcome `t`.
    pub fn alpha_beta(&self) -> (f64, f64) {
        let (e01, e10) = (self.matrix[0][1], self.matrix[1][0]);
        (1.0 - e01 - e10, e10 - e01)
    }
}

/// Gate noise, readout error and preparation rotation error.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Depolarizing strength applied after every gate of the given arity.
    pub gate_depolarizing: BTreeMap<usize, f64>,
    /// Applied identically to every measured qubit.
    pub readout: Option<ReadoutConfusion>,
    /// Standard deviation in degrees of each preparation error angle.
    pub prep_sigma_degrees: f64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn with_depolarizing(mut self, arity: usize, lambda: f64) -> Self {
        self.gate_depolarizing.insert(arity, lambda);
        self
    }

    pub fn with_readout(mut self, readout: ReadoutConfusion) -> Self {
        self.readout = Some(readout);
        self
    }

    pub fn with_prep_sigma(mut self, degrees: f64) -> Self {
        self.prep_sigma_degrees = degrees;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (&arity, &lambda) in &self.gate_depolarizing {
            if !(1..=2).contains(&arity) {
                return invalid(format!("gate arity must be 1 or 2, got {arity}"));
            }
            if !(0.0..=1.0).contains(&lambda) {
                return invalid(format!("depolarizing strength must be in [0, 1], got {lambda}"));
            }
        }
        if let Some(r) = &self.readout {
            ReadoutConfusion::new(r.matrix)?;
        }
        if !(self.prep_sigma_degrees >= 0.0 && self.prep_sigma_degrees.is_finite()) {
            return invalid(format!("prep sigma must be finite and non-negative, got {}", self.prep_sigma_degrees));
        }
        Ok(())
    }

    pub fn depolarizing_for(&self, arity: usize) -> f64 {
        self.gate_depolarizing.get(&arity).copied().unwrap_or(0.0)
    }

    pub fn has_spam(&self) -> bool {
        self.readout.is_some() || self.prep_sigma_degrees > 0.0
    }

    /// Same model with readout and preparation error removed.
    pub fn gate_noise_only(&self) -> NoiseModel {
        NoiseModel { gate_depolarizing: self.gate_depolarizing.clone(), readout: None, prep_sigma_degrees: 0.0 }
    }
}

/// Bit position of qubit `q` inside a basis index.
#[inline]
pub(crate) fn bit_of(q: usize, n_qubits: usize) -> usize {
    n_qubits - 1 - q
}

fn positions(targets: &[usize], n_qubits: usize) -> Vec<usize> {
    targets.iter().map(|&q| bit_of(q, n_qubits)).collect()
}

/// Basis-index offsets of the local basis states, first target most
/// significant.
fn local_offsets(pos: &[usize]) -> Vec<usize> {
    let k = pos.len();
    (0..1usize << k).map(|a| (0..k).filter(|t| (a >> (k - 1 - t)) & 1 == 1).map(|t| 1 << pos[t]).sum()).collect()
}

fn bases(dim: usize, mask: usize) -> impl Iterator<Item = usize> {
    (0..dim).filter(move |b| b & mask == 0)
}

/// `M ← U_local M`.
pub(crate) fn apply_left(m: &mut ComplexMatrix, u: &ComplexMatrix, pos: &[usize]) {
    let offs = local_offsets(pos);
    let mask: usize = pos.iter().map(|p| 1 << p).sum();
    let k = offs.len();
    let mut v = vec![ZERO; k];
    for col in 0..m.ncols() {
        for base in bases(m.nrows(), mask) {
            for a in 0..k {
                v[a] = m[(base | offs[a], col)];
            }
            for b in 0..k {
                let mut acc = ZERO;
                for a in 0..k {
                    acc += u[(b, a)] * v[a];
                }
                m[(base | offs[b], col)] = acc;
            }
        }
    }
}

/// `M ← M U_local†`.
pub(crate) fn apply_right_adjoint(m: &mut ComplexMatrix, u: &ComplexMatrix, pos: &[usize]) {
    let offs = local_offsets(pos);
    let mask: usize = pos.iter().map(|p| 1 << p).sum();
    let k = offs.len();
    let mut v = vec![ZERO; k];
    for base in bases(m.ncols(), mask) {
        for row in 0..m.nrows() {
            for a in 0..k {
                v[a] = m[(row, base | offs[a])];
            }
            for b in 0..k {
                let mut acc = ZERO;
                for a in 0..k {
                    acc += v[a] * u[(b, a)].conj();
                }
                m[(row, base | offs[b])] = acc;
            }
        }
    }
}

/// `ρ ← UρU†` for a gate on an `n`-qubit register.
pub(crate) fn conjugate_by_gate(rho: &mut ComplexMatrix, gate: &Gate, n_qubits: usize) {
    let pos = positions(&gate.targets, n_qubits);
    let u = gate.kind.matrix();
    if gate.kind.is_diagonal() {
        let offs = local_offsets(&pos);
        let mask: usize = pos.iter().map(|p| 1 << p).sum();
        let phase: Vec<C64> = (0..rho.nrows())
            .map(|k| {
                let local = offs.iter().position(|&o| o == k & mask).expect("offset");
                u[(local, local)]
            })
            .collect();
        for c in 0..rho.ncols() {
            let pc = phase[c].conj();
            for r in 0..rho.nrows() {
                rho[(r, c)] *= phase[r] * pc;
            }
        }
    } else {
        apply_left(rho, &u, &pos);
        apply_right_adjoint(rho, &u, &pos);
    }
}

/// `ρ ← (1−λ)ρ + λ Tr_Q(ρ) ⊗ I_Q/2^|Q|` for qubit subset `Q`.
pub(crate) fn depolarize_subset(rho: &mut ComplexMatrix, lambda: f64, qubits: &[usize], n_qubits: usize) {
    if lambda == 0.0 {
        return;
    }
    let pos = positions(qubits, n_qubits);
    let offs = local_offsets(&pos);
    let mask: usize = pos.iter().map(|p| 1 << p).sum();
    let dim = rho.nrows();
    let scale = lambda / offs.len() as f64;
    let mut traces = Vec::new();
    for c in bases(dim, mask) {
        for r in bases(dim, mask) {
            let t: C64 = offs.iter().map(|&o| rho[(r | o, c | o)]).sum();
            traces.push((r, c, t));
        }
    }
    *rho *= C64::new(1.0 - lambda, 0.0);
    for (r, c, t) in traces {
        for &o in &offs {
            rho[(r | o, c | o)] += t * scale;
        }
    }
}

/// Runs the circuit on a raw density matrix in place, attaching the arity's
/// depolarizing channel after every gate.
pub(crate) fn evolve(rho: &mut ComplexMatrix, circ: &Circuit, noise: Option<&NoiseModel>) {
    let n = circ.n_qubits;
    for g in &circ.gates {
        conjugate_by_gate(rho, g, n);
        if let Some(nm) = noise {
            depolarize_subset(rho, nm.depolarizing_for(g.arity()), &g.targets, n);
        }
    }
}

/// Exact density-matrix execution with optional per-gate depolarizing noise.
/// Readout and preparation errors in `noise` are not applied here.
pub fn run_exact(circ: &Circuit, noise: Option<&NoiseModel>, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    if rho0.n_qubits() != circ.n_qubits {
        return invalid(format!("state has {} qubits, circuit has {}", rho0.n_qubits(), circ.n_qubits));
    }
    if let Some(nm) = noise {
        nm.validate()?;
    }
    let mut m = rho0.matrix().clone();
    evolve(&mut m, circ, noise);
    DensityMatrix::from_matrix_unchecked(m)
}

/// The circuit as a channel: every gate's unitary followed by its arity's
/// depolarizing noise. Readout and preparation errors are not included.
pub fn noisy_channel(circ: &Circuit, noise: &NoiseModel) -> Result<Channel> {
    noise.validate()?;
    let n = circ.n_qubits;
    let mut out = Channel::identity(n)?;
    for g in &circ.gates {
        let step = Channel::depolarizing_on(noise.depolarizing_for(g.arity()), &g.targets, n)?
            .compose(&Channel::unitary(&g.full_matrix(n))?)?;
        out = step.compose(&out)?;
    }
    Ok(out)
}

/// Per-qubit U3 error angles `[θ, φ, λ]` in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepError {
    pub angles: Vec<[f64; 3]>,
}

impl PrepError {
    pub fn zero(n_qubits: usize) -> Self {
        Self { angles: vec![[0.0; 3]; n_qubits] }
    }

    pub fn n_qubits(&self) -> usize {
        self.angles.len()
    }
}

/// Draws three i.i.d. `Normal(0, σ)` angles (degrees, converted to radians)
/// per qubit.
pub fn sample_prep_error<R: Rng + ?Sized>(n_qubits: usize, sigma_degrees: f64, rng: &mut R) -> Result<PrepError> {
    if !(sigma_degrees >= 0.0 && sigma_degrees.is_finite()) {
        return invalid(format!("prep sigma must be finite and non-negative, got {sigma_degrees}"));
    }
    if sigma_degrees == 0.0 {
        return Ok(PrepError::zero(n_qubits));
    }
    let normal = Normal::new(0.0, sigma_degrees.to_radians()).expect("positive sigma");
    let angles = (0..n_qubits).map(|_| [normal.sample(rng), normal.sample(rng), normal.sample(rng)]).collect();
    Ok(PrepError { angles })
}

fn sic_labels_checked(index: usize, n_qubits: usize, prep_error: Option<&PrepError>) -> Result<Vec<usize>> {
    check_qubits(n_qubits)?;
    if index >= 1 << (2 * n_qubits) {
        return invalid(format!("SIC index {index} out of range for {n_qubits} qubits"));
    }
    if let Some(e) = prep_error {
        if e.n_qubits() != n_qubits {
            return invalid(format!("prep error covers {} qubits, expected {n_qubits}", e.n_qubits()));
        }
    }
    Ok(crate::qstate::sic_labels(index, n_qubits))
}

/// U3 gates taking `|0…0⟩` to SIC product state `index`, followed by the
/// error rotations when given.
pub fn prepare_sic(index: usize, n_qubits: usize, prep_error: Option<&PrepError>) -> Result<Circuit> {
    let labels = sic_labels_checked(index, n_qubits, prep_error)?;
    let mut gates: Vec<Gate> = labels
        .iter()
        .enumerate()
        .map(|(q, &l)| {
            let (theta, phi) = sic_angles(l);
            Gate::u3(q, theta, phi, 0.0)
        })
        .collect();
    if let Some(e) = prep_error {
        gates.extend(e.angles.iter().enumerate().map(|(q, a)| Gate::u3(q, a[0], a[1], a[2])));
    }
    Circuit::new(n_qubits, gates)
}

/// State produced by [`prepare_sic`], built directly as a product state.
pub fn prepared_sic_state(index: usize, n_qubits: usize, prep_error: Option<&PrepError>) -> Result<ComplexMatrix> {
    let labels = sic_labels_checked(index, n_qubits, prep_error)?;
    let amps: Vec<[C64; 2]> = labels
        .iter()
        .enumerate()
        .map(|(q, &l)| {
            let (theta, phi) = sic_angles(l);
            let mut u = u3_matrix(theta, phi, 0.0);
            if let Some(e) = prep_error {
                let [a, b, c] = e.angles[q];
                u = u3_matrix(a, b, c) * u;
            }
            [u[(0, 0)], u[(1, 0)]]
        })
        .collect();
    Ok(product_state(&amps))
}

/// Gates rotating the eigenbasis of `w` onto the computational basis:
/// X → H, Y → S† then H.
pub fn measurement_basis_change(w: &PauliString) -> Circuit {
    let mut gates = Vec::new();
    for (q, p) in w.factors().iter().enumerate() {
        match p {
            Pauli::X => gates.push(Gate::h(q)),
            Pauli::Y => {
                gates.push(Gate::single(GateKind::Sdg, q));
                gates.push(Gate::h(q));
            }
            _ => {}
        }
    }
    Circuit { n_qubits: w.n_qubits(), gates }
}

/// Outcome histogram indexed by basis state (qubit 0 is the most significant
/// bit).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    n_qubits: usize,
    shots: u64,
    histogram: Vec<u64>,
}

impl ShotResult {
    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn histogram(&self) -> &[u64] {
        &self.histogram
    }

    /// Nonzero counts keyed by bitstring, qubit 0 leftmost.
    pub fn counts(&self) -> BTreeMap<String, u64> {
        self.histogram
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (format!("{:0width$b}", k, width = self.n_qubits), c))
            .collect()
    }

    /// Mean of `(−1)^{popcount(b & mask)}`.
    pub fn parity_mean(&self, mask: usize) -> f64 {
        let signed: i64 = self
            .histogram
            .iter()
            .enumerate()
            .map(|(k, &c)| if (k & mask).count_ones().is_multiple_of(2) { c as i64 } else { -(c as i64) })
            .sum();
        signed as f64 / self.shots as f64
    }
}

/// Samples `shots` outcomes from `probs` and passes every bit through the
/// readout confusion.
pub fn sample_shots<R: Rng + ?Sized>(
    probs: &[f64],
    n_qubits: usize,
    shots: u64,
    readout: Option<&ReadoutConfusion>,
    rng: &mut R,
) -> ShotResult {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let mut histogram = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * acc;
        let mut k = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        if let Some(r) = readout {
            for bit in (0..n_qubits).rev() {
                let t = (k >> bit) & 1;
                if rng.random::<f64>() < r.flip_probability(t) {
                    k ^= 1 << bit;
                }
            }
        }
        histogram[k] += 1;
    }
    ShotResult { n_qubits, shots, histogram }
}

/// Diagonal of `VρV†` where `V` is the basis change for `w`.
pub fn rotated_diagonal(rho: &DensityMatrix, w: &PauliString) -> Result<Vec<f64>> {
    if rho.n_qubits() != w.n_qubits() {
        return invalid(format!("state has {} qubits, Pauli string has {}", rho.n_qubits(), w.n_qubits()));
    }
    let mut m = rho.matrix().clone();
    evolve(&mut m, &measurement_basis_change(w), None);
    Ok((0..m.nrows()).map(|k| m[(k, k)].re).collect())
}

/// Basis-index mask of the non-identity positions of `w`.
pub(crate) fn support_mask(w: &PauliString) -> usize {
    let n = w.n_qubits();
    w.factors().iter().enumerate().filter(|(_, p)| **p != Pauli::I).fold(0, |m, (q, _)| m | (1 << bit_of(q, n)))
}

/// Shot estimate of `Tr[ρW]`: basis change, sampling, per-bit readout flips
/// and parity over the support of `w`. The identity string returns 1.
pub fn measure_pauli_shots<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    w: &PauliString,
    shots: u64,
    readout: Option<&ReadoutConfusion>,
    rng: &mut R,
) -> Result<f64> {
    if shots == 0 {
        return invalid("shots must be at least 1");
    }
    if let Some(r) = readout {
        ReadoutConfusion::new(r.matrix)?;
    }
    if w.is_identity() {
        if rho.n_qubits() != w.n_qubits() {
            return invalid("qubit count mismatch");
        }
        return Ok(1.0);
    }
    let probs = rotated_diagonal(rho, w)?;
    Ok(sample_shots(&probs, rho.n_qubits(), shots, readout, rng).parity_mean(support_mask(w)))
}

/// Applies `I ↦ I, P ↦ αP + βI` on every qubit to a lexicographic vector of
/// Pauli expectations, giving the readout-distorted parity means.
pub fn readout_adjusted(expectations: &[f64], n_qubits: usize, readout: &ReadoutConfusion) -> Vec<f64> {
    let (alpha, beta) = readout.alpha_beta();
    let mut t = expectations.to_vec();
    for q in 0..n_qubits {
        let stride = 1usize << (2 * (n_qubits - 1 - q));
        for base in 0..t.len() {
            if !(base / stride).is_multiple_of(4) {
                continue;
            }
            let id = t[base];
            for k in 1..4 {
                t[base + k * stride] = alpha * t[base + k * stride] + beta * id;
            }
        }
    }
    t
}

/// Outcome distribution when every qubit is measured in the basis given by
/// `setting` (one of X, Y, Z per qubit), reconstructed from the Pauli
/// expectations by a Walsh–Hadamard transform.
pub(crate) fn setting_distribution(expectations: &[f64], setting: &[Pauli]) -> Vec<f64> {
    let n = setting.len();
    let dim = 1usize << n;
    let mut g: Vec<f64> = (0..dim)
        .map(|subset| {
            let idx = (0..n).fold(0, |acc, q| {
                let on = (subset >> bit_of(q, n)) & 1 == 1;
                acc * 4 + if on { setting[q].index() } else { 0 }
            });
            expectations[idx]
        })
        .collect();
    let mut h = 1;
    while h < dim {
        for i in (0..dim).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (g[j], g[j + h]);
                g[j] = a + b;
                g[j + h] = a - b;
            }
        }
        h *= 2;
    }
    g.iter().map(|x| (x / dim as f64).max(0.0)).collect()
}
