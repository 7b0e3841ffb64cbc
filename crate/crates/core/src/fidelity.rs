//! Process fidelity in Pauli, state-set and observable form, and the
//! zero-fidelity built from SIC preparations and Pauli measurements.
//!
//! Raw values use unnormalized Paulis, so a perfect channel scores `2ⁿ`;
//! `normalized = raw / 2ⁿ`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::Channel;
use crate::circuit::{
    evolve, prepared_sic_state, readout_adjusted, sample_prep_error, sample_shots, setting_distribution, support_mask,
    Circuit, NoiseModel,
};
use crate::error::{invalid, Error, Result};
use crate::qstate::{
    check_qubits, hs_product, pauli_basis, pauli_expectations, sic_states, ComplexMatrix, DensityMatrix, Pauli,
    PauliString, C64,
};
use crate::rng::stream;

/// Largest acceptable condition number of a state set's Gram matrix.
pub const MAX_CONDITION: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityValue {
    pub raw: f64,
    pub normalized: f64,
}

impl FidelityValue {
    pub fn from_raw(raw: f64, n_qubits: usize) -> Self {
        Self { raw, normalized: raw / (1u64 << n_qubits) as f64 }
    }

    pub fn from_normalized(normalized: f64, n_qubits: usize) -> Self {
        Self { raw: normalized * (1u64 << n_qubits) as f64, normalized }
    }
}

/// Preparation states with their Gram matrix `B_ij = Tr[ρᵢ†ρⱼ]`.
#[derive(Debug, Clone)]
pub struct StateSet {
    n_qubits: usize,
    states: Vec<DensityMatrix>,
    gram: ComplexMatrix,
    gram_inverse: ComplexMatrix,
    condition: f64,
}

impl StateSet {
    /// Accepts `4ⁿ` states whose Gram matrix has condition number at most
    /// [`MAX_CONDITION`].
    pub fn new(states: Vec<DensityMatrix>) -> Result<Self> {
        let Some(first) = states.first() else {
            return invalid("state set is empty");
        };
        let n_qubits = first.n_qubits();
        if states.iter().any(|s| s.n_qubits() != n_qubits) {
            return invalid("states in a set must share a qubit count");
        }
        let k = states.len();
        if k != 1 << (2 * n_qubits) {
            return invalid(format!("an informationally complete set needs {} states, got {k}", 1 << (2 * n_qubits)));
        }
        let gram = DMatrix::from_fn(k, k, |i, j| hs_product(states[i].matrix(), states[j].matrix()));
        let sv = gram.clone().singular_values();
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(Error::IllConditionedStateSet { condition });
        }
        let gram_inverse = gram.clone().try_inverse().ok_or(Error::IllConditionedStateSet { condition })?;
        Ok(Self { n_qubits, states, gram, gram_inverse, condition })
    }

    pub fn sic(n_qubits: usize) -> Result<Self> {
        Self::new(sic_states(n_qubits)?)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn gram(&self) -> &ComplexMatrix {
        &self.gram
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }
}

fn check_pair(ideal: &Channel, actual: &Channel) -> Result<usize> {
    if ideal.n_qubits() != actual.n_qubits() {
        return invalid(format!("qubit count mismatch: {} vs {}", ideal.n_qubits(), actual.n_qubits()));
    }
    Ok(ideal.n_qubits())
}

fn check_set(n: usize, s: &StateSet) -> Result<()> {
    if s.n_qubits != n {
        return invalid(format!("state set has {} qubits, channels have {n}", s.n_qubits));
    }
    Ok(())
}

/// `4⁻ⁿ Σᵢ Tr[Λ(σᵢ)†Γ(σᵢ)]` over all Pauli strings.
pub fn process_fidelity_pauli(ideal: &Channel, actual: &Channel) -> Result<FidelityValue> {
    let n = check_pair(ideal, actual)?;
    let mut sum = C64::new(0.0, 0.0);
    for p in pauli_basis(n)? {
        let m = p.to_matrix();
        sum += hs_product(&ideal.apply_operator(&m)?, &actual.apply_operator(&m)?);
    }
    Ok(FidelityValue::from_raw(sum.re / (1u64 << (2 * n)) as f64, n))
}

/// `4⁻ⁿ Σᵢⱼ [B⁻¹]ᵢⱼ Tr[Λ(ρⱼ)Γ(ρᵢ)]`, which evaluates to the normalized
/// fidelity.
#[allow(clippy::needless_range_loop)]
pub fn process_fidelity_states(ideal: &Channel, actual: &Channel, s: &StateSet) -> Result<FidelityValue> {
    let n = check_pair(ideal, actual)?;
    check_set(n, s)?;
    let li: Vec<ComplexMatrix> = s.states.iter().map(|r| ideal.apply_operator(r.matrix())).collect::<Result<_>>()?;
    let gi: Vec<ComplexMatrix> = s.states.iter().map(|r| actual.apply_operator(r.matrix())).collect::<Result<_>>()?;
    let k = s.states.len();
    let mut sum = C64::new(0.0, 0.0);
    for i in 0..k {
        for j in 0..k {
            sum += s.gram_inverse[(i, j)] * hs_product(&li[j], &gi[i]);
        }
    }
    Ok(FidelityValue::from_normalized(sum.re / (1u64 << (2 * n)) as f64, n))
}

/// `4⁻ⁿ Σᵢₗ Cᵢₗ Tr[Γ(ρᵢ)Wₗ]` with `Cᵢₗ = Σⱼ [B⁻¹]ⱼᵢ Tr[Λ(ρⱼ)Wₗ]`, which
/// evaluates to the raw fidelity.
#[allow(clippy::needless_range_loop)]
pub fn process_fidelity_observable(ideal: &Channel, actual: &Channel, s: &StateSet) -> Result<FidelityValue> {
    let n = check_pair(ideal, actual)?;
    check_set(n, s)?;
    let expect = |c: &Channel| -> Result<Vec<Vec<f64>>> {
        s.states.iter().map(|r| Ok(pauli_expectations(&c.apply_operator(r.matrix())?, n))).collect()
    };
    let lam = expect(ideal)?;
    let gam = expect(actual)?;
    let k = s.states.len();
    let mut sum = C64::new(0.0, 0.0);
    for i in 0..k {
        for l in 0..k {
            let c_il: C64 = (0..k).map(|j| s.gram_inverse[(j, i)] * lam[j][l]).sum();
            sum += c_il * gam[i][l];
        }
    }
    Ok(FidelityValue::from_raw(sum.re / (1u64 << (2 * n)) as f64, n))
}

/// `4⁻ⁿ Σᵢⱼ Tr[Λ(ρᵢ)Wⱼ] Tr[Γ(ρᵢ)Wⱼ]` over SIC product states `ρᵢ`.
pub fn zero_fidelity(ideal: &Channel, actual: &Channel) -> Result<FidelityValue> {
    let n = check_pair(ideal, actual)?;
    let states = sic_states(n)?;
    let terms: Vec<f64> = states
        .par_iter()
        .map(|r| {
            let a = pauli_expectations(&ideal.apply_operator(r.matrix())?, n);
            let b = pauli_expectations(&actual.apply_operator(r.matrix())?, n);
            Ok(a.iter().zip(&b).map(|(x, y)| x * y).sum())
        })
        .collect::<Result<_>>()?;
    Ok(FidelityValue::from_raw(terms.iter().sum::<f64>() / (1u64 << (2 * n)) as f64, n))
}

/// How the noisy side's Pauli expectations are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Estimation {
    /// Exact expectations, with readout applied analytically.
    Exact,
    /// Shot sampling, one circuit per (state, Pauli) pair.
    Shots(u64),
}

/// Reference side of a zero-fidelity estimate, always evaluated without
/// noise.
#[derive(Debug, Clone, Copy)]
pub enum IdealReference<'a> {
    Identity,
    Circuit(&'a Circuit),
    Channel(&'a Channel),
}

/// Measurement setting of a Pauli string: identity factors are measured in Z.
fn setting_key(w: &PauliString) -> (usize, Vec<Pauli>) {
    let setting: Vec<Pauli> = w.factors().iter().map(|&p| if p == Pauli::I { Pauli::Z } else { p }).collect();
    let key = setting.iter().fold(0, |acc, p| acc * 3 + p.index() - 1);
    (key, setting)
}

/// Zero-fidelity of `body` run under `noise` against `ideal`.
///
/// SIC state `i` gets its preparation error from stream `("prep", i)` and its
/// shots from stream `("shots", i)` of `seed`, so the estimate is independent
/// of thread scheduling. In shot mode, Pauli strings whose ideal expectation
/// is exactly zero carry no weight and are not sampled.
pub fn estimate_zero_fidelity(
    ideal: IdealReference<'_>,
    body: &Circuit,
    noise: &NoiseModel,
    estimation: Estimation,
    seed: u64,
) -> Result<FidelityValue> {
    let n = body.n_qubits();
    check_qubits(n)?;
    noise.validate()?;
    match ideal {
        IdealReference::Circuit(c) if c.n_qubits() != n => {
            return invalid(format!("ideal circuit has {} qubits, body has {n}", c.n_qubits()))
        }
        IdealReference::Channel(c) if c.n_qubits() != n => {
            return invalid(format!("ideal channel has {} qubits, body has {n}", c.n_qubits()))
        }
        _ => {}
    }
    if estimation == Estimation::Shots(0) {
        return invalid("shots must be at least 1");
    }
    let n_ops = 1usize << (2 * n);
    let paulis: Vec<PauliString> = (0..n_ops).map(|j| PauliString::from_index(j, n)).collect();
    let settings: Vec<(usize, Vec<Pauli>)> = paulis.iter().map(setting_key).collect();
    let masks: Vec<usize> = paulis.iter().map(support_mask).collect();

    let terms: Vec<f64> = (0..n_ops)
        .into_par_iter()
        .map(|i| {
            let clean = prepared_sic_state(i, n, None)?;
            let ideal_exp = match ideal {
                IdealReference::Identity => pauli_expectations(&clean, n),
                IdealReference::Circuit(c) => {
                    let mut m = clean.clone();
                    evolve(&mut m, c, None);
                    pauli_expectations(&m, n)
                }
                IdealReference::Channel(c) => pauli_expectations(&c.apply_operator(&clean)?, n),
            };

            let mut rho = if noise.prep_sigma_degrees > 0.0 {
                let err = sample_prep_error(n, noise.prep_sigma_degrees, &mut stream(seed, "prep", &[i as u64]))?;
                prepared_sic_state(i, n, Some(&err))?
            } else {
                clean
            };
            evolve(&mut rho, body, Some(noise));
            let exps = pauli_expectations(&rho, n);

            let actual = match estimation {
                Estimation::Exact => match &noise.readout {
                    Some(r) => readout_adjusted(&exps, n, r),
                    None => exps,
                },
                Estimation::Shots(shots) => {
                    let mut rng = stream(seed, "shots", &[i as u64]);
                    let mut cache: Vec<Option<Vec<f64>>> = vec![None; 3usize.pow(n as u32)];
                    let mut out = vec![0.0; n_ops];
                    out[0] = 1.0;
                    for j in 1..n_ops {
                        if ideal_exp[j] == 0.0 {
                            continue;
                        }
                        let (key, setting) = &settings[j];
                        let probs = cache[*key].get_or_insert_with(|| setting_distribution(&exps, setting));
                        let res = sample_shots(probs, n, shots, noise.readout.as_ref(), &mut rng);
                        out[j] = res.parity_mean(masks[j]);
                    }
                    out
                }
            };
            Ok(ideal_exp.iter().zip(&actual).map(|(a, b)| a * b).sum())
        })
        .collect::<Result<_>>()?;
    Ok(FidelityValue::from_raw(terms.iter().sum::<f64>() / n_ops as f64, n))
}

/// Shot-based zero-fidelity of `target_circuit` under `noise` against the
/// exact channel `ideal`.
pub fn zero_fidelity_shot_estimate<R: Rng + ?Sized>(
    ideal: &Channel,
    target_circuit: &Circuit,
    noise: &NoiseModel,
    shots: u64,
    rng: &mut R,
) -> Result<FidelityValue> {
    estimate_zero_fidelity(
        IdealReference::Channel(ideal),
        target_circuit,
        noise,
        Estimation::Shots(shots),
        rng.next_u64(),
    )
}
