mod common;

use std::collections::{HashMap, HashSet, VecDeque};

use common::equal_up_to_phase;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zerofid_core::circuit::{Gate, GateKind};
use zerofid_core::fidelity::{zero_fidelity, Estimation};
use zerofid_core::rbfold::{
    fit_decay, fold_circuit, folding_experiment, interleaved_gate_fidelity, rb_experiment, rb_sequence,
    sequence_zero_fidelity, CliffordElement, SignedPauli,
};
use zerofid_core::{Channel, Circuit, NoiseModel, ReadoutConfusion};

fn generators(n: usize) -> Vec<CliffordElement> {
    let mut gates = Vec::new();
    for q in 0..n {
        gates.push(Gate::h(q));
        gates.push(Gate::single(GateKind::S, q));
    }
    for a in 0..n {
        for b in 0..n {
            if a != b {
                gates.push(Gate::cnot(a, b));
            }
        }
    }
    gates.iter().map(|g| CliffordElement::from_gate(g, n).unwrap()).collect()
}

fn group_by_bfs(n: usize) -> HashSet<Vec<SignedPauli>> {
    let gens = generators(n);
    let start = CliffordElement::identity(n);
    let mut seen = HashSet::from([start.rows().to_vec()]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for g in &gens {
            let next = g.compose(&c).unwrap();
            if seen.insert(next.rows().to_vec()) {
                queue.push_back(next);
            }
        }
    }
    seen
}

#[test]
fn group_orders() {
    assert_eq!(group_by_bfs(1).len(), 24);
    assert_eq!(group_by_bfs(2).len(), 11520);
}

#[test]
fn one_qubit_sampler_is_uniform() {
    let elements: Vec<_> = group_by_bfs(1).into_iter().collect();
    let index: HashMap<_, _> = elements.iter().enumerate().map(|(i, r)| (r.clone(), i)).collect();
    let draws = 24 * 10_000;
    let mut counts = [0u32; 24];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..draws {
        let c = CliffordElement::random(1, &mut rng).unwrap();
        counts[index[c.rows()]] += 1;
    }
    let expected = draws as f64 / 24.0;
    let sigma = (expected * (1.0 - 1.0 / 24.0)).sqrt();
    for (i, &k) in counts.iter().enumerate() {
        assert!((k as f64 - expected).abs() < 5.0 * sigma, "element {i}: {k}");
    }
}

#[test]
fn two_qubit_samples_land_in_the_group() {
    let group = group_by_bfs(2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let c = CliffordElement::random(2, &mut rng).unwrap();
        assert!(group.contains(c.rows()));
    }
}

#[test]
fn closure_under_composition_and_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..10_000 {
        let n = 1 + i % 3;
        let a = CliffordElement::random(n, &mut rng).unwrap();
        let b = CliffordElement::random(n, &mut rng).unwrap();
        let ab = a.compose(&b).unwrap();
        CliffordElement::from_rows(n, ab.rows().to_vec()).unwrap();
        assert!(ab.compose(&ab.inverse()).unwrap().is_identity());
        assert!(ab.inverse().compose(&ab).unwrap().is_identity());
    }
}

#[test]
fn composition_matches_unitaries() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..500 {
        let n = 1 + i % 3;
        let a = CliffordElement::random(n, &mut rng).unwrap();
        let b = CliffordElement::random(n, &mut rng).unwrap();
        let lhs = a.compose(&b).unwrap().to_unitary();
        let rhs = a.to_unitary() * b.to_unitary();
        assert!(equal_up_to_phase(&lhs, &rhs, 1e-9), "case {i}");
        let synth = CliffordElement::from_circuit(&a.to_circuit()).unwrap();
        assert_eq!(synth, a);
    }
}

#[test]
fn hadamard_tableau() {
    let h = CliffordElement::from_gate(&Gate::h(0), 1).unwrap();
    assert_eq!(h.rows(), &[SignedPauli::z(0), SignedPauli::x(0)]);
    let y = SignedPauli { x: 1, z: 1, negative: false };
    assert_eq!(h.conjugate(y), SignedPauli { x: 1, z: 1, negative: true });
    assert!(CliffordElement::from_circuit(&Circuit::new(1, vec![Gate::u3(0, 0.1, 0.2, 0.3)]).unwrap()).is_err());
}

fn channel_of(circuit: &Circuit, noise: &NoiseModel) -> Channel {
    let n = circuit.n_qubits();
    let mut out = Channel::identity(n).unwrap();
    for g in circuit.gates() {
        let u = Channel::unitary(&g.full_matrix(n)).unwrap();
        let dep = Channel::depolarizing_on(noise.depolarizing_for(g.arity()), g.targets(), n).unwrap();
        out = dep.compose(&u.compose(&out).unwrap()).unwrap();
    }
    out
}

#[test]
fn sequence_fidelity_matches_composed_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = NoiseModel::noiseless().with_depolarizing(1, 0.01).with_depolarizing(2, 0.03);
    for n in 1..=2 {
        let seq = rb_sequence(n, 2, &mut rng, None).unwrap();
        let oracle = zero_fidelity(&Channel::identity(n).unwrap(), &channel_of(&seq.to_circuit(), &noise)).unwrap();
        let f = sequence_zero_fidelity(&seq, &noise, Estimation::Exact, &mut rng).unwrap();
        assert!((f - oracle.normalized).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fit_recovers_depolarizing_power_decay(lambda in 0.001f64..0.2, n in 1usize..3) {
        let dep = Channel::depolarizing(lambda, n).unwrap();
        let id = Channel::identity(n).unwrap();
        let points: Vec<(f64, f64)> = [1usize, 2, 4, 8, 16, 32]
            .iter()
            .map(|&m| (m as f64, zero_fidelity(&id, &dep.power(m)).unwrap().normalized))
            .collect();
        let fit = fit_decay(&points, n).unwrap();
        prop_assert!((fit.p - (1.0 - lambda)).abs() < 1e-7, "{:?}", fit);
        let d = (1 << n) as f64;
        prop_assert!((fit.b0 - 1.0 / d).abs() < 1e-5);
        prop_assert!((fit.a0 - (1.0 - 1.0 / d)).abs() < 1e-5);
    }
}

#[test]
fn fit_rejects_degenerate_input() {
    assert!(fit_decay(&[(1.0, 0.9), (2.0, 0.8)], 1).is_err());
    assert!(fit_decay(&[(1.0, 0.9), (2.0, 0.9), (3.0, 0.9)], 1).is_err());
}

#[test]
fn interleaved_estimate_is_one_when_curves_match() {
    let pts: Vec<(f64, f64)> = (1..8).map(|m| (m as f64, 0.75 * 0.97f64.powi(m) + 0.25)).collect();
    let fit = fit_decay(&pts, 2).unwrap();
    assert!((interleaved_gate_fidelity(&fit, &fit, 2).unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn noiseless_fold_and_rb_are_flat() {
    let target = Circuit::cz_layer(3).unwrap();
    let noiseless = NoiseModel::noiseless();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for p in folding_experiment(&target, &[0, 1, 2, 3], &noiseless, Estimation::Exact, 2, &mut rng).unwrap() {
        assert!((p.mean - 1.0).abs() < 1e-10);
    }
    for p in rb_experiment(2, &[1, 5], 3, &noiseless, Estimation::Exact, None, &mut rng).unwrap() {
        assert!((p.mean - 1.0).abs() < 1e-10);
    }
    assert_eq!(fold_circuit(&target, 3).len(), 4 * target.len());
}

#[test]
fn fold_decay_matches_exact_channel_powers() {
    let target = Circuit::cz_layer(2).unwrap();
    let noise = NoiseModel::noiseless().with_depolarizing(2, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let points = folding_experiment(&target, &[0, 1, 2], &noise, Estimation::Exact, 1, &mut rng).unwrap();
    for p in &points {
        let folded = fold_circuit(&target, p.m);
        let ideal = channel_of(&folded, &NoiseModel::noiseless());
        let oracle = zero_fidelity(&ideal, &channel_of(&folded, &noise)).unwrap();
        assert!((p.mean - oracle.normalized).abs() < 1e-10);
    }
}

#[test]
fn rb_decay_is_insensitive_to_readout_error() {
    let gate = NoiseModel::noiseless().with_depolarizing(1, 0.002).with_depolarizing(2, 0.02);
    let spam = gate.clone().with_readout(ReadoutConfusion::weak());
    let grid = [1, 3, 6, 10, 15, 22];
    let fit = |noise: &NoiseModel| {
        let pts =
            rb_experiment(2, &grid, 10, noise, Estimation::Exact, None, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let xy: Vec<(f64, f64)> = pts.iter().map(|p| (p.m as f64, p.mean)).collect();
        fit_decay(&xy, 2).unwrap()
    };
    let (a, b) = (fit(&gate), fit(&spam));
    assert!((a.p - b.p).abs() < 0.005, "{a:?} vs {b:?}");
    assert!(b.a0 < a.a0);
}
