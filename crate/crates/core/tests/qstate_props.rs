mod common;

use common::{max_diff, random_matrix};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use zerofid_core::qstate::{
    hs_inner, kron, pauli_basis, random_density_matrix, sic_labels, sic_states, unvec, vec, VectorizedOperator,
};
use zerofid_core::{ComplexMatrix, C64};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hs_inner_equals_vectorized_dot(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(dim, dim, &mut rng);
        let b = random_matrix(dim, dim, &mut rng);
        let direct = hs_inner(&a, &b).unwrap();
        let trace = (a.adjoint() * &b).trace();
        let dot: C64 = (vec(&a).unwrap().entries().adjoint() * vec(&b).unwrap().entries())[(0, 0)];
        prop_assert!((direct - trace).norm() < 1e-12);
        prop_assert!((direct - dot).norm() < 1e-12);
    }

    #[test]
    fn vec_of_product_identity(seed in any::<u64>(), dim in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(dim, dim, &mut rng);
        let b = random_matrix(dim, dim, &mut rng);
        let c = random_matrix(dim, dim, &mut rng);
        let lhs = vec(&(&a * &b * &c)).unwrap().into_entries();
        let rhs = kron(&c.transpose(), &a) * vec(&b).unwrap().into_entries();
        let diff = (lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-12 * (1.0 + dim as f64).powi(3));
    }

    #[test]
    fn unvec_inverts_vec(seed in any::<u64>(), dim in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_matrix(dim, dim, &mut rng);
        let v = vec(&a).unwrap();
        prop_assert_eq!(unvec(&v), a.clone());
        let rebuilt = VectorizedOperator::from_entries(dim, v.into_entries()).unwrap();
        prop_assert_eq!(unvec(&rebuilt), a);
    }

    #[test]
    fn expectations_are_bounded(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(n, &mut rng);
        rho.validate().unwrap();
        for (j, e) in rho.pauli_expectations().iter().enumerate() {
            prop_assert!(e.abs() <= 1.0 + 1e-9);
            if j == 0 {
                prop_assert!((e - 1.0).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn vec_identity_on_random_3x3_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let a = random_matrix(3, 3, &mut rng);
    let b = random_matrix(3, 3, &mut rng);
    let c = random_matrix(3, 3, &mut rng);
    let lhs = unvec(&vec(&(&a * &b * &c)).unwrap());
    let rhs_vec = kron(&c.transpose(), &a) * vec(&b).unwrap().into_entries();
    let rhs = ComplexMatrix::from_column_slice(3, 3, rhs_vec.as_slice());
    assert!(max_diff(&lhs, &rhs) < 1e-12);
}

#[test]
fn pauli_orthogonality_is_exact_up_to_three_qubits() {
    for n in 1..=3 {
        let mats: Vec<ComplexMatrix> = pauli_basis(n).unwrap().iter().map(|p| p.to_matrix()).collect();
        let dim = (1 << n) as f64;
        for (i, a) in mats.iter().enumerate() {
            for (j, b) in mats.iter().enumerate() {
                let t = hs_inner(a, b).unwrap();
                assert_eq!(t, C64::new(if i == j { dim } else { 0.0 }, 0.0));
            }
        }
    }
}

#[test]
fn sic_overlaps_factorize_over_qubits() {
    for n in 1..=3 {
        let states = sic_states(n).unwrap();
        for (i, a) in states.iter().enumerate() {
            a.validate().unwrap();
            for (j, b) in states.iter().enumerate().step_by(5) {
                let overlap = hs_inner(a.matrix(), b.matrix()).unwrap().re;
                let expected: f64 = sic_labels(i, n)
                    .iter()
                    .zip(sic_labels(j, n))
                    .map(|(x, y)| if *x == y { 1.0 } else { 1.0 / 3.0 })
                    .product();
                assert!((overlap - expected).abs() < 1e-12);
            }
        }
    }
}
