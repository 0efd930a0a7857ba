//! Property tests for the structural invariants of the library, checked
//! against independent reference computations.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use multiunit::ame::{ame_check, state_from_unitary};
use multiunit::designs::{builtin_permutation, check_ols, ols_modular, permutation_from_design};
use multiunit::dynmap::map_step;
use multiunit::golden::{fixture_rows, SymbolicMatrix36};
use multiunit::linalg::{haar_unitary, singular_values_desc};
use multiunit::metrics::{dual_defects, quick_metrics, schmidt_spectrum, swap_entanglement};
use multiunit::qecc::{weyl_basis, CodeSpace, ErrorOperator};
use multiunit::{BipartiteOperator, CMat};

fn random_gate(d: usize, seed: u64) -> BipartiteOperator {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BipartiteOperator::new(d, haar_unitary(d * d, &mut rng)).unwrap()
}

fn random_local(d: usize, seed: u64) -> [CMat; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    [0; 4].map(|_| haar_unitary(d, &mut rng))
}

/// Reshuffle written out from the tensor-index definition.
fn reshuffle_ref(u: &BipartiteOperator) -> CMat {
    let d = u.d();
    DMatrix::from_fn(d * d, d * d, |p, s| u.at(p / d, s / d, p % d, s % d))
}

/// Partial transpose written out from the tensor-index definition.
fn partial_transpose_ref(u: &BipartiteOperator) -> CMat {
    let d = u.d();
    DMatrix::from_fn(d * d, d * d, |p, s| u.at(p / d, s % d, s / d, p % d))
}

/// `e_p` from singular values of `U^R` and `(U S)^R`.
fn entangling_power_svd(u: &BipartiteOperator) -> f64 {
    let d4 = (u.d() as f64).powi(4);
    let lin = |m: &CMat| 1.0 - singular_values_desc(m).iter().map(|s| s.powi(4)).sum::<f64>() / d4;
    let e_u = lin(&reshuffle_ref(u));
    let e_us = lin(&reshuffle_ref(&u.times_swap()));
    let e_s = swap_entanglement(u.d());
    (e_u + e_us - e_s) / e_s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn flattenings_match_index_definitions(d in 2usize..=5, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        prop_assert_eq!(u.reshuffle().into_matrix(), reshuffle_ref(&u));
        prop_assert_eq!(u.partial_transpose().into_matrix(), partial_transpose_ref(&u));
    }

    #[test]
    fn flattenings_are_involutions(d in 2usize..=6, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        prop_assert_eq!(&u.reshuffle().reshuffle().into_matrix(), u.matrix());
        prop_assert_eq!(&u.partial_transpose().partial_transpose().into_matrix(), u.matrix());
    }

    #[test]
    fn schmidt_spectrum_sums_to_d_squared(d in 2usize..=6, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        let lambda = schmidt_spectrum(&u);
        let n = (d * d) as f64;
        prop_assert_eq!(lambda.len(), d * d);
        prop_assert!((lambda.iter().sum::<f64>() - n).abs() < 1e-10 * n);
        prop_assert!(lambda.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn gram_route_matches_svd_route(d in 2usize..=5, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        let q = quick_metrics(&u);
        prop_assert!((q.e_p - entangling_power_svd(&u)).abs() < 1e-10);
        prop_assert!((q.e_p + q.delta - 1.0).abs() < 1e-14);
        prop_assert!(q.g_t > -1e-12 && q.g_t < 1.0 + 1e-12);
    }

    #[test]
    fn metrics_are_local_unitary_invariant(d in 2usize..=4, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        let f = random_local(d, seed);
        let v = u.apply_local([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        let (a, b) = (quick_metrics(&u), quick_metrics(&v));
        prop_assert!((a.e_p - b.e_p).abs() < 1e-10);
        prop_assert!((a.e_u - b.e_u).abs() < 1e-10);
        prop_assert!((a.g_t - b.g_t).abs() < 1e-10);
        let mut sa = schmidt_spectrum(&u);
        let mut sb = schmidt_spectrum(&v);
        sa.sort_by(f64::total_cmp);
        sb.sort_by(f64::total_cmp);
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn map_step_returns_a_unitary(d in 2usize..=5, seed in any::<u64>()) {
        let u = random_gate(d, seed);
        let v = map_step(&u).unwrap();
        prop_assert!(v.unitarity_defect() < 1e-10);
    }

    #[test]
    fn two_unitarity_survives_local_unitaries(seed in any::<u64>()) {
        let u = builtin_permutation("P9").unwrap();
        let f = random_local(3, seed);
        let v = u.apply_local([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        prop_assert!(dual_defects(&v).iter().all(|&x| x < 1e-10));
        prop_assert!(ame_check(&state_from_unitary(&v).unwrap(), 1e-10).passed);
    }

    #[test]
    fn weyl_apply_matches_dense_matrix(
        d in 2usize..=4,
        site in 0usize..3,
        alpha in 0usize..4,
        beta in 0usize..4,
        seed in any::<u64>(),
    ) {
        let e = ErrorOperator::new(d, 3, &[(site, alpha, beta)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = d.pow(3);
        let v: Vec<Complex64> = haar_unitary(n, &mut rng).column(0).iter().copied().collect();
        let dense = e.matrix() * nalgebra::DVector::from_vec(v.clone());
        let direct = e.apply(&v);
        for (x, y) in dense.iter().zip(&direct) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn modular_designs_lift_to_two_unitaries() {
    for d in [3, 5, 7] {
        let t = ols_modular(d).unwrap();
        assert!(check_ols(&t).is_empty());
        let u = permutation_from_design(&t);
        assert!(dual_defects(&u).iter().all(|&x| x < 1e-12), "d = {d}");
    }
}

#[test]
fn weyl_basis_counts() {
    // (d^2 - 1) non-identity operators per site
    assert_eq!(weyl_basis(6, 3, 1, &[0, 1, 2]).len(), 105);
    assert_eq!(weyl_basis(3, 3, 1, &[0, 1, 2]).len(), 24);
    assert_eq!(weyl_basis(3, 3, 2, &[0, 1, 2]).len(), 3 * 64);
}

#[test]
fn symbolic_csv_round_trip() {
    let m = fixture_rows();
    let mut buf = Vec::new();
    m.write_csv(&mut buf).unwrap();
    let back = SymbolicMatrix36::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.entries(), m.entries());
    assert_eq!(back.provenance(), m.provenance());
}

#[test]
fn code_space_csv_round_trip() {
    let u = builtin_permutation("P9").unwrap();
    let code = multiunit::qecc::shortened_code(&u).unwrap();
    let mut buf = Vec::new();
    code.write_csv(&mut buf).unwrap();
    let back = CodeSpace::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.dim(), code.dim());
    assert!(back.orthonormality_defect() < 1e-12);
}
