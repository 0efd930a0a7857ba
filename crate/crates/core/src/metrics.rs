//! Operator entanglement, entangling power and gate typicality of bipartite
//! unitaries, computed from the operator Schmidt spectrum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gram_defect, singular_values_desc, CMat};
use crate::tensor::BipartiteOperator;

/// Entanglement data of a gate `U`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateMetrics {
    /// Squared singular values of `U^R`, descending.
    pub lambda: Vec<f64>,
    #[serde(rename = "E_U")]
    pub e_u: f64,
    #[serde(rename = "E_US")]
    pub e_us: f64,
    pub e_p: f64,
    pub g_t: f64,
    /// `1 - e_p`, evaluated without cancellation (see [`two_unitarity_defect`]).
    pub delta: f64,
    /// `‖U^† U - I‖_F` of the input.
    pub unitarity_defect: f64,
}

/// Metrics without the Schmidt spectrum; cheap enough to evaluate every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuickMetrics {
    pub e_u: f64,
    pub e_us: f64,
    pub e_p: f64,
    pub g_t: f64,
    pub delta: f64,
}

/// `E(S) = 1 - 1/d^2`.
pub fn swap_entanglement(d: usize) -> f64 {
    1.0 - 1.0 / (d * d) as f64
}

/// `λ_j = σ_j(U^R)^2` in descending order. Computes for any input.
pub fn schmidt_spectrum(u: &BipartiteOperator) -> Vec<f64> {
    singular_values_desc(u.reshuffle().matrix())
        .into_iter()
        .map(|s| s * s)
        .collect()
}

/// Like [`schmidt_spectrum`], but refuses inputs that are not unitary within `tol`.
pub fn schmidt_spectrum_checked(u: &BipartiteOperator, tol: f64) -> Result<Vec<f64>> {
    let defect = u.unitarity_defect();
    if defect > tol {
        return Err(Error::NonUnitaryInput { defect });
    }
    Ok(schmidt_spectrum(u))
}

fn linear_entropy(lambda: &[f64], d: usize) -> f64 {
    let d4 = (d * d * d * d) as f64;
    1.0 - lambda.iter().map(|l| l * l).sum::<f64>() / d4
}

/// `E(U) = 1 - Σ λ_j^2 / d^4`.
pub fn operator_entanglement(u: &BipartiteOperator) -> f64 {
    linear_entropy(&schmidt_spectrum(u), u.d())
}

/// `e_p = (E(U) + E(US) - E(S)) / E(S)`.
pub fn entangling_power(u: &BipartiteOperator) -> f64 {
    quick_metrics(u).e_p
}

/// `g_t = (E(U) - E(US) + E(S)) / (2 E(S))`.
pub fn gate_typicality(u: &BipartiteOperator) -> f64 {
    quick_metrics(u).g_t
}

/// `Δ = 1 - e_p`. Zero iff `U` is 2-unitary.
pub fn two_unitarity_defect(u: &BipartiteOperator) -> f64 {
    quick_metrics(u).delta
}

/// `‖R^† R - I‖_F^2` and `‖R^† R‖_F^2 = Σ λ^2` for `R` the reshuffle.
fn gram_terms(r: &CMat) -> (f64, f64) {
    let g = r.adjoint() * r;
    let full = g.norm_squared();
    let mut off = 0.0;
    for (idx, z) in g.iter().enumerate() {
        let (i, j) = (idx % g.nrows(), idx / g.nrows());
        let w = if i == j { z - 1.0 } else { *z };
        off += w.norm_sqr();
    }
    (off, full)
}

/// Entangling power, gate typicality and `Δ` from Gram matrices of `U^R` and
/// `(US)^R`, without an SVD.
///
/// `Δ` is assembled from
/// `‖R^†R - I‖² + ‖R'^†R' - I‖² + 4(‖U‖² - d²)`, divided by `d²(d²-1)`,
/// which equals `1 - e_p` but keeps full relative accuracy as `Δ -> 0`.
pub fn quick_metrics(u: &BipartiteOperator) -> QuickMetrics {
    let d = u.d();
    let n = d * d;
    let r = u.reshuffle();
    let rs = u.times_swap().reshuffle();
    let (off, sum_sq) = gram_terms(r.matrix());
    let (off_s, sum_sq_s) = gram_terms(rs.matrix());
    // ‖U‖² - d², accumulated per row so that a unitary input contributes ~0
    let m = u.matrix();
    let norm_excess: f64 = (0..n)
        .map(|p| (0..n).map(|s| m[(p, s)].norm_sqr()).sum::<f64>() - 1.0)
        .sum();
    let nf = n as f64;
    let d4 = nf * nf;
    let e_u = 1.0 - sum_sq / d4;
    let e_us = 1.0 - sum_sq_s / d4;
    let e_s = swap_entanglement(d);
    // the norm term may round below zero on exact 2-unitaries
    let delta = ((off + off_s + 4.0 * norm_excess) / (nf * (nf - 1.0))).max(0.0);
    QuickMetrics {
        e_u,
        e_us,
        e_p: 1.0 - delta,
        g_t: (e_u - e_us + e_s) / (2.0 * e_s),
        delta,
    }
}

/// All metrics of a gate, including its Schmidt spectrum.
pub fn gate_metrics(u: &BipartiteOperator) -> GateMetrics {
    let q = quick_metrics(u);
    let lambda = schmidt_spectrum(u);
    GateMetrics {
        lambda,
        e_u: q.e_u,
        e_us: q.e_us,
        e_p: q.e_p,
        g_t: q.g_t,
        delta: q.delta,
        unitarity_defect: gram_defect(u.matrix()),
    }
}

/// True iff `U`, `U^R` and `U^Γ` all have unitarity defect at most `tol`.
pub fn is_two_unitary(u: &BipartiteOperator, tol: f64) -> bool {
    u.is_unitary(tol) && u.reshuffle().is_unitary(tol) && u.partial_transpose().is_unitary(tol)
}

/// Default tolerance for 2-unitarity judgements made from `Δ`.
pub const DELTA_TOL: f64 = 1e-12;

/// Unitarity defects of `U`, `U^R`, `U^Γ`.
pub fn dual_defects(u: &BipartiteOperator) -> [f64; 3] {
    [
        u.unitarity_defect(),
        u.reshuffle().unitarity_defect(),
        u.partial_transpose().unitarity_defect(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{builtin_permutation, ols_modular, permutation_from_design};
    use crate::linalg::{c, haar_unitary};
    use num_rational::Ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Exact entangling power of a permutation gate from integer counts: for a
    /// 0/1 matrix, `U^R` is 0/1 too and `Σ λ² = ‖R^T R‖_F²` is an integer.
    fn exact_ep_of_permutation(u: &BipartiteOperator) -> Ratio<i64> {
        let int_sum_sq = |m: &CMat| -> i64 {
            let n = m.nrows();
            let a: Vec<Vec<i64>> = (0..n).map(|p| (0..n).map(|s| m[(p, s)].re.round() as i64).collect()).collect();
            let mut total = 0;
            for x in 0..n {
                for y in 0..n {
                    let g: i64 = (0..n).map(|p| a[p][x] * a[p][y]).sum();
                    total += g * g;
                }
            }
            total
        };
        let d = u.d() as i64;
        let d4 = d.pow(4);
        let e_u = Ratio::new(d4 - int_sum_sq(u.reshuffle().matrix()), d4);
        let e_us = Ratio::new(d4 - int_sum_sq(u.times_swap().reshuffle().matrix()), d4);
        let e_s = Ratio::new(d * d - 1, d * d);
        (e_u + e_us - e_s) / e_s
    }

    fn random_unitary(d: usize, seed: u64) -> BipartiteOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BipartiteOperator::new(d, haar_unitary(d * d, &mut rng)).unwrap()
    }

    #[test]
    fn reference_entangling_powers() {
        let p9 = builtin_permutation("P9").unwrap();
        let p36 = builtin_permutation("P36").unwrap();
        let ps = builtin_permutation("Ps").unwrap();
        assert_eq!(exact_ep_of_permutation(&p9), Ratio::from_integer(1));
        assert_eq!(exact_ep_of_permutation(&p36), Ratio::new(314, 315));
        assert_eq!(exact_ep_of_permutation(&ps), Ratio::new(104, 105));
        assert!((entangling_power(&p9) - 1.0).abs() < 1e-12);
        assert!((entangling_power(&p36) - 314.0 / 315.0).abs() < 1e-12);
        assert!((entangling_power(&ps) - 104.0 / 105.0).abs() < 1e-12);
        assert!((two_unitarity_defect(&p36) - 1.0 / 315.0).abs() < 1e-15);
        assert!(two_unitarity_defect(&p9) <= 1e-12);
    }

    #[test]
    fn swap_and_identity() {
        for d in 2..=6 {
            let s = BipartiteOperator::swap(d);
            let id = BipartiteOperator::identity(d);
            assert!(schmidt_spectrum(&s).iter().all(|l| (l - 1.0).abs() < 1e-12));
            let li = schmidt_spectrum(&id);
            assert!((li[0] - (d * d) as f64).abs() < 1e-12);
            assert!(li[1..].iter().all(|l| l.abs() < 1e-12));
            assert!((operator_entanglement(&s) - swap_entanglement(d)).abs() < 1e-12);
            assert!(operator_entanglement(&id).abs() < 1e-12);
            assert!(entangling_power(&s).abs() < 1e-12);
            assert!(entangling_power(&id).abs() < 1e-12);
            assert!((gate_typicality(&s) - 1.0).abs() < 1e-12);
            assert!(gate_typicality(&id).abs() < 1e-12);
            assert!((two_unitarity_defect(&id) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn p9_spectrum_and_typicality() {
        let p9 = permutation_from_design(&ols_modular(3).unwrap());
        let m = gate_metrics(&p9);
        assert!(m.lambda.iter().all(|l| (l - 1.0).abs() < 1e-12));
        assert!((m.e_u - 8.0 / 9.0).abs() < 1e-12);
        assert!((m.g_t - 0.5).abs() < 1e-12);
        assert!((m.e_p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_delta_matches_definition() {
        for d in 2..=5 {
            let u = random_unitary(d, 40 + d as u64);
            let q = quick_metrics(&u);
            let e_s = swap_entanglement(d);
            let e_u = operator_entanglement(&u);
            let e_us = operator_entanglement(&u.times_swap());
            let ep = (e_u + e_us - e_s) / e_s;
            assert!((q.e_p - ep).abs() < 1e-12);
            assert!((q.e_u - e_u).abs() < 1e-12);
            assert!((q.e_us - e_us).abs() < 1e-12);
            assert!((q.g_t - (e_u - e_us + e_s) / (2.0 * e_s)).abs() < 1e-12);
        }
    }

    #[test]
    fn schmidt_sum_is_d_squared() {
        for d in 2..=6 {
            let u = random_unitary(d, d as u64);
            let s: f64 = schmidt_spectrum(&u).iter().sum();
            assert!((s - (d * d) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn checked_spectrum_rejects_non_unitary() {
        let two = BipartiteOperator::new(2, CMat::identity(4, 4) * c(2.0, 0.0)).unwrap();
        assert!(matches!(
            schmidt_spectrum_checked(&two, 1e-10),
            Err(Error::NonUnitaryInput { .. })
        ));
        assert_eq!(schmidt_spectrum(&two).len(), 4);
    }

    #[test]
    fn delta_zero_iff_dual_defects_zero() {
        let tol = 1e-10;
        let mut cases: Vec<BipartiteOperator> = (0..50)
            .map(|s| random_unitary(2 + (s % 2) as usize, 1000 + s))
            .collect();
        cases.push(builtin_permutation("P9").unwrap());
        cases.push(builtin_permutation("P36").unwrap());
        for u in &cases {
            let by_delta = two_unitarity_defect(u) <= tol;
            let [_, r, g] = dual_defects(u);
            assert_eq!(by_delta, r <= tol && g <= tol);
        }
        assert!(two_unitarity_defect(&cases[50]) <= tol);
        assert!(two_unitarity_defect(&cases[51]) > tol);
    }

    #[test]
    fn local_invariance_of_p9() {
        let p9 = builtin_permutation("P9").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let f: Vec<CMat> = (0..4).map(|_| haar_unitary(3, &mut rng)).collect();
            let v = p9.apply_local([&f[0], &f[1], &f[2], &f[3]]).unwrap();
            assert!((entangling_power(&v) - 1.0).abs() < 1e-12);
        }
    }
}
