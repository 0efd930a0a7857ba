//! Local-unitary canonicalisation of 2-unitary matrices.
//!
//! A 2-unitary found by the search sits in an arbitrary local frame
//! `(uA ⊗ uB) U (uC ⊗ uD)`, where its support looks dense. This module looks
//! for local unitaries that make the rows of all flattenings as close as
//! possible to Schmidt rank `r` (two for the order-36 solutions), then aligns
//! each leg so that the rank-`r` supports become coordinate subspaces. In the
//! resulting frame the sparse block structure of the matrix is visible.
//!
//! The concentration objective is
//! `f(W) = Σ_F Σ_rows (sum of the r largest eigenvalues of C C^†)`, where `F`
//! runs over `W, W^R, W^Γ, (W^R)^T, (W^Γ)^T`, `C` is a row reshaped to
//! `d x d`, and `W = (uA ⊗ uB) U (uC ⊗ uD)`. Its maximum `5 d^2` is reached
//! exactly when every such row has Schmidt rank at most `r`. The factors are
//! updated one at a time by a minorise-maximise step (the linearised
//! objective is maximised by a polar factor), which never decreases `f`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynmap::{dual_defect_sum, map_step_branch};
use crate::error::{Error, Result};
use crate::linalg::{c, haar_unitary, polar_factor, CMat};
use crate::tensor::BipartiteOperator;

/// Controls for [`canonicalize`].
#[derive(Debug, Clone, Serialize)]
pub struct CanonConfig {
    /// Target Schmidt rank of rows.
    pub rank: usize,
    /// Random restarts of the local frame.
    pub restarts: usize,
    /// Sweeps per restart.
    pub max_sweeps: usize,
    /// A restart succeeds when `f ≥ 5 d^2 - target_gap`.
    pub target_gap: f64,
    /// Tolerance for grouping equal support projectors.
    pub cluster_tol: f64,
    pub rng_seed: u64,
}

impl Default for CanonConfig {
    fn default() -> Self {
        Self {
            rank: 2,
            restarts: 40,
            max_sweeps: 3000,
            target_gap: 1e-8,
            cluster_tol: 1e-2,
            rng_seed: 0,
        }
    }
}

/// Result of [`canonicalize`].
#[derive(Debug, Clone)]
pub struct Canonical {
    pub matrix: BipartiteOperator,
    /// Local factors with `matrix = (uA ⊗ uB) U (uC ⊗ uD)`.
    pub factors: [CMat; 4],
    pub objective: f64,
    pub restarts_used: usize,
    pub sweeps: usize,
    /// Whether each leg was aligned to coordinate subspaces.
    pub legs_aligned: [bool; 4],
}

/// Row `p` of `m` reshaped to `d x d`: `C[a, b] = m[p, a*d + b]`.
fn row_matrix(m: &CMat, p: usize, d: usize) -> CMat {
    CMat::from_fn(d, d, |a, b| m[(p, a * d + b)])
}

/// Eigenvectors of the `r` largest eigenvalues of a Hermitian matrix, and their sum.
fn top_eigvecs(h: &CMat, r: usize) -> (CMat, f64) {
    let eig = h.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..h.nrows()).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let v = CMat::from_fn(h.nrows(), r, |i, j| eig.eigenvectors[(i, idx[j])]);
    let sum = idx[..r].iter().map(|&i| eig.eigenvalues[i]).sum();
    (v, sum)
}

fn rearrange(m: &CMat, d: usize, kind: usize) -> CMat {
    let u = BipartiteOperator::from_parts_unchecked(d, m.clone());
    match kind {
        0 => m.clone(),
        1 => u.reshuffle().into_matrix(),
        2 => u.partial_transpose().into_matrix(),
        3 => u.reshuffle().into_matrix().transpose(),
        _ => u.partial_transpose().into_matrix().transpose(),
    }
}

fn rearrange_back(g: &CMat, d: usize, kind: usize) -> CMat {
    let op = |m: CMat| BipartiteOperator::from_parts_unchecked(d, m);
    match kind {
        0 => g.clone(),
        1 => op(g.clone()).reshuffle().into_matrix(),
        2 => op(g.clone()).partial_transpose().into_matrix(),
        3 => op(g.transpose()).reshuffle().into_matrix(),
        _ => op(g.transpose()).partial_transpose().into_matrix(),
    }
}

/// Concentration objective and its Euclidean gradient with respect to `W`.
pub fn concentration(w: &CMat, d: usize, rank: usize) -> (f64, CMat) {
    let n = d * d;
    let mut f = 0.0;
    let mut grad = CMat::zeros(n, n);
    for kind in 0..5 {
        let fm = rearrange(w, d, kind);
        let mut g = CMat::zeros(n, n);
        for p in 0..n {
            let cm = row_matrix(&fm, p, d);
            let (v, s) = top_eigvecs(&(&cm * cm.adjoint()), rank);
            f += s;
            let pc = &v * (v.adjoint() * &cm);
            for a in 0..d {
                for b in 0..d {
                    g[(p, a * d + b)] = pc[(a, b)];
                }
            }
        }
        grad += rearrange_back(&g, d, kind);
    }
    (f, grad)
}

fn local_product(u: &CMat, f: &[CMat; 4]) -> CMat {
    f[0].kronecker(&f[1]) * u * f[2].kronecker(&f[3])
}

/// One minorise-maximise update of factor `leg`.
fn update_leg(u0: &CMat, f: &mut [CMat; 4], leg: usize, d: usize, rank: usize) -> f64 {
    let w = local_product(u0, f);
    let (val, g) = concentration(&w, d, rank);
    let y = if leg < 2 {
        u0 * f[2].kronecker(&f[3]) * g.adjoint()
    } else {
        g.adjoint() * f[0].kronecker(&f[1]) * u0
    };
    // y4[a, b, x, e] = y[(a, b), (x, e)]
    let y4 = |a: usize, b: usize, x: usize, e: usize| y[(a * d + b, x * d + e)];
    let other = match leg {
        0 => 1,
        1 => 0,
        2 => 3,
        _ => 2,
    };
    let z = CMat::from_fn(d, d, |big, small| {
        let mut acc = c(0.0, 0.0);
        for s in 0..d {
            for bg in 0..d {
                acc += if leg.is_multiple_of(2) {
                    // Z[I, i] = Σ_{j,J} u_other[j, J] Y[I, J, i, j]
                    f[other][(s, bg)] * y4(big, bg, small, s)
                } else {
                    // Z[J, j] = Σ_{i,I} u_other[i, I] Y[I, J, i, j]
                    f[other][(s, bg)] * y4(bg, big, s, small)
                };
            }
        }
        acc
    });
    let (w_polar, _) = polar_factor(&z);
    f[leg] = w_polar.adjoint();
    val
}

/// Support projectors of rank `r` for one leg of each row matrix.
fn support_projectors(mats: &[CMat], rank: usize, transpose: bool) -> Vec<CMat> {
    mats.iter()
        .map(|cm| {
            let m = if transpose { cm.transpose() } else { cm.clone() };
            let (v, _) = top_eigvecs(&(&m * m.adjoint()), rank);
            &v * v.adjoint()
        })
        .collect()
}

/// Groups nearly equal projectors and returns an orthonormal basis listing
/// the ranges of the groups one after another, or `None` if the ranges do not
/// tile the space. Within a group the basis is built from the coordinate
/// vectors with the largest weight in the averaged projector, so supports that
/// are already coordinate subspaces are kept as they are.
fn aligned_basis(projectors: &[CMat], d: usize, rank: usize, tol: f64) -> Option<CMat> {
    let mut groups: Vec<(CMat, usize)> = Vec::new();
    for p in projectors {
        match groups.iter_mut().find(|(sum, n)| (sum / c(*n as f64, 0.0) - p).norm() < tol) {
            Some((sum, n)) => {
                *sum += p;
                *n += 1;
            }
            None => groups.push((p.clone(), 1)),
        }
    }
    if groups.len() * rank != d {
        return None;
    }
    let mut basis = CMat::zeros(d, d);
    for (g, (sum, n)) in groups.iter().enumerate() {
        let avg = sum / c(*n as f64, 0.0);
        let mut idx: Vec<usize> = (0..d).collect();
        idx.sort_by(|&a, &b| avg[(b, b)].re.total_cmp(&avg[(a, a)].re));
        for (j, &i) in idx[..rank].iter().enumerate() {
            basis.set_column(g * rank + j, &avg.column(i));
        }
    }
    let mut gram = basis.adjoint() * &basis;
    for i in 0..d {
        gram[(i, i)] -= c(1.0, 0.0);
    }
    if gram.norm() > 0.5 {
        return None;
    }
    let (q, _) = polar_factor(&basis);
    Some(q)
}

/// Aligns the four legs of a matrix whose rows and columns have Schmidt rank
/// `rank`, so that supports become coordinate blocks. Returns the new matrix,
/// the factors applied, and which legs were aligned.
fn align_legs(w: &CMat, d: usize, rank: usize, tol: f64) -> (CMat, [CMat; 4], [bool; 4]) {
    let n = d * d;
    let rows: Vec<CMat> = (0..n).map(|p| row_matrix(w, p, d)).collect();
    let wt = w.transpose();
    let cols: Vec<CMat> = (0..n).map(|s| row_matrix(&wt, s, d)).collect();
    let id = CMat::identity(d, d);
    let mut f = [id.clone(), id.clone(), id.clone(), id];
    let mut aligned = [false; 4];
    // legs C, D from rows; legs A, B from columns
    let plans = [(0usize, &cols, false), (1, &cols, true), (2, &rows, false), (3, &rows, true)];
    for (leg, mats, transpose) in plans {
        if let Some(b) = aligned_basis(&support_projectors(mats, rank, transpose), d, rank, tol) {
            f[leg] = if leg < 2 { b.adjoint() } else { b.map(|z| z.conj()) };
            aligned[leg] = true;
        }
    }
    (local_product(w, &f), f, aligned)
}

/// Searches for local unitaries exposing the block structure of a 2-unitary.
pub fn canonicalize(u: &BipartiteOperator, cfg: &CanonConfig) -> Result<Canonical> {
    let d = u.d();
    if cfg.rank == 0 || !d.is_multiple_of(cfg.rank) {
        return Err(Error::Config(format!("rank {} does not divide d = {d}", cfg.rank)));
    }
    let target = 5.0 * (d * d) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let u0 = u.matrix();
    let mut best: Option<(f64, [CMat; 4], usize)> = None;
    let mut restarts_used = 0;
    for _ in 0..cfg.restarts.max(1) {
        restarts_used += 1;
        let mut f = [
            haar_unitary(d, &mut rng),
            haar_unitary(d, &mut rng),
            haar_unitary(d, &mut rng),
            haar_unitary(d, &mut rng),
        ];
        let mut last = f64::NEG_INFINITY;
        let mut val = 0.0;
        let mut sweeps = 0;
        while sweeps < cfg.max_sweeps {
            sweeps += 1;
            for leg in 0..4 {
                val = update_leg(u0, &mut f, leg, d, cfg.rank);
            }
            if (val - last).abs() < 1e-12 || val >= target - 1e-13 {
                break;
            }
            last = val;
        }
        let (val, _) = concentration(&local_product(u0, &f), d, cfg.rank);
        if best.as_ref().is_none_or(|b| val > b.0) {
            best = Some((val, f, sweeps));
        }
        if val >= target - cfg.target_gap {
            break;
        }
    }
    let (objective, f, sweeps) = best.expect("at least one restart");
    let w = local_product(u0, &f);
    let (w2, g, legs_aligned) = align_legs(&w, d, cfg.rank, cfg.cluster_tol);
    let factors = [&g[0] * &f[0], &g[1] * &f[1], &f[2] * &g[2], &f[3] * &g[3]];
    Ok(Canonical {
        matrix: BipartiteOperator::from_parts_unchecked(d, w2),
        factors,
        objective,
        restarts_used,
        sweeps,
        legs_aligned,
    })
}

/// Sets entries of modulus at most `tol` to zero.
pub fn prune(u: &BipartiteOperator, tol: f64) -> BipartiteOperator {
    let m = u.matrix().map(|z| if z.norm() <= tol { c(0.0, 0.0) } else { z });
    BipartiteOperator::from_parts_unchecked(u.d(), m)
}

/// Prunes entries below `tol` and re-runs the map on the pruned matrix.
/// The map preserves a support made of unitary blocks in every flattening,
/// so residuals left over from canonicalisation are removed while the
/// defects are driven back down to rounding level. On 2-unitaries the map
/// cycles the legs with period three, so only every third iterate is kept.
pub fn polish(u: &BipartiteOperator, tol: f64, max_rounds: usize) -> BipartiteOperator {
    let mut cur = prune(u, tol);
    let mut best = cur.clone();
    let mut best_defect = dual_defect_sum(&cur);
    let mut since_improvement = 0;
    for _ in 0..max_rounds {
        for _ in 0..3 {
            cur = map_step_branch(&cur).0;
        }
        let defect = dual_defect_sum(&cur);
        if defect < 0.9 * best_defect {
            best = cur.clone();
            best_defect = defect;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= 10 {
                break;
            }
        }
    }
    prune(&best, 1e-14)
}
