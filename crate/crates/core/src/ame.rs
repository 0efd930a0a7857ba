//! Four-party states built from bipartite unitaries, reduced density
//! matrices, AME checks, Bell-rank checks on row states and support blocks.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values_desc, CMat};
use crate::tensor::{BipartiteOperator, UNITARY_TOL};

/// Pure state of four qudits, amplitudes indexed `((i*d + j)*d + k)*d + l`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourPartyState {
    d: usize,
    amps: Vec<Complex64>,
}

/// Tolerance on the norm of a [`FourPartyState`].
pub const NORM_TOL: f64 = 1e-10;

impl FourPartyState {
    pub fn new(d: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != d.pow(4) {
            return Err(Error::DimensionMismatch { expected: d.pow(4), found: amps.len() });
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { d, amps })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let d = self.d;
        self.amps[((i * d + j) * d + k) * d + l]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `Σ_k |kkkk> / √d`.
    pub fn ghz(d: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); d.pow(4)];
        let w = 1.0 / (d as f64).sqrt();
        for k in 0..d {
            amps[((k * d + k) * d + k) * d + k] = Complex64::new(w, 0.0);
        }
        Self { d, amps }
    }

    /// Computational basis state `|i j k l>` (0-based labels).
    pub fn basis(d: usize, idx: [usize; 4]) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); d.pow(4)];
        amps[((idx[0] * d + idx[1]) * d + idx[2]) * d + idx[3]] = Complex64::new(1.0, 0.0);
        Self { d, amps }
    }
}

/// `|Ψ> = (1/d) Σ T_{ijkl} |ijkl>` with `T` the tensor of `U`.
pub fn state_from_unitary(u: &BipartiteOperator) -> Result<FourPartyState> {
    let defect = u.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NonUnitaryInput { defect });
    }
    let d = u.d();
    let w = Complex64::new(1.0 / d as f64, 0.0);
    let amps = u.to_tensor().as_slice().iter().map(|z| z * w).collect();
    FourPartyState::new(d, amps)
}

/// Parties are numbered `0..4` for `A, B, C, D`.
pub fn parse_parties(s: &str) -> Result<Vec<usize>> {
    s.chars()
        .map(|ch| match ch.to_ascii_uppercase() {
            'A' => Ok(0),
            'B' => Ok(1),
            'C' => Ok(2),
            'D' => Ok(3),
            _ => Err(Error::BadSubset(format!("unknown party `{ch}` in `{s}`"))),
        })
        .collect()
}

/// Reduced density matrix on the parties in `keep` (any order; sorted internally).
pub fn partial_trace(psi: &FourPartyState, keep: &[usize]) -> Result<CMat> {
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.is_empty() || keep.len() > 3 || keep.iter().any(|&p| p > 3) {
        return Err(Error::BadSubset(format!("{keep:?}: need one to three distinct parties out of 0..4")));
    }
    let d = psi.d;
    let rest: Vec<usize> = (0..4).filter(|p| !keep.contains(p)).collect();
    let dk = d.pow(keep.len() as u32);
    let dr = d.pow(rest.len() as u32);
    let mut m = CMat::zeros(dk, dr);
    let mut digits = [0usize; 4];
    for (flat, z) in psi.amps.iter().enumerate() {
        let mut x = flat;
        for pos in (0..4).rev() {
            digits[pos] = x % d;
            x /= d;
        }
        let row = keep.iter().fold(0, |acc, &p| acc * d + digits[p]);
        let col = rest.iter().fold(0, |acc, &p| acc * d + digits[p]);
        m[(row, col)] = *z;
    }
    Ok(&m * m.adjoint())
}

/// Deviations `‖ρ_S - I/d^2‖_F` for the three independent two-party cuts.
#[derive(Debug, Clone, Serialize)]
pub struct ReductionReport {
    pub ab: f64,
    pub ac: f64,
    pub ad: f64,
    pub passed: bool,
}

impl ReductionReport {
    pub fn max_deviation(&self) -> f64 {
        self.ab.max(self.ac).max(self.ad)
    }
}

/// Checks that every two-party reduction is maximally mixed within `tol`.
/// The remaining cuts are complements of these and share their spectra.
pub fn ame_check(psi: &FourPartyState, tol: f64) -> ReductionReport {
    let d2 = psi.d * psi.d;
    let dev = |keep: [usize; 2]| {
        let mut rho = partial_trace(psi, &keep).expect("two parties is a valid subset");
        for i in 0..d2 {
            rho[(i, i)] -= Complex64::new(1.0 / d2 as f64, 0.0);
        }
        rho.norm()
    };
    let (ab, ac, ad) = (dev([0, 1]), dev([0, 2]), dev([0, 3]));
    ReductionReport { ab, ac, ad, passed: ab <= tol && ac <= tol && ad <= tol }
}

/// Row `(i, j)` of `U` as the `d x d` coefficient matrix `C_{kl} = U_{ij,kl}`.
pub fn row_states(u: &BipartiteOperator) -> Vec<CMat> {
    let d = u.d();
    (0..d * d)
        .map(|p| CMat::from_fn(d, d, |k, l| u.matrix()[(p, k * d + l)]))
        .collect()
}

/// True iff the singular values of `c` are `(1/√2, 1/√2, 0, ..., 0)` within `tol`,
/// i.e. the state is a two-qubit maximally entangled state inside `C^d ⊗ C^d`.
pub fn bell_rank_check(c: &CMat, tol: f64) -> bool {
    bell_rank_deviation(c) <= tol
}

/// Largest deviation of the singular values of `c` from `(1/√2, 1/√2, 0, ...)`.
pub fn bell_rank_deviation(c: &CMat) -> f64 {
    let sv = singular_values_desc(c);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    sv.iter()
        .enumerate()
        .map(|(i, s)| if i < 2 { (s - h).abs() } else { s.abs() })
        .fold(0.0, f64::max)
}

/// One connected component of the support graph.
#[derive(Debug, Clone, Serialize)]
pub struct Block {
    /// 0-based row indices, ascending.
    pub rows: Vec<usize>,
    /// 0-based column indices, ascending.
    pub cols: Vec<usize>,
    /// Unitarity defect of the extracted submatrix (only meaningful if square).
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockReport {
    pub blocks: Vec<Block>,
    /// `(rows, cols)` per block, in order of the smallest row index.
    pub sizes: Vec<(usize, usize)>,
}

impl BlockReport {
    /// True iff there are `count` blocks, each `size x size` and unitary within `tol`.
    pub fn is_uniform(&self, count: usize, size: usize, tol: f64) -> bool {
        self.blocks.len() == count
            && self
                .blocks
                .iter()
                .all(|b| b.rows.len() == size && b.cols.len() == size && b.defect <= tol)
    }
}

/// Connected components of the bipartite graph rows–columns with an edge for
/// every entry of modulus above `tol`.
pub fn block_structure_detect(u: &BipartiteOperator, tol: f64) -> BlockReport {
    let m = u.matrix();
    let n = m.nrows();
    // union-find over rows 0..n and columns n..2n
    let mut parent: Vec<usize> = (0..2 * n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for p in 0..n {
        for s in 0..n {
            if m[(p, s)].norm() > tol {
                let (a, b) = (find(&mut parent, p), find(&mut parent, n + s));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    for x in 0..2 * n {
        let r = find(&mut parent, x);
        let idx = match roots.iter().position(|&q| q == r) {
            Some(i) => i,
            None => {
                roots.push(r);
                blocks.push(Block { rows: vec![], cols: vec![], defect: 0.0 });
                roots.len() - 1
            }
        };
        if x < n {
            blocks[idx].rows.push(x);
        } else {
            blocks[idx].cols.push(x - n);
        }
    }
    blocks.retain(|b| !(b.rows.is_empty() && b.cols.is_empty()));
    for b in &mut blocks {
        let sub = CMat::from_fn(b.rows.len(), b.cols.len(), |i, j| m[(b.rows[i], b.cols[j])]);
        b.defect = if sub.nrows() == sub.ncols() && sub.nrows() > 0 {
            crate::linalg::gram_defect(&sub)
        } else {
            f64::INFINITY
        };
    }
    let sizes = blocks.iter().map(|b| (b.rows.len(), b.cols.len())).collect();
    BlockReport { blocks, sizes }
}

/// A named numeric check run by [`verify_numeric`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Unitary,
    Dual,
    #[serde(rename = "2unitary")]
    TwoUnitary,
    Ame,
    BellRows,
    Blocks,
    Coarse,
}

impl Check {
    pub const ALL: [Check; 7] =
        [Check::Unitary, Check::Dual, Check::TwoUnitary, Check::Ame, Check::BellRows, Check::Blocks, Check::Coarse];

    pub fn name(self) -> &'static str {
        match self {
            Check::Unitary => "unitary",
            Check::Dual => "dual",
            Check::TwoUnitary => "2unitary",
            Check::Ame => "ame",
            Check::BellRows => "bell-rows",
            Check::Blocks => "blocks",
            Check::Coarse => "coarse",
        }
    }

    /// Parses a comma-separated list such as `unitary,dual,ame`.
    pub fn parse_list(s: &str) -> Result<Vec<Check>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                Check::ALL
                    .into_iter()
                    .find(|c| c.name() == t)
                    .ok_or_else(|| Error::Config(format!("unknown check `{t}`")))
            })
            .collect()
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub check: Check,
    pub passed: bool,
    /// The quantity compared against the tolerance.
    pub deviation: f64,
    pub detail: serde_json::Value,
}

/// Report of [`verify_numeric`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub d: usize,
    pub tol: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn block_summary(u: &BipartiteOperator, tol: f64) -> (bool, f64, serde_json::Value) {
    let r = block_structure_detect(u, tol);
    let worst = r.blocks.iter().map(|b| b.defect).fold(0.0, f64::max);
    let d = u.d();
    let passed = if d == 6 {
        r.is_uniform(9, 4, tol)
    } else {
        r.blocks.iter().all(|b| b.rows.len() == b.cols.len() && b.defect <= tol)
    };
    (passed, worst, serde_json::json!({ "sizes": r.sizes, "worst_block_defect": worst }))
}

fn worst_bell(u: &BipartiteOperator) -> f64 {
    row_states(u).iter().map(bell_rank_deviation).fold(0.0, f64::max)
}

/// Runs the selected checks on `u`. For `d = 6` the block check expects nine
/// `4 x 4` unitary blocks in `U`, `U^R` and `U^Γ`; for other `d` it only asks
/// for square unitary blocks. The coarse-grain check is defined for `d = 6`
/// only and fails for other `d`. Bell rows are required of `U`; the
/// worst deviations of `U^R` and `U^Γ` rows are reported alongside.
pub fn verify_numeric(u: &BipartiteOperator, checks: &[Check], tol: f64) -> VerifyReport {
    use crate::metrics::{dual_defects, two_unitarity_defect};
    use serde_json::json;
    let [du, dr, dg] = dual_defects(u);
    let mut out = Vec::new();
    for &check in checks {
        let (passed, deviation, detail) = match check {
            Check::Unitary => (du <= tol, du, json!({})),
            Check::Dual => (dr <= tol, dr, json!({ "unitarity_defect_gamma": dg })),
            Check::TwoUnitary => {
                let worst = du.max(dr).max(dg);
                let delta = two_unitarity_defect(u);
                (worst <= tol, worst, json!({ "delta": delta, "defects": [du, dr, dg] }))
            }
            Check::Ame => match state_from_unitary(u) {
                Ok(psi) => {
                    let r = ame_check(&psi, tol);
                    (r.passed, r.max_deviation(), serde_json::to_value(&r).unwrap_or_default())
                }
                Err(e) => (false, f64::INFINITY, json!({ "error": e.to_string() })),
            },
            Check::BellRows => {
                let w = worst_bell(u);
                let wr = worst_bell(&u.reshuffle());
                let wg = worst_bell(&u.partial_transpose());
                (w <= tol, w, json!({ "worst_r": wr, "worst_gamma": wg }))
            }
            Check::Blocks => {
                let (pu, wu, ju) = block_summary(u, tol);
                let (pr, wr, jr) = block_summary(&u.reshuffle(), tol);
                let (pg, wg, jg) = block_summary(&u.partial_transpose(), tol);
                (pu && pr && pg, wu.max(wr).max(wg), json!({ "u": ju, "r": jr, "gamma": jg }))
            }
            Check::Coarse => match crate::designs::coarse_grain_check(&u.to_tensor(), tol) {
                Ok(r) => (r.passed, if r.passed { 0.0 } else { 1.0 }, json!({ "counts": r.counts })),
                Err(e) => (false, f64::INFINITY, json!({ "error": e.to_string() })),
            },
        };
        out.push(CheckResult { check, passed, deviation, detail });
    }
    VerifyReport { d: u.d(), tol, passed: out.iter().all(|c| c.passed), checks: out }
}
