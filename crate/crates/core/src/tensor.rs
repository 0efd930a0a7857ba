//! Bipartite operators on `C^d ⊗ C^d`, four-index tensors, and the index
//! rearrangements that relate their three matrix flattenings.
//!
//! Index convention (used by every module): with 1-based local indices,
//! `U_{ij,kl}` lives at row `p = j + d(i-1)` and column `s = l + d(k-1)`.
//! In 0-based storage this is row `i*d + j`, column `k*d + l`.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{gram_defect, CMat};

/// Default tolerance on the unitarity defect.
pub const UNITARY_TOL: f64 = 1e-10;

/// Square complex matrix of order `d^2` with a double-index view.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    d: usize,
    m: CMat,
}

impl BipartiteOperator {
    /// Wraps a matrix, checking that its order is `d^2` and that all entries are finite.
    pub fn new(d: usize, m: CMat) -> Result<Self> {
        if d == 0 || m.nrows() != d * d || m.ncols() != d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d,
                found: m.nrows().max(m.ncols()),
            });
        }
        for r in 0..m.nrows() {
            for s in 0..m.ncols() {
                let z = m[(r, s)];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: s });
                }
            }
        }
        Ok(Self { d, m })
    }

    /// Infers `d` from the matrix order.
    pub fn from_matrix(m: CMat) -> Result<Self> {
        let n = m.nrows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || n == 0 {
            return Err(Error::BadOrder { order: n });
        }
        Self::new(d, m)
    }

    pub(crate) fn from_parts_unchecked(d: usize, m: CMat) -> Self {
        debug_assert_eq!(m.nrows(), d * d);
        Self { d, m }
    }

    /// Builds `U` from a closure over 0-based `(i, j, k, l)`.
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let n = d * d;
        let m = CMat::from_fn(n, n, |p, s| f(p / d, p % d, s / d, s % d));
        Self { d, m }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            m: CMat::identity(d * d, d * d),
        }
    }

    /// SWAP gate: `S_{ij,kl} = δ_il δ_jk`.
    pub fn swap(d: usize) -> Self {
        Self::from_fn(d, |i, j, k, l| {
            if i == l && j == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn order(&self) -> usize {
        self.d * self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    /// Entry `U_{ij,kl}` with 0-based local indices.
    pub fn at(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.m[(i * self.d + j, k * self.d + l)]
    }

    fn rearranged(&self, f: impl Fn(usize, usize, usize, usize) -> (usize, usize, usize, usize)) -> Self {
        let d = self.d;
        Self::from_fn(d, |i, j, k, l| {
            let (a, b, c, e) = f(i, j, k, l);
            self.at(a, b, c, e)
        })
    }

    /// `U^R_{ij,kl} = U_{ik,jl}`.
    pub fn reshuffle(&self) -> Self {
        self.rearranged(|i, j, k, l| (i, k, j, l))
    }

    /// `U^Γ_{ij,kl} = U_{il,kj}`.
    pub fn partial_transpose(&self) -> Self {
        self.rearranged(|i, j, k, l| (i, l, k, j))
    }

    /// Frobenius norm of `U^dagger U - I`; zero iff `U` is unitary.
    pub fn unitarity_defect(&self) -> f64 {
        gram_defect(&self.m)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    /// `U · S`, i.e. `(US)_{ij,kl} = U_{ij,lk}`.
    pub fn times_swap(&self) -> Self {
        self.rearranged(|i, j, k, l| (i, j, l, k))
    }

    /// `(uA ⊗ uB) · U · (uC ⊗ uD)`, after checking each factor is unitary within
    /// [`UNITARY_TOL`].
    pub fn apply_local(&self, factors: [&CMat; 4]) -> Result<Self> {
        self.apply_local_tol(factors, UNITARY_TOL)
    }

    pub fn apply_local_tol(&self, factors: [&CMat; 4], tol: f64) -> Result<Self> {
        for (index, f) in factors.iter().enumerate() {
            if f.nrows() != self.d || f.ncols() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: f.nrows(),
                });
            }
            let defect = gram_defect(f);
            if defect > tol {
                return Err(Error::NonUnitaryFactor { index, defect });
            }
        }
        let left = factors[0].kronecker(factors[1]);
        let right = factors[2].kronecker(factors[3]);
        Ok(Self::from_parts_unchecked(self.d, left * &self.m * right))
    }

    pub fn to_tensor(&self) -> Tensor4 {
        Tensor4 {
            d: self.d,
            data: (0..self.order())
                .flat_map(|p| (0..self.order()).map(move |s| (p, s)))
                .map(|(p, s)| self.m[(p, s)])
                .collect(),
        }
    }

    /// Writes the dense matrix format: a `d,<d>` line, the `p,s,re,im`
    /// header, then one line per nonzero entry with 1-based `p` and `s`.
    pub fn write_dense_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().flexible(true).from_writer(w);
        wtr.write_record(["d", &self.d.to_string()])?;
        wtr.write_record(["p", "s", "re", "im"])?;
        for p in 0..self.order() {
            for s in 0..self.order() {
                let z = self.m[(p, s)];
                if z.re != 0.0 || z.im != 0.0 {
                    wtr.write_record([
                        (p + 1).to_string(),
                        (s + 1).to_string(),
                        format!("{:.16e}", z.re),
                        format!("{:.16e}", z.im),
                    ])?;
                }
            }
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_dense_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(r);
        let mut records = rdr.records();
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let first = records.next().ok_or_else(|| parse_err(1, "empty file"))??;
        if first.get(0) != Some("d") {
            return Err(parse_err(1, "expected `d,<value>`"));
        }
        let d: usize = first
            .get(1)
            .and_then(|v| v.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| parse_err(1, "bad local dimension"))?;
        let header = records.next().ok_or_else(|| parse_err(2, "missing header"))??;
        if header.iter().collect::<Vec<_>>() != ["p", "s", "re", "im"] {
            return Err(parse_err(2, "expected header `p,s,re,im`"));
        }
        let n = d * d;
        let mut m = CMat::zeros(n, n);
        for (idx, rec) in records.enumerate() {
            let line = idx + 3;
            let rec = rec?;
            if rec.len() != 4 {
                return Err(parse_err(line, "expected 4 fields"));
            }
            let p: usize = rec[0].parse().map_err(|_| parse_err(line, "bad row index"))?;
            let s: usize = rec[1].parse().map_err(|_| parse_err(line, "bad column index"))?;
            let re: f64 = rec[2].parse().map_err(|_| parse_err(line, "bad real part"))?;
            let im: f64 = rec[3].parse().map_err(|_| parse_err(line, "bad imaginary part"))?;
            if p == 0 || s == 0 || p > n || s > n {
                return Err(parse_err(line, "index out of range"));
            }
            m[(p - 1, s - 1)] = Complex64::new(re, im);
        }
        Self::new(d, m)
    }

    pub fn save_dense_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_dense_csv(std::io::BufWriter::new(f))
    }

    pub fn load_dense_csv(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_dense_csv(std::io::BufReader::new(f))
    }
}

/// Four-index tensor `T_{ijkl}`, stored row-major so that `T_{ijkl} = U_{(ij),(kl)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    d: usize,
    data: Vec<Complex64>,
}

/// The three ways of pairing four legs into a matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cut {
    /// rows `(i,j)`, columns `(k,l)`: the operator itself.
    AbCd,
    /// rows `(i,k)`, columns `(j,l)`: the reshuffled operator.
    AcBd,
    /// rows `(i,l)`, columns `(k,j)`: the partial transpose. The column pair
    /// is ordered (C, B) so that this cut coincides with `U^Γ`.
    AdBc,
}

impl Tensor4 {
    pub fn from_fn(d: usize, mut f: impl FnMut(usize, usize, usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(d.pow(4));
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        data.push(f(i, j, k, l));
                    }
                }
            }
        }
        Self { d, data }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        let d = self.d;
        self.data[((i * d + j) * d + k) * d + l]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn flatten(&self, cut: Cut) -> BipartiteOperator {
        let d = self.d;
        match cut {
            Cut::AbCd => BipartiteOperator::from_fn(d, |i, j, k, l| self.get(i, j, k, l)),
            // row (i,k), column (j,l) holds T_{ijkl}
            Cut::AcBd => BipartiteOperator::from_fn(d, |a, b, c, e| self.get(a, c, b, e)),
            // row (i,l), column (k,j) holds T_{ijkl}
            Cut::AdBc => BipartiteOperator::from_fn(d, |a, b, c, e| self.get(a, e, c, b)),
        }
    }

    /// Boolean support pattern with entries of modulus above `tol`.
    pub fn support(&self, tol: f64) -> Vec<bool> {
        self.data.iter().map(|z| z.norm() > tol).collect()
    }
}

impl From<&BipartiteOperator> for Tensor4 {
    fn from(u: &BipartiteOperator) -> Self {
        u.to_tensor()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, haar_unitary, singular_values_desc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_op(d: usize, seed: u64) -> BipartiteOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BipartiteOperator::new(d, haar_unitary(d * d, &mut rng)).unwrap()
    }

    #[test]
    fn index_convention_matches_one_based_rule() {
        // U_{ij,kl} at row j + d(i-1), column l + d(k-1) in 1-based terms.
        let d = 6;
        let u = BipartiteOperator::from_fn(d, |i, j, k, l| c((1000 * i + 100 * j + 10 * k + l) as f64, 0.0));
        let (i, j, k, l) = (5usize, 1usize, 4usize, 5usize); // 1-based
        let p = j + d * (i - 1);
        let s = l + d * (k - 1);
        assert_eq!(u.matrix()[(p - 1, s - 1)].re, (1000 * (i - 1) + 100 * (j - 1) + 10 * (k - 1) + (l - 1)) as f64);
    }

    #[test]
    fn swap_is_fixed_by_reshuffle() {
        let s = BipartiteOperator::swap(2);
        assert_eq!(s.reshuffle(), s);
    }

    #[test]
    fn swap_partial_transpose_is_rank_one() {
        let s = BipartiteOperator::swap(2);
        let g = s.partial_transpose();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let expect = if i == j && k == l { 1.0 } else { 0.0 };
                        assert_eq!(g.at(i, j, k, l), c(expect, 0.0));
                    }
                }
            }
        }
        let sv = singular_values_desc(g.matrix());
        assert!((sv[0] - 2.0).abs() < 1e-14);
        assert!(sv[1..].iter().all(|&x| x.abs() < 1e-14));
        assert!(!g.is_unitary(1e-10));
    }

    #[test]
    fn identity_reshuffle_is_rank_one() {
        let r = BipartiteOperator::identity(2).reshuffle();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        let expect = if i == j && k == l { 1.0 } else { 0.0 };
                        assert_eq!(r.at(i, j, k, l).re, expect);
                    }
                }
            }
        }
        assert!((r.frobenius_norm() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_partial_transpose_is_identity() {
        for d in 2..=5 {
            let id = BipartiteOperator::identity(d);
            assert_eq!(id.partial_transpose(), id);
        }
    }

    #[test]
    fn unitarity_defect_examples() {
        let two_i = BipartiteOperator::new(2, CMat::identity(4, 4) * c(2.0, 0.0)).unwrap();
        assert!((two_i.unitarity_defect() - 6.0).abs() < 1e-14);
        assert_eq!(BipartiteOperator::swap(3).unitarity_defect(), 0.0);
        assert!(random_op(4, 1).unitarity_defect() < 1e-12);
    }

    #[test]
    fn flatten_cuts_agree_with_rearrangements() {
        let u = random_op(3, 5);
        let t = u.to_tensor();
        assert_eq!(t.flatten(Cut::AbCd), u);
        assert_eq!(t.flatten(Cut::AcBd), u.reshuffle());
        assert_eq!(t.flatten(Cut::AbCd).reshuffle(), t.flatten(Cut::AcBd));
        assert_eq!(t.flatten(Cut::AdBc), u.partial_transpose());
        assert!((t.norm_sqr() - u.frobenius_norm().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn apply_local_identity_and_rejection() {
        let u = random_op(3, 9);
        let id = CMat::identity(3, 3);
        assert_eq!(u.apply_local([&id, &id, &id, &id]).unwrap(), u);
        let bad = id.clone() * c(1.1, 0.0);
        assert!(matches!(
            u.apply_local([&id, &bad, &id, &id]),
            Err(Error::NonUnitaryFactor { index: 1, .. })
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f: Vec<CMat> = (0..4).map(|_| haar_unitary(3, &mut rng)).collect();
        let v = u.apply_local([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        assert!(v.unitarity_defect() < 1e-12);
    }

    #[test]
    fn dense_csv_roundtrip() {
        let u = random_op(2, 21);
        let mut buf = Vec::new();
        u.write_dense_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("d,2\np,s,re,im\n"));
        let back = BipartiteOperator::read_dense_csv(&buf[..]).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn dense_csv_rejects_garbage() {
        let bad = "d,2\np,s,re,im\n5,1,1.0,0.0\n";
        assert!(matches!(
            BipartiteOperator::read_dense_csv(bad.as_bytes()),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(BipartiteOperator::read_dense_csv("x,2\n".as_bytes()).is_err());
    }

    #[test]
    fn rejects_non_finite_and_bad_order() {
        let mut m = CMat::identity(4, 4);
        m[(1, 2)] = c(f64::NAN, 0.0);
        assert!(matches!(BipartiteOperator::new(2, m), Err(Error::NonFinite { row: 1, col: 2 })));
        assert!(matches!(
            BipartiteOperator::from_matrix(CMat::identity(5, 5)),
            Err(Error::BadOrder { order: 5 })
        ));
    }

    /// Brute-force enumeration over all index tuples that applying R after Γ is
    /// the remaining rearrangement `(U^Γ)^R_{ij,kl} = U_{ik,lj}` and similar.
    #[test]
    fn rearrangement_composition_by_enumeration() {
        for d in [2usize, 3] {
            let u = BipartiteOperator::from_fn(d, |i, j, k, l| c((i * 27 + j * 9 + k * 3 + l) as f64, 0.0));
            let rg = u.reshuffle().partial_transpose();
            let gr = u.partial_transpose().reshuffle();
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            // (U^R)^Γ_{ij,kl} = U^R_{il,kj} = U_{ik,lj}
                            assert_eq!(rg.at(i, j, k, l), u.at(i, k, l, j));
                            // (U^Γ)^R_{ij,kl} = U^Γ_{ik,jl} = U_{il,jk}
                            assert_eq!(gr.at(i, j, k, l), u.at(i, l, j, k));
                        }
                    }
                }
            }
        }
    }
}
