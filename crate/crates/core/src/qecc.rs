//! Error-detection codes from a perfect tensor.
//!
//! Fixing the first leg of a perfect tensor `T` gives `d` codewords
//! `|ĩ> = d^{-1/2} Σ_{jkl} T_{ijkl} |jkl>` on three qudits, a `((3,d,2))_d`
//! code that detects any single-site error. The four-party state itself is
//! a pure `((4,1,3))_d` code: every error of weight at most two has zero
//! expectation value.
//!
//! Errors are products of Weyl operators `X^α Z^β` with `X|j> = |j+1>` and
//! `Z|j> = η^j |j>`, `η = e^{2πi/d}`.

use std::io::{BufRead, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::ame::FourPartyState;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::metrics::two_unitarity_defect;
use crate::tensor::{BipartiteOperator, Tensor4};

/// Largest `Δ` accepted by [`encode`].
pub const ENCODE_DELTA_TOL: f64 = 1e-9;

/// A product of single-site Weyl operators on `n_sites` qudits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorOperator {
    pub d: usize,
    pub n_sites: usize,
    /// Non-identity factors `(site, α, β)`, sites ascending and distinct,
    /// `(α, β) ≠ (0, 0)`, both reduced mod `d`.
    pub factors: Vec<(usize, usize, usize)>,
}

impl ErrorOperator {
    pub fn identity(d: usize, n_sites: usize) -> Self {
        Self { d, n_sites, factors: vec![] }
    }

    /// Builds an operator from factors, dropping identities and reducing powers.
    pub fn new(d: usize, n_sites: usize, factors: &[(usize, usize, usize)]) -> Result<Self> {
        let mut fs: Vec<(usize, usize, usize)> = factors
            .iter()
            .map(|&(s, a, b)| (s, a % d, b % d))
            .filter(|&(_, a, b)| (a, b) != (0, 0))
            .collect();
        fs.sort_unstable();
        if fs.windows(2).any(|w| w[0].0 == w[1].0) || fs.iter().any(|f| f.0 >= n_sites) {
            return Err(Error::BadSubset(format!("bad sites in {factors:?} for {n_sites} sites")));
        }
        Ok(Self { d, n_sites, factors: fs })
    }

    pub fn weight(&self) -> usize {
        self.factors.len()
    }

    /// Image of basis state `digits` and the phase picked up: `E|x> = phase |y>`.
    fn act(&self, digits: &mut [usize]) -> Complex64 {
        let d = self.d;
        let mut phase_units = 0usize;
        for &(s, a, b) in &self.factors {
            phase_units += b * digits[s];
            digits[s] = (digits[s] + a) % d;
        }
        let t = 2.0 * std::f64::consts::PI * (phase_units % d) as f64 / d as f64;
        Complex64::from_polar(1.0, t)
    }

    /// `E |v>` for a vector on `n_sites` qudits in lexicographic order.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let (d, n) = (self.d, self.n_sites);
        let mut out = vec![c(0.0, 0.0); v.len()];
        let mut digits = vec![0usize; n];
        for (x, amp) in v.iter().enumerate() {
            if *amp == c(0.0, 0.0) {
                continue;
            }
            let mut r = x;
            for pos in (0..n).rev() {
                digits[pos] = r % d;
                r /= d;
            }
            let ph = self.act(&mut digits);
            let y = digits.iter().fold(0, |acc, &q| acc * d + q);
            out[y] += ph * amp;
        }
        out
    }

    /// Dense matrix of the operator, for small checks.
    pub fn matrix(&self) -> CMat {
        let n = self.d.pow(self.n_sites as u32);
        let mut m = CMat::zeros(n, n);
        for x in 0..n {
            let mut e = vec![c(0.0, 0.0); n];
            e[x] = c(1.0, 0.0);
            for (y, z) in self.apply(&e).into_iter().enumerate() {
                m[(y, x)] = z;
            }
        }
        m
    }
}

fn subsets(sites: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if sites.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for (i, &s) in sites.iter().enumerate() {
        for mut rest in subsets(&sites[i + 1..], k - 1) {
            rest.insert(0, s);
            out.push(rest);
        }
    }
    out
}

/// All Weyl operators on `n_sites` qudits whose non-identity factors sit on
/// exactly `weight` of the given `sites`. For `weight = 1` and `m` sites this
/// is `m (d^2 - 1)` operators.
pub fn weyl_basis(d: usize, n_sites: usize, weight: usize, sites: &[usize]) -> Vec<ErrorOperator> {
    weyl_on_supports(d, n_sites, &subsets(sites, weight))
}

/// All Weyl operators whose support is exactly one of `supports`.
pub fn weyl_on_supports(d: usize, n_sites: usize, supports: &[Vec<usize>]) -> Vec<ErrorOperator> {
    let labels: Vec<(usize, usize)> = (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).filter(|&p| p != (0, 0)).collect();
    let nl = labels.len();
    let mut out = Vec::new();
    for sup in supports {
        for code in 0..nl.pow(sup.len() as u32) {
            let mut r = code;
            let mut factors = Vec::with_capacity(sup.len());
            for &s in sup.iter().rev() {
                let (a, b) = labels[r % nl];
                factors.push((s, a, b));
                r /= nl;
            }
            factors.reverse();
            out.push(ErrorOperator { d, n_sites, factors });
        }
    }
    out
}

/// Codewords of a code on three qudits.
#[derive(Debug, Clone)]
pub struct CodeSpace {
    pub d: usize,
    pub n_sites: usize,
    pub codewords: Vec<Vec<Complex64>>,
}

impl CodeSpace {
    pub fn new(d: usize, n_sites: usize, codewords: Vec<Vec<Complex64>>) -> Result<Self> {
        let n = d.pow(n_sites as u32);
        if let Some(bad) = codewords.iter().find(|w| w.len() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: bad.len() });
        }
        Ok(Self { d, n_sites, codewords })
    }

    pub fn dim(&self) -> usize {
        self.codewords.len()
    }

    /// `‖G - I‖_F` for the Gram matrix of the codewords.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.dim();
        let mut g = CMat::from_fn(k, k, |i, j| inner(&self.codewords[i], &self.codewords[j]));
        for i in 0..k {
            g[(i, i)] -= c(1.0, 0.0);
        }
        g.norm()
    }

    /// Encodes `Σ_i coeffs[i] |ĩ>`.
    pub fn encode_vector(&self, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
        if coeffs.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: coeffs.len() });
        }
        let n = self.d.pow(self.n_sites as u32);
        let mut out = vec![c(0.0, 0.0); n];
        for (w, a) in self.codewords.iter().zip(coeffs) {
            for (o, x) in out.iter_mut().zip(w) {
                *o += a * x;
            }
        }
        Ok(out)
    }

    /// Writes `codeword,index,re,im` rows (1-based codeword and index).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "d,{},sites,{}", self.d, self.n_sites)?;
        writeln!(w, "codeword,index,re,im")?;
        for (i, cw) in self.codewords.iter().enumerate() {
            for (x, z) in cw.iter().enumerate() {
                if z.norm() > 0.0 {
                    writeln!(w, "{},{},{:.16e},{:.16e}", i + 1, x + 1, z.re, z.im)?;
                }
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, msg: String| Error::Parse { line, msg };
        let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty code file".into()))?;
        let first = first?;
        let f: Vec<&str> = first.split(',').map(str::trim).collect();
        let (d, n_sites) = match f.as_slice() {
            ["d", d, "sites", s] => (
                d.parse::<usize>().map_err(|_| parse_err(1, format!("bad d `{d}`")))?,
                s.parse::<usize>().map_err(|_| parse_err(1, format!("bad sites `{s}`")))?,
            ),
            _ => return Err(parse_err(1, "expected `d,<d>,sites,<n>`".into())),
        };
        let n = d.pow(n_sites as u32);
        let mut words: Vec<Vec<Complex64>> = Vec::new();
        for (no, line) in lines {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with("codeword") {
                continue;
            }
            let v: Vec<&str> = t.split(',').map(str::trim).collect();
            if v.len() != 4 {
                return Err(parse_err(no + 1, format!("expected 4 fields, got {}", v.len())));
            }
            let i: usize = v[0].parse().map_err(|_| parse_err(no + 1, format!("bad codeword `{}`", v[0])))?;
            let x: usize = v[1].parse().map_err(|_| parse_err(no + 1, format!("bad index `{}`", v[1])))?;
            let re: f64 = v[2].parse().map_err(|_| parse_err(no + 1, format!("bad number `{}`", v[2])))?;
            let im: f64 = v[3].parse().map_err(|_| parse_err(no + 1, format!("bad number `{}`", v[3])))?;
            if i == 0 || x == 0 || x > n {
                return Err(parse_err(no + 1, format!("index ({i}, {x}) out of range")));
            }
            while words.len() < i {
                words.push(vec![c(0.0, 0.0); n]);
            }
            words[i - 1][x - 1] = c(re, im);
        }
        Self::new(d, n_sites, words)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// `<x|y>`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn check_two_unitary(u: &BipartiteOperator) -> Result<()> {
    let delta = two_unitarity_defect(u);
    if delta > ENCODE_DELTA_TOL {
        return Err(Error::NotTwoUnitary { delta });
    }
    Ok(())
}

/// `|ĩ> = d^{-1/2} Σ_{jkl} T_{ijkl} |jkl>` for 0-based `i`.
pub fn encode_tensor(t: &Tensor4, i: usize) -> Vec<Complex64> {
    let d = t.d();
    let w = 1.0 / (d as f64).sqrt();
    let block = d * d * d;
    t.as_slice()[i * block..(i + 1) * block].iter().map(|z| z * w).collect()
}

/// Encodes basis state `i` (1-based) with the tensor of a verified 2-unitary.
pub fn encode(i: usize, u: &BipartiteOperator) -> Result<Vec<Complex64>> {
    check_two_unitary(u)?;
    if i == 0 || i > u.d() {
        return Err(Error::Config(format!("basis state {i} outside 1..={}", u.d())));
    }
    Ok(encode_tensor(&u.to_tensor(), i - 1))
}

/// The shortened code of all `d` basis states.
pub fn shortened_code(u: &BipartiteOperator) -> Result<CodeSpace> {
    check_two_unitary(u)?;
    let t = u.to_tensor();
    let words = (0..u.d()).map(|i| encode_tensor(&t, i)).collect();
    CodeSpace::new(u.d(), 3, words)
}

/// Worst error in a Knill-Laflamme check.
#[derive(Debug, Clone, Serialize)]
pub struct KlFailure {
    pub error: ErrorOperator,
    pub off_diagonal: f64,
    pub diagonal_spread: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KlReport {
    pub errors_checked: usize,
    pub max_off_diagonal: f64,
    pub max_diagonal_spread: f64,
    pub failures: Vec<KlFailure>,
    pub passed: bool,
}

/// For each `E`, `G_E[i][j] = <ĩ|E|j̃>` must equal `c_E I`; `c_E` is taken as
/// the mean of the diagonal. Passes iff every off-diagonal modulus and the
/// spread of the diagonal around `c_E` stay within `tol`.
pub fn kl_check(code: &CodeSpace, errors: &[ErrorOperator], tol: f64) -> KlReport {
    let k = code.dim();
    let mut report = KlReport {
        errors_checked: errors.len(),
        max_off_diagonal: 0.0,
        max_diagonal_spread: 0.0,
        failures: vec![],
        passed: true,
    };
    for e in errors {
        let images: Vec<Vec<Complex64>> = code.codewords.iter().map(|w| e.apply(w)).collect();
        let g = CMat::from_fn(k, k, |i, j| inner(&code.codewords[i], &images[j]));
        let ce: Complex64 = (0..k).map(|i| g[(i, i)]).sum::<Complex64>() / k as f64;
        let mut off: f64 = 0.0;
        let mut spread: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    spread = spread.max((g[(i, i)] - ce).norm());
                } else {
                    off = off.max(g[(i, j)].norm());
                }
            }
        }
        report.max_off_diagonal = report.max_off_diagonal.max(off);
        report.max_diagonal_spread = report.max_diagonal_spread.max(spread);
        if off > tol || spread > tol {
            report.passed = false;
            report.failures.push(KlFailure { error: e.clone(), off_diagonal: off, diagonal_spread: spread });
        }
    }
    report
}

#[derive(Debug, Clone, Serialize)]
pub struct PureCodeReport {
    pub max_weight: usize,
    pub weight1_checked: usize,
    pub weight2_checked: usize,
    pub max_expectation: f64,
    /// First failing operator, if any.
    pub first_failure: Option<ErrorOperator>,
    pub passed: bool,
}

/// Checks `<Ψ|E|Ψ> = 0` for Weyl errors `E ≠ I` of weight up to `max_weight`.
///
/// Weight one covers all four sites. Weight two covers the supports `AB`,
/// `AC`, `AD`: for a pure state the expectations on `S` vanish for every
/// error iff `ρ_S` is maximally mixed, which holds iff `ρ_{S̄}` is, so the
/// complementary pairs add nothing.
pub fn pure_code_check(psi: &FourPartyState, max_weight: usize, tol: f64) -> Result<PureCodeReport> {
    if !(1..=2).contains(&max_weight) {
        return Err(Error::Config(format!("max_weight must be 1 or 2, got {max_weight}")));
    }
    let d = psi.d();
    let v = psi.amplitudes();
    let w1 = weyl_basis(d, 4, 1, &[0, 1, 2, 3]);
    let w2 = if max_weight == 2 {
        weyl_on_supports(d, 4, &[vec![0, 1], vec![0, 2], vec![0, 3]])
    } else {
        vec![]
    };
    let mut max_exp: f64 = 0.0;
    let mut first_failure = None;
    for e in w1.iter().chain(&w2) {
        let x = inner(v, &e.apply(v)).norm();
        max_exp = max_exp.max(x);
        if x > tol && first_failure.is_none() {
            first_failure = Some(e.clone());
        }
    }
    Ok(PureCodeReport {
        max_weight,
        weight1_checked: w1.len(),
        weight2_checked: w2.len(),
        max_expectation: max_exp,
        passed: first_failure.is_none(),
        first_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ame::state_from_unitary;
    use crate::designs::builtin_permutation;

    #[test]
    fn weyl_counts() {
        assert_eq!(weyl_basis(6, 3, 1, &[0, 1, 2]).len(), 105);
        assert_eq!(weyl_basis(2, 4, 2, &[0, 1, 2, 3]).len(), 6 * 9);
        assert_eq!(weyl_on_supports(6, 4, &[vec![0, 1], vec![0, 2], vec![0, 3]]).len(), 3675);
        assert_eq!(weyl_basis(3, 2, 0, &[0, 1]), vec![ErrorOperator::identity(3, 2)]);
    }

    #[test]
    fn weyl_orthogonality_and_commutation() {
        let d = 3;
        let mut ops = vec![ErrorOperator::identity(d, 1)];
        ops.extend(weyl_basis(d, 1, 1, &[0]));
        for (i, a) in ops.iter().enumerate() {
            let ma = a.matrix();
            assert!((ma.adjoint() * &ma - CMat::identity(d, d)).norm() < 1e-12);
            for (j, b) in ops.iter().enumerate() {
                let tr = (ma.adjoint() * b.matrix()).trace();
                let want = if i == j { d as f64 } else { 0.0 };
                assert!((tr - c(want, 0.0)).norm() < 1e-12);
            }
        }
        let d = 6;
        let x = ErrorOperator::new(d, 1, &[(0, 1, 0)]).unwrap().matrix();
        let z = ErrorOperator::new(d, 1, &[(0, 0, 1)]).unwrap().matrix();
        let eta = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
        // Z X = η X Z with X|j> = |j+1>, Z|j> = η^j |j>
        assert!((&z * &x - &x * &z * eta).norm() < 1e-12);
    }

    #[test]
    fn operator_construction() {
        let e = ErrorOperator::new(4, 3, &[(2, 5, 4), (0, 1, 0), (1, 0, 0)]).unwrap();
        assert_eq!(e.factors, vec![(0, 1, 0), (2, 1, 0)]);
        assert_eq!(e.weight(), 2);
        assert!(ErrorOperator::new(4, 2, &[(0, 1, 0), (0, 0, 1)]).is_err());
        assert!(ErrorOperator::new(4, 2, &[(2, 1, 0)]).is_err());
    }

    fn p9() -> BipartiteOperator {
        builtin_permutation("P9").unwrap()
    }

    #[test]
    fn p9_codewords() {
        let w = encode(1, &p9()).unwrap();
        let nz: Vec<&Complex64> = w.iter().filter(|z| z.norm() > 0.0).collect();
        assert_eq!(nz.len(), 3);
        assert!(nz.iter().all(|z| (z.re - 1.0 / 3f64.sqrt()).abs() < 1e-15));
        let code = shortened_code(&p9()).unwrap();
        assert!(code.orthonormality_defect() < 1e-15);
        let r = kl_check(&code, &weyl_basis(3, 3, 1, &[0, 1, 2]), 1e-12);
        assert!(r.passed, "{r:?}");
        assert_eq!(r.errors_checked, 24);
        let ident = kl_check(&code, &[ErrorOperator::identity(3, 3)], 1e-12);
        assert!(ident.passed && ident.max_diagonal_spread < 1e-15);
    }

    #[test]
    fn encoding_is_linear_isometry() {
        let code = shortened_code(&p9()).unwrap();
        let coeffs = [c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)];
        let v = code.encode_vector(&coeffs).unwrap();
        let n2: f64 = coeffs.iter().map(|z| z.norm_sqr()).sum();
        assert!((inner(&v, &v).re - n2).abs() < 1e-14);
        assert!(code.encode_vector(&coeffs[..2]).is_err());
    }

    #[test]
    fn encode_rejects_non_two_unitary() {
        let p36 = builtin_permutation("P36").unwrap();
        assert!(matches!(encode(1, &p36), Err(Error::NotTwoUnitary { .. })));
        assert!(encode(4, &p9()).is_err());
    }

    #[test]
    fn corrupted_code_fails() {
        let mut code = shortened_code(&p9()).unwrap();
        // replace one codeword by a product state orthogonal to the others
        let n = code.codewords[1].len();
        let mut prod = vec![c(0.0, 0.0); n];
        let free = (0..n).find(|&x| code.codewords.iter().all(|w| w[x].norm() == 0.0)).unwrap();
        prod[free] = c(1.0, 0.0);
        code.codewords[1] = prod;
        assert!(code.orthonormality_defect() < 1e-15);
        let r = kl_check(&code, &weyl_basis(3, 3, 1, &[0, 1, 2]), 1e-6);
        assert!(!r.passed);
        assert!(!r.failures.is_empty());
    }

    #[test]
    fn pure_code_examples() {
        let psi = state_from_unitary(&p9()).unwrap();
        let r = pure_code_check(&psi, 2, 1e-12).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.weight1_checked, 32);
        assert_eq!(r.weight2_checked, 192);

        let ghz = FourPartyState::ghz(2);
        let z1 = ErrorOperator::new(2, 4, &[(0, 0, 1)]).unwrap();
        assert!(inner(ghz.amplitudes(), &z1.apply(ghz.amplitudes())).norm() < 1e-15);
        assert!(pure_code_check(&ghz, 1, 1e-12).unwrap().passed);
        assert!(!pure_code_check(&ghz, 2, 1e-12).unwrap().passed);

        let prod = FourPartyState::basis(3, [0, 0, 0, 0]);
        let r = pure_code_check(&prod, 1, 1e-12).unwrap();
        assert!(!r.passed);
        assert!((r.max_expectation - 1.0).abs() < 1e-15);
        assert!(pure_code_check(&prod, 3, 1e-12).is_err());
    }

    #[test]
    fn code_file_roundtrip() {
        let code = shortened_code(&p9()).unwrap();
        let mut buf = Vec::new();
        code.write_csv(&mut buf).unwrap();
        let back = CodeSpace::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.dim(), 3);
        for (a, b) in back.codewords.iter().zip(&code.codewords) {
            assert!(a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-15));
        }
        assert!(CodeSpace::read_csv("x\n".as_bytes()).is_err());
    }
}
