//! Exact arithmetic in the 40th cyclotomic field `Q(ζ)`, `ζ = e^{iπ/20}`.
//!
//! Elements are stored as 16 rational coordinates in the power basis
//! `1, ζ, …, ζ^15`, reduced modulo `Φ40(x) = x^16 - x^12 + x^8 - x^4 + 1`.
//! The field contains `ω = ζ^2 = e^{iπ/10}`, `√2 = ζ^5 + ζ^35` and
//! `√5 = 2(ζ^8 + ζ^32) + 1`, which is all the golden construction needs.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// Degree of the field over `Q`.
pub const DEGREE: usize = 16;
/// Order of the root of unity `ζ`.
pub const ORDER: i64 = 40;

/// An element of `Q(ζ)` in reduced power-basis form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycNumber {
    coeffs: Vec<BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Coefficients of `Φ40`, lowest degree first.
fn phi40() -> Vec<BigRational> {
    let mut p = vec![rat(0); DEGREE + 1];
    p[0] = rat(1);
    p[4] = rat(-1);
    p[8] = rat(1);
    p[12] = rat(-1);
    p[16] = rat(1);
    p
}

fn trim(p: &mut Vec<BigRational>) {
    while p.last().is_some_and(|x| x.is_zero()) {
        p.pop();
    }
}

/// Remainder of `a` modulo the monic polynomial `m`.
fn poly_rem(mut a: Vec<BigRational>, m: &[BigRational]) -> Vec<BigRational> {
    trim(&mut a);
    let dm = m.len() - 1;
    let lead = m[dm].clone();
    while a.len() > dm {
        let top = a.len() - 1;
        let q = &a[top] / &lead;
        for (i, mi) in m.iter().enumerate() {
            let idx = top - dm + i;
            a[idx] = &a[idx] - &q * mi;
        }
        trim(&mut a);
    }
    a
}

/// Quotient and remainder of polynomial division over `Q`.
fn poly_divmod(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    trim(&mut r);
    let db = b.len() - 1;
    if r.len() <= db {
        return (vec![], r);
    }
    let mut q = vec![rat(0); r.len() - db];
    while r.len() > db {
        let top = r.len() - 1;
        let f = &r[top] / &b[db];
        for (i, bi) in b.iter().enumerate() {
            let idx = top - db + i;
            r[idx] = &r[idx] - &f * bi;
        }
        q[top - db] = f;
        trim(&mut r);
    }
    (q, r)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![rat(0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out: Vec<BigRational> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(|| rat(0));
            let y = b.get(i).cloned().unwrap_or_else(|| rat(0));
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

impl CycNumber {
    fn from_poly(p: Vec<BigRational>) -> Self {
        let mut coeffs = poly_rem(p, &phi40());
        coeffs.resize(DEGREE, rat(0));
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![rat(0); DEGREE] }
    }

    pub fn one() -> Self {
        Self::from_rational(rat(1))
    }

    pub fn from_rational(q: BigRational) -> Self {
        let mut x = Self::zero();
        x.coeffs[0] = q;
        x
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_rational(rat(n))
    }

    /// `ζ^k` for any integer `k`.
    pub fn zeta_pow(k: i64) -> Self {
        let e = k.rem_euclid(ORDER) as usize;
        let mut p = vec![rat(0); e + 1];
        p[e] = rat(1);
        Self::from_poly(p)
    }

    /// `ω^k = ζ^{2k}`.
    pub fn omega_pow(k: i64) -> Self {
        Self::zeta_pow(2 * k)
    }

    /// Builds an element from power-basis coordinates (reduced if longer than 16).
    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        Self::from_poly(coeffs)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Complex conjugate, the automorphism `ζ ↦ ζ^{-1}`.
    pub fn conj(&self) -> Self {
        let mut p = vec![rat(0); ORDER as usize];
        for (k, q) in self.coeffs.iter().enumerate() {
            if !q.is_zero() {
                let e = (ORDER as usize - k) % ORDER as usize;
                p[e] = &p[e] + q;
            }
        }
        Self::from_poly(p)
    }

    /// Multiplicative inverse, by the extended Euclidean algorithm against `Φ40`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        // invariant: s_i * x ≡ r_i (mod Φ40)
        let mut r0 = phi40();
        let mut r1 = self.coeffs.clone();
        trim(&mut r1);
        let mut s0: Vec<BigRational> = vec![];
        let mut s1 = vec![rat(1)];
        while r1.len() != 1 {
            let (q, r) = poly_divmod(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
            if r1.is_empty() {
                // Φ40 is irreducible, so a nonzero element never shares a factor with it
                unreachable!("nonzero element has a common factor with an irreducible modulus");
            }
        }
        let k = r1[0].clone();
        let s: Vec<BigRational> = s1.into_iter().map(|x| x / &k).collect();
        Ok(Self::from_poly(s))
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..n {
            out = &out * self;
        }
        out
    }

    /// Numeric value under `ζ ↦ e^{iπ/20}`.
    pub fn embed(&self) -> Complex64 {
        let theta = std::f64::consts::PI / 20.0;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_zero())
            .map(|(k, q)| Complex64::from_polar(q.to_f64().unwrap_or(f64::NAN), theta * k as f64))
            .sum()
    }
}

impl Default for CycNumber {
    fn default() -> Self {
        Self::zero()
    }
}

impl fmt::Debug for CycNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CycNumber {
    /// Sparse form such as `1/2 + -3*z^4`; `z` stands for `ζ`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_zero())
            .map(|(k, q)| match k {
                0 => format!("{q}"),
                1 => format!("{q}*z"),
                _ => format!("{q}*z^{k}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Add for &CycNumber {
    type Output = CycNumber;
    fn add(self, rhs: &CycNumber) -> CycNumber {
        CycNumber { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &CycNumber {
    type Output = CycNumber;
    fn sub(self, rhs: &CycNumber) -> CycNumber {
        CycNumber { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        CycNumber { coeffs: self.coeffs.iter().map(|a| -a).collect() }
    }
}

impl Mul for &CycNumber {
    type Output = CycNumber;
    fn mul(self, rhs: &CycNumber) -> CycNumber {
        CycNumber::from_poly(poly_mul(&self.coeffs, &rhs.coeffs))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for CycNumber {
            type Output = CycNumber;
            fn $m(self, rhs: CycNumber) -> CycNumber {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&CycNumber> for CycNumber {
            type Output = CycNumber;
            fn $m(self, rhs: &CycNumber) -> CycNumber {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for CycNumber {
    type Output = CycNumber;
    fn neg(self) -> CycNumber {
        -&self
    }
}

impl std::iter::Sum for CycNumber {
    fn sum<I: Iterator<Item = CycNumber>>(iter: I) -> CycNumber {
        iter.fold(CycNumber::zero(), |acc, x| acc + x)
    }
}

/// The constants of the golden construction as exact field elements.
#[derive(Debug, Clone)]
pub struct GoldenConstants {
    pub omega: CycNumber,
    pub sqrt2: CycNumber,
    pub sqrt5: CycNumber,
    pub a: CycNumber,
    pub b: CycNumber,
    pub c: CycNumber,
    pub phi: CycNumber,
}

impl GoldenConstants {
    /// `ω^k`.
    pub fn omega_pow(&self, k: i64) -> CycNumber {
        CycNumber::omega_pow(k)
    }

    /// Value of an amplitude symbol `a`, `b` or `c`.
    pub fn amplitude(&self, sym: char) -> Option<&CycNumber> {
        match sym {
            'a' => Some(&self.a),
            'b' => Some(&self.b),
            'c' => Some(&self.c),
            _ => None,
        }
    }
}

/// Builds `ω`, `√2`, `√5`, `a = (√2(ω+ω̄))^{-1}`, `b = (√2(ω^3+ω̄^3))^{-1}`,
/// `c = 1/√2`, `φ = (1+√5)/2` and checks their defining identities exactly.
pub fn build_constants() -> GoldenConstants {
    let omega = CycNumber::omega_pow(1);
    let sqrt2 = CycNumber::zeta_pow(5) + CycNumber::zeta_pow(35);
    let sqrt5 = (CycNumber::zeta_pow(8) + CycNumber::zeta_pow(32)) * CycNumber::from_int(2) + CycNumber::one();
    let inv = |x: CycNumber| x.inv().expect("nonzero constant");
    let a = inv(&sqrt2 * &(&omega + &omega.conj()));
    let w3 = omega.pow(3);
    let b = inv(&sqrt2 * &(&w3 + &w3.conj()));
    let c = inv(sqrt2.clone());
    let half = CycNumber::from_rational(BigRational::new(1.into(), 2.into()));
    let phi = &(&CycNumber::one() + &sqrt5) * &half;
    let k = GoldenConstants { omega, sqrt2, sqrt5, a, b, c, phi };
    assert_eq!(k.omega.pow(20), CycNumber::one());
    assert_eq!(k.omega.pow(10), -CycNumber::one());
    assert_eq!(&k.sqrt2 * &k.sqrt2, CycNumber::from_int(2));
    assert_eq!(&k.sqrt5 * &k.sqrt5, CycNumber::from_int(5));
    assert_eq!(&(&k.a * &k.a) + &(&k.b * &k.b), half);
    assert_eq!(&k.c * &k.c, half);
    assert_eq!(&k.a * &k.phi, k.b);
    k
}

/// Outcome of one exact identity check.
#[derive(Debug, Clone, Serialize)]
pub struct RelationResult {
    pub id: String,
    pub expression: String,
    pub is_zero: bool,
    /// Power-basis coordinates of the value, as strings; empty when zero.
    pub residue: Vec<String>,
}

impl RelationResult {
    fn new(id: &str, expression: &str, value: CycNumber) -> Self {
        let is_zero = value.is_zero();
        let residue = if is_zero { vec![] } else { value.coeffs().iter().map(|q| q.to_string()).collect() };
        Self { id: id.into(), expression: expression.into(), is_zero, residue }
    }

    /// `id: EXACT ZERO` or `id: RESIDUE [q0, …, q15]`.
    pub fn line(&self) -> String {
        if self.is_zero {
            format!("{}: EXACT ZERO  ({})", self.id, self.expression)
        } else {
            format!("{}: RESIDUE [{}]  ({})", self.id, self.residue.join(", "), self.expression)
        }
    }
}

/// Row orthogonality relations of the golden construction, each of which must
/// vanish exactly, plus the two normalisation identities of `a, b, c`.
///
/// The fourth relation uses `ab(ω^10 + ω^4)`; with `ω^{-4}` in the middle term
/// the expression is nonzero (see the tests).
pub fn verify_constellations(k: &GoldenConstants) -> Vec<RelationResult> {
    let w = |e: i64| CycNumber::omega_pow(e);
    let (a, b, cc) = (&k.a, &k.b, &k.c);
    let aa = a * a;
    let bb = b * b;
    let ab = a * b;
    let bc = b * cc;
    let ac = a * cc;
    let half = CycNumber::from_rational(BigRational::new(1.into(), 2.into()));
    let one = CycNumber::one();
    vec![
        RelationResult::new("R1", "bc(1-1)", &bc * &w(0) + &bc * &w(10)),
        RelationResult::new("R2", "a^2(w^8+w^-8) + b^2(w^4+w^-4)", &aa * &(w(8) + w(-8)) + &bb * &(w(4) + w(-4))),
        RelationResult::new("R3", "ab(1+w^2+w^-8-1)", &ab * &(&one + &w(2) + w(-8) - &one)),
        RelationResult::new("R4", "ab(w^-2+w^2+w^-8+w^8)", &ab * &(w(-2) + w(2) + w(-8) + w(8))),
        RelationResult::new("R5", "a^2 w^4 + ab(w^10+w^4) + b^2 w^-4", &aa * &w(4) + &ab * &(w(10) + w(4)) + &bb * &w(-4)),
        RelationResult::new("R6", "a^2 w^-3 + ab(w^5+w^3) + b^2 w^-7", &aa * &w(-3) + &ab * &(w(5) + w(3)) + &bb * &w(-7)),
        RelationResult::new("R7", "ab(w^-4+w^-6) + bc w^5", &ab * &(w(-4) + w(-6)) + &bc * &w(5)),
        RelationResult::new("R8", "ab(w^-8+w^-2) + ac w^5", &ab * &(w(-8) + w(-2)) + &ac * &w(5)),
        RelationResult::new("R9", "a^2 + b^2 w^4 + bc w^-7", &aa + &(&bb * &w(4)) + &bc * &w(-7)),
        RelationResult::new("N1", "a^2 + b^2 - c^2", &aa + &bb - cc * cc),
        RelationResult::new("N2", "c^2 - 1/2", cc * cc - half),
    ]
}

/// The 4 x 4 block with rows `(a,a,b,b)`, `(0,0,c,-c)`, `(c,-c,0,0)`, `(b,b,-a,-a)`.
pub fn block_v(k: &GoldenConstants) -> Vec<Vec<CycNumber>> {
    let z = CycNumber::zero;
    vec![
        vec![k.a.clone(), k.a.clone(), k.b.clone(), k.b.clone()],
        vec![z(), z(), k.c.clone(), -&k.c],
        vec![k.c.clone(), -&k.c, z(), z()],
        vec![k.b.clone(), k.b.clone(), -&k.a, -&k.a],
    ]
}

/// Exact Gram matrix `M M^†` of a square matrix of field elements.
pub fn gram_exact(m: &[Vec<CycNumber>]) -> Vec<Vec<CycNumber>> {
    m.iter()
        .map(|ri| m.iter().map(|rj| ri.iter().zip(rj).map(|(x, y)| x * &y.conj()).sum()).collect())
        .collect()
}

/// True iff every entry of `M M^†` equals the identity exactly.
pub fn is_unitary_exact(m: &[Vec<CycNumber>]) -> bool {
    gram_exact(m).iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, x)| if i == j { *x == CycNumber::one() } else { x.is_zero() })
    })
}

/// `V V^† = I`, checked exactly.
pub fn verify_block_v(k: &GoldenConstants) -> bool {
    is_unitary_exact(&block_v(k))
}

/// Numeric matrix of a table of field elements.
pub fn embed_matrix(m: &[Vec<CycNumber>]) -> CMat {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    CMat::from_fn(rows, cols, |i, j| m[i][j].embed())
}
