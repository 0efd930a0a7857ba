//! Small dense complex linear-algebra helpers shared by the other modules.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Smallest singular value below which the polar factor is treated as non-unique.
pub const SINGULAR_EPS: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Frobenius norm of `U^dagger U - I`.
pub fn gram_defect(m: &CMat) -> f64 {
    let mut g = m.adjoint() * m;
    for i in 0..g.nrows().min(g.ncols()) {
        g[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    g.norm()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Unitary factor `W` of `A = W H` computed from the SVD, together with the
/// smallest singular value of `A`. When `A` is singular the factor returned is
/// the branch selected by the SVD.
pub fn polar_factor(a: &CMat) -> (CMat, f64) {
    let svd = a.clone().svd(true, true);
    let sigma_min = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (u * v_t, sigma_min)
}

/// Nearest unitary to `a` in Frobenius norm.
///
/// Fails with [`Error::SingularInput`] when the smallest singular value is at
/// most [`SINGULAR_EPS`], since the unitary factor is then not unique.
pub fn polar_unitary(a: &CMat) -> Result<CMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "polar decomposition needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let (w, sigma_min) = polar_factor(a);
    if sigma_min <= SINGULAR_EPS {
        return Err(Error::SingularInput { sigma_min });
    }
    Ok(w)
}

/// `exp(i * t * H)` for Hermitian `H`, through its eigendecomposition.
pub fn expi_hermitian(h: &CMat, t: f64) -> CMat {
    if t == 0.0 {
        return identity(h.nrows());
    }
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = CMat::from_diagonal(&eig.eigenvalues.map(|lam| Complex64::from_polar(1.0, t * lam)));
    v * phases * v.adjoint()
}

/// Haar-distributed unitary of order `n`: QR of a complex Ginibre matrix with
/// the phases of `diag(R)` divided out.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..n {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}
