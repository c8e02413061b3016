//! Dense numerical kernels: Riccati, Stein/Lyapunov and Sylvester solvers,
//! ordered Schur splitting, controllability and pole placement.

mod dare;
mod poly;
mod schur;
mod stein;

pub use dare::{is_detectable, riccati_residual, solve_dare, validate_noise};
pub use poly::{
    char_poly, matrix_poly, matrix_poly_eval, pole_place, poly_from_roots, poly_roots,
};
pub use schur::{real_schur, spectral_split, QuasiTriangular, SpectralSplit};
pub use stein::{solve_dlyap, solve_stein, solve_sylvester, stein_triangular, CMat, ComplexSchur, SteinSolver};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues with modulus at or above this value count as unstable.
pub const UNSTABLE_THRESHOLD: f64 = 1.0 - 1e-9;
/// Relative singular-value tolerance for every rank decision.
pub const RANK_TOL: f64 = 1e-10;

pub fn is_unstable(z: Complex64) -> bool {
    z.norm() >= UNSTABLE_THRESHOLD
}

/// Eigenvalues of a real square matrix, conjugate pairs adjacent.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let qt = real_schur(a)?;
    Ok(qt.eigenvalues())
}

/// Eigenvalues sorted by decreasing modulus.
pub fn spectrum_by_modulus(a: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let mut ev = eigenvalues(a)?;
    ev.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(x.im.total_cmp(&y.im)));
    Ok(ev)
}

pub fn spectral_radius(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.is_empty() {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

/// Numerical rank with tolerance `RANK_TOL * sigma_max`.
pub fn rank(a: &DMatrix<f64>) -> usize {
    let sv = singular_values(a);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Rank of a complex matrix under the same tolerance rule.
pub fn rank_complex(a: &DMatrix<Complex64>) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// 2-norm condition number; infinite when singular.
pub fn cond(a: &DMatrix<f64>) -> f64 {
    let sv = singular_values(a);
    if sv.is_empty() {
        return 1.0;
    }
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Controllability matrix `[p, Xp, ..., X^{n-1} p]`.
pub fn ctrb(x: &DMatrix<f64>, p: &DVector<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::zeros(n, n);
    let mut col = p.clone();
    for j in 0..n {
        out.set_column(j, &col);
        if j + 1 < n {
            col = x * &col;
        }
    }
    out
}

pub fn is_controllable(x: &DMatrix<f64>, p: &DVector<f64>) -> bool {
    let row = DMatrix::from_row_slice(1, p.len(), p.as_slice());
    pbh(&x.transpose(), &row, |_| true).unwrap_or(false)
}

/// PBH observability test on every eigenvalue.
pub fn is_observable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    pbh(a, c, |_| true)
}

pub(crate) fn pbh(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    select: impl Fn(Complex64) -> bool,
) -> Result<bool> {
    let n = a.nrows();
    let m = c.nrows();
    for lam in eigenvalues(a)? {
        if !select(lam) {
            continue;
        }
        let mut pb = DMatrix::<Complex64>::zeros(n + m, n);
        for i in 0..n {
            for j in 0..n {
                pb[(i, j)] = Complex64::new(a[(i, j)], 0.0);
            }
            pb[(i, i)] -= lam;
        }
        for i in 0..m {
            for j in 0..n {
                pb[(n + i, j)] = Complex64::new(c[(i, j)], 0.0);
            }
        }
        if rank_complex(&pb) < n {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_sym_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    symmetrize(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Factor `L` with `L Lᵀ = M` for a symmetric PSD matrix; eigenvalues below
/// `1e-12 * max(1, ‖M‖)` are clipped to zero.
pub fn psd_factor(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if let Some(ch) = symmetrize(m).cholesky() {
        return ch.l();
    }
    let eig = symmetrize(m).symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut l = eig.eigenvectors.clone();
    for j in 0..n {
        let ev = eig.eigenvalues[j];
        let s = if ev > 1e-12 * scale { ev.sqrt() } else { 0.0 };
        l.column_mut(j).scale_mut(s);
    }
    l
}

pub(crate) fn check_square(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

pub fn check_finite(name: &str, a: &DMatrix<f64>) -> Result<()> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    Ok(())
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let c: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, c);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        out.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
        r0 += b.nrows();
        c0 += b.ncols();
    }
    out
}

/// `I_r ⊗ X`.
pub fn kron_eye(r: usize, x: &DMatrix<f64>) -> DMatrix<f64> {
    let (p, q) = x.shape();
    let mut out = DMatrix::zeros(r * p, r * q);
    for b in 0..r {
        out.view_mut((b * p, b * q), (p, q)).copy_from(x);
    }
    out
}

pub fn to_complex(a: &DMatrix<f64>) -> DMatrix<Complex64> {
    a.map(|x| Complex64::new(x, 0.0))
}
