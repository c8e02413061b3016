use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{check_square, ctrb, eigenvalues, rank};
use crate::error::{Error, Result};

fn conj_tol(z: Complex64) -> f64 {
    1e-10 * z.norm().max(1.0)
}

/// Monic real polynomial (descending coefficients) with the given roots,
/// built by convolving linear and quadratic real factors.
pub fn poly_from_roots(roots: &[Complex64]) -> Result<Vec<f64>> {
    let mut coeffs = vec![1.0];
    let mut upper = Vec::new();
    let mut lower = 0usize;
    for &z in roots {
        if z.im.abs() <= conj_tol(z) {
            coeffs = convolve(&coeffs, &[1.0, -z.re]);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower += 1;
        }
    }
    if upper.len() != lower {
        return Err(Error::Config("root set is not closed under conjugation".into()));
    }
    for z in upper {
        coeffs = convolve(&coeffs, &[1.0, -2.0 * z.re, z.norm_sqr()]);
    }
    Ok(coeffs)
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic characteristic polynomial `det(sI − X)`, descending coefficients.
pub fn char_poly(x: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_square("X", x)?;
    poly_from_roots(&eigenvalues(x)?)
}

/// Roots of a polynomial given by descending coefficients, via the companion
/// matrix followed by Newton polishing.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let lead = coeffs.first().copied().unwrap_or(0.0);
    if lead == 0.0 {
        return Err(Error::Config("leading coefficient must be nonzero".into()));
    }
    let n = coeffs.len() - 1;
    let mut comp = DMatrix::zeros(n, n);
    for j in 0..n {
        comp[(0, j)] = -coeffs[j + 1] / lead;
    }
    for i in 1..n {
        comp[(i, i - 1)] = 1.0;
    }
    let mut roots = eigenvalues(&comp)?;
    for z in roots.iter_mut() {
        for _ in 0..4 {
            let (mut p, mut dp) = (Complex64::new(coeffs[0], 0.0), Complex64::new(0.0, 0.0));
            for &c in &coeffs[1..] {
                dp = dp * *z + p;
                p = p * *z + c;
            }
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *z -= step;
        }
    }
    Ok(roots)
}

/// `Σ_l α_l S^l v` by Horner recursion (ascending coefficients).
pub fn matrix_poly_eval(alpha: &[f64], s: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for &a in alpha.iter().rev() {
        out = s * out + v * a;
    }
    out
}

/// `φ(X)` for descending coefficients, by Horner recursion on matrices.
pub fn matrix_poly(coeffs: &[f64], x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut out = DMatrix::zeros(n, n);
    for &c in coeffs {
        out = x * out + &eye * c;
    }
    out
}

/// Ackermann's formula: `β` with `spec(X + pβᵀ) = targets`.
pub fn pole_place(x: &DMatrix<f64>, p: &DVector<f64>, targets: &[Complex64]) -> Result<DVector<f64>> {
    check_square("X", x)?;
    let n = x.nrows();
    if p.len() != n || targets.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "pole placement with n={n}, |p|={}, {} targets",
            p.len(),
            targets.len()
        )));
    }
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let rx = ctrb(x, p);
    if rank(&rx) < n {
        return Err(Error::NotControllable("(X, p) in pole placement".into()));
    }
    let mut en = DVector::zeros(n);
    en[n - 1] = 1.0;
    let y = rx
        .transpose()
        .lu()
        .solve(&en)
        .ok_or_else(|| Error::NotControllable("singular controllability matrix".into()))?;
    let phi = matrix_poly(&poly_from_roots(targets)?, x);
    Ok(-(phi.transpose() * y))
}
