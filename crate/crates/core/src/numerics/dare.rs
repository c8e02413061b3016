use nalgebra::DMatrix;

use super::{check_square, is_unstable, min_sym_eigenvalue, pbh, symmetrize};
use crate::error::{Error, Result};

const SDA_MAX_STEPS: usize = 100;
const FIXED_POINT_CAP: usize = 100_000;
const REL_TOL: f64 = 1e-12;

/// PBH test restricted to eigenvalues on or outside the unit circle.
pub fn is_detectable(a: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<bool> {
    pbh(a, c, is_unstable)
}

/// One step of the filter Riccati map.
fn riccati_map(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let asc = a * sigma * c.transpose();
    let s = c * sigma * c.transpose() + r;
    let gain = s.cholesky()?.solve(&asc.transpose());
    Some(symmetrize(&(a * sigma * a.transpose() - asc * gain + q)))
}

/// Frobenius norm of `Ric(Σ) − Σ`.
pub fn riccati_residual(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
) -> f64 {
    match riccati_map(a, c, q, r, sigma) {
        Some(next) => (next - sigma).norm(),
        None => f64::INFINITY,
    }
}

pub fn validate_noise(q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<()> {
    let qs = q.norm().max(1.0);
    if (q - q.transpose()).norm() > 1e-10 * qs {
        return Err(Error::BadNoise("Q is not symmetric".into()));
    }
    if min_sym_eigenvalue(q) < -1e-10 * qs {
        return Err(Error::BadNoise("Q is not positive semidefinite".into()));
    }
    let rs = r.norm().max(1.0);
    if (r - r.transpose()).norm() > 1e-10 * rs {
        return Err(Error::BadNoise("R is not symmetric".into()));
    }
    if r.nrows() > 0 && (min_sym_eigenvalue(r) <= 1e-12 * rs || r.clone().cholesky().is_none()) {
        return Err(Error::BadNoise("R is not positive definite".into()));
    }
    Ok(())
}

/// Steady-state prediction covariance of the Kalman filter, i.e. the
/// stabilizing solution of `Σ = AΣAᵀ − AΣCᵀ(CΣCᵀ+R)⁻¹CΣAᵀ + Q`.
///
/// Structured doubling first; plain fixed-point iteration as fallback.
pub fn solve_dare(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    check_square("A", a)?;
    let n = a.nrows();
    let m = c.nrows();
    if c.ncols() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "A {n}x{n}, C {}x{}, Q {}x{}, R {}x{}",
            c.nrows(),
            c.ncols(),
            q.nrows(),
            q.ncols(),
            r.nrows(),
            r.ncols()
        )));
    }
    validate_noise(q, r)?;
    if !is_detectable(a, c)? {
        return Err(Error::NotDetectable);
    }
    let accept = |s: &DMatrix<f64>| {
        riccati_residual(a, c, q, r, s) <= 1e-9 * (1.0 + s.norm()) && is_stabilizing(a, c, r, s)
    };

    if let Some(mut sigma) = doubling(a, c, q, r) {
        for _ in 0..50 {
            if accept(&sigma) {
                return Ok(sigma);
            }
            match riccati_map(a, c, q, r, &sigma) {
                Some(next) => sigma = next,
                None => break,
            }
        }
    }
    let mut sigma = DMatrix::<f64>::identity(n, n);
    for _ in 0..FIXED_POINT_CAP {
        let next = riccati_map(a, c, q, r, &sigma).ok_or(Error::NoConvergence {
            what: "Riccati fixed point",
            iterations: 0,
        })?;
        let delta = (&next - &sigma).norm();
        sigma = next;
        if delta <= REL_TOL * sigma.norm().max(1e-300) && accept(&sigma) {
            return Ok(sigma);
        }
    }
    Err(Error::NoConvergence {
        what: "Riccati fixed point",
        iterations: FIXED_POINT_CAP,
    })
}

fn is_stabilizing(a: &DMatrix<f64>, c: &DMatrix<f64>, r: &DMatrix<f64>, sigma: &DMatrix<f64>) -> bool {
    let s = c * sigma * c.transpose() + r;
    let Some(k) = s.cholesky().map(|ch| ch.solve(&(c * sigma)).transpose()) else {
        return false;
    };
    let acl = a - k * c * a;
    matches!(super::spectral_radius(&acl), Ok(rho) if rho < super::UNSTABLE_THRESHOLD)
}

fn doubling(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut ak = a.transpose();
    let mut gk = c.transpose() * r.clone().cholesky()?.solve(c);
    let mut hk = q.clone();
    for _ in 0..SDA_MAX_STEPS {
        let w = (&eye + &gk * &hk).lu();
        let wa = w.solve(&ak)?;
        let wg = w.solve(&gk)?;
        let h_next = symmetrize(&(&hk + ak.transpose() * &hk * &wa));
        let g_next = symmetrize(&(&gk + &ak * wg * ak.transpose()));
        let a_next = &ak * wa;
        let delta = (&h_next - &hk).norm();
        hk = h_next;
        gk = g_next;
        ak = a_next;
        if !hk.iter().all(|x| x.is_finite()) {
            return None;
        }
        if delta <= REL_TOL * hk.norm().max(1e-300) {
            return Some(hk);
        }
    }
    None
}
