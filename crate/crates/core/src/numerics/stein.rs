use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use super::{check_square, spectral_radius, symmetrize, to_complex, UNSTABLE_THRESHOLD};
use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

/// Complex Schur form `A = U T Uᴴ` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct ComplexSchur {
    pub u: CMat,
    pub t: CMat,
}

impl ComplexSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        check_square("A", a)?;
        let n = a.nrows();
        if n == 0 {
            return Ok(ComplexSchur { u: CMat::zeros(0, 0), t: CMat::zeros(0, 0) });
        }
        let iters = 1000 * n.max(10);
        let schur = Schur::try_new(to_complex(a), f64::EPSILON, iters).ok_or(Error::NoConvergence {
            what: "complex Schur decomposition",
            iterations: iters,
        })?;
        let (u, t) = schur.unpack();
        Ok(Self::from_parts(u, t))
    }

    /// Takes a unitary `u` and `t = uᴴ A u`, discarding the part below the diagonal.
    pub fn from_parts(u: CMat, mut t: CMat) -> Self {
        let n = t.nrows();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
        ComplexSchur { u, t }
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }
}

/// Solves `Y = Ta Y Tbᵀ + C` for upper-triangular `Ta`, `Tb`.
pub fn stein_triangular(ta: &CMat, tb: &CMat, c: &CMat) -> Result<CMat> {
    let (na, nb) = (ta.nrows(), tb.nrows());
    let mut y = CMat::zeros(na, nb);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut acc = DVector::<Complex64>::zeros(na);
    let mut rhs = DVector::<Complex64>::zeros(na);
    for k in (0..nb).rev() {
        rhs.copy_from(&c.column(k));
        if k + 1 < nb {
            let tail = nb - k - 1;
            acc.gemv(one, &y.columns(k + 1, tail), &tb.row(k).columns(k + 1, tail).transpose(), zero);
            rhs.gemv(one, ta, &acc, one);
        }
        let zk = tb[(k, k)];
        for i in (0..na).rev() {
            let mut s = rhs[i];
            for j in i + 1..na {
                s += zk * ta[(i, j)] * y[(j, k)];
            }
            let d = one - zk * ta[(i, i)];
            if d.norm() < 1e-14 {
                return Err(Error::Unstable(1.0));
            }
            y[(i, k)] = s / d;
        }
    }
    Ok(y)
}

/// Cached complex Schur factors of a pair `(A, B)` for repeated solves of
/// `X = A X Bᵀ + R` and `A X − X B = C`.
pub struct SteinSolver {
    a: ComplexSchur,
    b: ComplexSchur,
}

impl SteinSolver {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<Self> {
        Ok(SteinSolver { a: ComplexSchur::new(a)?, b: ComplexSchur::new(b)? })
    }

    /// Reuses the factors of `a` for both sides.
    pub fn symmetric(a: &DMatrix<f64>) -> Result<Self> {
        let f = ComplexSchur::new(a)?;
        Ok(SteinSolver { b: f.clone(), a: f })
    }

    pub fn from_schur(a: ComplexSchur, b: ComplexSchur) -> Self {
        SteinSolver { a, b }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a.dim(), self.b.dim())
    }

    /// Solves `X = A X Bᵀ + R`.
    pub fn stein(&self, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (na, nb) = self.dims();
        if r.shape() != (na, nb) {
            return Err(Error::DimensionMismatch(format!(
                "Stein right-hand side is {}x{}, expected {na}x{nb}",
                r.nrows(),
                r.ncols()
            )));
        }
        if na == 0 || nb == 0 {
            return Ok(DMatrix::zeros(na, nb));
        }
        let c = self.a.u.adjoint() * to_complex(r) * self.b.u.map(|z| z.conj());
        let y = stein_triangular(&self.a.t, &self.b.t, &c)?;
        let x = &self.a.u * y * self.b.u.transpose();
        Ok(x.map(|z| z.re))
    }

    /// Solves `A X − X B = C`.
    pub fn sylvester(&self, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (na, nb) = self.dims();
        if c.shape() != (na, nb) {
            return Err(Error::DimensionMismatch(format!(
                "Sylvester right-hand side is {}x{}, expected {na}x{nb}",
                c.nrows(),
                c.ncols()
            )));
        }
        if na == 0 || nb == 0 {
            return Ok(DMatrix::zeros(na, nb));
        }
        let (ta, tb) = (&self.a.t, &self.b.t);
        let ct = self.a.u.adjoint() * to_complex(c) * &self.b.u;
        let mut y = CMat::zeros(na, nb);
        for k in 0..nb {
            let mut rhs = ct.column(k).clone_owned();
            for l in 0..k {
                let z = tb[(l, k)];
                if z != Complex64::new(0.0, 0.0) {
                    rhs.axpy(z, &y.column(l), Complex64::new(1.0, 0.0));
                }
            }
            let zk = tb[(k, k)];
            for i in (0..na).rev() {
                let mut s = rhs[i];
                for j in i + 1..na {
                    s -= ta[(i, j)] * y[(j, k)];
                }
                let d = ta[(i, i)] - zk;
                if d.norm() < 1e-14 {
                    return Err(Error::IllConditioned {
                        what: "Sylvester equation (common eigenvalue)",
                        cond: f64::INFINITY,
                    });
                }
                y[(i, k)] = s / d;
            }
        }
        let x = &self.a.u * y * self.b.u.adjoint();
        Ok(x.map(|z| z.re))
    }
}

/// Solves `X = A X Bᵀ + R`.
pub fn solve_stein(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SteinSolver::new(a, b)?.stein(r)
}

/// Solves `A X − X B = C`.
pub fn solve_sylvester(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    SteinSolver::new(a, b)?.sylvester(c)
}

/// Discrete Lyapunov equation `W = F W Fᵀ + V` for Schur-stable `F`.
pub fn solve_dlyap(f: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_square("F", f)?;
    if v.shape() != f.shape() {
        return Err(Error::DimensionMismatch(format!(
            "V is {}x{}, F is {}x{}",
            v.nrows(),
            v.ncols(),
            f.nrows(),
            f.ncols()
        )));
    }
    let rho = spectral_radius(f)?;
    if rho >= UNSTABLE_THRESHOLD {
        return Err(Error::Unstable(rho));
    }
    let solver = SteinSolver::symmetric(f)?;
    let mut w = symmetrize(&solver.stein(v)?);
    for _ in 0..3 {
        let res = v + f * &w * f.transpose() - &w;
        if res.norm() <= 1e-12 * (1.0 + w.norm()) {
            break;
        }
        w += symmetrize(&solver.stein(&res)?);
    }
    Ok(w)
}
