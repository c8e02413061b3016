use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::DecompositionBundle;
use crate::error::{Error, Result};
use crate::numerics::{cond, ctrb, matrix_poly_eval};

pub const MAX_COND_REDUCE: f64 = 1e12;

/// Order-`n²` aggregate: `F_i = Σ_j H_j p_ij(S)` with `H_j = e_j βᵀ`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct ReducedBundle {
    #[serde(with = "crate::serde_mat")]
    pub H: DMatrix<f64>,
    /// Column `i` stacks `p_ij(S)·1` for `j = 1..n`.
    #[serde(with = "crate::serde_mat")]
    pub T: DMatrix<f64>,
    /// `alpha[i][j]`: ascending coefficients of `p_ij`; empty when the commutant route was used.
    pub alpha: Vec<Vec<Vec<f64>>>,
}

impl ReducedBundle {
    /// Block `j` of column `i` of `T`.
    pub fn t_block(&self, i: usize, j: usize) -> DVector<f64> {
        let n = self.H.nrows();
        DVector::from_iterator(n, self.T.view((j * n, i), (n, 1)).iter().cloned())
    }
}

pub fn reduce_model(bundle: &DecompositionBundle) -> Result<ReducedBundle> {
    let n = bundle.n();
    let m = bundle.m();
    let kb = ctrb(&bundle.S.transpose(), &bundle.beta);
    let c = cond(&kb);
    if c > MAX_COND_REDUCE {
        return reduce_commutant(bundle);
    }
    let lu = kb.lu();
    let ones = DVector::from_element(n, 1.0);
    let h = reduced_output(&bundle.beta);
    let mut t = DMatrix::zeros(n * n, m);
    let mut alpha = Vec::with_capacity(m);
    for (i, f) in bundle.F.iter().enumerate() {
        let mut per_sensor = Vec::with_capacity(n);
        for j in 0..n {
            let a = lu
                .solve(&f.row(j).transpose())
                .ok_or(Error::IllConditioned { what: "ctrb(S^T, beta)", cond: f64::INFINITY })?;
            let col = matrix_poly_eval(a.as_slice(), &bundle.S, &ones);
            t.view_mut((j * n, i), (n, 1)).copy_from_slice(col.as_slice());
            per_sensor.push(a.as_slice().to_vec());
        }
        alpha.push(per_sensor);
    }
    Ok(ReducedBundle { H: h, T: t, alpha })
}

fn reduced_output(beta: &DVector<f64>) -> DMatrix<f64> {
    let n = beta.len();
    let mut h = DMatrix::zeros(n, n * n);
    for j in 0..n {
        for l in 0..n {
            h[(j, j * n + l)] = beta[l];
        }
    }
    h
}

/// Same aggregate without the Krylov basis: `p_ij(S)` is the matrix `M`
/// commuting with `S` whose first row under `βᵀ` is row `j` of `F_i`.
fn reduce_commutant(bundle: &DecompositionBundle) -> Result<ReducedBundle> {
    let n = bundle.n();
    let m = bundle.m();
    let s = &bundle.S;
    let eye = DMatrix::<f64>::identity(n, n);
    let scale = 1.0 + s.norm();
    let mut sys = DMatrix::zeros(n * n + n, n * n);
    let comm = (eye.kronecker(s) - s.transpose().kronecker(&eye)) / scale;
    sys.rows_mut(0, n * n).copy_from(&comm);
    sys.rows_mut(n * n, n).copy_from(&eye.kronecker(&bundle.beta.transpose()));
    let svd = sys.clone().svd(true, true);
    let sv = &svd.singular_values;
    let c = sv.max() / sv.min();
    if !c.is_finite() {
        return Err(Error::IllConditioned { what: "commutant of S", cond: c });
    }
    let mut rhs = DMatrix::zeros(n * n + n, n * m);
    for (i, f) in bundle.F.iter().enumerate() {
        for j in 0..n {
            rhs.view_mut((n * n, i * n + j), (n, 1)).copy_from(&f.row(j).transpose());
        }
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|_| Error::IllConditioned { what: "commutant of S", cond: c })?;
    let resid = (&sys * &sol - &rhs).amax() / (1.0 + rhs.amax());
    if resid > 1e-8 {
        return Err(Error::IllConditioned { what: "commutant of S", cond: c });
    }
    let ones = DVector::from_element(n, 1.0);
    let mut t = DMatrix::zeros(n * n, m);
    for i in 0..m {
        for j in 0..n {
            let mm = DMatrix::from_column_slice(n, n, sol.column(i * n + j).as_slice());
            t.view_mut((j * n, i), (n, 1)).copy_from(&(mm * &ones));
        }
    }
    Ok(ReducedBundle { H: reduced_output(&bundle.beta), T: t, alpha: vec![Vec::new(); m] })
}
