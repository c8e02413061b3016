//! Centralized steady-state Kalman filter and single-sensor baselines.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{self, solve_dare};
use crate::plant::SystemModel;

/// Steady-state filter `x̂(k+1) = Acl x̂(k) + K y(k+1)` with `Acl = A − KCA`.
///
/// `Sigma` is the one-step prediction covariance and `Ppost` the filtered
/// (posterior) error covariance `(I − KC)Σ`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct KalmanDesign {
    #[serde(with = "crate::serde_mat")]
    pub Sigma: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub Ppost: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub K: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub Acl: DMatrix<f64>,
}

#[allow(non_snake_case)]
pub fn design_from(A: &DMatrix<f64>, C: &DMatrix<f64>, Q: &DMatrix<f64>, R: &DMatrix<f64>) -> Result<KalmanDesign> {
    let n = A.nrows();
    let sigma = solve_dare(A, C, Q, R)?;
    let s = C * &sigma * C.transpose() + R;
    let ch = s.cholesky().ok_or(Error::IllConditioned {
        what: "innovation covariance",
        cond: f64::INFINITY,
    })?;
    let K = ch.solve(&(C * &sigma)).transpose();
    let ikc = DMatrix::<f64>::identity(n, n) - &K * C;
    let ppost = numerics::symmetrize(&(&ikc * &sigma));
    let acl = ikc * A;
    let rho = numerics::spectral_radius(&acl)?;
    if rho >= numerics::UNSTABLE_THRESHOLD {
        return Err(Error::Unstable(rho));
    }
    Ok(KalmanDesign { Sigma: sigma, Ppost: ppost, K, Acl: acl })
}

pub fn design_kalman(model: &SystemModel) -> Result<KalmanDesign> {
    design_from(&model.A, &model.C, &model.Q, &model.R)
}

/// Kalman filter that only uses sensor `i`.
pub fn design_local_kf(model: &SystemModel, i: usize) -> Result<KalmanDesign> {
    if i >= model.m() {
        return Err(Error::DimensionMismatch(format!("sensor {i} out of range")));
    }
    let c = model.C.rows(i, 1).clone_owned();
    let r = model.R.view((i, i), (1, 1)).clone_owned();
    design_from(&model.A, &c, &model.Q, &r)
}

pub fn step_centralized(design: &KalmanDesign, xhat: &DVector<f64>, y_next: &DVector<f64>) -> DVector<f64> {
    &design.Acl * xhat + &design.K * y_next
}

impl KalmanDesign {
    pub fn n(&self) -> usize {
        self.Acl.nrows()
    }

    pub fn gain_column(&self, i: usize) -> DVector<f64> {
        self.K.column(i).clone_owned()
    }
}
