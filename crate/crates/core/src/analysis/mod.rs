//! Steady-state covariance of the distributed estimator, performance ratios
//! and Monte Carlo counterparts.

mod routes;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use routes::{AutoRoute, CovarianceRoute, DenseRoute, RouteOutput, StructuredRoute, DENSE_ROUTE_MAX_DIM};

use crate::error::{Error, Result};
use crate::kalman::design_local_kf;
use crate::numerics::{self, block_diag, symmetrize};
use crate::pipeline::Designs;
use crate::registry;
use crate::simulator::{ConsensusRealization, MonteCarloStats};

/// Linear model of the deviations `x̆_i − x̂` in Laplacian eigen-coordinates.
///
/// The stable source `s = (ε_1..ε_m, xˢ)` with `ε_i = G_i x − ξ_i` obeys
/// `s⁺ = A_s s + E ν`, and the residuals are `z = C_z s + D ν`, where
/// `ν(k) = (V⁻¹w(k), v(k+1))` has covariance `N`.  Mode `j ≥ 2` of the
/// consensus states evolves as `ψ_j⁺ = M_j ψ_j + B_j z` with
/// `M_j = I_r ⊗ S̄_j`, and node `i` deviates from `x̂` by `m·O_i·Σ_j Φ_ij ψ_j`.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct ErrorDynamics {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub rounds: usize,
    pub phi: DMatrix<f64>,
    /// `S̄_j = (I − μ_j 1Γ)^{R−1} (S − μ_j 1Γ)` for `j = 2..m`.
    pub mode_a: Vec<DMatrix<f64>>,
    /// `B_j`, `rn × m`.
    pub mode_b: Vec<DMatrix<f64>>,
    pub A_s: DMatrix<f64>,
    pub E: DMatrix<f64>,
    pub C_z: DMatrix<f64>,
    pub D: DMatrix<f64>,
    pub N: DMatrix<f64>,
    /// `Λ` and `Aˢ`, the diagonal blocks of `A_s`.
    pub Lambda: DMatrix<f64>,
    pub As: DMatrix<f64>,
    pub output: DMatrix<f64>,
    pub own: Option<Vec<DMatrix<f64>>>,
    pub Ppost: DMatrix<f64>,
}

impl ErrorDynamics {
    pub fn source_dim(&self) -> usize {
        self.A_s.nrows()
    }

    /// `(m−1)·rn + mn + nˢ`.
    pub fn augmented_dim(&self) -> usize {
        self.mode_a.len() * self.r * self.n + self.source_dim()
    }

    /// `O_i`: the output map with block `i` removed under local replacement.
    pub fn node_output(&self, i: usize) -> DMatrix<f64> {
        let mut o = self.output.clone();
        if self.own.is_some() {
            o.columns_mut(i * self.n, self.n).fill(0.0);
        }
        o
    }

    /// Largest spectral radius among the mode and source blocks.
    pub fn spectral_radius(&self) -> Result<f64> {
        let mut rho = numerics::spectral_radius(&self.Lambda)?;
        if self.As.nrows() > 0 {
            rho = rho.max(numerics::spectral_radius(&self.As)?);
        }
        for a in &self.mode_a {
            rho = rho.max(numerics::spectral_radius(a)?);
        }
        Ok(rho)
    }
}

pub fn build_error_dynamics(designs: &Designs, real: &ConsensusRealization, rounds: usize) -> Result<ErrorDynamics> {
    let d = designs;
    let (n, m, r) = (real.n, real.m, real.r);
    let split = &d.split;
    let ns = split.n_stable();
    let p = m * n + ns;
    let ones = DVector::from_element(n, 1.0);
    let lambda = &d.bundle.Lambda;
    let q_split = symmetrize(&(&split.V_inv * &d.model.Q * split.V_inv.transpose()));
    let cs_as = &split.Cs * &split.As;

    let mut a_s = DMatrix::zeros(p, p);
    let mut e = DMatrix::zeros(p, n + m);
    let mut c_z = DMatrix::zeros(m, p);
    for i in 0..m {
        a_s.view_mut((i * n, i * n), (n, n)).copy_from(lambda);
        if ns > 0 {
            let coupling = -(&ones * cs_as.row(i));
            a_s.view_mut((i * n, m * n), (n, ns)).copy_from(&coupling);
        }
        let ew = &d.bundle.G[i] - &ones * split.C_split.row(i);
        e.view_mut((i * n, 0), (n, n)).copy_from(&ew);
        e.view_mut((i * n, n + i), (n, 1)).fill(-1.0);
        c_z.view_mut((i, i * n), (1, n)).copy_from(&d.bundle.beta.transpose());
    }
    if ns > 0 {
        a_s.view_mut((m * n, m * n), (ns, ns)).copy_from(&split.As);
        e.view_mut((m * n, 0), (ns, n)).copy_from(&split.J);
        c_z.view_mut((0, m * n), (m, ns)).copy_from(&cs_as);
    }
    let mut dm = DMatrix::zeros(m, n + m);
    dm.columns_mut(0, n).copy_from(&split.C_split);
    dm.columns_mut(n, m).fill_with_identity();
    let noise = block_diag(&[&q_split, &d.model.R]);

    let g = &d.graph;
    let mut mode_a = Vec::new();
    let mut mode_b = Vec::new();
    for j in 1..m {
        let mu = g.mu[j];
        let one_gamma = &ones * real.Gamma.transpose() * mu;
        let sj = &real.S - &one_gamma;
        let ej = DMatrix::<f64>::identity(n, n) - &one_gamma;
        let ebar = mat_pow(&ej, rounds - 1);
        mode_a.push(&ebar * sj);
        let mut b = DMatrix::zeros(r * n, m);
        for l in 0..m {
            let col = &ebar * &real.inputs[l] * g.phi[(l, j)];
            b.column_mut(l).copy_from_slice(col.as_slice());
        }
        mode_b.push(b);
    }
    Ok(ErrorDynamics {
        n,
        m,
        r,
        rounds,
        phi: g.phi.clone(),
        mode_a,
        mode_b,
        A_s: a_s,
        E: e,
        C_z: c_z,
        D: dm,
        N: noise,
        Lambda: lambda.clone(),
        As: split.As.clone(),
        output: real.output.clone(),
        own: real.own.clone(),
        Ppost: d.kalman.Ppost.clone(),
    })
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub route: String,
    pub variant: String,
    pub rounds: usize,
    pub augmented_dim: usize,
    pub spectral_radius: f64,
    /// Covariance of the stacked `x̆_i − x̂`.
    #[serde(with = "crate::serde_mat")]
    pub Wbar: DMatrix<f64>,
    /// Covariance of the stacked `x̆_i − x`.
    #[serde(with = "crate::serde_mat")]
    pub Wbreve: DMatrix<f64>,
    pub per_node_trace: Vec<f64>,
    pub per_node_wbar_trace: Vec<f64>,
    pub ppost_trace: f64,
    /// Stationary covariance of the augmented state (dense route only).
    #[serde(skip)]
    pub Wr: Option<DMatrix<f64>>,
}

impl CovarianceReport {
    pub fn node_block(&self, i: usize) -> DMatrix<f64> {
        let n = self.Wbreve.nrows() / self.per_node_trace.len().max(1);
        self.Wbreve.view((i * n, i * n), (n, n)).clone_owned()
    }

    pub fn wbar_trace(&self) -> f64 {
        self.Wbar.trace()
    }
}

/// `W̆ = W̄ + 11ᵀ ⊗ P` with `W̄` from the chosen route.
pub fn asymptotic_covariance(
    designs: &Designs,
    real: &ConsensusRealization,
    rounds: usize,
    route: &str,
) -> Result<CovarianceReport> {
    let dynamics = build_error_dynamics(designs, real, rounds.max(1))?;
    let rho = dynamics.spectral_radius()?;
    if rho >= numerics::UNSTABLE_THRESHOLD {
        return Err(Error::UnstableAugmented(rho));
    }
    let route = registry::covariance_routes().get(route, &())?;
    let (wbar, wr, used) = route.wbar(&dynamics)?;
    let (n, m) = (dynamics.n, dynamics.m);
    let wbar = symmetrize(&wbar);
    let wbreve = &wbar + kron_eye_ones(m, &dynamics.Ppost);
    let trace_of = |w: &DMatrix<f64>, i: usize| w.view((i * n, i * n), (n, n)).trace();
    Ok(CovarianceReport {
        route: used.to_string(),
        variant: real.variant.to_string(),
        rounds: dynamics.rounds,
        augmented_dim: dynamics.augmented_dim(),
        spectral_radius: rho,
        per_node_trace: (0..m).map(|i| trace_of(&wbreve, i)).collect(),
        per_node_wbar_trace: (0..m).map(|i| trace_of(&wbar, i)).collect(),
        ppost_trace: dynamics.Ppost.trace(),
        Wbar: wbar,
        Wbreve: wbreve,
        Wr: wr,
    })
}

/// `11ᵀ ⊗ P`.
fn kron_eye_ones(m: usize, p: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p.nrows();
    let mut out = DMatrix::zeros(m * n, m * n);
    for a in 0..m {
        for b in 0..m {
            out.view_mut((a * n, b * n), (n, n)).copy_from(p);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct SensorRatios {
    pub sensor: usize,
    /// `tr(P̂_i)/tr(P)`; absent when sensor `i` alone cannot detect the plant.
    pub rho_local: Option<f64>,
    /// `tr(P̆_i)/tr(P)`.
    pub rho_distributed: f64,
}

pub fn performance_ratios(report: &CovarianceReport, designs: &Designs) -> Result<Vec<SensorRatios>> {
    let tp = designs.kalman.Ppost.trace();
    (0..designs.m())
        .map(|i| {
            let rho_local = match design_local_kf(&designs.model, i) {
                Ok(kf) => Some(kf.Ppost.trace() / tp),
                Err(Error::NotDetectable) | Err(Error::Unstable(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(SensorRatios { sensor: i, rho_local, rho_distributed: report.per_node_trace[i] / tp })
        })
        .collect()
}

/// Mean with a batch-means standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

pub fn batch_means(samples: &[f64], batches: usize) -> Estimate {
    let t = samples.len();
    if t == 0 {
        return Estimate { mean: 0.0, se: 0.0 };
    }
    let mean = samples.iter().sum::<f64>() / t as f64;
    let b = batches.clamp(1, t);
    if b < 2 {
        return Estimate { mean, se: 0.0 };
    }
    let means: Vec<f64> = (0..b)
        .map(|k| {
            let (lo, hi) = (k * t / b, (k + 1) * t / b);
            samples[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let var = means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    Estimate { mean, se: (var / b as f64).sqrt() }
}

pub const BATCHES: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalNode {
    /// Unbiased covariance of `x̆_i − x` pooled over the window.
    #[serde(with = "crate::serde_mat")]
    pub covariance: DMatrix<f64>,
    /// Window mean of `‖x̆_i − x‖²`.
    pub mse: Estimate,
    /// Window mean of `‖x̆_i − x̂‖²`.
    pub deviation: Estimate,
    /// Window mean of `(x̆_i − x̂)ᵀ(x̂ − x)`.
    pub cross: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalReport {
    pub trials: usize,
    pub window: (usize, usize),
    pub nodes: Vec<EmpiricalNode>,
    pub kf_mse: Estimate,
    /// Sum over nodes of the deviation estimates, comparable to `tr(W̄)`.
    pub wbar_trace: Estimate,
}

pub fn empirical_covariance(stats: &MonteCarloStats) -> Result<EmpiricalReport> {
    if stats.trials < 2 {
        return Err(Error::Config("empirical covariance needs at least two trials".into()));
    }
    let col = |v: &Vec<Vec<f64>>, i: usize| v.iter().map(|row| row[i]).collect::<Vec<f64>>();
    let nodes = (0..stats.m)
        .map(|i| EmpiricalNode {
            covariance: stats.window_error[i].covariance(),
            mse: batch_means(&col(&stats.trial_node_mse, i), BATCHES),
            deviation: batch_means(&col(&stats.trial_deviation, i), BATCHES),
            cross: batch_means(&col(&stats.trial_cross, i), BATCHES),
        })
        .collect();
    let totals: Vec<f64> = stats.trial_deviation.iter().map(|row| row.iter().sum()).collect();
    Ok(EmpiricalReport {
        trials: stats.trials,
        window: stats.window,
        nodes,
        kf_mse: batch_means(&stats.trial_kf_mse, BATCHES),
        wbar_trace: batch_means(&totals, BATCHES),
    })
}

fn mat_pow(x: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(x.nrows(), x.ncols());
    for _ in 0..k {
        out = &out * x;
    }
    out
}
