//! Consensus gain synthesis and synchronization strategies.

mod strategy;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use strategy::{coupling_inputs, BernoulliDrop, LinkSession, StaticStrategy, SyncParams, SyncStrategy};

use crate::error::{Error, Result};
use crate::numerics::{self, is_unstable, min_sym_eigenvalue, symmetrize, UNSTABLE_THRESHOLD};
use crate::plant::SensorGraph;

pub const MARE_TOL: f64 = 1e-11;
pub const MARE_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ConditionCheck {
    pub mahler: f64,
    /// `∞` when `μ₂ = μ_m`.
    pub bound: f64,
    pub feasible: bool,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsensusDesign {
    pub zeta: f64,
    #[serde(with = "crate::serde_mat")]
    pub P: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub Gamma: DVector<f64>,
    pub mahler: f64,
    pub bound: f64,
    pub mu: Vec<f64>,
    /// `ρ(S − μ_j 1 Γ)` for `j = 2..m`.
    pub spectral_radii: Vec<f64>,
    pub mare_iterations: usize,
    pub mare_margin: f64,
}

pub fn check_condition(s: &DMatrix<f64>, graph: &SensorGraph) -> Result<ConditionCheck> {
    let mahler: f64 = numerics::eigenvalues(s)?
        .into_iter()
        .filter(|z| is_unstable(*z))
        .map(|z| z.norm())
        .product();
    let bound = match graph.mu2() {
        None => f64::INFINITY,
        Some(mu2) => {
            let mm = graph.mu_max();
            if mm - mu2 <= 1e-12 * mm {
                f64::INFINITY
            } else {
                (mm + mu2) / (mm - mu2)
            }
        }
    };
    Ok(ConditionCheck { mahler, bound, feasible: mahler < bound })
}

/// Geometric midpoint of `(mahler, bound)` for `ζ⁻¹`; `2·mahler` for an unbounded interval.
pub fn default_zeta(check: &ConditionCheck) -> f64 {
    let inv = if check.bound.is_infinite() {
        2.0 * check.mahler.max(1.0)
    } else {
        (check.mahler * check.bound).sqrt()
    };
    1.0 / inv
}

/// One step of `P ← SᵀPS − (1−ζ²) SᵀP11ᵀPS / (1ᵀP1) + I`.
pub fn mare_step(s: &DMatrix<f64>, p: &DMatrix<f64>, zeta: f64) -> DMatrix<f64> {
    let n = s.nrows();
    let ones = DVector::from_element(n, 1.0);
    let sp = s.transpose() * p;
    let v = &sp * &ones;
    let denom = ones.dot(&(p * &ones));
    let next = &sp * s - (&v * v.transpose()) * ((1.0 - zeta * zeta) / denom) + DMatrix::identity(n, n);
    symmetrize(&next)
}

/// Left side of the modified Riccati inequality; positive definite for a valid `P`.
pub fn mare_lhs(s: &DMatrix<f64>, p: &DMatrix<f64>, zeta: f64) -> DMatrix<f64> {
    let n = s.nrows();
    let ones = DVector::from_element(n, 1.0);
    let sp = s.transpose() * p;
    let v = &sp * &ones;
    let denom = ones.dot(&(p * &ones));
    symmetrize(&(p - &sp * s + (&v * v.transpose()) * ((1.0 - zeta * zeta) / denom)))
}

pub fn solve_mare(s: &DMatrix<f64>, zeta: f64) -> Result<(DMatrix<f64>, usize)> {
    if !(zeta > 0.0 && zeta < 1.0) {
        return Err(Error::InfeasibleZeta(format!("zeta={zeta} is not in (0, 1)")));
    }
    let mahler: f64 = numerics::eigenvalues(s)?
        .into_iter()
        .filter(|z| is_unstable(*z))
        .map(|z| z.norm())
        .product();
    if zeta * mahler >= 1.0 {
        return Err(Error::InfeasibleZeta(format!("zeta*mahler = {} >= 1", zeta * mahler)));
    }
    let n = s.nrows();
    let mut p = DMatrix::<f64>::identity(n, n);
    for it in 1..=MARE_MAX_ITER {
        let next = mare_step(s, &p, zeta);
        let nn = next.norm();
        if !nn.is_finite() || nn > 1e14 {
            return Err(Error::InfeasibleZeta(format!("MARE iterates diverge for zeta={zeta}")));
        }
        let done = (&next - &p).norm() <= MARE_TOL * nn;
        p = next;
        if done {
            let margin = min_sym_eigenvalue(&mare_lhs(s, &p, zeta));
            if margin <= 1e-10 * p.norm() || min_sym_eigenvalue(&p) <= 0.0 {
                return Err(Error::InfeasibleZeta(format!("MARE inequality margin {margin:e}")));
            }
            return Ok((p, it));
        }
    }
    Err(Error::NoConvergence { what: "MARE fixed point", iterations: MARE_MAX_ITER })
}

/// `Γ = 2/(μ₂+μ_m) · 1ᵀPS / (1ᵀP1)`.
pub fn compute_gamma(s: &DMatrix<f64>, p: &DMatrix<f64>, graph: &SensorGraph) -> DVector<f64> {
    let n = s.nrows();
    let ones = DVector::from_element(n, 1.0);
    let mu2 = graph.mu2().unwrap_or(graph.mu_max());
    let scale = 2.0 / (mu2 + graph.mu_max());
    let pone = p * &ones;
    s.transpose() * &pone * (scale / ones.dot(&pone))
}

pub fn mode_matrix(s: &DMatrix<f64>, gamma: &DVector<f64>, mu: f64) -> DMatrix<f64> {
    let n = s.nrows();
    s - DVector::from_element(n, 1.0) * gamma.transpose() * mu
}

/// `ρ(S − μ_j 1 Γ)` for `j = 2..m`.
pub fn verify_gain(s: &DMatrix<f64>, gamma: &DVector<f64>, graph: &SensorGraph) -> Result<Vec<f64>> {
    let radii = graph.mu[1..]
        .iter()
        .map(|&mu| numerics::spectral_radius(&mode_matrix(s, gamma, mu)))
        .collect::<Result<Vec<_>>>()?;
    let bad: Vec<String> = radii
        .iter()
        .enumerate()
        .filter(|(_, r)| **r >= UNSTABLE_THRESHOLD)
        .map(|(j, r)| format!("j={} (rho={r:.6})", j + 2))
        .collect();
    if !bad.is_empty() {
        return Err(Error::GainInfeasible(format!("unstable consensus modes: {}", bad.join(", "))));
    }
    Ok(radii)
}

pub fn design_consensus(s: &DMatrix<f64>, graph: &SensorGraph, zeta: Option<f64>) -> Result<ConsensusDesign> {
    let check = check_condition(s, graph)?;
    if !check.feasible {
        return Err(Error::GainInfeasible(format!(
            "mahler measure {} is not below the graph bound {}",
            check.mahler, check.bound
        )));
    }
    let zeta = zeta.unwrap_or_else(|| default_zeta(&check));
    if let (Some(mu2), true) = (graph.mu2(), graph.nodes() > 1) {
        let mid = mu2 + graph.mu_max();
        for &mu in &graph.mu[1..] {
            let zj = (1.0 - 2.0 * mu / mid).abs();
            if zj > zeta + 1e-12 {
                return Err(Error::InfeasibleZeta(format!("zeta={zeta} below |1-2mu/(mu2+mum)|={zj} for mu={mu}")));
            }
        }
    }
    let (p, iterations) = solve_mare(s, zeta)?;
    let gamma = compute_gamma(s, &p, graph);
    let radii = verify_gain(s, &gamma, graph)?;
    let margin = min_sym_eigenvalue(&mare_lhs(s, &p, zeta));
    Ok(ConsensusDesign {
        zeta,
        Gamma: gamma,
        mahler: check.mahler,
        bound: check.bound,
        mu: graph.mu.clone(),
        spectral_radii: radii,
        mare_iterations: iterations,
        mare_margin: margin,
        P: p,
    })
}
