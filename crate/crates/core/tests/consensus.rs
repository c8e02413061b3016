#![allow(non_snake_case)]
mod common;

use common::{example1, random_model};
use dkf::consensus::*;
use dkf::error::Error;
use dkf::numerics::min_sym_eigenvalue;
use dkf::pipeline::{design_all, DesignOptions};
use dkf::plant::{build_graph, ring_graph};
use dkf::registry::sync_strategies;
use nalgebra::{DMatrix, DVector};

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

#[test]
fn scalar_mare_closed_form() {
    // P = ζ²s²P + 1
    let (p, _) = solve_mare(&scalar(1.1), 0.5).unwrap();
    assert!((p[(0, 0)] - 1.0 / 0.6975).abs() < 1e-9);
    assert!(min_sym_eigenvalue(&mare_lhs(&scalar(1.1), &p, 0.5)) > 0.0);
}

#[test]
fn scalar_gain_on_ring() {
    let g = ring_graph(4, 1.0).unwrap();
    let (p, _) = solve_mare(&scalar(1.1), 0.5).unwrap();
    let gamma = compute_gamma(&scalar(1.1), &p, &g);
    assert!((gamma[0] - 1.1 / 3.0).abs() < 1e-12);
    let radii = verify_gain(&scalar(1.1), &gamma, &g).unwrap();
    for (r, mu) in radii.iter().zip(&g.mu[1..]) {
        assert!((r - (1.1 - mu * 1.1 / 3.0).abs()).abs() < 1e-12);
    }
}

#[test]
fn example1_condition() {
    let d = design_all(&example1(), &ring_graph(4, 1.0).unwrap(), &DesignOptions { zeta: Some(0.5), ..Default::default() })
        .unwrap();
    let c = &d.consensus;
    assert!((c.mahler - 1.1).abs() < 1e-9);
    assert!((c.bound - 3.0).abs() < 1e-12);
    assert_eq!(c.zeta, 0.5);
    assert!(c.spectral_radii.iter().all(|r| *r < 1.0));
}

#[test]
fn default_zeta_is_geometric_midpoint() {
    let check = ConditionCheck { mahler: 1.1, bound: 3.0, feasible: true };
    assert!((1.0 / default_zeta(&check) - 3.3f64.sqrt()).abs() < 1e-12);
    let open = ConditionCheck { mahler: 1.5, bound: f64::INFINITY, feasible: true };
    assert!((default_zeta(&open) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn mare_iterates_are_monotone() {
    let s = DMatrix::from_row_slice(2, 2, &[1.05, 0.3, 0.0, 0.4]);
    let mut p = DMatrix::identity(2, 2);
    for _ in 0..50 {
        let next = mare_step(&s, &p, 0.6);
        assert!(min_sym_eigenvalue(&(&next - &p)) >= -1e-10);
        p = next;
    }
}

#[test]
fn condition_violation_is_reported() {
    // mahler 4 exceeds the ring bound 3
    let err = design_consensus(&scalar(4.0), &ring_graph(4, 1.0).unwrap(), None).unwrap_err();
    assert!(matches!(err, Error::GainInfeasible(_)));
    let err = design_consensus(&scalar(1.1), &ring_graph(4, 1.0).unwrap(), Some(0.95)).unwrap_err();
    assert!(matches!(err, Error::InfeasibleZeta(_)));
    let err = solve_mare(&scalar(2.5), 0.5).unwrap_err();
    assert!(matches!(err, Error::InfeasibleZeta(_)));
}

#[test]
fn disconnected_graph_is_rejected() {
    let mut a = DMatrix::zeros(4, 4);
    a[(0, 1)] = 1.0;
    a[(1, 0)] = 1.0;
    a[(2, 3)] = 1.0;
    a[(3, 2)] = 1.0;
    assert!(matches!(build_graph(a), Err(Error::Disconnected(_))));
}

#[test]
fn random_feasible_designs_are_stable() {
    let mut designed = 0;
    for seed in 0..20u64 {
        let model = random_model(900 + seed, 3, 4);
        let g = ring_graph(4, 1.0).unwrap();
        match design_all(&model, &g, &DesignOptions::default()) {
            Ok(d) => {
                designed += 1;
                assert!(d.consensus.mahler < d.consensus.bound);
                assert!(d.consensus.spectral_radii.iter().all(|r| *r < 1.0));
            }
            Err(e) => assert!(matches!(e, Error::GainInfeasible(_) | Error::InfeasibleZeta(_)), "{e:?}"),
        }
    }
    assert!(designed > 0);
}

#[test]
fn bernoulli_links_are_symmetric_and_conserve_input() {
    let g = ring_graph(6, 1.0).unwrap();
    let params = SyncParams { drop_prob: 0.3, seed: 11 };
    let strat = sync_strategies().get("bernoulli", &params).unwrap();
    let mut session = strat.session(&g, 3);
    let msgs: Vec<DVector<f64>> = (0..6).map(|i| DVector::from_vec(vec![i as f64, (i * i) as f64 * 0.1])).collect();
    let mut dropped = 0;
    for _ in 0..200 {
        let w = session.weights().clone();
        assert_eq!(w, w.transpose());
        dropped += (&g.adjacency - &w).iter().filter(|v| **v > 0.0).count();
        let u = coupling_inputs(&w, &msgs);
        let total: DVector<f64> = u.iter().fold(DVector::zeros(2), |acc, v| acc + v);
        assert!(total.amax() < 1e-12);
    }
    let rate = dropped as f64 / (200.0 * g.adjacency.iter().filter(|v| **v > 0.0).count() as f64);
    assert!((rate - 0.3).abs() < 0.05, "{rate}");
}

#[test]
fn bernoulli_rejects_bad_probability() {
    assert!(BernoulliDrop::new(1.0, 0).is_err());
    assert!(BernoulliDrop::new(-0.1, 0).is_err());
    assert!(BernoulliDrop::new(0.0, 0).is_ok());
}
