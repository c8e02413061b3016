#![allow(non_snake_case)]
mod common;

use common::{example1, random_model};
use dkf::consensus::SyncStrategy;
use dkf::consensus::StaticStrategy;
use dkf::pipeline::{design_all, DesignOptions, Designs};
use dkf::plant::{complete_graph, ring_graph};
use dkf::simulator::*;
use nalgebra::{DMatrix, DVector};

fn example1_designs() -> Designs {
    design_all(&example1(), &ring_graph(4, 1.0).unwrap(), &DesignOptions { zeta: Some(0.5), ..Default::default() })
        .unwrap()
}

fn config(variant: &str, strategy: &str, drop: f64, seed: u64) -> TrialConfig {
    TrialConfig {
        horizon: 60,
        seed,
        variant: variant.into(),
        strategy: strategy.into(),
        drop_prob: drop,
        initial_state_cov: Some(DMatrix::identity(2, 2)),
        ..Default::default()
    }
}

fn average_gap(sim: &Simulator, trial: u64) -> f64 {
    let mut worst: f64 = 0.0;
    sim.run_with(trial, |_, _, _, xhat, nodes| {
        let mean = nodes.iter().fold(DVector::zeros(xhat.len()), |acc, n| acc + &n.xbreve) / nodes.len() as f64;
        worst = worst.max((mean - xhat).norm() / (1.0 + xhat.norm()));
    });
    worst
}

#[test]
fn network_average_is_the_kalman_estimate() {
    let d = example1_designs();
    for variant in ["alg1", "alg2"] {
        for (strategy, drop) in [("static", 0.0), ("bernoulli", 0.3)] {
            for seed in 0..5 {
                let sim = Simulator::new(&d, &config(variant, strategy, drop, seed)).unwrap();
                let gap = average_gap(&sim, seed);
                assert!(gap < 1e-8, "{variant} {strategy} seed {seed}: {gap:e}");
            }
        }
    }
}

#[test]
fn network_average_with_extra_rounds() {
    let d = example1_designs();
    for variant in ["alg1", "alg2"] {
        let mut cfg = config(variant, "static", 0.0, 4);
        cfg.rounds = 3;
        assert!(average_gap(&Simulator::new(&d, &cfg).unwrap(), 0) < 1e-8);
    }
}

#[test]
fn consensus_blocks_sum_to_local_filters() {
    let d = example1_designs();
    let sim = Simulator::new(&d, &config("alg1", "bernoulli", 0.2, 9)).unwrap();
    sim.run_with(2, |_, _, _, _, nodes| {
        for j in 0..nodes.len() {
            let total = nodes.iter().fold(DVector::zeros(2), |acc, n| acc + n.eta.column(j));
            assert!((total - &nodes[j].xi).amax() < 1e-8 * (1.0 + nodes[j].xi.amax()));
        }
    });
}

#[test]
fn replace_own_leaves_consensus_states_untouched() {
    let d = example1_designs();
    let plain = Simulator::new(&d, &config("alg1", "static", 0.0, 5)).unwrap();
    let mut cfg = config("alg1", "static", 0.0, 5);
    cfg.replace_own = true;
    let replaced = Simulator::new(&d, &cfg).unwrap();
    let mut etas = Vec::new();
    plain.run_with(1, |_, _, _, _, nodes| etas.push(nodes.iter().map(|n| n.eta.clone()).collect::<Vec<_>>()));
    let mut k = 0;
    let mut outputs_differ = false;
    replaced.run_with(1, |_, _, _, _, nodes| {
        for (a, b) in etas[k].iter().zip(nodes) {
            assert_eq!(a, &b.eta);
        }
        k += 1;
    });
    let t1 = plain.run_trial(1);
    let t2 = replaced.run_trial(1);
    for k in 1..t1.len() {
        outputs_differ |= (&t1.xbreve[k][0] - &t2.xbreve[k][0]).amax() > 1e-12;
    }
    assert!(outputs_differ);
    assert!(Simulator::new(&d, &TrialConfig { variant: "alg2".into(), replace_own: true, ..Default::default() }).is_err());
}

#[test]
fn zero_drop_matches_static() {
    let d = example1_designs();
    let a = Simulator::new(&d, &config("alg2", "static", 0.0, 3)).unwrap().run_trial(4);
    let b = Simulator::new(&d, &config("alg2", "bernoulli", 0.0, 3)).unwrap().run_trial(4);
    assert_eq!(a.xbreve, b.xbreve);
    assert_eq!(a.x, b.x);
}

#[test]
fn trials_are_deterministic_and_distinct() {
    let d = example1_designs();
    let sim = Simulator::new(&d, &config("alg1", "bernoulli", 0.3, 21)).unwrap();
    let a = sim.run_trial(7);
    let b = sim.run_trial(7);
    let c = sim.run_trial(8);
    assert_eq!(a.x, b.x);
    assert_eq!(a.xbreve, b.xbreve);
    assert_ne!(a.x, c.x);
    let s1 = run_monte_carlo(&sim, 40, (30, 60)).unwrap();
    let s2 = run_monte_carlo(&sim, 40, (30, 60)).unwrap();
    assert_eq!(s1.steady_node_mse(2), s2.steady_node_mse(2));
}

#[test]
fn consensus_error_decays_without_noise() {
    let d = example1_designs();
    for variant in ["alg1", "alg2"] {
        let sim = Simulator::new(&d, &config(variant, "static", 0.0, 0)).unwrap();
        let real = &sim.realization;
        let mut net = Network::new(real, StaticStrategy.session(&d.graph, 0), 1);
        let mut g = common::rng(3);
        for _ in 0..20 {
            net.step(&common::randn(&mut g, 4, 1).column(0).into_owned());
        }
        let rho = d.consensus.spectral_radii.iter().cloned().fold(0.0, f64::max);
        let spread = |net: &Network| {
            let mean = net.mean_eta();
            net.nodes.iter().map(|n| (&n.eta - &mean).norm()).fold(0.0, f64::max)
        };
        let start = spread(&net);
        let steps = 40;
        for _ in 0..steps {
            let y = DVector::from_iterator(4, net.nodes.iter().map(|n| real.beta.dot(&n.xi)));
            net.step(&y);
        }
        let end = spread(&net);
        assert!(end <= 10.0 * start * (rho + 0.05).powi(steps), "{variant}: {start} -> {end}");
    }
}

#[test]
fn message_lengths_follow_variant() {
    let d = example1_designs();
    let len = |v: &str| Simulator::new(&d, &TrialConfig { variant: v.into(), ..Default::default() }).unwrap().realization.message_len();
    assert_eq!(len("alg1"), 4);
    assert_eq!(len("alg2"), 2);
    assert_eq!(len("auto"), 2);
    assert_eq!(auto_variant_name(5, 3), "alg1");
    assert_eq!(auto_variant_name(2, 4), "alg2");
}

#[test]
fn trace_csv_shape() {
    let d = example1_designs();
    let mut cfg = config("alg2", "static", 0.0, 1);
    cfg.horizon = 10;
    let tr = Simulator::new(&d, &cfg).unwrap().run_trial(0);
    let mut buf = Vec::new();
    write_trace_csv(&tr, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12);
    assert!(lines[0].starts_with("k,x_1,x_2,xhat_1,xhat_2,node1_xbreve_1"));
    assert_eq!(lines[1].split(',').count(), 1 + 2 + 2 + 4 * 2);
}

#[test]
fn random_systems_keep_exact_average() {
    for seed in 0..6u64 {
        let (n, m) = if seed % 2 == 0 { (3, 4) } else { (2, 5) };
        let model = random_model(300 + seed, n, m);
        let graph = complete_graph(m, 1.0).unwrap();
        let Ok(d) = design_all(&model, &graph, &DesignOptions::default()) else { continue };
        for variant in ["alg1", "alg2"] {
            let cfg = TrialConfig { horizon: 80, seed, variant: variant.into(), ..Default::default() };
            let sim = Simulator::new(&d, &cfg).unwrap();
            assert!(average_gap(&sim, 0) < 1e-8, "seed {seed} {variant}");
        }
    }
}
