use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::SensorGraph;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct SyncParams {
    pub drop_prob: f64,
    pub seed: u64,
}

impl Default for SyncParams {
    fn default() -> Self {
        SyncParams { drop_prob: 0.0, seed: 0 }
    }
}

/// Produces the per-round link coefficients `a_ij γ_ij(k)` used in
/// `u_i = Σ_j a_ij γ_ij(k) (Δ_j − Δ_i)`.
pub trait SyncStrategy: Send + Sync {
    fn name(&self) -> &'static str;
    fn session(&self, graph: &SensorGraph, trial: u64) -> Box<dyn LinkSession>;
}

/// Per-trial link state; one call per communication round.
pub trait LinkSession: Send {
    fn weights(&mut self) -> &DMatrix<f64>;
}

pub struct StaticStrategy;

struct StaticSession(DMatrix<f64>);

impl LinkSession for StaticSession {
    fn weights(&mut self) -> &DMatrix<f64> {
        &self.0
    }
}

impl SyncStrategy for StaticStrategy {
    fn name(&self) -> &'static str {
        "static"
    }

    fn session(&self, graph: &SensorGraph, _trial: u64) -> Box<dyn LinkSession> {
        Box::new(StaticSession(graph.adjacency.clone()))
    }
}

/// Every undirected edge is lost independently with probability `drop_prob` in each round.
pub struct BernoulliDrop {
    pub drop_prob: f64,
    pub seed: u64,
}

impl BernoulliDrop {
    pub fn new(drop_prob: f64, seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&drop_prob) {
            return Err(Error::Config(format!("drop probability {drop_prob} is not in [0, 1)")));
        }
        Ok(BernoulliDrop { drop_prob, seed })
    }
}

struct BernoulliSession {
    edges: Vec<(usize, usize, f64)>,
    drop_prob: f64,
    rng: ChaCha20Rng,
    current: DMatrix<f64>,
}

impl LinkSession for BernoulliSession {
    fn weights(&mut self) -> &DMatrix<f64> {
        for &(i, j, a) in &self.edges {
            let w = if self.rng.random::<f64>() < self.drop_prob { 0.0 } else { a };
            self.current[(i, j)] = w;
            self.current[(j, i)] = w;
        }
        &self.current
    }
}

impl SyncStrategy for BernoulliDrop {
    fn name(&self) -> &'static str {
        "bernoulli"
    }

    fn session(&self, graph: &SensorGraph, trial: u64) -> Box<dyn LinkSession> {
        let m = graph.nodes();
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                let a = graph.adjacency[(i, j)];
                if a != 0.0 {
                    edges.push((i, j, a));
                }
            }
        }
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(2 * trial + 1);
        Box::new(BernoulliSession {
            edges,
            drop_prob: self.drop_prob,
            rng,
            current: DMatrix::zeros(m, m),
        })
    }
}

/// `u_i = Σ_j w_ij (Δ_j − Δ_i)`.
pub fn coupling_inputs(weights: &DMatrix<f64>, messages: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let m = messages.len();
    (0..m)
        .map(|i| {
            let mut u = DVector::zeros(messages[i].len());
            for j in 0..m {
                let w = weights[(i, j)];
                if w != 0.0 && i != j {
                    u += (&messages[j] - &messages[i]) * w;
                }
            }
            u
        })
        .collect()
}
