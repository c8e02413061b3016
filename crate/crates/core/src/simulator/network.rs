use nalgebra::{DMatrix, DVector};

use super::variant::ConsensusRealization;
use crate::consensus::{coupling_inputs, LinkSession};

#[derive(Debug, Clone)]
pub struct NodeState {
    pub xi: DVector<f64>,
    /// `n×r`; column `j` is block `j` of the consensus state.
    pub eta: DMatrix<f64>,
    pub xbreve: DVector<f64>,
    /// Last broadcast `Δ_i`, length `r`.
    pub last_msg: DVector<f64>,
}

impl NodeState {
    pub fn zeros(real: &ConsensusRealization) -> Self {
        NodeState {
            xi: DVector::zeros(real.n),
            eta: DMatrix::zeros(real.n, real.r),
            xbreve: DVector::zeros(real.n),
            last_msg: DVector::zeros(real.r),
        }
    }
}

/// All sensors in lockstep over one communication graph.
pub struct Network<'a> {
    pub real: &'a ConsensusRealization,
    pub nodes: Vec<NodeState>,
    session: Box<dyn LinkSession>,
    rounds: usize,
}

impl<'a> Network<'a> {
    pub fn new(real: &'a ConsensusRealization, session: Box<dyn LinkSession>, rounds: usize) -> Self {
        Network {
            real,
            nodes: (0..real.m).map(|_| NodeState::zeros(real)).collect(),
            session,
            rounds: rounds.max(1),
        }
    }

    fn broadcast(&mut self) {
        let g = &self.real.Gamma;
        for node in &mut self.nodes {
            node.last_msg = node.eta.tr_mul(g);
        }
    }

    fn inputs(&mut self) -> Vec<DVector<f64>> {
        let msgs: Vec<DVector<f64>> = self.nodes.iter().map(|n| n.last_msg.clone()).collect();
        coupling_inputs(self.session.weights(), &msgs)
    }

    /// Advances every node with the measurements `y(k+1)`.
    pub fn step(&mut self, y_next: &DVector<f64>) {
        let real = self.real;
        let mut z = vec![0.0; real.m];
        for (i, node) in self.nodes.iter_mut().enumerate() {
            z[i] = y_next[i] - real.beta.dot(&node.xi);
            node.xi = &real.S * &node.xi;
            node.xi.add_scalar_mut(z[i]);
        }
        self.broadcast();
        let u = self.inputs();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let mut eta = &real.S * &node.eta + &real.inputs[i] * z[i];
            add_rank_one(&mut eta, &u[i]);
            node.eta = eta;
        }
        for _ in 1..self.rounds {
            self.broadcast();
            let u = self.inputs();
            for (node, ui) in self.nodes.iter_mut().zip(&u) {
                add_rank_one(&mut node.eta, ui);
            }
        }
        let scale = real.m as f64;
        for (i, node) in self.nodes.iter_mut().enumerate() {
            let eta = DVector::from_column_slice(node.eta.as_slice());
            let mut out = &real.output * eta * scale;
            if let Some(own) = &real.own {
                out -= &own[i] * node.eta.column(i) * scale;
                out += &own[i] * &node.xi;
            }
            node.xbreve = out;
        }
    }

    /// Network average of the consensus states.
    pub fn mean_eta(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.real.n, self.real.r);
        for node in &self.nodes {
            s += &node.eta;
        }
        s / self.nodes.len() as f64
    }
}

/// `(I_r⊗1)u`: adds `u_j` to every entry of column `j`.
fn add_rank_one(eta: &mut DMatrix<f64>, u: &DVector<f64>) {
    for (j, mut col) in eta.column_iter_mut().enumerate() {
        col.add_scalar_mut(u[j]);
    }
}
