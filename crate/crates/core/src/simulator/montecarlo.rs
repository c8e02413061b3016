use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use super::Simulator;
use crate::error::{Error, Result};

const CHUNK: u64 = 32;

/// Running first and second moments of a vector-valued sample.
#[derive(Debug, Clone, Serialize)]
pub struct Moments {
    pub count: usize,
    #[serde(with = "crate::serde_mat::vector")]
    pub sum: DVector<f64>,
    #[serde(with = "crate::serde_mat")]
    pub outer: DMatrix<f64>,
}

impl Moments {
    pub fn new(n: usize) -> Self {
        Moments { count: 0, sum: DVector::zeros(n), outer: DMatrix::zeros(n, n) }
    }

    pub fn push(&mut self, v: &DVector<f64>) {
        self.count += 1;
        self.sum += v;
        self.outer.ger(1.0, v, v, 1.0);
    }

    pub fn merge(&mut self, other: &Moments) {
        self.count += other.count;
        self.sum += &other.sum;
        self.outer += &other.outer;
    }

    pub fn mean(&self) -> DVector<f64> {
        &self.sum / self.count.max(1) as f64
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DMatrix<f64> {
        if self.count < 2 {
            return DMatrix::zeros(self.sum.len(), self.sum.len());
        }
        let c = self.count as f64;
        let mu = self.mean();
        (&self.outer - &mu * mu.transpose() * c) / (c - 1.0)
    }

    /// Raw second moment `E[vvᵀ]`.
    pub fn second_moment(&self) -> DMatrix<f64> {
        &self.outer / self.count.max(1) as f64
    }
}

/// Aggregates over trials; the steady-state window is `[window.0, window.1]`.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloStats {
    pub trials: usize,
    pub horizon: usize,
    pub n: usize,
    pub m: usize,
    pub window: (usize, usize),
    /// `mse_node[k][i]`: per-component mean squared error of `x̆_i(k) − x(k)` (sums until finalized).
    #[serde(skip)]
    pub mse_node: Vec<Vec<DVector<f64>>>,
    #[serde(skip)]
    pub mse_kf: Vec<DVector<f64>>,
    /// `x̆_i − x` over the window.
    pub window_error: Vec<Moments>,
    /// `x̆_i − x̂` over the window.
    pub window_deviation: Vec<Moments>,
    /// `x̂ − x` over the window.
    pub window_kf: Moments,
    /// Sum of `(x̆_i − x̂)(x̂ − x)ᵀ` over the window.
    #[serde(skip)]
    pub window_cross: Vec<DMatrix<f64>>,
    /// Per trial, window mean of `‖x̆_i − x‖²`.
    pub trial_node_mse: Vec<Vec<f64>>,
    /// Per trial, window mean of `‖x̆_i − x̂‖²`.
    pub trial_deviation: Vec<Vec<f64>>,
    pub trial_kf_mse: Vec<f64>,
    /// Per trial, window mean of `(x̆_i − x̂)ᵀ(x̂ − x)`.
    pub trial_cross: Vec<Vec<f64>>,
}

impl MonteCarloStats {
    fn empty(n: usize, m: usize, horizon: usize, window: (usize, usize)) -> Self {
        MonteCarloStats {
            trials: 0,
            horizon,
            n,
            m,
            window,
            mse_node: vec![vec![DVector::zeros(n); m]; horizon + 1],
            mse_kf: vec![DVector::zeros(n); horizon + 1],
            window_error: vec![Moments::new(n); m],
            window_deviation: vec![Moments::new(n); m],
            window_kf: Moments::new(n),
            window_cross: vec![DMatrix::zeros(n, n); m],
            trial_node_mse: Vec::new(),
            trial_deviation: Vec::new(),
            trial_kf_mse: Vec::new(),
            trial_cross: Vec::new(),
        }
    }

    fn merge(&mut self, other: MonteCarloStats) {
        self.trials += other.trials;
        for (a, b) in self.mse_node.iter_mut().zip(&other.mse_node) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.mse_kf.iter_mut().zip(&other.mse_kf) {
            *a += b;
        }
        for i in 0..self.m {
            self.window_error[i].merge(&other.window_error[i]);
            self.window_deviation[i].merge(&other.window_deviation[i]);
            self.window_cross[i] += &other.window_cross[i];
        }
        self.window_kf.merge(&other.window_kf);
        self.trial_node_mse.extend(other.trial_node_mse);
        self.trial_deviation.extend(other.trial_deviation);
        self.trial_kf_mse.extend(other.trial_kf_mse);
        self.trial_cross.extend(other.trial_cross);
    }

    fn finalize(&mut self) {
        let t = self.trials.max(1) as f64;
        for row in &mut self.mse_node {
            for v in row.iter_mut() {
                *v /= t;
            }
        }
        for v in &mut self.mse_kf {
            *v /= t;
        }
    }

    pub fn mse_node_total(&self, k: usize, i: usize) -> f64 {
        self.mse_node[k][i].sum()
    }

    pub fn mse_kf_total(&self, k: usize) -> f64 {
        self.mse_kf[k].sum()
    }

    /// Mean over the window of the per-node total MSE.
    pub fn steady_node_mse(&self, i: usize) -> f64 {
        let (a, b) = self.window;
        (a..=b).map(|k| self.mse_node_total(k, i)).sum::<f64>() / (b - a + 1) as f64
    }

    pub fn steady_kf_mse(&self) -> f64 {
        let (a, b) = self.window;
        (a..=b).map(|k| self.mse_kf_total(k)).sum::<f64>() / (b - a + 1) as f64
    }

    /// Window mean of `(x̆_i − x̂)(x̂ − x)ᵀ`.
    pub fn cross_moment(&self, i: usize) -> DMatrix<f64> {
        &self.window_cross[i] / self.window_kf.count.max(1) as f64
    }
}

fn run_chunk(sim: &Simulator, trials: std::ops::Range<u64>, window: (usize, usize)) -> MonteCarloStats {
    let d = sim.designs;
    let (n, m, h) = (d.n(), d.m(), sim.config.horizon);
    let mut st = MonteCarloStats::empty(n, m, h, window);
    let wlen = (window.1 - window.0 + 1) as f64;
    for trial in trials {
        let mut node_acc = vec![0.0; m];
        let mut dev_acc = vec![0.0; m];
        let mut cross_acc = vec![0.0; m];
        let mut kf_acc = 0.0;
        sim.run_with(trial, |k, x, _, xhat, nodes| {
            let kf_err = xhat - x;
            st.mse_kf[k] += kf_err.component_mul(&kf_err);
            let in_window = k >= window.0 && k <= window.1;
            if in_window {
                st.window_kf.push(&kf_err);
                kf_acc += kf_err.norm_squared();
            }
            for (i, node) in nodes.iter().enumerate() {
                let e = &node.xbreve - x;
                st.mse_node[k][i] += e.component_mul(&e);
                if in_window {
                    let dev = &node.xbreve - xhat;
                    node_acc[i] += e.norm_squared();
                    dev_acc[i] += dev.norm_squared();
                    cross_acc[i] += dev.dot(&kf_err);
                    st.window_error[i].push(&e);
                    st.window_deviation[i].push(&dev);
                    st.window_cross[i].ger(1.0, &dev, &kf_err, 1.0);
                }
            }
        });
        st.trials += 1;
        st.trial_node_mse.push(node_acc.iter().map(|v| v / wlen).collect());
        st.trial_deviation.push(dev_acc.iter().map(|v| v / wlen).collect());
        st.trial_kf_mse.push(kf_acc / wlen);
        st.trial_cross.push(cross_acc.iter().map(|v| v / wlen).collect());
    }
    st
}

/// Trials run in parallel chunks and are reduced in trial order, so results do
/// not depend on the thread count.
pub fn run_monte_carlo(sim: &Simulator, trials: usize, window: (usize, usize)) -> Result<MonteCarloStats> {
    if trials == 0 {
        return Err(Error::Config("at least one trial is required".into()));
    }
    let h = sim.config.horizon;
    if window.0 > window.1 || window.1 > h {
        return Err(Error::Config(format!("window {window:?} is not inside [0, {h}]")));
    }
    let t = trials as u64;
    let chunks: Vec<MonteCarloStats> = (0..t.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| run_chunk(sim, c * CHUNK..((c + 1) * CHUNK).min(t), window))
        .collect();
    let d = sim.designs;
    let mut total = MonteCarloStats::empty(d.n(), d.m(), h, window);
    for c in chunks {
        total.merge(c);
    }
    total.finalize();
    Ok(total)
}
