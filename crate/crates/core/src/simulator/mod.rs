//! Plant, sensors and distributed estimators in lockstep; Monte Carlo harness.

mod export;
mod montecarlo;
mod network;
mod variant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use export::{write_mse_csv, write_trace_csv};
pub use montecarlo::{run_monte_carlo, Moments, MonteCarloStats};
pub use network::{Network, NodeState};
pub use variant::{auto_variant_name, Alg1, Alg2, AutoVariant, ConsensusRealization, EstimatorVariant};

use crate::consensus::{SyncParams, SyncStrategy};
use crate::error::{Error, Result};
use crate::kalman::step_centralized;
use crate::numerics::psd_factor;
use crate::pipeline::Designs;
use crate::plant::{NoiseGenerator, SystemModel};
use crate::registry;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct TrialConfig {
    pub horizon: usize,
    pub seed: u64,
    pub variant: String,
    pub strategy: String,
    pub drop_prob: f64,
    pub replace_own: bool,
    pub rounds: usize,
    #[serde(with = "crate::serde_mat::opt")]
    pub initial_state_cov: Option<DMatrix<f64>>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            horizon: 100,
            seed: 0,
            variant: "auto".into(),
            strategy: "static".into(),
            drop_prob: 0.0,
            replace_own: false,
            rounds: 1,
            initial_state_cov: None,
        }
    }
}

/// Plant step: `x⁺ = Ax + w`, `y⁺ = Cx⁺ + v`.
pub fn step_truth(
    model: &SystemModel,
    noise: &NoiseGenerator,
    x: &DVector<f64>,
    rng: &mut ChaCha20Rng,
) -> (DVector<f64>, DVector<f64>) {
    let x_next = &model.A * x + noise.process(rng);
    let y_next = &model.C * &x_next + noise.measurement(rng);
    (x_next, y_next)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationTrace {
    pub seed: u64,
    pub trial: u64,
    pub horizon: usize,
    pub variant: String,
    pub x: Vec<DVector<f64>>,
    pub y: Vec<DVector<f64>>,
    pub xhat: Vec<DVector<f64>>,
    /// `xbreve[k][i]`.
    pub xbreve: Vec<Vec<DVector<f64>>>,
}

impl SimulationTrace {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn node_error(&self, k: usize, i: usize) -> DVector<f64> {
        &self.xbreve[k][i] - &self.x[k]
    }
}

/// Everything fixed across the trials of one experiment.
pub struct Simulator<'a> {
    pub designs: &'a Designs,
    pub realization: ConsensusRealization,
    pub config: TrialConfig,
    strategy: Box<dyn SyncStrategy>,
    noise: NoiseGenerator,
    x0_factor: Option<DMatrix<f64>>,
}

impl<'a> Simulator<'a> {
    pub fn new(designs: &'a Designs, config: &TrialConfig) -> Result<Self> {
        let variant = registry::estimator_variants().get(&config.variant, &())?;
        let realization = variant.realize(designs, config.replace_own)?;
        let params = SyncParams { drop_prob: config.drop_prob, seed: config.seed };
        let strategy = registry::sync_strategies().get(&config.strategy, &params)?;
        if config.rounds == 0 {
            return Err(Error::Config("rounds per sample must be at least 1".into()));
        }
        let n = designs.n();
        let x0_factor = match &config.initial_state_cov {
            Some(c) if c.shape() != (n, n) => {
                return Err(Error::DimensionMismatch(format!("initial state covariance must be {n}x{n}")))
            }
            Some(c) => Some(psd_factor(c)),
            None => None,
        };
        Ok(Simulator {
            designs,
            realization,
            config: config.clone(),
            strategy,
            noise: NoiseGenerator::new(&designs.model),
            x0_factor,
        })
    }

    pub fn strategy_name(&self) -> &'static str {
        self.strategy.name()
    }

    /// Runs one trial, calling `observe(k, x, y, x̂, nodes)` for `k = 0..=horizon`.
    pub fn run_with(
        &self,
        trial: u64,
        mut observe: impl FnMut(usize, &DVector<f64>, &DVector<f64>, &DVector<f64>, &[NodeState]),
    ) {
        let d = self.designs;
        let model = &d.model;
        let mut rng = ChaCha20Rng::seed_from_u64(self.config.seed);
        rng.set_stream(2 * trial);
        let mut x = match &self.x0_factor {
            Some(l) => {
                let e = DVector::from_fn(l.ncols(), |_, _| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal));
                l * e
            }
            None => DVector::zeros(d.n()),
        };
        let y0 = &model.C * &x + self.noise.measurement(&mut rng);
        let mut xhat = DVector::zeros(d.n());
        let session = self.strategy.session(&d.graph, trial);
        let mut net = Network::new(&self.realization, session, self.config.rounds);
        observe(0, &x, &y0, &xhat, &net.nodes);
        for k in 1..=self.config.horizon {
            let (xn, y) = step_truth(model, &self.noise, &x, &mut rng);
            x = xn;
            xhat = step_centralized(&d.kalman, &xhat, &y);
            net.step(&y);
            observe(k, &x, &y, &xhat, &net.nodes);
        }
    }

    pub fn run_trial(&self, trial: u64) -> SimulationTrace {
        let h = self.config.horizon;
        let mut tr = SimulationTrace {
            seed: self.config.seed,
            trial,
            horizon: h,
            variant: self.realization.variant.to_string(),
            x: Vec::with_capacity(h + 1),
            y: Vec::with_capacity(h + 1),
            xhat: Vec::with_capacity(h + 1),
            xbreve: Vec::with_capacity(h + 1),
        };
        self.run_with(trial, |_, x, y, xhat, nodes| {
            tr.x.push(x.clone());
            tr.y.push(y.clone());
            tr.xhat.push(xhat.clone());
            tr.xbreve.push(nodes.iter().map(|n| n.xbreve.clone()).collect());
        });
        tr
    }
}
