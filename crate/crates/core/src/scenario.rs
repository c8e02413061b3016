//! JSON scenario files and the two built-in examples.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decomposition::DecompositionOptions;
use crate::error::{Error, Result};
use crate::pipeline::DesignOptions;
use crate::plant::{
    build_graph, build_system, complete_graph, heat_diffusion_matrix, interpolation_row, random_geometric_layout,
    ring_graph, SensorGraph, SystemModel,
};
use crate::simulator::TrialConfig;

pub const MAX_DIM: usize = 64;

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct MatrixSystem {
    pub A: Vec<Vec<f64>>,
    pub C: Vec<Vec<f64>>,
    pub Q: Vec<Vec<f64>>,
    pub R: Vec<Vec<f64>>,
}

/// Heat diffusion on a square grid observed by randomly placed sensors;
/// noise levels are standard deviations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default)]
pub struct HeatSpec {
    pub grid: usize,
    pub alpha: f64,
    pub h: f64,
    pub sensors: usize,
    pub radius: f64,
    pub placement_seed: u64,
    pub process_noise_std: f64,
    pub measurement_noise_std: f64,
}

impl Default for HeatSpec {
    fn default() -> Self {
        HeatSpec {
            grid: 5,
            alpha: 0.2,
            h: 1.0,
            sensors: 15,
            radius: 1.5,
            placement_seed: 7,
            process_noise_std: 0.2,
            measurement_noise_std: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    Ring {
        #[serde(default = "unit")]
        weight: f64,
    },
    Complete {
        #[serde(default = "unit")]
        weight: f64,
    },
    Custom {
        adjacency: Vec<Vec<f64>>,
    },
    RandomGeometric {
        radius: f64,
        #[serde(default = "unit")]
        side: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default)]
pub struct DesignSection {
    pub zeta: Option<f64>,
    pub stable_poles: Option<Vec<f64>>,
    pub lambda: String,
    pub pole_rule: String,
    pub variant: String,
    pub replace_own: bool,
}

impl Default for DesignSection {
    fn default() -> Self {
        DesignSection {
            zeta: None,
            stable_poles: None,
            lambda: "auto".into(),
            pole_rule: "auto".into(),
            variant: "auto".into(),
            replace_own: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase", default)]
pub struct SimSection {
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub rounds_per_sample: usize,
    pub drop_prob: f64,
    pub strategy: Option<String>,
    /// Steady-state averaging window `[start, end]`; defaults to the second half of the horizon.
    pub window: Option<(usize, usize)>,
    pub initial_state_cov: Option<Vec<Vec<f64>>>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            horizon: 100,
            trials: 1000,
            seed: 0,
            rounds_per_sample: 1,
            drop_prob: 0.0,
            strategy: None,
            window: None,
            initial_state_cov: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "camelCase")]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub system: Option<MatrixSystem>,
    #[serde(default)]
    pub heat: Option<HeatSpec>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub design: DesignSection,
    #[serde(default)]
    pub sim: SimSection,
}

/// A scenario with its plant and graph instantiated.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub model: SystemModel,
    pub graph: SensorGraph,
    pub sensor_positions: Option<Vec<[f64; 2]>>,
}

fn matrix(name: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.len() > MAX_DIM || rows.iter().any(|r| r.len() > MAX_DIM) {
        return Err(Error::Config(format!("{name} exceeds {MAX_DIM}x{MAX_DIM}")));
    }
    crate::serde_mat::from_rows(rows).map_err(|e| Error::Config(format!("{name}: {e}")))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid scenario: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn design_options(&self) -> DesignOptions {
        DesignOptions {
            decomposition: DecompositionOptions {
                lambda: self.design.lambda.clone(),
                pole_rule: if self.design.stable_poles.is_some() && self.design.pole_rule == "auto" {
                    "explicit".into()
                } else {
                    self.design.pole_rule.clone()
                },
                stable_poles: self.design.stable_poles.clone(),
            },
            zeta: self.design.zeta,
        }
    }

    pub fn trial_config(&self) -> Result<TrialConfig> {
        let init = match &self.sim.initial_state_cov {
            Some(rows) => Some(matrix("initialStateCov", rows)?),
            None => None,
        };
        let strategy = match &self.sim.strategy {
            Some(s) => s.clone(),
            None if self.sim.drop_prob > 0.0 => "bernoulli".into(),
            None => "static".into(),
        };
        Ok(TrialConfig {
            horizon: self.sim.horizon,
            seed: self.sim.seed,
            variant: self.design.variant.clone(),
            strategy,
            drop_prob: self.sim.drop_prob,
            replace_own: self.design.replace_own,
            rounds: self.sim.rounds_per_sample,
            initial_state_cov: init,
        })
    }

    pub fn window(&self) -> (usize, usize) {
        self.sim.window.unwrap_or((self.sim.horizon / 2, self.sim.horizon))
    }

    pub fn instantiate(&self) -> Result<Scenario> {
        let (model, positions, implied_graph) = match (&self.system, &self.heat) {
            (Some(s), None) => {
                let model = build_system(matrix("A", &s.A)?, matrix("C", &s.C)?, matrix("Q", &s.Q)?, matrix("R", &s.R)?)?;
                (model, None, None)
            }
            (None, Some(h)) => {
                let (model, graph, pos) = heat_scenario(h)?;
                (model, Some(pos), Some(graph))
            }
            _ => return Err(Error::Config("exactly one of `system` and `heat` must be given".into())),
        };
        let graph = match (&self.graph, implied_graph) {
            (Some(g), _) => build_graph_spec(g, model.m())?,
            (None, Some(g)) => g,
            (None, None) => return Err(Error::Config("missing `graph`".into())),
        };
        if graph.nodes() != model.m() {
            return Err(Error::DimensionMismatch(format!(
                "graph has {} nodes, plant has {} sensors",
                graph.nodes(),
                model.m()
            )));
        }
        Ok(Scenario { config: self.clone(), model, graph, sensor_positions: positions })
    }
}

pub fn build_graph_spec(spec: &GraphSpec, m: usize) -> Result<SensorGraph> {
    match spec {
        GraphSpec::Ring { weight } => ring_graph(m, *weight),
        GraphSpec::Complete { weight } => complete_graph(m, *weight),
        GraphSpec::Custom { adjacency } => build_graph(matrix("adjacency", adjacency)?),
        GraphSpec::RandomGeometric { radius, side, seed } => {
            random_geometric_layout(m, *radius, *side, *seed).map(|(g, _)| g)
        }
    }
}

/// Heat plant, disk graph over the sensors and the sensor positions.
pub fn heat_scenario(h: &HeatSpec) -> Result<(SystemModel, SensorGraph, Vec<[f64; 2]>)> {
    if h.grid < 2 || h.grid * h.grid > MAX_DIM || h.sensors == 0 || h.sensors > MAX_DIM {
        return Err(Error::Config("heat grid or sensor count out of range".into()));
    }
    let side = (h.grid - 1) as f64 * h.h;
    let (graph, pos) = random_geometric_layout(h.sensors, h.radius, side, h.placement_seed)?;
    let n = h.grid * h.grid;
    let a = heat_diffusion_matrix(h.grid, h.alpha, h.h);
    let mut c = DMatrix::zeros(h.sensors, n);
    for (i, p) in pos.iter().enumerate() {
        c.set_row(i, &interpolation_row(h.grid, *p, h.h));
    }
    let q = DMatrix::identity(n, n) * h.process_noise_std.powi(2);
    let r = DMatrix::identity(h.sensors, h.sensors) * h.measurement_noise_std.powi(2);
    Ok((build_system(a, c, q, r)?, graph, pos))
}

pub fn example1() -> ScenarioConfig {
    let sys = MatrixSystem {
        A: vec![vec![0.9, 0.0], vec![0.0, 1.1]],
        C: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![1.0, -1.0]],
        Q: vec![vec![0.25, 0.0], vec![0.0, 0.25]],
        R: (0..4).map(|i| (0..4).map(|j| if i == j { 4.0 } else { 0.0 }).collect()).collect(),
    };
    ScenarioConfig {
        name: Some("example1".into()),
        system: Some(sys),
        heat: None,
        graph: Some(GraphSpec::Ring { weight: 1.0 }),
        design: DesignSection { zeta: Some(0.5), variant: "alg2".into(), ..Default::default() },
        sim: SimSection {
            horizon: 100,
            trials: 5000,
            seed: 2024,
            window: Some((50, 100)),
            initial_state_cov: Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]),
            ..Default::default()
        },
    }
}

pub fn example2() -> ScenarioConfig {
    let n = 25;
    ScenarioConfig {
        name: Some("example2".into()),
        system: None,
        heat: Some(HeatSpec::default()),
        graph: None,
        design: DesignSection {
            lambda: "jordan".into(),
            pole_rule: "shifted".into(),
            variant: "alg1".into(),
            replace_own: true,
            ..Default::default()
        },
        sim: SimSection {
            horizon: 150,
            trials: 2000,
            seed: 2024,
            window: Some((100, 150)),
            initial_state_cov: Some((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()),
            ..Default::default()
        },
    }
}

pub fn builtin(name: &str) -> Result<ScenarioConfig> {
    match name {
        "example1" => Ok(example1()),
        "example2" => Ok(example2()),
        _ => Err(Error::UnknownStrategy {
            kind: "example",
            name: name.into(),
            available: "example1, example2".into(),
        }),
    }
}
