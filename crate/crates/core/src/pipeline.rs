//! End-to-end design: Kalman filter, decomposition, reduced model and consensus gain.

use serde::{Deserialize, Serialize};

use crate::consensus::{design_consensus, ConsensusDesign};
use crate::decomposition::{design_decomposition, reduce_model, DecompositionBundle, DecompositionOptions, ReducedBundle};
use crate::error::Result;
use crate::kalman::{design_kalman, KalmanDesign};
use crate::plant::{split_model, SensorGraph, SplitModel, SystemModel};

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DesignOptions {
    pub decomposition: DecompositionOptions,
    pub zeta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Designs {
    pub model: SystemModel,
    pub graph: SensorGraph,
    pub kalman: KalmanDesign,
    pub split: SplitModel,
    pub bundle: DecompositionBundle,
    /// Absent when no well-conditioned reduced form exists.
    pub reduced: Option<ReducedBundle>,
    pub consensus: ConsensusDesign,
}

impl Designs {
    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn m(&self) -> usize {
        self.model.m()
    }

    pub fn reduced(&self) -> Result<&ReducedBundle> {
        match &self.reduced {
            Some(r) => Ok(r),
            None => Err(reduce_model(&self.bundle).err().unwrap_or(crate::Error::IllConditioned {
                what: "reduced model",
                cond: f64::INFINITY,
            })),
        }
    }
}

pub fn design_all(model: &SystemModel, graph: &SensorGraph, options: &DesignOptions) -> Result<Designs> {
    if graph.nodes() != model.m() {
        return Err(crate::Error::DimensionMismatch(format!(
            "graph has {} nodes but the plant has {} sensors",
            graph.nodes(),
            model.m()
        )));
    }
    let kalman = design_kalman(model)?;
    let split = split_model(model)?;
    let bundle = design_decomposition(model, &kalman, &split, &options.decomposition)?;
    let reduced = reduce_model(&bundle).ok();
    let consensus = design_consensus(&bundle.S, graph, options.zeta)?;
    Ok(Designs {
        model: model.clone(),
        graph: graph.clone(),
        kalman,
        split,
        bundle,
        reduced,
        consensus,
    })
}
