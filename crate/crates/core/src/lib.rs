//! Distributed steady-state Kalman filtering over sensor networks.
pub mod analysis;
pub mod consensus;
pub mod decomposition;
pub mod error;
pub mod kalman;
pub mod numerics;
pub mod pipeline;
pub mod plant;
pub mod registry;
pub mod scenario;
pub mod serde_mat;
pub mod simulator;
pub use error::{Error, Result};
