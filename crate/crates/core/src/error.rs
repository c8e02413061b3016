use thiserror::Error;

/// Failure modes of the design, simulation and analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("(A, C) is not detectable")]
    NotDetectable,
    #[error("(A, C) is not observable")]
    NotObservable,
    #[error("bad noise covariance: {0}")]
    BadNoise(String),
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },
    #[error("matrix is not Schur stable (spectral radius {0})")]
    Unstable(f64),
    #[error("pair is not controllable: {0}")]
    NotControllable(String),
    #[error("communication graph is disconnected (mu2 = {0:e})")]
    Disconnected(f64),
    #[error("{what} is ill-conditioned (condition number {cond:e})")]
    IllConditioned { what: &'static str, cond: f64 },
    #[error("stable pole clashes with the spectrum of Lambda: {0}")]
    PoleClash(String),
    #[error("lossless decomposition violated at step {step} (residual {residual:e})")]
    LosslessViolation { step: usize, residual: f64 },
    #[error("infeasible zeta: {0}")]
    InfeasibleZeta(String),
    #[error("consensus gain infeasible: {0}")]
    GainInfeasible(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("augmented error system is unstable (spectral radius {0})")]
    UnstableAugmented(f64),
    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io(_)
            | Error::DimensionMismatch(_)
            | Error::BadNoise(_)
            | Error::UnknownStrategy { .. } => 2,
            Error::NotDetectable
            | Error::NotObservable
            | Error::NotControllable(_)
            | Error::Disconnected(_)
            | Error::PoleClash(_)
            | Error::InfeasibleZeta(_)
            | Error::GainInfeasible(_) => 3,
            Error::NoConvergence { .. }
            | Error::Unstable(_)
            | Error::IllConditioned { .. }
            | Error::LosslessViolation { .. }
            | Error::UnstableAugmented(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
