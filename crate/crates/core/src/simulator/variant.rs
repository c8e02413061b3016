use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::pipeline::Designs;

/// Common consensus realization of both algorithms: per node a state `η_i`
/// stored as an `n×r` matrix whose columns are the `r` consensus blocks,
/// driven by `η ← (I_r⊗S)η + b_i z_i + (I_r⊗1)u_i` with messages `Δ_i = (I_r⊗Γ)η_i`
/// and output `x̆_i = m·O·η_i`.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct ConsensusRealization {
    pub variant: &'static str,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub S: DMatrix<f64>,
    pub beta: DVector<f64>,
    pub Gamma: DVector<f64>,
    /// `b_i` as `n×r` matrices.
    pub inputs: Vec<DMatrix<f64>>,
    /// `O`, `n × rn`.
    pub output: DMatrix<f64>,
    /// With local replacement, `F_i` substitutes `m·F_i η_{i,i}` by `F_i ξ_i` in the output of node `i`.
    pub own: Option<Vec<DMatrix<f64>>>,
}

impl ConsensusRealization {
    pub fn message_len(&self) -> usize {
        self.r
    }

    pub fn state_len(&self) -> usize {
        self.r * self.n
    }

    /// Block `j` of `O`.
    pub fn output_block(&self, j: usize) -> DMatrix<f64> {
        self.output.columns(j * self.n, self.n).clone_owned()
    }
}

pub trait EstimatorVariant: Send + Sync {
    fn name(&self) -> &'static str;
    fn realize(&self, designs: &Designs, replace_own: bool) -> Result<ConsensusRealization>;
}

/// Algorithm 1: one consensus block per sensor, `r = m`.
pub struct Alg1;

impl EstimatorVariant for Alg1 {
    fn name(&self) -> &'static str {
        "alg1"
    }

    fn realize(&self, d: &Designs, replace_own: bool) -> Result<ConsensusRealization> {
        let (n, m) = (d.n(), d.m());
        let inputs = (0..m)
            .map(|i| {
                let mut b = DMatrix::zeros(n, m);
                b.column_mut(i).fill(1.0);
                b
            })
            .collect();
        let mut output = DMatrix::zeros(n, n * m);
        for (i, f) in d.bundle.F.iter().enumerate() {
            output.columns_mut(i * n, n).copy_from(f);
        }
        Ok(ConsensusRealization {
            variant: self.name(),
            n,
            m,
            r: m,
            S: d.bundle.S.clone(),
            beta: d.bundle.beta.clone(),
            Gamma: d.consensus.Gamma.clone(),
            inputs,
            output,
            own: replace_own.then(|| d.bundle.F.clone()),
        })
    }
}

/// Algorithm 2: reduced aggregate with one block per state, `r = n`.
pub struct Alg2;

impl EstimatorVariant for Alg2 {
    fn name(&self) -> &'static str {
        "alg2"
    }

    fn realize(&self, d: &Designs, replace_own: bool) -> Result<ConsensusRealization> {
        if replace_own {
            return Err(Error::Config("local replacement is only defined for alg1".into()));
        }
        let red = d.reduced()?;
        let (n, m) = (d.n(), d.m());
        let inputs = (0..m)
            .map(|i| DMatrix::from_column_slice(n, n, red.T.column(i).as_slice()))
            .collect();
        Ok(ConsensusRealization {
            variant: self.name(),
            n,
            m,
            r: n,
            S: d.bundle.S.clone(),
            beta: d.bundle.beta.clone(),
            Gamma: d.consensus.Gamma.clone(),
            inputs,
            output: red.H.clone(),
            own: None,
        })
    }
}

/// `alg2` when `n < m`, `alg1` otherwise.
pub struct AutoVariant;

pub fn auto_variant_name(n: usize, m: usize) -> &'static str {
    if n < m {
        "alg2"
    } else {
        "alg1"
    }
}

impl EstimatorVariant for AutoVariant {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn realize(&self, d: &Designs, replace_own: bool) -> Result<ConsensusRealization> {
        match auto_variant_name(d.n(), d.m()) {
            "alg2" if !replace_own => Alg2.realize(d, replace_own),
            _ => Alg1.realize(d, replace_own),
        }
    }
}
