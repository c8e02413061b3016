//! Constructions of the non-derogatory matrix Λ sharing the characteristic
//! polynomial of `A − KCA`, together with pole placement on `S = Λ + 1βᵀ`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{self, char_poly, pole_place};

pub trait LambdaConstruction: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, acl: &DMatrix<f64>) -> Result<LambdaForm>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModalBlock {
    /// `value·I + N` with ones on the superdiagonal.
    Jordan { value: f64, size: usize },
    /// `[[re, im], [−im, re]]`.
    Rotation { re: f64, im: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaStructure {
    /// Similar to a companion matrix through `M = I + (1 − eₙ)eₙᵀ`.
    Companion,
    Modal(Vec<ModalBlock>),
}

#[derive(Debug, Clone)]
pub struct LambdaForm {
    pub lambda: DMatrix<f64>,
    pub structure: LambdaStructure,
    pub construction: &'static str,
}

impl LambdaForm {
    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    /// `β` such that `spec(Λ + 1βᵀ) = targets`.
    pub fn place(&self, targets: &[Complex64]) -> Result<DVector<f64>> {
        let n = self.n();
        match &self.structure {
            LambdaStructure::Companion => pole_place(&self.lambda, &DVector::from_element(n, 1.0), targets),
            LambdaStructure::Modal(blocks) => place_modal(blocks, targets),
        }
    }
}

pub struct CompanionLambda;

impl LambdaConstruction for CompanionLambda {
    fn name(&self) -> &'static str {
        "companion"
    }

    fn build(&self, acl: &DMatrix<f64>) -> Result<LambdaForm> {
        let coeffs = char_poly(acl)?;
        let n = acl.nrows();
        let mut ac = DMatrix::zeros(n, n);
        for i in 0..n.saturating_sub(1) {
            ac[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            ac[(n - 1, j)] = -coeffs[n - j];
        }
        let mut m = DMatrix::<f64>::identity(n, n);
        let mut m_inv = DMatrix::<f64>::identity(n, n);
        for i in 0..n.saturating_sub(1) {
            m[(i, n - 1)] = 1.0;
            m_inv[(i, n - 1)] = -1.0;
        }
        Ok(LambdaForm {
            lambda: m * ac * m_inv,
            structure: LambdaStructure::Companion,
            construction: self.name(),
        })
    }
}

/// Real Jordan form: one Jordan block per cluster of (numerically) equal real
/// eigenvalues and one rotation block per complex pair.
pub struct JordanLambda;

const CLUSTER_TOL: f64 = 1e-7;

impl LambdaConstruction for JordanLambda {
    fn name(&self) -> &'static str {
        "jordan"
    }

    fn build(&self, acl: &DMatrix<f64>) -> Result<LambdaForm> {
        let ev = numerics::eigenvalues(acl)?;
        let is_real = |z: &Complex64| z.im.abs() <= 1e-9 * z.norm().max(1.0);
        let mut reals: Vec<f64> = ev.iter().filter(|z| is_real(z)).map(|z| z.re).collect();
        reals.sort_by(f64::total_cmp);
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < reals.len() {
            let mut j = i + 1;
            while j < reals.len() && reals[j] - reals[j - 1] <= CLUSTER_TOL * reals[j].abs().max(1.0) {
                j += 1;
            }
            let value = reals[i..j].iter().sum::<f64>() / (j - i) as f64;
            blocks.push(ModalBlock::Jordan { value, size: j - i });
            i = j;
        }
        let mut pairs: Vec<Complex64> = ev.iter().filter(|z| !is_real(z) && z.im > 0.0).cloned().collect();
        pairs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        for w in pairs.windows(2) {
            if (w[0] - w[1]).norm() <= CLUSTER_TOL * w[0].norm().max(1.0) {
                return Err(Error::IllConditioned {
                    what: "Jordan construction (repeated complex pair)",
                    cond: f64::INFINITY,
                });
            }
        }
        for z in pairs {
            blocks.push(ModalBlock::Rotation { re: z.re, im: z.im });
        }
        let n = acl.nrows();
        let mut lambda = DMatrix::zeros(n, n);
        let mut o = 0;
        for b in &blocks {
            match *b {
                ModalBlock::Jordan { value, size } => {
                    for k in 0..size {
                        lambda[(o + k, o + k)] = value;
                        if k + 1 < size {
                            lambda[(o + k, o + k + 1)] = 1.0;
                        }
                    }
                    o += size;
                }
                ModalBlock::Rotation { re, im } => {
                    lambda[(o, o)] = re;
                    lambda[(o, o + 1)] = im;
                    lambda[(o + 1, o)] = -im;
                    lambda[(o + 1, o + 1)] = re;
                    o += 2;
                }
            }
        }
        if o != n {
            return Err(Error::DimensionMismatch("eigenvalue bookkeeping in Jordan construction".into()));
        }
        Ok(LambdaForm {
            lambda,
            structure: LambdaStructure::Modal(blocks),
            construction: self.name(),
        })
    }
}

/// Companion construction for small state dimension, Jordan otherwise (with
/// the companion form as fallback).
pub struct AutoLambda;

pub const AUTO_LAMBDA_MAX_COMPANION: usize = 8;

impl LambdaConstruction for AutoLambda {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn build(&self, acl: &DMatrix<f64>) -> Result<LambdaForm> {
        if acl.nrows() <= AUTO_LAMBDA_MAX_COMPANION {
            return CompanionLambda.build(acl);
        }
        JordanLambda.build(acl).or_else(|_| CompanionLambda.build(acl))
    }
}

fn modal_spectrum(blocks: &[ModalBlock]) -> Vec<(Complex64, usize)> {
    let mut out = Vec::new();
    for b in blocks {
        match *b {
            ModalBlock::Jordan { value, size } => out.push((Complex64::new(value, 0.0), size)),
            ModalBlock::Rotation { re, im } => {
                out.push((Complex64::new(re, im), 1));
                out.push((Complex64::new(re, -im), 1));
            }
        }
    }
    out
}

/// Laurent data of `φ_d(s)/Π_{μ≠λ}(s−μ)^{k}` at `λ`: its first `q` Taylor coefficients.
fn taylor_ratio(lam: Complex64, q: usize, targets: &[Complex64], spectrum: &[(Complex64, usize)]) -> Vec<Complex64> {
    let others: Vec<&(Complex64, usize)> = spectrum.iter().filter(|(mu, _)| *mu != lam).collect();
    let mut g0 = Complex64::new(1.0, 0.0);
    for &t in targets {
        g0 *= lam - t;
    }
    for &&(mu, k) in &others {
        g0 /= (lam - mu).powi(k as i32);
    }
    let mut logc = vec![Complex64::new(0.0, 0.0); q];
    for (r, lc) in logc.iter_mut().enumerate().skip(1) {
        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
        let mut acc = Complex64::new(0.0, 0.0);
        for &t in targets {
            acc += sign / (r as f64 * (lam - t).powi(r as i32));
        }
        for &&(mu, k) in &others {
            acc -= k as f64 * sign / (r as f64 * (lam - mu).powi(r as i32));
        }
        *lc = acc;
    }
    let mut series = vec![Complex64::new(0.0, 0.0); q];
    if q > 0 {
        series[0] = Complex64::new(1.0, 0.0);
    }
    for r in 1..q {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 1..=r {
            acc += logc[j] * series[r - j] * j as f64;
        }
        series[r] = acc / r as f64;
    }
    series.into_iter().map(|s| s * g0).collect()
}

/// Partial-fraction pole placement for a block-diagonal Λ in real Jordan form.
fn place_modal(blocks: &[ModalBlock], targets: &[Complex64]) -> Result<DVector<f64>> {
    let spectrum = modal_spectrum(blocks);
    let n: usize = spectrum.iter().map(|(_, k)| k).sum();
    if targets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} targets for n={n}", targets.len())));
    }
    for &t in targets {
        if spectrum.iter().any(|(mu, _)| (*mu - t).norm() == 0.0) {
            return Err(Error::PoleClash(format!("target {t} coincides with an eigenvalue of Lambda")));
        }
    }
    let mut beta = DVector::zeros(n);
    let mut o = 0;
    for b in blocks {
        match *b {
            ModalBlock::Jordan { value, size } => {
                let lam = Complex64::new(value, 0.0);
                let g = taylor_ratio(lam, size, targets, &spectrum);
                let partial = |t: usize| if t < size { -g[size - 1 - t].re } else { 0.0 };
                for t in 0..size {
                    beta[o + size - 1 - t] = partial(t) - partial(t + 1);
                }
                o += size;
            }
            ModalBlock::Rotation { re, im } => {
                let lam = Complex64::new(re, im);
                let g = taylor_ratio(lam, 1, targets, &spectrum);
                // residue at λ of −φ_d/φ_Λ; the conjugate factor is part of the spectrum
                let c = -g[0];
                beta[o] = c.re - c.im;
                beta[o + 1] = c.re + c.im;
                o += 2;
            }
        }
    }
    Ok(beta)
}
