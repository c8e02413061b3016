//! Rules choosing the stable part of `spec(S)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::UNSTABLE_THRESHOLD;

/// Minimum distance between a chosen stable pole and `spec(Λ)`.
pub const POLE_GAP: f64 = 1e-3;
const RETRIES: usize = 10;

pub struct PoleContext<'a> {
    pub n_stable: usize,
    pub lambda_spectrum: &'a [Complex64],
    pub unstable: &'a [Complex64],
}

impl PoleContext<'_> {
    fn admissible(&self, t: f64, chosen: &[f64]) -> bool {
        let z = Complex64::new(t, 0.0);
        t.abs() < UNSTABLE_THRESHOLD
            && self.lambda_spectrum.iter().all(|l| (l - z).norm() >= POLE_GAP)
            && self.unstable.iter().all(|u| (u - z).norm() > 1e-9)
            && chosen.iter().all(|c| (c - t).abs() > 1e-9)
    }
}

pub trait StablePoleRule: Send + Sync {
    fn name(&self) -> &'static str;
    fn stable_poles(&self, ctx: &PoleContext) -> Result<Vec<f64>>;
}

/// Evenly spaced on `[−0.4, 0.4]`, each nudged by `+0.013·k` until admissible.
pub struct UniformRule;

impl StablePoleRule for UniformRule {
    fn name(&self) -> &'static str {
        "uniform"
    }

    fn stable_poles(&self, ctx: &PoleContext) -> Result<Vec<f64>> {
        let ns = ctx.n_stable;
        let base: Vec<f64> = match ns {
            0 => Vec::new(),
            1 => vec![0.0],
            _ => (0..ns).map(|k| -0.4 + 0.8 * k as f64 / (ns - 1) as f64).collect(),
        };
        let mut chosen = Vec::with_capacity(ns);
        for b in base {
            let t = (0..=RETRIES)
                .map(|k| b + 0.013 * k as f64)
                .find(|&t| ctx.admissible(t, &chosen))
                .ok_or_else(|| Error::PoleClash(format!("no admissible pole near {b}")))?;
            chosen.push(t);
        }
        Ok(chosen)
    }
}

/// Stable poles placed next to the stable eigenvalues of Λ (moved towards the
/// origin by a small offset), which keeps `β` small when Λ has many modes.
pub struct ShiftedRule {
    pub offset: f64,
}

impl Default for ShiftedRule {
    fn default() -> Self {
        ShiftedRule { offset: 2e-3 }
    }
}

impl StablePoleRule for ShiftedRule {
    fn name(&self) -> &'static str {
        "shifted"
    }

    fn stable_poles(&self, ctx: &PoleContext) -> Result<Vec<f64>> {
        let mut lam: Vec<Complex64> = ctx.lambda_spectrum.to_vec();
        lam.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        let skip = lam.len().saturating_sub(ctx.n_stable);
        let mut chosen = Vec::with_capacity(ctx.n_stable);
        for z in &lam[skip..] {
            let v = z.re;
            let mut t = if v.abs() > self.offset {
                v - v.signum() * self.offset
            } else {
                v + self.offset
            };
            let mut k = 0;
            while !ctx.admissible(t, &chosen) {
                k += 1;
                if k > RETRIES {
                    return Err(Error::PoleClash(format!("no admissible pole near {v}")));
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                t += sign * 0.0013 * k as f64;
            }
            chosen.push(t);
        }
        Ok(chosen)
    }
}

/// User-supplied stable poles.
pub struct ExplicitRule {
    pub poles: Vec<f64>,
}

impl StablePoleRule for ExplicitRule {
    fn name(&self) -> &'static str {
        "explicit"
    }

    fn stable_poles(&self, ctx: &PoleContext) -> Result<Vec<f64>> {
        if self.poles.len() != ctx.n_stable {
            return Err(Error::Config(format!(
                "{} stable poles given, {} required",
                self.poles.len(),
                ctx.n_stable
            )));
        }
        let mut chosen = Vec::new();
        for &p in &self.poles {
            if !p.is_finite() || p.abs() >= UNSTABLE_THRESHOLD {
                return Err(Error::Config(format!("stable pole {p} is not inside the unit disc")));
            }
            if !ctx.admissible(p, &chosen) {
                return Err(Error::PoleClash(format!("pole {p} is within {POLE_GAP} of spec(Lambda) or repeated")));
            }
            chosen.push(p);
        }
        Ok(chosen)
    }
}

/// `uniform` for small state dimension, `shifted` otherwise.
pub struct AutoRule;

pub const AUTO_RULE_MAX_UNIFORM: usize = 8;

impl StablePoleRule for AutoRule {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn stable_poles(&self, ctx: &PoleContext) -> Result<Vec<f64>> {
        if ctx.lambda_spectrum.len() <= AUTO_RULE_MAX_UNIFORM {
            UniformRule.stable_poles(ctx)
        } else {
            ShiftedRule::default().stable_poles(ctx)
        }
    }
}
