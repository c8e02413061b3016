//! Lossless decomposition of the steady-state Kalman filter into `m` local
//! filters, their stable-input form and the reduced-order aggregate.

pub mod lambda;
pub mod poles;
mod reduce;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

pub use lambda::{
    AutoLambda, CompanionLambda, JordanLambda, LambdaConstruction, LambdaForm, LambdaStructure, ModalBlock,
};
pub use poles::{AutoRule, ExplicitRule, PoleContext, ShiftedRule, StablePoleRule, UniformRule, POLE_GAP};
pub use reduce::{reduce_model, ReducedBundle};

use crate::error::{Error, Result};
use crate::kalman::KalmanDesign;
use crate::numerics::{self, char_poly, cond, ctrb, SteinSolver};
use crate::plant::{NoiseGenerator, SplitModel, SystemModel};
use crate::registry;

pub const F_TOL: f64 = 1e-8;
pub const G_TOL: f64 = 1e-8;
pub const MAX_COND_F: f64 = 1e12;
pub const MAX_COND_G: f64 = 1e10;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct DecompositionOptions {
    pub lambda: String,
    pub pole_rule: String,
    /// Used by the `explicit` rule.
    pub stable_poles: Option<Vec<f64>>,
}

impl Default for DecompositionOptions {
    fn default() -> Self {
        DecompositionOptions {
            lambda: "auto".into(),
            pole_rule: "auto".into(),
            stable_poles: None,
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionBundle {
    #[serde(with = "crate::serde_mat")]
    pub Lambda: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::vector")]
    pub beta: DVector<f64>,
    #[serde(with = "crate::serde_mat")]
    pub S: DMatrix<f64>,
    #[serde(with = "crate::serde_mat::list")]
    pub F: Vec<DMatrix<f64>>,
    #[serde(with = "crate::serde_mat::list")]
    pub G: Vec<DMatrix<f64>>,
    /// Descending monic coefficients.
    pub phi_S: Vec<f64>,
    pub phi_Lambda: Vec<f64>,
    pub stable_poles: Vec<f64>,
    pub n_unstable: usize,
    pub lambda_construction: String,
    pub pole_rule: String,
    pub f_route: String,
    pub g_route: String,
    pub cond_ctrb_lambda: f64,
    pub cond_ctrb_s: f64,
}

impl DecompositionBundle {
    pub fn n(&self) -> usize {
        self.S.nrows()
    }

    pub fn m(&self) -> usize {
        self.F.len()
    }
}

pub fn build_lambda(design: &KalmanDesign, construction: &dyn LambdaConstruction) -> Result<LambdaForm> {
    let form = construction.build(&design.Acl)?;
    let n = form.n();
    let ones = DVector::from_element(n, 1.0);
    if !numerics::is_controllable(&form.lambda, &ones) {
        return Err(Error::NotControllable("(Lambda, 1)".into()));
    }
    Ok(form)
}

/// Worst normalized residuals of `FΛ = A_cl F` and `F1 = K_i` over all sensors.
pub fn f_residuals(design: &KalmanDesign, lambda: &DMatrix<f64>, f: &[DMatrix<f64>]) -> (f64, f64) {
    let ones = DVector::from_element(lambda.nrows(), 1.0);
    let mut worst = (0.0f64, 0.0f64);
    for (i, fi) in f.iter().enumerate() {
        let r1 = (fi * lambda - &design.Acl * fi).norm() / (1.0 + fi.norm());
        let ki = design.gain_column(i);
        let r2 = (fi * &ones - &ki).norm() / (1.0 + ki.norm());
        worst = (worst.0.max(r1), worst.1.max(r2));
    }
    worst
}

/// `F_i = R_Y R_X⁻¹` with `R_X = ctrb(Λ, 1)` and `R_Y = ctrb(A_cl, K_i)`.
#[allow(non_snake_case)]
pub fn build_F_explicit(design: &KalmanDesign, lambda: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = lambda.nrows();
    let rx = ctrb(lambda, &DVector::from_element(n, 1.0));
    let c = cond(&rx);
    if c > MAX_COND_F {
        return Err(Error::IllConditioned { what: "ctrb(Lambda, 1)", cond: c });
    }
    let rx_inv = rx.try_inverse().ok_or(Error::IllConditioned {
        what: "ctrb(Lambda, 1)",
        cond: f64::INFINITY,
    })?;
    Ok((0..design.K.ncols())
        .map(|i| ctrb(&design.Acl, &design.gain_column(i)) * &rx_inv)
        .collect())
}

/// Least-squares solution of `[Λᵀ⊗I − I⊗A_cl; 1ᵀ⊗I] vec(F_i) = [0; K_i]`,
/// one QR factorization shared by all sensors.
#[allow(non_snake_case)]
pub fn build_F_stacked(design: &KalmanDesign, lambda: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let n = lambda.nrows();
    let nn = n * n;
    let mut big = DMatrix::<f64>::zeros(nn + n, nn);
    for a in 0..n {
        for b in 0..n {
            // block (a, b) of Λᵀ⊗I is Λ[b, a]·I; block (a, a) of I⊗A_cl is A_cl
            let l = lambda[(b, a)];
            if l != 0.0 {
                for k in 0..n {
                    big[(a * n + k, b * n + k)] += l;
                }
            }
        }
        for r in 0..n {
            for c in 0..n {
                big[(a * n + r, a * n + c)] -= design.Acl[(r, c)];
            }
        }
        for k in 0..n {
            big[(nn + k, a * n + k)] = 1.0;
        }
    }
    let qr = big.qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    let diag_min = r.diagonal().iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if diag_min <= 1e-14 * diag_max {
        return Err(Error::IllConditioned {
            what: "stacked F system",
            cond: diag_max / diag_min,
        });
    }
    let qt = qr.q().transpose();
    let mut out = Vec::with_capacity(design.K.ncols());
    for i in 0..design.K.ncols() {
        let mut rhs = DVector::zeros(nn + n);
        rhs.rows_mut(nn, n).copy_from(&design.gain_column(i));
        let x = r
            .solve_upper_triangular(&(&qt * rhs))
            .ok_or(Error::IllConditioned { what: "stacked F system", cond: f64::INFINITY })?;
        out.push(DMatrix::from_column_slice(n, n, x.as_slice()));
    }
    Ok(out)
}

/// Explicit route when well conditioned and accurate, stacked least squares otherwise.
#[allow(non_snake_case)]
pub fn build_F(design: &KalmanDesign, lambda: &DMatrix<f64>) -> Result<(Vec<DMatrix<f64>>, &'static str)> {
    let ok = |f: &[DMatrix<f64>]| {
        let (r1, r2) = f_residuals(design, lambda, f);
        r1 <= F_TOL && r2 <= F_TOL
    };
    if let Ok(f) = build_F_explicit(design, lambda) {
        if ok(&f) {
            return Ok((f, "explicit"));
        }
    }
    let f = build_F_stacked(design, lambda)?;
    if !ok(&f) {
        let (r1, r2) = f_residuals(design, lambda, &f);
        return Err(Error::IllConditioned {
            what: "F_i construction residual",
            cond: r1.max(r2),
        });
    }
    Ok((f, "stacked"))
}

/// `spec(S)` as targets: unstable eigenvalues of the plant plus the stable poles.
#[allow(non_snake_case)]
pub fn design_S_beta(
    form: &LambdaForm,
    split: &SplitModel,
    rule: &dyn StablePoleRule,
) -> Result<(DMatrix<f64>, DVector<f64>, Vec<f64>)> {
    let n = form.n();
    let lambda_spec = numerics::eigenvalues(&form.lambda)?;
    let unstable = numerics::eigenvalues(&split.Au)?;
    let ctx = PoleContext {
        n_stable: split.n_stable(),
        lambda_spectrum: &lambda_spec,
        unstable: &unstable,
    };
    let stable = rule.stable_poles(&ctx)?;
    let mut targets = unstable.clone();
    targets.extend(stable.iter().map(|&p| Complex64::new(p, 0.0)));
    for t in &targets {
        if lambda_spec.iter().any(|l| (l - t).norm() < POLE_GAP) {
            return Err(Error::PoleClash(format!("spec(S) value {t} too close to spec(Lambda)")));
        }
    }
    let beta = form.place(&targets)?;
    let s = &form.lambda + DVector::from_element(n, 1.0) * beta.transpose();
    let got = numerics::eigenvalues(&s)?;
    let err = spectrum_mismatch(&got, &targets);
    if err > 1e-6 {
        return Err(Error::IllConditioned {
            what: "pole placement on S (spectrum mismatch)",
            cond: err,
        });
    }
    if !numerics::pbh(&s, &DMatrix::from_row_slice(1, n, beta.as_slice()), |_| true)? {
        return Err(Error::NotControllable("(S^T, beta)".into()));
    }
    Ok((s, beta, stable))
}

/// Largest relative distance after greedily matching `got` to `want`.
fn spectrum_mismatch(got: &[Complex64], want: &[Complex64]) -> f64 {
    let mut free: Vec<Complex64> = got.to_vec();
    let mut worst = 0.0f64;
    for w in want {
        let Some((k, d)) = free
            .iter()
            .enumerate()
            .map(|(k, g)| (k, (g - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
        else {
            return f64::INFINITY;
        };
        worst = worst.max(d / (1.0 + w.norm()));
        free.swap_remove(k);
    }
    worst
}

/// `T = R_Y R_X⁻¹` solving `T X = Y T`, `T p = q`, valid when the minimal
/// polynomial of `Y` divides the characteristic polynomial of `X`.
pub fn intertwine(x: &DMatrix<f64>, p: &DVector<f64>, y: &DMatrix<f64>, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    let rx = ctrb(x, p);
    let c = cond(&rx);
    if c > MAX_COND_F {
        return Err(Error::IllConditioned { what: "ctrb(X, p)", cond: c });
    }
    let mut ry = DMatrix::zeros(y.nrows(), n);
    let mut col = q.clone();
    for j in 0..n {
        ry.set_column(j, &col);
        col = y * col;
    }
    let rx_inv = rx.try_inverse().ok_or(Error::IllConditioned { what: "ctrb(X, p)", cond: f64::INFINITY })?;
    Ok(ry * rx_inv)
}

/// Worst normalized residuals of `S G = G Aᵘ` and `βᵀG = C_iᵘAᵘ` over sensors (unstable blocks only).
pub fn g_residuals(s: &DMatrix<f64>, beta: &DVector<f64>, split: &SplitModel, gu: &[DMatrix<f64>]) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for (i, g) in gu.iter().enumerate() {
        let r1 = (s * g - g * &split.Au).norm() / (1.0 + g.norm());
        let target = split.Cu.row(i) * &split.Au;
        let r2 = (beta.transpose() * g - &target).norm() / (1.0 + target.norm());
        worst = (worst.0.max(r1), worst.1.max(r2));
    }
    worst
}

#[allow(non_snake_case)]
pub fn build_Gu_krylov(s: &DMatrix<f64>, beta: &DVector<f64>, split: &SplitModel) -> Result<Vec<DMatrix<f64>>> {
    let st = s.transpose();
    let c = cond(&ctrb(&st, beta));
    if c > MAX_COND_G {
        return Err(Error::IllConditioned { what: "ctrb(S^T, beta)", cond: c });
    }
    let aut = split.Au.transpose();
    (0..split.Cu.nrows())
        .map(|i| {
            let q = (split.Cu.row(i) * &split.Au).transpose();
            intertwine(&st, beta, &aut, &q).map(|t| t.transpose())
        })
        .collect()
}

/// `Λ G − G Aᵘ = −1 C_iᵘAᵘ`, one Schur factorization for all sensors.
#[allow(non_snake_case)]
pub fn build_Gu_sylvester(lambda: &DMatrix<f64>, split: &SplitModel) -> Result<Vec<DMatrix<f64>>> {
    let n = lambda.nrows();
    let solver = SteinSolver::new(lambda, &split.Au)?;
    let ones = DVector::from_element(n, 1.0);
    (0..split.Cu.nrows())
        .map(|i| solver.sylvester(&(-(&ones * (split.Cu.row(i) * &split.Au)))))
        .collect()
}

/// `G_i = [G_iᵘ 0]`.
#[allow(non_snake_case)]
pub fn build_G(
    lambda: &DMatrix<f64>,
    s: &DMatrix<f64>,
    beta: &DVector<f64>,
    split: &SplitModel,
) -> Result<(Vec<DMatrix<f64>>, &'static str)> {
    let n = s.nrows();
    let nu = split.n_unstable();
    let m = split.Cu.nrows();
    if nu == 0 {
        return Ok((vec![DMatrix::zeros(n, n); m], "none"));
    }
    let ok = |g: &[DMatrix<f64>]| {
        let (r1, r2) = g_residuals(s, beta, split, g);
        r1 <= G_TOL && r2 <= G_TOL
    };
    let widen = |gu: Vec<DMatrix<f64>>| {
        gu.into_iter()
            .map(|g| {
                let mut full = DMatrix::zeros(n, n);
                full.columns_mut(0, nu).copy_from(&g);
                full
            })
            .collect()
    };
    if let Ok(gu) = build_Gu_krylov(s, beta, split) {
        if ok(&gu) {
            return Ok((widen(gu), "krylov"));
        }
    }
    let gu = build_Gu_sylvester(lambda, split)?;
    if !ok(&gu) {
        let (r1, r2) = g_residuals(s, beta, split, &gu);
        return Err(Error::IllConditioned {
            what: "G_i construction residual",
            cond: r1.max(r2),
        });
    }
    Ok((widen(gu), "sylvester"))
}

/// One step of a local filter in stable-input form: `z = y − βᵀξ`, `ξ⁺ = Sξ + 1z`.
pub fn step_local_filter(bundle: &DecompositionBundle, xi: &DVector<f64>, y_next: f64) -> (DVector<f64>, f64) {
    let z = y_next - bundle.beta.dot(xi);
    let mut next = &bundle.S * xi;
    next.add_scalar_mut(z);
    (next, z)
}

pub fn design_decomposition(
    model: &SystemModel,
    design: &KalmanDesign,
    split: &SplitModel,
    options: &DecompositionOptions,
) -> Result<DecompositionBundle> {
    let construction = registry::lambda_constructions().get(&options.lambda, &())?;
    let rule = registry::pole_rules().get(&options.pole_rule, options)?;
    let form = build_lambda(design, construction.as_ref())?;
    let (f, f_route) = build_F(design, &form.lambda)?;
    let (s, beta, stable) = design_S_beta(&form, split, rule.as_ref())?;
    let (g, g_route) = build_G(&form.lambda, &s, &beta, split)?;
    let n = model.n();
    let ones = DVector::from_element(n, 1.0);
    Ok(DecompositionBundle {
        phi_S: char_poly(&s)?,
        phi_Lambda: char_poly(&form.lambda)?,
        cond_ctrb_lambda: cond(&ctrb(&form.lambda, &ones)),
        cond_ctrb_s: cond(&ctrb(&s.transpose(), &beta)),
        Lambda: form.lambda,
        beta,
        S: s,
        F: f,
        G: g,
        stable_poles: stable,
        n_unstable: split.n_unstable(),
        lambda_construction: form.construction.to_string(),
        pole_rule: rule.name().to_string(),
        f_route: f_route.to_string(),
        g_route: g_route.to_string(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LosslessReport {
    pub horizon: usize,
    pub max_residual: f64,
    pub worst_step: usize,
}

/// Runs the plant, every local filter and the centralized filter side by side
/// from zero initial conditions and checks `Σ F_i ξ_i(k) = x̂(k)`.
pub fn verify_lossless(
    bundle: &DecompositionBundle,
    model: &SystemModel,
    design: &KalmanDesign,
    horizon: usize,
    seed: u64,
) -> Result<LosslessReport> {
    let n = model.n();
    let m = model.m();
    let noise = NoiseGenerator::new(model);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut x = DVector::zeros(n);
    let mut xhat = DVector::zeros(n);
    let mut xi = vec![DVector::zeros(n); m];
    let mut report = LosslessReport { horizon, max_residual: 0.0, worst_step: 0 };
    for k in 1..=horizon {
        x = &model.A * x + noise.process(&mut rng);
        let y = &model.C * &x + noise.measurement(&mut rng);
        xhat = &design.Acl * xhat + &design.K * &y;
        let mut sum = DVector::zeros(n);
        for i in 0..m {
            xi[i] = step_local_filter(bundle, &xi[i], y[i]).0;
            sum += &bundle.F[i] * &xi[i];
        }
        let res = (sum - &xhat).norm() / (1.0 + xhat.norm());
        if res > report.max_residual {
            report.max_residual = res;
            report.worst_step = k;
        }
    }
    if report.max_residual > 1e-7 {
        return Err(Error::LosslessViolation {
            step: report.worst_step,
            residual: report.max_residual,
        });
    }
    Ok(report)
}
