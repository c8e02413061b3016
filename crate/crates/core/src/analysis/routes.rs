use nalgebra::DMatrix;

use super::ErrorDynamics;
use crate::error::Result;
use crate::numerics::{kron_eye, solve_dlyap, stein_triangular, symmetrize, to_complex, CMat, ComplexSchur, SteinSolver};

/// Largest augmented dimension handled by the dense route under `auto`.
pub const DENSE_ROUTE_MAX_DIM: usize = 600;

/// `W̄`, the augmented covariance when available, and the route actually used.
pub type RouteOutput = (DMatrix<f64>, Option<DMatrix<f64>>, &'static str);

/// A method for the stationary covariance `W̄` of the stacked `x̆_i − x̂`.
pub trait CovarianceRoute: Send + Sync {
    fn name(&self) -> &'static str;
    fn wbar(&self, dynamics: &ErrorDynamics) -> Result<RouteOutput>;
}

/// One Lyapunov equation for the full augmented system
/// `[ψ; s]⁺ = [[M, B C_z], [0, A_s]] [ψ; s] + [B D; E] ν`.
pub struct DenseRoute;

impl CovarianceRoute for DenseRoute {
    fn name(&self) -> &'static str {
        "dense"
    }

    fn wbar(&self, dy: &ErrorDynamics) -> Result<RouteOutput> {
        let (n, m, r) = (dy.n, dy.m, dy.r);
        let rn = r * n;
        let modes = dy.mode_a.len();
        let q = modes * rn;
        let p = dy.source_dim();
        let dim = q + p;
        let nu = dy.N.nrows();
        let mut ar = DMatrix::zeros(dim, dim);
        let mut bn = DMatrix::zeros(dim, nu);
        for (k, (a, b)) in dy.mode_a.iter().zip(&dy.mode_b).enumerate() {
            ar.view_mut((k * rn, k * rn), (rn, rn)).copy_from(&kron_eye(r, a));
            ar.view_mut((k * rn, q), (rn, p)).copy_from(&(b * &dy.C_z));
            bn.view_mut((k * rn, 0), (rn, nu)).copy_from(&(b * &dy.D));
        }
        ar.view_mut((q, q), (p, p)).copy_from(&dy.A_s);
        bn.view_mut((q, 0), (p, nu)).copy_from(&dy.E);
        let wr = solve_dlyap(&ar, &symmetrize(&(&bn * &dy.N * bn.transpose())))?;
        let mut l = DMatrix::zeros(m * n, q);
        for i in 0..m {
            let oi = dy.node_output(i);
            for k in 0..modes {
                let c = m as f64 * dy.phi[(i, k + 1)];
                l.view_mut((i * n, k * rn), (n, rn)).copy_from(&(&oi * c));
            }
        }
        let wpsi = wr.view((0, 0), (q, q));
        let wbar = &l * wpsi * l.transpose();
        Ok((wbar, Some(wr), self.name()))
    }
}

/// Mode-by-mode Stein equations in Schur coordinates, contracting each
/// cross-mode covariance `X_jj'` into `W̄` as soon as it is formed.
pub struct StructuredRoute;


/// `t X` applied to every `n`-row block of a tall matrix.
fn blockwise_left(t: &CMat, x: &CMat, n: usize) -> CMat {
    let mut out = CMat::zeros(x.nrows(), x.ncols());
    for a in 0..x.nrows() / n {
        let blk = t * x.rows(a * n, n);
        out.rows_mut(a * n, n).copy_from(&blk);
    }
    out
}

struct ModeData {
    schur: ComplexSchur,
    /// `(I⊗Uᴴ) B_j`.
    bt: CMat,
    /// `(I⊗Uᴴ) Y_j C_zᵀ`.
    zt: CMat,
    /// `O (I⊗U)`.
    ot: CMat,
    /// `F_i U` under local replacement.
    ft: Vec<CMat>,
}

impl CovarianceRoute for StructuredRoute {
    fn name(&self) -> &'static str {
        "structured"
    }

    fn wbar(&self, dy: &ErrorDynamics) -> Result<RouteOutput> {
        let (n, m, r) = (dy.n, dy.m, dy.r);
        let rn = r * n;
        let mut wbar = DMatrix::zeros(m * n, m * n);
        if dy.mode_a.is_empty() {
            return Ok((wbar, None, self.name()));
        }
        let p = dy.source_dim();
        let ns = dy.As.nrows();

        // Schur form of A_s assembled from its diagonal blocks.
        let lam = ComplexSchur::new(&dy.Lambda)?;
        let ast = ComplexSchur::new(&dy.As)?;
        let mut w = CMat::zeros(p, p);
        for i in 0..m {
            w.view_mut((i * n, i * n), (n, n)).copy_from(&lam.u);
        }
        if ns > 0 {
            w.view_mut((m * n, m * n), (ns, ns)).copy_from(&ast.u);
        }
        let t = w.adjoint() * to_complex(&dy.A_s) * &w;
        let source = ComplexSchur::from_parts(w, t);
        let enet = &dy.E * &dy.N;
        let sigma_s = symmetrize(
            &SteinSolver::from_schur(source.clone(), source.clone()).stein(&symmetrize(&(&enet * dy.E.transpose())))?,
        );
        let gx = &dy.C_z * &sigma_s * dy.A_s.transpose() + &dy.D * enet.transpose();
        let szz = to_complex(&symmetrize(
            &(&dy.C_z * &sigma_s * dy.C_z.transpose() + &dy.D * &dy.N * dy.D.transpose()),
        ));
        let gt = to_complex(&gx) * source.u.map(|z| z.conj());
        let ctt = (to_complex(&dy.C_z) * &source.u).transpose();

        let mut modes = Vec::with_capacity(dy.mode_a.len());
        for (a_j, b_j) in dy.mode_a.iter().zip(&dy.mode_b) {
            let schur = ComplexSchur::new(a_j)?;
            let uh = schur.u.adjoint();
            let bt = blockwise_left(&uh, &to_complex(b_j), n);
            let mut zt = CMat::zeros(rn, m);
            for a in 0..r {
                let rhs = bt.rows(a * n, n) * &gt;
                let yt = stein_triangular(&schur.t, &source.t, &rhs)?;
                zt.rows_mut(a * n, n).copy_from(&(yt * &ctt));
            }
            let mut ot = CMat::zeros(n, rn);
            let oc = to_complex(&dy.output);
            for a in 0..r {
                let blk = oc.columns(a * n, n) * &schur.u;
                ot.columns_mut(a * n, n).copy_from(&blk);
            }
            let ft = match &dy.own {
                Some(f) => f.iter().map(|fi| to_complex(fi) * &schur.u).collect(),
                None => Vec::new(),
            };
            modes.push(ModeData { schur, bt, zt, ot, ft });
        }

        let mm = (m * m) as f64;
        for j in 0..modes.len() {
            for jp in j..modes.len() {
                let (mj, mjp) = (&modes[j], &modes[jp]);
                let tz_j = blockwise_left(&mj.schur.t, &mj.zt, n);
                let tz_jp = blockwise_left(&mjp.schur.t, &mjp.zt, n);
                let rt = (&mj.bt * &szz + tz_j) * mjp.bt.transpose() + &mj.bt * tz_jp.transpose();
                let mut xt = CMat::zeros(rn, rn);
                for a in 0..r {
                    for b in 0..r {
                        let rab = rt.view((a * n, b * n), (n, n)).clone_owned();
                        let x = stein_triangular(&mj.schur.t, &mjp.schur.t, &rab)?;
                        xt.view_mut((a * n, b * n), (n, n)).copy_from(&x);
                    }
                }
                let qm = &mj.ot * &xt;
                let k = &qm * mjp.ot.transpose();
                let terms: Vec<Vec<DMatrix<f64>>> = if dy.own.is_some() {
                    let pm = &xt * mjp.ot.transpose();
                    let fp: Vec<CMat> = (0..m).map(|i| &mj.ft[i] * pm.rows(i * n, n)).collect();
                    let qf: Vec<CMat> = (0..m).map(|i| qm.columns(i * n, n) * mjp.ft[i].transpose()).collect();
                    (0..m)
                        .map(|i| {
                            (0..m)
                                .map(|ip| {
                                    let fx = &mj.ft[i] * xt.view((i * n, ip * n), (n, n));
                                    let own = fx * mjp.ft[ip].transpose();
                                    (&k - &fp[i] - &qf[ip] + own).map(|z| z.re)
                                })
                                .collect()
                        })
                        .collect()
                } else {
                    let kr = k.map(|z| z.re);
                    vec![vec![kr; m]; m]
                };
                for i in 0..m {
                    for ip in 0..m {
                        let c = mm * dy.phi[(i, j + 1)] * dy.phi[(ip, jp + 1)];
                        let mut blk = wbar.view_mut((i * n, ip * n), (n, n));
                        blk += &terms[i][ip] * c;
                        if jp != j {
                            let c2 = mm * dy.phi[(i, jp + 1)] * dy.phi[(ip, j + 1)];
                            blk += terms[ip][i].transpose() * c2;
                        }
                    }
                }
            }
        }
        Ok((wbar, None, self.name()))
    }
}

/// Dense route for small augmented systems, structured otherwise.
pub struct AutoRoute;

impl CovarianceRoute for AutoRoute {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn wbar(&self, dy: &ErrorDynamics) -> Result<RouteOutput> {
        if dy.augmented_dim() <= DENSE_ROUTE_MAX_DIM {
            DenseRoute.wbar(dy)
        } else {
            StructuredRoute.wbar(dy)
        }
    }
}
