#![allow(non_snake_case)]
mod common;

use common::{example1, max_abs, random_model};
use dkf::decomposition::*;
use dkf::kalman::design_kalman;
use dkf::numerics::{self, ctrb, poly_from_roots, rank};
use dkf::plant::split_model;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn sorted_re(mut v: Vec<Complex64>) -> Vec<f64> {
    v.sort_by(|a, b| a.re.total_cmp(&b.re));
    v.into_iter().map(|z| z.re).collect()
}

fn design_with(model: &dkf::plant::SystemModel, lambda: &str, rule: &str) -> DecompositionBundle {
    let kf = design_kalman(model).unwrap();
    let split = split_model(model).unwrap();
    let opts = DecompositionOptions { lambda: lambda.into(), pole_rule: rule.into(), stable_poles: None };
    design_decomposition(model, &kf, &split, &opts).unwrap()
}

#[test]
fn companion_lambda_of_quadratic() {
    // s² − 0.5s + 0.06 = (s − 0.2)(s − 0.3)
    let acl = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.06, 0.5]);
    let form = CompanionLambda.build(&acl).unwrap();
    let ev = sorted_re(numerics::eigenvalues(&form.lambda).unwrap());
    assert!((ev[0] - 0.2).abs() < 1e-12 && (ev[1] - 0.3).abs() < 1e-12);
    assert_eq!(rank(&ctrb(&form.lambda, &DVector::from_element(2, 1.0))), 2);
}

#[test]
fn scalar_lambda_is_acl() {
    let acl = DMatrix::from_element(1, 1, 0.37);
    for c in [&CompanionLambda as &dyn LambdaConstruction, &JordanLambda] {
        let form = c.build(&acl).unwrap();
        assert!((form.lambda[(0, 0)] - 0.37).abs() < 1e-14);
    }
}

#[test]
fn jordan_lambda_groups_repeated_and_complex() {
    let acl = DMatrix::from_row_slice(4, 4, &[
        0.5, 1.0, 0.0, 0.0, //
        0.0, 0.5, 0.0, 0.0, //
        0.0, 0.0, 0.1, 0.3, //
        0.0, 0.0, -0.3, 0.1,
    ]);
    let form = JordanLambda.build(&acl).unwrap();
    let LambdaStructure::Modal(blocks) = &form.structure else { panic!() };
    assert!(blocks.contains(&ModalBlock::Jordan { value: 0.5, size: 2 }));
    assert!(blocks.iter().any(|b| matches!(b, ModalBlock::Rotation { im, .. } if (im - 0.3).abs() < 1e-12)));
    assert_eq!(rank(&ctrb(&form.lambda, &DVector::from_element(4, 1.0))), 4);
}

#[test]
fn modal_and_companion_placement_agree_on_spectrum() {
    let acl = DMatrix::from_row_slice(4, 4, &[
        0.5, 1.0, 0.0, 0.0, //
        0.0, 0.5, 0.0, 0.0, //
        0.0, 0.0, 0.1, 0.3, //
        0.0, 0.0, -0.3, 0.1,
    ]);
    let targets: Vec<Complex64> = [1.2, -0.3, 0.05, 0.7].iter().map(|&t| Complex64::new(t, 0.0)).collect();
    let want = poly_from_roots(&targets).unwrap();
    for c in [&CompanionLambda as &dyn LambdaConstruction, &JordanLambda] {
        let form = c.build(&acl).unwrap();
        let beta = form.place(&targets).unwrap();
        let s = &form.lambda + DVector::from_element(4, 1.0) * beta.transpose();
        let got = numerics::char_poly(&s).unwrap();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{} {got:?} {want:?}", c.name());
        }
    }
}

#[test]
fn uniform_rule_avoids_lambda() {
    let lam = [Complex64::new(0.0, 0.0), Complex64::new(0.4, 0.0)];
    let ctx = PoleContext { n_stable: 3, lambda_spectrum: &lam, unstable: &[] };
    let p = UniformRule.stable_poles(&ctx).unwrap();
    assert_eq!(p.len(), 3);
    assert!((p[0] + 0.4).abs() < 1e-15);
    assert!((p[1] - 0.013).abs() < 1e-15);
    assert!((p[2] - 0.413).abs() < 1e-15);
    let one = UniformRule.stable_poles(&PoleContext { n_stable: 1, lambda_spectrum: &[], unstable: &[] }).unwrap();
    assert_eq!(one, vec![0.0]);
}

#[test]
fn explicit_rule_rejects_clash() {
    let lam = [Complex64::new(0.2, 0.0)];
    let ctx = PoleContext { n_stable: 1, lambda_spectrum: &lam, unstable: &[] };
    let err = ExplicitRule { poles: vec![0.2005] }.stable_poles(&ctx).unwrap_err();
    assert!(matches!(err, dkf::Error::PoleClash(_)));
    assert!(ExplicitRule { poles: vec![0.5] }.stable_poles(&ctx).is_ok());
}

#[test]
fn shifted_rule_tracks_lambda() {
    let lam: Vec<Complex64> = [0.9, 0.5, -0.3].iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let ctx = PoleContext { n_stable: 2, lambda_spectrum: &lam, unstable: &[] };
    let p = ShiftedRule::default().stable_poles(&ctx).unwrap();
    assert!((p[0] - 0.498).abs() < 1e-12 && (p[1] + 0.298).abs() < 1e-12);
}

#[test]
fn unknown_names_are_reported() {
    let model = example1();
    let kf = design_kalman(&model).unwrap();
    let split = split_model(&model).unwrap();
    let opts = DecompositionOptions { lambda: "schur".into(), ..Default::default() };
    let err = design_decomposition(&model, &kf, &split, &opts).unwrap_err();
    assert!(matches!(err, dkf::Error::UnknownStrategy { .. }));
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn example1_bundle() {
    let model = example1();
    let b = design_with(&model, "companion", "uniform");
    let kf = design_kalman(&model).unwrap();
    let split = split_model(&model).unwrap();
    let ev_l = sorted_re(numerics::eigenvalues(&b.Lambda).unwrap());
    let ev_a = sorted_re(numerics::eigenvalues(&kf.Acl).unwrap());
    assert!((ev_l[0] - ev_a[0]).abs() < 1e-10 && (ev_l[1] - ev_a[1]).abs() < 1e-10);
    // spec(S) = {1.1, p}: φ_S(1.1) = 0
    let at = b.phi_S.iter().fold(0.0, |acc, c| acc * 1.1 + c);
    assert!(at.abs() < 1e-7);
    assert_eq!(b.stable_poles, vec![0.0]);
    let (r1, r2) = f_residuals(&kf, &b.Lambda, &b.F);
    assert!(r1 < 1e-10 && r2 < 1e-10);
    assert_eq!(b.f_route, "explicit");
    // sensor 1 does not see the unstable mode, sensor 2 does
    assert!(max_abs(&b.G[0]) < 1e-12);
    assert!(max_abs(&b.G[1]) > 1e-3);
    for i in 0..4 {
        let lhs = b.beta.transpose() * &b.G[i];
        let rhs = split.C_split.row(i).columns(0, 1) * &split.Au;
        assert!((lhs[(0, 0)] - rhs[(0, 0)]).abs() < 1e-8);
        assert!(lhs[(0, 1)].abs() < 1e-12);
    }
}

#[test]
fn f_routes_agree() {
    for seed in 0..10 {
        let model = random_model(seed, 3, 2);
        let kf = design_kalman(&model).unwrap();
        let lam = build_lambda(&kf, &CompanionLambda).unwrap().lambda;
        let a = build_F_explicit(&kf, &lam).unwrap();
        let b = build_F_stacked(&kf, &lam).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!(max_abs(&(x - y)) < 1e-6 * (1.0 + max_abs(x)), "seed {seed}");
        }
    }
}

#[test]
fn g_routes_agree() {
    let mut tested = 0;
    for seed in 0..40 {
        let model = random_model(seed, 3, 2);
        let split = split_model(&model).unwrap();
        if split.n_unstable() == 0 {
            continue;
        }
        let b = design_with(&model, "companion", "uniform");
        let a = build_Gu_krylov(&b.S, &b.beta, &split).unwrap();
        let s = build_Gu_sylvester(&b.Lambda, &split).unwrap();
        for (x, y) in a.iter().zip(&s) {
            assert!(max_abs(&(x - y)) < 1e-6 * (1.0 + max_abs(x)), "seed {seed}");
        }
        tested += 1;
    }
    assert!(tested >= 5);
}

#[test]
fn stable_plant_has_zero_g() {
    let model = dkf::plant::build_system(
        DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, -0.2]),
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
        DMatrix::identity(2, 2),
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let b = design_with(&model, "companion", "uniform");
    assert!(b.G.iter().all(|g| max_abs(g) == 0.0));
    assert_eq!(b.n_unstable, 0);
}

#[test]
fn scalar_unstable_beta() {
    let model = dkf::plant::build_system(
        DMatrix::from_element(1, 1, 1.1),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
        DMatrix::from_element(1, 1, 1.0),
    )
    .unwrap();
    let b = design_with(&model, "companion", "uniform");
    assert!((b.beta[0] - (1.1 - b.Lambda[(0, 0)])).abs() < 1e-12);
    // S G = G·1.1 and β G = C·1.1
    assert!((b.beta[0] * b.G[0][(0, 0)] - 1.1).abs() < 1e-10);
}

#[test]
fn local_filter_step_identity() {
    let b = design_with(&example1(), "companion", "uniform");
    let (z0, zz) = step_local_filter(&b, &DVector::zeros(2), 0.0);
    assert_eq!((z0.norm(), zz), (0.0, 0.0));
    let xi = DVector::from_vec(vec![0.3, -1.7]);
    let (next, z) = step_local_filter(&b, &xi, 2.5);
    let direct = &b.Lambda * &xi + DVector::from_element(2, 2.5);
    assert!((next - direct).amax() < 1e-12);
    assert!((z - (2.5 - b.beta.dot(&xi))).abs() < 1e-15);
}

#[test]
fn innovation_like_input_stays_bounded() {
    let model = example1();
    let b = design_with(&model, "companion", "uniform");
    let noise = dkf::plant::NoiseGenerator::new(&model);
    let trials = 200;
    let mut var_z = vec![0.0; 200];
    let mut var_y = vec![0.0; 200];
    for t in 0..trials {
        let mut rng = <rand_chacha::ChaCha20Rng as rand::SeedableRng>::seed_from_u64(t);
        let mut x = DVector::zeros(2);
        let mut xi = DVector::zeros(2);
        for k in 0..200 {
            x = &model.A * x + noise.process(&mut rng);
            let y = &model.C * &x + noise.measurement(&mut rng);
            let (nx, z) = step_local_filter(&b, &xi, y[1]);
            xi = nx;
            var_z[k] += z * z / trials as f64;
            var_y[k] += y[1] * y[1] / trials as f64;
        }
    }
    assert!(var_y[199] > 1e6);
    assert!(var_z[100..].iter().all(|&v| v < 50.0));
}

#[test]
fn lossless_example1() {
    let model = example1();
    let kf = design_kalman(&model).unwrap();
    for (lam, rule) in [("companion", "uniform"), ("jordan", "shifted")] {
        let b = design_with(&model, lam, rule);
        let rep = verify_lossless(&b, &model, &kf, 200, 11).unwrap();
        assert!(rep.max_residual < 1e-7);
    }
}

#[test]
fn reduced_model_reconstructs_f() {
    let b = design_with(&example1(), "companion", "uniform");
    let red = reduce_model(&b).unwrap();
    assert_eq!(red.H.shape(), (2, 4));
    assert_eq!(red.T.shape(), (4, 4));
    for (i, f) in b.F.iter().enumerate() {
        let mut rec = DMatrix::zeros(2, 2);
        for j in 0..2 {
            let p = numerics::matrix_poly(&red.alpha[i][j].iter().rev().cloned().collect::<Vec<_>>(), &b.S);
            rec += red.H.columns(2 * j, 2) * p;
        }
        assert!(max_abs(&(rec - f)) < 1e-7);
    }
}

fn impulse_gap(b: &DecompositionBundle, red: &ReducedBundle, steps: usize) -> f64 {
    let (n, m) = (b.n(), b.m());
    let mut worst: f64 = 0.0;
    for ch in 0..m {
        // full: ξ_i⁺ = Sξ_i + 1 z_i, output Σ F_i ξ_i; reduced: η⁺ = (I⊗S)η + T_i z_i, output Hη
        let mut xi = DVector::zeros(n);
        let mut eta = DVector::zeros(n * n);
        for k in 0..steps {
            let z = if k == 0 { 1.0 } else { 0.0 };
            xi = &b.S * &xi + DVector::from_element(n, z);
            let mut next = DVector::zeros(n * n);
            for j in 0..n {
                let blk = &b.S * eta.rows(j * n, n);
                next.rows_mut(j * n, n).copy_from(&blk);
            }
            eta = next + red.T.column(ch) * z;
            let full = &b.F[ch] * &xi;
            let reduced = &red.H * &eta;
            worst = worst.max((full - reduced).amax() / (1.0 + eta.amax()));
        }
    }
    worst
}

#[test]
fn reduced_impulse_response_matches_full() {
    for seed in [3u64, 8, 21] {
        let model = random_model(seed, 3, 4);
        let b = design_with(&model, "companion", "uniform");
        let red = reduce_model(&b).unwrap();
        assert!(!red.alpha[0].is_empty());
        assert!(impulse_gap(&b, &red, 50) < 1e-7, "seed {seed}");
    }
}

#[test]
fn reduced_form_for_large_heat_model() {
    let sc = dkf::scenario::example2().instantiate().unwrap();
    let kf = design_kalman(&sc.model).unwrap();
    let split = split_model(&sc.model).unwrap();
    let b = design_decomposition(&sc.model, &kf, &split, &DecompositionOptions::default()).unwrap();
    let red = reduce_model(&b).unwrap();
    assert_eq!(red.T.shape(), (625, 15));
    let gap = impulse_gap(&b, &red, 50);
    assert!(gap < 1e-7, "gap {gap}");
}
