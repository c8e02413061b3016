#![allow(non_snake_case)]

mod common;

use approx::assert_relative_eq;
use dkf::numerics::*;
use nalgebra::{dmatrix, dvector, DMatrix};
use num_complex::Complex64;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn example_system() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let A = dmatrix![0.9, 0.0; 0.0, 1.1];
    let C = dmatrix![1.0, 0.0; 0.0, 1.0; 1.0, 1.0; 1.0, -1.0];
    (A, C, DMatrix::identity(2, 2) * 0.25, DMatrix::identity(4, 4) * 4.0)
}

#[test]
fn dare_scalar_cases() {
    let one = dmatrix![1.0];
    let s = solve_dare(&dmatrix![0.0], &one, &one, &one).unwrap();
    assert_relative_eq!(s[(0, 0)], 1.0, epsilon = 1e-12);
    let s = solve_dare(&one, &one, &one, &one).unwrap();
    assert_relative_eq!(s[(0, 0)], (1.0 + 5f64.sqrt()) / 2.0, epsilon = 1e-12);
}

#[test]
fn dare_example_system() {
    let (A, C, Q, R) = example_system();
    let s = solve_dare(&A, &C, &Q, &R).unwrap();
    assert!(riccati_residual(&A, &C, &Q, &R, &s) <= 1e-9 * (1.0 + s.norm()));
    assert_relative_eq!(s[(0, 0)], 0.575_69, epsilon = 1e-5);
    assert_relative_eq!(s[(1, 1)], 0.900_26, epsilon = 1e-5);
}

#[test]
fn dare_rejects_undetectable_and_bad_noise() {
    let A = dmatrix![1.2, 0.0; 0.0, 0.5];
    let C = dmatrix![0.0, 1.0];
    let I = DMatrix::identity(2, 2);
    assert_eq!(solve_dare(&A, &C, &I, &dmatrix![1.0]), Err(dkf::Error::NotDetectable));
    assert!(matches!(
        solve_dare(&A, &dmatrix![1.0, 0.0], &I, &dmatrix![0.0]),
        Err(dkf::Error::BadNoise(_))
    ));
}

#[test]
fn dare_zero_process_noise_is_stabilizing() {
    let A = dmatrix![1.5];
    let s = solve_dare(&A, &dmatrix![1.0], &dmatrix![0.0], &dmatrix![1.0]).unwrap();
    // Σ = 2.25Σ − 2.25Σ²/(Σ+1)  ⇒  Σ = 1.25
    assert_relative_eq!(s[(0, 0)], 1.25, epsilon = 1e-10);
}

#[test]
fn dlyap_cases() {
    let w = solve_dlyap(&DMatrix::zeros(2, 2), &DMatrix::identity(2, 2)).unwrap();
    assert_relative_eq!(w, DMatrix::identity(2, 2), epsilon = 1e-14);
    let w = solve_dlyap(&dmatrix![0.5], &dmatrix![3.0]).unwrap();
    assert_relative_eq!(w[(0, 0)], 4.0, epsilon = 1e-12);
    let w = solve_dlyap(&dmatrix![0.2, 0.0; 0.0, 0.5], &DMatrix::identity(2, 2)).unwrap();
    assert_relative_eq!(w, dmatrix![1.0 / 0.96, 0.0; 0.0, 4.0 / 3.0], epsilon = 1e-12);
    assert!(matches!(
        solve_dlyap(&dmatrix![1.0], &dmatrix![1.0]),
        Err(dkf::Error::Unstable(_))
    ));
}

#[test]
fn sylvester_matches_kronecker() {
    let mut g = common::rng(5);
    let a = common::randn(&mut g, 4, 4);
    let b = common::randn(&mut g, 3, 3) + DMatrix::identity(3, 3) * 5.0;
    let cm = common::randn(&mut g, 4, 3);
    let x = solve_sylvester(&a, &b, &cm).unwrap();
    assert!(common::max_abs(&(&a * &x - &x * &b - &cm)) < 1e-10);
    let st = solve_stein(&(a.clone() * 0.1), &(b.clone() * 0.1), &cm).unwrap();
    let res = &st - (&a * 0.1) * &st * (&b * 0.1).transpose() - &cm;
    assert!(common::max_abs(&res) < 1e-10);
}

#[test]
fn split_examples() {
    let s = spectral_split(&dmatrix![0.9, 0.0; 0.0, 1.1]).unwrap();
    assert_relative_eq!(s.Au, dmatrix![1.1]);
    assert_relative_eq!(s.As, dmatrix![0.9]);
    assert_eq!(s.V, dmatrix![0.0, 1.0; 1.0, 0.0]);

    let s = spectral_split(&dmatrix![0.5, 0.1; 0.0, 0.3]).unwrap();
    assert_eq!(s.n_unstable(), 0);
    assert_eq!(s.V, DMatrix::identity(2, 2));

    let A = dmatrix![1.2, 1.0; 0.0, 0.5];
    let s = spectral_split(&A).unwrap();
    assert_relative_eq!(s.Au[(0, 0)], 1.2, epsilon = 1e-12);
    assert_relative_eq!(s.As[(0, 0)], 0.5, epsilon = 1e-12);
    let d = &s.V_inv * &A * &s.V;
    assert!(d[(0, 1)].abs() < 1e-12 && d[(1, 0)].abs() < 1e-12);
    // coupling removed by X with 1.2X − 0.5X = −1
    assert_relative_eq!(s.V[(0, 1)] / s.V[(1, 1)], -1.0 / 0.7, epsilon = 1e-12);
}

#[test]
fn split_complex_unstable_pair() {
    let A = dmatrix![0.3, 0.0, 0.0, 1.0;
                     0.5, 0.9, -1.1, 0.0;
                     0.0, 1.1, 0.9, 0.2;
                     0.1, 0.0, 0.0, -0.2];
    let s = spectral_split(&A).unwrap();
    assert_eq!(s.n_unstable(), 2);
    let blk = block_diag(&[&s.Au, &s.As]);
    assert!(common::max_abs(&(&s.V * blk * &s.V_inv - &A)) < 1e-10);
}

#[test]
fn ctrb_examples() {
    let x = ctrb(&dmatrix![0.1, 0.0; 0.0, 0.2], &dvector![1.0, 1.0]);
    assert_eq!(x, dmatrix![1.0, 0.1; 1.0, 0.2]);
    assert_eq!(rank(&x), 2);
    let x = ctrb(&dmatrix![0.5, 1.0; 0.0, 0.5], &dvector![1.0, 1.0]);
    assert_eq!(x, dmatrix![1.0, 1.5; 1.0, 0.5]);
    let x = ctrb(&DMatrix::identity(2, 2), &dvector![1.0, 0.0]);
    assert_eq!(x, dmatrix![1.0, 1.0; 0.0, 0.0]);
    assert_eq!(rank(&x), 1);
}

#[test]
fn pole_place_examples() {
    let b = pole_place(&dmatrix![0.3], &dvector![1.0], &[c(1.1)]).unwrap();
    assert_relative_eq!(b[0], 0.8, epsilon = 1e-14);

    let X = dmatrix![0.1, 0.0; 0.0, 0.2];
    let p = dvector![1.0, 1.0];
    let b = pole_place(&X, &p, &[c(1.1), c(0.0)]).unwrap();
    let mut ev: Vec<f64> = eigenvalues(&(&X + &p * b.transpose())).unwrap().iter().map(|z| z.re).collect();
    ev.sort_by(f64::total_cmp);
    assert_relative_eq!(ev[0], 0.0, epsilon = 1e-7);
    assert_relative_eq!(ev[1], 1.1, epsilon = 1e-7);

    let b = pole_place(&X, &p, &[c(0.1), c(0.7)]).unwrap();
    let cp = char_poly(&(&X + &p * b.transpose())).unwrap();
    assert_relative_eq!(cp[1], -0.8, epsilon = 1e-10);
    assert_relative_eq!(cp[2], 0.07, epsilon = 1e-10);

    assert!(matches!(
        pole_place(&DMatrix::identity(2, 2), &dvector![1.0, 0.0], &[c(0.0), c(0.0)]),
        Err(dkf::Error::NotControllable(_))
    ));
}

#[test]
fn matrix_poly_examples() {
    let s = dmatrix![2.0, 0.0; 0.0, 3.0];
    let v = dvector![1.0, 1.0];
    assert_eq!(matrix_poly_eval(&[1.0, 0.0], &s, &v), v);
    assert_eq!(matrix_poly_eval(&[0.0, 1.0], &s, &v), dvector![2.0, 3.0]);

    let mut g = common::rng(11);
    let s = common::randn(&mut g, 3, 3);
    let e1 = dvector![1.0, 0.0, 0.0];
    let explicit = (DMatrix::identity(3, 3) + &s * 2.0 + &s * &s * 3.0) * &e1;
    assert_relative_eq!(matrix_poly_eval(&[1.0, 2.0, 3.0], &s, &e1), explicit, epsilon = 1e-12);
}

#[test]
fn char_poly_examples() {
    let p = char_poly(&dmatrix![0.9, 0.0; 0.0, 1.1]).unwrap();
    assert_relative_eq!(p[0], 1.0);
    assert_relative_eq!(p[1], -2.0, epsilon = 1e-14);
    assert_relative_eq!(p[2], 0.99, epsilon = 1e-14);
    assert_eq!(char_poly(&dmatrix![0.0]).unwrap(), vec![1.0, 0.0]);
    let p = char_poly(&dmatrix![0.0, -0.5; 0.5, 0.0]).unwrap();
    assert_relative_eq!(p[1], 0.0, epsilon = 1e-14);
    assert_relative_eq!(p[2], 0.25, epsilon = 1e-14);
}
