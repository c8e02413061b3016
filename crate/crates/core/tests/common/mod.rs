#![allow(dead_code)]
#![allow(non_snake_case)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn randn(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random matrix rescaled to the given spectral radius.
pub fn with_radius(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> DMatrix<f64> {
    loop {
        let a = randn(rng, n, n);
        let rho = dkf::numerics::spectral_radius(&a).unwrap();
        if rho > 1e-3 {
            return a * (radius / rho);
        }
    }
}

pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let b = randn(rng, n, n);
    &b * b.transpose() / n as f64 + DMatrix::identity(n, n) * floor
}

pub fn random_diag(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(lo..hi)))
}

/// Random observable system with `n` states and `m` scalar sensors.
pub fn random_system(seed: u64, n: usize, m: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let mut g = rng(seed);
    loop {
        let radius = g.random_range(0.5..1.25);
        let A = with_radius(&mut g, n, radius);
        let C = randn(&mut g, m, n);
        if dkf::numerics::is_observable(&A, &C).unwrap() {
            let Q = random_psd(&mut g, n, 0.05);
            let R = random_diag(&mut g, m, 0.5, 2.0);
            return (A, C, Q, R);
        }
    }
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn example1() -> dkf::plant::SystemModel {
    dkf::plant::build_system(
        DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 1.1]),
        DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]),
        DMatrix::identity(2, 2) * 0.25,
        DMatrix::identity(4, 4) * 4.0,
    )
    .unwrap()
}

pub fn random_model(seed: u64, n: usize, m: usize) -> dkf::plant::SystemModel {
    let (A, C, Q, R) = random_system(seed, n, m);
    dkf::plant::build_system(A, C, Q, R).unwrap()
}
