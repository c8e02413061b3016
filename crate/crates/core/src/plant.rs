//! Plant, sensors and communication graph.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand_distr::StandardNormal;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{self, SpectralSplit};

/// LTI Gaussian plant `x(k+1) = Ax(k) + w(k)`, `y(k) = Cx(k) + v(k)`.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemModel {
    #[serde(with = "crate::serde_mat")]
    pub A: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub C: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub Q: DMatrix<f64>,
    #[serde(with = "crate::serde_mat")]
    pub R: DMatrix<f64>,
}

#[allow(non_snake_case)]
pub fn build_system(A: DMatrix<f64>, C: DMatrix<f64>, Q: DMatrix<f64>, R: DMatrix<f64>) -> Result<SystemModel> {
    let n = A.nrows();
    let m = C.nrows();
    if n == 0 || A.ncols() != n {
        return Err(Error::DimensionMismatch(format!("A must be square and nonempty, got {}x{}", n, A.ncols())));
    }
    if m == 0 || C.ncols() != n {
        return Err(Error::DimensionMismatch(format!("C is {}x{}, expected m x {n}", m, C.ncols())));
    }
    if Q.shape() != (n, n) || R.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{} and R is {}x{}, expected {n}x{n} and {m}x{m}",
            Q.nrows(),
            Q.ncols(),
            R.nrows(),
            R.ncols()
        )));
    }
    for (name, mat) in [("A", &A), ("C", &C), ("Q", &Q), ("R", &R)] {
        numerics::check_finite(name, mat)?;
    }
    if !numerics::is_observable(&A, &C)? {
        return Err(Error::NotObservable);
    }
    crate::numerics::validate_noise(&Q, &R)?;
    Ok(SystemModel { A, C, Q, R })
}

impl SystemModel {
    pub fn n(&self) -> usize {
        self.A.nrows()
    }

    pub fn m(&self) -> usize {
        self.C.nrows()
    }

    pub fn sensor_row(&self, i: usize) -> RowDVector<f64> {
        self.C.row(i).clone_owned()
    }
}

/// Plant in the coordinates `x = V [xᵘ; xˢ]` with `V⁻¹AV = diag(Aᵘ, Aˢ)`.
#[allow(non_snake_case)]
#[derive(Debug, Clone)]
pub struct SplitModel {
    pub V: DMatrix<f64>,
    pub V_inv: DMatrix<f64>,
    pub Au: DMatrix<f64>,
    pub As: DMatrix<f64>,
    /// Selector `[0 I]` of the stable coordinates.
    pub J: DMatrix<f64>,
    /// `C V`, all sensors.
    pub C_split: DMatrix<f64>,
    pub Cu: DMatrix<f64>,
    pub Cs: DMatrix<f64>,
}

impl SplitModel {
    pub fn n_unstable(&self) -> usize {
        self.Au.nrows()
    }

    pub fn n_stable(&self) -> usize {
        self.As.nrows()
    }

    pub fn a_split(&self) -> DMatrix<f64> {
        numerics::block_diag(&[&self.Au, &self.As])
    }
}

pub fn split_model(model: &SystemModel) -> Result<SplitModel> {
    let SpectralSplit { V, V_inv, Au, As } = numerics::spectral_split(&model.A)?;
    let n = model.n();
    let nu = Au.nrows();
    let ns = n - nu;
    let mut j = DMatrix::zeros(ns, n);
    for i in 0..ns {
        j[(i, nu + i)] = 1.0;
    }
    let c_split = &model.C * &V;
    Ok(SplitModel {
        Cu: c_split.columns(0, nu).clone_owned(),
        Cs: c_split.columns(nu, ns).clone_owned(),
        C_split: c_split,
        J: j,
        V,
        V_inv,
        Au,
        As,
    })
}

/// Undirected weighted communication graph with its Laplacian spectrum.
#[derive(Debug, Clone)]
pub struct SensorGraph {
    pub adjacency: DMatrix<f64>,
    pub laplacian: DMatrix<f64>,
    /// Laplacian eigenvalues, ascending.
    pub mu: Vec<f64>,
    /// Orthonormal eigenvectors; first column is `1/√m`.
    pub phi: DMatrix<f64>,
}

impl SensorGraph {
    pub fn nodes(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn mu2(&self) -> Option<f64> {
        self.mu.get(1).cloned()
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.last().cloned().unwrap_or(0.0)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.nodes()).filter_map(move |j| {
            let a = self.adjacency[(i, j)];
            (j != i && a > 0.0).then_some((j, a))
        })
    }
}

pub fn build_graph(adjacency: DMatrix<f64>) -> Result<SensorGraph> {
    let m = adjacency.nrows();
    if m == 0 || adjacency.ncols() != m {
        return Err(Error::DimensionMismatch("adjacency must be square and nonempty".into()));
    }
    numerics::check_finite("adjacency", &adjacency)?;
    for i in 0..m {
        if adjacency[(i, i)] != 0.0 {
            return Err(Error::Config("adjacency must have a zero diagonal".into()));
        }
        for j in 0..m {
            if adjacency[(i, j)] < 0.0 {
                return Err(Error::Config("adjacency must be nonnegative".into()));
            }
            if (adjacency[(i, j)] - adjacency[(j, i)]).abs() > 1e-12 {
                return Err(Error::Config("adjacency must be symmetric".into()));
            }
        }
    }
    let degrees = DMatrix::from_diagonal(&adjacency.column_sum());
    let laplacian = degrees - &adjacency;
    let eig = numerics::symmetrize(&laplacian).symmetric_eigen();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut mu: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut phi = DMatrix::from_fn(m, m, |i, j| eig.eigenvectors[(i, order[j])]);
    if mu[0].abs() <= 1e-10 {
        mu[0] = 0.0;
    }
    if m > 1 && mu[1] <= 1e-10 {
        return Err(Error::Disconnected(mu[1]));
    }
    let s = 1.0 / (m as f64).sqrt();
    phi.column_mut(0).fill(s);
    Ok(SensorGraph { adjacency, laplacian, mu, phi })
}

pub fn ring_graph(m: usize, weight: f64) -> Result<SensorGraph> {
    if weight <= 0.0 || !weight.is_finite() {
        return Err(Error::Config("ring weight must be positive".into()));
    }
    let mut adj = DMatrix::zeros(m, m);
    for i in 0..m {
        let j = (i + 1) % m;
        if i != j {
            adj[(i, j)] = weight;
            adj[(j, i)] = weight;
        }
    }
    build_graph(adj)
}

pub fn complete_graph(m: usize, weight: f64) -> Result<SensorGraph> {
    build_graph(DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { weight }))
}

/// Unit-weight disk graph on the given positions.
pub fn geometric_graph(positions: &[[f64; 2]], radius: f64) -> Result<SensorGraph> {
    let m = positions.len();
    let adj = DMatrix::from_fn(m, m, |i, j| {
        let d = (positions[i][0] - positions[j][0]).hypot(positions[i][1] - positions[j][1]);
        if i != j && d <= radius {
            1.0
        } else {
            0.0
        }
    });
    build_graph(adj)
}

const LAYOUT_ATTEMPTS: usize = 1000;

/// Uniform positions on `[0, side]²`, redrawn until the disk graph is connected.
pub fn random_geometric_layout(
    m: usize,
    radius: f64,
    side: f64,
    seed: u64,
) -> Result<(SensorGraph, Vec<[f64; 2]>)> {
    if radius <= 0.0 || side <= 0.0 {
        return Err(Error::Config("radius and side must be positive".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut last = Error::Disconnected(0.0);
    for _ in 0..LAYOUT_ATTEMPTS {
        let pos: Vec<[f64; 2]> = (0..m)
            .map(|_| [rng.random_range(0.0..side), rng.random_range(0.0..side)])
            .collect();
        match geometric_graph(&pos, radius) {
            Ok(g) => return Ok((g, pos)),
            Err(e @ Error::Disconnected(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

pub fn random_geometric_graph(m: usize, radius: f64, seed: u64) -> Result<SensorGraph> {
    random_geometric_layout(m, radius, 1.0, seed).map(|(g, _)| g)
}

/// Explicit-Euler heat diffusion on an `N×N` grid with zero-flux boundary:
/// `A = I − (α/h²) L_grid`.
pub fn heat_diffusion_matrix(grid: usize, alpha: f64, h: f64) -> DMatrix<f64> {
    let n = grid * grid;
    let idx = |i: usize, j: usize| i * grid + j;
    let c = alpha / (h * h);
    let mut a = DMatrix::identity(n, n);
    for i in 0..grid {
        for j in 0..grid {
            let p = idx(i, j);
            let mut nb = Vec::new();
            if i > 0 {
                nb.push(idx(i - 1, j));
            }
            if i + 1 < grid {
                nb.push(idx(i + 1, j));
            }
            if j > 0 {
                nb.push(idx(i, j - 1));
            }
            if j + 1 < grid {
                nb.push(idx(i, j + 1));
            }
            for q in nb {
                a[(p, q)] += c;
                a[(p, p)] -= c;
            }
        }
    }
    a
}

/// Bilinear interpolation row for a sensor at `pos` (grid units scaled by `h`).
pub fn interpolation_row(grid: usize, pos: [f64; 2], h: f64) -> RowDVector<f64> {
    let n = grid * grid;
    let mut row = RowDVector::zeros(n);
    let x1 = pos[0] / h;
    let x2 = pos[1] / h;
    let i = (x1.floor() as usize).min(grid - 2);
    let j = (x2.floor() as usize).min(grid - 2);
    let d1 = x1 - i as f64;
    let d2 = x2 - j as f64;
    let s = 1.0 / (h * h);
    row[i * grid + j] += s * (1.0 - d1) * (1.0 - d2);
    row[(i + 1) * grid + j] += s * d1 * (1.0 - d2);
    row[i * grid + j + 1] += s * (1.0 - d1) * d2;
    row[(i + 1) * grid + j + 1] += s * d1 * d2;
    row
}

/// Gaussian draws `w ~ N(0, Q)` and `v ~ N(0, R)` through fixed square-root factors.
#[derive(Debug, Clone)]
pub struct NoiseGenerator {
    lq: DMatrix<f64>,
    lr: DMatrix<f64>,
}

impl NoiseGenerator {
    pub fn new(model: &SystemModel) -> Self {
        NoiseGenerator {
            lq: numerics::psd_factor(&model.Q),
            lr: numerics::psd_factor(&model.R),
        }
    }

    pub fn process<G: Rng + ?Sized>(&self, rng: &mut G) -> DVector<f64> {
        draw(&self.lq, rng)
    }

    pub fn measurement<G: Rng + ?Sized>(&self, rng: &mut G) -> DVector<f64> {
        draw(&self.lr, rng)
    }
}

fn draw<G: Rng + ?Sized>(l: &DMatrix<f64>, rng: &mut G) -> DVector<f64> {
    let e = DVector::from_fn(l.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
    l * e
}
