use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::{check_square, eigenvalues, is_unstable, solve_sylvester};
use crate::error::{Error, Result};

/// Real Schur form `A = Q T Qᵀ` with `T` quasi-upper-triangular whose 2×2
/// diagonal blocks carry complex conjugate pairs only.
#[derive(Debug, Clone)]
pub struct QuasiTriangular {
    pub q: DMatrix<f64>,
    pub t: DMatrix<f64>,
}

pub fn real_schur(a: &DMatrix<f64>) -> Result<QuasiTriangular> {
    check_square("matrix", a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(QuasiTriangular {
            q: DMatrix::zeros(0, 0),
            t: DMatrix::zeros(0, 0),
        });
    }
    let iters = 1000 * n.max(10);
    let (q, t) = schur_attempts(a, iters).ok_or(Error::NoConvergence {
        what: "real Schur decomposition",
        iterations: iters,
    })?;
    let mut qt = QuasiTriangular { q, t };
    qt.clean();
    qt.split_real_blocks();
    Ok(qt)
}

/// QR iterations occasionally stall on clustered spectra; retry from an
/// orthogonally scrambled and shifted starting matrix.
fn schur_attempts(a: &DMatrix<f64>, iters: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    if let Some(schur) = Schur::try_new(a.clone(), f64::EPSILON, iters) {
        return Some(schur.unpack());
    }
    let n = a.nrows();
    let z = scrambler(n);
    let base = z.transpose() * a * &z;
    let scale = a.amax().max(f64::MIN_POSITIVE);
    for shift in [0.0, 0.371, -0.629, 1.713] {
        let sigma = shift * scale;
        let shifted = &base + DMatrix::identity(n, n) * sigma;
        if let Some(schur) = Schur::try_new(shifted, f64::EPSILON, iters) {
            let (q, mut t) = schur.unpack();
            for k in 0..n {
                t[(k, k)] -= sigma;
            }
            return Some((&z * q, t));
        }
    }
    None
}

/// Fixed orthogonal matrix used to perturb the starting point of QR iterations.
fn scrambler(n: usize) -> DMatrix<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5c4u64);
    let g = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    g.qr().q()
}

impl QuasiTriangular {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    fn clean(&mut self) {
        let n = self.dim();
        for j in 0..n {
            for i in j + 2..n {
                self.t[(i, j)] = 0.0;
            }
        }
        for i in 0..n.saturating_sub(1) {
            let scale = self.t[(i, i)].abs() + self.t[(i + 1, i + 1)].abs();
            if self.t[(i + 1, i)].abs() <= f64::EPSILON * scale.max(f64::MIN_POSITIVE) {
                self.t[(i + 1, i)] = 0.0;
            }
        }
        // two consecutive nonzero subdiagonals cannot both belong to blocks
        let mut i = 0;
        while i + 1 < n {
            if self.t[(i + 1, i)] != 0.0 {
                if i + 2 < n {
                    self.t[(i + 2, i + 1)] = 0.0;
                }
                i += 2;
            } else {
                i += 1;
            }
        }
    }

    /// Diagonal blocks as `(start, size)`.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        let n = self.dim();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            if i + 1 < n && self.t[(i + 1, i)] != 0.0 {
                out.push((i, 2));
                i += 2;
            } else {
                out.push((i, 1));
                i += 1;
            }
        }
        out
    }

    pub fn block_eigenvalues(&self, start: usize, size: usize) -> Vec<Complex64> {
        let t = &self.t;
        if size == 1 {
            return vec![Complex64::new(t[(start, start)], 0.0)];
        }
        let (a, b) = (t[(start, start)], t[(start, start + 1)]);
        let (c, d) = (t[(start + 1, start)], t[(start + 1, start + 1)]);
        let mid = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc >= 0.0 {
            let r = disc.sqrt();
            vec![Complex64::new(mid + r, 0.0), Complex64::new(mid - r, 0.0)]
        } else {
            let r = (-disc).sqrt();
            vec![Complex64::new(mid, r), Complex64::new(mid, -r)]
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.blocks()
            .into_iter()
            .flat_map(|(s, k)| self.block_eigenvalues(s, k))
            .collect()
    }

    /// Applies the orthogonal similarity `U` to indices `start..start+k`.
    fn rotate(&mut self, start: usize, u: &DMatrix<f64>) {
        let k = u.nrows();
        let n = self.dim();
        let rows = u.transpose() * self.t.view((start, 0), (k, n));
        self.t.view_mut((start, 0), (k, n)).copy_from(&rows);
        let cols = self.t.view((0, start), (n, k)) * u;
        self.t.view_mut((0, start), (n, k)).copy_from(&cols);
        let qc = self.q.view((0, start), (n, k)) * u;
        self.q.view_mut((0, start), (n, k)).copy_from(&qc);
    }

    /// Triangularizes 2×2 blocks whose eigenvalues are real.
    fn split_real_blocks(&mut self) {
        for (s, k) in self.blocks() {
            if k != 2 {
                continue;
            }
            let (a, b) = (self.t[(s, s)], self.t[(s, s + 1)]);
            let (c, d) = (self.t[(s + 1, s)], self.t[(s + 1, s + 1)]);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc < 0.0 {
                continue;
            }
            let mid = 0.5 * (a + d);
            let lam = if mid >= 0.0 { mid + disc.sqrt() } else { mid - disc.sqrt() };
            let (v0, v1) = if b.abs() + (lam - a).abs() >= (lam - d).abs() + c.abs() {
                (b, lam - a)
            } else {
                (lam - d, c)
            };
            let nrm = v0.hypot(v1);
            if nrm == 0.0 {
                continue;
            }
            let (cs, sn) = (v0 / nrm, v1 / nrm);
            let g = DMatrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]);
            self.rotate(s, &g);
            self.t[(s + 1, s)] = 0.0;
        }
    }

    /// Swaps the adjacent diagonal blocks starting at `start` of sizes `p` and `q`.
    fn swap(&mut self, start: usize, p: usize, q: usize) -> Result<()> {
        let t11 = self.t.view((start, start), (p, p)).clone_owned();
        let t22 = self.t.view((start + p, start + p), (q, q)).clone_owned();
        let t12 = self.t.view((start, start + p), (p, q)).clone_owned();
        let x = solve_small_sylvester(&t11, &t22, &t12)?;
        let k = p + q;
        let mut basis = DMatrix::zeros(k, k);
        basis.view_mut((0, 0), (p, q)).copy_from(&x);
        for i in 0..q {
            basis[(p + i, i)] = -1.0;
        }
        for i in 0..p {
            basis[(i, q + i)] = 1.0;
        }
        let u = basis.qr().q();
        self.rotate(start, &u);
        for j in start..start + q {
            for i in start + q..start + k {
                self.t[(i, j)] = 0.0;
            }
        }
        self.clean();
        self.split_real_blocks();
        Ok(())
    }

    /// Reorders so that blocks with `select(λ)` true lead; returns their total size.
    pub fn reorder(&mut self, select: impl Fn(Complex64) -> bool) -> Result<usize> {
        let sel = |qt: &QuasiTriangular, (s, k): (usize, usize)| {
            select(qt.block_eigenvalues(s, k)[0])
        };
        let limit = 4 * self.dim() * self.dim() + 8;
        for _ in 0..limit {
            let blocks = self.blocks();
            let pos = (0..blocks.len().saturating_sub(1))
                .find(|&b| !sel(self, blocks[b]) && sel(self, blocks[b + 1]));
            match pos {
                None => {
                    return Ok(blocks
                        .iter()
                        .filter(|&&b| sel(self, b))
                        .map(|&(_, k)| k)
                        .sum());
                }
                Some(b) => {
                    let (s, p) = blocks[b];
                    let (_, q) = blocks[b + 1];
                    self.swap(s, p, q)?;
                }
            }
        }
        Err(Error::NoConvergence {
            what: "Schur reordering",
            iterations: limit,
        })
    }
}

/// Kronecker solve of `A X − X B = C` for tiny blocks.
fn solve_small_sylvester(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let (p, q) = (a.nrows(), b.nrows());
    let ip = DMatrix::<f64>::identity(p, p);
    let iq = DMatrix::<f64>::identity(q, q);
    let k = iq.kronecker(a) - b.transpose().kronecker(&ip);
    let rhs = nalgebra::DVector::from_column_slice(c.as_slice());
    let sol = k.lu().solve(&rhs).ok_or(Error::IllConditioned {
        what: "Schur block swap",
        cond: f64::INFINITY,
    })?;
    Ok(DMatrix::from_column_slice(p, q, sol.as_slice()))
}

/// `V⁻¹ A V = diag(Au, As)` with the unstable block first.
#[derive(Debug, Clone)]
#[allow(non_snake_case)]
pub struct SpectralSplit {
    pub V: DMatrix<f64>,
    pub V_inv: DMatrix<f64>,
    pub Au: DMatrix<f64>,
    pub As: DMatrix<f64>,
}

impl SpectralSplit {
    pub fn n_unstable(&self) -> usize {
        self.Au.nrows()
    }
    pub fn n_stable(&self) -> usize {
        self.As.nrows()
    }
}

pub fn spectral_split(a: &DMatrix<f64>) -> Result<SpectralSplit> {
    check_square("A", a)?;
    if let Some(split) = permutation_split(a)? {
        return Ok(split);
    }
    let n = a.nrows();
    let mut qt = real_schur(a)?;
    let nu = qt.reorder(is_unstable)?;
    let ns = n - nu;
    let t11 = qt.t.view((0, 0), (nu, nu)).clone_owned();
    let t22 = qt.t.view((nu, nu), (ns, ns)).clone_owned();
    let t12 = qt.t.view((0, nu), (nu, ns)).clone_owned();
    let x = if nu == 0 || ns == 0 {
        DMatrix::zeros(nu, ns)
    } else {
        solve_sylvester(&t11, &t22, &(-t12))?
    };
    let mut p = DMatrix::<f64>::identity(n, n);
    p.view_mut((0, nu), (nu, ns)).copy_from(&x);
    let mut p_inv = DMatrix::<f64>::identity(n, n);
    p_inv.view_mut((0, nu), (nu, ns)).copy_from(&(-x));
    Ok(SpectralSplit {
        V: &qt.q * p,
        V_inv: p_inv * qt.q.transpose(),
        Au: t11,
        As: t22,
    })
}

/// Splits by a permutation when every connected component of the sparsity
/// pattern is purely stable or purely unstable.
fn permutation_split(a: &DMatrix<f64>) -> Result<Option<SpectralSplit>> {
    let n = a.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && a[(i, j)] != 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if root_of[r] == usize::MAX {
            root_of[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[root_of[r]].push(i);
    }
    let mut unstable = Vec::new();
    let mut stable = Vec::new();
    for comp in &comps {
        let sub = DMatrix::from_fn(comp.len(), comp.len(), |r, c| a[(comp[r], comp[c])]);
        let ev = eigenvalues(&sub)?;
        let nu = ev.iter().filter(|z| is_unstable(**z)).count();
        if nu == comp.len() {
            unstable.extend_from_slice(comp);
        } else if nu == 0 {
            stable.extend_from_slice(comp);
        } else {
            return Ok(None);
        }
    }
    unstable.sort_unstable();
    stable.sort_unstable();
    let order: Vec<usize> = unstable.iter().chain(stable.iter()).cloned().collect();
    let mut v = DMatrix::zeros(n, n);
    for (col, &row) in order.iter().enumerate() {
        v[(row, col)] = 1.0;
    }
    let pick = |idx: &[usize]| DMatrix::from_fn(idx.len(), idx.len(), |r, c| a[(idx[r], idx[c])]);
    Ok(Some(SpectralSplit {
        V_inv: v.transpose(),
        V: v,
        Au: pick(&unstable),
        As: pick(&stable),
    }))
}
