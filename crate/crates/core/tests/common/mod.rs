//! Naive reference implementations used as oracles by the integration and
//! acceptance tests. They index element by element and share no code with
//! the library kernels.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volrank::{Matrix, Mode, Tensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(dims: [usize; 3], rng: &mut ChaCha8Rng) -> Tensor3<f64> {
    Tensor3::from_fn(dims, |_, _, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix<f64> {
    Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() * 2.0 - 1.0)
}

pub fn random_dims(rng: &mut ChaCha8Rng, max: [usize; 3]) -> [usize; 3] {
    std::array::from_fn(|m| rng.random_range(1..=max[m]))
}

/// Largest entrywise deviation relative to the largest reference magnitude.
pub fn rel_dev(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    got.iter().zip(want).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

pub fn scalar_rel_dev(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}

pub fn naive_inner(x: &Tensor3<f64>, y: &Tensor3<f64>) -> f64 {
    let [n1, n2, n3] = x.dims();
    let mut s = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                s += x[(i, j, k)] * y[(i, j, k)];
            }
        }
    }
    s
}

pub fn naive_mse(x: &Tensor3<f64>, y: &Tensor3<f64>) -> f64 {
    let [n1, n2, n3] = x.dims();
    let mut s = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            for k in 0..n3 {
                let d = x[(i, j, k)] - y[(i, j, k)];
                s += d * d;
            }
        }
    }
    s / (n1 * n2 * n3) as f64
}

pub fn naive_outer3(u: &[f64], v: &[f64], w: &[f64]) -> Tensor3<f64> {
    let mut t = Tensor3::zeros([u.len(), v.len(), w.len()]);
    for i in 0..u.len() {
        for j in 0..v.len() {
            for k in 0..w.len() {
                t[(i, j, k)] = u[i] * v[j] * w[k];
            }
        }
    }
    t
}

pub fn set(t: &mut Tensor3<f64>, i: usize, j: usize, k: usize, v: f64) {
    let o = t.offset(i, j, k);
    t.as_mut_slice()[o] = v;
}

/// `(X ×_mode A)` with `A` of shape `m × n_mode`.
pub fn naive_mode_product(x: &Tensor3<f64>, a: &Matrix<f64>, mode: Mode) -> Tensor3<f64> {
    let [n1, n2, n3] = x.dims();
    let mut dims = x.dims();
    dims[mode.axis()] = a.rows();
    let mut out = Tensor3::zeros(dims);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let mut s = 0.0;
                match mode {
                    Mode::One => (0..n1).for_each(|p| s += a[(i, p)] * x[(p, j, k)]),
                    Mode::Two => (0..n2).for_each(|p| s += a[(j, p)] * x[(i, p, k)]),
                    Mode::Three => (0..n3).for_each(|p| s += a[(k, p)] * x[(i, j, p)]),
                }
                set(&mut out, i, j, k, s);
            }
        }
    }
    out
}

/// `Σ_{abc} G[a,b,c] A[:,a] ⊗ B[:,b] ⊗ C[:,c]`
pub fn naive_tucker(core: &Tensor3<f64>, f: [&Matrix<f64>; 3]) -> Tensor3<f64> {
    let dims = [f[0].rows(), f[1].rows(), f[2].rows()];
    let [r1, r2, r3] = core.dims();
    let mut out = Tensor3::zeros(dims);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let mut s = 0.0;
                for a in 0..r1 {
                    for b in 0..r2 {
                        for c in 0..r3 {
                            s += core[(a, b, c)] * f[0][(i, a)] * f[1][(j, b)] * f[2][(k, c)];
                        }
                    }
                }
                set(&mut out, i, j, k, s);
            }
        }
    }
    out
}

/// `Σ_r λ_r A[:,r] ⊗ B[:,r] ⊗ C[:,r]`
pub fn naive_cp(weights: &[f64], f: [&Matrix<f64>; 3]) -> Tensor3<f64> {
    let dims = [f[0].rows(), f[1].rows(), f[2].rows()];
    let mut out = Tensor3::zeros(dims);
    for i in 0..dims[0] {
        for j in 0..dims[1] {
            for k in 0..dims[2] {
                let s = (0..weights.len()).map(|r| weights[r] * f[0][(i, r)] * f[1][(j, r)] * f[2][(k, r)]).sum();
                set(&mut out, i, j, k, s);
            }
        }
    }
    out
}

/// Singular values from the eigenvalues of the smaller Gram matrix,
/// computed by cyclic two-sided Jacobi rotations. Sorted descending.
pub fn jacobi_singular_values(a: &Matrix<f64>) -> Vec<f64> {
    let (m, n) = (a.rows(), a.cols());
    let p = m.min(n);
    let mut g = vec![vec![0.0; p]; p];
    for r in 0..p {
        for c in 0..p {
            g[r][c] = if n <= m {
                (0..m).map(|t| a[(t, r)] * a[(t, c)]).sum()
            } else {
                (0..n).map(|t| a[(r, t)] * a[(c, t)]).sum()
            };
        }
    }
    for _ in 0..100 {
        let off: f64 = (0..p).flat_map(|r| (0..p).filter(move |&c| c != r).map(move |c| (r, c))).map(|(r, c)| g[r][c] * g[r][c]).sum();
        let diag: f64 = (0..p).map(|r| g[r][r] * g[r][r]).sum();
        if off <= 1e-30 * diag.max(f64::MIN_POSITIVE) {
            break;
        }
        for r in 0..p {
            for c in r + 1..p {
                if g[r][c] == 0.0 {
                    continue;
                }
                let theta = (g[c][c] - g[r][r]) / (2.0 * g[r][c]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for q in 0..p {
                    let (x, y) = (g[q][r], g[q][c]);
                    g[q][r] = cs * x - sn * y;
                    g[q][c] = sn * x + cs * y;
                }
                for q in 0..p {
                    let (x, y) = (g[r][q], g[c][q]);
                    g[r][q] = cs * x - sn * y;
                    g[c][q] = sn * x + cs * y;
                }
            }
        }
    }
    let mut s: Vec<f64> = (0..p).map(|r| g[r][r].max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Exact multilinear-rank-ρ tensor `G ×1 Q1 ×2 Q2 ×3 Q3` with orthonormal
/// `Q_m`, built here from Gram–Schmidt on random columns.
pub fn exact_rank_tensor(dims: [usize; 3], rho: usize, diagonal_core: bool, rng: &mut ChaCha8Rng) -> Tensor3<f64> {
    let q: Vec<Matrix<f64>> = dims.iter().map(|&n| gram_schmidt(&random_matrix(n, rho, rng))).collect();
    let core = if diagonal_core {
        let mut c = Tensor3::zeros([rho; 3]);
        for i in 0..rho {
            set(&mut c, i, i, i, (rho - i) as f64 + rng.random::<f64>());
        }
        c
    } else {
        random_tensor([rho; 3], rng)
    };
    naive_tucker(&core, [&q[0], &q[1], &q[2]])
}

pub fn gram_schmidt(a: &Matrix<f64>) -> Matrix<f64> {
    let (n, k) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for c in 0..k {
        let mut v: Vec<f64> = (0..n).map(|r| a[(r, c)]).collect();
        for _ in 0..2 {
            for q in &cols {
                let d: f64 = q.iter().zip(&v).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        cols.push(v);
    }
    Matrix::from_fn(n, k, |r, c| cols[c][r])
}

pub fn frob(x: &Tensor3<f64>) -> f64 {
    naive_inner(x, x).sqrt()
}

pub fn diff(x: &Tensor3<f64>, y: &Tensor3<f64>) -> Tensor3<f64> {
    Tensor3::from_fn(x.dims(), |i, j, k| x[(i, j, k)] - y[(i, j, k)])
}
