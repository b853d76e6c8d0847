//! Canonical polyadic decomposition fitted by alternating least squares.
//!
//! Each factor update solves the normal equations `F · (G ∗ H) = MTTKRP`
//! where `G ∗ H` is the Hadamard product of the other two Gram matrices.
//! The matricized-tensor-times-Khatri–Rao products are formed directly on
//! the tensor layout without materializing the Khatri–Rao matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::cholesky;
use crate::scalar::{axpy, Scalar};
use crate::tensor::{frobenius_norm, outer3, Dims, Matrix, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpOptions {
    pub max_iters: usize,
    /// Stop once the relative error changes by less than this between sweeps.
    pub tol: f64,
}

impl Default for CpOptions {
    fn default() -> Self {
        CpOptions { max_iters: 300, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpModel<T = f64> {
    /// Unit-norm columns, one matrix per mode.
    pub factors: [Matrix<T>; 3],
    /// Absorbed column norms, non-negative.
    pub weights: Vec<T>,
    pub seed: u64,
    pub iterations_run: usize,
    pub converged: bool,
    /// A ridge term was added to a near-singular normal-equation system.
    pub regularized: bool,
}

impl<T: Scalar> CpModel<T> {
    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Dims {
        [self.factors[0].rows(), self.factors[1].rows(), self.factors[2].rows()]
    }

    pub fn reconstruct(&self) -> Tensor3<T> {
        cpd_reconstruct(self)
    }
}

/// `Σ_r λ_r a_r ⊗ b_r ⊗ c_r`
pub fn cpd_reconstruct<T: Scalar>(model: &CpModel<T>) -> Tensor3<T> {
    let dims = model.dims();
    let mut out = Tensor3::zeros(dims);
    for (r, &w) in model.weights.iter().enumerate() {
        if w == T::zero() {
            continue;
        }
        let a: Vec<T> = model.factors[0].col(r).iter().map(|&v| v * w).collect();
        let term = outer3(&a, model.factors[1].col(r), model.factors[2].col(r))
            .expect("factor columns are non-empty");
        axpy(T::one(), term.as_slice(), out.as_mut_slice());
    }
    out
}

/// Row-major `n × k` factor used inside the ALS loop.
struct Factor<T> {
    n: usize,
    k: usize,
    data: Vec<T>,
}

impl<T: Scalar> Factor<T> {
    #[inline]
    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.k..(i + 1) * self.k]
    }

    fn gram(&self) -> Vec<T> {
        let k = self.k;
        let mut g = vec![T::zero(); k * k];
        for i in 0..self.n {
            let row = self.row(i);
            for r in 0..k {
                let a = row[r];
                for s in r..k {
                    g[r * k + s] += a * row[s];
                }
            }
        }
        for r in 0..k {
            for s in 0..r {
                g[r * k + s] = g[s * k + r];
            }
        }
        g
    }

    fn to_matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.n, self.k, |i, r| self.data[i * self.k + r])
    }
}

/// Fits a rank-`k` CP model from a seeded uniform `[0, 1)` initialization.
pub fn cpd_decompose<T: Scalar>(
    x: &Tensor3<T>,
    k: usize,
    seed: u64,
    opts: &CpOptions,
) -> Result<CpModel<T>> {
    if k == 0 {
        return Err(Error::arg("CP rank must be at least 1"));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("input tensor contains NaN or infinity".into()));
    }
    let [n1, n2, n3] = x.dims();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = |n: usize| Factor {
        n,
        k,
        data: (0..n * k).map(|_| T::lit(rng.random::<f64>())).collect(),
    };
    let mut a = init(n1);
    let mut b = init(n2);
    let mut c = init(n3);
    let mut weights = vec![T::one(); k];

    let norm_x = frobenius_norm(x);
    if norm_x == T::zero() {
        return Ok(CpModel {
            factors: normalized_matrices(&mut [&mut a, &mut b, &mut c], &mut weights),
            weights: vec![T::zero(); k],
            seed,
            iterations_run: 0,
            converged: true,
            regularized: false,
        });
    }
    let norm_x2 = norm_x * norm_x;
    let tol = T::lit(opts.tol);
    let data = x.as_slice();

    let mut t = vec![T::zero(); n1 * n2 * k];
    let mut m = Vec::new();
    let mut prev_err: Option<T> = None;
    let mut iterations_run = 0;
    let mut converged = false;
    let mut regularized = false;

    for _ in 0..opts.max_iters {
        iterations_run += 1;

        // T[i, j, :] = Σ_l X[i, j, l] C[l, :]
        t.iter_mut().for_each(|v| *v = T::zero());
        for fiber in 0..n1 * n2 {
            let xf = &data[fiber * n3..(fiber + 1) * n3];
            let dst = &mut t[fiber * k..(fiber + 1) * k];
            for (l, &xv) in xf.iter().enumerate() {
                if xv != T::zero() {
                    axpy(xv, c.row(l), dst);
                }
            }
        }
        let gc = c.gram();

        // Mode 1: M[i, :] = Σ_j B[j, :] ∘ T[i, j, :]
        m.clear();
        m.resize(n1 * k, T::zero());
        for i in 0..n1 {
            let dst = &mut m[i * k..(i + 1) * k];
            for j in 0..n2 {
                let tij = &t[(i * n2 + j) * k..(i * n2 + j + 1) * k];
                for ((d, &bv), &tv) in dst.iter_mut().zip(b.row(j)).zip(tij) {
                    *d += bv * tv;
                }
            }
        }
        regularized |= solve_normal(&mut m, &hadamard(&b.gram(), &gc), k)?;
        std::mem::swap(&mut a.data, &mut m);

        // Mode 2: M[j, :] = Σ_i A[i, :] ∘ T[i, j, :]
        m.clear();
        m.resize(n2 * k, T::zero());
        for i in 0..n1 {
            let ai = a.row(i);
            for j in 0..n2 {
                let tij = &t[(i * n2 + j) * k..(i * n2 + j + 1) * k];
                let dst = &mut m[j * k..(j + 1) * k];
                for ((d, &av), &tv) in dst.iter_mut().zip(ai).zip(tij) {
                    *d += av * tv;
                }
            }
        }
        let ga = a.gram();
        regularized |= solve_normal(&mut m, &hadamard(&ga, &gc), k)?;
        std::mem::swap(&mut b.data, &mut m);

        // Mode 3: M[l, :] = Σ_{i,j} X[i, j, l] (A[i, :] ∘ B[j, :])
        m.clear();
        m.resize(n3 * k, T::zero());
        let mut s = vec![T::zero(); k];
        for i in 0..n1 {
            let ai = a.row(i);
            for j in 0..n2 {
                for ((sv, &av), &bv) in s.iter_mut().zip(ai).zip(b.row(j)) {
                    *sv = av * bv;
                }
                let xf = &data[(i * n2 + j) * n3..(i * n2 + j + 1) * n3];
                for (l, &xv) in xf.iter().enumerate() {
                    if xv != T::zero() {
                        axpy(xv, &s, &mut m[l * k..(l + 1) * k]);
                    }
                }
            }
        }
        let mttkrp3 = m.clone();
        let gab = hadamard(&ga, &b.gram());
        regularized |= solve_normal(&mut m, &gab, k)?;
        std::mem::swap(&mut c.data, &mut m);

        // ‖X − X̂‖² = ‖X‖² − 2⟨X, X̂⟩ + ‖X̂‖²
        let inner: T = mttkrp3.iter().zip(&c.data).map(|(&p, &q)| p * q).sum();
        let model_sq: T = gab.iter().zip(&c.gram()).map(|(&p, &q)| p * q).sum();
        let err = ((norm_x2 - inner - inner + model_sq).max(T::zero())).sqrt() / norm_x;

        normalize_in_place(&mut [&mut a, &mut b, &mut c], &mut weights);

        if let Some(p) = prev_err {
            if (err - p).abs() < tol {
                converged = true;
                break;
            }
        }
        prev_err = Some(err);
    }

    Ok(CpModel {
        factors: [a.to_matrix(), b.to_matrix(), c.to_matrix()],
        weights,
        seed,
        iterations_run,
        converged,
        regularized,
    })
}

fn hadamard<T: Scalar>(p: &[T], q: &[T]) -> Vec<T> {
    p.iter().zip(q).map(|(&x, &y)| x * y).collect()
}

/// Replaces each row `m_i` of the row-major `rows × k` block with the
/// solution of `x G = m_i`. Returns whether a ridge was needed.
fn solve_normal<T: Scalar>(m: &mut [T], gram: &[T], k: usize) -> Result<bool> {
    let g = Matrix::from_fn(k, k, |i, j| gram[i * k + j]);
    let scale = (0..k).map(|i| g[(i, i)]).fold(T::zero(), T::max);
    let base = if scale > T::zero() { scale } else { T::one() };
    let mut ridge = T::zero();
    let mut regularized = false;
    let l = loop {
        let mut gr = g.clone();
        for i in 0..k {
            gr[(i, i)] += ridge;
        }
        if let Some(l) = cholesky(&gr) {
            break l;
        }
        regularized = true;
        ridge = if ridge == T::zero() { T::lit(1e-12) * base } else { ridge * T::lit(100.0) };
        if ridge > base {
            return Err(Error::Numeric("ALS normal equations are singular even after regularization".into()));
        }
    };
    let mut y = vec![T::zero(); k];
    for row in m.chunks_exact_mut(k) {
        for i in 0..k {
            let mut s = row[i];
            for q in 0..i {
                s -= l[(i, q)] * y[q];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..k).rev() {
            let mut s = y[i];
            for q in i + 1..k {
                s -= l[(q, i)] * row[q];
            }
            row[i] = s / l[(i, i)];
        }
    }
    Ok(regularized)
}

/// Scales every factor column to unit norm and stores the product of the
/// removed norms in `weights`. Zero columns become `e_0` with weight 0.
fn normalize_in_place<T: Scalar>(factors: &mut [&mut Factor<T>; 3], weights: &mut [T]) {
    let k = weights.len();
    for r in 0..k {
        let mut w = T::one();
        for f in factors.iter_mut() {
            let norm = (0..f.n).map(|i| f.data[i * k + r] * f.data[i * k + r]).sum::<T>().sqrt();
            if norm > T::zero() {
                let inv = T::one() / norm;
                for i in 0..f.n {
                    f.data[i * k + r] *= inv;
                }
            } else {
                for i in 0..f.n {
                    f.data[i * k + r] = if i == 0 { T::one() } else { T::zero() };
                }
            }
            w *= norm;
        }
        weights[r] = w;
    }
}

fn normalized_matrices<T: Scalar>(factors: &mut [&mut Factor<T>; 3], weights: &mut [T]) -> [Matrix<T>; 3] {
    normalize_in_place(factors, weights);
    [factors[0].to_matrix(), factors[1].to_matrix(), factors[2].to_matrix()]
}
