//! Dense matrix factorizations: Householder QR, one-sided Jacobi SVD,
//! Cholesky solves and the Khatri–Rao product.
//!
//! The SVD reduces the long side with a Householder QR first, then runs
//! cyclic one-sided (Hestenes) Jacobi rotations on the small square
//! triangular factor. Jacobi keeps small singular values accurate to
//! full relative precision, which the reconstruction tolerances need.

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};
use crate::tensor::Matrix;

const MAX_JACOBI_SWEEPS: usize = 80;

/// Thin SVD `A = U · diag(σ) · Vᵀ` with `p = min(rows, cols)` triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult<T = f64> {
    /// `rows × p`, orthonormal columns.
    pub u: Matrix<T>,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<T>,
    /// `p × cols`, orthonormal rows.
    pub vt: Matrix<T>,
}

impl<T: Scalar> SvdResult<T> {
    /// `U · diag(σ) · Vᵀ`
    pub fn reconstruct(&self) -> Matrix<T> {
        let mut us = self.u.clone();
        for (j, &s) in self.singular_values.iter().enumerate() {
            us.col_mut(j).iter_mut().for_each(|x| *x *= s);
        }
        us.matmul(&self.vt).expect("svd factors conform")
    }
}

/// Householder reflectors of a thin QR factorization of a tall matrix.
struct Householder<T> {
    /// Reflector vectors stored below (and on) the diagonal, column-major `n × p`.
    v: Matrix<T>,
    /// `τ_j` so that `H_j = I − τ_j v_j v_jᵀ`.
    tau: Vec<T>,
    r: Matrix<T>,
}

fn householder_qr<T: Scalar>(b: &Matrix<T>) -> Householder<T> {
    let (n, p) = (b.rows(), b.cols());
    debug_assert!(n >= p);
    let mut a = b.clone();
    let mut tau = vec![T::zero(); p];
    for j in 0..p {
        let alpha_norm = dot(&a.col(j)[j..], &a.col(j)[j..]).sqrt();
        if alpha_norm == T::zero() {
            continue;
        }
        let x0 = a[(j, j)];
        let beta = if x0 >= T::zero() { -alpha_norm } else { alpha_norm };
        // v = x − β e_1, normalized so v_0 = 1.
        let v0 = x0 - beta;
        {
            let col = a.col_mut(j);
            for x in &mut col[j + 1..] {
                *x /= v0;
            }
            col[j] = beta;
        }
        let t = (beta - x0) / beta;
        tau[j] = t;
        let (head, tail) = a.as_cols_split(j);
        let vj = &head[j + 1..];
        for c in 0..tail.len() / n {
            let col = &mut tail[c * n..(c + 1) * n];
            let s = t * (col[j] + dot(vj, &col[j + 1..]));
            if s != T::zero() {
                col[j] -= s;
                axpy(-s, vj, &mut col[j + 1..]);
            }
        }
    }
    let r = Matrix::from_fn(p, p, |i, j| if i <= j { a[(i, j)] } else { T::zero() });
    Householder { v: a, tau, r }
}

impl<T: Scalar> Householder<T> {
    /// `Q · [Y; 0]` for a `p × c` block `Y`.
    fn apply_q(&self, y: &Matrix<T>) -> Matrix<T> {
        let (n, p) = (self.v.rows(), self.v.cols());
        let mut out = Matrix::zeros(n, y.cols());
        for c in 0..y.cols() {
            out.col_mut(c)[..p].copy_from_slice(y.col(c));
        }
        for j in (0..p).rev() {
            let t = self.tau[j];
            if t == T::zero() {
                continue;
            }
            let vj = &self.v.col(j)[j + 1..];
            for c in 0..out.cols() {
                let col = out.col_mut(c);
                let s = t * (col[j] + dot(vj, &col[j + 1..]));
                if s != T::zero() {
                    col[j] -= s;
                    axpy(-s, vj, &mut col[j + 1..]);
                }
            }
        }
        out
    }
}

impl<T: Scalar> Matrix<T> {
    /// Splits storage into columns `[0, j]` and `(j, cols)`.
    fn as_cols_split(&mut self, j: usize) -> (&[T], &mut [T]) {
        let n = self.rows();
        let (head, tail) = self.as_mut_slice_internal().split_at_mut((j + 1) * n);
        (&head[j * n..], tail)
    }
}

/// Thin QR of a tall matrix: `Q` is `rows × cols` with orthonormal columns,
/// `R` is `cols × cols` upper triangular.
pub fn qr_thin<T: Scalar>(b: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    if b.rows() < b.cols() {
        return Err(Error::shape(format!(
            "thin QR needs rows >= cols, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let h = householder_qr(b);
    let q = h.apply_q(&Matrix::identity(b.cols()));
    Ok((q, h.r))
}

/// Orthogonalizes the columns of `w` in place by cyclic one-sided Jacobi
/// rotations, accumulating the rotations into `v`. Returns the sweep count.
fn one_sided_jacobi<T: Scalar>(w: &mut Matrix<T>, v: &mut Matrix<T>) -> Result<usize> {
    let (n, p) = (w.rows(), w.cols());
    let tol = T::epsilon() * T::lit(n as f64).sqrt();
    let mut norms: Vec<T> = (0..p).map(|j| dot(w.col(j), w.col(j))).collect();
    // Columns below roundoff of the whole matrix are numerically null; they
    // are replaced by the orthonormal completion afterwards.
    let total: T = norms.iter().copied().sum();
    let negligible = T::epsilon() * T::epsilon() * total;
    for sweep in 1..=MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for i in 0..p.saturating_sub(1) {
            for j in i + 1..p {
                let (a, b) = (norms[i], norms[j]);
                if a <= negligible || b <= negligible {
                    continue;
                }
                let d = dot(w.col(i), w.col(j));
                if d.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (d + d);
                let t = if zeta >= T::zero() {
                    T::one() / (zeta + (T::one() + zeta * zeta).sqrt())
                } else {
                    -T::one() / (-zeta + (T::one() + zeta * zeta).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                rotate_cols(w, i, j, c, s);
                rotate_cols(v, i, j, c, s);
                norms[i] = dot(w.col(i), w.col(i));
                norms[j] = dot(w.col(j), w.col(j));
            }
        }
        if !rotated {
            return Ok(sweep);
        }
    }
    Err(Error::Numeric(format!(
        "one-sided Jacobi SVD did not converge in {MAX_JACOBI_SWEEPS} sweeps ({n}x{p})"
    )))
}

/// `(x_i, x_j) ← (c x_i − s x_j, s x_i + c x_j)`
fn rotate_cols<T: Scalar>(m: &mut Matrix<T>, i: usize, j: usize, c: T, s: T) {
    let n = m.rows();
    let data = m.as_mut_slice_internal();
    let (lo, hi) = data.split_at_mut(j * n);
    let xi = &mut lo[i * n..(i + 1) * n];
    let xj = &mut hi[..n];
    for (a, b) in xi.iter_mut().zip(xj.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Square-factor SVD of a tall `B = Q R`: returns `(Y, σ, V)` with
/// `R = Y diag(σ) Vᵀ`, columns sorted by descending `σ`, `Y` and `V`
/// orthogonal.
fn square_svd<T: Scalar>(r: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>, Matrix<T>)> {
    let p = r.cols();
    let mut w = r.clone();
    let mut v = Matrix::identity(p);
    one_sided_jacobi(&mut w, &mut v)?;

    let sigma: Vec<T> = (0..p).map(|j| dot(w.col(j), w.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).expect("finite singular values"));

    let smax = order.first().map_or(T::zero(), |&i| sigma[i]);
    let floor = smax * T::epsilon() * T::lit(p as f64);
    let mut y = Matrix::zeros(p, p);
    let mut vs = Matrix::zeros(p, p);
    let mut sorted = Vec::with_capacity(p);
    let mut missing = Vec::new();
    for (dst, &src) in order.iter().enumerate() {
        let s = sigma[src];
        sorted.push(s);
        vs.col_mut(dst).copy_from_slice(v.col(src));
        if s > floor && s > T::zero() {
            let inv = T::one() / s;
            for (o, &x) in y.col_mut(dst).iter_mut().zip(w.col(src)) {
                *o = x * inv;
            }
        } else {
            missing.push(dst);
        }
    }
    complete_orthonormal(&mut y, &missing);
    Ok((y, sorted, vs))
}

/// Fills the listed columns of `m` with unit vectors orthogonal to every
/// other column. Each new column is the canonical basis vector with the
/// largest residual after two-pass Gram–Schmidt against the columns filled
/// so far; those squared residuals sum to the number of columns still
/// missing, so the chosen one never has norm below `1/√n`.
fn complete_orthonormal<T: Scalar>(m: &mut Matrix<T>, missing: &[usize]) {
    if missing.is_empty() {
        return;
    }
    let n = m.rows();
    let mut filled: Vec<usize> = (0..m.cols()).filter(|c| !missing.contains(c)).collect();
    let mut used = vec![false; n];
    for &target in missing {
        let mut best: Option<(usize, T, Vec<T>)> = None;
        for cand in (0..n).filter(|&c| !used[c]) {
            let mut e = vec![T::zero(); n];
            e[cand] = T::one();
            for _ in 0..2 {
                for &c in &filled {
                    let proj = dot(m.col(c), &e);
                    axpy(-proj, m.col(c), &mut e);
                }
            }
            let norm = dot(&e, &e).sqrt();
            if best.as_ref().is_none_or(|b| norm > b.1) {
                best = Some((cand, norm, e));
            }
        }
        let (cand, norm, e) = best.expect("fewer target columns than rows");
        used[cand] = true;
        let inv = T::one() / norm;
        for (o, x) in m.col_mut(target).iter_mut().zip(e) {
            *o = x * inv;
        }
        filled.push(target);
    }
}

fn check_finite<T: Scalar>(a: &Matrix<T>) -> Result<()> {
    if !a.is_finite() {
        return Err(Error::Numeric("SVD input contains NaN or infinity".into()));
    }
    Ok(())
}

/// Flips column `j` of `u` (and row `j` of the partner) so that the
/// largest-magnitude entry of each column is positive.
fn normalize_signs<T: Scalar>(u: &mut Matrix<T>, mut flip_partner: impl FnMut(usize)) {
    for j in 0..u.cols() {
        let col = u.col(j);
        let mut best = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col.get(best).is_some_and(|&x| x < T::zero()) {
            u.col_mut(j).iter_mut().for_each(|x| *x = -*x);
            flip_partner(j);
        }
    }
}

/// Thin singular value decomposition.
///
/// Deterministic: each left singular vector is sign-normalized so its
/// largest-magnitude entry is positive, with the right vector flipped to
/// match.
pub fn svd<T: Scalar>(a: &Matrix<T>) -> Result<SvdResult<T>> {
    check_finite(a)?;
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Ok(SvdResult {
            u: Matrix::zeros(m, 0),
            singular_values: Vec::new(),
            vt: Matrix::zeros(0, n),
        });
    }
    if m >= n {
        let h = householder_qr(a);
        let (y, sigma, v) = square_svd(&h.r)?;
        let mut u = h.apply_q(&y);
        let mut vt = v.transpose();
        normalize_signs(&mut u, |j| {
            for c in 0..vt.cols() {
                vt[(j, c)] = -vt[(j, c)];
            }
        });
        Ok(SvdResult { u, singular_values: sigma, vt })
    } else {
        // Aᵀ = Q R = Q Y Σ Vᵀ, so A = V Σ (Q Y)ᵀ.
        let h = householder_qr(&a.transpose());
        let (y, sigma, v) = square_svd(&h.r)?;
        let mut right = h.apply_q(&y);
        let mut u = v;
        normalize_signs(&mut u, |j| right.col_mut(j).iter_mut().for_each(|x| *x = -*x));
        Ok(SvdResult { u, singular_values: sigma, vt: right.transpose() })
    }
}

/// Left singular vectors and singular values only.
///
/// Same factors (bit for bit) as [`svd`], skipping the right vectors when
/// the matrix is wide, which is the common case for tensor unfoldings.
pub fn left_singular<T: Scalar>(a: &Matrix<T>) -> Result<(Matrix<T>, Vec<T>)> {
    check_finite(a)?;
    if a.rows() >= a.cols() || a.rows() == 0 {
        let s = svd(a)?;
        return Ok((s.u, s.singular_values));
    }
    let h = householder_qr(&a.transpose());
    let (_, sigma, mut u) = square_svd(&h.r)?;
    normalize_signs(&mut u, |_| {});
    Ok((u, sigma))
}

/// Lower Cholesky factor of a symmetric positive definite matrix, or `None`
/// when a pivot is not safely positive.
pub fn cholesky<T: Scalar>(g: &Matrix<T>) -> Option<Matrix<T>> {
    let n = g.rows();
    let scale = (0..n).map(|i| g[(i, i)].abs()).fold(T::zero(), T::max);
    let floor = scale * T::epsilon() * T::lit(n as f64);
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `X · G = M` for `X` given the Cholesky factor `L` of `G`
/// (`G = L Lᵀ`), row by row.
pub fn solve_right_spd<T: Scalar>(l: &Matrix<T>, m: &Matrix<T>) -> Matrix<T> {
    let n = l.rows();
    assert_eq!(m.cols(), n);
    let mut out = Matrix::zeros(m.rows(), n);
    let mut y = vec![T::zero(); n];
    for row in 0..m.rows() {
        // G xᵀ = mᵀ: forward then backward substitution.
        for i in 0..n {
            let mut s = m[(row, i)];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * out[(row, k)];
            }
            out[(row, i)] = s / l[(i, i)];
        }
    }
    out
}

/// Column-wise Kronecker product: column `r` is `a[:, r] ⊗ b[:, r]`, with
/// the row index of `b` varying fastest.
pub fn khatri_rao<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    if a.cols() != b.cols() {
        return Err(Error::shape(format!(
            "Khatri-Rao needs equal column counts, got {} and {}",
            a.cols(),
            b.cols()
        )));
    }
    let (na, nb) = (a.rows(), b.rows());
    Ok(Matrix::from_fn(na * nb, a.cols(), |row, r| a[(row / nb, r)] * b[(row % nb, r)]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.random::<f64>() - 0.5)
    }

    fn check_contract(a: &Matrix<f64>, s: &SvdResult<f64>) {
        let p = a.rows().min(a.cols());
        assert_eq!(s.singular_values.len(), p);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(s.singular_values.iter().all(|&x| x >= 0.0));
        assert!(s.u.orthonormality_defect() < 1e-10);
        assert!(s.vt.transpose().orthonormality_defect() < 1e-10);
        let norm = a.frobenius_norm();
        if norm > 0.0 {
            let diff: f64 = s
                .reconstruct()
                .as_slice()
                .iter()
                .zip(a.as_slice())
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(diff / norm < 1e-10, "residual {}", diff / norm);
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let s = svd(&Matrix::<f64>::identity(3)).unwrap();
        for &x in &s.singular_values {
            assert!((x - 1.0).abs() < 1e-15);
        }
        let d = Matrix::from_rows(&[vec![3.0, 0.0, 0.0], vec![0.0, 2.0, 0.0], vec![0.0, 0.0, 1.0]])
            .unwrap();
        let s = svd(&d).unwrap();
        for (x, e) in s.singular_values.iter().zip([3.0f64, 2.0, 1.0]) {
            assert!((x - e).abs() < 1e-15);
        }
    }

    #[test]
    fn contract_holds_tall_wide_square() {
        for (r, c, seed) in [(20, 30, 1), (30, 20, 2), (17, 17, 3), (1, 9, 4), (9, 1, 5), (64, 500, 6)] {
            let a = random(r, c, seed);
            check_contract(&a, &svd(&a).unwrap());
        }
    }

    #[test]
    fn rank_deficient_and_zero() {
        // Rank one: x yᵀ.
        let a = Matrix::from_fn(6, 40, |i, j| (i as f64 + 1.0) * ((j as f64) * 0.3).sin());
        let s = svd(&a).unwrap();
        check_contract(&a, &s);
        assert!(s.singular_values[1] < 1e-12 * s.singular_values[0]);

        let z = Matrix::<f64>::zeros(5, 7);
        let s = svd(&z).unwrap();
        check_contract(&z, &s);
        assert!(s.singular_values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn one_missing_direction_in_wide_space() {
        // Rank 63 in 64 dimensions: a single null direction to complete.
        let a = random(64, 63, 11).matmul(&random(63, 200, 12)).unwrap();
        let s = svd(&a).unwrap();
        check_contract(&a, &s);
        assert!(s.singular_values[63] < 1e-12 * s.singular_values[0]);
        let (u, _) = left_singular(&a).unwrap();
        assert_eq!(u, s.u);
    }

    #[test]
    fn sign_convention_and_determinism() {
        let a = random(12, 25, 9);
        let s1 = svd(&a).unwrap();
        let s2 = svd(&a).unwrap();
        assert_eq!(s1, s2);
        for j in 0..s1.u.cols() {
            let col = s1.u.col(j);
            let peak = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(peak > 0.0);
        }
    }

    #[test]
    fn left_singular_matches_full() {
        for (r, c) in [(8, 50), (50, 8), (10, 10)] {
            let a = random(r, c, 77);
            let full = svd(&a).unwrap();
            let (u, s) = left_singular(&a).unwrap();
            assert_eq!(u, full.u);
            assert_eq!(s, full.singular_values);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = random(3, 3, 1);
        a[(1, 1)] = f64::NAN;
        assert!(matches!(svd(&a), Err(Error::Numeric(_))));
    }

    #[test]
    fn f32_svd_reconstructs() {
        let a: Matrix<f32> = random(15, 9, 3).cast();
        let s = svd(&a).unwrap();
        let r = s.reconstruct();
        let err: f32 = r.as_slice().iter().zip(a.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f32::max);
        assert!(err < 1e-5);
    }

    #[test]
    fn qr_factors() {
        let a = random(30, 6, 4);
        let (q, r) = qr_thin(&a).unwrap();
        assert!(q.orthonormality_defect() < 1e-13);
        let qr = q.matmul(&r).unwrap();
        let err = qr.as_slice().iter().zip(a.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-13);
        for j in 0..6 {
            for i in j + 1..6 {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_solve() {
        let b = random(10, 4, 8);
        let g = b.t_matmul(&b).unwrap();
        let l = cholesky(&g).unwrap();
        let m = random(7, 4, 9);
        let x = solve_right_spd(&l, &m);
        let back = x.matmul(&g).unwrap();
        let err = back.as_slice().iter().zip(m.as_slice()).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10);
        assert!(cholesky(&Matrix::<f64>::zeros(3, 3)).is_none());
    }

    #[test]
    fn khatri_rao_layout() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![5.0, 6.0], vec![7.0, 8.0], vec![9.0, 10.0]]).unwrap();
        let kr = khatri_rao(&a, &b).unwrap();
        assert_eq!((kr.rows(), kr.cols()), (6, 2));
        assert_eq!(kr.col(0), &[5.0, 7.0, 9.0, 15.0, 21.0, 27.0]);
        assert_eq!(kr.col(1), &[12.0, 16.0, 20.0, 24.0, 32.0, 40.0]);
    }
}
