//! Structured 3D-SVD: mode-wise SVD factors, a reduced core, and the
//! quasi-singular coefficients read off the core diagonal.
//!
//! One model computed at maximum rank `r` serves every truncation level
//! `k ≤ r`: [`S3dModel::reconstruct`] takes the leading `k × k × k` block
//! of the core and the first `k` columns of each factor.

use crate::error::{Error, Result};
use crate::linalg::left_singular;
use crate::scalar::Scalar;
use crate::tensor::{frobenius_norm, multilinear_product, project, unfold, Dims, Matrix, Mode, Tensor3};

/// Output of [`decompose`].
#[derive(Debug, Clone, PartialEq)]
pub struct S3dModel<T = f64> {
    dims: Dims,
    rank: usize,
    factors: [Matrix<T>; 3],
    core: Tensor3<T>,
    qsigma: Vec<T>,
}

/// Quasi-singular coefficients placed on the main diagonal of an `r × r × r` array.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffArray<T = f64> {
    pub rank: usize,
    pub s: Tensor3<T>,
}

/// One entry of [`S3dModel::ordering_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingEntry<T = f64> {
    pub index: usize,
    pub magnitude: T,
    /// `|qσ_i| < |qσ_{i+1}|`
    pub violation: bool,
}

/// Builds the model at maximum rank `r`.
///
/// Each unfolding `X_(m)` is factored by SVD, its left singular vectors are
/// truncated to `r` columns, the core is `X ×1 U1ᵀ ×2 U2ᵀ ×3 U3ᵀ`, and
/// `qσ_i = G_iii`. The coefficients are kept signed and in factor-column
/// order.
pub fn decompose<T: Scalar>(x: &Tensor3<T>, r: usize) -> Result<S3dModel<T>> {
    check_rank(x.dims(), r)?;
    if !x.is_finite() {
        return Err(Error::Numeric("input tensor contains NaN or infinity".into()));
    }
    let factors = truncated_mode_factors(x, r)?;
    let core = project(x, [&factors[0], &factors[1], &factors[2]])?;
    S3dModel::from_parts(x.dims(), factors, core)
}

/// Leading `r` left singular vectors of each unfolding.
pub(crate) fn truncated_mode_factors<T: Scalar>(x: &Tensor3<T>, r: usize) -> Result<[Matrix<T>; 3]> {
    let mut out = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let (u, _) = left_singular(&unfold(x, mode))?;
        out.push(u.leading_cols(r));
    }
    Ok(out.try_into().expect("three modes"))
}

fn check_rank(dims: Dims, r: usize) -> Result<()> {
    let limit = dims.iter().copied().min().unwrap_or(0);
    if r == 0 || r > limit {
        return Err(Error::arg(format!("rank {r} must lie in 1..={limit} (min of dims {dims:?})")));
    }
    Ok(())
}

impl<T: Scalar> S3dModel<T> {
    /// Assembles a model from stored factors and core, reading `qσ` off the
    /// core diagonal.
    pub fn from_parts(dims: Dims, factors: [Matrix<T>; 3], core: Tensor3<T>) -> Result<Self> {
        let r = core.dims()[0];
        if core.dims() != [r, r, r] {
            return Err(Error::shape(format!("core must be cubic, got {:?}", core.dims())));
        }
        check_rank(dims, r)?;
        for (m, f) in factors.iter().enumerate() {
            if (f.rows(), f.cols()) != (dims[m], r) {
                return Err(Error::shape(format!(
                    "factor {} is {}x{}, expected {}x{r}",
                    m + 1,
                    f.rows(),
                    f.cols(),
                    dims[m]
                )));
            }
        }
        let qsigma = (0..r).map(|i| core[(i, i, i)]).collect();
        Ok(S3dModel { dims, rank: r, factors, core, qsigma })
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Maximum rank `r`.
    #[inline]
    pub fn rank(&self) -> usize {
        self.rank
    }

    #[inline]
    pub fn factors(&self) -> &[Matrix<T>; 3] {
        &self.factors
    }

    #[inline]
    pub fn core(&self) -> &Tensor3<T> {
        &self.core
    }

    /// Signed diagonal core entries `G_iii`, in factor-column order.
    #[inline]
    pub fn qsigma(&self) -> &[T] {
        &self.qsigma
    }

    /// Mode vectors `(u⁽ⁱ⁾, v⁽ⁱ⁾, w⁽ⁱ⁾)` of component `i`.
    pub fn component(&self, i: usize) -> (&[T], &[T], &[T]) {
        (self.factors[0].col(i), self.factors[1].col(i), self.factors[2].col(i))
    }

    fn check_level(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.rank {
            return Err(Error::arg(format!(
                "truncation level {k} must lie in 1..={}",
                self.rank
            )));
        }
        Ok(())
    }

    /// The level-`k` model: leading `k³` core block and first `k` columns
    /// of each factor.
    pub fn truncate(&self, k: usize) -> Result<S3dModel<T>> {
        self.check_level(k)?;
        let factors = [
            self.factors[0].leading_cols(k),
            self.factors[1].leading_cols(k),
            self.factors[2].leading_cols(k),
        ];
        Ok(S3dModel {
            dims: self.dims,
            rank: k,
            factors,
            core: self.core.leading_block([k, k, k]),
            qsigma: self.qsigma[..k].to_vec(),
        })
    }

    /// `X_k = G_k ×1 U_{1,k} ×2 U_{2,k} ×3 U_{3,k}`
    pub fn reconstruct(&self, k: usize) -> Result<Tensor3<T>> {
        self.check_level(k)?;
        if k == self.rank {
            return multilinear_product(&self.core, [&self.factors[0], &self.factors[1], &self.factors[2]]);
        }
        let t = self.truncate(k)?;
        multilinear_product(&t.core, [&t.factors[0], &t.factors[1], &t.factors[2]])
    }

    /// `X̄_k = Σ_{i<k} qσ_i u⁽ⁱ⁾ ⊗ v⁽ⁱ⁾ ⊗ w⁽ⁱ⁾`, using only the core diagonal.
    pub fn diagonal_expansion(&self, k: usize) -> Result<Tensor3<T>> {
        self.check_level(k)?;
        let [n1, n2, n3] = self.dims;
        let mut out = Tensor3::zeros(self.dims);
        let data = out.as_mut_slice();
        let mut vw = vec![T::zero(); n2 * n3];
        for i in 0..k {
            let (u, v, w) = self.component(i);
            let q = self.qsigma[i];
            for j in 0..n2 {
                for l in 0..n3 {
                    vw[j * n3 + l] = q * v[j] * w[l];
                }
            }
            for a in 0..n1 {
                let ua = u[a];
                for (o, &p) in data[a * n2 * n3..(a + 1) * n2 * n3].iter_mut().zip(&vw) {
                    *o += ua * p;
                }
            }
        }
        Ok(out)
    }

    /// `ε_k = sqrt(1 − Σ_{i<k} qσ_i² / ‖X‖_F²)`: the relative error of the
    /// diagonal expansion, from coefficients alone unless it is below 1e-2.
    pub fn epsilon_r(&self, x: &Tensor3<T>, k: usize) -> Result<T> {
        self.check_level(k)?;
        if x.dims() != self.dims {
            return Err(Error::shape(format!("model dims {:?} vs tensor {:?}", self.dims, x.dims())));
        }
        let norm = frobenius_norm(x);
        if norm == T::zero() {
            return Err(Error::degenerate("relative error of a zero tensor is undefined"));
        }
        let energy: T = self.qsigma[..k].iter().map(|&q| q * q).sum();
        let deficit = T::one() - energy / (norm * norm);
        if deficit >= T::lit(1e-4) {
            return Ok(deficit.sqrt());
        }
        // Near-exact fits: the subtraction above keeps only a few
        // significant bits, so take the residual norm directly.
        let residual = x.sub(&self.diagonal_expansion(k)?)?;
        Ok(frobenius_norm(&residual) / norm)
    }

    pub fn coeff_array(&self) -> CoeffArray<T> {
        let r = self.rank;
        let mut s = Tensor3::zeros([r, r, r]);
        for (i, &q) in self.qsigma.iter().enumerate() {
            s[(i, i, i)] = q;
        }
        CoeffArray { rank: r, s }
    }

    /// Flags every position where `|qσ_i| < |qσ_{i+1}|`. Diagnostic only:
    /// the coefficients are never reordered.
    pub fn ordering_report(&self) -> Vec<OrderingEntry<T>> {
        ordering_report(&self.qsigma)
    }

    /// Flips the sign of factor column `i` in mode `mode` and of the
    /// matching core slice, leaving every reconstruction unchanged.
    pub fn flip_component_sign(&mut self, mode: Mode, i: usize) {
        self.factors[mode.axis()].col_mut(i).iter_mut().for_each(|x| *x = -*x);
        let r = self.rank;
        for a in 0..r {
            for b in 0..r {
                let idx = match mode {
                    Mode::One => (i, a, b),
                    Mode::Two => (a, i, b),
                    Mode::Three => (a, b, i),
                };
                self.core[idx] = -self.core[idx];
            }
        }
        for (d, q) in self.qsigma.iter_mut().enumerate() {
            *q = self.core[(d, d, d)];
        }
    }
}

impl<T: Scalar> CoeffArray<T> {
    /// The main-diagonal entries `S_iii`.
    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rank).map(|i| self.s[(i, i, i)]).collect()
    }
}

pub fn ordering_report<T: Scalar>(qsigma: &[T]) -> Vec<OrderingEntry<T>> {
    qsigma
        .iter()
        .enumerate()
        .map(|(i, q)| OrderingEntry {
            index: i,
            magnitude: q.abs(),
            violation: qsigma.get(i + 1).is_some_and(|next| q.abs() < next.abs()),
        })
        .collect()
}
