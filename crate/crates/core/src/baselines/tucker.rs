//! Tucker decomposition at multilinear rank `(k, k, k)`: HOSVD
//! initialization refined by higher-order orthogonal iteration (HOOI).

use crate::error::{Error, Result};
use crate::linalg::left_singular;
use crate::metrics::rel_err;
use crate::s3dsvd::truncated_mode_factors;
use crate::scalar::Scalar;
use crate::tensor::{mode_product, multilinear_product, project, unfold, Dims, Matrix, Mode, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuckerOptions {
    pub max_iters: usize,
    /// Stop once a sweep improves the relative error by less than this.
    pub tol: f64,
}

impl Default for TuckerOptions {
    fn default() -> Self {
        TuckerOptions { max_iters: 50, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel<T = f64> {
    pub factors: [Matrix<T>; 3],
    pub core: Tensor3<T>,
    /// Relative error after HOSVD initialization, then after each HOOI sweep.
    pub fit_history: Vec<T>,
}

impl<T: Scalar> TuckerModel<T> {
    pub fn rank(&self) -> usize {
        self.core.dims()[0]
    }

    pub fn dims(&self) -> Dims {
        [self.factors[0].rows(), self.factors[1].rows(), self.factors[2].rows()]
    }

    /// HOOI sweeps performed.
    pub fn sweeps(&self) -> usize {
        self.fit_history.len().saturating_sub(1)
    }

    /// `G ×1 U1 ×2 U2 ×3 U3`
    pub fn reconstruct(&self) -> Result<Tensor3<T>> {
        tucker_reconstruct(self)
    }
}

pub fn tucker_reconstruct<T: Scalar>(model: &TuckerModel<T>) -> Result<Tensor3<T>> {
    let [a, b, c] = &model.factors;
    multilinear_product(&model.core, [a, b, c])
}

pub fn tucker_decompose<T: Scalar>(
    x: &Tensor3<T>,
    k: usize,
    opts: &TuckerOptions,
) -> Result<TuckerModel<T>> {
    let limit = x.min_dim();
    if k == 0 || k > limit {
        return Err(Error::arg(format!(
            "rank {k} must lie in 1..={limit} (min of dims {:?})",
            x.dims()
        )));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("input tensor contains NaN or infinity".into()));
    }
    let zero_input = x.as_slice().iter().all(|&v| v == T::zero());

    let mut factors = truncated_mode_factors(x, k)?;
    let fit = |f: &[Matrix<T>; 3]| -> Result<T> {
        if zero_input {
            return Ok(T::zero());
        }
        let core = project(x, [&f[0], &f[1], &f[2]])?;
        rel_err(x, &multilinear_product(&core, [&f[0], &f[1], &f[2]])?)
    };
    let mut history = vec![fit(&factors)?];
    let tol = T::lit(opts.tol);

    for _ in 0..opts.max_iters {
        for mode in Mode::ALL {
            let y = contract_all_but(x, &factors, mode)?;
            let (u, _) = left_singular(&unfold(&y, mode))?;
            factors[mode.axis()] = u.leading_cols(k);
        }
        let err = fit(&factors)?;
        let prev = *history.last().expect("non-empty history");
        history.push(err);
        if prev - err < tol {
            break;
        }
    }

    let core = project(x, [&factors[0], &factors[1], &factors[2]])?;
    Ok(TuckerModel { factors, core, fit_history: history })
}

/// `X` multiplied by the transposed factors of every mode except `skip`.
fn contract_all_but<T: Scalar>(x: &Tensor3<T>, factors: &[Matrix<T>; 3], skip: Mode) -> Result<Tensor3<T>> {
    let mut t = x.clone();
    for mode in Mode::ALL {
        if mode != skip {
            t = mode_product(&t, &factors[mode.axis()].transpose(), mode)?;
        }
    }
    Ok(t)
}
