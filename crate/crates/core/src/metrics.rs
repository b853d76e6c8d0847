//! Reconstruction quality measures and energy-based rank selection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::s3dsvd::S3dModel;
use crate::scalar::Scalar;
use crate::tensor::{frobenius_norm, Tensor3};

/// Decomposition method; the numeric code is the on-disk method code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    S3dSvd,
    Tucker,
    Cpd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::S3dSvd, Method::Tucker, Method::Cpd];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::S3dSvd => "s3dsvd",
            Method::Tucker => "tucker",
            Method::Cpd => "cpd",
        }
    }

    pub fn code(self) -> u16 {
        match self {
            Method::S3dSvd => 0,
            Method::Tucker => 1,
            Method::Cpd => 2,
        }
    }

    pub fn from_code(code: u16) -> Option<Self> {
        Method::ALL.into_iter().find(|m| m.code() == code)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown method `{s}` (expected s3dsvd, tucker or cpd)")))
    }
}

/// Quality of one `(method, k)` reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub method: Method,
    pub k: usize,
    /// `+inf` for an exact reconstruction.
    pub psnr_db: f64,
    pub mse: f64,
    pub rel_err: f64,
    /// Energy retained; only meaningful for Structured 3D-SVD.
    pub per: Option<f64>,
    pub elapsed_seconds: f64,
}

impl MetricsReport {
    /// PSNR, MSE and RelErr of `xhat` against `x`.
    pub fn evaluate<T: Scalar>(
        method: Method,
        k: usize,
        x: &Tensor3<T>,
        xhat: &Tensor3<T>,
        elapsed_seconds: f64,
    ) -> Result<Self> {
        Ok(MetricsReport {
            method,
            k,
            psnr_db: psnr(x, xhat)?.to_f64_lossy(),
            mse: mse(x, xhat)?.to_f64_lossy(),
            rel_err: rel_err(x, xhat)?.to_f64_lossy(),
            per: None,
            elapsed_seconds,
        })
    }
}

fn check_dims<T: Scalar>(x: &Tensor3<T>, xhat: &Tensor3<T>) -> Result<()> {
    if x.dims() != xhat.dims() {
        return Err(Error::shape(format!("dims {:?} vs {:?}", x.dims(), xhat.dims())));
    }
    Ok(())
}

fn squared_error<T: Scalar>(x: &Tensor3<T>, xhat: &Tensor3<T>) -> T {
    x.as_slice()
        .iter()
        .zip(xhat.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum()
}

/// Mean squared error over all voxels.
pub fn mse<T: Scalar>(x: &Tensor3<T>, xhat: &Tensor3<T>) -> Result<T> {
    check_dims(x, xhat)?;
    if x.is_empty() {
        return Err(Error::degenerate("mean of an empty tensor"));
    }
    Ok(squared_error(x, xhat) / T::lit(x.len() as f64))
}

/// `10 log10(I_max² / MSE)` with `I_max` the maximum of the original `x`.
///
/// Returns `+inf` when the reconstruction is exact.
pub fn psnr<T: Scalar>(x: &Tensor3<T>, xhat: &Tensor3<T>) -> Result<T> {
    let err = mse(x, xhat)?;
    let peak = x.max_value();
    if !(peak > T::zero()) {
        return Err(Error::degenerate("PSNR needs a positive peak intensity"));
    }
    Ok(psnr_from_mse(peak, err))
}

pub fn psnr_from_mse<T: Scalar>(peak: T, mse: T) -> T {
    if mse == T::zero() {
        return T::infinity();
    }
    T::lit(10.0) * (peak * peak / mse).log10()
}

/// `‖x − x̂‖_F / ‖x‖_F`
pub fn rel_err<T: Scalar>(x: &Tensor3<T>, xhat: &Tensor3<T>) -> Result<T> {
    check_dims(x, xhat)?;
    let norm = frobenius_norm(x);
    if norm == T::zero() {
        return Err(Error::degenerate("relative error of a zero tensor is undefined"));
    }
    Ok(squared_error(x, xhat).sqrt() / norm)
}

/// Percentage of energy retained: `Σ_{i≤k} qσ_i² / Σ_{i≤r} qσ_i²` in
/// factor-column order.
pub fn per<T: Scalar>(model: &S3dModel<T>, k: usize) -> Result<T> {
    Ok(per_curve(model.qsigma())?
        .get(k.wrapping_sub(1))
        .copied()
        .ok_or_else(|| Error::arg(format!("truncation level {k} must lie in 1..={}", model.rank())))?)
}

/// `PER(1), …, PER(r)`.
pub fn per_curve<T: Scalar>(qsigma: &[T]) -> Result<Vec<T>> {
    let total: T = qsigma.iter().map(|&q| q * q).sum();
    if !(total > T::zero()) {
        return Err(Error::degenerate("all quasi-singular coefficients are zero"));
    }
    let mut acc = T::zero();
    let mut out: Vec<T> = qsigma
        .iter()
        .map(|&q| {
            acc += q * q;
            (acc / total).min(T::one())
        })
        .collect();
    if let Some(last) = out.last_mut() {
        *last = T::one();
    }
    Ok(out)
}

/// Smallest `k` with `PER(k) ≥ threshold`.
pub fn select_rank_by_per<T: Scalar>(model: &S3dModel<T>, threshold: T) -> Result<usize> {
    select_rank_from_qsigma(model.qsigma(), threshold)
}

pub fn select_rank_from_qsigma<T: Scalar>(qsigma: &[T], threshold: T) -> Result<usize> {
    if !(threshold > T::zero() && threshold <= T::one()) {
        return Err(Error::arg(format!("PER threshold {threshold} must lie in (0, 1]")));
    }
    let curve = per_curve(qsigma)?;
    Ok(curve.iter().position(|&p| p >= threshold).map_or(curve.len(), |i| i + 1))
}
