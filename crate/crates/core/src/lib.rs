//! Low-rank approximation of dense 3-way volumes.
//!
//! The central method is a Structured 3D-SVD: one truncated SVD per mode
//! unfolding, a projected core, and a diagonal of quasi-singular
//! coefficients whose leading `k³` block gives a progressive
//! reconstruction at every level `k ≤ r` from a single fitted model.
//! Tucker/HOOI and CPD-ALS are provided as baselines, together with
//! quality metrics, binary volume/model files and a sweep harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below name the common instantiations. File I/O and the sweep harness
//! work in `f64`.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod exec;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod s3dsvd;
pub mod scalar;
pub mod synth;
pub mod tensor;

pub use baselines::{
    cpd_decompose, cpd_reconstruct, cpd_study, cpd_study_parallel, tucker_decompose, tucker_reconstruct, CpModel,
    CpOptions, CpStudy, TuckerModel, TuckerOptions,
};
pub use error::{Error, ParseErrorKind, Result};
pub use io::{read_model, read_model_level, read_volume, write_model, write_volume, Dtype, ModelFile};
pub use linalg::{svd, SvdResult};
pub use metrics::{mse, per, psnr, rel_err, select_rank_by_per, Method, MetricsReport};
pub use s3dsvd::{decompose, S3dModel};
pub use scalar::Scalar;
pub use synth::{gen_synthetic, normalize_01, SynthKind, SynthParams};
pub use tensor::{fold, frobenius_norm, inner_product, mode_product, outer3, unfold, Dims, Matrix, Mode, Tensor3};

pub type Tensor3F64 = Tensor3<f64>;
pub type Tensor3F32 = Tensor3<f32>;
pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type S3dModelF64 = S3dModel<f64>;
pub type S3dModelF32 = S3dModel<f32>;
pub type TuckerModelF64 = TuckerModel<f64>;
pub type TuckerModelF32 = TuckerModel<f32>;
pub type CpModelF64 = CpModel<f64>;
pub type CpModelF32 = CpModel<f32>;
