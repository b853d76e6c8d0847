//! Comparison methods: Tucker/HOOI and CPD-ALS, plus the seeded CPD study.

pub mod cpd;
pub mod study;
pub mod tucker;

pub use cpd::{cpd_decompose, cpd_reconstruct, CpModel, CpOptions};
pub use study::{cpd_study, cpd_study_parallel, CpRun, CpStudy, Summary};
pub use tucker::{tucker_decompose, tucker_reconstruct, TuckerModel, TuckerOptions};
