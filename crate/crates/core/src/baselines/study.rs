//! Repeated CPD runs over a list of seeds, summarized as mean and
//! Student-t 95% confidence half-width per metric.

use std::time::Instant;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::cpd::{cpd_decompose, CpOptions};
use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::metrics::{Method, MetricsReport};
use crate::scalar::Scalar;
use crate::tensor::Tensor3;

#[derive(Debug, Clone, PartialEq)]
pub struct CpRun {
    pub seed: u64,
    pub report: MetricsReport,
    pub iterations_run: usize,
    pub converged: bool,
}

impl CpRun {
    pub fn elapsed_seconds(&self) -> f64 {
        self.report.elapsed_seconds
    }
}

/// Sample mean and 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `None` when fewer than two samples make the interval undefined.
    pub ci_half_width: Option<f64>,
}

impl Summary {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        if n < 2 {
            return Summary { mean, ci_half_width: None };
        }
        if samples.iter().all(|&s| s == samples[0]) {
            return Summary { mean, ci_half_width: Some(0.0) };
        }
        let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64;
        Summary { mean, ci_half_width: Some(t_quantile_975(n - 1) * (var / n as f64).sqrt()) }
    }
}

/// Two-sided 95% Student-t critical value with `dof` degrees of freedom.
pub fn t_quantile_975(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CpStudy {
    pub k: usize,
    /// One entry per requested seed, in request order.
    pub runs: Vec<CpRun>,
    pub psnr: Summary,
    pub mse: Summary,
    pub rel_err: Summary,
    pub time: Summary,
}

impl CpStudy {
    /// Mean metrics as a single report row.
    pub fn mean_report(&self) -> MetricsReport {
        MetricsReport {
            method: Method::Cpd,
            k: self.k,
            psnr_db: self.psnr.mean,
            mse: self.mse.mean,
            rel_err: self.rel_err.mean,
            per: None,
            elapsed_seconds: self.time.mean,
        }
    }
}

/// Runs the seeds one after another.
pub fn cpd_study<T: Scalar>(x: &Tensor3<T>, k: usize, seeds: &[u64], opts: &CpOptions) -> Result<CpStudy> {
    cpd_study_parallel(x, k, seeds, opts, 1)
}

/// Runs the seeds on up to `threads` workers; results do not depend on
/// completion order.
pub fn cpd_study_parallel<T: Scalar>(
    x: &Tensor3<T>,
    k: usize,
    seeds: &[u64],
    opts: &CpOptions,
    threads: usize,
) -> Result<CpStudy> {
    if seeds.is_empty() {
        return Err(Error::arg("CPD study needs at least one seed"));
    }
    let runs = map_indexed(threads, seeds.len(), |i| single_run(x, k, seeds[i], opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&CpRun) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
    Ok(CpStudy {
        k,
        psnr: col(|r| r.report.psnr_db),
        mse: col(|r| r.report.mse),
        rel_err: col(|r| r.report.rel_err),
        time: col(|r| r.report.elapsed_seconds),
        runs,
    })
}

fn single_run<T: Scalar>(x: &Tensor3<T>, k: usize, seed: u64, opts: &CpOptions) -> Result<CpRun> {
    let wrap = |e: Error| Error::Study { seed, source: Box::new(e) };
    let start = Instant::now();
    let model = cpd_decompose(x, k, seed, opts).map_err(wrap)?;
    let xhat = model.reconstruct();
    let elapsed = start.elapsed().as_secs_f64();
    let report = MetricsReport::evaluate(Method::Cpd, k, x, &xhat, elapsed).map_err(wrap)?;
    Ok(CpRun { seed, report, iterations_run: model.iterations_run, converged: model.converged })
}
