//! Optional fan-out of independent jobs over a bounded thread pool.

use rayon::prelude::*;

/// Environment variable capping worker threads for sweeps and studies.
pub const THREADS_ENV: &str = "VOLRANK_THREADS";

/// Worker count from `VOLRANK_THREADS`; serial (1) when unset or invalid.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

/// Runs `f(0..n)` and returns results in index order, regardless of the
/// order in which jobs complete.
pub fn map_indexed<R, F>(threads: usize, n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..n).into_par_iter().map(&f).collect()),
        Err(_) => (0..n).map(f).collect(),
    }
}
