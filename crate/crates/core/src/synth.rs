//! Seeded synthetic volumes.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::qr_thin;
use crate::scalar::Scalar;
use crate::tensor::{multilinear_product, Dims, Matrix, Tensor3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    /// Random orthonormal factors around a dense Gaussian core of extent ρ.
    MultiRank,
    /// Sum of rotated anisotropic Gaussian blobs, scaled to [0, 1].
    Blobs,
    /// `Blobs` plus uniform noise, clipped back to [0, 1].
    BlobsNoisy,
}

impl SynthKind {
    pub const ALL: [SynthKind; 3] = [SynthKind::MultiRank, SynthKind::Blobs, SynthKind::BlobsNoisy];

    pub fn as_str(self) -> &'static str {
        match self {
            SynthKind::MultiRank => "multirank",
            SynthKind::Blobs => "blobs",
            SynthKind::BlobsNoisy => "blobs_noisy",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SynthKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::arg(format!("unknown volume kind `{s}` (expected multirank, blobs or blobs_noisy)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    /// Multilinear rank ρ of `MultiRank`.
    pub rank: usize,
    /// Number of blobs B.
    pub blobs: usize,
    /// Noise amplitude η of `BlobsNoisy`.
    pub noise: f64,
    /// Axis-aligned spheres instead of rotated ellipsoids.
    pub isotropic: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams { rank: 4, blobs: 32, noise: 0.05, isotropic: false }
    }
}

pub fn gen_synthetic(kind: SynthKind, dims: Dims, params: &SynthParams, seed: u64) -> Result<Tensor3<f64>> {
    if dims.contains(&0) {
        return Err(Error::arg(format!("volume dims {dims:?} must be positive")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SynthKind::MultiRank => multirank(dims, params.rank, &mut rng),
        SynthKind::Blobs => normalize_01(&blobs(dims, params, &mut rng)?),
        SynthKind::BlobsNoisy => {
            if !(params.noise >= 0.0 && params.noise.is_finite()) {
                return Err(Error::arg(format!("noise amplitude {} must be finite and non-negative", params.noise)));
            }
            let clean = normalize_01(&blobs(dims, params, &mut rng)?)?;
            let eta = params.noise;
            Ok(clean.map(|v| (v + rng.random_range(-eta..=eta)).clamp(0.0, 1.0)))
        }
    }
}

/// `n × k` matrix with orthonormal columns from the QR factor of a
/// Gaussian matrix.
pub fn random_orthonormal<R: Rng>(n: usize, k: usize, rng: &mut R) -> Result<Matrix<f64>> {
    if k == 0 || k > n {
        return Err(Error::arg(format!("cannot draw {k} orthonormal columns in dimension {n}")));
    }
    let g = Matrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    Ok(qr_thin(&g)?.0)
}

fn multirank(dims: Dims, rho: usize, rng: &mut ChaCha8Rng) -> Result<Tensor3<f64>> {
    let limit = dims.iter().copied().min().unwrap_or(0);
    if rho == 0 || rho > limit {
        return Err(Error::arg(format!("rank {rho} must lie in 1..={limit} for dims {dims:?}")));
    }
    let core = Tensor3::from_fn([rho; 3], |_, _, _| rng.sample::<f64, _>(StandardNormal));
    let q1 = random_orthonormal(dims[0], rho, rng)?;
    let q2 = random_orthonormal(dims[1], rho, rng)?;
    let q3 = random_orthonormal(dims[2], rho, rng)?;
    multilinear_product(&core, [&q1, &q2, &q3])
}

fn blobs(dims: Dims, params: &SynthParams, rng: &mut ChaCha8Rng) -> Result<Tensor3<f64>> {
    if params.blobs == 0 {
        return Err(Error::arg("blob count must be positive"));
    }
    let n = dims.iter().copied().max().unwrap_or(1) as f64;
    let mut out = Tensor3::zeros(dims);
    for _ in 0..params.blobs {
        let amp = rng.random_range(0.5..=1.0);
        let center: [f64; 3] = std::array::from_fn(|m| rng.random_range(0.15..=0.85) * (dims[m] as f64 - 1.0));
        let (rot, widths) = if params.isotropic {
            let w = rng.random_range(0.02..=0.08) * n;
            (Matrix::identity(3), [w; 3])
        } else {
            let widths = std::array::from_fn(|_| rng.random_range(0.02..=0.08) * n);
            (random_orthonormal(3, 3, rng)?, widths)
        };
        // Precision matrix R diag(1/w²) Rᵀ.
        let mut prec = [[0.0; 3]; 3];
        for (a, row) in prec.iter_mut().enumerate() {
            for (b, p) in row.iter_mut().enumerate() {
                *p = (0..3).map(|c| rot[(a, c)] * rot[(b, c)] / (widths[c] * widths[c])).sum();
            }
        }
        let [n1, n2, n3] = dims;
        let data = out.as_mut_slice();
        for i in 0..n1 {
            let di = i as f64 - center[0];
            for j in 0..n2 {
                let dj = j as f64 - center[1];
                let base = (i * n2 + j) * n3;
                for k in 0..n3 {
                    let dk = k as f64 - center[2];
                    let d = [di, dj, dk];
                    let mut q = 0.0;
                    for a in 0..3 {
                        for b in 0..3 {
                            q += d[a] * prec[a][b] * d[b];
                        }
                    }
                    data[base + k] += amp * (-0.5 * q).exp();
                }
            }
        }
    }
    Ok(out)
}

/// Affine map of the value range onto [0, 1].
pub fn normalize_01<T: Scalar>(x: &Tensor3<T>) -> Result<Tensor3<T>> {
    if !x.is_finite() {
        return Err(Error::Numeric("cannot normalize a non-finite volume".into()));
    }
    let lo = x.min_value();
    let hi = x.max_value();
    if !(hi > lo) {
        return Err(Error::degenerate("cannot normalize a constant volume"));
    }
    let span = hi - lo;
    Ok(x.map(|v| ((v - lo) / span).min(T::one())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_volume() {
        for kind in SynthKind::ALL {
            let p = SynthParams::default();
            let a = gen_synthetic(kind, [8, 9, 10], &p, 5).unwrap();
            let b = gen_synthetic(kind, [8, 9, 10], &p, 5).unwrap();
            let c = gen_synthetic(kind, [8, 9, 10], &p, 6).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn blobs_span_unit_interval() {
        let x = gen_synthetic(SynthKind::Blobs, [12, 12, 12], &SynthParams::default(), 1).unwrap();
        assert_eq!(x.min_value(), 0.0);
        assert_eq!(x.max_value(), 1.0);
        let y = gen_synthetic(SynthKind::BlobsNoisy, [12, 12, 12], &SynthParams::default(), 1).unwrap();
        assert!(y.min_value() >= 0.0 && y.max_value() <= 1.0);
        assert!(y.max_abs_diff(&x).unwrap() <= 0.05 + 1e-15);
    }

    #[test]
    fn multirank_rejects_oversized_rank() {
        let p = SynthParams { rank: 6, ..SynthParams::default() };
        assert!(matches!(gen_synthetic(SynthKind::MultiRank, [5, 8, 8], &p, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_orthonormal(10, 4, &mut rng).unwrap();
        assert!(q.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn normalize_constant_is_degenerate() {
        let x = Tensor3::from_fn([2, 2, 2], |_, _, _| 3.0);
        assert!(matches!(normalize_01(&x), Err(Error::Degenerate(_))));
        let y = normalize_01(&Tensor3::from_fn([2, 1, 1], |i, _, _| i as f64 * 4.0 - 1.0)).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in SynthKind::ALL {
            assert_eq!(k.as_str().parse::<SynthKind>().unwrap(), k);
        }
        assert!("noise".parse::<SynthKind>().is_err());
    }
}
