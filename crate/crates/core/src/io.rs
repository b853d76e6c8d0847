//! Binary volume (`S3DV`) and model (`S3DM`) files. All integers and
//! floats are little-endian.
//!
//! Volume layout:
//!
//! ```text
//! 0   magic  "S3DV"
//! 4   u16    format version (1)
//! 6   u16    dtype: 0 = f32, 1 = f64
//! 8   u32×3  n1, n2, n3
//! 20  payload, n1·n2·n3 scalars, mode 3 fastest
//! ```
//!
//! Model layout:
//!
//! ```text
//! 0   magic  "S3DM"
//! 4   u16    format version (1)
//! 6   u16    method: 0 = s3dsvd, 1 = tucker, 2 = cpd
//! 8   u32×3  n1, n2, n3
//! 20  u32    r
//! 24  f64    U1 (n1×r), U2 (n2×r), U3 (n3×r), each column-major
//!     s3dsvd: core (r³, mode 3 fastest), then qσ (r)
//!     tucker: core (r³)
//!     cpd:    weights (r), then seed (u64)
//! ```
//!
//! Factor columns are stored in coefficient order, so the level-`j` model
//! is the first `j` columns of each factor block plus the leading `j³`
//! core block; [`decode_model_level`] reads only those.

use std::fs;
use std::path::Path;

use crate::baselines::{CpModel, TuckerModel};
use crate::error::{Error, ParseErrorKind, Result};
use crate::metrics::Method;
use crate::s3dsvd::S3dModel;
use crate::tensor::{multilinear_product, Dims, Matrix, Tensor3};

pub const VOLUME_MAGIC: [u8; 4] = *b"S3DV";
pub const MODEL_MAGIC: [u8; 4] = *b"S3DM";
pub const FORMAT_VERSION: u16 = 1;
pub const VOLUME_HEADER_LEN: usize = 20;
pub const MODEL_HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    F32,
    F64,
}

impl Dtype {
    pub fn code(self) -> u16 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    fn from_code(code: u16) -> Option<Self> {
        match code {
            0 => Some(Dtype::F32),
            1 => Some(Dtype::F64),
            _ => None,
        }
    }
}

/// Bounds-checked little-endian reader that reports byte offsets.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::parse(
                self.pos as u64,
                ParseErrorKind::Truncated {
                    expected: (self.pos + n) as u64,
                    found: self.bytes.len() as u64,
                },
            )
        })?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn skip(&mut self, n: usize) -> Result<()> {
        self.take(n).map(|_| ())
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let at = self.pos as u64;
        let raw = self.take(n * 8)?;
        let out: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(at, ParseErrorKind::NonFinite));
        }
        Ok(out)
    }

    fn f32s_widened(&mut self, n: usize) -> Result<Vec<f64>> {
        let at = self.pos as u64;
        let raw = self.take(n * 4)?;
        let out: Vec<f64> = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(at, ParseErrorKind::NonFinite));
        }
        Ok(out)
    }

    fn magic(&mut self, expected: [u8; 4]) -> Result<()> {
        let m: [u8; 4] = self.take(4)?.try_into().expect("4 bytes");
        if m != expected {
            return Err(Error::parse(0, ParseErrorKind::BadMagic(m)));
        }
        Ok(())
    }

    fn version(&mut self) -> Result<()> {
        let at = self.pos as u64;
        let v = self.u16()?;
        if v != FORMAT_VERSION {
            return Err(Error::parse(at, ParseErrorKind::UnsupportedVersion(v)));
        }
        Ok(())
    }

    fn dims(&mut self) -> Result<Dims> {
        let at = self.pos as u64;
        let d = [self.u32()? as usize, self.u32()? as usize, self.u32()? as usize];
        if d.contains(&0) {
            return Err(Error::parse(at, ParseErrorKind::ZeroExtent));
        }
        Ok(d)
    }

    fn expect_len(&self, total: usize) -> Result<()> {
        let len = self.bytes.len();
        if len < total {
            return Err(Error::parse(
                len as u64,
                ParseErrorKind::Truncated { expected: total as u64, found: len as u64 },
            ));
        }
        if len > total {
            return Err(Error::parse(total as u64, ParseErrorKind::TrailingBytes((len - total) as u64)));
        }
        Ok(())
    }
}

fn push_dims(out: &mut Vec<u8>, dims: Dims) -> Result<()> {
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::arg(format!("extent {d} exceeds u32")))?;
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(())
}

fn push_f64s(out: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn encode_volume(x: &Tensor3<f64>, dtype: Dtype) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(VOLUME_HEADER_LEN + x.len() * dtype.size());
    out.extend_from_slice(&VOLUME_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&dtype.code().to_le_bytes());
    push_dims(&mut out, x.dims())?;
    match dtype {
        Dtype::F64 => push_f64s(&mut out, x.as_slice()),
        Dtype::F32 => {
            for &v in x.as_slice() {
                out.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses a volume, widening `f32` payloads to `f64`.
pub fn decode_volume(bytes: &[u8]) -> Result<(Tensor3<f64>, Dtype)> {
    let mut r = Reader::new(bytes);
    r.magic(VOLUME_MAGIC)?;
    r.version()?;
    let at = r.pos as u64;
    let code = r.u16()?;
    let dtype = Dtype::from_code(code).ok_or_else(|| Error::parse(at, ParseErrorKind::UnknownDtype(code)))?;
    let dims = r.dims()?;
    let n: usize = dims.iter().product();
    r.expect_len(VOLUME_HEADER_LEN + n * dtype.size())?;
    let data = match dtype {
        Dtype::F64 => r.f64s(n)?,
        Dtype::F32 => r.f32s_widened(n)?,
    };
    Ok((Tensor3::from_vec(dims, data)?, dtype))
}

pub fn write_volume(path: impl AsRef<Path>, x: &Tensor3<f64>, dtype: Dtype) -> Result<()> {
    fs::write(path, encode_volume(x, dtype)?)?;
    Ok(())
}

pub fn read_volume(path: impl AsRef<Path>) -> Result<Tensor3<f64>> {
    Ok(decode_volume(&fs::read(path)?)?.0)
}

/// The persisted part of a fitted model.
///
/// Fit diagnostics (HOOI history, ALS iteration counts) are not stored.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    S3dSvd(S3dModel<f64>),
    Tucker { factors: [Matrix<f64>; 3], core: Tensor3<f64> },
    Cpd { factors: [Matrix<f64>; 3], weights: Vec<f64>, seed: u64 },
}

impl From<S3dModel<f64>> for ModelFile {
    fn from(m: S3dModel<f64>) -> Self {
        ModelFile::S3dSvd(m)
    }
}

impl From<&TuckerModel<f64>> for ModelFile {
    fn from(m: &TuckerModel<f64>) -> Self {
        ModelFile::Tucker { factors: m.factors.clone(), core: m.core.clone() }
    }
}

impl From<&CpModel<f64>> for ModelFile {
    fn from(m: &CpModel<f64>) -> Self {
        ModelFile::Cpd { factors: m.factors.clone(), weights: m.weights.clone(), seed: m.seed }
    }
}

impl ModelFile {
    pub fn method(&self) -> Method {
        match self {
            ModelFile::S3dSvd(_) => Method::S3dSvd,
            ModelFile::Tucker { .. } => Method::Tucker,
            ModelFile::Cpd { .. } => Method::Cpd,
        }
    }

    pub fn factors(&self) -> &[Matrix<f64>; 3] {
        match self {
            ModelFile::S3dSvd(m) => m.factors(),
            ModelFile::Tucker { factors, .. } | ModelFile::Cpd { factors, .. } => factors,
        }
    }

    pub fn dims(&self) -> Dims {
        let f = self.factors();
        [f[0].rows(), f[1].rows(), f[2].rows()]
    }

    pub fn rank(&self) -> usize {
        self.factors()[0].cols()
    }

    /// Reconstruction from the leading `k` components, or from all of them.
    /// CPD models always use every component.
    pub fn reconstruct(&self, k: Option<usize>) -> Result<Tensor3<f64>> {
        match self {
            ModelFile::S3dSvd(m) => m.reconstruct(k.unwrap_or(m.rank())),
            ModelFile::Tucker { factors, core } => {
                let r = core.dims()[0];
                let k = k.unwrap_or(r);
                if k == 0 || k > r {
                    return Err(Error::arg(format!("truncation level {k} must lie in 1..={r}")));
                }
                let [a, b, c] = factors.each_ref().map(|f| f.leading_cols(k));
                multilinear_product(&core.leading_block([k; 3]), [&a, &b, &c])
            }
            ModelFile::Cpd { factors, weights, seed } => Ok(CpModel {
                factors: factors.clone(),
                weights: weights.clone(),
                seed: *seed,
                iterations_run: 0,
                converged: true,
                regularized: false,
            }
            .reconstruct()),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let dims = self.dims();
        let r = self.rank();
        let mut out = Vec::new();
        out.extend_from_slice(&MODEL_MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&self.method().code().to_le_bytes());
        push_dims(&mut out, dims)?;
        out.extend_from_slice(&u32::try_from(r).map_err(|_| Error::arg("rank exceeds u32"))?.to_le_bytes());
        for f in self.factors() {
            push_f64s(&mut out, f.as_slice());
        }
        match self {
            ModelFile::S3dSvd(m) => {
                push_f64s(&mut out, m.core().as_slice());
                push_f64s(&mut out, m.qsigma());
            }
            ModelFile::Tucker { core, .. } => push_f64s(&mut out, core.as_slice()),
            ModelFile::Cpd { weights, seed, .. } => {
                push_f64s(&mut out, weights);
                out.extend_from_slice(&seed.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        decode_model_impl(bytes, None)
    }
}

/// Reads only the level-`j` prefix of every block: first `j` factor
/// columns, leading `j³` core block and first `j` coefficients. CPD
/// components carry no order and are always used together, so CPD files
/// have no levels.
pub fn decode_model_level(bytes: &[u8], j: usize) -> Result<ModelFile> {
    decode_model_impl(bytes, Some(j))
}

fn payload_len(method: Method, dims: Dims, r: usize) -> usize {
    let factors = (dims[0] + dims[1] + dims[2]) * r * 8;
    factors
        + match method {
            Method::S3dSvd => (r * r * r + r) * 8,
            Method::Tucker => r * r * r * 8,
            Method::Cpd => r * 8 + 8,
        }
}

fn decode_model_impl(bytes: &[u8], level: Option<usize>) -> Result<ModelFile> {
    let mut rd = Reader::new(bytes);
    rd.magic(MODEL_MAGIC)?;
    rd.version()?;
    let at = rd.pos as u64;
    let code = rd.u16()?;
    let method = Method::from_code(code).ok_or_else(|| Error::parse(at, ParseErrorKind::UnknownMethod(code)))?;
    let dims = rd.dims()?;
    let r = rd.u32()? as usize;
    rd.expect_len(MODEL_HEADER_LEN + payload_len(method, dims, r))?;

    if level.is_some() && method == Method::Cpd {
        return Err(Error::arg("cpd models have no truncation levels; read the whole file"));
    }
    let j = level.unwrap_or(r);
    if j == 0 || j > r {
        return Err(Error::arg(format!("model level {j} must lie in 1..={r}")));
    }

    let mut factors = Vec::with_capacity(3);
    for &n in &dims {
        let cols = rd.f64s(n * j)?;
        rd.skip(n * (r - j) * 8)?;
        factors.push(Matrix::from_col_major(n, j, cols)?);
    }
    let factors: [Matrix<f64>; 3] = factors.try_into().expect("three factors");

    let read_core = |rd: &mut Reader| -> Result<Tensor3<f64>> {
        let mut data = Vec::with_capacity(j * j * j);
        for a in 0..r {
            for b in 0..r {
                if a < j && b < j {
                    data.extend(rd.f64s(j)?);
                    rd.skip((r - j) * 8)?;
                } else {
                    rd.skip(r * 8)?;
                }
            }
        }
        Tensor3::from_vec([j, j, j], data)
    };

    Ok(match method {
        Method::S3dSvd => {
            let core = read_core(&mut rd)?;
            let qsigma_at = rd.pos as u64;
            let qsigma = rd.f64s(j)?;
            let model = S3dModel::from_parts(dims, factors, core)?;
            if model.qsigma() != qsigma.as_slice() {
                return Err(Error::parse(
                    qsigma_at,
                    ParseErrorKind::Inconsistent("stored coefficients disagree with core diagonal".into()),
                ));
            }
            ModelFile::S3dSvd(model)
        }
        Method::Tucker => ModelFile::Tucker { factors, core: read_core(&mut rd)? },
        Method::Cpd => {
            let weights = rd.f64s(r)?;
            let seed = rd.u64()?;
            ModelFile::Cpd { factors, weights, seed }
        }
    })
}

pub fn write_model(path: impl AsRef<Path>, model: &ModelFile) -> Result<()> {
    fs::write(path, model.encode()?)?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    ModelFile::decode(&fs::read(path)?)
}

pub fn read_model_level(path: impl AsRef<Path>, j: usize) -> Result<ModelFile> {
    decode_model_level(&fs::read(path)?, j)
}
