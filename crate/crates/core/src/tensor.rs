//! Dense third-order tensors, column-major matrices and the multilinear
//! primitives built on them.
//!
//! Entry `(i, j, k)` of an `n1 × n2 × n3` tensor lives at linear offset
//! `(i * n2 + j) * n3 + k`: mode 3 varies fastest, mode 1 slowest. The
//! same layout is used by the on-disk formats.
//!
//! Mode-`m` unfoldings put mode `m` on the rows; the columns enumerate the
//! two remaining indices with the lower-numbered one varying fastest:
//!
//! | mode | row | column          |
//! |------|-----|-----------------|
//! | 1    | i   | j + k·n2        |
//! | 2    | j   | i + k·n1        |
//! | 3    | k   | i + j·n1        |

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, Scalar};

/// One of the three tensor modes, numbered 1 to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Parses the 1-based mode number.
    pub fn new(mode: usize) -> Result<Self> {
        match mode {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            m => Err(Error::arg(format!("mode must be 1, 2 or 3, got {m}"))),
        }
    }

    /// Zero-based axis index.
    #[inline]
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }
}

/// Column-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T = f64> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::shape("ragged rows"));
        }
        Ok(Self::from_fn(nrows, ncols, |i, j| rows[i][j]))
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Column-major storage.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub(crate) fn as_mut_slice_internal(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[T] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// The first `k` columns.
    pub fn leading_cols(&self, k: usize) -> Self {
        assert!(k <= self.cols, "leading_cols: {k} > {}", self.cols);
        Matrix { rows: self.rows, cols: k, data: self.data[..k * self.rows].to_vec() }
    }

    pub fn matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::shape(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (l, &b) in rhs.col(j).iter().enumerate() {
                if b != T::zero() {
                    axpy(b, &self.data[l * self.rows..(l + 1) * self.rows], dst);
                }
            }
        }
        Ok(out)
    }

    /// `selfᵀ · rhs`
    pub fn t_matmul(&self, rhs: &Matrix<T>) -> Result<Self> {
        if self.rows != rhs.rows {
            return Err(Error::shape(format!(
                "transposed matmul {}x{} by {}x{}",
                self.cols, self.rows, rhs.rows, rhs.cols
            )));
        }
        Ok(Self::from_fn(self.cols, rhs.cols, |i, j| dot(self.col(i), rhs.col(j))))
    }

    pub fn frobenius_norm(&self) -> T {
        dot(&self.data, &self.data).sqrt()
    }

    /// Largest absolute entry-wise deviation of `selfᵀ self` from the identity.
    pub fn orthonormality_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.cols {
            for j in 0..self.cols {
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot(self.col(i), self.col(j)) - target).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| U::lit(x.to_f64_lossy())).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

/// Extents `(n1, n2, n3)` of a third-order tensor.
pub type Dims = [usize; 3];

/// Dense real third-order tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T = f64> {
    dims: Dims,
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(dims: Dims) -> Self {
        Tensor3 { dims, data: vec![T::zero(); dims.iter().product()] }
    }

    pub fn from_vec(dims: Dims, data: Vec<T>) -> Result<Self> {
        let len: usize = dims.iter().product();
        if data.len() != len {
            return Err(Error::shape(format!(
                "{dims:?} tensor needs {len} entries, got {}",
                data.len()
            )));
        }
        Ok(Tensor3 { dims, data })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dims.iter().product());
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for k in 0..dims[2] {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 { dims, data }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Linear storage, mode 3 fastest.
    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn min_dim(&self) -> usize {
        self.dims.iter().copied().min().unwrap_or(0)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn max_value(&self) -> T {
        self.data.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min_value(&self) -> T {
        self.data.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Tensor3 { dims: self.dims, data: self.data.iter().map(|&x| f(x)).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor3<U> {
        Tensor3 { dims: self.dims, data: self.data.iter().map(|&x| U::lit(x.to_f64_lossy())).collect() }
    }

    pub fn sub(&self, other: &Tensor3<T>) -> Result<Self> {
        check_same_dims(self, other)?;
        Ok(Tensor3 {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        })
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Tensor3<T>) -> Result<T> {
        check_same_dims(self, other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs())))
    }

    /// Leading `a × b × c` corner.
    pub fn leading_block(&self, [a, b, c]: Dims) -> Self {
        assert!(a <= self.dims[0] && b <= self.dims[1] && c <= self.dims[2]);
        let mut data = Vec::with_capacity(a * b * c);
        for i in 0..a {
            for j in 0..b {
                let start = self.offset(i, j, 0);
                data.extend_from_slice(&self.data[start..start + c]);
            }
        }
        Tensor3 { dims: [a, b, c], data }
    }

    /// Mode-3 slice `X[:, :, k]` as an `n1 × n2` matrix.
    pub fn frontal_slice(&self, k: usize) -> Matrix<T> {
        Matrix::from_fn(self.dims[0], self.dims[1], |i, j| self[(i, j, k)])
    }
}

impl<T: Scalar> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &T {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        &self.data[self.offset(i, j, k)]
    }
}

impl<T: Scalar> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut T {
        debug_assert!(i < self.dims[0] && j < self.dims[1] && k < self.dims[2]);
        let o = self.offset(i, j, k);
        &mut self.data[o]
    }
}

fn check_same_dims<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::shape(format!("dims {:?} vs {:?}", a.dims, b.dims)));
    }
    Ok(())
}

/// `⟨A, B⟩ = Σ A_ijk B_ijk`
pub fn inner_product<T: Scalar>(a: &Tensor3<T>, b: &Tensor3<T>) -> Result<T> {
    check_same_dims(a, b)?;
    Ok(dot(&a.data, &b.data))
}

pub fn frobenius_norm<T: Scalar>(a: &Tensor3<T>) -> T {
    dot(&a.data, &a.data).sqrt()
}

/// Rank-one tensor `u ⊗ v ⊗ w`.
pub fn outer3<T: Scalar>(u: &[T], v: &[T], w: &[T]) -> Result<Tensor3<T>> {
    if u.is_empty() || v.is_empty() || w.is_empty() {
        return Err(Error::shape("outer3 needs non-empty vectors"));
    }
    let mut data = Vec::with_capacity(u.len() * v.len() * w.len());
    for &ui in u {
        for &vj in v {
            let uv = ui * vj;
            data.extend(w.iter().map(|&wk| uv * wk));
        }
    }
    Ok(Tensor3 { dims: [u.len(), v.len(), w.len()], data })
}

/// Mode-`m` unfolding `X_(m)`.
pub fn unfold<T: Scalar>(x: &Tensor3<T>, mode: Mode) -> Matrix<T> {
    let [n1, n2, n3] = x.dims;
    match mode {
        Mode::One => {
            let mut m = Matrix::zeros(n1, n2 * n3);
            for i in 0..n1 {
                for j in 0..n2 {
                    for k in 0..n3 {
                        m[(i, j + k * n2)] = x[(i, j, k)];
                    }
                }
            }
            m
        }
        Mode::Two => {
            let mut m = Matrix::zeros(n2, n1 * n3);
            for i in 0..n1 {
                for j in 0..n2 {
                    for k in 0..n3 {
                        m[(j, i + k * n1)] = x[(i, j, k)];
                    }
                }
            }
            m
        }
        Mode::Three => {
            // Column i + j·n1 is the mode-3 fiber (i, j), contiguous in `x`.
            let mut m = Matrix::zeros(n3, n1 * n2);
            for i in 0..n1 {
                for j in 0..n2 {
                    let start = x.offset(i, j, 0);
                    m.col_mut(i + j * n1).copy_from_slice(&x.data[start..start + n3]);
                }
            }
            m
        }
    }
}

/// Inverse of [`unfold`].
pub fn fold<T: Scalar>(m: &Matrix<T>, mode: Mode, dims: Dims) -> Result<Tensor3<T>> {
    let [n1, n2, n3] = dims;
    let expected = match mode {
        Mode::One => (n1, n2 * n3),
        Mode::Two => (n2, n1 * n3),
        Mode::Three => (n3, n1 * n2),
    };
    if (m.rows(), m.cols()) != expected {
        return Err(Error::shape(format!(
            "cannot fold {}x{} matrix along mode {} into {dims:?}",
            m.rows(),
            m.cols(),
            mode.axis() + 1
        )));
    }
    Ok(Tensor3::from_fn(dims, |i, j, k| match mode {
        Mode::One => m[(i, j + k * n2)],
        Mode::Two => m[(j, i + k * n1)],
        Mode::Three => m[(k, i + j * n1)],
    }))
}

/// Mode-`m` product `X ×_m M`: the mode-`m` extent `n_m` becomes `M.rows()`.
///
/// Equal to `fold(M · unfold(X, m))`, computed directly on the linear layout.
pub fn mode_product<T: Scalar>(x: &Tensor3<T>, m: &Matrix<T>, mode: Mode) -> Result<Tensor3<T>> {
    let [n1, n2, n3] = x.dims;
    let axis = mode.axis();
    if m.cols() != x.dims[axis] {
        return Err(Error::shape(format!(
            "mode-{} product needs {} matrix columns, got {}",
            axis + 1,
            x.dims[axis],
            m.cols()
        )));
    }
    let p = m.rows();
    let mut dims = x.dims;
    dims[axis] = p;
    let mut out = Tensor3::zeros(dims);
    match mode {
        Mode::One => {
            let slab = n2 * n3;
            for a in 0..p {
                let dst = &mut out.data[a * slab..(a + 1) * slab];
                for i in 0..n1 {
                    let c = m[(a, i)];
                    if c != T::zero() {
                        axpy(c, &x.data[i * slab..(i + 1) * slab], dst);
                    }
                }
            }
        }
        Mode::Two => {
            for i in 0..n1 {
                for b in 0..p {
                    let dst_start = (i * p + b) * n3;
                    for j in 0..n2 {
                        let c = m[(b, j)];
                        if c != T::zero() {
                            let src_start = (i * n2 + j) * n3;
                            let (src, dst) = (
                                &x.data[src_start..src_start + n3],
                                &mut out.data[dst_start..dst_start + n3],
                            );
                            axpy(c, src, dst);
                        }
                    }
                }
            }
        }
        Mode::Three => {
            // Row-major copy of M so each output entry is a contiguous dot product.
            let mt = m.transpose();
            for fiber in 0..n1 * n2 {
                let src = &x.data[fiber * n3..(fiber + 1) * n3];
                for c in 0..p {
                    out.data[fiber * p + c] = dot(mt.col(c), src);
                }
            }
        }
    }
    Ok(out)
}

/// `G ×1 A ×2 B ×3 C`
pub fn multilinear_product<T: Scalar>(
    core: &Tensor3<T>,
    factors: [&Matrix<T>; 3],
) -> Result<Tensor3<T>> {
    let t = mode_product(core, factors[0], Mode::One)?;
    let t = mode_product(&t, factors[1], Mode::Two)?;
    mode_product(&t, factors[2], Mode::Three)
}

/// `X ×1 Aᵀ ×2 Bᵀ ×3 Cᵀ`, the projection onto the factor column spaces.
pub fn project<T: Scalar>(x: &Tensor3<T>, factors: [&Matrix<T>; 3]) -> Result<Tensor3<T>> {
    let t = mode_product(x, &factors[0].transpose(), Mode::One)?;
    let t = mode_product(&t, &factors[1].transpose(), Mode::Two)?;
    mode_product(&t, &factors[2].transpose(), Mode::Three)
}
