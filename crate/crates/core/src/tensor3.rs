//! Dense complex third-order tensors and the products used by the t-product
//! dynamics: the mode-3 DFT, the t-product, element-wise product, tube-wise
//! circular convolution, and the frontal-slice-wise product.
//!
//! Storage is column-major per frontal slice: entry `(i, j, k)` lives at
//! `i + rows * (j + cols * k)`, so a frontal slice is one contiguous
//! column-major block and a tube is a strided read with stride `rows * cols`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for dropping imaginary residue from results that are
/// known to be real.
pub const REALNESS_TOLERANCE: f64 = 1e-9;

/// Shape `rows × cols × depth` of a third-order tensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
}

impl Dims {
    pub const fn new(rows: usize, cols: usize, depth: usize) -> Self {
        Dims { rows, cols, depth }
    }

    pub const fn len(&self) -> usize {
        self.rows * self.cols * self.depth
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub const fn slice_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub const fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.rows * (j + self.cols * k)
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.rows, self.cols, self.depth]
    }

    /// Like [`Dims::new`], rejecting zero dimensions.
    pub fn checked(rows: usize, cols: usize, depth: usize) -> Result<Self> {
        let dims = Dims::new(rows, cols, depth);
        if dims.is_empty() {
            return Err(Error::invalid(format!(
                "tensor shape {dims} has a zero dimension"
            )));
        }
        Ok(dims)
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}×{}×{}", self.rows, self.cols, self.depth)
    }
}

/// Dense complex `rows × cols × depth` tensor.
///
/// Values are immutable once built. `is_real` records that the tensor was
/// constructed from real data, in which case every imaginary part is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    data: Vec<Complex64>,
    real: bool,
}

/// One mode-3 fiber `T[i, j, :]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeVector(Vec<Complex64>);

impl TubeVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        TubeVector(entries)
    }

    pub fn from_real(entries: &[f64]) -> Self {
        TubeVector(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Self {
        Tensor3 {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims.len()],
            real: true,
        }
    }

    pub fn from_real(dims: Dims, values: Vec<f64>) -> Result<Self> {
        check_len(dims, values.len())?;
        Ok(Tensor3 {
            dims,
            data: values.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            real: true,
        })
    }

    pub fn from_complex(dims: Dims, values: Vec<Complex64>) -> Result<Self> {
        check_len(dims, values.len())?;
        Ok(Tensor3 {
            dims,
            data: values,
            real: false,
        })
    }

    pub fn from_fn_real(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..dims.depth {
            for j in 0..dims.cols {
                for i in 0..dims.rows {
                    data.push(Complex64::new(f(i, j, k), 0.0));
                }
            }
        }
        Tensor3 {
            dims,
            data,
            real: true,
        }
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(usize, usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dims.len());
        for k in 0..dims.depth {
            for j in 0..dims.cols {
                for i in 0..dims.rows {
                    data.push(f(i, j, k));
                }
            }
        }
        Tensor3 {
            dims,
            data,
            real: false,
        }
    }

    /// I.i.d. standard normal real entries, drawn in lexicographic `(i, j, k)`
    /// order from `rng`.
    pub fn random_normal<R: Rng + ?Sized>(dims: Dims, rng: &mut R) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dims.len()];
        for i in 0..dims.rows {
            for j in 0..dims.cols {
                for k in 0..dims.depth {
                    data[dims.offset(i, j, k)] = Complex64::new(rng.sample(StandardNormal), 0.0);
                }
            }
        }
        Tensor3 {
            dims,
            data,
            real: true,
        }
    }

    /// Builds a tensor from its frontal slices, each `rows × cols`.
    pub fn from_frontal_slices(slices: &[DMatrix<Complex64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::invalid("no frontal slices given"))?;
        let dims = Dims::new(first.nrows(), first.ncols(), slices.len());
        let mut data = Vec::with_capacity(dims.len());
        for s in slices {
            if s.shape() != first.shape() {
                return Err(Error::invalid(format!(
                    "frontal slice of shape {:?} does not match {:?}",
                    s.shape(),
                    first.shape()
                )));
            }
            // nalgebra is column-major, matching the slice layout here.
            data.extend_from_slice(s.as_slice());
        }
        Ok(Tensor3 {
            dims,
            data,
            real: false,
        })
    }

    /// The `rows × rows × depth` identity: first frontal slice is the identity
    /// matrix, every other slice is zero.
    pub fn identity(rows: usize, depth: usize) -> Self {
        let dims = Dims::new(rows, rows, depth);
        Tensor3::from_fn_real(dims, |i, j, k| if k == 0 && i == j { 1.0 } else { 0.0 })
    }

    pub fn ones(dims: Dims) -> Self {
        Tensor3::from_fn_real(dims, |_, _, _| 1.0)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Result<Complex64> {
        let d = self.dims;
        if i >= d.rows || j >= d.cols || k >= d.depth {
            return Err(Error::IndexOutOfRange { i, j, k, dims: d });
        }
        Ok(self.data[d.offset(i, j, k)])
    }

    #[inline]
    pub(crate) fn at(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.dims.offset(i, j, k)]
    }

    pub fn tube(&self, i: usize, j: usize) -> Result<TubeVector> {
        let d = self.dims;
        if i >= d.rows || j >= d.cols {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                k: 0,
                dims: d,
            });
        }
        Ok(TubeVector(self.tube_iter(i, j).collect()))
    }

    fn tube_iter(&self, i: usize, j: usize) -> impl Iterator<Item = Complex64> + '_ {
        let start = self.dims.offset(i, j, 0);
        self.data[start..]
            .iter()
            .step_by(self.dims.slice_len())
            .take(self.dims.depth)
            .copied()
    }

    /// Frontal slice `T[:, :, k]` as a `rows × cols` matrix.
    pub fn frontal_slice(&self, k: usize) -> Result<DMatrix<Complex64>> {
        let d = self.dims;
        if k >= d.depth {
            return Err(Error::IndexOutOfRange {
                i: 0,
                j: 0,
                k,
                dims: d,
            });
        }
        Ok(self.slice_matrix(k))
    }

    pub(crate) fn slice_matrix(&self, k: usize) -> DMatrix<Complex64> {
        let len = self.dims.slice_len();
        DMatrix::from_column_slice(
            self.dims.rows,
            self.dims.cols,
            &self.data[k * len..(k + 1) * len],
        )
    }

    pub(crate) fn slice_matrices(&self) -> Vec<DMatrix<Complex64>> {
        (0..self.dims.depth).map(|k| self.slice_matrix(k)).collect()
    }

    /// Real parts of all entries in storage order.
    pub fn real_parts(&self) -> Vec<f64> {
        self.data.iter().map(|z| z.re).collect()
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Drops the imaginary parts when every one of them is below
    /// `REALNESS_TOLERANCE * (1 + ‖self‖_F)`; otherwise reports the residue.
    pub fn purge_imaginary(self) -> Result<Tensor3> {
        let tolerance = REALNESS_TOLERANCE * (1.0 + self.fro_norm());
        let residue = self.max_abs_imag();
        if residue >= tolerance {
            return Err(Error::ImaginaryResidue { residue, tolerance });
        }
        Ok(self.project_real())
    }

    /// Orthogonal projection onto real tensors (imaginary parts set to zero).
    pub fn project_real(mut self) -> Tensor3 {
        for z in &mut self.data {
            z.im = 0.0;
        }
        self.real = true;
        self
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|z| z * s).collect(),
            real: self.real,
        }
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &Tensor3,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Tensor3> {
        same_shape(op, self, other)?;
        Ok(Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            real: self.real && other.real,
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Tensor3) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}

fn check_len(dims: Dims, len: usize) -> Result<()> {
    if len != dims.len() {
        return Err(Error::LengthMismatch {
            len,
            expected: dims.len(),
            dims,
        });
    }
    Ok(())
}

fn same_shape(op: &'static str, a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.dims != b.dims {
        return Err(Error::ShapeMismatch {
            op,
            left: a.dims,
            right: b.dims,
        });
    }
    Ok(())
}

fn transform_tubes(t: &Tensor3, direction: FftDirection) -> Tensor3 {
    let d = t.dims;
    let n = d.depth;
    let tubes = d.slice_len();
    let mut buffer = Vec::with_capacity(d.len());
    for j in 0..d.cols {
        for i in 0..d.rows {
            buffer.extend(t.tube_iter(i, j));
        }
    }
    if n > 1 {
        let fft = FftPlanner::<f64>::new().plan_fft(n, direction);
        fft.process(&mut buffer);
    }
    let scale = match direction {
        FftDirection::Forward => 1.0,
        FftDirection::Inverse => 1.0 / n as f64,
    };
    let mut data = vec![Complex64::new(0.0, 0.0); d.len()];
    for (tube, chunk) in buffer.chunks_exact(n).enumerate() {
        for (k, &z) in chunk.iter().enumerate() {
            data[tube + tubes * k] = if direction == FftDirection::Inverse {
                z * scale
            } else {
                z
            };
        }
    }
    Tensor3 {
        dims: d,
        data,
        real: false,
    }
}

/// Unnormalised forward DFT of every tube, kernel `exp(-2πi·ab/n)`.
pub fn dft3(t: &Tensor3) -> Tensor3 {
    if t.dims.depth == 1 {
        return t.clone();
    }
    transform_tubes(t, FftDirection::Forward)
}

/// Inverse of [`dft3`], carrying the `1/n` factor.
pub fn idft3(t: &Tensor3) -> Tensor3 {
    if t.dims.depth == 1 {
        return t.clone();
    }
    transform_tubes(t, FftDirection::Inverse)
}

fn check_product(op: &'static str, a: &Tensor3, b: &Tensor3) -> Result<()> {
    if a.dims.depth != b.dims.depth || a.dims.cols != b.dims.rows {
        return Err(Error::ShapeMismatch {
            op,
            left: a.dims,
            right: b.dims,
        });
    }
    Ok(())
}

/// Frontal-slice-wise product: slice `k` of the result is `a[:,:,k] · b[:,:,k]`.
pub fn facewise(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_product("facewise", a, b)?;
    let slices: Vec<_> = (0..a.dims.depth)
        .map(|k| a.slice_matrix(k) * b.slice_matrix(k))
        .collect();
    let mut out = Tensor3::from_frontal_slices(&slices)?;
    out.real = a.real && b.real;
    Ok(out)
}

/// The t-product `a ∗ b` for `a: m×p×n`, `b: p×q×n`.
pub fn tprod(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_product("tprod", a, b)?;
    let product = idft3(&facewise(&dft3(a), &dft3(b))?);
    if a.real && b.real {
        product.purge_imaginary()
    } else {
        Ok(product)
    }
}

fn matrix_power(base: &DMatrix<Complex64>, mut exp: u32) -> DMatrix<Complex64> {
    let mut result = DMatrix::<Complex64>::identity(base.nrows(), base.ncols());
    let mut square = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = &result * &square;
        }
        exp >>= 1;
        if exp > 0 {
            square = &square * &square;
        }
    }
    result
}

/// Per-frequency powers `(Â[:,:,k])^t` of an operator already in the Fourier
/// domain.
pub(crate) fn slice_powers(a_hat: &Tensor3, t: u32) -> Vec<DMatrix<Complex64>> {
    (0..a_hat.dims.depth)
        .map(|k| matrix_power(&a_hat.slice_matrix(k), t))
        .collect()
}

/// `t`-th t-product power of a square operator; `tpow(a, 0)` is the identity.
pub fn tpow(a: &Tensor3, t: u32) -> Result<Tensor3> {
    let d = a.dims;
    if d.rows != d.cols {
        return Err(Error::NotSquare {
            op: "tpow",
            dims: d,
        });
    }
    if t == 0 {
        return Ok(Tensor3::identity(d.rows, d.depth));
    }
    let powered = idft3(&Tensor3::from_frontal_slices(&slice_powers(&dft3(a), t))?);
    if a.real {
        powered.purge_imaginary()
    } else {
        Ok(powered)
    }
}

/// Element-wise product.
pub fn hadamard(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    a.zip_with("hadamard", b, |x, y| x * y)
}

/// Circular convolution of two equal-length sequences by direct summation.
pub(crate) fn circular_convolve(v: &[Complex64], w: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|a| (0..n).map(|b| v[(a + n - b) % n] * w[b]).sum())
        .collect()
}

/// Tube-wise circular convolution: every output tube `[i,j,:]` is the
/// `n`-point circular convolution of the matching input tubes.
pub fn tube_conv(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    same_shape("tube_conv", a, b)?;
    let d = a.dims;
    let mut data = vec![Complex64::new(0.0, 0.0); d.len()];
    for j in 0..d.cols {
        for i in 0..d.rows {
            let u: Vec<_> = a.tube_iter(i, j).collect();
            let v: Vec<_> = b.tube_iter(i, j).collect();
            for (k, z) in circular_convolve(&u, &v).into_iter().enumerate() {
                data[d.offset(i, j, k)] = z;
            }
        }
    }
    Ok(Tensor3 {
        dims: d,
        data,
        real: a.real && b.real,
    })
}

/// Circulant matrix with first column `v`: entry `(a, b)` is `v[(a - b) mod n]`,
/// so `circ(v) · w` is the circular convolution of `v` and `w`.
pub fn circ(v: &TubeVector) -> DMatrix<Complex64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |a, b| v.0[(a + n - b) % n])
}

/// `‖x - f‖_F / ‖f‖_F`.
pub fn rel_error(x: &Tensor3, f: &Tensor3) -> Result<f64> {
    let denom = f.fro_norm();
    if denom == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(x.sub(f)?.fro_norm() / denom)
}

pub fn fro_norm(t: &Tensor3) -> f64 {
    t.fro_norm()
}

/// Reference t-product through the explicit block-circulant matrix of `a`,
/// without any Fourier transform. Quadratic in depth; for cross-checks only.
pub fn bcirc_oracle(a: &Tensor3, b: &Tensor3) -> Result<Tensor3> {
    check_product("bcirc_oracle", a, b)?;
    let (m, p, n) = (a.dims.rows, a.dims.cols, a.dims.depth);
    let q = b.dims.cols;
    // bcirc(a): (m n) × (p n); block (r, c) is frontal slice (r - c) mod n.
    let big_rows = m * n;
    let big_cols = p * n;
    let mut bcirc = vec![Complex64::new(0.0, 0.0); big_rows * big_cols];
    for r in 0..n {
        for c in 0..n {
            let k = (r + n - c) % n;
            for i in 0..m {
                for l in 0..p {
                    bcirc[(r * m + i) * big_cols + c * p + l] = a.at(i, l, k);
                }
            }
        }
    }
    // unfold(b): (p n) × q, frontal slices stacked vertically.
    let mut out = vec![Complex64::new(0.0, 0.0); m * q * n];
    let dims = Dims::new(m, q, n);
    for row in 0..big_rows {
        let (r, i) = (row / m, row % m);
        for jj in 0..q {
            let mut acc = Complex64::new(0.0, 0.0);
            for col in 0..big_cols {
                let (c, l) = (col / p, col % p);
                acc += bcirc[row * big_cols + col] * b.at(l, jj, c);
            }
            out[dims.offset(i, jj, r)] = acc;
        }
    }
    let mut t = Tensor3::from_complex(dims, out)?;
    t.real = a.real && b.real;
    Ok(t)
}
