//! Dense complex operators on the 2^N spin Hilbert space.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

pub use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

/// Tolerance behind the `hermitian` flag (entrywise).
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance behind the `unitary` flag (entrywise on `A†A - 1`).
pub const UNITARY_TOL: f64 = 1e-10;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 0;

/// Dense complex `2^N x 2^N` operator together with the structural
/// properties established when it was built.
///
/// The flags are only ever set after the corresponding property has been
/// verified, so downstream code can rely on them.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: CMatrix,
    hermitian: bool,
    unitary: bool,
}

impl OperatorMatrix {
    /// Wraps `entries` without asserting any structure.
    pub fn new(entries: CMatrix) -> Self {
        assert!(entries.is_square(), "operators must be square");
        Self {
            entries,
            hermitian: false,
            unitary: false,
        }
    }

    pub fn from_real(entries: &RMatrix) -> Self {
        Self::new(entries.map(|x| Complex64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        let mut op = Self::new(CMatrix::zeros(dim, dim));
        op.hermitian = true;
        op
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
            hermitian: true,
            unitary: true,
        }
    }

    /// Diagonal operator with the given (complex) diagonal.
    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    /// `max |A - A†|` over all entries.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut err = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                let d = self.entries[(i, j)] - self.entries[(j, i)].conj();
                err = err.max(d.norm());
            }
        }
        err
    }

    /// `max |A†A - 1|` over all entries.
    pub fn unitarity_error(&self) -> f64 {
        let gram = matmul(&self.entries.adjoint(), &self.entries);
        let mut err = 0.0f64;
        for ((i, j), v) in indexed(&gram) {
            let target = if i == j { 1.0 } else { 0.0 };
            err = err.max((v - Complex64::new(target, 0.0)).norm());
        }
        err
    }

    /// Sets the hermitian flag after checking it against [`HERMITIAN_TOL`].
    pub fn assert_hermitian(mut self) -> Result<Self> {
        Error::check("hermiticity", self.hermiticity_error(), HERMITIAN_TOL)?;
        self.hermitian = true;
        Ok(self)
    }

    /// Sets the unitary flag after checking it against [`UNITARY_TOL`].
    pub fn assert_unitary(mut self) -> Result<Self> {
        Error::check("unitarity", self.unitarity_error(), UNITARY_TOL)?;
        self.unitary = true;
        Ok(self)
    }

    // Flags for results whose structure follows from the construction.
    pub(crate) fn with_flags(mut self, hermitian: bool, unitary: bool) -> Self {
        self.hermitian = hermitian;
        self.unitary = unitary;
        self
    }

    /// True when every imaginary part vanishes exactly.
    pub fn is_real(&self) -> bool {
        self.entries.iter().all(|z| z.im == 0.0)
    }

    pub fn real_part(&self) -> RMatrix {
        self.entries.map(|z| z.re)
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            hermitian: self.hermitian,
            unitary: self.unitary,
        }
    }

    /// Matrix product; unitarity is inherited when both factors carry it.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self {
            entries: matmul(&self.entries, &rhs.entries),
            hermitian: false,
            unitary: self.unitary && rhs.unitary,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            entries: self.entries.map(|z| z * factor),
            hermitian: self.hermitian,
            unitary: false,
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        let mut entries = self.entries.clone();
        entries.zip_apply(&other.entries, |a, b| *a += b * factor);
        Self {
            entries,
            hermitian: self.hermitian && other.hermitian,
            unitary: false,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.diagonal().iter().sum()
    }

    /// `Tr(A B)` in O(n^2) without forming the product.
    pub fn trace_product(&self, rhs: &Self) -> Complex64 {
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            let a_col = self.entries.column(j);
            for i in 0..n {
                acc += rhs.entries[(j, i)] * a_col[i];
            }
        }
        acc
    }

    /// Hilbert-Schmidt inner product `Tr(A† B)`.
    pub fn inner(&self, rhs: &Self) -> Complex64 {
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        let mut ab = matmul(&self.entries, &rhs.entries);
        let ba = matmul(&rhs.entries, &self.entries);
        ab -= ba;
        Self::new(ab)
    }

    /// Largest entrywise modulus of `A - B`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Frobenius norm of `A - B`.
    pub fn frobenius_distance(&self, rhs: &Self) -> f64 {
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `U O U†` for a unitary `U = self`.
    pub fn conjugate(&self, op: &Self) -> Self {
        let left = matmul(&self.entries, &op.entries);
        let entries = matmul(&left, &self.entries.adjoint());
        Self {
            entries,
            hermitian: op.hermitian,
            unitary: op.unitary && self.unitary,
        }
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, exponent: u64) -> Self {
        let mut result: Option<Self> = None;
        let mut base = self.clone();
        let mut e = exponent;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => r.mul(&base),
                });
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result.unwrap_or_else(|| Self::identity(self.dim()))
    }
}

fn indexed(m: &CMatrix) -> impl Iterator<Item = ((usize, usize), Complex64)> + '_ {
    let n = m.nrows();
    m.iter().enumerate().map(move |(k, &v)| ((k % n, k / n), v))
}

/// Complex matrix product through the blocked `zgemm` kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "matmul dimension mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: `Complex<f64>` is `repr(C)` with layout `[re, im]`, which is the
    // `c64` layout matrixmultiply expects. All three buffers are column-major
    // with the strides given and exactly the extents asserted above; `c` is a
    // distinct allocation so it does not alias `a` or `b`.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}

/// Real matrix product `a * b`, optionally with `b` transposed.
pub fn real_matmul(a: &RMatrix, b: &RMatrix, transpose_b: bool) -> RMatrix {
    let (m, k) = (a.nrows(), a.ncols());
    let (n, rsb, csb) = if transpose_b {
        assert_eq!(k, b.ncols(), "real_matmul dimension mismatch");
        (b.nrows(), b.nrows() as isize, 1)
    } else {
        assert_eq!(k, b.nrows(), "real_matmul dimension mismatch");
        (b.ncols(), 1, b.nrows() as isize)
    };
    let mut c = RMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: column-major buffers with the strides above; the extents match
    // the dimension checks and `c` does not alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            1,
            m as isize,
        );
    }
    c
}

/// Eigendecomposition of a real symmetric matrix: `(eigenvalues, vectors)`
/// with eigenvectors stored as columns.
pub fn eigh_real(h: &RMatrix) -> Result<(DVector<f64>, RMatrix)> {
    let dim = h.nrows();
    match SymmetricEigen::try_new(h.clone(), EIGEN_EPS, EIGEN_MAX_ITER) {
        Some(e) => Ok((e.eigenvalues, e.eigenvectors)),
        None => Err(Error::Eigen {
            dim,
            hermiticity_error: (h - h.transpose()).amax(),
            max_entry: h.amax(),
        }),
    }
}

/// Eigendecomposition of a Hermitian operator. Real operators take the real
/// symmetric path.
pub fn eigh(h: &OperatorMatrix) -> Result<(DVector<f64>, CMatrix)> {
    if h.is_real() {
        let (vals, vecs) = eigh_real(&h.real_part())?;
        return Ok((vals, vecs.map(|x| Complex64::new(x, 0.0))));
    }
    let dim = h.dim();
    match SymmetricEigen::try_new(h.entries.clone(), EIGEN_EPS, EIGEN_MAX_ITER) {
        Some(e) => Ok((e.eigenvalues, e.eigenvectors)),
        None => Err(Error::Eigen {
            dim,
            hermiticity_error: h.hermiticity_error(),
            max_entry: h.entries.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }),
    }
}

/// `exp(-i t H)` from the eigendecomposition of a Hermitian `H`.
pub fn expm_hermitian(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let (vals, vecs) = eigh(h)?;
    Ok(OperatorMatrix::new(spectral_exp(&vals, &vecs, t)).with_flags(false, true))
}

pub(crate) fn phase(angle: f64) -> Complex64 {
    Complex64::new(angle.cos(), angle.sin())
}

/// `V diag(exp(-i t w)) V†`.
pub(crate) fn spectral_exp(vals: &DVector<f64>, vecs: &CMatrix, t: f64) -> CMatrix {
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &w) in vals.iter().enumerate() {
        let ph = phase(-w * t);
        scaled.column_mut(j).iter_mut().for_each(|z| *z *= ph);
    }
    if n == 0 {
        return scaled;
    }
    matmul(&scaled, &vecs.adjoint())
}

/// Diagonal phase operator `exp(i angle D)` for a real diagonal `D`.
pub fn diagonal_phase(diagonal: &[f64], angle: f64) -> OperatorMatrix {
    let d: Vec<Complex64> = diagonal.iter().map(|&m| phase(angle * m)).collect();
    OperatorMatrix::from_diagonal(&d).with_flags(false, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        CMatrix::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((s >> 11) as f64) / ((1u64 << 53) as f64) - 0.5;
            Complex64::new(a, b)
        })
    }

    #[test]
    fn zgemm_matches_naive_product() {
        for &(m, k, n) in &[(1, 1, 1), (3, 5, 2), (17, 9, 33), (64, 64, 64)] {
            let a = sample(m.max(k), 1).view((0, 0), (m, k)).into_owned();
            let b = sample(k.max(n), 2).view((0, 0), (k, n)).into_owned();
            let fast = matmul(&a, &b);
            let naive = &a * &b;
            let err = (fast - naive).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err < 1e-12, "{m}x{k}x{n}: {err}");
        }
    }

    #[test]
    fn dgemm_transpose_variant() {
        let a = RMatrix::from_fn(7, 5, |i, j| (i * 3 + j) as f64 * 0.1);
        let b = RMatrix::from_fn(6, 5, |i, j| (i as f64 - j as f64) * 0.3);
        let err = (real_matmul(&a, &b, true) - &a * b.transpose()).amax();
        assert!(err < 1e-12);
        let c = RMatrix::from_fn(5, 4, |i, j| (i + 2 * j) as f64);
        assert!((real_matmul(&a, &c, false) - &a * &c).amax() < 1e-12);
    }

    #[test]
    fn expm_of_zero_time_is_identity() {
        let raw = sample(6, 9);
        let h = OperatorMatrix::new(&raw + raw.adjoint()).assert_hermitian().unwrap();
        let u = expm_hermitian(&h, 0.0).unwrap();
        assert!(u.max_abs_diff(&OperatorMatrix::identity(6)) < 1e-12);
        let u = expm_hermitian(&h, 1.7).unwrap();
        assert!(u.unitarity_error() < 1e-12);
    }

    #[test]
    fn pow_matches_repeated_product() {
        let raw = sample(5, 3);
        let h = OperatorMatrix::new(&raw + raw.adjoint()).assert_hermitian().unwrap();
        let u = expm_hermitian(&h, 0.3).unwrap();
        let mut acc = OperatorMatrix::identity(5);
        for _ in 0..7 {
            acc = acc.mul(&u);
        }
        assert!(u.pow(7).max_abs_diff(&acc) < 1e-12);
        assert!(u.pow(0).max_abs_diff(&OperatorMatrix::identity(5)) < 1e-15);
    }

    #[test]
    fn trace_product_and_inner() {
        let a = OperatorMatrix::new(sample(8, 4));
        let b = OperatorMatrix::new(sample(8, 5));
        let direct = a.mul(&b).trace();
        assert!((a.trace_product(&b) - direct).norm() < 1e-12);
        let direct = a.adjoint().mul(&b).trace();
        assert!((a.inner(&b) - direct).norm() < 1e-12);
    }
}
