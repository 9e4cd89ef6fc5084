//! Dense symmetric matrices for small dimensions.
//!
//! Everything in the estimator is a `p × p` symmetric matrix with `p` in the
//! single digits, so the kernels here favour simplicity over blocking or
//! vectorisation: a cyclic Jacobi eigensolver drives the PSD projection,
//! matrix square roots, log-determinants and Loewner comparisons.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use smallvec::{smallvec, SmallVec};
use thiserror::Error;

/// Relative off-diagonal threshold for Jacobi convergence.
const JACOBI_TOL: f64 = 1e-14;
/// Sweep cap for the Jacobi iteration.
const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative eigenvalue floor separating "positive definite" from singular.
pub const LAMBDA_FLOOR: f64 = 1e-12;
/// Relative slack when accepting a nominally PSD input to `sqrt_psd`.
const PSD_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },
    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("argument of the log-det conjugate is not negative definite (max eigenvalue {max_eigenvalue:e})")]
    Infeasible { max_eigenvalue: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    BadShape { dim: usize, expected: usize, got: usize },
    #[error("matrix has a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps")]
    NotConverged { sweeps: usize },
}

/// Eigenvalue threshold below which a spectrum with largest eigenvalue
/// `lambda_max` is treated as singular.
#[inline]
pub fn pd_floor(lambda_max: f64) -> f64 {
    LAMBDA_FLOOR * lambda_max.max(1.0)
}

/// Dimensions up to this size are stored inline, without a heap allocation.
const INLINE_DIM: usize = 3;
type Entries = SmallVec<[f64; INLINE_DIM * INLINE_DIM]>;

/// A dense, exactly symmetric `p × p` matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Entries,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.dim.max(1))).finish()
    }
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: smallvec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = s;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = Self::zeros(dim);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * dim + i] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries, symmetrizing via `(X + Xᵀ)/2`.
    pub fn from_row_major(dim: usize, entries: &[f64]) -> Result<Self, LinalgError> {
        if entries.len() != dim * dim {
            return Err(LinalgError::BadShape { dim, expected: dim * dim, got: entries.len() });
        }
        if let Some(idx) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: idx / dim, col: idx % dim });
        }
        Ok(Self::symmetrized(dim, Entries::from_slice(entries)))
    }

    /// Builds `m[i][j] = f(i, j)`, then symmetrizes.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data: Entries = smallvec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = f(i, j);
            }
        }
        Self::symmetrized(dim, data)
    }

    /// Outer product `v vᵀ`.
    pub fn outer(v: &[f64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j])
    }

    fn symmetrized(dim: usize, mut data: Entries) -> Self {
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        SymMatrix { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Row-major view of the full matrix.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// `tr(self · other)`, i.e. the Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.check_dim(other);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    /// `vᵀ · self · v`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.dim, "vector length does not match matrix dimension");
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += self.data[i * n + j] * v[j];
            }
            acc += v[i] * row;
        }
        acc
    }

    /// `m · self · m` for symmetric `m`; the result is re-symmetrized.
    pub fn congruence(&self, m: &SymMatrix) -> SymMatrix {
        self.check_dim(m);
        let n = self.dim;
        let tmp = matmul(n, &m.data, &self.data);
        let out = matmul(n, &tmp, &m.data);
        Self::symmetrized(n, out)
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> SymMatrix {
        SymMatrix::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// `self + alpha · other`.
    pub fn axpy(&self, alpha: f64, other: &SymMatrix) -> SymMatrix {
        self.check_dim(other);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect();
        SymMatrix { dim: self.dim, data }
    }

    /// In-place `self += alpha · other`.
    pub fn add_scaled(&mut self, alpha: f64, other: &SymMatrix) {
        self.check_dim(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix { dim: self.dim, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// True when every mirrored pair of entries is bitwise equal.
    pub fn is_exactly_symmetric(&self) -> bool {
        let n = self.dim;
        (0..n).all(|i| (0..i).all(|j| self.data[i * n + j].to_bits() == self.data[j * n + i].to_bits()))
    }

    fn check_dim(&self, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim, "symmetric matrix dimension mismatch");
    }
}

fn matmul(n: usize, a: &[f64], b: &[f64]) -> Entries {
    let mut out: Entries = smallvec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        self.axpy(1.0, rhs)
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        self.axpy(-1.0, rhs)
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        self.scale(rhs)
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        self.scale(-1.0)
    }
}

/// Spectral decomposition `m = V · diag(λ) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Eigenvalues in descending order.
    pub values: SmallVec<[f64; INLINE_DIM]>,
    /// Row-major `p × p`; column `k` is the eigenvector of `values[k]`.
    pub vectors: Entries,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_scale(&self) -> f64 {
        self.max().abs().max(self.min().abs())
    }

    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let fl: SmallVec<[f64; INLINE_DIM]> = self.values.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| {
            (0..n).map(|k| self.vectors[i * n + k] * fl[k] * self.vectors[j * n + k]).sum()
        })
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition, LinalgError> {
    let n = m.dim();
    if n == 1 {
        return Ok(EigenDecomposition { values: smallvec![m.data[0]], vectors: smallvec![1.0] });
    }
    let mut a = m.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let norm = m.frobenius_norm();
    let threshold = JACOBI_TOL * norm;

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        libm::sqrt(s)
    };

    let mut converged = norm == 0.0 || off(&a) <= threshold;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NotConverged { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                // Stable rotation (Golub & Van Loan, symmetric Schur 2x2).
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + libm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + libm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= threshold;
    }

    let mut order: SmallVec<[usize; INLINE_DIM]> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].total_cmp(&a[x * n + x]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| a[k * n + k]).collect();
    let mut vectors: Entries = smallvec![0.0; n * n];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + dst] = v[i * n + src];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Smallest eigenvalue.
pub fn min_eigenvalue(m: &SymMatrix) -> Result<f64, LinalgError> {
    Ok(eig_sym(m)?.min())
}

/// Frobenius projection onto the PSD cone: clip negative eigenvalues.
pub fn psd_project(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    if m.is_zero() {
        return Ok(m.clone());
    }
    let eig = eig_sym(m)?;
    if eig.min() >= 0.0 {
        return Ok(m.clone());
    }
    Ok(eig.map(|l| l.max(0.0)))
}

fn check_psd(eig: &EigenDecomposition) -> Result<(), LinalgError> {
    if eig.min() < -PSD_SLACK * eig.spectral_scale().max(1.0) {
        return Err(LinalgError::NotPositiveSemidefinite { min_eigenvalue: eig.min() });
    }
    Ok(())
}

fn check_pd(eig: &EigenDecomposition) -> Result<(), LinalgError> {
    if eig.dim() > 0 && eig.min() <= pd_floor(eig.max()) {
        return Err(LinalgError::NotPositiveDefinite { min_eigenvalue: eig.min() });
    }
    Ok(())
}

/// Principal square root of a PSD matrix. Round-off negatives are clipped.
pub fn sqrt_psd(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    if m.is_zero() {
        return Ok(m.clone());
    }
    let eig = eig_sym(m)?;
    check_psd(&eig)?;
    Ok(eig.map(|l| libm::sqrt(l.max(0.0))))
}

/// `m^{-1/2}` for positive definite `m`.
pub fn inv_sqrt_pd(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let eig = eig_sym(m)?;
    check_pd(&eig)?;
    Ok(eig.map(|l| 1.0 / libm::sqrt(l)))
}

/// Returns `(m^{1/2}, m^{-1/2})` from a single decomposition.
pub fn sqrt_and_inv_sqrt_pd(m: &SymMatrix) -> Result<(SymMatrix, SymMatrix), LinalgError> {
    let eig = eig_sym(m)?;
    check_pd(&eig)?;
    Ok((eig.map(libm::sqrt), eig.map(|l| 1.0 / libm::sqrt(l))))
}

pub fn inverse_pd(m: &SymMatrix) -> Result<SymMatrix, LinalgError> {
    let eig = eig_sym(m)?;
    check_pd(&eig)?;
    Ok(eig.map(|l| 1.0 / l))
}

/// `log det m` for positive definite `m`.
pub fn logdet_pd(m: &SymMatrix) -> Result<f64, LinalgError> {
    let eig = eig_sym(m)?;
    check_pd(&eig)?;
    Ok(eig.values.iter().map(|&l| libm::log(l)).sum())
}

/// Convex conjugate of `-log det`: `-log det(-x) - p` on `x ≺ 0`.
pub fn f_conjugate(x: &SymMatrix) -> Result<f64, LinalgError> {
    let neg = -x;
    let eig = eig_sym(&neg)?;
    if eig.dim() > 0 && eig.min() <= pd_floor(eig.max()) {
        return Err(LinalgError::Infeasible { max_eigenvalue: -eig.min() });
    }
    let logdet: f64 = eig.values.iter().map(|&l| libm::log(l)).sum();
    Ok(-logdet - x.dim() as f64)
}

/// `a ⪯ b` in the Loewner order, with relative tolerance `tol`.
pub fn loewner_leq(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool, LinalgError> {
    if a.dim() != b.dim() {
        return Err(LinalgError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    let eig = eig_sym(&(b - a))?;
    Ok(eig.min() >= -tol * (1.0 + eig.spectral_scale()))
}

/// Lower-triangular Cholesky factor, row-major. Requires `m` positive definite.
pub fn cholesky_lower(m: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = m.dim();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if d <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite { min_eigenvalue: min_eigenvalue(m)? });
        }
        let ljj = libm::sqrt(d);
        l[j * n + j] = ljj;
        for i in (j + 1)..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    Ok(l)
}
