//! Tolerance-aware spectral toolkit for small symmetric PSD matrices.
//!
//! Everything here targets covariance-sized problems (dim ≲ 50): a cyclic
//! Jacobi eigensolver, Moore–Penrose pseudo-inverse, pseudo-determinant with
//! rank, the PSD (Loewner) ordering check, and the principal square root of a
//! product of PSD matrices.

use thiserror::Error;

/// Relative eigenvalue cutoff used when callers do not supply one.
pub const DEFAULT_TOL: f64 = 1e-10;

const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("expected {expected} entries for dim {dim}, got {got}")]
    BadShape {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("matrix is not positive semi-definite: eigenvalue {0:.3e}")]
    NotPsd(f64),
    #[error("incompatible covariances: square-root residual {0:.3e}")]
    IncompatibleCovariances(f64),
    #[error("Jacobi eigensolver failed to converge in {JACOBI_MAX_SWEEPS} sweeps")]
    NoConvergence,
}

/// Dense row-major rectangular matrix. Used for the non-symmetric products
/// that show up around the symmetric core (conditional matrices, the
/// square-root transform, eigenvector bundles).
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::EmptyMatrix);
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(MatrixError::DimMismatch(r.len(), cols));
            }
            data.extend_from_slice(r);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// y = x·M for a row vector x (the orientation used by the test
    /// statistics, which multiply deviation rows on the right).
    pub fn row_vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "row vector length must equal rows");
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (j, yj) in y.iter_mut().enumerate() {
                *yj += xi * self.get(i, j);
            }
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }
}

/// Dense symmetric real matrix. Construction symmetrizes the input, so the
/// invariant `m[i][j] == m[j][i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from a row-major `dim × dim` slice; off-diagonal pairs are
    /// averaged so the result is exactly symmetric.
    pub fn new(dim: usize, entries: &[f64]) -> Result<Self, MatrixError> {
        if dim == 0 {
            return Err(MatrixError::EmptyMatrix);
        }
        if entries.len() != dim * dim {
            return Err(MatrixError::BadShape {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        let mut data = entries.to_vec();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (data[i * dim + j] + data[j * dim + i]);
                data[i * dim + j] = avg;
                data[j * dim + i] = avg;
            }
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    /// Rank-one matrix `scale · v vᵗ`.
    pub fn outer(v: &[f64], scale: f64) -> Self {
        let dim = v.len();
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = scale * v[i] * v[j];
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    pub fn as_matrix(&self) -> Matrix {
        Matrix {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// Symmetrizes a (numerically near-symmetric) square matrix.
    pub fn from_matrix(m: &Matrix) -> Result<Self, MatrixError> {
        if m.rows() != m.cols() {
            return Err(MatrixError::DimMismatch(m.rows(), m.cols()));
        }
        SymMatrix::new(m.rows(), &m.data)
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.dim, other.dim);
        SymMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// xᵗ M x.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += x[i] * self.get(i, j) * x[j];
            }
        }
        acc
    }
}

/// Eigendecomposition of a [`SymMatrix`] with a relative rank cutoff.
///
/// Eigenvalues are sorted descending; `eigenvectors` holds the matching
/// orthonormal columns.
#[derive(Debug, Clone)]
pub struct SpectralInfo {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Matrix,
    pub tol: f64,
}

impl SpectralInfo {
    /// Cyclic Jacobi diagonalization. Deterministic and accurate to close to
    /// machine precision for the small dimensions used here.
    pub fn of(m: &SymMatrix, tol: f64) -> Result<Self, MatrixError> {
        let n = m.dim;
        let mut a = m.data.clone();
        let mut q = Matrix::identity(n);
        if n > 1 {
            let mut converged = false;
            'sweeps: for _ in 0..JACOBI_MAX_SWEEPS {
                let mut off = 0.0f64;
                for i in 0..n {
                    for j in (i + 1)..n {
                        off = off.max(a[i * n + j].abs());
                    }
                }
                let scale = (0..n).fold(0.0f64, |s, i| s.max(a[i * n + i].abs())).max(off);
                if off <= 1e-15 * scale.max(1e-300) {
                    converged = true;
                    break 'sweeps;
                }
                for p in 0..n {
                    for r in (p + 1)..n {
                        let apq = a[p * n + r];
                        if apq == 0.0 {
                            continue;
                        }
                        let app = a[p * n + p];
                        let aqq = a[r * n + r];
                        let theta = 0.5 * (aqq - app) / apq;
                        let t = if theta.abs() > 1e150 {
                            0.5 / theta
                        } else {
                            let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                            sign / (theta.abs() + (1.0 + theta * theta).sqrt())
                        };
                        let c = 1.0 / (1.0 + t * t).sqrt();
                        let s = t * c;
                        let tau = s / (1.0 + c);
                        a[p * n + p] = app - t * apq;
                        a[r * n + r] = aqq + t * apq;
                        a[p * n + r] = 0.0;
                        a[r * n + p] = 0.0;
                        for k in 0..n {
                            if k != p && k != r {
                                let akp = a[k * n + p];
                                let akq = a[k * n + r];
                                a[k * n + p] = akp - s * (akq + tau * akp);
                                a[k * n + r] = akq + s * (akp - tau * akq);
                                a[p * n + k] = a[k * n + p];
                                a[r * n + k] = a[k * n + r];
                            }
                        }
                        for k in 0..n {
                            let qkp = q.get(k, p);
                            let qkq = q.get(k, r);
                            q.set(k, p, qkp - s * (qkq + tau * qkp));
                            q.set(k, r, qkq + s * (qkp - tau * qkq));
                        }
                    }
                }
            }
            if !converged {
                // One more off-diagonal scan; reject only if truly stuck.
                let mut off = 0.0f64;
                for i in 0..n {
                    for j in (i + 1)..n {
                        off = off.max(a[i * n + j].abs());
                    }
                }
                let scale = (0..n).fold(0.0f64, |s, i| s.max(a[i * n + i].abs()));
                if off > 1e-12 * scale.max(1.0) {
                    return Err(MatrixError::NoConvergence);
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| {
            a[j * n + j]
                .partial_cmp(&a[i * n + i])
                .expect("eigenvalues are finite")
        });
        let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
        let mut vectors = Matrix::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            for row in 0..n {
                vectors.set(row, col, q.get(row, src));
            }
        }
        Ok(SpectralInfo {
            eigenvalues,
            eigenvectors: vectors,
            tol,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Absolute eigenvalue cutoff: `tol · max |λ|`.
    pub fn cutoff(&self) -> f64 {
        let max = self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.tol * max
    }

    /// Number of eigenvalues above the cutoff in absolute value.
    pub fn rank(&self) -> usize {
        let cut = self.cutoff();
        self.eigenvalues.iter().filter(|v| v.abs() > cut).count()
    }

    /// Q f(Λ) Qᵗ for an eigenvalue map applied above the cutoff (zero below).
    pub fn rebuild<F: Fn(f64) -> f64>(&self, f: F) -> SymMatrix {
        let n = self.dim();
        let cut = self.cutoff();
        let mut out = SymMatrix::zeros(n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            if lam.abs() <= cut {
                continue;
            }
            let flam = f(lam);
            if flam == 0.0 {
                continue;
            }
            for i in 0..n {
                let qi = self.eigenvectors.get(i, k);
                for j in i..n {
                    let v = out.get(i, j) + flam * qi * self.eigenvectors.get(j, k);
                    out.set_sym(i, j, v);
                }
            }
        }
        out
    }
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix. Eigenvalues with
/// `|λ| ≤ tol · max|λ|` are treated as exact zeros.
pub fn pseudo_inverse(m: &SymMatrix, tol: f64) -> Result<SymMatrix, MatrixError> {
    let spec = SpectralInfo::of(m, tol)?;
    Ok(spec.rebuild(|lam| 1.0 / lam))
}

/// Pseudo-determinant (product of eigenvalues above the cutoff) and rank.
///
/// The zero matrix has pseudo-determinant 1 (empty product) and rank 0.
/// Fails if any eigenvalue is below `-tol · max|λ|`.
pub fn pseudo_det_rank(m: &SymMatrix, tol: f64) -> Result<(f64, usize), MatrixError> {
    let spec = SpectralInfo::of(m, tol)?;
    let cut = spec.cutoff();
    let mut det = 1.0;
    let mut rank = 0usize;
    for &lam in &spec.eigenvalues {
        if lam < -cut {
            return Err(MatrixError::NotPsd(lam));
        }
        if lam.abs() > cut {
            det *= lam;
            rank += 1;
        }
    }
    Ok((det, rank))
}

/// Principal square root `S = √(Σ̂⁺ Σ₁)` of the (generally non-symmetric)
/// product of two PSD matrices, computed through the symmetric conjugation
///
///   S = A^{1/2} · √(A^{1/2} Σ₁ A^{1/2}) · (A^{1/2})⁺,   A = Σ̂⁺.
///
/// This coincides with the eigenvalue-wise root whenever the factors commute
/// and satisfies S·S = Σ̂⁺Σ₁ whenever the two ranges agree. The reconstruction
/// is verified; a residual above `max(1e-9, 10·tol·‖Σ̂⁺Σ₁‖∞)` means the
/// covariances are incompatible (range mismatch).
pub fn psd_sqrt_product(
    sigma_hat_pinv: &SymMatrix,
    sigma1: &SymMatrix,
    tol: f64,
) -> Result<Matrix, MatrixError> {
    if sigma_hat_pinv.dim != sigma1.dim {
        return Err(MatrixError::DimMismatch(sigma_hat_pinv.dim, sigma1.dim));
    }
    let spec_a = SpectralInfo::of(sigma_hat_pinv, tol)?;
    if let Some(&min) = spec_a
        .eigenvalues
        .iter()
        .filter(|v| v.abs() > spec_a.cutoff())
        .min_by(|a, b| a.partial_cmp(b).expect("finite"))
    {
        if min < 0.0 {
            return Err(MatrixError::NotPsd(min));
        }
    }
    let a_half = spec_a.rebuild(|lam| lam.sqrt());
    let a_half_pinv = spec_a.rebuild(|lam| 1.0 / lam.sqrt());

    let inner = a_half.as_matrix().mul(&sigma1.as_matrix()).mul(&a_half.as_matrix());
    let inner_sym = SymMatrix::from_matrix(&inner)?;
    let spec_inner = SpectralInfo::of(&inner_sym, tol)?;
    let cut = spec_inner.cutoff();
    for &lam in &spec_inner.eigenvalues {
        if lam < -cut {
            return Err(MatrixError::NotPsd(lam));
        }
    }
    let inner_sqrt = spec_inner.rebuild(|lam| lam.max(0.0).sqrt());

    let s = a_half
        .as_matrix()
        .mul(&inner_sqrt.as_matrix())
        .mul(&a_half_pinv.as_matrix());

    let product = sigma_hat_pinv.as_matrix().mul(&sigma1.as_matrix());
    let residual = s.mul(&s).sub(&product).max_abs();
    let allowed = (10.0 * tol * product.max_abs()).max(1e-9);
    if residual > allowed {
        return Err(MatrixError::IncompatibleCovariances(residual));
    }
    Ok(s)
}

/// True iff `A - B` is PSD within tolerance: smallest eigenvalue of the
/// difference at least `-tol · max(1, ‖A−B‖∞)`.
pub fn psd_order_check(a: &SymMatrix, b: &SymMatrix, tol: f64) -> Result<bool, MatrixError> {
    if a.dim != b.dim {
        return Err(MatrixError::DimMismatch(a.dim, b.dim));
    }
    let diff = a.sub(b);
    let spec = SpectralInfo::of(&diff, tol)?;
    let min = spec
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(min >= -tol * diff.max_abs().max(1.0))
}
