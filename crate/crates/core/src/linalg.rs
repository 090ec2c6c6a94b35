//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dense matrices over `Complex64`. Vectorization is
//! column-major everywhere, so `vec(A X B) = kron(Bᵀ, A) vec(X)`.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default relative rank threshold for SVD-based decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

const TAYLOR_ORDER: usize = 18;

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> Mat {
    Mat::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> Mat {
    Mat::zeros(rows, cols)
}

/// Builds a complex matrix from real row-major data.
pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Mat {
    assert_eq!(data.len(), rows * cols, "data length does not match shape");
    Mat::from_row_iterator(rows, cols, data.iter().map(|&x| c(x)))
}

/// Builds a complex matrix from real rows.
pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Mat {
    let n = rows.len();
    let m = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.as_ref().to_vec()).collect();
    from_real(n, m, &flat)
}

/// Permutation matrix with `P e_x = e_{perm[x]}`.
pub fn permutation_matrix(perm: &[usize]) -> Mat {
    let n = perm.len();
    let mut p = zeros(n, n);
    for (x, &y) in perm.iter().enumerate() {
        p[(y, x)] = c(1.0);
    }
    p
}

pub fn frobenius(m: &Mat) -> f64 {
    m.norm()
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Largest singular value.
pub fn operator_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Induced 1-norm (max column sum).
pub fn one_norm(m: &Mat) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Block-diagonal matrix from square or rectangular blocks.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = zeros(rows, cols);
    let (mut r, mut cc) = (0, 0);
    for b in blocks {
        out.view_mut((r, cc), b.shape()).copy_from(*b);
        r += b.nrows();
        cc += b.ncols();
    }
    out
}

/// Kronecker product.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

/// Column-major vectorization.
pub fn vec(a: &Mat) -> CVec {
    CVec::from_column_slice(a.as_slice())
}

/// Inverse of [`vec`].
pub fn unvec(v: &CVec, rows: usize, cols: usize) -> Mat {
    assert_eq!(v.len(), rows * cols, "unvec: length does not match shape");
    Mat::from_column_slice(rows, cols, v.as_slice())
}

/// Stacks matrices with equal column counts vertically.
pub fn vstack(parts: &[Mat]) -> Mat {
    let cols = parts.first().map(|p| p.ncols()).unwrap_or(0);
    let rows: usize = parts.iter().map(|p| p.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r = 0;
    for p in parts {
        assert_eq!(p.ncols(), cols, "vstack: column mismatch");
        out.view_mut((r, 0), p.shape()).copy_from(p);
        r += p.nrows();
    }
    out
}

/// Orthonormal basis vectors of the numerical nullspace of `a`.
///
/// Singular values at or below `tol · max(σ_max, floor)` count as zero, so a
/// positive `floor` keeps pure rounding noise from looking full rank. Works
/// over real and complex scalars; tall inputs are reduced by a QR step first.
pub(crate) fn null_vectors<T>(a: &DMatrix<T>, tol: f64, floor: f64) -> Vec<DVector<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.ncols();
    if n == 0 {
        return Vec::new();
    }
    let all = || {
        (0..n)
            .map(|i| {
                let mut v = DVector::<T>::zeros(n);
                v[i] = T::one();
                v
            })
            .collect()
    };
    if a.nrows() == 0 || a.iter().all(|z| z.modulus() == 0.0) {
        return all();
    }
    let square = if a.nrows() > n {
        a.clone().qr().r()
    } else {
        let mut padded = DMatrix::<T>::zeros(n, n);
        padded.view_mut((0, 0), a.shape()).copy_from(a);
        padded
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return all();
    }
    let cut = tol * smax.max(floor);
    (0..n)
        .filter(|&i| s[i] <= cut)
        .map(|i| v_t.row(i).adjoint().into_owned())
        .collect()
}

/// Numerical rank under the relative threshold `tol · σ_max`.
pub fn rank(a: &Mat, tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let s = a.singular_values();
    let smax = s.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Eigenvalues (ascending) and unit eigenvectors (as columns) of a Hermitian
/// matrix. Only the Hermitian part of `m` is used.
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let h = (m + m.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = zeros(m.nrows(), m.ncols());
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormal basis (Frobenius inner product) of a linear subspace of
/// `rows × cols` matrices.
#[derive(Debug, Clone)]
pub struct MatSubspace {
    rows: usize,
    cols: usize,
    basis: Vec<Mat>,
}

impl MatSubspace {
    pub fn zero(rows: usize, cols: usize) -> Self {
        MatSubspace {
            rows,
            cols,
            basis: Vec::new(),
        }
    }

    /// The whole ambient space, spanned by matrix units.
    pub fn full(rows: usize, cols: usize) -> Self {
        let basis = (0..rows * cols)
            .map(|k| {
                let mut m = zeros(rows, cols);
                m[(k % rows, k / rows)] = c(1.0);
                m
            })
            .collect();
        MatSubspace { rows, cols, basis }
    }

    /// Orthonormalized span of `mats`. Directions with singular value at or
    /// below `tol · σ_max` are dropped.
    pub fn span(rows: usize, cols: usize, mats: &[Mat], tol: f64) -> Result<Self> {
        for m in mats {
            if m.shape() != (rows, cols) {
                return Err(Error::ShapeMismatch(format!(
                    "expected {rows}x{cols}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let n = rows * cols;
        if mats.is_empty() || n == 0 {
            return Ok(Self::zero(rows, cols));
        }
        let mut stacked = zeros(n, mats.len());
        for (j, m) in mats.iter().enumerate() {
            stacked.set_column(j, &vec(m));
        }
        Ok(Self::from_columns(rows, cols, &stacked, tol))
    }

    /// Orthonormalized column space of `cols_mat`, each column being a
    /// vectorized `rows × cols` matrix.
    pub fn from_columns(rows: usize, cols: usize, cols_mat: &Mat, tol: f64) -> Self {
        assert_eq!(cols_mat.nrows(), rows * cols);
        if cols_mat.ncols() == 0 {
            return Self::zero(rows, cols);
        }
        let svd = cols_mat.clone().svd(true, false);
        let u = svd.u.expect("u requested");
        let s = &svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        if smax == 0.0 {
            return Self::zero(rows, cols);
        }
        let basis = (0..s.len())
            .filter(|&i| s[i] > tol * smax)
            .map(|i| unvec(&u.column(i).into_owned(), rows, cols))
            .collect();
        MatSubspace { rows, cols, basis }
    }

    /// Wraps vectors already known to be orthonormal.
    pub(crate) fn from_orthonormal_vectors(rows: usize, cols: usize, vs: Vec<CVec>) -> Self {
        let basis = vs.iter().map(|v| unvec(v, rows, cols)).collect();
        MatSubspace { rows, cols, basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn into_basis(self) -> Vec<Mat> {
        self.basis
    }

    /// `(rows·cols) × dim` matrix whose columns are the vectorized basis.
    pub fn basis_matrix(&self) -> Mat {
        let mut q = zeros(self.rows * self.cols, self.dim());
        for (j, b) in self.basis.iter().enumerate() {
            q.set_column(j, &vec(b));
        }
        q
    }

    /// Orthogonal projection onto the subspace.
    pub fn project(&self, m: &Mat) -> Mat {
        let mut p = zeros(self.rows, self.cols);
        for b in &self.basis {
            let coeff = b.dotc(m);
            p += b * coeff;
        }
        p
    }

    /// Frobenius distance from `m` to the subspace.
    pub fn residual(&self, m: &Mat) -> f64 {
        frobenius(&(m - self.project(m)))
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_defect(&self) -> f64 {
        let q = self.basis_matrix();
        if q.ncols() == 0 {
            return 0.0;
        }
        max_abs_diff(&(q.adjoint() * &q), &identity(q.ncols()))
    }

    pub(crate) fn check_shape(&self, other: &MatSubspace) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch(format!(
                "subspaces of {:?} and {:?} matrices",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }
}

/// Orthonormal basis of `{v : A v ≈ 0}` as a subspace of column vectors.
pub fn nullspace(a: &Mat, tol: f64) -> MatSubspace {
    let n = a.ncols();
    MatSubspace::from_orthonormal_vectors(n, 1, null_vectors(a, tol, 0.0))
}

/// Largest principal angle between two subspaces of the same ambient shape.
///
/// Subspaces of different dimension are at angle π/2.
pub fn principal_angle(s1: &MatSubspace, s2: &MatSubspace) -> Result<f64> {
    s1.check_shape(s2)?;
    if s1.dim() != s2.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    if s1.dim() == 0 {
        return Ok(0.0);
    }
    let q1 = s1.basis_matrix();
    let q2 = s2.basis_matrix();
    let cross = q1.adjoint() * &q2;
    // sin of the largest angle, accurate for small angles
    let resid = &q2 - &q1 * &cross;
    let sin_max = operator_norm(&resid).min(1.0);
    if sin_max < 0.7 {
        return Ok(sin_max.asin());
    }
    let cos_min = cross
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .clamp(0.0, 1.0);
    Ok(cos_min.acos())
}

/// Matrix exponential by scaling and squaring with a degree-18 Taylor
/// polynomial, scaling until `‖A/2^s‖₁ ≤ 1/2`.
pub fn expm(a: &Mat) -> Result<Mat> {
    if !a.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "expm needs a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let n = a.nrows();
    let norm = one_norm(a);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a * c(0.5f64.powi(squarings as i32));
    let eye = identity(n);
    let mut t = eye.clone();
    for k in (1..=TAYLOR_ORDER).rev() {
        t = &eye + &scaled * t * c(1.0 / k as f64);
    }
    for _ in 0..squarings {
        t = &t * &t;
    }
    Ok(t)
}

/// Smallest subspace containing `s` and the identity that is closed under
/// matrix multiplication.
///
/// Each round appends all pairwise products of the current basis and
/// re-orthonormalizes; fails with `CapExceeded` after `cap` rounds.
pub fn mult_closure(s: &MatSubspace, tol: f64, cap: usize) -> Result<MatSubspace> {
    let (rows, cols) = s.shape();
    if rows != cols {
        return Err(Error::ShapeMismatch(format!(
            "multiplicative closure needs square matrices, got {rows}x{cols}"
        )));
    }
    let mut gens: Vec<Mat> = s.basis().to_vec();
    gens.push(identity(rows));
    let mut current = MatSubspace::span(rows, cols, &gens, tol)?;
    let mut rounds = 0;
    loop {
        let basis = current.basis();
        let mut all: Vec<Mat> = basis.to_vec();
        for a in basis {
            for b in basis {
                all.push(a * b);
            }
        }
        let next = MatSubspace::span(rows, cols, &all, tol)?;
        if next.dim() == current.dim() {
            return Ok(current);
        }
        current = next;
        rounds += 1;
        if rounds > cap {
            return Err(Error::CapExceeded { cap });
        }
    }
}
