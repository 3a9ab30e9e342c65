//! Dense matrix type and the proximal operators shared by every solver.
//!
//! Everything here is a pure function of its inputs. nalgebra supplies the
//! dense storage and products; the SVD (Householder QR, then one-sided
//! Jacobi) and the shrinkage operators on top of it are implemented here.

use std::fmt;

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Sweep cap of the Jacobi SVD; convergence is quadratic, so this is never
/// reached on finite input.
const JACOBI_MAX_SWEEPS: usize = 60;

/// Stopping rule for the generalized soft-thresholding fixed point.
const GST_TOL: f64 = 1e-12;
const GST_MAX_ITER: usize = 100;

/// A dense, finite, real matrix with at least one row and one column.
#[derive(Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{})", self.rows(), self.cols())
    }
}

impl Matrix {
    /// Wraps an nalgebra matrix, rejecting empty shapes and non-finite entries.
    pub fn from_dmatrix(inner: DMatrix<f64>) -> Result<Self> {
        if inner.nrows() == 0 || inner.ncols() == 0 {
            return Err(Error::invalid(format!(
                "matrix must be at least 1x1, got {}x{}",
                inner.nrows(),
                inner.ncols()
            )));
        }
        if let Some(bad) = inner.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("matrix entry {bad} is not finite")));
        }
        Ok(Matrix(inner))
    }

    /// Skips validation; callers guarantee shape and finiteness.
    pub(crate) fn from_dmatrix_unchecked(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.nrows() > 0 && inner.ncols() > 0);
        Matrix(inner)
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Builds a matrix whose j-th column is `columns[j]`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::invalid("no columns supplied"));
        };
        let rows = first.len();
        if let Some(bad) = columns.iter().position(|c| c.len() != rows) {
            return Err(Error::ShapeMismatch(format!(
                "column {bad} has {} entries, expected {rows}",
                columns[bad].len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_fn(rows, columns.len(), |r, c| columns[c][r]))
    }

    /// Square diagonal matrix with `diag` on the diagonal.
    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let n = diag.len();
        Self::from_dmatrix(DMatrix::from_fn(n, n, |r, c| if r == c { diag[r] } else { 0.0 }))
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Matrix(DMatrix::zeros(rows, cols))
    }

    /// # Panics
    /// If `n` is zero.
    pub fn identity(n: usize) -> Self {
        assert!(n > 0, "matrix dimensions must be positive");
        Matrix(DMatrix::identity(n, n))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.0.shape()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0[(row, col)]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.0.column(col).iter().copied().collect()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose())
    }

    /// Largest absolute entrywise difference. Shapes must agree.
    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Thin SVD `m = u * diag(sigma) * v^T` with `sigma` sorted descending.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// `rows x r` with orthonormal columns, `r = min(rows, cols)`.
    pub u: Matrix,
    pub sigma: Vec<f64>,
    /// `cols x r` with orthonormal columns.
    pub v: Matrix,
}

impl SvdFactors {
    /// Recomposes `u * diag(values) * v^T` for replacement singular values.
    pub fn recompose(&self, values: &[f64]) -> Matrix {
        assert_eq!(values.len(), self.sigma.len());
        let (u, v) = (self.u.as_dmatrix(), self.v.as_dmatrix());
        let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
        if keep.is_empty() {
            return Matrix(DMatrix::zeros(u.nrows(), v.nrows()));
        }
        let mut scaled = DMatrix::zeros(u.nrows(), keep.len());
        let mut v_kept = DMatrix::zeros(v.nrows(), keep.len());
        for (dst, &src) in keep.iter().enumerate() {
            scaled.set_column(dst, &(u.column(src) * values[src]));
            v_kept.set_column(dst, &v.column(src));
        }
        Matrix(scaled * v_kept.transpose())
    }

    pub fn reconstruct(&self) -> Matrix {
        self.recompose(&self.sigma)
    }
}

/// Singular value decomposition with descending, non-negative `sigma`.
///
/// Householder QR followed by a one-sided Jacobi SVD of the square factor.
/// Deterministic for a given input. Fails with [`Error::Numerical`] if the
/// Jacobi sweeps exceed their cap.
pub fn svd(m: &Matrix) -> Result<SvdFactors> {
    let (mut u, mut v, mut sigma) = if m.rows() >= m.cols() {
        tall_svd(&m.0)?
    } else {
        let (u, v, sigma) = tall_svd(&m.0.transpose())?;
        (v, u, sigma)
    };

    for (i, s) in sigma.iter_mut().enumerate() {
        if *s < 0.0 {
            *s = -*s;
            u.column_mut(i).neg_mut();
        }
    }

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    if order.iter().enumerate().any(|(i, &o)| i != o) {
        u = u.select_columns(&order);
        v = v.select_columns(&order);
        sigma = order.iter().map(|&i| sigma[i]).collect();
    }

    if sigma.iter().any(|s| !s.is_finite()) || u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite factors".into()));
    }
    Ok(SvdFactors {
        u: Matrix(u),
        sigma,
        v: Matrix(v),
    })
}

/// One-sided Jacobi SVD of a square matrix: rotates column pairs until all
/// are orthogonal to working precision. Returns `(U, V, sigma)` unsorted.
fn jacobi_svd(mut a: DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let n = a.ncols();
    debug_assert_eq!(a.nrows(), n);
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut converged = n < 2;
    // Below these, gamma is at the rounding level of its own computation.
    let tol = (n as f64).sqrt() * f64::EPSILON;
    let negligible = (f64::EPSILON * a.norm()).powi(2);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (a.column(p), a.column(q));
                    (cp.norm_squared(), cq.norm_squared(), cp.dot(&cq))
                };
                if gamma == 0.0 || gamma.abs() <= tol * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut a, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical(format!(
            "Jacobi SVD of a {n}x{n} factor did not converge within {JACOBI_MAX_SWEEPS} sweeps"
        )));
    }

    let sigma: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let floor = f64::EPSILON * sigma.iter().copied().fold(0.0, f64::max);
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut missing = Vec::new();
    for (j, &s) in sigma.iter().enumerate() {
        if s > floor && s > 0.0 {
            u.set_column(j, &(a.column(j) / s));
        } else {
            missing.push(j);
        }
    }
    complete_orthonormal(&mut u, &missing);
    Ok((u, v, sigma))
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    let rows = m.nrows();
    let data = m.as_mut_slice();
    let (left, right) = data.split_at_mut(q * rows);
    let cp = &mut left[p * rows..(p + 1) * rows];
    let cq = &mut right[..rows];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, yq) = (*x, *y);
        *x = c * xp - s * yq;
        *y = s * xp + c * yq;
    }
}

/// Fills columns `missing` of `u` with unit vectors orthogonal to every other
/// column, trying standard basis vectors in order.
fn complete_orthonormal(u: &mut DMatrix<f64>, missing: &[usize]) {
    let n = u.nrows();
    let mut filled: Vec<usize> = (0..u.ncols()).filter(|j| !missing.contains(j)).collect();
    let mut basis = 0;
    for &j in missing {
        while basis < n {
            let mut cand = nalgebra::DVector::<f64>::zeros(n);
            cand[basis] = 1.0;
            basis += 1;
            for _ in 0..2 {
                for &k in &filled {
                    let proj = u.column(k).dot(&cand);
                    cand -= u.column(k) * proj;
                }
            }
            let norm = cand.norm();
            if norm > 0.5 {
                u.set_column(j, &(cand / norm));
                filled.push(j);
                break;
            }
        }
    }
}

/// SVD of a matrix with `rows >= cols` through a Householder QR:
/// `M = Q R`, `R = U_r S V^T`, `U = Q U_r`.
fn tall_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, Vec<f64>)> {
    let (rows, cols) = m.shape();
    let qr = householder_qr(m);
    let (u_r, v, sigma) = jacobi_svd(qr.r)?;
    let (a, tau) = (qr.reflectors, qr.tau);
    let mut u = DMatrix::<f64>::zeros(rows, cols);
    u.view_mut((0, 0), (cols, cols)).copy_from(&u_r);
    for k in (0..cols).rev() {
        if tau[k] == 0.0 {
            continue;
        }
        let v = &a[k * rows + k..(k + 1) * rows];
        let us = u.as_mut_slice();
        for j in 0..cols {
            let col = &mut us[j * rows + k..(j + 1) * rows];
            let s = tau[k] * dot(v, col);
            axpy(-s, v, col);
        }
    }
    Ok((u, v, sigma))
}

struct HouseholderQr {
    /// Column-major; column `k` from row `k` down holds reflector `k`.
    reflectors: Vec<f64>,
    tau: Vec<f64>,
    r: DMatrix<f64>,
}

fn householder_qr(m: &DMatrix<f64>) -> HouseholderQr {
    let (rows, cols) = m.shape();
    let mut a: Vec<f64> = m.as_slice().to_vec();
    let mut tau = vec![0.0; cols];
    let mut r = DMatrix::<f64>::zeros(cols, cols);
    for k in 0..cols {
        let (head, tail) = a.split_at_mut((k + 1) * rows);
        let v = &mut head[k * rows + k..];
        let alpha = dot(v, v).sqrt();
        if alpha == 0.0 {
            for j in k + 1..cols {
                r[(k, j)] = tail[(j - k - 1) * rows + k];
            }
            continue;
        }
        let beta = if v[0] > 0.0 { -alpha } else { alpha };
        let v0 = v[0] - beta;
        let vnorm2 = alpha * alpha - v[0] * v[0] + v0 * v0;
        v[0] = v0;
        tau[k] = 2.0 / vnorm2;
        r[(k, k)] = beta;
        for j in k + 1..cols {
            let col = &mut tail[(j - k - 1) * rows + k..(j - k) * rows];
            let s = tau[k] * dot(v, col);
            axpy(-s, v, col);
            r[(k, j)] = col[0];
        }
    }
    HouseholderQr { reflectors: a, tau, r }
}

/// Singular values with the singular vectors of the smaller side only.
///
/// Enough to apply a spectral shrinkage: for `M = U S V^T` with `rows >= cols`,
/// `U f(S) V^T = M V diag(f(s) / s) V^T`, and symmetrically on the left
/// otherwise. Terms with `f(s) = 0` are dropped, so `s = 0` never divides.
#[derive(Clone, Debug)]
pub(crate) struct Spectrum {
    /// Non-increasing.
    pub sigma: Vec<f64>,
    basis: DMatrix<f64>,
    tall: bool,
}

pub(crate) fn spectrum(m: &DMatrix<f64>) -> Result<Spectrum> {
    let tall = m.nrows() >= m.ncols();
    let qr = if tall {
        householder_qr(m)
    } else {
        householder_qr(&m.transpose())
    };
    if qr.r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite matrix entries".into()));
    }
    let (_, basis, sigma) = jacobi_svd(qr.r)?;
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]));
    let sigma: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    if sigma.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numerical("SVD produced non-finite singular values".into()));
    }
    Ok(Spectrum {
        sigma,
        basis: basis.select_columns(&order),
        tall,
    })
}

impl Spectrum {
    /// `U diag(values) V^T` for the matrix `m` this spectrum was computed from.
    pub(crate) fn apply(&self, m: &DMatrix<f64>, values: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(values.len(), self.sigma.len());
        let keep: Vec<usize> = (0..values.len())
            .filter(|&i| values[i] != 0.0 && self.sigma[i] > 0.0)
            .collect();
        if keep.is_empty() {
            return DMatrix::zeros(m.nrows(), m.ncols());
        }
        let basis = self.basis.select_columns(&keep);
        let mut scaled = basis.clone();
        for (j, &i) in keep.iter().enumerate() {
            scaled.column_mut(j).scale_mut(values[i] / self.sigma[i]);
        }
        // Through the thin factors when few terms survive, else via the full projector.
        let thin = 2 * keep.len() < self.basis.nrows();
        match (self.tall, thin) {
            (true, true) => (m * basis) * scaled.transpose(),
            (true, false) => m * (scaled * basis.transpose()),
            (false, true) => scaled * (basis.transpose() * m),
            (false, false) => (scaled * basis.transpose()) * m,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Entrywise `sign(x) * max(|x| - tau, 0)`, the proximal map of `tau * ||.||_1`.
pub fn soft_threshold(m: &Matrix, tau: f64) -> Result<Matrix> {
    check_threshold(tau)?;
    Ok(Matrix(m.0.map(|x| shrink(x, tau))))
}

#[inline]
pub(crate) fn shrink(x: f64, tau: f64) -> f64 {
    x - x.clamp(-tau, tau)
}

/// Singular value thresholding: soft-shrinks every singular value by `tau`.
///
/// Returns the shrunk matrix and the number of singular values above `tau`.
pub fn svt(m: &Matrix, tau: f64) -> Result<(Matrix, usize)> {
    check_threshold(tau)?;
    let factors = svd(m)?;
    Ok(svt_factors(&factors, tau))
}

pub(crate) fn svt_factors(factors: &SvdFactors, tau: f64) -> (Matrix, usize) {
    let shrunk = svt_values(&factors.sigma, tau);
    let rank = shrunk.iter().filter(|&&d| d > 0.0).count();
    (factors.recompose(&shrunk), rank)
}

pub(crate) fn svt_values(sigma: &[f64], tau: f64) -> Vec<f64> {
    sigma.iter().map(|&s| (s - tau).max(0.0)).collect()
}

/// Global minimizer over `delta >= 0` of `0.5 * (delta - sigma)^2 + w * delta^p`.
///
/// Below the threshold the minimizer is zero; above it the non-zero root is
/// found by the fixed point `delta <- sigma - w * p * delta^(p - 1)` started at
/// `sigma`.
pub fn gst_scalar(sigma: f64, w: f64, p: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and >= 0, got {sigma}")));
    }
    if !(w >= 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("weight must be finite and >= 0, got {w}")));
    }
    Ok(gst_unchecked(sigma, w, p))
}

pub(crate) fn gst_unchecked(sigma: f64, w: f64, p: f64) -> f64 {
    if w == 0.0 {
        return sigma;
    }
    if p == 1.0 {
        return (sigma - w).max(0.0);
    }
    if sigma <= gst_threshold(w, p) {
        return 0.0;
    }
    let mut delta = sigma;
    for _ in 0..GST_MAX_ITER {
        let next = sigma - w * p * delta.powf(p - 1.0);
        let step = (next - delta).abs();
        delta = next;
        if step < GST_TOL {
            break;
        }
    }
    delta.max(0.0)
}

/// The value of `sigma` at which the non-zero local minimum ties with zero.
pub fn gst_threshold(w: f64, p: f64) -> f64 {
    if p == 1.0 {
        return w;
    }
    let base = 2.0 * w * (1.0 - p);
    base.powf(1.0 / (2.0 - p)) + w * p * base.powf((p - 1.0) / (2.0 - p))
}

/// Proximal map of the weighted Schatten-p norm `sum_i w_i * sigma_i^p`.
///
/// `weights` must have `min(rows, cols)` entries in non-descending order so
/// that the problem separates over singular values.
pub fn weighted_schatten_prox(m: &Matrix, weights: &[f64], p: f64) -> Result<Matrix> {
    check_exponent(p)?;
    check_weights(weights, m.rows().min(m.cols()))?;
    let factors = svd(m)?;
    Ok(weighted_schatten_prox_factors(&factors, weights, p).0)
}

/// As [`weighted_schatten_prox`] on precomputed factors; also returns the
/// number of non-zero shrunk singular values.
pub(crate) fn weighted_schatten_prox_factors(factors: &SvdFactors, weights: &[f64], p: f64) -> (Matrix, usize) {
    let shrunk = gst_values(&factors.sigma, weights, p);
    let rank = shrunk.iter().filter(|&&d| d > 0.0).count();
    (factors.recompose(&shrunk), rank)
}

pub(crate) fn gst_values(sigma: &[f64], weights: &[f64], p: f64) -> Vec<f64> {
    sigma
        .iter()
        .zip(weights)
        .map(|(&s, &w)| gst_unchecked(s, w, p))
        .collect()
}

pub(crate) fn check_weights(weights: &[f64], expected: usize) -> Result<()> {
    if weights.len() != expected {
        return Err(Error::invalid(format!(
            "expected {expected} weights, got {}",
            weights.len()
        )));
    }
    if let Some(bad) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
        return Err(Error::invalid(format!("weight {bad} is negative or not finite")));
    }
    if let Some(i) = weights.windows(2).position(|pair| pair[1] < pair[0]) {
        return Err(Error::invalid(format!(
            "weights must be non-descending; weight {} ({}) exceeds weight {} ({})",
            i,
            weights[i],
            i + 1,
            weights[i + 1]
        )));
    }
    Ok(())
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("exponent p must lie in (0, 1], got {p}")))
    }
}

fn check_threshold(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("threshold must be finite and >= 0, got {tau}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_dmatrix(DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))).unwrap()
    }

    fn orthonormality_gap(q: &Matrix) -> f64 {
        let g = q.as_dmatrix().transpose() * q.as_dmatrix();
        let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
        (g - id).amax()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(Matrix::from_row_slice(0, 3, &[]).is_err());
        assert!(Matrix::from_row_slice(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(Matrix::from_row_slice(1, 2, &[1.0, f64::INFINITY]).is_err());
        assert!(Matrix::from_row_slice(2, 2, &[1.0]).is_err());
    }

    #[test]
    fn svd_identity_and_diagonal() {
        let f = svd(&Matrix::identity(2)).unwrap();
        assert_eq!(f.sigma, vec![1.0, 1.0]);

        let f = svd(&Matrix::from_diagonal(&[3.0, 0.0]).unwrap()).unwrap();
        assert_eq!(f.sigma, vec![3.0, 0.0]);
    }

    #[test]
    fn svd_random_reconstructs() {
        for (rows, cols, seed) in [(5, 3, 1), (3, 5, 2), (40, 7, 3), (1, 6, 4), (6, 1, 5)] {
            let m = random_matrix(rows, cols, seed);
            let f = svd(&m).unwrap();
            let r = rows.min(cols);
            assert_eq!(f.sigma.len(), r);
            assert_eq!(f.u.shape(), (rows, r));
            assert_eq!(f.v.shape(), (cols, r));
            assert!(f.sigma.windows(2).all(|w| w[0] >= w[1]));
            assert!(f.sigma.iter().all(|&s| s >= 0.0));
            let resid = f.reconstruct().max_abs_diff(&m);
            let rel = (f.reconstruct().into_dmatrix() - m.as_dmatrix()).norm() / m.frobenius_norm();
            assert!(rel < 1e-10, "relative residual {rel}");
            assert!(resid <= 1e-10 * f.sigma[0].max(1.0));
            assert!(orthonormality_gap(&f.u) < 1e-10);
            assert!(orthonormality_gap(&f.v) < 1e-10);
        }
    }

    #[test]
    fn svd_rank_deficient_keeps_orthonormal_factors() {
        let m = Matrix::zeros(6, 4);
        let f = svd(&m).unwrap();
        assert!(f.sigma.iter().all(|&s| s == 0.0));
        assert!(orthonormality_gap(&f.u) < 1e-10);
        assert!(orthonormality_gap(&f.v) < 1e-10);

        let col: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        let m = Matrix::from_columns(&[col.clone(), col.clone(), col]).unwrap();
        let f = svd(&m).unwrap();
        assert!(f.sigma[1] < 1e-12 * f.sigma[0]);
        assert!(orthonormality_gap(&f.u) < 1e-10);
        let gap = f.reconstruct().max_abs_diff(&m);
        assert!(gap < 1e-10, "gap {gap} sigma {:?}", f.sigma);
    }

    #[test]
    fn converges_with_a_column_at_the_underflow_edge() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let data: Vec<f64> = (0..40 * 4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = DMatrix::from_column_slice(40, 4, &data);
        let tiny = m.column(0) * 1e-156 + m.column(1) * 3e-156;
        m.set_column(3, &tiny);
        let f = svd(&Matrix(m.clone())).unwrap();
        assert!(f.reconstruct().max_abs_diff(&Matrix(m)) < 1e-13);
        assert!(f.sigma[3] < 1e-150);
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let mut cases = vec![
            random_matrix(300, 11, 9),
            random_matrix(24, 12, 10),
            random_matrix(9, 30, 12),
        ];
        let mut deficient = random_matrix(200, 6, 11).into_dmatrix();
        let c0 = deficient.column(0).into_owned();
        deficient.set_column(3, &c0);
        deficient.column_mut(4).fill(0.0);
        cases.push(Matrix::from_dmatrix(deficient).unwrap());
        for m in cases {
            let small = if m.rows() >= m.cols() { m.transpose() } else { m.clone() };
            let g = small.as_dmatrix() * small.as_dmatrix().transpose();
            let mut expected: Vec<f64> = g.symmetric_eigenvalues().iter().map(|e| e.max(0.0).sqrt()).collect();
            expected.sort_by(|a, b| b.total_cmp(a));
            let f = svd(&m).unwrap();
            for (a, b) in f.sigma.iter().zip(&expected) {
                assert!((a - b).abs() < 1e-7 * expected[0], "{:?} vs {expected:?}", f.sigma);
            }
            assert!(orthonormality_gap(&f.u) < 1e-10);
            assert!(orthonormality_gap(&f.v) < 1e-10);
            assert!(f.reconstruct().max_abs_diff(&m) < 1e-10 * f.sigma[0].max(1.0));
        }
    }

    #[test]
    fn svd_is_deterministic() {
        let m = random_matrix(30, 9, 7);
        let a = svd(&m).unwrap();
        let b = svd(&m).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert_eq!(a.u, b.u);
        assert_eq!(a.v, b.v);
    }

    #[test]
    fn soft_threshold_scalars() {
        let m = Matrix::from_row_slice(1, 3, &[3.0, -0.5, -2.5]).unwrap();
        let out = soft_threshold(&m, 1.0).unwrap();
        assert_eq!(out.get(0, 0), 2.0);
        assert_eq!(out.get(0, 1), 0.0);
        assert_eq!(out.get(0, 2), -1.5);
        assert!(soft_threshold(&m, -0.1).is_err());
        assert!(soft_threshold(&m, f64::NAN).is_err());
    }

    #[test]
    fn soft_threshold_matches_grid_oracle() {
        let m = random_matrix(4, 4, 11);
        let tau = 0.3;
        let out = soft_threshold(&m, tau).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let x = m.get(r, c);
                // Per-entry brute force over a 1e-4 grid on [-1.5, 1.5].
                let best = (0..=30_000)
                    .map(|k| -1.5 + k as f64 * 1e-4)
                    .map(|v| (v, 0.5 * (v - x).powi(2) + tau * v.abs()))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap()
                    .0;
                assert!((out.get(r, c) - best).abs() <= 1e-4, "{x}: {} vs {best}", out.get(r, c));
            }
        }
    }

    #[test]
    fn svt_diagonal() {
        let m = Matrix::from_diagonal(&[5.0, 3.0, 1.0]).unwrap();
        let (out, rank) = svt(&m, 2.0).unwrap();
        assert_eq!(rank, 2);
        let expected = Matrix::from_diagonal(&[3.0, 1.0, 0.0]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-12);
        assert!(svt(&m, -1.0).is_err());
    }

    #[test]
    fn svt_zero_threshold_is_identity() {
        let m = random_matrix(7, 5, 3);
        let (out, rank) = svt(&m, 0.0).unwrap();
        assert_eq!(rank, 5);
        assert!(out.max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn svt_output_is_not_improved_by_perturbation() {
        let m = random_matrix(6, 4, 21);
        let tau = 0.5;
        let (x, _) = svt(&m, tau).unwrap();
        let objective = |x: &DMatrix<f64>| {
            let nuclear: f64 = x.singular_values().iter().sum();
            0.5 * (x - m.as_dmatrix()).norm_squared() + tau * nuclear
        };
        let base = objective(x.as_dmatrix());
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let dir = DMatrix::from_fn(6, 4, |_, _| rng.random_range(-1.0..1.0));
            let perturbed = x.as_dmatrix() + dir.normalize() * 1e-3;
            assert!(objective(&perturbed) >= base - 1e-12);
        }
    }

    #[test]
    fn gst_reference_values() {
        assert_eq!(gst_scalar(3.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(gst_scalar(0.1, 1.0, 0.8).unwrap(), 0.0);
        assert_eq!(gst_scalar(2.5, 0.0, 0.5).unwrap(), 2.5);
        assert!(gst_scalar(1.0, 1.0, 0.0).is_err());
        assert!(gst_scalar(1.0, 1.0, 1.5).is_err());
        assert!(gst_scalar(-1.0, 1.0, 0.5).is_err());
        assert!(gst_scalar(1.0, -1.0, 0.5).is_err());
    }

    #[test]
    fn gst_dense_grid_oracle() {
        // Exhaustive 1e-6 grid over [0, 2].
        let (sigma, w, p) = (2.0, 0.5, 0.8);
        let f = |d: f64| 0.5 * (d - sigma) * (d - sigma) + w * d.powf(p);
        let (mut best, mut best_val) = (0.0, f(0.0));
        for k in 1..=2_000_000u32 {
            let d = k as f64 * 1e-6;
            let v = f(d);
            if v < best_val {
                best = d;
                best_val = v;
            }
        }
        let got = gst_scalar(sigma, w, p).unwrap();
        assert!((got - best).abs() < 1e-5, "{got} vs {best}");
    }

    #[test]
    fn gst_threshold_is_the_tie_point() {
        for &(w, p) in &[(0.5, 0.8), (1.0, 0.5), (2.0, 0.95)] {
            let tau = gst_threshold(w, p);
            let above = gst_scalar(tau * (1.0 + 1e-6), w, p).unwrap();
            let f = |d: f64| 0.5 * (d - tau) * (d - tau) + w * d.powf(p);
            assert!(above > 0.0);
            // At the threshold the non-zero stationary point costs the same as zero.
            assert!((f(above) - f(0.0)).abs() < 1e-4 * f(0.0).max(1.0));
            assert_eq!(gst_scalar(tau * (1.0 - 1e-6), w, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn weighted_prox_examples() {
        let m = random_matrix(8, 5, 4);
        let w = 0.7;
        let a = weighted_schatten_prox(&m, &[w; 5], 1.0).unwrap();
        let (b, _) = svt(&m, w).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);

        let z = weighted_schatten_prox(&m, &[0.0; 5], 0.6).unwrap();
        assert!(z.max_abs_diff(&m) < 1e-10);

        let d = Matrix::from_diagonal(&[5.0, 2.0]).unwrap();
        let out = weighted_schatten_prox(&d, &[0.5, 4.0], 1.0).unwrap();
        let expected = Matrix::from_diagonal(&[4.5, 0.0]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn weighted_prox_rejects_bad_weights() {
        let m = random_matrix(4, 3, 2);
        assert!(weighted_schatten_prox(&m, &[1.0, 1.0], 1.0).is_err());
        assert!(weighted_schatten_prox(&m, &[2.0, 1.0, 3.0], 1.0).is_err());
        assert!(weighted_schatten_prox(&m, &[-1.0, 1.0, 3.0], 1.0).is_err());
        assert!(weighted_schatten_prox(&m, &[1.0, 1.0, 1.0], 0.0).is_err());
    }

    #[test]
    fn weighted_prox_output_singular_values_stay_sorted() {
        let m = random_matrix(9, 6, 8);
        let weights = [0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
        let out = weighted_schatten_prox(&m, &weights, 0.7).unwrap();
        let s = svd(&out).unwrap().sigma;
        let f = svd(&m).unwrap();
        let expected: Vec<f64> = f
            .sigma
            .iter()
            .zip(weights)
            .map(|(&s, w)| gst_scalar(s, w, 0.7).unwrap())
            .collect();
        assert!(expected.windows(2).all(|w| w[0] >= w[1]));
        for (a, b) in s.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
