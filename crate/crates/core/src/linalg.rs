//! Small dense linear algebra: row-major matrices, Householder QR and Cholesky.
//!
//! Only what the regression code needs is implemented. Matrices in this
//! crate are tall and thin (n observations by a handful of coefficients), so
//! the routines favour clarity over blocking.

use std::ops::{Index, IndexMut};

use crate::scalar::{dot, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Builds a matrix from row-major storage.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix storage size mismatch");
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from a list of equally sized columns.
    pub fn from_columns(columns: &[Vec<T>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "dimension mismatch in mul_vec");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v`
    pub fn tr_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows, "dimension mismatch in tr_mul_vec");
        let mut out = vec![T::zero(); self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o = *o + x * vi;
            }
        }
        out
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Weighted Gram matrix `Xᵀ diag(w) X`; `None` weights means the identity.
    pub fn weighted_gram(&self, weights: Option<&[T]>) -> Self {
        let p = self.cols;
        let mut g = Self::zeros(p, p);
        for i in 0..self.rows {
            let w = weights.map_or(T::one(), |w| w[i]);
            let r = self.row(i);
            for a in 0..p {
                let ra = r[a] * w;
                for b in a..p {
                    g[(a, b)] = g[(a, b)] + ra * r[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        g
    }

    /// Quadratic form `uᵀ self v`.
    pub fn quad_form(&self, u: &[T], v: &[T]) -> T {
        u.iter()
            .enumerate()
            .map(|(i, &ui)| ui * dot(self.row(i), v))
            .sum()
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Relative pivot tolerance below which a factor is treated as singular.
///
/// `1e-10` for `f64`; widened for lower precision types so that exactly
/// collinear columns are still caught after rounding.
pub fn rank_tolerance<T: Scalar>(n: usize) -> T {
    let floor = T::lit(1e-10);
    let eps_based = T::epsilon() * T::lit(10.0) * T::from_usize_lossy(n.max(1)).sqrt();
    floor.max(eps_based)
}

/// Householder QR of a tall matrix (rows ≥ cols), without column pivoting.
#[derive(Debug, Clone)]
pub struct Qr<T> {
    rows: usize,
    cols: usize,
    /// Upper triangle holds R; reflectors live in `reflectors`.
    r: Matrix<T>,
    /// Unit Householder vectors, reflector k acting on rows k..rows.
    reflectors: Vec<Vec<T>>,
}

impl<T: Scalar> Qr<T> {
    pub fn new(a: &Matrix<T>) -> Self {
        let (n, p) = (a.rows(), a.cols());
        assert!(n >= p, "QR requires rows >= cols");
        let mut work = a.clone();
        let mut reflectors = Vec::with_capacity(p);
        for k in 0..p {
            let norm = (k..n).map(|i| work[(i, k)] * work[(i, k)]).sum::<T>().sqrt();
            let mut v: Vec<T> = (k..n).map(|i| work[(i, k)]).collect();
            if norm == T::zero() {
                reflectors.push(vec![T::zero(); n - k]);
                continue;
            }
            let alpha = if v[0] >= T::zero() { -norm } else { norm };
            v[0] = v[0] - alpha;
            let vnorm = v.iter().map(|&x| x * x).sum::<T>().sqrt();
            if vnorm == T::zero() {
                reflectors.push(vec![T::zero(); n - k]);
                continue;
            }
            for x in v.iter_mut() {
                *x = *x / vnorm;
            }
            for j in k..p {
                let s = (k..n).map(|i| v[i - k] * work[(i, j)]).sum::<T>();
                let two_s = s + s;
                for i in k..n {
                    work[(i, j)] = work[(i, j)] - two_s * v[i - k];
                }
            }
            reflectors.push(v);
        }
        let mut r = Matrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                r[(i, j)] = work[(i, j)];
            }
        }
        Qr {
            rows: n,
            cols: p,
            r,
            reflectors,
        }
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    /// Index of the first column whose R pivot is negligible relative to the
    /// largest pivot, i.e. the first column lying in the span of its predecessors.
    pub fn deficient_column(&self, rel_tol: T) -> Option<usize> {
        let diag: Vec<T> = (0..self.cols).map(|k| self.r[(k, k)].abs()).collect();
        let largest = diag.iter().copied().fold(T::zero(), T::max);
        if largest == T::zero() {
            return if self.cols > 0 { Some(0) } else { None };
        }
        diag.iter().position(|&d| d <= rel_tol * largest || !d.is_finite())
    }

    /// Applies `Qᵀ` to a length-`rows` vector in place.
    pub fn apply_qt(&self, y: &mut [T]) {
        assert_eq!(y.len(), self.rows);
        for (k, v) in self.reflectors.iter().enumerate() {
            let s = dot(v, &y[k..]);
            let two_s = s + s;
            for (yi, &vi) in y[k..].iter_mut().zip(v) {
                *yi = *yi - two_s * vi;
            }
        }
    }

    /// Applies `Q` to a length-`rows` vector in place.
    pub fn apply_q(&self, y: &mut [T]) {
        assert_eq!(y.len(), self.rows);
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            let s = dot(v, &y[k..]);
            let two_s = s + s;
            for (yi, &vi) in y[k..].iter_mut().zip(v) {
                *yi = *yi - two_s * vi;
            }
        }
    }

    /// Least-squares solution of `A b ≈ y`. Assumes full column rank.
    pub fn solve_least_squares(&self, y: &[T]) -> Vec<T> {
        let mut qty = y.to_vec();
        self.apply_qt(&mut qty);
        solve_upper(&self.r, &qty[..self.cols])
    }

    /// Thin Q factor (rows × cols).
    pub fn thin_q(&self) -> Matrix<T> {
        let mut q = Matrix::zeros(self.rows, self.cols);
        let mut e = vec![T::zero(); self.rows];
        for j in 0..self.cols {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            self.apply_q(&mut e);
            for i in 0..self.rows {
                q[(i, j)] = e[i];
            }
        }
        q
    }

    /// Diagonal of the projection `A (AᵀA)⁻¹ Aᵀ`, the squared row norms of thin Q.
    pub fn hat_diagonal(&self) -> Vec<T> {
        let q = self.thin_q();
        (0..self.rows)
            .map(|i| q.row(i).iter().map(|&x| x * x).sum())
            .collect()
    }

    /// `(AᵀA)⁻¹ = R⁻¹ R⁻ᵀ`.
    pub fn gram_inverse(&self) -> Matrix<T> {
        let rinv = upper_inverse(&self.r);
        rinv.matmul(&rinv.transpose())
    }
}

/// Back substitution for an upper-triangular system.
pub fn solve_upper<T: Scalar>(r: &Matrix<T>, b: &[T]) -> Vec<T> {
    let p = r.cols();
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let s = (i + 1..p).map(|j| r[(i, j)] * x[j]).sum::<T>();
        x[i] = (b[i] - s) / r[(i, i)];
    }
    x
}

/// Inverse of an upper-triangular matrix.
pub fn upper_inverse<T: Scalar>(r: &Matrix<T>) -> Matrix<T> {
    let p = r.cols();
    let mut inv = Matrix::zeros(p, p);
    for j in 0..p {
        let mut e = vec![T::zero(); p];
        e[j] = T::one();
        let col = solve_upper(r, &e);
        for i in 0..=j {
            inv[(i, j)] = col[i];
        }
    }
    inv
}

/// Cholesky factor `L` with `A = L Lᵀ` of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Returns `None` when a pivot falls below `rel_tol` times the largest
    /// diagonal entry of `a` (not numerically positive definite).
    pub fn new(a: &Matrix<T>, rel_tol: T) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "Cholesky needs a square matrix");
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(T::zero(), T::max);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let s = (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum::<T>();
            let d = a[(j, j)] - s;
            if !d.is_finite() || d <= rel_tol * scale {
                return None;
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let s = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum::<T>();
                l[(i, j)] = (a[(i, j)] - s) / ljj;
            }
        }
        Some(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        let mut z = vec![T::zero(); n];
        for i in 0..n {
            let s = (0..i).map(|k| self.l[(i, k)] * z[k]).sum::<T>();
            z[i] = (b[i] - s) / self.l[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let s = (i + 1..n).map(|k| self.l[(k, i)] * x[k]).sum::<T>();
            x[i] = (z[i] - s) / self.l[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.solve(&e);
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        // symmetrize rounding noise
        for i in 0..n {
            for j in 0..i {
                let m = (inv[(i, j)] + inv[(j, i)]) / T::lit(2.0);
                inv[(i, j)] = m;
                inv[(j, i)] = m;
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> Matrix<f64> {
        Matrix::from_row_major(
            4,
            3,
            vec![1.0, 2.0, 0.5, 1.0, -1.0, 3.0, 1.0, 0.0, 1.0, 1.0, 4.0, -2.0],
        )
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        let a = sample();
        let qr = Qr::new(&a);
        let q = qr.thin_q();
        let qtq = q.transpose().matmul(&q);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - e).abs() < 1e-12);
            }
        }
        let back = q.matmul(qr.r());
        for (x, y) in back.as_slice().iter().zip(a.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gram_inverse_matches_cholesky_inverse() {
        let a = sample();
        let via_qr = Qr::new(&a).gram_inverse();
        let via_chol = Cholesky::new(&a.weighted_gram(None), 1e-14).unwrap().inverse();
        for (x, y) in via_qr.as_slice().iter().zip(via_chol.as_slice()) {
            assert_relative_eq!(*x, *y, max_relative = 1e-10);
        }
    }

    #[test]
    fn duplicated_column_is_detected() {
        let a = Matrix::from_columns(&[
            vec![1.0, 1.0, 1.0, 1.0],
            vec![0.3, 1.2, -0.4, 2.0],
            vec![0.3, 1.2, -0.4, 2.0],
        ]);
        assert_eq!(Qr::new(&a).deficient_column(1e-10), Some(2));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 2.0, 1.0]);
        assert!(Cholesky::new(&a, 1e-12).is_none());
    }

    #[test]
    fn works_in_single_precision() {
        let a = Matrix::<f32>::from_row_major(3, 2, vec![1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = Qr::new(&a).solve_least_squares(&[1.0, 3.0, 5.0]);
        assert!((b[0] - 1.0).abs() < 1e-5 && (b[1] - 2.0).abs() < 1e-5);
    }
}
