//! Small dense matrices living on the stack.
//!
//! Everything in the crate works with tangent spaces of tori of dimension at
//! most four, so a fixed 4x4 buffer covers every Jacobian, bundle frame and
//! exterior power we need without heap traffic in the hot loops.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::ser::{Serialize, SerializeSeq, Serializer};

pub const CAP: usize = 4;

#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: [f64; CAP * CAP],
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mat{}x{}[", self.rows, self.cols)?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
        }
        write!(f, "]")
    }
}

/// Serialised as a list of rows.
impl Serialize for Mat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            let row: Vec<f64> = (0..self.cols).map(|j| self[(i, j)]).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * CAP + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * CAP + j]
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows <= CAP && cols <= CAP, "matrix {rows}x{cols} exceeds {CAP}x{CAP}");
        Mat { rows, cols, data: [0.0; CAP * CAP] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from row slices. Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Mat::from_fn(r, c, |i, j| {
            assert_eq!(rows[i].len(), c, "ragged rows");
            rows[i][j]
        })
    }

    /// Builds a `rows x cols` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, columns: &[[f64; CAP]]) -> Self {
        Mat::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> [f64; CAP] {
        let mut v = [0.0; CAP];
        for (i, vi) in v.iter_mut().enumerate().take(self.rows) {
            *vi = self[(i, j)];
        }
        v
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    #[inline]
    pub fn mul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * CAP + j] += a * rhs.data[l * CAP + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> [f64; CAP] {
        let mut out = [0.0; CAP];
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = (0..self.cols).map(|j| self[(i, j)] * v[j]).sum();
        }
        out
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] + rhs[(i, j)])
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols);
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] - rhs[(i, j)])
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)] * s)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                m = m.max(self[(i, j)].abs());
            }
        }
        m
    }

    /// Operator 2-norm.
    pub fn norm2(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Thin QR factorisation by modified Gram-Schmidt with one round of
    /// reorthogonalisation. `R` has a nonnegative diagonal. Returns `None`
    /// when a column is numerically dependent on the previous ones.
    pub fn qr(&self) -> Option<(Mat, Mat)> {
        let (m, k) = (self.rows, self.cols);
        assert!(k <= m, "qr needs a tall matrix");
        let mut q = *self;
        let mut r = Mat::zeros(k, k);
        for j in 0..k {
            let original: f64 = (0..m).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
            for _pass in 0..2 {
                for p in 0..j {
                    let dot: f64 = (0..m).map(|i| q[(i, p)] * q[(i, j)]).sum();
                    r[(p, j)] += dot;
                    for i in 0..m {
                        q[(i, j)] -= dot * q[(i, p)];
                    }
                }
            }
            let norm: f64 = (0..m).map(|i| q[(i, j)] * q[(i, j)]).sum::<f64>().sqrt();
            if !norm.is_finite() || norm == 0.0 || norm <= 1e-14 * original {
                return None;
            }
            r[(j, j)] = norm;
            for i in 0..m {
                q[(i, j)] /= norm;
            }
        }
        Some((q, r))
    }

    /// Singular values in descending order, computed by one-sided Jacobi
    /// rotations (high relative accuracy for the small sizes used here).
    pub fn singular_values(&self) -> Vec<f64> {
        let a = if self.cols > self.rows { self.transpose() } else { *self };
        let (m, n) = (a.rows, a.cols);
        let mut a = a;
        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let mut alpha = 0.0;
                    let mut beta = 0.0;
                    let mut gamma = 0.0;
                    for i in 0..m {
                        alpha += a[(i, p)] * a[(i, p)];
                        beta += a[(i, q)] * a[(i, q)];
                        gamma += a[(i, p)] * a[(i, q)];
                    }
                    if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (2.0 * gamma);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let ap = a[(i, p)];
                        let aq = a[(i, q)];
                        a[(i, p)] = c * ap - s * aq;
                        a[(i, q)] = s * ap + c * aq;
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let mut sv: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)] * a[(i, j)]).sum::<f64>().sqrt())
            .collect();
        sv.sort_by(|x, y| y.total_cmp(x));
        sv
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi.
    /// Eigenvalues descending; eigenvectors are the matching columns.
    pub fn symmetric_eigen(&self) -> (Vec<f64>, Mat) {
        let n = self.rows;
        assert_eq!(n, self.cols, "symmetric_eigen needs a square matrix");
        let mut a = *self;
        let mut v = Mat::identity(n);
        for _sweep in 0..60 {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(j, j)].total_cmp(&a[(i, i)]));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let vectors = Mat::from_fn(n, n, |i, j| v[(i, order[j])]);
        (values, vectors)
    }

    /// Determinant by Gaussian elimination with partial pivoting.
    pub fn det(&self) -> f64 {
        let n = self.rows;
        assert_eq!(n, self.cols, "det needs a square matrix");
        let mut a = *self;
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .unwrap();
            if a[(pivot, col)] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot, j)];
                    a[(pivot, j)] = tmp;
                }
                det = -det;
            }
            let p = a[(col, col)];
            det *= p;
            for i in (col + 1)..n {
                let f = a[(i, col)] / p;
                for j in col..n {
                    a[(i, j)] -= f * a[(col, j)];
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan elimination; `None` if singular.
    pub fn inverse(&self) -> Option<Mat> {
        let n = self.rows;
        assert_eq!(n, self.cols, "inverse needs a square matrix");
        let mut a = *self;
        let mut inv = Mat::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .unwrap();
            if a[(pivot, col)].abs() < 1e-300 {
                return None;
            }
            for j in 0..n {
                a.data.swap(col * CAP + j, pivot * CAP + j);
                inv.data.swap(col * CAP + j, pivot * CAP + j);
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[(i, col)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= f * a[(col, j)];
                    inv[(i, j)] -= f * inv[(col, j)];
                }
            }
        }
        Some(inv)
    }

    /// The `j`-th compound matrix: the action of the matrix on the `j`-th
    /// exterior power, in the basis of lexicographically ordered index sets.
    pub fn compound(&self, j: usize) -> Mat {
        let rows = subsets(self.rows, j);
        let cols = subsets(self.cols, j);
        Mat::from_fn(rows.len(), cols.len(), |a, b| {
            Mat::from_fn(j, j, |p, q| self[(rows[a][p], cols[b][q])]).det()
        })
    }
}

/// All `j`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, j, &mut Vec::new(), &mut out);
    out
}

/// Largest principal angle between two subspaces of equal dimension given by
/// orthonormal bases. This is the Grassmannian distance used throughout.
pub fn grassmann_distance(u: &Mat, v: &Mat) -> f64 {
    assert_eq!(u.rows(), v.rows());
    assert_eq!(u.cols(), v.cols(), "subspaces must have equal dimension");
    let overlap = u.transpose().mul(v);
    let cos = overlap.singular_values().last().copied().unwrap_or(1.0);
    let residual = v.sub(&u.mul(&overlap));
    let sin = residual.singular_values().first().copied().unwrap_or(0.0);
    sin.atan2(cos)
}

/// Smallest principal angle between two subspaces given by orthonormal bases.
pub fn min_principal_angle(u: &Mat, v: &Mat) -> f64 {
    assert_eq!(u.rows(), v.rows());
    if u.cols() + v.cols() > u.rows() {
        return 0.0;
    }
    let overlap = u.transpose().mul(v);
    let cos = overlap.singular_values().first().copied().unwrap_or(0.0);
    let residual = v.sub(&u.mul(&overlap));
    let sin = residual.singular_values().last().copied().unwrap_or(1.0);
    sin.atan2(cos)
}

/// Orthonormal basis of the span of the columns, or `None` if rank deficient.
pub fn orthonormalize(m: &Mat) -> Option<Mat> {
    m.qr().map(|(q, _)| q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_reconstructs() {
        let a = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 3.0], &[0.5, -1.0]]);
        let (q, r) = a.qr().unwrap();
        let back = q.mul(&r);
        assert!(back.sub(&a).max_abs() < 1e-14);
        let qtq = q.transpose().mul(&q);
        assert!(qtq.sub(&Mat::identity(2)).max_abs() < 1e-14);
        assert_eq!(r[(1, 0)], 0.0);
    }

    #[test]
    fn qr_detects_dependence() {
        let a = Mat::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        assert!(a.qr().is_none());
    }

    #[test]
    fn singular_values_of_diagonal() {
        let a = Mat::from_rows(&[&[0.0, 3.0], &[-5.0, 0.0]]);
        let sv = a.singular_values();
        assert!((sv[0] - 5.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_values_wide_matrix() {
        let a = Mat::from_rows(&[&[3.0, 0.0, 4.0]]);
        assert_eq!(a.singular_values().len(), 1);
        assert!((a.singular_values()[0] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_of_cat_matrix() {
        let a = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let (vals, vecs) = a.symmetric_eigen();
        let golden = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((vals[0] - golden).abs() < 1e-13);
        assert!((vals[1] - 1.0 / golden).abs() < 1e-13);
        let v0 = vecs.column(0);
        let av = a.mul_vec(&v0);
        assert!((av[0] - golden * v0[0]).abs() < 1e-12);
    }

    #[test]
    fn det_and_inverse() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 2.0, 1.0], &[0.0, 1.0, 1.0]]);
        assert!((a.det() - 1.0).abs() < 1e-14);
        let inv = a.inverse().unwrap();
        assert!(a.mul(&inv).sub(&Mat::identity(3)).max_abs() < 1e-14);
        assert!(Mat::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).inverse().is_none());
    }

    #[test]
    fn compound_is_multiplicative() {
        let a = Mat::from_rows(&[&[2.0, 1.0, 0.3], &[1.0, -2.0, 1.0], &[0.0, 1.5, 1.0]]);
        let b = Mat::from_rows(&[&[1.0, 0.0, 2.0], &[0.5, 1.0, 0.0], &[-1.0, 0.2, 3.0]]);
        for j in 1..=3 {
            let lhs = a.mul(&b).compound(j);
            let rhs = a.compound(j).mul(&b.compound(j));
            assert!(lhs.sub(&rhs).max_abs() < 1e-12, "j={j}");
        }
        assert!((a.compound(3)[(0, 0)] - a.det()).abs() < 1e-12);
    }

    #[test]
    fn principal_angles() {
        let e1 = Mat::from_rows(&[&[1.0], &[0.0]]);
        let diag = Mat::from_rows(&[&[1.0 / 2f64.sqrt()], &[1.0 / 2f64.sqrt()]]);
        assert!((grassmann_distance(&e1, &diag) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert!((min_principal_angle(&e1, &diag) - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let tiny = Mat::from_rows(&[&[1.0], &[1e-12]]);
        let tiny = orthonormalize(&tiny).unwrap();
        assert!((grassmann_distance(&e1, &tiny) - 1e-12).abs() < 1e-20);
    }
}
