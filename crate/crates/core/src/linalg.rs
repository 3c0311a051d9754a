//! Dense symmetric eigensolvers.
//!
//! Two independent routes are provided:
//!
//! * [`jacobi_eigen`]: cyclic Jacobi rotations. Used for the small local
//!   matrices, where high relative accuracy of tiny eigenvalues matters. The
//!   rotation threshold is relative (`|a_pq| <= tol * sqrt(|a_pp a_qq|)`), so
//!   for positive definite input the eigenvalues are determined to relative
//!   accuracy governed by the condition number of the diagonally scaled
//!   matrix rather than by `||A||`.
//! * [`symmetric_eigenvalues`]: Householder tridiagonalization followed by
//!   implicit-shift QL. Used for finite sections and Gram matrices with
//!   dimensions in the thousands.

use crate::error::{Error, Result};

/// Dense square matrix in row-major order, intended to hold symmetric data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Fills the full matrix from `f(i, j)` evaluated on the lower triangle.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Wraps row-major data; fails if the length is not a square.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                data.len()
            )));
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// `self * other` for square matrices of equal size.
    pub fn matmul(&self, other: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            let row_out = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for (o, b) in row_out.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        SymMatrix { n, data: out }
    }

    /// `Tr(self * other)` without forming the product.
    pub fn trace_of_product(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i * n + j] * other.data[j * n + i];
            }
        }
        acc
    }
}

/// Eigen-decomposition returned by [`jacobi_eigen`].
#[derive(Debug, Clone)]
pub struct JacobiDecomposition {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Column `k` (row-major `n x n`) is the unit eigenvector of `values[k]`.
    pub vectors: Option<Vec<f64>>,
    pub sweeps: usize,
}

impl JacobiDecomposition {
    /// Component `i` of eigenvector `k`.
    pub fn vector_component(&self, i: usize, k: usize) -> Option<f64> {
        let n = self.values.len();
        self.vectors.as_ref().map(|v| v[i * n + k])
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;
const JACOBI_REL_TOL: f64 = 1e-15;

/// Cyclic Jacobi eigensolver for a symmetric matrix.
///
/// A rotation is applied to the pair `(p, q)` while
/// `|a_pq| > tol * sqrt(|a_pp a_qq|)`; iteration stops when a full sweep
/// applies no rotation.
pub fn jacobi_eigen(matrix: &SymMatrix, want_vectors: bool) -> Result<JacobiDecomposition> {
    let n = matrix.dim();
    let mut a = matrix.data.clone();
    let mut v = want_vectors.then(|| {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    });

    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let scale = (app * aqq).abs().sqrt();
                if apq.abs() <= JACOBI_REL_TOL * scale || apq == 0.0 {
                    a[p * n + q] = if apq.abs() <= f64::MIN_POSITIVE { 0.0 } else { apq };
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let new_kp = akp - s * (akq + tau * akp);
                    let new_kq = akq + s * (akp - tau * akq);
                    a[k * n + p] = new_kp;
                    a[p * n + k] = new_kp;
                    a[k * n + q] = new_kq;
                    a[q * n + k] = new_kq;
                }
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp - s * (vkq + tau * vkp);
                        v[k * n + q] = vkq + s * (vkp - tau * vkq);
                    }
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence { dim: n, sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = v.map(|v| {
        let mut out = vec![0.0; n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for row in 0..n {
                out[row * n + new_col] = v[row * n + old_col];
            }
        }
        out
    });
    Ok(JacobiDecomposition { values, vectors, sweeps })
}

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i]` coupling `i, i + 1`.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Householder reduction to tridiagonal form (similarity, eigenvalues only).
pub fn tridiagonalize(matrix: &SymMatrix) -> Tridiagonal {
    let n = matrix.dim();
    let mut a = matrix.data.clone();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    if n == 0 {
        return Tridiagonal { diag, off };
    }
    let mut v = vec![0.0; n];
    let mut u = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        diag[k] = a[k * n + k];
        let m = n - k - 1;
        // column k below the diagonal
        let mut norm_sq = 0.0;
        for i in 0..m {
            let x = a[(k + 1 + i) * n + k];
            v[i] = x;
            norm_sq += x * x;
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            off[k] = 0.0;
            continue;
        }
        let alpha = if v[0] > 0.0 { -norm } else { norm };
        off[k] = alpha;
        v[0] -= alpha;
        let vnorm = (norm_sq - 2.0 * alpha * (v[0] + alpha) + alpha * alpha).sqrt();
        let vnorm = if vnorm > 0.0 { vnorm } else { v[..m].iter().map(|x| x * x).sum::<f64>().sqrt() };
        for x in &mut v[..m] {
            *x /= vnorm;
        }
        // u = B v on the trailing block B = a[k+1.., k+1..]
        let mut gamma = 0.0;
        for i in 0..m {
            let row = &a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            let dot: f64 = row.iter().zip(&v[..m]).map(|(x, y)| x * y).sum();
            u[i] = dot;
            gamma += v[i] * dot;
        }
        // q = 2u - 2 gamma v ; B <- B - v q^T - q v^T
        for i in 0..m {
            u[i] = 2.0 * u[i] - 2.0 * gamma * v[i];
        }
        for i in 0..m {
            let vi = v[i];
            let qi = u[i];
            let row = &mut a[(k + 1 + i) * n + k + 1..(k + 1 + i) * n + n];
            for ((x, &vj), &qj) in row.iter_mut().zip(&v[..m]).zip(&u[..m]) {
                *x -= vi * qj + qi * vj;
            }
        }
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2) * n + n - 2];
        diag[n - 1] = a[(n - 1) * n + n - 1];
        off[n - 2] = a[(n - 1) * n + n - 2];
    } else {
        diag[0] = a[0];
    }
    Tridiagonal { diag, off }
}

const QL_MAX_ITER: usize = 60;

/// Eigenvalues of a symmetric tridiagonal matrix by implicit-shift QL,
/// returned in descending order.
pub fn tridiagonal_eigenvalues(t: &Tridiagonal) -> Result<Vec<f64>> {
    let n = t.diag.len();
    let mut d = t.diag.clone();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&t.off);

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence { dim: n, sweeps: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// All eigenvalues of a symmetric matrix, descending.
pub fn symmetric_eigenvalues(matrix: &SymMatrix) -> Result<Vec<f64>> {
    tridiagonal_eigenvalues(&tridiagonalize(matrix))
}
