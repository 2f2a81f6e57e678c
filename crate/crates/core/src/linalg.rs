//! Small dense complex linear algebra: LU with partial pivoting and a
//! one-sided Jacobi SVD. Systems here are tiny (tens of unknowns), so the
//! Jacobi SVD's cost is irrelevant and its accuracy on small singular values
//! is what the spectrum scans rely on.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::scalar::Real;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row vectors; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Option<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return None;
        }
        Some(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn from_columns(rows: usize, columns: &[Vec<Complex<T>>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| *z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-Complex::one()))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Complex::zero(), |acc, k| acc + self[(i, k)] * other[(k, j)])
        })
    }

    pub fn mul_vec(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Horizontal concatenation `(self other)`.
    pub fn hcat(&self, other: &Self) -> Self {
        assert_eq!(self.rows, other.rows);
        Self::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    /// Vertical concatenation.
    pub fn vcat(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn norm_fro(&self) -> T {
        self.data.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// Spectral norm (largest singular value).
    pub fn norm2(&self) -> T {
        self.singular_values().first().copied().unwrap_or_else(T::zero)
    }

    pub fn singular_values(&self) -> Vec<T> {
        self.svd().singular_values
    }

    /// Smallest singular value divided by the largest (0 for the zero matrix).
    pub fn smin_ratio(&self) -> T {
        let sv = self.singular_values();
        match (sv.first(), sv.last()) {
            (Some(&max), Some(&min)) if max > T::zero() => min / max,
            _ => T::zero(),
        }
    }

    pub fn lu(&self) -> Lu<T> {
        Lu::new(self.clone())
    }

    pub fn svd(&self) -> Svd<T> {
        Svd::new(self)
    }

    /// Solves `self · x = b`, `None` if a zero pivot is met.
    pub fn solve(&self, b: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        self.lu().solve(b)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Self::Output {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Self::Output {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: CMatrix<T>,
    perm: Vec<usize>,
    singular: bool,
}

impl<T: Real> Lu<T> {
    fn new(mut a: CMatrix<T>) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, a[(i, k)].norm()))
                .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == T::zero() {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            for i in k + 1..n {
                let factor = a[(i, k)] / pivot;
                a[(i, k)] = factor;
                if factor.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    let akj = a[(k, j)];
                    a[(i, j)] -= factor * akj;
                }
            }
        }
        Self { lu: a, perm, singular }
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Option<Vec<Complex<T>>> {
        if self.singular {
            return None;
        }
        let n = self.lu.rows;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] = x[i] / self.lu[(i, i)];
        }
        Some(x)
    }
}

/// Singular values (descending) and right singular vectors of a matrix.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub singular_values: Vec<T>,
    /// Column `j` is the right singular vector for `singular_values[j]`.
    pub v: CMatrix<T>,
}

impl<T: Real> Svd<T> {
    /// One-sided (Hestenes) Jacobi. Works on the columns of `a`; for wide
    /// matrices the trailing singular values are the structural zeros.
    fn new(a: &CMatrix<T>) -> Self {
        let (m, n) = (a.rows, a.cols);
        // Column-major working copy.
        let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<Complex<T>>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { Complex::one() } else { Complex::zero() }).collect())
            .collect();
        let eps = T::epsilon();
        let two = T::lit(2.0);

        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = cols[p].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                    let beta = cols[q].iter().fold(T::zero(), |s, z| s + z.norm_sqr());
                    let gamma = cols[p]
                        .iter()
                        .zip(&cols[q])
                        .fold(Complex::zero(), |s, (x, y)| s + x.conj() * *y);
                    let g = gamma.norm();
                    if g == T::zero() || g <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let phase = gamma / g;
                    let zeta = (beta - alpha) / (two * g);
                    let sign = if zeta >= T::zero() { T::one() } else { -T::one() };
                    let t = sign / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let cs = T::one() / (T::one() + t * t).sqrt();
                    let sn = cs * t;
                    // new_p = c·col_p − s·conj(phase)·col_q, new_q = s·col_p + c·conj(phase)·col_q
                    let ph = phase.conj();
                    rotate(&mut cols, p, q, cs, sn, ph);
                    rotate(&mut v, p, q, cs, sn, ph);
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<(T, usize)> = cols
            .iter()
            .enumerate()
            .map(|(j, c)| (c.iter().fold(T::zero(), |s, z| s + z.norm_sqr()).sqrt(), j))
            .collect();
        order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
        // A wide matrix has at most m nonzero singular values; the remaining
        // column norms are roundoff and are reported as exact zeros.
        let singular_values = order
            .iter()
            .enumerate()
            .map(|(rank, (s, _))| if rank < m { *s } else { T::zero() })
            .collect();
        let vmat = CMatrix::from_fn(n, n, |i, j| v[order[j].1][i]);
        Self {
            singular_values,
            v: vmat,
        }
    }

    pub fn smallest(&self) -> T {
        self.singular_values.last().copied().unwrap_or_else(T::zero)
    }

    pub fn largest(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }

    /// Number of singular values `<= rel_tol · largest`.
    pub fn nullity(&self, rel_tol: T) -> usize {
        let cutoff = rel_tol * self.largest();
        self.singular_values.iter().filter(|&&s| s <= cutoff).count()
    }

    /// Right singular vectors spanning the numerical null space.
    pub fn null_space(&self, rel_tol: T) -> Vec<Vec<Complex<T>>> {
        let k = self.nullity(rel_tol);
        let n = self.singular_values.len();
        (n - k..n).map(|j| self.v.column(j)).collect()
    }
}

fn rotate<T: Real>(
    cols: &mut [Vec<Complex<T>>],
    p: usize,
    q: usize,
    cs: T,
    sn: T,
    ph: Complex<T>,
) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yp = *y * ph;
        let new_p = *x * cs - yp * sn;
        let new_q = *x * sn + yp * cs;
        *x = new_p;
        *y = new_q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn sample() -> CMatrix<f64> {
        CMatrix::from_fn(4, 4, |i, j| {
            Complex64::new((i * 3 + j) as f64 * 0.37 - 1.0, ((i + 2 * j) % 5) as f64 * 0.21)
        })
    }

    #[test]
    fn lu_solves_and_reproduces_rhs() {
        let a = sample().add(&CMatrix::identity(4).scale(Complex64::new(3.0, 0.0)));
        let b: Vec<_> = (0..4).map(|i| Complex64::new(i as f64, 1.0 - i as f64)).collect();
        let x = a.solve(&b).unwrap();
        let r = a.mul_vec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).norm() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported_by_lu() {
        let a = CMatrix::<f64>::zeros(3, 3);
        assert!(a.lu().is_singular());
        assert!(a.solve(&[Complex64::new(1.0, 0.0); 3]).is_none());
    }

    #[test]
    fn svd_of_diagonal_and_rank_one() {
        let d = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new([2.0, -5.0, 0.5][i], 0.0)
            } else {
                Complex64::zero()
            }
        });
        let sv = d.singular_values();
        assert_relative_eq!(sv[0], 5.0, epsilon = 1e-14);
        assert_relative_eq!(sv[1], 2.0, epsilon = 1e-14);
        assert_relative_eq!(sv[2], 0.5, epsilon = 1e-14);

        let u = [Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)];
        let w = [Complex64::new(3.0, 0.0), Complex64::new(1.0, -1.0)];
        let r1 = CMatrix::from_fn(2, 2, |i, j| u[i] * w[j].conj());
        let svd = r1.svd();
        assert_eq!(svd.nullity(1e-12), 1);
        let nv = &svd.null_space(1e-12)[0];
        assert!(crate::scalar::vec_norm(&r1.mul_vec(nv)) < 1e-13);
    }

    #[test]
    fn svd_matches_nalgebra() {
        let a = sample();
        let na = nalgebra::DMatrix::from_fn(4, 4, |i, j| a[(i, j)]);
        let mut reference: Vec<f64> = na.singular_values().iter().copied().collect();
        reference.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for (mine, theirs) in a.singular_values().iter().zip(&reference) {
            assert_relative_eq!(*mine, *theirs, epsilon = 1e-12, max_relative = 1e-11);
        }
    }

    #[test]
    fn wide_matrix_has_structural_zero_singular_values() {
        let a = CMatrix::<f64>::from_fn(2, 4, |i, j| Complex64::new((i + j) as f64, (i * j) as f64));
        let sv = a.singular_values();
        assert_eq!(sv.len(), 4);
        assert_eq!(sv[2], 0.0);
        assert_eq!(sv[3], 0.0);
    }
}
