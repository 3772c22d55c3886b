//! Dense matrices over a [`Field`] and the handful of decompositions the
//! analyses need: rank, kernel, determinant, inverse, characteristic and
//! minimal polynomials, Jordan-type tests and singular values.

pub mod bareiss;
pub mod elimination;
pub mod svd;

use std::ops::{Index, IndexMut, Mul};

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::{Field, DEFAULT_RTOL};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T> Matrix<T> {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_vec(r, c, rows.into_iter().flatten().collect())
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<T>]) -> Result<Self> {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        if cols.iter().any(|col| col.len() != r) {
            return Err(Error::Shape("ragged columns".into()));
        }
        Ok(Self::from_fn(r, c, |i, j| cols[j][i].clone()))
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i].clone()
            } else {
                T::zero()
            }
        })
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = a.clone() * other[(k, j)].clone();
                    out[(i, j)] = out[(i, j)].clone() + v;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() + other[(i, j)].clone()
        })
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self::from_fn(self.rows, self.cols, |i, j| {
            self[(i, j)].clone() - other[(i, j)].clone()
        })
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    /// Commutator `self * other - other * self`.
    pub fn bracket(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn trace(&self) -> T {
        assert!(self.is_square());
        (0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Zero test that is exact for exact fields and relative to `scale`
    /// otherwise.
    pub fn is_negligible(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.is_negligible(tol))
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(Field::modulus).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn pow(&self, k: usize) -> Self {
        assert!(self.is_square());
        let mut acc = Self::identity(self.rows);
        for _ in 0..k {
            acc = acc.matmul(self);
        }
        acc
    }

    pub fn rank(&self) -> usize {
        self.rank_with_tol(DEFAULT_RTOL)
    }

    pub fn rank_with_tol(&self, rtol: f64) -> usize {
        T::rank_kernel(self, rtol)
    }

    /// Basis of the kernel. Exact for [`Rational`](crate::Rational),
    /// orthonormal and tolerance-based for the float fields.
    pub fn nullspace(&self) -> Vec<Vec<T>> {
        self.nullspace_with_tol(DEFAULT_RTOL)
    }

    pub fn nullspace_with_tol(&self, rtol: f64) -> Vec<Vec<T>> {
        let basis = T::nullspace_kernel(self, rtol);
        #[cfg(debug_assertions)]
        self.check_kernel(&basis, rtol);
        basis
    }

    #[cfg(debug_assertions)]
    fn check_kernel(&self, basis: &[Vec<T>], rtol: f64) {
        if self.rows * self.cols > 4096 {
            return;
        }
        let scale = self.max_modulus().max(1.0) * (self.cols as f64);
        for v in basis {
            let r = self.mul_vec(v);
            debug_assert!(
                r.iter().all(|x| x.is_negligible(1e3 * rtol * scale)),
                "kernel vector does not annihilate the matrix"
            );
        }
        if T::EXACT {
            debug_assert_eq!(
                basis.len() + self.rank_with_tol(rtol),
                self.cols,
                "rank-nullity"
            );
        }
    }

    pub fn det(&self) -> T {
        T::det_kernel(self)
    }

    pub fn inverse(&self) -> Option<Self> {
        elimination::inverse(self, DEFAULT_RTOL)
    }

    /// Some solution of `self · x = b`, if the system is consistent.
    pub fn solve(&self, b: &[T]) -> Option<Vec<T>> {
        elimination::solve(self, b, DEFAULT_RTOL)
    }

    /// Characteristic polynomial `det(x I - M)` (Faddeev–LeVerrier).
    pub fn char_poly(&self) -> Poly<T> {
        assert!(
            self.is_square(),
            "characteristic polynomial of a non-square matrix"
        );
        let n = self.rows;
        // coeffs[k] is the coefficient of x^(n-k).
        let mut coeffs = vec![T::one()];
        let mut m = Self::zeros(n, n);
        for k in 1..=n {
            let prev = coeffs[k - 1].clone();
            m = self.matmul(&m).add(&Self::identity(n).scale(&prev));
            let c = -(self.matmul(&m).trace()) / T::from_i64(k as i64);
            coeffs.push(c);
        }
        coeffs.reverse();
        Poly::new(coeffs)
    }

    /// Monic polynomial of least degree annihilating the matrix.
    pub fn minimal_polynomial(&self) -> Poly<T> {
        assert!(
            self.is_square(),
            "minimal polynomial of a non-square matrix"
        );
        let n = self.rows;
        let mut powers = vec![Self::identity(n)];
        for d in 1..=n {
            powers.push(powers[d - 1].matmul(self));
            let cols: Vec<Vec<T>> = powers.iter().map(|p| p.data.clone()).collect();
            let krylov = Self::from_columns(&cols).expect("equal-length columns");
            if let Some(v) = krylov
                .nullspace()
                .into_iter()
                .find(|v| !v[d].is_negligible(0.0))
            {
                let lead = v[d].clone();
                return Poly::new(v.into_iter().map(|c| c / lead.clone()).collect());
            }
        }
        unreachable!("Cayley–Hamilton bounds the degree by n")
    }

    /// Diagonalizable over the algebraic closure: the minimal polynomial is
    /// squarefree.
    pub fn is_semisimple(&self) -> bool {
        let mu = self.minimal_polynomial();
        mu.gcd(&mu.derivative()).degree() == Some(0)
    }

    pub fn is_nilpotent(&self) -> bool {
        self.pow(self.rows)
            .is_negligible(DEFAULT_RTOL * self.max_modulus().max(1.0))
    }

    /// Singular values, descending, computed in complex double precision.
    pub fn singular_values(&self) -> Vec<f64> {
        svd::singular_values(&self.map(Field::to_c64))
    }
}

impl<T: Field> Mul for &Matrix<T> {
    type Output = Matrix<T>;

    fn mul(self, rhs: &Matrix<T>) -> Matrix<T> {
        self.matmul(rhs)
    }
}
