//! Dense SVD for the floating-point fields, backed by nalgebra.

use nalgebra::{ComplexField, DMatrix};

use super::Matrix;
use crate::scalar::Field;

pub trait NaField: Field + ComplexField<RealField = f64> {}

impl<T: Field + ComplexField<RealField = f64>> NaField for T {}

pub fn to_nalgebra<T: NaField>(m: &Matrix<T>) -> DMatrix<T> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].clone())
}

pub fn from_nalgebra<T: NaField>(m: &DMatrix<T>) -> Matrix<T> {
    Matrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].clone())
}

/// Singular values in descending order.
pub fn singular_values<T: NaField>(m: &Matrix<T>) -> Vec<f64> {
    if m.rows() == 0 || m.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = to_nalgebra(m).singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn rank<T: NaField>(m: &Matrix<T>, rtol: f64) -> usize {
    let s = singular_values(m);
    let Some(&top) = s.first() else { return 0 };
    if top == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * top).count()
}

/// Orthonormal basis of the numerical kernel.
pub fn nullspace<T: NaField>(m: &Matrix<T>, rtol: f64) -> Vec<Vec<T>> {
    let (rows, cols) = (m.rows(), m.cols());
    if cols == 0 {
        return Vec::new();
    }
    // Pad wide matrices with zero rows so the SVD exposes every right
    // singular vector.
    let n = rows.max(cols);
    let mut a = DMatrix::<T>::zeros(n, cols);
    for i in 0..rows {
        for j in 0..cols {
            a[(i, j)] = m[(i, j)].clone();
        }
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let thresh = rtol * top;
    (0..svd.singular_values.len())
        .filter(|&i| top == 0.0 || svd.singular_values[i] <= thresh)
        .map(|i| (0..cols).map(|j| v_t[(i, j)].clone().conjugate()).collect())
        .collect()
}
