//! Gaussian elimination over an arbitrary [`Field`].
//!
//! Exact fields take the first nonzero pivot; inexact fields use partial
//! pivoting and treat entries below `rtol * max|m|` as zero.

use super::Matrix;
use crate::scalar::Field;

fn threshold<T: Field>(m: &Matrix<T>, rtol: f64) -> f64 {
    if T::EXACT {
        0.0
    } else {
        rtol * m.max_modulus()
    }
}

fn pick_pivot<T: Field>(m: &Matrix<T>, col: usize, from: usize, thresh: f64) -> Option<usize> {
    if T::EXACT {
        (from..m.rows()).find(|&r| !m[(r, col)].is_zero())
    } else {
        let (best, val) = (from..m.rows())
            .map(|r| (r, m[(r, col)].modulus()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        (val > thresh).then_some(best)
    }
}

/// Reduced row echelon form and the pivot columns.
pub fn rref<T: Field>(m: &Matrix<T>, rtol: f64) -> (Matrix<T>, Vec<usize>) {
    let mut a = m.clone();
    let thresh = threshold(m, rtol);
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols() {
        if row == a.rows() {
            break;
        }
        let Some(p) = pick_pivot(&a, col, row, thresh) else {
            continue;
        };
        a.swap_rows(row, p);
        let inv = T::one() / a[(row, col)].clone();
        for j in col..a.cols() {
            a[(row, j)] = a[(row, j)].clone() * inv.clone();
        }
        for r in 0..a.rows() {
            if r == row || a[(r, col)].is_zero() {
                continue;
            }
            let f = a[(r, col)].clone();
            for j in col..a.cols() {
                let v = a[(row, j)].clone() * f.clone();
                a[(r, j)] = a[(r, j)].clone() - v;
            }
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

pub fn rank<T: Field>(m: &Matrix<T>, rtol: f64) -> usize {
    rref(m, rtol).1.len()
}

pub fn nullspace<T: Field>(m: &Matrix<T>, rtol: f64) -> Vec<Vec<T>> {
    let (r, pivots) = rref(m, rtol);
    let mut is_pivot = vec![false; m.cols()];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    (0..m.cols())
        .filter(|&c| !is_pivot[c])
        .map(|free| {
            let mut v = vec![T::zero(); m.cols()];
            v[free] = T::one();
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = -r[(i, free)].clone();
            }
            v
        })
        .collect()
}

pub fn det<T: Field>(m: &Matrix<T>) -> T {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let mut a = m.clone();
    let n = a.rows();
    let mut acc = T::one();
    for col in 0..n {
        let Some(p) = pick_pivot(&a, col, col, 0.0) else {
            return T::zero();
        };
        if a[(p, col)].is_zero() {
            return T::zero();
        }
        if p != col {
            a.swap_rows(p, col);
            acc = -acc;
        }
        let piv = a[(col, col)].clone();
        acc = acc * piv.clone();
        for r in col + 1..n {
            if a[(r, col)].is_zero() {
                continue;
            }
            let f = a[(r, col)].clone() / piv.clone();
            for j in col..n {
                let v = a[(col, j)].clone() * f.clone();
                a[(r, j)] = a[(r, j)].clone() - v;
            }
        }
    }
    acc
}

/// Inverse of a square matrix; `None` when singular.
pub fn inverse<T: Field>(m: &Matrix<T>, rtol: f64) -> Option<Matrix<T>> {
    assert!(m.is_square(), "inverse of a non-square matrix");
    let n = m.rows();
    let mut aug = Matrix::zeros(n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)].clone();
        }
        aug[(i, n + i)] = T::one();
    }
    let (r, pivots) = rref(&aug, rtol);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(Matrix::from_fn(n, n, |i, j| r[(i, n + j)].clone()))
}

/// One solution of `m x = b` (free variables set to zero), or `None` when the
/// system is inconsistent.
pub fn solve<T: Field>(m: &Matrix<T>, b: &[T], rtol: f64) -> Option<Vec<T>> {
    assert_eq!(b.len(), m.rows(), "right-hand side length");
    let n = m.cols();
    let aug = Matrix::from_fn(m.rows(), n + 1, |i, j| {
        if j < n {
            m[(i, j)].clone()
        } else {
            b[i].clone()
        }
    });
    let (r, pivots) = rref(&aug, rtol);
    if pivots.last() == Some(&n) {
        return None;
    }
    let mut x = vec![T::zero(); n];
    for (i, &p) in pivots.iter().enumerate() {
        x[p] = r[(i, n)].clone();
    }
    Some(x)
}
