//! Fraction-free elimination for rational matrices.
//!
//! Rows are cleared of denominators first, so all intermediate values stay in
//! the integers and every division is exact.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::Matrix;
use crate::scalar::{lcm_of_denominators, Rational};

fn integer_rows(m: &Matrix<Rational>) -> (Vec<Vec<BigInt>>, BigInt) {
    let mut scale = BigInt::one();
    let rows = (0..m.rows())
        .map(|i| {
            let row = m.row(i);
            let l = lcm_of_denominators(row);
            scale *= &l;
            row.iter().map(|q| q.numer() * (&l / q.denom())).collect()
        })
        .collect();
    (rows, scale)
}

/// Runs Bareiss elimination in place and returns the rank and the sign of the
/// row permutation.
fn eliminate(a: &mut [Vec<BigInt>], cols: usize) -> (usize, bool) {
    let rows = a.len();
    let mut prev = BigInt::one();
    let mut r = 0;
    let mut negated = false;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        if p != r {
            a.swap(p, r);
            negated = !negated;
        }
        let pivot = a[r][c].clone();
        for i in r + 1..rows {
            let lead = a[i][c].clone();
            for j in c + 1..cols {
                let v = &a[i][j] * &pivot - &lead * &a[r][j];
                a[i][j] = v / &prev;
            }
            a[i][c] = BigInt::zero();
        }
        prev = pivot;
        r += 1;
    }
    (r, negated)
}

pub fn det(m: &Matrix<Rational>) -> Rational {
    assert!(m.is_square(), "determinant of a non-square matrix");
    let n = m.rows();
    if n == 0 {
        return Rational::one();
    }
    let (mut a, scale) = integer_rows(m);
    let (rank, negated) = eliminate(&mut a, n);
    if rank < n {
        return Rational::zero();
    }
    let d = Rational::new(a[n - 1][n - 1].clone(), scale);
    if negated {
        -d
    } else {
        d
    }
}

pub fn rank(m: &Matrix<Rational>) -> usize {
    let (mut a, _) = integer_rows(m);
    eliminate(&mut a, m.cols()).0
}
