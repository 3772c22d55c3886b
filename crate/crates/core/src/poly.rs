//! Dense univariate polynomials over a [`Field`].

use num_traits::{One, Zero};

use crate::scalar::Field;

/// Coefficients stored lowest degree first, with no trailing zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Field> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn monomial(c: T, deg: usize) -> Self {
        let mut coeffs = vec![T::zero(); deg + 1];
        coeffs[deg] = c;
        Self::new(coeffs)
    }

    /// `prod (x - r)` over the given roots.
    pub fn from_roots(roots: &[T]) -> Self {
        roots.iter().fold(Self::new(vec![T::one()]), |acc, r| {
            acc.mul(&Self::new(vec![-r.clone(), T::one()]))
        })
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Option<&T> {
        self.coeffs.last()
    }

    pub fn eval(&self, x: &T) -> T {
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c.clone() * T::from_i64(i as i64))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new(
            (0..n)
                .map(|i| {
                    let a = self.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                    let b = other.coeffs.get(i).cloned().unwrap_or_else(T::zero);
                    a + b
                })
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.clone() * s.clone()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    pub fn monic(&self) -> Self {
        match self.leading() {
            Some(l) => self.scale(&(T::one() / l.clone())),
            None => Self::zero(),
        }
    }

    /// Quotient and remainder of Euclidean division.
    pub fn div_rem(&self, divisor: &Self) -> (Self, Self) {
        let dd = divisor.degree().expect("division by the zero polynomial");
        let lead = divisor.leading().cloned().expect("nonzero divisor");
        let mut rem = self.coeffs.clone();
        let mut quot = vec![T::zero(); self.coeffs.len().saturating_sub(dd).max(1)];
        while rem.len() > dd && !rem.is_empty() {
            let shift = rem.len() - 1 - dd;
            let c = rem[rem.len() - 1].clone() / lead.clone();
            for (i, d) in divisor.coeffs.iter().enumerate() {
                rem[shift + i] = rem[shift + i].clone() - c.clone() * d.clone();
            }
            quot[shift] = c;
            rem.pop();
            while rem.last().is_some_and(Zero::is_zero) {
                rem.pop();
            }
        }
        (Self::new(quot), Self::new(rem))
    }

    /// Monic greatest common divisor (Euclid). Exact fields only give a
    /// meaningful answer.
    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }
}

impl<T: Field> One for Poly<T> {
    fn one() -> Self {
        Self::new(vec![T::one()])
    }
}

impl<T: Field> std::ops::Mul for Poly<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        Poly::mul(&self, &rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};

    fn p(c: &[i64]) -> Poly<Rational> {
        Poly::new(c.iter().map(|&x| int(x)).collect())
    }

    #[test]
    fn gcd_finds_common_factor() {
        // (x-1)(x-2) and (x-1)(x+3)
        let a = Poly::from_roots(&[int(1), int(2)]);
        let b = Poly::from_roots(&[int(1), int(-3)]);
        assert_eq!(a.gcd(&b), p(&[-1, 1]));
        assert_eq!(p(&[1, 0, 1]).gcd(&p(&[0, 1])), p(&[1]));
    }

    #[test]
    fn derivative_and_eval() {
        let f = p(&[5, -2, 0, 1]);
        assert_eq!(f.derivative(), p(&[-2, 0, 3]));
        assert_eq!(f.eval(&int(2)), int(9));
    }

    #[test]
    fn division_identity() {
        let f = p(&[3, 0, -4, 2, 7]);
        let g = p(&[1, 2, 1]);
        let (q, r) = f.div_rem(&g);
        assert_eq!(q.mul(&g).add(&r), f);
        assert!(r.degree().unwrap_or(0) < 2);
    }

    #[test]
    fn squarefree_detection() {
        let sq = Poly::from_roots(&[int(2), int(2), int(5)]);
        assert_eq!(sq.gcd(&sq.derivative()), p(&[-2, 1]));
    }
}
