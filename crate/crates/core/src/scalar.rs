//! Scalar fields the analyses run over.
//!
//! Everything in the crate is generic over [`Field`]. Exact work uses
//! [`Rational`] (arbitrary precision); numeric searches use [`C64`]. `f64` is
//! supported for real-only experiments.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::linalg::{self, Matrix};

pub type Rational = BigRational;
pub type C64 = Complex64;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RTOL: f64 = 1e-8;

pub trait Field:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Whether equality and zero tests are exact.
    const EXACT: bool;

    fn from_rational(q: &Rational) -> Self;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&Rational::from_integer(BigInt::from(n)))
    }

    fn modulus(&self) -> f64;

    fn to_c64(&self) -> C64;

    fn conj(&self) -> Self;

    /// A square root inside the field, when one exists.
    fn sqrt_opt(&self) -> Option<Self>;

    /// Exact zero test for exact fields, `|x| <= tol` otherwise.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.modulus() <= tol
        }
    }

    // Linear-algebra kernels. The defaults are plain Gaussian elimination;
    // implementations override them where a better method exists.

    fn rank_kernel(m: &Matrix<Self>, rtol: f64) -> usize {
        linalg::elimination::rank(m, rtol)
    }

    fn nullspace_kernel(m: &Matrix<Self>, rtol: f64) -> Vec<Vec<Self>> {
        linalg::elimination::nullspace(m, rtol)
    }

    fn det_kernel(m: &Matrix<Self>) -> Self {
        linalg::elimination::det(m)
    }
}

impl Field for Rational {
    const EXACT: bool = true;

    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }

    fn modulus(&self) -> f64 {
        rational_to_f64(self).abs()
    }

    fn to_c64(&self) -> C64 {
        C64::new(rational_to_f64(self), 0.0)
    }

    fn conj(&self) -> Self {
        self.clone()
    }

    fn sqrt_opt(&self) -> Option<Self> {
        rational_sqrt(self)
    }

    fn rank_kernel(m: &Matrix<Self>, _rtol: f64) -> usize {
        linalg::bareiss::rank(m)
    }

    fn det_kernel(m: &Matrix<Self>) -> Self {
        linalg::bareiss::det(m)
    }
}

impl Field for C64 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        C64::new(rational_to_f64(q), 0.0)
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> C64 {
        *self
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn sqrt_opt(&self) -> Option<Self> {
        Some(self.sqrt())
    }

    fn rank_kernel(m: &Matrix<Self>, rtol: f64) -> usize {
        linalg::svd::rank(m, rtol)
    }

    fn nullspace_kernel(m: &Matrix<Self>, rtol: f64) -> Vec<Vec<Self>> {
        linalg::svd::nullspace(m, rtol)
    }
}

impl Field for f64 {
    const EXACT: bool = false;

    fn from_rational(q: &Rational) -> Self {
        rational_to_f64(q)
    }

    fn modulus(&self) -> f64 {
        self.abs()
    }

    fn to_c64(&self) -> C64 {
        C64::new(*self, 0.0)
    }

    fn conj(&self) -> Self {
        *self
    }

    fn sqrt_opt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| self.sqrt())
    }

    fn rank_kernel(m: &Matrix<Self>, rtol: f64) -> usize {
        linalg::svd::rank(m, rtol)
    }

    fn nullspace_kernel(m: &Matrix<Self>, rtol: f64) -> Vec<Vec<Self>> {
        linalg::svd::nullspace(m, rtol)
    }
}

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        // Huge numerators/denominators: shift both down before dividing.
        _ => {
            let bits = q.numer().bits().max(q.denom().bits()) as usize;
            let shift = bits.saturating_sub(900);
            let n = (q.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::INFINITY);
            n / d
        }
    }
}

/// Formats as `"num/den"`, always with an explicit denominator.
pub fn format_rational(q: &Rational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses `"num/den"` or a bare integer.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(Rational::from_integer),
    }
}

/// Simplest continued-fraction convergent of `x` within `tol`, with
/// denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i128;
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        if (h2 as f64 / k2 as f64 - x).abs() <= tol {
            return Some(Rational::new(BigInt::from(h2), BigInt::from(k2)));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - r.floor();
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Rationalizes a complex vector after projective normalization (largest
/// coordinate scaled to one). Fails when any imaginary part survives.
pub fn rationalize_projective(v: &[C64], max_den: i64, tol: f64) -> Option<Vec<Rational>> {
    let (idx, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let pivot = v[idx];
    if pivot.norm() == 0.0 {
        return None;
    }
    let mut out = Vec::with_capacity(v.len());
    for z in v {
        let w = z / pivot;
        if w.im.abs() > tol {
            return None;
        }
        out.push(rationalize(w.re, max_den, tol)?);
    }
    Some(out)
}

pub fn is_perfect_square(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    if &(&r * &r) == n {
        Some(r)
    } else {
        None
    }
}

/// Exact square root of a nonnegative rational, when it exists.
pub fn rational_sqrt(q: &Rational) -> Option<Rational> {
    let n = is_perfect_square(q.numer())?;
    let d = is_perfect_square(q.denom())?;
    Some(Rational::new(n, d))
}

pub fn lcm_of_denominators<'a>(qs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    qs.into_iter()
        .fold(BigInt::one(), |acc, q| acc.lcm(q.denom()))
}

/// Converts a slice of field elements to complex doubles.
pub fn to_c64_vec<T: Field>(v: &[T]) -> Vec<C64> {
    v.iter().map(Field::to_c64).collect()
}
