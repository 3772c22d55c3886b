//! Boundary-format tensors and the slot-wise action of `GL(V_0) x ... x GL(V_p)`.
//!
//! Storage is dense and row-major: slot 0 is outermost and the last slot
//! varies fastest. Every flattening lists its columns in the same row-major
//! order over the remaining slots, ascending.

use std::fmt;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Field, DEFAULT_RTOL};

/// Projective dimensions `(k_0; k_1, ..., k_p)` with `k_0 = k_1 + ... + k_p`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Format {
    k: Vec<usize>,
}

impl Format {
    /// Strict boundary format: `p >= 2` and every `k_i >= 1`.
    pub fn new(k: Vec<usize>) -> Result<Self> {
        let f = Self::relaxed(k)?;
        if f.is_reduced() {
            return Err(Error::Format(format!(
                "{f}: every factor needs k_i >= 1 (reduced factors are only produced by elementary transformations)"
            )));
        }
        Ok(f)
    }

    /// Boundary format that may contain one-dimensional factors (`k_i = 0`).
    pub fn relaxed(k: Vec<usize>) -> Result<Self> {
        if k.len() < 3 {
            return Err(Error::Format(format!(
                "need at least three factors (p >= 2), got {}",
                k.len()
            )));
        }
        let tail: usize = k[1..].iter().sum();
        if k[0] != tail {
            return Err(Error::Format(format!(
                "not of boundary format: k_0 = {} but k_1 + ... + k_p = {tail}",
                k[0]
            )));
        }
        if k[0] == 0 {
            return Err(Error::Format("k_0 must be positive".into()));
        }
        Ok(Self { k })
    }

    /// Format from the dimension vector `d_i = k_i + 1`.
    pub fn from_dims(dims: &[usize]) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Format("zero-dimensional factor".into()));
        }
        Self::relaxed(dims.iter().map(|d| d - 1).collect())
    }

    pub fn k(&self) -> &[usize] {
        &self.k
    }

    /// Number of non-distinguished factors.
    pub fn p(&self) -> usize {
        self.k.len() - 1
    }

    pub fn dim(&self, slot: usize) -> usize {
        self.k[slot] + 1
    }

    pub fn dims(&self) -> Vec<usize> {
        self.k.iter().map(|k| k + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.k.iter().map(|k| k + 1).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when some factor is one-dimensional.
    pub fn is_reduced(&self) -> bool {
        self.k.contains(&0)
    }

    pub fn require_unreduced(&self) -> Result<()> {
        if self.is_reduced() {
            Err(Error::Precondition(format!(
                "format {self} has a one-dimensional factor; classification needs every k_i >= 1"
            )))
        } else {
            Ok(())
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tail: Vec<String> = self.k[1..].iter().map(ToString::to_string).collect();
        write!(f, "({};{})", self.k[0], tail.join(","))
    }
}

/// Dense tensor of arbitrary order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Field> Tensor<T> {
    pub fn zeros(dims: Vec<usize>) -> Self {
        let n = dims.iter().product();
        Self {
            dims,
            data: vec![T::zero(); n],
        }
    }

    pub fn from_vec(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "dims {dims:?} need {n} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(dims: Vec<usize>, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let n: usize = dims.iter().product();
        let mut idx = vec![0; dims.len()];
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f(&idx));
            advance(&mut idx, &dims);
        }
        Self { dims, data }
    }

    /// The decomposable tensor `v_1 ⊗ ... ⊗ v_n`.
    pub fn outer(factors: &[Vec<T>]) -> Self {
        let dims = factors.iter().map(Vec::len).collect();
        Self::from_fn(dims, |idx| {
            idx.iter()
                .zip(factors)
                .fold(T::one(), |acc, (&i, v)| acc * v[i].clone())
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| x.modulus().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_modulus(&self) -> f64 {
        self.data.iter().map(Field::modulus).fold(0.0, f64::max)
    }

    pub fn map<U: Field>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_dims(other)?;
        Ok(Self {
            dims: self.dims.clone(),
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(&-T::one()))
    }

    fn same_dims(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::Shape(format!(
                "dims {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// (outer, this, inner) extents around `mode`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let outer = self.dims[..mode].iter().product();
        let inner = self.dims[mode + 1..].iter().product();
        (outer, self.dims[mode], inner)
    }

    /// Mode-`mode` unfolding: rows indexed by that slot, columns row-major over
    /// the remaining slots in ascending order.
    pub fn unfold(&self, mode: usize) -> Matrix<T> {
        let (outer, d, inner) = self.split(mode);
        Matrix::from_fn(d, outer * inner, |a, col| {
            let (o, i) = (col / inner, col % inner);
            self.data[(o * d + a) * inner + i].clone()
        })
    }

    /// Applies `g` along `mode`: `out[.., a, ..] = sum_b g[a][b] self[.., b, ..]`.
    pub fn mode_product(&self, mode: usize, g: &Matrix<T>) -> Result<Self> {
        let (outer, d, inner) = self.split(mode);
        if g.cols() != d {
            return Err(Error::Shape(format!(
                "slot {mode} has dimension {d} but the matrix has {} columns",
                g.cols()
            )));
        }
        let e = g.rows();
        let mut data = vec![T::zero(); outer * e * inner];
        for o in 0..outer {
            for a in 0..e {
                for b in 0..d {
                    let c = &g[(a, b)];
                    if c.is_zero() {
                        continue;
                    }
                    for i in 0..inner {
                        let src = &self.data[(o * d + b) * inner + i];
                        let dst = &mut data[(o * e + a) * inner + i];
                        *dst = dst.clone() + c.clone() * src.clone();
                    }
                }
            }
        }
        let mut dims = self.dims.clone();
        dims[mode] = e;
        Ok(Self { dims, data })
    }

    /// Contracts `mode` against `v`, removing that slot.
    pub fn contract(&self, mode: usize, v: &[T]) -> Result<Self> {
        let (outer, d, inner) = self.split(mode);
        if v.len() != d {
            return Err(Error::Shape(format!(
                "slot {mode} has dimension {d}, vector has length {}",
                v.len()
            )));
        }
        let mut data = vec![T::zero(); outer * inner];
        for o in 0..outer {
            for (b, c) in v.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for i in 0..inner {
                    let dst = &mut data[o * inner + i];
                    *dst = dst.clone() + c.clone() * self.data[(o * d + b) * inner + i].clone();
                }
            }
        }
        let mut dims = self.dims.clone();
        dims.remove(mode);
        Ok(Self { dims, data })
    }

    /// True when every unfolding has rank at most one. Exact for exact
    /// fields; otherwise 2x2 minors are compared against `rtol * max|T|^2`.
    pub fn is_decomposable(&self, rtol: f64) -> bool {
        let tol = rtol * self.max_modulus().powi(2);
        (0..self.order()).all(|m| rank_at_most_one(&self.unfold(m), tol))
    }
}

/// Every 2x2 minor vanishes, tested against the row holding the largest
/// entry.
pub fn rank_at_most_one<T: Field>(m: &Matrix<T>, tol: f64) -> bool {
    let mut best = None;
    let mut best_mod = -1.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if T::EXACT {
                if !m[(i, j)].is_zero() {
                    best = Some((i, j));
                    break;
                }
                continue;
            }
            let v = m[(i, j)].modulus();
            if v > best_mod {
                best_mod = v;
                best = Some((i, j));
            }
        }
        if T::EXACT && best.is_some() {
            break;
        }
    }
    let Some((r0, c0)) = best else { return true };
    if m[(r0, c0)].is_zero() {
        return true;
    }
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let minor =
                m[(i, j)].clone() * m[(r0, c0)].clone() - m[(i, c0)].clone() * m[(r0, j)].clone();
            if !minor.is_negligible(tol) {
                return false;
            }
        }
    }
    true
}

fn advance(idx: &mut [usize], dims: &[usize]) {
    for s in (0..idx.len()).rev() {
        idx[s] += 1;
        if idx[s] < dims[s] {
            return;
        }
        idx[s] = 0;
    }
}

/// Iterates multi-indices in storage order.
pub fn multi_indices(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let n: usize = dims.iter().product();
    let mut idx = vec![0; dims.len()];
    (0..n).map(move |k| {
        if k > 0 {
            advance(&mut idx, dims);
        }
        idx.clone()
    })
}

/// Flattening of a `p`-factor tensor at slot `j` (1-based, matching `V_j`
/// when the tensor is a slice `A·ξ ∈ V_1 ⊗ ... ⊗ V_p`).
pub fn flatten<T: Field>(t: &Tensor<T>, j: usize) -> Result<Matrix<T>> {
    if j == 0 || j > t.order() {
        return Err(Error::Shape(format!("slot {j} outside 1..={}", t.order())));
    }
    Ok(t.unfold(j - 1))
}

/// Largest `σ_2 / σ_1` over all flattenings; zero exactly when `t` is
/// decomposable. For exact fields the zero case is decided by exact minors.
pub fn residual_rank_one<T: Field>(t: &Tensor<T>) -> Result<f64> {
    if t.is_zero() {
        return Err(Error::Precondition("residual of the zero tensor".into()));
    }
    if T::EXACT && t.is_decomposable(0.0) {
        return Ok(0.0);
    }
    let mut worst: f64 = 0.0;
    for m in 0..t.order() {
        let s = t.unfold(m).singular_values();
        if s.len() > 1 && s[0] > 0.0 {
            worst = worst.max(s[1] / s[0]);
        }
    }
    if T::EXACT {
        // Not decomposable, so never report an exact zero.
        worst = worst.max(f64::MIN_POSITIVE);
    }
    Ok(worst)
}

/// `A ∈ V_0 ⊗ ... ⊗ V_p` of boundary format.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTensor<T> {
    format: Format,
    tensor: Tensor<T>,
}

impl<T: Field> BoundaryTensor<T> {
    pub fn new(format: Format, entries: Vec<T>) -> Result<Self> {
        let tensor = Tensor::from_vec(format.dims(), entries)?;
        Ok(Self { format, tensor })
    }

    pub fn zeros(format: Format) -> Self {
        let tensor = Tensor::zeros(format.dims());
        Self { format, tensor }
    }

    pub fn from_fn(format: Format, f: impl FnMut(&[usize]) -> T) -> Self {
        let tensor = Tensor::from_fn(format.dims(), f);
        Self { format, tensor }
    }

    pub fn from_tensor(format: Format, tensor: Tensor<T>) -> Result<Self> {
        if tensor.dims() != format.dims().as_slice() {
            return Err(Error::Shape(format!(
                "tensor dims {:?} do not match format {format}",
                tensor.dims()
            )));
        }
        Ok(Self { format, tensor })
    }

    pub fn format(&self) -> &Format {
        &self.format
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.tensor
    }

    pub fn entries(&self) -> &[T] {
        self.tensor.data()
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        self.tensor.get(idx)
    }

    pub fn set(&mut self, idx: &[usize], v: T) {
        self.tensor.set(idx, v)
    }

    pub fn is_zero(&self) -> bool {
        self.tensor.is_zero()
    }

    pub fn map<U: Field>(&self, f: impl FnMut(&T) -> U) -> BoundaryTensor<U> {
        BoundaryTensor {
            format: self.format.clone(),
            tensor: self.tensor.map(f),
        }
    }

    pub fn to_complex(&self) -> BoundaryTensor<crate::C64> {
        self.map(Field::to_c64)
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|x| x.clone() * s.clone())
    }

    /// The slice `A·ξ = sum_{i_0} ξ_{i_0} a_{i_0 i_1 ... i_p}` in `V_1 ⊗ ... ⊗ V_p`.
    pub fn contract0(&self, xi: &[T]) -> Result<Tensor<T>> {
        if xi.iter().all(Zero::is_zero) {
            return Err(Error::Precondition("zero covector".into()));
        }
        self.tensor.contract(0, xi)
    }

    /// `(g·A)_{i_0...i_p} = sum (g_0)_{i_0 j_0} ... (g_p)_{i_p j_p} a_{j_0...j_p}`.
    pub fn act(&self, g: &GroupElement<T>) -> Result<Self> {
        if g.dims() != self.format.dims() {
            return Err(Error::Shape(format!(
                "group element dims {:?} do not match format {}",
                g.dims(),
                self.format
            )));
        }
        let mut t = self.tensor.clone();
        for (slot, m) in g.matrices().iter().enumerate() {
            if *m != Matrix::identity(m.rows()) {
                t = t.mode_product(slot, m)?;
            }
        }
        Ok(Self {
            format: self.format.clone(),
            tensor: t,
        })
    }

    /// Applies one matrix along one slot (shapes must preserve the format).
    pub fn act_slot(&self, slot: usize, m: &Matrix<T>) -> Result<Self> {
        let t = self.tensor.mode_product(slot, m)?;
        Self::from_tensor(self.format.clone(), t)
    }
}

/// A tuple `(g_0, ..., g_p)` of invertible matrices acting slot-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<T> {
    mats: Vec<Matrix<T>>,
    special: bool,
}

impl<T: Field> GroupElement<T> {
    /// Rejects non-square or singular blocks.
    pub fn new(mats: Vec<Matrix<T>>) -> Result<Self> {
        for (slot, m) in mats.iter().enumerate() {
            if !m.is_square() {
                return Err(Error::Shape(format!("slot {slot} block is not square")));
            }
            let singular = if T::EXACT {
                m.det().is_zero()
            } else {
                m.rank() < m.rows()
            };
            if singular {
                return Err(Error::Singular { slot });
            }
        }
        Ok(Self {
            mats,
            special: false,
        })
    }

    /// Like [`GroupElement::new`] but also requires `det g_i = 1` (exactly for
    /// exact fields).
    pub fn special(mats: Vec<Matrix<T>>) -> Result<Self> {
        let mut g = Self::new(mats)?;
        for (slot, m) in g.mats.iter().enumerate() {
            let d = m.det() - T::one();
            if !d.is_negligible(DEFAULT_RTOL) {
                return Err(Error::Precondition(format!(
                    "slot {slot} block does not have determinant one"
                )));
            }
        }
        g.special = true;
        Ok(g)
    }

    pub fn identity(format: &Format) -> Self {
        Self {
            mats: format.dims().into_iter().map(Matrix::identity).collect(),
            special: true,
        }
    }

    pub fn matrices(&self) -> &[Matrix<T>] {
        &self.mats
    }

    pub fn into_matrices(self) -> Vec<Matrix<T>> {
        self.mats
    }

    pub fn is_special(&self) -> bool {
        self.special
    }

    pub fn dims(&self) -> Vec<usize> {
        self.mats.iter().map(Matrix::rows).collect()
    }

    /// Slot-wise product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dims() != other.dims() {
            return Err(Error::Shape("group elements of different shapes".into()));
        }
        Ok(Self {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a.matmul(b))
                .collect(),
            special: self.special && other.special,
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let mats = self
            .mats
            .iter()
            .enumerate()
            .map(|(slot, m)| m.inverse().ok_or(Error::Singular { slot }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mats,
            special: self.special,
        })
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> GroupElement<U> {
        GroupElement {
            mats: self.mats.iter().map(|m| m.map(&f)).collect(),
            special: self.special,
        }
    }
}

/// A group element recovered either inside the input's field or, when that
/// field lacks the needed square roots, in complex floating point.
#[derive(Clone, Debug, PartialEq)]
pub enum Recovered<T> {
    InField(GroupElement<T>),
    Numeric(GroupElement<crate::C64>),
}

impl<T: Field> Recovered<T> {
    pub fn is_in_field(&self) -> bool {
        matches!(self, Self::InField(_))
    }

    pub fn to_complex(&self) -> GroupElement<crate::C64> {
        match self {
            Self::InField(g) => g.map(Field::to_c64),
            Self::Numeric(g) => g.clone(),
        }
    }

    pub fn in_field(&self) -> Option<&GroupElement<T>> {
        match self {
            Self::InField(g) => Some(g),
            Self::Numeric(_) => None,
        }
    }
}
