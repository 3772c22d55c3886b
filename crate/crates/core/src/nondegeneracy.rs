//! Deciding `Det A ≠ 0`.
//!
//! `A` is degenerate exactly when there are nonzero `x_1, ..., x_p` with
//! `A(·, x_1, ..., x_p) = 0` in `V_0`, that is when some fiber map
//! `f_A^(j)(x)` drops rank. For `p = 2` an exact determinant decides this;
//! for `p >= 3` a multistart search either certifies a rank drop or reports
//! nondegeneracy as probable.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::{
    self, gauss_newton, random_unit, restart_rng, CMatrix, CVector, GnOptions, Residual,
};
use crate::scalar::{rationalize_projective, Field, C64};
use crate::tensor::{multi_indices, BoundaryTensor, Tensor};

/// A point of `P(V_1) × ... (slot j omitted) ... × P(V_p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberPoint<T> {
    pub j: usize,
    /// Indexed by slot; `x[0]` and `x[j]` are `None`.
    pub x: Vec<Option<Vec<T>>>,
}

impl<T: Field> FiberPoint<T> {
    /// Builds the point from the vectors of the slots other than `0` and `j`,
    /// in slot order.
    pub fn new(p: usize, j: usize, vectors: Vec<Vec<T>>) -> Result<Self> {
        if j == 0 || j > p {
            return Err(Error::Shape(format!("omitted slot {j} outside 1..={p}")));
        }
        if vectors.len() != p - 1 {
            return Err(Error::Shape(format!(
                "need {} vectors, got {}",
                p - 1,
                vectors.len()
            )));
        }
        let mut it = vectors.into_iter();
        let x = (0..=p)
            .map(|s| if s == 0 || s == j { None } else { it.next() })
            .collect();
        Ok(Self { j, x })
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> FiberPoint<U> {
        FiberPoint {
            j: self.j,
            x: self
                .x
                .iter()
                .map(|v| v.as_ref().map(|v| v.iter().map(&f).collect()))
                .collect(),
        }
    }
}

/// Contracts every slot `s` with `Some` vector, keeping the others in order.
fn contract_slots<T: Field>(t: &Tensor<T>, x: &[Option<Vec<T>>]) -> Result<Tensor<T>> {
    let mut out = t.clone();
    for (slot, v) in x.iter().enumerate().rev() {
        if let Some(v) = v {
            out = out.contract(slot, v)?;
        }
    }
    Ok(out)
}

/// `f_A^(j)(x)`: the `d_j × d_0` matrix with entries
/// `sum a_{i_0 ... i_p} prod_{i ≠ 0, j} x_i[i_i]`.
pub fn fiber_map<T: Field>(a: &BoundaryTensor<T>, x: &FiberPoint<T>) -> Result<Matrix<T>> {
    let p = a.format().p();
    if x.x.len() != p + 1 || x.j == 0 || x.j > p {
        return Err(Error::Shape("fiber point does not match the format".into()));
    }
    for (s, v) in x.x.iter().enumerate() {
        match v {
            Some(v) if s == 0 || s == x.j => {
                return Err(Error::Shape(format!("slot {s} must be omitted, got {v:?}")))
            }
            Some(v) if v.iter().all(|c| c.is_zero()) => {
                return Err(Error::Precondition(format!("zero vector in slot {s}")))
            }
            None if s != 0 && s != x.j => {
                return Err(Error::Shape(format!("missing vector for slot {s}")))
            }
            _ => {}
        }
    }
    let t = contract_slots(a.tensor(), &x.x)?;
    Ok(t.unfold(0).transpose())
}

/// Exponent vectors of the degree-`deg` monomials in `n` variables.
fn monomials(n: usize, deg: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![deg]];
    }
    let mut out = Vec::new();
    for first in (0..=deg).rev() {
        for mut rest in monomials(n - 1, deg - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// The square matrix `Φ_A` for `p = 2`: columns `(i_0, m)` with `m` a
/// degree-`k_1` monomial in `d_2` variables, rows `(i_1, m')` with `m'` of
/// degree `k_1 + 1`, and `Φ[(i_1, m'), (i_0, m)] = sum_{i_2} a_{i_0 i_1 i_2} [m' = m·x_{i_2}]`.
pub fn resolvent_matrix<T: Field>(a: &BoundaryTensor<T>) -> Result<Matrix<T>> {
    let f = a.format();
    if f.p() != 2 {
        return Err(Error::Precondition(format!(
            "the determinantal formula needs p = 2, format is {f}"
        )));
    }
    let (d0, d1, d2) = (f.dim(0), f.dim(1), f.dim(2));
    let k1 = f.k()[1];
    let cols_m = monomials(d2, k1);
    let rows_m = monomials(d2, k1 + 1);
    let index: HashMap<&Vec<usize>, usize> =
        rows_m.iter().enumerate().map(|(i, m)| (m, i)).collect();
    let (nc, nr) = (d0 * cols_m.len(), d1 * rows_m.len());
    debug_assert_eq!(nc, nr, "boundary format makes the matrix square");
    let mut phi: Matrix<T> = Matrix::zeros(nr, nc);
    for i0 in 0..d0 {
        for (mi, m) in cols_m.iter().enumerate() {
            for i1 in 0..d1 {
                for i2 in 0..d2 {
                    let v = a.get(&[i0, i1, i2]);
                    if v.is_zero() {
                        continue;
                    }
                    let mut mp = m.clone();
                    mp[i2] += 1;
                    let r = i1 * rows_m.len() + index[&mp];
                    let c = i0 * cols_m.len() + mi;
                    phi[(r, c)] = phi[(r, c)].clone() + v.clone();
                }
            }
        }
    }
    Ok(phi)
}

/// `det Φ_A`; vanishes exactly when `A` is degenerate. Only the vanishing
/// is meaningful, not the normalization.
pub fn hyperdet_p2<T: Field>(a: &BoundaryTensor<T>) -> Result<T> {
    Ok(resolvent_matrix(a)?.det())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact when `p = 2` over an exact field, numeric otherwise.
    #[default]
    Auto,
    Exact,
    Numeric,
}

#[derive(Clone, Debug)]
pub struct NondegeneracyOptions {
    pub method: Method,
    pub restarts: usize,
    pub tol_zero: f64,
    pub tol_pos: f64,
    pub seed: u64,
}

impl Default for NondegeneracyOptions {
    fn default() -> Self {
        Self {
            method: Method::Auto,
            restarts: 64,
            tol_zero: 1e-10,
            tol_pos: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    NondegenerateExact,
    DegenerateExact,
    NondegenerateProbable,
    DegenerateWitness,
    Inconclusive,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Self::NondegenerateExact => "NondegenerateExact",
            Self::DegenerateExact => "DegenerateExact",
            Self::NondegenerateProbable => "NondegenerateProbable",
            Self::DegenerateWitness => "DegenerateWitness",
            Self::Inconclusive => "Inconclusive",
        }
    }

    pub fn is_nondegenerate(self) -> bool {
        matches!(self, Self::NondegenerateExact | Self::NondegenerateProbable)
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, Self::DegenerateExact | Self::DegenerateWitness)
    }
}

#[derive(Clone, Debug)]
pub struct NondegeneracyVerdict<T> {
    pub status: Status,
    pub method: Method,
    /// Certified rank-drop point (exact re-check over exact fields).
    pub witness: Option<FiberPoint<T>>,
    /// Best point found by the numeric search.
    pub numeric_point: Option<FiberPoint<C64>>,
    pub det_value: Option<T>,
    /// Smallest `σ_min(f_A^(j)(x)) / |A|` seen, over unit `x`.
    pub min_sigma: Option<f64>,
}

/// `|A(·, x_1, ..., x_p)|²` over unit vectors, with one chart row per slot.
struct NullVectorProblem {
    entries: Vec<(Vec<usize>, C64)>,
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl NullVectorProblem {
    fn new(a: &BoundaryTensor<C64>) -> Self {
        let scale = a.tensor().frobenius_norm();
        let dims = a.format().dims();
        let entries = multi_indices(&dims)
            .filter_map(|idx| {
                let v = *a.get(&idx);
                (v.norm() > 0.0).then(|| (idx, v / scale))
            })
            .collect();
        let offsets = dims[1..]
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        Self {
            entries,
            dims,
            offsets,
        }
    }

    fn unknowns(&self) -> usize {
        self.dims[1..].iter().sum()
    }

    fn slot<'a>(&self, x: &'a [C64], s: usize) -> &'a [C64] {
        &x[self.offsets[s - 1]..self.offsets[s - 1] + self.dims[s]]
    }
}

impl Residual for NullVectorProblem {
    fn eval(&self, x: &[C64]) -> (CVector, CMatrix) {
        let p = self.dims.len() - 1;
        let d0 = self.dims[0];
        let n = self.unknowns();
        let mut r = CVector::zeros(d0 + p);
        let mut j = CMatrix::zeros(d0 + p, n);
        for (idx, a) in &self.entries {
            let factors: Vec<C64> = (1..=p).map(|s| self.slot(x, s)[idx[s]]).collect();
            let prod: C64 = factors.iter().product();
            r[idx[0]] += a * prod;
            for s in 1..=p {
                let others: C64 = factors
                    .iter()
                    .enumerate()
                    .filter(|(t, _)| *t != s - 1)
                    .map(|(_, f)| *f)
                    .product();
                j[(idx[0], self.offsets[s - 1] + idx[s])] += a * others;
            }
        }
        for s in 1..=p {
            for (i, z) in self.slot(x, s).iter().enumerate() {
                j[(d0 + s - 1, self.offsets[s - 1] + i)] = z.conj();
            }
        }
        (r, j)
    }

    fn normalize(&self, x: &mut [C64]) {
        for s in 1..self.dims.len() {
            let range = self.offsets[s - 1]..self.offsets[s - 1] + self.dims[s];
            let nrm = numeric::norm(&x[range.clone()]);
            if nrm > 0.0 {
                for z in &mut x[range] {
                    *z /= nrm;
                }
            }
        }
    }
}

/// `min_j σ_min(f_A^(j)(x)) / |A|` and the minimizing `j`.
fn min_sigma_at(a: &BoundaryTensor<C64>, xs: &[Vec<C64>]) -> (f64, usize) {
    let p = a.format().p();
    let scale = a.tensor().frobenius_norm();
    let mut best = (f64::INFINITY, 1);
    for j in 1..=p {
        let others: Vec<Vec<C64>> = (1..=p)
            .filter(|&s| s != j)
            .map(|s| xs[s - 1].clone())
            .collect();
        let pt = FiberPoint::new(p, j, others).expect("consistent point");
        let m = fiber_map(a, &pt).expect("valid point");
        let s = m.singular_values();
        let smin = s.get(m.rows() - 1).copied().unwrap_or(0.0) / scale;
        if smin < best.0 {
            best = (smin, j);
        }
    }
    best
}

/// Exact rank check of `f_A^(j)` at `x` (tolerance-based for inexact fields).
fn drops_rank<T: Field>(a: &BoundaryTensor<T>, pt: &FiberPoint<T>) -> bool {
    match fiber_map(a, pt) {
        Ok(m) => {
            let tol = if T::EXACT { 0.0 } else { 1e-9 };
            m.rank_with_tol(tol) < m.rows()
        }
        Err(_) => false,
    }
}

/// Coordinate vectors and the all-ones vector of length `d`.
fn grid_vectors<T: Field>(d: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|r| if r == i { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    out.push(vec![T::one(); d]);
    out
}

fn grid_witness<T: Field>(a: &BoundaryTensor<T>) -> Option<FiberPoint<T>> {
    let p = a.format().p();
    for j in 1..=p {
        let slots: Vec<usize> = (1..=p).filter(|&s| s != j).collect();
        let choices: Vec<usize> = slots.iter().map(|&s| a.format().dim(s) + 1).collect();
        for pick in multi_indices(&choices) {
            let vecs = slots
                .iter()
                .zip(&pick)
                .map(|(&s, &c)| grid_vectors::<T>(a.format().dim(s)).swap_remove(c))
                .collect();
            let pt = FiberPoint::new(p, j, vecs).expect("consistent point");
            if drops_rank(a, &pt) {
                return Some(pt);
            }
        }
    }
    None
}

/// Tries to turn a numeric near-witness into an exactly certified one.
fn certify<T: Field>(a: &BoundaryTensor<T>, xs: &[Vec<C64>]) -> Option<FiberPoint<T>> {
    let p = a.format().p();
    for j in 1..=p {
        let mut vecs = Vec::new();
        for s in (1..=p).filter(|&s| s != j) {
            let q = rationalize_projective(&xs[s - 1], 1000, 1e-6)?;
            vecs.push(q.iter().map(T::from_rational).collect());
        }
        let pt = FiberPoint::new(p, j, vecs).ok()?;
        if drops_rank(a, &pt) {
            return Some(pt);
        }
    }
    None
}

pub fn nondegenerate<T: Field>(
    a: &BoundaryTensor<T>,
    opts: &NondegeneracyOptions,
) -> Result<NondegeneracyVerdict<T>> {
    if a.is_zero() {
        return Ok(NondegeneracyVerdict {
            status: if T::EXACT {
                Status::DegenerateExact
            } else {
                Status::DegenerateWitness
            },
            method: opts.method,
            witness: None,
            numeric_point: None,
            det_value: None,
            min_sigma: Some(0.0),
        });
    }
    let exact_available = a.format().p() == 2 && T::EXACT;
    let method = match opts.method {
        Method::Auto if exact_available => Method::Exact,
        Method::Auto => Method::Numeric,
        Method::Exact if !exact_available => {
            return Err(Error::Precondition(
                "the exact method needs p = 2 and rational entries".into(),
            ))
        }
        m => m,
    };
    if method == Method::Exact {
        let det = hyperdet_p2(a)?;
        let status = if det.is_zero() {
            Status::DegenerateExact
        } else {
            Status::NondegenerateExact
        };
        return Ok(NondegeneracyVerdict {
            status,
            method,
            witness: None,
            numeric_point: None,
            det_value: Some(det),
            min_sigma: None,
        });
    }
    numeric_verdict(a, opts)
}

fn numeric_verdict<T: Field>(
    a: &BoundaryTensor<T>,
    opts: &NondegeneracyOptions,
) -> Result<NondegeneracyVerdict<T>> {
    let mut verdict = NondegeneracyVerdict {
        status: Status::Inconclusive,
        method: Method::Numeric,
        witness: None,
        numeric_point: None,
        det_value: None,
        min_sigma: None,
    };
    if let Some(pt) = grid_witness(a) {
        verdict.status = Status::DegenerateWitness;
        verdict.numeric_point = Some(pt.map(Field::to_c64));
        verdict.witness = Some(pt);
        verdict.min_sigma = Some(0.0);
        return Ok(verdict);
    }

    let ac = a.to_complex();
    let problem = NullVectorProblem::new(&ac);
    let dims = a.format().dims();
    let gn = GnOptions {
        max_iter: 80,
        ftol: 1e-15,
        xtol: 1e-14,
    };
    let runs: Vec<(f64, usize, Vec<Vec<C64>>)> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(opts.seed, i);
            let x0: Vec<C64> = dims[1..]
                .iter()
                .flat_map(|&d| random_unit(d, &mut rng))
                .collect();
            let res = gauss_newton(&problem, x0, &gn);
            let xs: Vec<Vec<C64>> = (1..dims.len())
                .map(|s| problem.slot(&res.x, s).to_vec())
                .collect();
            let (sigma, j) = min_sigma_at(&ac, &xs);
            (sigma, j, xs)
        })
        .collect();

    // Ordered reduction: the first restart attaining the minimum wins.
    let best = runs
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("at least one restart");
    let p = a.format().p();
    let numeric_point = |j: usize, xs: &[Vec<C64>]| {
        let others = (1..=p)
            .filter(|&s| s != j)
            .map(|s| xs[s - 1].clone())
            .collect();
        FiberPoint::new(p, j, others).expect("consistent point")
    };
    verdict.min_sigma = Some(best.0);
    verdict.numeric_point = Some(numeric_point(best.1, &best.2));

    if best.0 < opts.tol_zero {
        for (sigma, j, xs) in &runs {
            if *sigma >= opts.tol_zero {
                continue;
            }
            if T::EXACT {
                if let Some(pt) = certify(a, xs) {
                    verdict.status = Status::DegenerateWitness;
                    verdict.numeric_point = Some(numeric_point(pt.j, xs));
                    verdict.witness = Some(pt);
                    return Ok(verdict);
                }
            } else {
                // Over an inexact field the numeric rank drop is the witness.
                verdict.numeric_point = Some(numeric_point(*j, xs));
                verdict.status = Status::DegenerateWitness;
                return Ok(verdict);
            }
        }
        return Ok(verdict);
    }
    if best.0 > opts.tol_pos {
        verdict.status = Status::NondegenerateProbable;
    }
    Ok(verdict)
}
