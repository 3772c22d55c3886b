//! Jumping hyperplanes and elementary transformations.
//!
//! A covector `ξ ∈ V_0^∨` is a *strong* jumping hyperplane of `A` when the
//! slice `A·ξ ∈ V_1 ⊗ ... ⊗ V_p` is decomposable, and a *(j)-weak* one when
//! only its `j`-th flattening has rank one. Detection combines an exact check
//! of a few structured covectors with a multistart Gauss–Newton search on
//! `|M ξ - u_1 ⊗ ... ⊗ u_G|`, where `M` maps a covector to its slice.
//! Converged points are rationalized and re-checked exactly when possible.
//! If the solutions form a curve it is traced by predictor-corrector steps.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::numeric::{
    self, gauss_newton, inner, normalize_first, projective_distance, random_unit, restart_rng,
    svd_left, CMatrix, CVector, GnOptions, Residual,
};
use crate::scalar::{rationalize_projective, Field, C64};
use crate::sl2::canonical::fit_curve_parameters;
use crate::sl2::moment_vector;
use crate::tensor::{flatten, multi_indices, residual_rank_one, BoundaryTensor, Format, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Strong,
    /// Weak with respect to slot `j` (1-based).
    Weak(usize),
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Strong => "strong",
            Self::Weak(_) => "weak",
        }
    }

    pub fn slot(self) -> Option<usize> {
        match self {
            Self::Strong => None,
            Self::Weak(j) => Some(j),
        }
    }

    fn validate(self, f: &Format) -> Result<()> {
        match self {
            Self::Weak(j) if j == 0 || j > f.p() => Err(Error::Precondition(format!(
                "weak slot {j} outside 1..={}",
                f.p()
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    /// A coordinate or moment covector checked directly.
    Structured,
    /// A converged multistart run.
    Search,
    /// A point found while tracing a curve of solutions.
    Traced,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Self::Structured => "structured",
            Self::Search => "search",
            Self::Traced => "traced",
        }
    }
}

#[derive(Clone, Debug)]
pub struct JumpingHyperplane<T> {
    pub kind: Kind,
    /// Projective covector, scaled so its first non-negligible coordinate is 1.
    pub xi: Vec<C64>,
    /// The same covector in the input field when an exact check succeeded.
    pub xi_exact: Option<Vec<T>>,
    /// Strong: `v_1, ..., v_p`. Weak: `v_j` and `h` (the latter indexed like
    /// the columns of the `j`-th flattening).
    pub witnesses: Vec<Vec<C64>>,
    pub witnesses_exact: Option<Vec<Vec<T>>>,
    /// `σ_2 / σ_1` of the rank-one fit (0 for exact confirmations).
    pub residual: f64,
    pub source: Source,
}

impl<T: Field> JumpingHyperplane<T> {
    pub fn is_exact(&self) -> bool {
        self.xi_exact.is_some()
    }
}

#[derive(Clone, Debug)]
pub struct CurveEvidence {
    /// Dimension of the solution set at the starting point, gauge removed.
    pub local_dim: usize,
    pub points: Vec<Vec<C64>>,
    /// Whether enough pairwise distinct points were traced.
    pub complete: bool,
    /// Parameters of the traced points on a fitted rational normal curve.
    pub nodes: Option<Vec<C64>>,
}

#[derive(Clone, Debug)]
pub struct JumpingReport<T> {
    pub kind: Kind,
    pub items: Vec<JumpingHyperplane<T>>,
    pub count_distinct: usize,
    /// `None` for weak reports with `p >= 3`, where the threshold is not about
    /// weak hyperplanes.
    pub identity_flag: Option<bool>,
    pub curve_evidence: Option<CurveEvidence>,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct DetectOptions {
    pub restarts: usize,
    /// Acceptance bound on the rank-one residual.
    pub tol: f64,
    /// Projective distance below which two covectors are identified.
    pub cluster_tol: f64,
    pub seed: u64,
    /// Check coordinate and moment covectors before searching.
    pub grid: bool,
    /// Linear forms `c` restricting the search to `<c, ξ> = 0`.
    pub section: Vec<Vec<C64>>,
    pub trace: bool,
    /// Largest denominator tried when rationalizing a numeric solution.
    pub max_den: i64,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            restarts: 256,
            tol: 1e-8,
            cluster_tol: 1e-6,
            seed: 0,
            grid: true,
            section: Vec::new(),
            trace: true,
            max_den: 1000,
        }
    }
}

/// How the entries of a slice factor: for each entry, its index in every
/// factor `u_g`.
#[derive(Clone, Debug)]
struct Layout {
    sizes: Vec<usize>,
    pos: Vec<Vec<usize>>,
}

impl Layout {
    fn new(slice_dims: &[usize], kind: Kind) -> Self {
        match kind {
            Kind::Strong => Self {
                sizes: slice_dims.to_vec(),
                pos: multi_indices(slice_dims).collect(),
            },
            Kind::Weak(j) => {
                let others: Vec<usize> = (0..slice_dims.len()).filter(|&s| s != j - 1).collect();
                let cols = others.iter().map(|&s| slice_dims[s]).product();
                let pos = multi_indices(slice_dims)
                    .map(|idx| {
                        let col = others
                            .iter()
                            .fold(0, |acc, &s| acc * slice_dims[s] + idx[s]);
                        vec![idx[j - 1], col]
                    })
                    .collect();
                Self {
                    sizes: vec![slice_dims[j - 1], cols],
                    pos,
                }
            }
        }
    }

    /// Group `g` of the slice as a `sizes[g] × (rest)` matrix.
    fn unfold(&self, s: &[C64], g: usize) -> CMatrix {
        let rest: usize = self.sizes.iter().product::<usize>() / self.sizes[g];
        let mut m = CMatrix::zeros(self.sizes[g], rest);
        for (e, p) in self.pos.iter().enumerate() {
            let col = (0..self.sizes.len())
                .filter(|&h| h != g)
                .fold(0, |acc, h| acc * self.sizes[h] + p[h]);
            m[(p[g], col)] = s[e];
        }
        m
    }
}

/// `|M ξ - u_0 ⊗ ... ⊗ u_{G-1}|` with a chart row fixing the scale of `ξ` and
/// optional section rows.
struct SliceFit {
    m: CMatrix,
    layout: Layout,
    weight: f64,
    section: Vec<Vec<C64>>,
    offsets: Vec<usize>,
}

impl SliceFit {
    fn new(a: &BoundaryTensor<C64>, kind: Kind, section: &[Vec<C64>]) -> Self {
        let u = a.tensor().unfold(0);
        let m = CMatrix::from_fn(u.cols(), u.rows(), |e, i| u[(i, e)]);
        let layout = Layout::new(&a.format().dims()[1..], kind);
        let d0 = a.format().dim(0);
        let mut offsets = vec![d0];
        for s in &layout.sizes {
            offsets.push(offsets.last().expect("nonempty") + s);
        }
        Self {
            m,
            layout,
            weight: a.tensor().frobenius_norm(),
            section: section.to_vec(),
            offsets,
        }
    }

    fn d0(&self) -> usize {
        self.m.ncols()
    }

    fn unknowns(&self) -> usize {
        *self.offsets.last().expect("nonempty")
    }

    fn groups(&self) -> usize {
        self.layout.sizes.len()
    }

    fn group<'a>(&self, z: &'a [C64], g: usize) -> &'a [C64] {
        &z[self.offsets[g]..self.offsets[g + 1]]
    }

    fn slice(&self, xi: &[C64]) -> Vec<C64> {
        (&self.m * CVector::from_column_slice(xi))
            .iter()
            .copied()
            .collect()
    }

    /// Parameters for a starting covector: leading singular vectors of the
    /// slice, with the scale fitted into the first factor.
    fn initial(&self, xi: &[C64]) -> Vec<C64> {
        let s = self.slice(xi);
        let mut z = xi.to_vec();
        for g in 0..self.groups() {
            let (_, v) = svd_left(&self.layout.unfold(&s, g)).swap_remove(0);
            z.extend(v.iter());
        }
        let prod = self.product(&z);
        let den: f64 = prod.iter().map(C64::norm_sqr).sum();
        if den > 0.0 {
            let alpha = inner(&prod, &s) / den;
            for c in &mut z[self.offsets[0]..self.offsets[1]] {
                *c *= alpha;
            }
        }
        z
    }

    fn product(&self, z: &[C64]) -> Vec<C64> {
        self.layout
            .pos
            .iter()
            .map(|p| (0..self.groups()).map(|g| self.group(z, g)[p[g]]).product())
            .collect()
    }

    /// Directions `(u_0, -u_g)` along which the factors can trade scale.
    fn gauge(&self, z: &[C64]) -> Vec<Vec<C64>> {
        (1..self.groups())
            .map(|g| {
                let mut v = vec![C64::new(0.0, 0.0); z.len()];
                let r = self.offsets[0]..self.offsets[1];
                v[r.clone()].copy_from_slice(&z[r]);
                for i in self.offsets[g]..self.offsets[g + 1] {
                    v[i] = -z[i];
                }
                v
            })
            .collect()
    }
}

impl Residual for SliceFit {
    fn eval(&self, z: &[C64]) -> (CVector, CMatrix) {
        let n = self.m.nrows();
        let d0 = self.d0();
        let rows = n + 1 + self.section.len();
        let mut r = CVector::zeros(rows);
        let mut j = CMatrix::zeros(rows, self.unknowns());
        let xi = &z[..d0];
        let s = self.slice(xi);
        for (e, p) in self.layout.pos.iter().enumerate() {
            let factors: Vec<C64> = (0..self.groups()).map(|g| self.group(z, g)[p[g]]).collect();
            r[e] = s[e] - factors.iter().product::<C64>();
            for i in 0..d0 {
                j[(e, i)] = self.m[(e, i)];
            }
            for g in 0..self.groups() {
                let others: C64 = factors
                    .iter()
                    .enumerate()
                    .filter(|(h, _)| *h != g)
                    .map(|(_, f)| *f)
                    .product();
                j[(e, self.offsets[g] + p[g])] = -others;
            }
        }
        for i in 0..d0 {
            j[(n, i)] = xi[i].conj() * self.weight;
        }
        for (q, c) in self.section.iter().enumerate() {
            let row = n + 1 + q;
            r[row] = c.iter().zip(xi).map(|(a, b)| a * b).sum::<C64>() * self.weight;
            for i in 0..d0 {
                j[(row, i)] = c[i] * self.weight;
            }
        }
        (r, j)
    }

    fn normalize(&self, z: &mut [C64]) {
        let d0 = self.d0();
        let nx = numeric::norm(&z[..d0]);
        if nx == 0.0 {
            return;
        }
        let mut scale0 = 1.0 / nx;
        for c in &mut z[..d0] {
            *c /= nx;
        }
        for g in 1..self.groups() {
            let range = self.offsets[g]..self.offsets[g + 1];
            let ng = numeric::norm(&z[range.clone()]);
            if ng > 0.0 {
                for c in &mut z[range] {
                    *c /= ng;
                }
                scale0 *= ng;
            }
        }
        for c in &mut z[self.offsets[0]..self.offsets[1]] {
            *c *= scale0;
        }
    }
}

/// [`SliceFit`] with one extra row pinning the step along a tangent.
struct Pinned<'a> {
    fit: &'a SliceFit,
    tangent: Vec<C64>,
    anchor: Vec<C64>,
}

impl Residual for Pinned<'_> {
    fn eval(&self, z: &[C64]) -> (CVector, CMatrix) {
        let (r, j) = self.fit.eval(z);
        let (rows, cols) = j.shape();
        let w = self.fit.weight;
        let mut r2 = CVector::zeros(rows + 1);
        r2.rows_mut(0, rows).copy_from(&r);
        let mut j2 = CMatrix::zeros(rows + 1, cols);
        j2.rows_mut(0, rows).copy_from(&j);
        let diff: Vec<C64> = z.iter().zip(&self.anchor).map(|(a, b)| a - b).collect();
        r2[rows] = inner(&self.tangent, &diff) * w;
        for (i, t) in self.tangent.iter().enumerate() {
            j2[(rows, i)] = t.conj() * w;
        }
        (r2, j2)
    }
}

/// Rank-one residual of the slice at `xi`, or `None` when the slice is
/// (numerically) zero.
fn slice_residual(a: &BoundaryTensor<C64>, xi: &[C64], kind: Kind) -> Option<(f64, Tensor<C64>)> {
    let s = a.contract0(xi).ok()?;
    let scale = a.tensor().frobenius_norm() * numeric::norm(xi);
    if s.frobenius_norm() <= 1e-8 * scale {
        return None;
    }
    let res = match kind {
        Kind::Strong => residual_rank_one(&s).ok()?,
        Kind::Weak(j) => {
            let sv = flatten(&s, j).ok()?.singular_values();
            if sv.len() > 1 {
                sv[1] / sv[0]
            } else {
                0.0
            }
        }
    };
    Some((res, s))
}

fn numeric_witnesses(s: &Tensor<C64>, kind: Kind) -> Vec<Vec<C64>> {
    let to_c = |m: &Matrix<C64>| CMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)]);
    match kind {
        Kind::Strong => (0..s.order())
            .map(|g| normalize_first(svd_left(&to_c(&s.unfold(g)))[0].1.as_slice()))
            .collect(),
        Kind::Weak(j) => {
            let f = to_c(&flatten(s, j).expect("valid slot"));
            let v = svd_left(&f).swap_remove(0).1;
            let h: Vec<C64> = (0..f.ncols())
                .map(|c| (0..f.nrows()).map(|r| v[r].conj() * f[(r, c)]).sum())
                .collect();
            vec![v.iter().copied().collect(), h]
        }
    }
}

/// Index of the pivot entry: first nonzero for exact fields, largest modulus
/// otherwise.
fn pivot<T: Field>(v: &[T]) -> Option<usize> {
    if T::EXACT {
        v.iter().position(|x| !x.is_zero())
    } else {
        let (i, m) = v
            .iter()
            .enumerate()
            .map(|(i, x)| (i, x.modulus()))
            .max_by(|a, b| a.1.total_cmp(&b.1))?;
        (m > 0.0).then_some(i)
    }
}

/// A nonzero column: the first one for exact fields, the largest otherwise.
fn best_column<T: Field>(m: &Matrix<T>) -> Option<Vec<T>> {
    let norms: Vec<f64> = (0..m.cols())
        .map(|c| {
            (0..m.rows())
                .map(|r| m[(r, c)].modulus().powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let c = if T::EXACT {
        (0..m.cols()).find(|&c| (0..m.rows()).any(|r| !m[(r, c)].is_zero()))?
    } else {
        pivot(&norms)?
    };
    Some(m.column(c))
}

fn scale_to_first<T: Field>(v: &[T]) -> Vec<T> {
    match pivot_first(v) {
        Some(p) => {
            let inv = T::one() / v[p].clone();
            v.iter().map(|x| x.clone() * inv.clone()).collect()
        }
        None => v.to_vec(),
    }
}

fn pivot_first<T: Field>(v: &[T]) -> Option<usize> {
    let max = v.iter().map(Field::modulus).fold(0.0, f64::max);
    if T::EXACT {
        v.iter().position(|x| !x.is_zero())
    } else {
        v.iter()
            .position(|x| x.modulus() >= 1e-6 * max && max > 0.0)
    }
}

/// Checks `xi` in the input field and, when the slice has the required rank
/// one structure, returns the hyperplane with witnesses in that field.
fn check_in_field<T: Field>(
    a: &BoundaryTensor<T>,
    xi: &[T],
    kind: Kind,
    tol: f64,
) -> Option<JumpingHyperplane<T>> {
    let s = a.contract0(xi).ok()?;
    if s.is_zero() {
        return None;
    }
    let (ok, residual) = if T::EXACT {
        let ok = match kind {
            Kind::Strong => s.is_decomposable(0.0),
            Kind::Weak(j) => flatten(&s, j).ok()?.rank() == 1,
        };
        (ok, 0.0)
    } else {
        let ac = a.to_complex();
        let (res, _) =
            slice_residual(&ac, &xi.iter().map(Field::to_c64).collect::<Vec<_>>(), kind)?;
        (res < tol, res)
    };
    if !ok {
        return None;
    }
    let witnesses_exact: Vec<Vec<T>> = match kind {
        Kind::Strong => (0..s.order())
            .map(|g| best_column(&s.unfold(g)).map(|v| scale_to_first(&v)))
            .collect::<Option<_>>()?,
        Kind::Weak(j) => {
            let f = flatten(&s, j).ok()?;
            let v = scale_to_first(&best_column(&f)?);
            let r = pivot(&v)?;
            let inv = T::one() / v[r].clone();
            let h = f.row(r).iter().map(|x| x.clone() * inv.clone()).collect();
            vec![v, h]
        }
    };
    let witnesses = witnesses_exact
        .iter()
        .map(|v| v.iter().map(Field::to_c64).collect())
        .collect();
    // Over inexact fields the in-field data is no better than the numeric one.
    let (xi_exact, witnesses_exact) = if T::EXACT {
        (Some(scale_to_first(xi)), Some(witnesses_exact))
    } else {
        (None, None)
    };
    Some(JumpingHyperplane {
        kind,
        xi: normalize_first(&xi.iter().map(Field::to_c64).collect::<Vec<_>>()),
        xi_exact,
        witnesses,
        witnesses_exact,
        residual,
        source: Source::Structured,
    })
}

/// Coordinate covectors, then the moment covectors `(1, t, ..., t^k)` for
/// `t = 0, 1, -1, 2, -2, ...`.
fn structured_candidates<T: Field>(d0: usize) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = (0..d0)
        .map(|i| {
            (0..d0)
                .map(|r| if r == i { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    let k0 = d0 - 1;
    let mut t: i64 = 0;
    for _ in 0..k0 + 4 {
        out.push(moment_vector(&T::from_i64(t), k0));
        t = if t > 0 { -t } else { 1 - t };
    }
    out
}

fn on_section(section: &[Vec<C64>], xi: &[C64]) -> bool {
    let nx = numeric::norm(xi);
    section.iter().all(|c| {
        let v: C64 = c.iter().zip(xi).map(|(a, b)| a * b).sum();
        v.norm() <= 1e-9 * nx * numeric::norm(c).max(1.0)
    })
}

fn numeric_hyperplane<T: Field>(
    ac: &BoundaryTensor<C64>,
    xi: &[C64],
    kind: Kind,
    tol: f64,
    source: Source,
) -> Option<JumpingHyperplane<T>> {
    let (res, s) = slice_residual(ac, xi, kind)?;
    (res < tol).then(|| JumpingHyperplane {
        kind,
        xi: normalize_first(xi),
        xi_exact: None,
        witnesses: numeric_witnesses(&s, kind),
        witnesses_exact: None,
        residual: res,
        source,
    })
}

/// Keeps the first representative of every projective class; an exact
/// candidate replaces a numeric representative of its class.
fn cluster<T: Field>(items: Vec<JumpingHyperplane<T>>, tol: f64) -> Vec<JumpingHyperplane<T>> {
    let mut reps: Vec<JumpingHyperplane<T>> = Vec::new();
    for h in items {
        match reps
            .iter_mut()
            .find(|r| projective_distance(&r.xi, &h.xi) < tol)
        {
            Some(r) => {
                if !r.is_exact() && h.is_exact() {
                    *r = h;
                }
            }
            None => reps.push(h),
        }
    }
    reps
}

pub fn detect_strong<T: Field>(
    a: &BoundaryTensor<T>,
    opts: &DetectOptions,
) -> Result<JumpingReport<T>> {
    detect(a, Kind::Strong, opts)
}

pub fn detect_weak<T: Field>(
    a: &BoundaryTensor<T>,
    j: usize,
    opts: &DetectOptions,
) -> Result<JumpingReport<T>> {
    detect(a, Kind::Weak(j), opts)
}

/// Rounding tolerances for snapping a numeric covector into the field, tight
/// first. Near a root of multiplicity `m` the search stalls at distance about
/// `tol^(1/m)`, hence the loose ones; a snap only counts if the exact check
/// passes.
const SNAP_TOLS: [f64; 4] = [1e-8, 1e-5, 1e-3, 1e-2];

pub fn detect<T: Field>(
    a: &BoundaryTensor<T>,
    kind: Kind,
    opts: &DetectOptions,
) -> Result<JumpingReport<T>> {
    if a.is_zero() {
        return Err(Error::Precondition(
            "jumping hyperplanes of the zero tensor".into(),
        ));
    }
    let f = a.format();
    kind.validate(f)?;
    let d0 = f.dim(0);
    if opts.section.iter().any(|c| c.len() != d0) {
        return Err(Error::Shape(format!("section forms must have length {d0}")));
    }
    let ac = a.to_complex();
    let fit = SliceFit::new(&ac, kind, &opts.section);

    let mut found = Vec::new();
    if opts.grid {
        for xi in structured_candidates::<T>(d0) {
            let xc: Vec<C64> = xi.iter().map(Field::to_c64).collect();
            if !on_section(&opts.section, &xc) {
                continue;
            }
            if let Some(h) = check_in_field(a, &xi, kind, opts.tol) {
                found.push(h);
            }
        }
    }

    let gn = GnOptions::default();
    let runs: Vec<Option<Vec<C64>>> = (0..opts.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = restart_rng(opts.seed, i);
            let xi0 = random_unit(d0, &mut rng);
            let res = gauss_newton(&fit, fit.initial(&xi0), &gn);
            let xi = &res.x[..d0];
            if !on_section(&opts.section, xi) {
                return None;
            }
            let (r, _) = slice_residual(&ac, xi, kind)?;
            (r < opts.tol).then_some(res.x)
        })
        .collect();

    let snap = |xi: &[C64], source: Source| -> Option<JumpingHyperplane<T>> {
        let exact = if T::EXACT {
            SNAP_TOLS.iter().find_map(|&t| {
                rationalize_projective(xi, opts.max_den, t).and_then(|q| {
                    let q: Vec<T> = q.iter().map(T::from_rational).collect();
                    check_in_field(a, &q, kind, opts.tol)
                })
            })
        } else {
            None
        };
        match exact {
            Some(mut h) => {
                h.source = source;
                Some(h)
            }
            None => numeric_hyperplane(&ac, xi, kind, opts.tol, source),
        }
    };

    let mut start = None;
    for z in runs.into_iter().flatten() {
        if let Some(h) = snap(&z[..d0], Source::Search) {
            found.push(h);
            start.get_or_insert(z);
        }
    }

    let k0 = f.k()[0];
    let mut curve = None;
    if opts.trace && opts.section.is_empty() {
        if let Some(z0) = start {
            curve = trace_curve(&fit, &ac, &z0, kind, opts, k0 + 3);
            if let Some(c) = &curve {
                found.extend(c.points.iter().filter_map(|p| snap(p, Source::Traced)));
            }
        }
    }

    let items = cluster(found, opts.cluster_tol);
    let count_distinct = items.len();
    let threshold = count_distinct >= k0 + 3 || curve.as_ref().is_some_and(|c| c.complete);
    let identity_flag = match kind {
        Kind::Strong => Some(threshold),
        Kind::Weak(_) if f.p() == 2 => Some(threshold),
        Kind::Weak(_) => None,
    };
    Ok(JumpingReport {
        kind,
        items,
        count_distinct,
        identity_flag,
        curve_evidence: curve,
        restarts: opts.restarts,
        seed: opts.seed,
    })
}

/// Unit tangent to the solution set at `z`, orthogonal to the gauge.
fn tangent(fit: &SliceFit, z: &[C64]) -> (usize, Option<Vec<C64>>) {
    let (_, j) = fit.eval(z);
    let null = numeric::null_space(&j, 1e-7);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let orth = |v: &mut Vec<C64>, basis: &[Vec<C64>]| {
        for b in basis {
            let c = inner(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    };
    for mut g in fit.gauge(z) {
        orth(&mut g, &basis);
        let n = numeric::norm(&g);
        if n > 1e-12 {
            basis.push(g.into_iter().map(|x| x / n).collect());
        }
    }
    let mut best: Option<(f64, Vec<C64>)> = None;
    let mut extra = 0;
    for v in null {
        let mut v: Vec<C64> = v.iter().copied().collect();
        orth(&mut v, &basis);
        let n = numeric::norm(&v);
        if n > 0.5 {
            extra += 1;
            let v: Vec<C64> = v.into_iter().map(|x| x / n).collect();
            basis.push(v.clone());
            let nxi = numeric::norm(&v[..fit.d0()]);
            if best.as_ref().is_none_or(|(m, _)| nxi > *m) {
                best = Some((nxi, v));
            }
        }
    }
    (extra, best.map(|(_, v)| v))
}

/// Predictor-corrector along a curve of solutions through `z0`, collecting
/// `target` pairwise separated covectors.
fn trace_curve(
    fit: &SliceFit,
    ac: &BoundaryTensor<C64>,
    z0: &[C64],
    kind: Kind,
    opts: &DetectOptions,
    target: usize,
) -> Option<CurveEvidence> {
    let d0 = fit.d0();
    let (local_dim, t0) = tangent(fit, z0);
    let t0 = t0?;
    if local_dim == 0 {
        return None;
    }
    let mut points = vec![normalize_first(&z0[..d0])];
    let separated =
        |p: &[C64], pts: &[Vec<C64>]| pts.iter().all(|q| projective_distance(p, q) > 1e-3);
    let gn = GnOptions {
        max_iter: 30,
        ..Default::default()
    };
    let h0 = 0.2 / numeric::norm(&t0[..d0]).max(1e-3);
    for dir in [1.0, -1.0] {
        let mut z = z0.to_vec();
        let mut t: Vec<C64> = t0.iter().map(|x| x * dir).collect();
        let mut h = h0;
        let mut steps = 0;
        while points.len() < target && steps < 8 * target && h > h0 / 64.0 {
            steps += 1;
            let anchor: Vec<C64> = z.iter().zip(&t).map(|(a, b)| a + b * h).collect();
            let pinned = Pinned {
                fit,
                tangent: t.clone(),
                anchor: anchor.clone(),
            };
            let mut res = gauss_newton(&pinned, anchor, &gn);
            fit.normalize(&mut res.x);
            let xi = &res.x[..d0];
            let ok = slice_residual(ac, xi, kind).is_some_and(|(r, _)| r < opts.tol)
                && projective_distance(xi, &z[..d0]) > 1e-6;
            if !ok {
                h /= 2.0;
                continue;
            }
            let p = normalize_first(xi);
            if separated(&p, &points) {
                points.push(p);
            }
            let Some(mut tn) = tangent(fit, &res.x).1 else {
                break;
            };
            let c = inner(&t, &tn);
            if c.norm() > 0.0 {
                let phase = c.conj() / c.norm();
                for x in &mut tn {
                    *x *= phase;
                }
            }
            z = res.x;
            t = tn;
        }
        if points.len() >= target {
            break;
        }
    }
    let complete = points.len() >= target;
    let nodes = if complete {
        fit_curve_parameters(&points)
    } else {
        None
    };
    Some(CurveEvidence {
        local_dim,
        points,
        complete,
        nodes,
    })
}

/// Exact (or tolerance-based, for inexact fields) strong check of `xi`.
pub fn is_strong<T: Field>(a: &BoundaryTensor<T>, xi: &[T]) -> Option<JumpingHyperplane<T>> {
    check_in_field(a, xi, Kind::Strong, DetectOptions::default().tol)
}

pub fn is_weak<T: Field>(
    a: &BoundaryTensor<T>,
    xi: &[T],
    j: usize,
) -> Option<JumpingHyperplane<T>> {
    if j == 0 || j > a.format().p() {
        return None;
    }
    check_in_field(a, xi, Kind::Weak(j), DetectOptions::default().tol)
}

#[derive(Clone, Debug)]
pub struct DirectionLocus {
    pub slot: usize,
    /// Witness directions in `P(V_j)`, clustered.
    pub directions: Vec<Vec<C64>>,
    /// The strong locus is a curve, so the directions are only a sample.
    pub infinite: bool,
}

/// The `v_j` witnesses of the strong hyperplanes of `A`, up to projective
/// equivalence.
pub fn strong_direction_locus<T: Field>(
    a: &BoundaryTensor<T>,
    j: usize,
    opts: &DetectOptions,
) -> Result<DirectionLocus> {
    if j == 0 || j > a.format().p() {
        return Err(Error::Precondition(format!(
            "slot {j} outside 1..={}",
            a.format().p()
        )));
    }
    let report = detect_strong(a, opts)?;
    let mut directions: Vec<Vec<C64>> = Vec::new();
    for h in &report.items {
        let v = normalize_first(&h.witnesses[j - 1]);
        if directions
            .iter()
            .all(|d| projective_distance(d, &v) >= opts.cluster_tol)
        {
            directions.push(v);
        }
    }
    Ok(DirectionLocus {
        slot: j,
        directions,
        infinite: report.curve_evidence.as_ref().is_some_and(|c| c.complete),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum V0Rule {
    /// `v_0 = e_p / ξ_p` for the first nonzero `ξ_p`; stays in the field.
    #[default]
    PivotDual,
    /// `v_0 = conj(ξ) / |ξ|²`, pivot at the largest coordinate.
    ConjugateNormalized,
}

#[derive(Clone, Debug)]
pub struct ElementaryTransform<T> {
    pub tensor: BoundaryTensor<T>,
    pub j: usize,
    pub v0: Vec<T>,
    pub vj: Vec<T>,
    pub h: Vec<T>,
    /// Columns `v_0, w_1, ..., w_{k_0}` with `w_i` spanning `ker ξ`.
    pub basis0: Matrix<T>,
    /// Columns `v_j` followed by the complementary coordinate vectors.
    pub basis_j: Matrix<T>,
}

/// `A'_j`: the components of `A` in `(V_0/<v_0>) ⊗ ... ⊗ (V_j/<v_j>) ⊗ ...`,
/// of format `(k_0 - 1; ..., k_j - 1, ...)`.
pub fn elementary_transform<T: Field>(
    a: &BoundaryTensor<T>,
    xi: &[T],
    j: usize,
    rule: V0Rule,
) -> Result<ElementaryTransform<T>> {
    let f = a.format();
    if j == 0 || j > f.p() {
        return Err(Error::Precondition(format!(
            "slot {j} outside 1..={}",
            f.p()
        )));
    }
    let slice = a.contract0(xi)?;
    if slice.is_zero() {
        return Err(Error::Precondition("the slice at ξ is zero".into()));
    }
    let hyp = is_weak(a, xi, j)
        .ok_or_else(|| Error::Precondition(format!("ξ is not a weak ({j}) jumping hyperplane")))?;
    let [vj, h]: [Vec<T>; 2] = hyp
        .witnesses_exact
        .clone()
        .or_else(|| {
            // Inexact fields: recompute the witnesses in the field itself.
            let fl = flatten(&slice, j).ok()?;
            let v = best_column(&fl)?;
            let r = pivot(&v)?;
            let inv = T::one() / v[r].clone();
            Some(vec![
                v,
                fl.row(r).iter().map(|x| x.clone() * inv.clone()).collect(),
            ])
        })
        .ok_or_else(|| Error::Precondition("no witness for ξ".into()))?
        .try_into()
        .map_err(|_| Error::Precondition("weak witness must be (v_j, h)".into()))?;

    let d0 = f.dim(0);
    let (p, v0) = match rule {
        V0Rule::PivotDual => {
            let p = xi
                .iter()
                .position(|x| !x.is_negligible(0.0))
                .expect("nonzero ξ");
            let mut v0 = vec![T::zero(); d0];
            v0[p] = T::one() / xi[p].clone();
            (p, v0)
        }
        V0Rule::ConjugateNormalized => {
            let p = pivot(xi).expect("nonzero ξ");
            let n2 = xi
                .iter()
                .fold(T::zero(), |acc, x| acc + x.clone() * x.conj());
            (p, xi.iter().map(|x| x.conj() / n2.clone()).collect())
        }
    };
    let mut cols0 = vec![v0.clone()];
    for i in (0..d0).filter(|&i| i != p) {
        let mut w = vec![T::zero(); d0];
        w[i] = T::one();
        w[p] = -(xi[i].clone() / xi[p].clone());
        cols0.push(w);
    }
    let basis0 = Matrix::from_columns(&cols0)?;
    let dj = f.dim(j);
    let pj = pivot(&vj).expect("nonzero witness");
    let mut colsj = vec![vj.clone()];
    for i in (0..dj).filter(|&i| i != pj) {
        let mut e = vec![T::zero(); dj];
        e[i] = T::one();
        colsj.push(e);
    }
    let basis_j = Matrix::from_columns(&colsj)?;
    let quotient = |b: &Matrix<T>| -> Result<Matrix<T>> {
        let inv = b.inverse().ok_or(Error::Singular { slot: 0 })?;
        Ok(Matrix::from_fn(b.rows() - 1, b.cols(), |r, c| {
            inv[(r + 1, c)].clone()
        }))
    };
    let t = a
        .tensor()
        .mode_product(0, &quotient(&basis0)?)?
        .mode_product(j, &quotient(&basis_j)?)?;
    let mut k = f.k().to_vec();
    k[0] -= 1;
    k[j] -= 1;
    let tensor = BoundaryTensor::from_tensor(Format::relaxed(k)?, t)?;
    Ok(ElementaryTransform {
        tensor,
        j,
        v0,
        vj,
        h,
        basis0,
        basis_j,
    })
}

#[derive(Clone, Debug)]
pub struct InclusionCheck {
    pub holds: bool,
    /// Number of weak hyperplanes `h' ≠ h` of `A` that were tested.
    pub tested: usize,
    /// All tests were decided in exact arithmetic.
    pub exact: bool,
    /// The `h'` that did not reappear.
    pub failures: Vec<Vec<C64>>,
}

/// Whether some `ξ''` has `flatten_j(A'·ξ'') ∝ v'' h'^T` with nonzero slice.
/// Rows of the flattening lie on `h'` exactly when they annihilate a basis
/// `N` of `ker h'^T`, which is linear in `ξ''`.
fn reappears<F: Field>(a2: &BoundaryTensor<F>, j: usize, h: &[F]) -> bool {
    let hm = Matrix::from_rows(vec![h.to_vec()]).expect("one row");
    let n = if F::EXACT {
        hm.nullspace()
    } else {
        hm.nullspace_with_tol(1e-10)
    };
    let d0 = a2.format().dim(0);
    let slices: Vec<Matrix<F>> = (0..d0)
        .map(|i| {
            let mut e = vec![F::zero(); d0];
            e[i] = F::one();
            flatten(&a2.contract0(&e).expect("unit covector"), j).expect("valid slot")
        })
        .collect();
    let rows = slices[0].rows();
    let mut sys = Matrix::zeros(rows * n.len().max(1), d0);
    for (q, nv) in n.iter().enumerate() {
        for (i, s) in slices.iter().enumerate() {
            let col = s.mul_vec(nv);
            for r in 0..rows {
                sys[(q * rows + r, i)] = col[r].clone();
            }
        }
    }
    let sol = if F::EXACT {
        sys.nullspace()
    } else {
        sys.nullspace_with_tol(1e-8)
    };
    sol.iter().any(|x| {
        a2.contract0(x).is_ok_and(|s| {
            let tol = 1e-8 * a2.tensor().frobenius_norm();
            !s.data().iter().all(|c| c.is_negligible(tol))
        })
    })
}

/// Every weak `(j)` hyperplane `h'` of `A` other than the one used for the
/// transform shows up again as a weak `(j)` hyperplane of `A'_j`.
pub fn weak_locus_inclusion_check<T: Field>(
    a: &BoundaryTensor<T>,
    xi: &[T],
    j: usize,
    opts: &DetectOptions,
) -> Result<InclusionCheck> {
    let tr = elementary_transform(a, xi, j, V0Rule::default())?;
    let report = detect_weak(a, j, opts)?;
    let hc: Vec<C64> = tr.h.iter().map(Field::to_c64).collect();
    let a2c = tr.tensor.to_complex();
    let mut out = InclusionCheck {
        holds: true,
        tested: 0,
        exact: true,
        failures: Vec::new(),
    };
    for item in &report.items {
        let h2 = &item.witnesses[1];
        if projective_distance(h2, &hc) < opts.cluster_tol {
            continue;
        }
        out.tested += 1;
        let ok = match (&item.witnesses_exact, T::EXACT) {
            (Some(w), true) => reappears(&tr.tensor, j, &w[1]),
            _ => {
                out.exact = false;
                reappears(&a2c, j, h2)
            }
        };
        if !ok {
            out.holds = false;
            out.failures.push(h2.clone());
        }
    }
    Ok(out)
}
