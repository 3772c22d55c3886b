//! Recovering a group element that moves a tensor with `sl(2)` stabilizer
//! onto the identity tensor.
//!
//! Two constructions are tried, first inside the input field and then in
//! complex floating point. The primary one builds an `sl(2)`-triple inside the
//! stabilizer algebra and reads off highest-weight bases slot by slot. The
//! fallback fits the strong covectors to a rational normal curve and rebuilds
//! the tensor as a Vandermonde tensor.

use crate::error::{Error, Result};
use crate::jumping::{detect_strong, is_strong, DetectOptions};
use crate::linalg::Matrix;
use crate::numeric::{gauss_newton, CMatrix, CVector, GnOptions, Residual};
use crate::scalar::{Field, C64};
use crate::sl2::{build_identity, moment_vector};
use crate::stabilizer::{ad_matrix, stab_algebra, torus_scale_sq, StabGenerator};
use crate::tensor::{BoundaryTensor, GroupElement, Recovered};

/// Relative bound on `|g·A - I|` accepted for floating-point results.
pub const VERIFY_RTOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    Triple,
    Vandermonde,
    NumericTriple,
    NumericVandermonde,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Triple => "triple",
            Route::Vandermonde => "vandermonde",
            Route::NumericTriple => "numeric-triple",
            Route::NumericVandermonde => "numeric-vandermonde",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Canonicalization<T> {
    pub route: Route,
    /// `g` with `g·A = I`.
    pub element: Recovered<T>,
    /// `max |g·A - I|`, zero for exact confirmations.
    pub residual: f64,
}

/// Finds `g` with `g·A = build_identity(format)`.
///
/// The equality is checked before returning: exactly over exact fields,
/// up to [`VERIFY_RTOL`] otherwise. `opts` drives the covector search of the
/// Vandermonde fallback.
pub fn canonicalize_identity<T: Field>(
    a: &BoundaryTensor<T>,
    opts: &DetectOptions,
) -> Result<Canonicalization<T>> {
    a.format().require_unreduced()?;
    let gens = stab_algebra(a)?;
    if gens.len() != 3 {
        return Err(Error::Precondition(format!(
            "stabilizer has dimension {}, the identity orbit needs 3",
            gens.len()
        )));
    }
    if let Some(g) = triple_route(a, &gens) {
        if let Some(c) = verified(a, g, Route::Triple) {
            return Ok(c);
        }
    }
    let strong = detect_strong(a, opts)?;
    if T::EXACT {
        let exact: Vec<Vec<T>> = strong
            .items
            .iter()
            .filter_map(|h| h.xi_exact.clone())
            .collect();
        let witness = |xi: &[T]| is_strong(a, xi).and_then(|h| h.witnesses_exact);
        if let Some(g) = vandermonde_route(a, &exact, witness) {
            if let Some(c) = verified(a, g, Route::Vandermonde) {
                return Ok(c);
            }
        }
    }
    let ac = a.to_complex();
    let gens_c: Vec<StabGenerator<C64>> = gens.iter().map(|g| g.map(Field::to_c64)).collect();
    if let Some(g) = triple_route(&ac, &gens_c) {
        if let Some(c) = verified_numeric(a, polish(&ac, g), Route::NumericTriple) {
            return Ok(c);
        }
    }
    let mut points: Vec<Vec<C64>> = strong.items.iter().map(|h| h.xi.clone()).collect();
    if let Some(ev) = &strong.curve_evidence {
        points.extend(ev.points.iter().cloned());
    }
    let witness = |xi: &[C64]| is_strong(&ac, xi).map(|h| h.witnesses);
    if let Some(g) = vandermonde_route(&ac, &distinct(points), witness) {
        if let Some(c) = verified_numeric(a, polish(&ac, g), Route::NumericVandermonde) {
            return Ok(c);
        }
    }
    Err(Error::CanonicalizationUnverified(format!(
        "no route produced a verified element for {}",
        a.format()
    )))
}

fn distinct(points: Vec<Vec<C64>>) -> Vec<Vec<C64>> {
    let mut out: Vec<Vec<C64>> = Vec::new();
    for p in points {
        if out
            .iter()
            .all(|q| crate::numeric::projective_distance(q, &p) > 1e-6)
        {
            out.push(p);
        }
    }
    out
}

fn residual_to_identity<F: Field>(a: &BoundaryTensor<F>, g: &GroupElement<F>) -> Option<f64> {
    let moved = a.act(g).ok()?;
    let id = build_identity::<F>(a.format());
    Some(
        moved
            .entries()
            .iter()
            .zip(id.entries())
            .map(|(x, y)| (x.clone() - y.clone()).modulus())
            .fold(0.0, f64::max),
    )
}

/// `g·A - I` as a function of the entries of `g`.
struct ToIdentity<'a> {
    a: &'a BoundaryTensor<C64>,
    target: BoundaryTensor<C64>,
    dims: Vec<usize>,
}

impl ToIdentity<'_> {
    fn unpack(&self, x: &[C64]) -> Vec<Matrix<C64>> {
        let mut at = 0;
        self.dims
            .iter()
            .map(|&d| {
                let m = Matrix::from_fn(d, d, |i, j| x[at + i * d + j]);
                at += d * d;
                m
            })
            .collect()
    }

    fn moved(&self, mats: &[Matrix<C64>]) -> Vec<C64> {
        let mut t = self.a.tensor().clone();
        for (slot, m) in mats.iter().enumerate() {
            t = t.mode_product(slot, m).expect("square blocks");
        }
        t.into_data()
    }
}

impl Residual for ToIdentity<'_> {
    fn eval(&self, x: &[C64]) -> (CVector, CMatrix) {
        let mats = self.unpack(x);
        let r: Vec<C64> = self
            .moved(&mats)
            .iter()
            .zip(self.target.entries())
            .map(|(u, v)| u - v)
            .collect();
        let mut jac = CMatrix::zeros(r.len(), x.len());
        let mut col = 0;
        for (slot, &d) in self.dims.iter().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    let mut unit = Matrix::zeros(d, d);
                    unit[(i, j)] = C64::new(1.0, 0.0);
                    let mut m = mats.clone();
                    m[slot] = unit;
                    for (row, v) in self.moved(&m).into_iter().enumerate() {
                        jac[(row, col)] = v;
                    }
                    col += 1;
                }
            }
        }
        (CVector::from_vec(r), jac)
    }
}

/// A few Gauss-Newton steps on `g·A = I` to clean up rounding.
fn polish(a: &BoundaryTensor<C64>, g: GroupElement<C64>) -> GroupElement<C64> {
    let problem = ToIdentity {
        a,
        target: build_identity(a.format()),
        dims: a.format().dims(),
    };
    let x0: Vec<C64> = g
        .matrices()
        .iter()
        .flat_map(|m| m.data().to_vec())
        .collect();
    let opts = GnOptions {
        max_iter: 8,
        ..Default::default()
    };
    let res = gauss_newton(&problem, x0, &opts);
    GroupElement::new(problem.unpack(&res.x)).unwrap_or(g)
}

fn verified<T: Field>(
    a: &BoundaryTensor<T>,
    g: GroupElement<T>,
    route: Route,
) -> Option<Canonicalization<T>> {
    let r = residual_to_identity(a, &g)?;
    let ok = if T::EXACT { r == 0.0 } else { r <= VERIFY_RTOL };
    ok.then(|| Canonicalization {
        route,
        element: Recovered::InField(g),
        residual: r,
    })
}

fn verified_numeric<T: Field>(
    a: &BoundaryTensor<T>,
    g: GroupElement<C64>,
    route: Route,
) -> Option<Canonicalization<T>> {
    let r = residual_to_identity(&a.to_complex(), &g)?;
    (r <= VERIFY_RTOL).then(|| Canonicalization {
        route,
        element: Recovered::Numeric(g),
        residual: r,
    })
}

fn kernel_tol<F: Field>() -> f64 {
    if F::EXACT {
        0.0
    } else {
        1e-7
    }
}

fn combine<F: Field>(gens: &[StabGenerator<F>], c: &[F]) -> StabGenerator<F> {
    let mut acc = gens[0].scale(&c[0]);
    for (g, x) in gens.iter().zip(c).skip(1) {
        acc = acc.add(&g.scale(x));
    }
    acc
}

/// `r` with `a = r·b`, read at the largest entry of `b`.
fn ratio<F: Field>(a: &StabGenerator<F>, b: &StabGenerator<F>) -> Option<F> {
    let (fa, fb) = (a.flat(), b.flat());
    let (i, _) = fb
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.modulus().total_cmp(&y.1.modulus()))?;
    if fb[i].is_negligible(0.0) {
        return None;
    }
    Some(fa[i].clone() / fb[i].clone())
}

fn same<F: Field>(a: &StabGenerator<F>, b: &StabGenerator<F>) -> bool {
    let scale = b.flat().iter().map(Field::modulus).fold(1.0, f64::max);
    a.flat()
        .iter()
        .zip(b.flat())
        .all(|(x, y)| (x.clone() - y).is_negligible(1e-7 * scale))
}

/// Small integer coefficient vectors, by increasing sup norm.
fn small_vectors(radius: i64) -> impl Iterator<Item = [i64; 3]> {
    (1..=radius).flat_map(move |r| {
        let span = -r..=r;
        span.clone()
            .flat_map(move |x| {
                let span = -r..=r;
                span.clone()
                    .flat_map(move |y| (-r..=r).map(move |z| [x, y, z]))
            })
            .filter(move |v| v.iter().map(|c| c.abs()).max() == Some(r))
    })
}

/// A semisimple `H` normalized to the weights `k0, k0 - 2, ...`, or a nonzero
/// nilpotent element, found among small combinations of the basis.
enum Seed<F> {
    Semisimple(StabGenerator<F>),
    Nilpotent(StabGenerator<F>),
}

fn find_seed<F: Field>(gens: &[StabGenerator<F>], k0: usize) -> Option<Seed<F>> {
    let q = |c: &[F]| torus_scale_sq(&combine(gens, c).mats[0], k0);
    if F::EXACT {
        // Quadratic form in the coefficients, tabulated once.
        let mut gram = vec![vec![F::zero(); 3]; 3];
        for (i, row) in gram.iter_mut().enumerate() {
            for (j, g) in row.iter_mut().enumerate() {
                let m = gens[i].mats[0].matmul(&gens[j].mats[0]);
                *g = m.trace();
            }
        }
        let weight =
            F::one() / F::from_i64((0..=k0 as i64).map(|m| (k0 as i64 - 2 * m).pow(2)).sum());
        let mut nilpotent = None;
        for v in small_vectors(10) {
            let c: Vec<F> = v.iter().map(|&x| F::from_i64(x)).collect();
            let mut s = F::zero();
            for i in 0..3 {
                for j in 0..3 {
                    s = s + c[i].clone() * c[j].clone() * gram[i][j].clone();
                }
            }
            if s.is_zero() {
                if nilpotent.is_none() {
                    nilpotent = Some(c);
                }
                continue;
            }
            let lambda_sq = s * weight.clone();
            if let Some(l) = lambda_sq.sqrt_opt() {
                let x = combine(gens, &c);
                return Some(Seed::Semisimple(x.scale(&(F::one() / l))));
            }
            // Past radius 2 only isotropic vectors are still useful.
            if v.iter().all(|x| x.abs() <= 2) {
                continue;
            }
            if nilpotent.is_some() {
                break;
            }
        }
        return nilpotent.map(|c| Seed::Nilpotent(combine(gens, &c)));
    }
    let norm = |g: &StabGenerator<F>| g.flat().iter().map(|x| x.modulus().powi(2)).sum::<f64>();
    let mut best: Option<(f64, StabGenerator<F>, F)> = None;
    for v in small_vectors(1) {
        let c: Vec<F> = v.iter().map(|&x| F::from_i64(x)).collect();
        let x = combine(gens, &c);
        let lsq = q(&c);
        let Some(l) = lsq.sqrt_opt() else { continue };
        let score = lsq.modulus() / norm(&x).max(f64::MIN_POSITIVE);
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, x, l));
        }
    }
    let (score, x, l) = best?;
    (score > 1e-10).then(|| Seed::Semisimple(x.scale(&(F::one() / l))))
}

fn eigen_coords<F: Field>(ad: &Matrix<F>, mu: i64) -> Option<Vec<F>> {
    let shifted = ad.sub(&Matrix::identity(3).scale(&F::from_i64(mu)));
    let ker = shifted.nullspace_with_tol(kernel_tol::<F>());
    (ker.len() == 1).then(|| ker.into_iter().next().unwrap())
}

/// An `sl(2)`-triple `(H, E, F)` in the span of `gens`.
fn find_triple<F: Field>(gens: &[StabGenerator<F>], k0: usize) -> Option<[StabGenerator<F>; 3]> {
    let h = match find_seed(gens, k0)? {
        Seed::Semisimple(h) => h,
        Seed::Nilpotent(e) => gens.iter().find_map(|y| {
            let h0 = e.bracket(y);
            let alpha = ratio(&h0.bracket(&e), &e)?;
            if alpha.is_negligible(1e-9) {
                return None;
            }
            Some(h0.scale(&(F::from_i64(2) / alpha)))
        })?,
    };
    let ad = ad_matrix(gens, &h)?;
    let e = combine(gens, &eigen_coords(&ad, 2)?);
    let f = combine(gens, &eigen_coords(&ad, -2)?);
    let f = f.scale(&(F::one() / ratio(&e.bracket(&f), &h)?));
    let two = F::from_i64(2);
    let ok = same(&h.bracket(&e), &e.scale(&two))
        && same(&h.bracket(&f), &f.scale(&-two))
        && same(&e.bracket(&f), &h);
    ok.then_some([h, e, f])
}

fn stack<F: Field>(a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    let rows: Vec<Vec<F>> = (0..a.rows())
        .map(|i| a.row(i).to_vec())
        .chain((0..b.rows()).map(|i| b.row(i).to_vec()))
        .collect();
    Matrix::from_rows(rows).expect("equal widths")
}

fn scaled<F: Field>(v: &[F], s: &F) -> Vec<F> {
    v.iter().map(|x| x.clone() * s.clone()).collect()
}

/// Basis of one slot in which the triple acts by the standard matrices.
fn weight_basis<F: Field>(slot: usize, k: usize, [h, e, f]: &[Matrix<F>; 3]) -> Option<Matrix<F>> {
    let n = k + 1;
    let kk = F::from_i64(k as i64);
    let id = Matrix::identity(n);
    let (top, kill) = if slot == 0 {
        (h.sub(&id.scale(&kk)), e)
    } else {
        (h.add(&id.scale(&kk)), f)
    };
    let ker = stack(&top, kill).nullspace_with_tol(kernel_tol::<F>());
    if ker.len() != 1 {
        return None;
    }
    let mut cols = vec![ker.into_iter().next().unwrap()];
    for m in 1..=k {
        let prev = &cols[m - 1];
        let next = if slot == 0 {
            scaled(
                &f.mul_vec(prev),
                &(F::one() / F::from_i64((k - m + 1) as i64)),
            )
        } else {
            scaled(&e.mul_vec(prev), &(F::one() / F::from_i64(-(m as i64))))
        };
        cols.push(next);
    }
    Matrix::from_columns(&cols).ok()
}

fn triple_route<F: Field>(
    a: &BoundaryTensor<F>,
    gens: &[StabGenerator<F>],
) -> Option<GroupElement<F>> {
    let k = a.format().k();
    let [h, e, f] = find_triple(gens, k[0])?;
    let bases = (0..k.len())
        .map(|slot| {
            let mats = [
                h.mats[slot].clone(),
                e.mats[slot].clone(),
                f.mats[slot].clone(),
            ];
            weight_basis(slot, k[slot], &mats)
        })
        .collect::<Option<Vec<_>>>()?;
    let inverses = bases
        .iter()
        .map(Matrix::inverse)
        .collect::<Option<Vec<_>>>()?;
    let g = GroupElement::new(inverses).ok()?;
    // The moved tensor is invariant under the standard triple, so it is a
    // multiple of the identity tensor.
    let b = a.act(&g).ok()?;
    let c = b.get(&vec![0; k.len()]).clone();
    if c.is_negligible(1e-12) {
        return None;
    }
    let mut mats = g.into_matrices();
    mats[0] = mats[0].scale(&(F::one() / c));
    GroupElement::new(mats).ok()
}

/// Parameters of points on a rational normal curve in `P^n`, all finite.
///
/// Needs at least `n + 3` pairwise distinct points (any number when `n = 1`).
/// The parametrization is fixed up to a Möbius transformation; `None` when
/// the points are not on a common rational normal curve in general position.
pub fn fit_curve_parameters<F: Field>(points: &[Vec<F>]) -> Option<Vec<F>> {
    let dim = points.first()?.len();
    if dim < 2 || points.iter().any(|p| p.len() != dim) {
        return None;
    }
    let n = dim - 1;
    let tol = if F::EXACT { 0.0 } else { 1e-6 };
    let raw: Vec<Option<F>> = if n == 1 {
        points
            .iter()
            .map(|p| (!p[0].is_negligible(tol)).then(|| p[1].clone() / p[0].clone()))
            .collect()
    } else {
        frame_parameters(points, n, tol)?
    };
    mobius_to_finite(raw, tol)
}

fn frame_parameters<F: Field>(points: &[Vec<F>], n: usize, tol: f64) -> Option<Vec<Option<F>>> {
    if points.len() < n + 3 {
        return None;
    }
    let frame = Matrix::from_columns(&points[..=n]).ok()?;
    let a = frame.solve(&points[n + 1])?;
    let b = frame.solve(&points[n + 2])?;
    let scale = |v: &[F]| v.iter().map(Field::modulus).fold(0.0, f64::max);
    let (sa, sb) = (scale(&a), scale(&b));
    if a.iter().any(|x| x.is_negligible(tol * sa)) || b.iter().any(|x| x.is_negligible(tol * sb)) {
        return None;
    }
    let tau: Vec<F> = a
        .iter()
        .zip(&b)
        .map(|(ai, bi)| -(ai.clone() / bi.clone()))
        .collect();
    let mut out: Vec<Option<F>> = tau.iter().cloned().map(Some).collect();
    out.push(None);
    out.push(Some(F::zero()));
    for p in &points[n + 3..] {
        let c = frame.solve(p)?;
        let q: Vec<F> = c
            .iter()
            .zip(&a)
            .map(|(x, ai)| x.clone() / ai.clone())
            .collect();
        let sq = scale(&q);
        // q_i (t - τ_i) = μ for all i.
        let (i, j) = (0..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .max_by(|x, y| {
                let d = |(i, j): (usize, usize)| (q[i].clone() - q[j].clone()).modulus();
                d(*x).total_cmp(&d(*y))
            })?;
        let dq = q[i].clone() - q[j].clone();
        if dq.is_negligible(tol * sq) {
            return None;
        }
        let t = (q[i].clone() * tau[i].clone() - q[j].clone() * tau[j].clone()) / dq;
        let mu = q[i].clone() * (t.clone() - tau[i].clone());
        let consistent = q.iter().zip(&tau).all(|(qi, ti)| {
            (qi.clone() * (t.clone() - ti.clone()) - mu.clone())
                .is_negligible(tol * sq.max(1.0) * (1.0 + t.modulus()))
        });
        if !consistent || mu.is_negligible(tol * sq) {
            return None;
        }
        out.push(Some(t));
    }
    Some(out)
}

/// `t ↦ 1/(t - c)` for an integer `c` away from every finite parameter.
fn mobius_to_finite<F: Field>(raw: Vec<Option<F>>, tol: f64) -> Option<Vec<F>> {
    let sep = if F::EXACT { 0.0 } else { 1e-3 };
    let c = (0..64i64)
        .map(|i| if i % 2 == 0 { i / 2 } else { -(i + 1) / 2 })
        .map(F::from_i64)
        .find(|c| {
            raw.iter()
                .flatten()
                .all(|t| (t.clone() - c.clone()).modulus() > sep)
        })?;
    let out: Vec<F> = raw
        .into_iter()
        .map(|t| match t {
            Some(t) => F::one() / (t - c.clone()),
            None => F::zero(),
        })
        .collect();
    for (i, s) in out.iter().enumerate() {
        if out[..i]
            .iter()
            .any(|r| (r.clone() - s.clone()).is_negligible(tol.max(1e-9)))
        {
            return None;
        }
    }
    Some(out)
}

/// `g` with `g ν_k(t_s) ∝ w_s` for every node.
fn fit_slot_map<F: Field>(k: usize, nodes: &[F], witnesses: &[Vec<F>]) -> Option<Matrix<F>> {
    let d = k + 1;
    let s = nodes.len();
    let mut rows = Vec::with_capacity(d * s);
    for (idx, (t, w)) in nodes.iter().zip(witnesses).enumerate() {
        let nu = moment_vector(t, k);
        for r in 0..d {
            let mut row = vec![F::zero(); d * d + s];
            row[r * d..(r + 1) * d].clone_from_slice(&nu);
            row[d * d + idx] = -w[r].clone();
            rows.push(row);
        }
    }
    let ker = Matrix::from_rows(rows)
        .ok()?
        .nullspace_with_tol(kernel_tol::<F>());
    if ker.len() != 1 {
        return None;
    }
    let v = &ker[0];
    let g = Matrix::from_fn(d, d, |i, j| v[i * d + j].clone());
    g.inverse().map(|_| g)
}

fn vandermonde_route<F: Field>(
    a: &BoundaryTensor<F>,
    covectors: &[Vec<F>],
    witness: impl Fn(&[F]) -> Option<Vec<Vec<F>>>,
) -> Option<GroupElement<F>> {
    let k = a.format().k();
    let n = k[0] + 1;
    if covectors.len() < n + 2 {
        return None;
    }
    let params = fit_curve_parameters(covectors)?;
    let xis = &covectors[..n];
    let nodes = &params[..n];
    let witnesses: Vec<Vec<Vec<F>>> = xis.iter().map(|xi| witness(xi)).collect::<Option<_>>()?;
    let mut inverse_maps = Vec::with_capacity(k.len());
    let mut maps = Vec::with_capacity(k.len());
    for (slot, &kj) in k.iter().enumerate().skip(1) {
        let ws: Vec<Vec<F>> = witnesses.iter().map(|w| w[slot - 1].clone()).collect();
        let g = fit_slot_map(kj, nodes, &ws)?;
        inverse_maps.push(g.inverse()?);
        maps.push(g);
    }
    // D_s from one nonzero entry of each slice.
    let mut d = Vec::with_capacity(n);
    for (xi, t) in xis.iter().zip(nodes) {
        let slice = a.contract0(xi).ok()?;
        let factors: Vec<Vec<F>> = maps
            .iter()
            .zip(&k[1..])
            .map(|(g, &kj)| g.mul_vec(&moment_vector(t, kj)))
            .collect();
        let model = crate::tensor::Tensor::outer(&factors);
        let (i, _) = model
            .data()
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.modulus().total_cmp(&y.1.modulus()))?;
        d.push(slice.data()[i].clone() / model.data()[i].clone());
    }
    let w = Matrix::from_rows(nodes.iter().map(|t| moment_vector(t, n - 1)).collect()).ok()?;
    let xi_mat = Matrix::from_rows(xis.to_vec()).ok()?;
    let dinv = Matrix::diagonal(&d.iter().map(|x| F::one() / x.clone()).collect::<Vec<_>>());
    let h0 = w.inverse()?.matmul(&dinv).matmul(&xi_mat);
    let mut mats = vec![h0];
    mats.extend(inverse_maps);
    GroupElement::new(mats).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::random_group_element;
    use crate::scalar::{int, rational, Rational};
    use crate::sl2::{make_vandermonde, NodeFamily};
    use crate::tensor::Format;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fmt(k: &[usize]) -> Format {
        Format::new(k.to_vec()).unwrap()
    }

    fn quick() -> DetectOptions {
        DetectOptions {
            restarts: 24,
            ..Default::default()
        }
    }

    #[test]
    fn identity_canonicalizes_exactly() {
        for k in [&[2usize, 1, 1][..], &[3, 1, 2], &[4, 2, 2], &[3, 1, 1, 1]] {
            let i = build_identity::<Rational>(&fmt(k));
            let c = canonicalize_identity(&i, &quick()).unwrap();
            assert_eq!(c.route, Route::Triple);
            let g = c.element.in_field().unwrap();
            assert_eq!(i.act(g).unwrap(), i);
        }
    }

    #[test]
    fn vandermonde_211_recovers_exactly() {
        let f = fmt(&[2, 1, 1]);
        let nodes = NodeFamily::new(vec![int(0), int(1), int(2)]).unwrap();
        let a = make_vandermonde(&f, &nodes).unwrap();
        let c = canonicalize_identity(&a, &quick()).unwrap();
        assert_eq!(c.residual, 0.0);
        assert_eq!(
            a.act(c.element.in_field().unwrap()).unwrap(),
            build_identity(&f)
        );
    }

    #[test]
    fn moved_identity_comes_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in [&[3usize, 1, 2][..], &[4, 1, 1, 2]] {
            let f = fmt(k);
            let g = random_group_element(&f, &mut rng);
            let a = build_identity::<Rational>(&f).act(&g).unwrap();
            let c = canonicalize_identity(&a, &quick()).unwrap();
            assert_eq!(
                a.act(c.element.in_field().unwrap()).unwrap(),
                build_identity(&f)
            );
        }
    }

    #[test]
    fn complex_input_within_tolerance() {
        let f = fmt(&[3, 1, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_group_element(&f, &mut rng).map(Field::to_c64);
        let a = build_identity::<C64>(&f).act(&g).unwrap();
        let c = canonicalize_identity(&a, &quick()).unwrap();
        assert!(c.residual <= VERIFY_RTOL);
    }

    #[test]
    fn vandermonde_route_on_its_own() {
        let f = fmt(&[3, 1, 2]);
        let nodes = NodeFamily::new(vec![int(-1), int(0), rational(1, 2), int(3)]).unwrap();
        let a = make_vandermonde(&f, &nodes).unwrap();
        // Moment covectors at further nodes are strong for the identity only,
        // so use the strong covectors of `a` directly: rows of W^{-T} ν(t).
        let w = crate::sl2::vandermonde_matrix(&nodes);
        let wt_inv = w.transpose().inverse().unwrap();
        let ts = [
            int(-1),
            int(0),
            rational(1, 2),
            int(3),
            int(5),
            rational(-2, 3),
        ];
        let covs: Vec<Vec<Rational>> = ts
            .iter()
            .map(|t| wt_inv.mul_vec(&moment_vector(t, 3)))
            .collect();
        let g = vandermonde_route(&a, &covs, |xi| {
            is_strong(&a, xi).and_then(|h| h.witnesses_exact)
        })
        .unwrap();
        assert_eq!(a.act(&g).unwrap(), build_identity(&f));
    }

    #[test]
    fn curve_parameters_of_the_moment_curve() {
        let ts = [0i64, 1, -1, 2, 3, -4];
        let pts: Vec<Vec<Rational>> = ts.iter().map(|&t| moment_vector(&int(t), 3)).collect();
        let params = fit_curve_parameters(&pts).unwrap();
        assert_eq!(params.len(), ts.len());
        // Cross-ratios are invariant under the Möbius ambiguity.
        let cr = |v: &[Rational]| {
            (v[0].clone() - v[2].clone()) * (v[1].clone() - v[3].clone())
                / ((v[0].clone() - v[3].clone()) * (v[1].clone() - v[2].clone()))
        };
        let orig: Vec<Rational> = ts.iter().map(|&t| int(t)).collect();
        for w in [[0usize, 1, 2, 3], [1, 2, 4, 5], [0, 3, 4, 5]] {
            let a: Vec<Rational> = w.iter().map(|&i| orig[i].clone()).collect();
            let b: Vec<Rational> = w.iter().map(|&i| params[i].clone()).collect();
            assert_eq!(cr(&a), cr(&b));
        }
    }

    #[test]
    fn off_curve_point_is_rejected() {
        let mut pts: Vec<Vec<Rational>> = [0i64, 1, -1, 2, 3]
            .iter()
            .map(|&t| moment_vector(&int(t), 2))
            .collect();
        pts.push(vec![int(1), int(5), int(7)]);
        assert!(fit_curve_parameters(&pts).is_none());
    }

    #[test]
    fn non_sl2_input_is_a_precondition_error() {
        let f = fmt(&[2, 1, 1]);
        let a = BoundaryTensor::from_fn(f, |idx| {
            int(1 + idx.iter().sum::<usize>() as i64 * 3 + idx[0] as i64 * idx[1] as i64)
        });
        assert!(matches!(
            canonicalize_identity(&a, &quick()),
            Err(Error::Precondition(_))
        ));
    }
}
