//! The Lie algebra of `Stab(A) ⊂ SL(V_0) × ... × SL(V_p)` and the
//! classification of its identity component.
//!
//! The algebra is the kernel of the linearized action
//! `(X_0, ..., X_p) ↦ sum_i X_i ∘_i A` restricted to trace-zero tuples. For a
//! nondegenerate boundary-format tensor its dimension is 0, 1 or 3. In
//! dimension 1 the single generator is either nilpotent in every slot (`C`)
//! or semisimple in every slot (`C*`).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nondegeneracy::{nondegenerate, NondegeneracyOptions, Status};
use crate::poly::Poly;
use crate::scalar::{Field, DEFAULT_RTOL};
use crate::tensor::{multi_indices, BoundaryTensor, GroupElement, Recovered, Tensor};

/// A trace-zero tuple `(X_0, ..., X_p)` with `sum_i X_i ∘_i A = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabGenerator<T> {
    pub mats: Vec<Matrix<T>>,
}

impl<T: Field> StabGenerator<T> {
    pub fn new(mats: Vec<Matrix<T>>) -> Self {
        Self { mats }
    }

    fn from_flat(dims: &[usize], v: &[T]) -> Self {
        let mut off = 0;
        let mats = dims
            .iter()
            .map(|&d| {
                let m = Matrix::from_vec(d, d, v[off..off + d * d].to_vec()).expect("block size");
                off += d * d;
                m
            })
            .collect();
        Self { mats }
    }

    pub fn flat(&self) -> Vec<T> {
        self.mats
            .iter()
            .flat_map(|m| m.data().iter().cloned())
            .collect()
    }

    pub fn bracket(&self, other: &Self) -> Self {
        Self {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(x, y)| x.bracket(y))
                .collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        Self {
            mats: self.mats.iter().map(|m| m.scale(s)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(x, y)| x.add(y))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mats.iter().all(Matrix::is_zero)
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> StabGenerator<U> {
        StabGenerator {
            mats: self.mats.iter().map(|m| m.map(&f)).collect(),
        }
    }
}

/// `sum_i X_i ∘_i A`, where `X ∘_i A` applies `X` along slot `i`.
pub fn linearized_action<T: Field>(a: &BoundaryTensor<T>, x: &[Matrix<T>]) -> Result<Tensor<T>> {
    if x.len() != a.format().k().len() {
        return Err(Error::Shape(format!(
            "{} matrices for {} slots",
            x.len(),
            a.format().k().len()
        )));
    }
    let mut acc = Tensor::zeros(a.format().dims());
    for (slot, m) in x.iter().enumerate() {
        acc = acc.add(&a.tensor().mode_product(slot, m)?)?;
    }
    Ok(acc)
}

/// Matrix of the linearized action on `gl(V_0) ⊕ ... ⊕ gl(V_p)` (unknowns in
/// slot order, each block row-major), followed by one trace row per slot.
pub fn linearized_system<T: Field>(a: &BoundaryTensor<T>) -> Matrix<T> {
    let dims = a.format().dims();
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0, |acc, d| {
            let o = *acc;
            *acc += d * d;
            Some(o)
        })
        .collect();
    let unknowns: usize = dims.iter().map(|d| d * d).sum();
    let n = a.format().len();
    let mut m: Matrix<T> = Matrix::zeros(n + dims.len(), unknowns);
    for idx in multi_indices(&dims) {
        let v = a.get(&idx);
        if v.is_zero() {
            continue;
        }
        let mut out = idx.clone();
        for (slot, &d) in dims.iter().enumerate() {
            let b = idx[slot];
            for r in 0..d {
                out[slot] = r;
                let row = a.tensor().offset(&out);
                let col = offsets[slot] + r * d + b;
                m[(row, col)] = m[(row, col)].clone() + v.clone();
            }
            out[slot] = idx[slot];
        }
    }
    for (slot, &d) in dims.iter().enumerate() {
        for r in 0..d {
            m[(n + slot, offsets[slot] + r * d + r)] = T::one();
        }
    }
    m
}

/// Basis of the stabilizer algebra. Exact over [`Rational`].
pub fn stab_algebra<T: Field>(a: &BoundaryTensor<T>) -> Result<Vec<StabGenerator<T>>> {
    if a.is_zero() {
        return Err(Error::Precondition("stabilizer of the zero tensor".into()));
    }
    let dims = a.format().dims();
    let system = linearized_system(a);
    Ok(system
        .nullspace()
        .into_iter()
        .map(|v| StabGenerator::from_flat(&dims, &v))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabClass {
    Trivial,
    Additive,
    Torus,
    SL2,
}

impl StabClass {
    pub fn name(self) -> &'static str {
        match self {
            Self::Trivial => "Trivial",
            Self::Additive => "Additive",
            Self::Torus => "Torus",
            Self::SL2 => "SL2",
        }
    }
}

/// Weights of a torus generator: in slot `i` the eigenvalues are
/// `λ·w` for `w ∈ {-k_i, -k_i + 2, ..., k_i}`, with one `λ` shared by all
/// slots.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusWeights<T> {
    /// `λ²`, exact when the input is.
    pub lambda_sq: T,
    /// `λ` itself when it lies in the field.
    pub lambda: Option<T>,
    /// The integer progressions `w`, ascending, per slot.
    pub normalized: Vec<Vec<i64>>,
}

impl<T: Field> TorusWeights<T> {
    /// Eigenvalues `λ·w` per slot, when `λ` is in the field.
    pub fn eigenvalues(&self) -> Option<Vec<Vec<T>>> {
        let l = self.lambda.as_ref()?;
        Some(
            self.normalized
                .iter()
                .map(|ws| ws.iter().map(|&w| l.clone() * T::from_i64(w)).collect())
                .collect(),
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub semisimple: Option<Vec<bool>>,
    pub nilpotent: Option<Vec<bool>>,
    pub bracket_closed: Option<bool>,
    pub killing_nondegenerate: Option<bool>,
    pub weight_progression: Option<bool>,
    pub triangular_basis: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct StabilizerReport<T> {
    pub dim: usize,
    pub class: StabClass,
    pub generators: Vec<StabGenerator<T>>,
    pub weights: Option<TorusWeights<T>>,
    pub certificates: Certificates,
    /// For the additive class: a basis change making `A` triangular, when
    /// the best-effort construction succeeded.
    pub triangular: Option<GroupElement<T>>,
    pub nondegeneracy: Option<Status>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Default)]
pub struct ClassifyOptions {
    /// Runs the nondegeneracy check first; `None` trusts the caller.
    pub nondegeneracy: Option<NondegeneracyOptions>,
}

impl ClassifyOptions {
    pub fn checked() -> Self {
        Self {
            nondegeneracy: Some(NondegeneracyOptions::default()),
        }
    }
}

/// Coordinates of `v` in the span of `basis`, if it lies there.
fn coords_in_span<T: Field>(basis: &[Vec<T>], v: &[T]) -> Option<Vec<T>> {
    let m = Matrix::from_columns(basis).ok()?;
    let c = m.solve(v)?;
    let back = m.mul_vec(&c);
    let scale = v.iter().map(Field::modulus).fold(1.0, f64::max);
    back.iter()
        .zip(v)
        .all(|(x, y)| (x.clone() - y.clone()).is_negligible(1e-8 * scale))
        .then_some(c)
}

/// Matrix of `ad_x` on the span of `basis` (columns are coordinates of
/// `[x, b_j]`).
pub(crate) fn ad_matrix<T: Field>(
    basis: &[StabGenerator<T>],
    x: &StabGenerator<T>,
) -> Option<Matrix<T>> {
    let flat: Vec<Vec<T>> = basis.iter().map(StabGenerator::flat).collect();
    let cols = basis
        .iter()
        .map(|b| coords_in_span(&flat, &x.bracket(b).flat()))
        .collect::<Option<Vec<_>>>()?;
    Matrix::from_columns(&cols).ok()
}

/// `Σ_m (k - 2m)²` for `m = 0..=k`.
fn weight_square_sum(k: usize) -> i64 {
    (0..=k as i64).map(|m| (k as i64 - 2 * m).pow(2)).sum()
}

/// `Π_w (x - λ w)` over `w ∈ {-k, ..., k}` step 2, written in terms of `λ²`.
fn progression_char_poly<T: Field>(lambda_sq: &T, k: usize) -> Poly<T> {
    let mut p = if k.is_multiple_of(2) {
        Poly::monomial(T::one(), 1)
    } else {
        Poly::new(vec![T::one()])
    };
    let mut w = k as i64;
    while w > 0 {
        let c = lambda_sq.clone() * T::from_i64(w * w);
        p = p.mul(&Poly::new(vec![-c, T::zero(), T::one()]));
        w -= 2;
    }
    p
}

fn polys_agree<T: Field>(a: &Poly<T>, b: &Poly<T>) -> bool {
    if T::EXACT {
        return a == b;
    }
    let n = a.coeffs().len().max(b.coeffs().len());
    (0..n).all(|i| {
        let x = a.coeffs().get(i).cloned().unwrap_or_else(T::zero);
        let y = b.coeffs().get(i).cloned().unwrap_or_else(T::zero);
        let scale = x.modulus().max(y.modulus()).max(1.0);
        (x - y).is_negligible(1e-6 * scale)
    })
}

/// `λ²` for a would-be torus generator, read off from slot 0.
pub fn torus_scale_sq<T: Field>(x0: &Matrix<T>, k0: usize) -> T {
    x0.matmul(x0).trace() / T::from_i64(weight_square_sum(k0))
}

/// Checks that every slot of `x` has the characteristic polynomial of the
/// scaled progression `λ·(-k_i, ..., k_i)` for one common `λ`.
pub fn check_weights<T: Field>(x: &StabGenerator<T>, k: &[usize]) -> Option<TorusWeights<T>> {
    let lambda_sq = torus_scale_sq(&x.mats[0], k[0]);
    if lambda_sq.is_negligible(DEFAULT_RTOL) {
        return None;
    }
    for (m, &ki) in x.mats.iter().zip(k) {
        if !polys_agree(&m.char_poly(), &progression_char_poly(&lambda_sq, ki)) {
            return None;
        }
    }
    Some(TorusWeights {
        lambda: lambda_sq.sqrt_opt(),
        lambda_sq,
        normalized: k
            .iter()
            .map(|&ki| (0..=ki as i64).map(|m| 2 * m - ki as i64).collect())
            .collect(),
    })
}

/// Computes the stabilizer algebra and classifies `Stab(A)^0`.
pub fn classify<T: Field>(
    a: &BoundaryTensor<T>,
    opts: &ClassifyOptions,
) -> Result<StabilizerReport<T>> {
    a.format().require_unreduced()?;
    let mut warnings = Vec::new();
    let verdict = match &opts.nondegeneracy {
        Some(nopts) => {
            let v = nondegenerate(a, nopts)?;
            match v.status {
                Status::DegenerateExact | Status::DegenerateWitness => {
                    return Err(Error::Precondition(format!(
                        "input is degenerate ({}); the classification assumes Det A != 0",
                        v.status.name()
                    )));
                }
                Status::NondegenerateProbable => {
                    warnings.push("nondegeneracy is probable (numeric), not certified".to_string())
                }
                Status::Inconclusive => warnings.push(
                    "nondegeneracy could not be decided; classification assumes it".to_string(),
                ),
                Status::NondegenerateExact => {}
            }
            Some(v.status)
        }
        None => {
            warnings.push("nondegeneracy not checked".to_string());
            None
        }
    };

    let generators = stab_algebra(a)?;
    let dim = generators.len();
    let k = a.format().k().to_vec();
    let mut certificates = Certificates::default();
    let mut weights = None;
    let mut triangular = None;
    let class = match dim {
        0 => StabClass::Trivial,
        3 => {
            let ads: Option<Vec<Matrix<T>>> = generators
                .iter()
                .map(|x| ad_matrix(&generators, x))
                .collect();
            let closed = ads.is_some();
            certificates.bracket_closed = Some(closed);
            let ads = ads.ok_or_else(|| {
                Error::ClassificationViolated(
                    "3-dimensional kernel is not closed under brackets".into(),
                )
            })?;
            let killing = Matrix::from_fn(3, 3, |i, j| ads[i].matmul(&ads[j]).trace());
            let det = killing.det();
            let scale = killing.max_modulus().max(1.0).powi(3);
            let nondeg = !det.is_negligible(1e-10 * scale);
            certificates.killing_nondegenerate = Some(nondeg);
            if !nondeg {
                return Err(Error::ClassificationViolated(
                    "3-dimensional stabilizer algebra is solvable, not sl(2)".into(),
                ));
            }
            StabClass::SL2
        }
        1 => {
            let x = &generators[0];
            let nil: Vec<bool> = x.mats.iter().map(Matrix::is_nilpotent).collect();
            certificates.nilpotent = Some(nil.clone());
            if nil.iter().all(|&b| b) {
                certificates.semisimple = Some(x.mats.iter().map(Matrix::is_zero).collect());
                let tri = triangulate_additive(a, x);
                certificates.triangular_basis = Some(tri.is_some());
                if tri.is_none() {
                    warnings.push("no triangulating basis found for the additive generator".into());
                }
                triangular = tri;
                StabClass::Additive
            } else {
                let w = check_weights(x, &k);
                // Distinct eigenvalues make every slot semisimple; over an
                // exact field the minimal polynomial is checked as well.
                let semi: Vec<bool> = if T::EXACT {
                    x.mats.iter().map(Matrix::is_semisimple).collect()
                } else {
                    vec![w.is_some(); x.mats.len()]
                };
                certificates.semisimple = Some(semi.clone());
                certificates.weight_progression = Some(w.is_some());
                if !semi.iter().all(|&b| b) {
                    return Err(Error::ClassificationViolated(
                        "one-dimensional stabilizer generator of mixed Jordan type".into(),
                    ));
                }
                let w = w.ok_or_else(|| {
                    Error::ClassificationViolated(
                        "torus weights are not proportional to (-k, ..., k)".into(),
                    )
                })?;
                weights = Some(w);
                StabClass::Torus
            }
        }
        d => {
            return Err(Error::ClassificationViolated(format!(
                "stabilizer algebra has dimension {d}"
            )))
        }
    };
    Ok(StabilizerReport {
        dim,
        class,
        generators,
        weights,
        certificates,
        triangular,
        nondegeneracy: verdict,
        warnings,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupportKind {
    Triangular,
    Diagonal,
    Identity,
}

/// Support test in the given coordinates. Over inexact fields entries below
/// `1e-8 · max|a|` count as zero.
pub fn check_support<T: Field>(a: &BoundaryTensor<T>, kind: SupportKind) -> bool {
    let tol = 1e-8 * a.tensor().max_modulus();
    multi_indices(&a.format().dims()).all(|idx| {
        let s: usize = idx[1..].iter().sum();
        let v = a.get(&idx);
        match kind {
            SupportKind::Triangular => idx[0] <= s || v.is_negligible(tol),
            SupportKind::Diagonal => idx[0] == s || v.is_negligible(tol),
            SupportKind::Identity => {
                if idx[0] == s {
                    (v.clone() - T::one()).is_negligible(1e-8)
                } else {
                    v.is_negligible(tol)
                }
            }
        }
    })
}

/// Eigenvector of `m` for eigenvalue `mu` (the kernel is one-dimensional for
/// torus generators).
fn eigenvector<F: Field>(m: &Matrix<F>, mu: &F) -> Option<Vec<F>> {
    let n = m.rows();
    let shifted = m.sub(&Matrix::identity(n).scale(mu));
    let tol = if F::EXACT { 0.0 } else { 1e-7 };
    shifted.nullspace_with_tol(tol).into_iter().next()
}

fn torus_basis<F: Field>(x: &StabGenerator<F>, lambda: &F, k: &[usize]) -> Option<Vec<Matrix<F>>> {
    x.mats
        .iter()
        .zip(k)
        .enumerate()
        .map(|(slot, (m, &ki))| {
            let cols = (0..=ki as i64)
                .map(|i| {
                    let w = if slot == 0 {
                        ki as i64 - 2 * i
                    } else {
                        2 * i - ki as i64
                    };
                    eigenvector(m, &(lambda.clone() * F::from_i64(w)))
                })
                .collect::<Option<Vec<_>>>()?;
            Matrix::from_columns(&cols).ok()?.inverse()
        })
        .collect()
}

/// A basis change bringing a tensor with a `C*` stabilizer to diagonal form.
/// Exact when `λ` lies in the field, complex floating point otherwise.
pub fn diagonalize_torus<T: Field>(
    a: &BoundaryTensor<T>,
    report: &StabilizerReport<T>,
) -> Result<Recovered<T>> {
    if report.class != StabClass::Torus {
        return Err(Error::Precondition(format!(
            "diagonalize_torus needs a Torus report, got {}",
            report.class.name()
        )));
    }
    let w = report
        .weights
        .as_ref()
        .expect("torus reports carry weights");
    let k = a.format().k();
    let x = &report.generators[0];
    let fail = |why: &str| Error::DiagonalizationFailed(why.to_string());
    if let Some(lambda) = &w.lambda {
        let mats =
            torus_basis(x, lambda, k).ok_or_else(|| fail("eigenbasis construction failed"))?;
        let g = GroupElement::new(mats)?;
        if !check_support(&a.act(&g)?, SupportKind::Diagonal) {
            return Err(fail("result is not diagonal"));
        }
        return Ok(Recovered::InField(g));
    }
    let xc = x.map(Field::to_c64);
    let lambda = w.lambda_sq.to_c64().sqrt();
    let mats = torus_basis(&xc, &lambda, k)
        .ok_or_else(|| fail("numeric eigenbasis construction failed"))?;
    let g = GroupElement::new(mats)?;
    if !check_support(&a.to_complex().act(&g)?, SupportKind::Diagonal) {
        return Err(fail("numeric result is not diagonal"));
    }
    Ok(Recovered::Numeric(g))
}

/// Jordan chain of a regular nilpotent `m` of size `k + 1`, ordered so that
/// `m` lowers the index (`lower`) or raises it.
fn jordan_chain<T: Field>(m: &Matrix<T>, lower: bool) -> Option<Matrix<T>> {
    let n = m.rows();
    let top = m.pow(n - 1);
    let r = (0..n).find(|&r| (0..n).any(|i| !top[(i, r)].is_negligible(DEFAULT_RTOL)))?;
    let mut v = vec![T::zero(); n];
    v[r] = T::one();
    let mut chain = vec![v];
    for _ in 1..n {
        let next = m.mul_vec(chain.last().expect("nonempty"));
        chain.push(next);
    }
    if lower {
        chain.reverse();
    }
    Matrix::from_columns(&chain).ok()?.inverse()
}

/// Best effort: Jordan bases of the nilpotent generator, tried in every
/// orientation, accepted only when the result has triangular support.
fn triangulate_additive<T: Field>(
    a: &BoundaryTensor<T>,
    x: &StabGenerator<T>,
) -> Option<GroupElement<T>> {
    for (lower0, lower_rest) in [(true, false), (false, true), (true, true), (false, false)] {
        let mats: Option<Vec<Matrix<T>>> = x
            .mats
            .iter()
            .enumerate()
            .map(|(slot, m)| jordan_chain(m, if slot == 0 { lower0 } else { lower_rest }))
            .collect();
        let Some(mats) = mats else { continue };
        let Ok(g) = GroupElement::new(mats) else {
            continue;
        };
        if a.act(&g)
            .is_ok_and(|b| check_support(&b, SupportKind::Triangular))
        {
            return Some(g);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, Rational};
    use crate::sl2::{build_identity, sl2_basis, SL2Embedding};
    use crate::Format;
    use num_traits::Zero;

    fn fmt(k: &[usize]) -> Format {
        Format::new(k.to_vec()).unwrap()
    }

    #[test]
    fn identity_has_sl2_stabilizer() {
        let f = fmt(&[2, 1, 1]);
        let i = build_identity::<Rational>(&f);
        let gens = stab_algebra(&i).unwrap();
        assert_eq!(gens.len(), 3);
        for g in &gens {
            assert!(linearized_action(&i, &g.mats).unwrap().is_zero());
            assert!(g.mats.iter().all(|m| m.trace().is_zero()));
        }
        let r = classify(&i, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.class, StabClass::SL2);
        assert_eq!(r.certificates.bracket_closed, Some(true));
    }

    #[test]
    fn embedded_sl2_lies_in_the_kernel() {
        let f = fmt(&[3, 1, 2]);
        let i = build_identity::<Rational>(&f);
        let gens = stab_algebra(&i).unwrap();
        let flat: Vec<Vec<Rational>> = gens.iter().map(StabGenerator::flat).collect();
        for x in sl2_basis::<Rational>() {
            let y = StabGenerator::new(SL2Embedding::new(f.clone()).algebra(&x).unwrap());
            assert!(coords_in_span(&flat, &y.flat()).is_some());
        }
    }

    #[test]
    fn diagonal_tensor_contains_the_weight_torus() {
        let f = fmt(&[4, 2, 2]);
        let mut n = 0;
        let a = BoundaryTensor::from_fn(f.clone(), |idx| {
            if idx[0] == idx[1] + idx[2] {
                n += 1;
                int(n)
            } else {
                int(0)
            }
        });
        let torus = StabGenerator::new(
            SL2Embedding::new(f)
                .algebra(&sl2_basis::<Rational>()[0])
                .unwrap(),
        );
        assert!(linearized_action(&a, &torus.mats).unwrap().is_zero());
        let r = classify(&a, &ClassifyOptions::default()).unwrap();
        assert_eq!(r.class, StabClass::Torus);
        let w = r.weights.unwrap();
        assert_eq!(w.normalized[0], vec![-4, -2, 0, 2, 4]);
        assert_eq!(w.normalized[1], vec![-2, 0, 2]);
        let g = diagonalize_torus(&a, &classify(&a, &ClassifyOptions::default()).unwrap()).unwrap();
        assert!(g.is_in_field());
    }

    #[test]
    fn support_predicates() {
        let f = fmt(&[2, 1, 1]);
        let i = build_identity::<Rational>(&f);
        assert!(check_support(&i, SupportKind::Identity));
        assert!(check_support(&i, SupportKind::Diagonal));
        assert!(check_support(&i, SupportKind::Triangular));
        let mut d = i.clone();
        d.set(&[1, 0, 1], int(2));
        assert!(check_support(&d, SupportKind::Diagonal));
        assert!(!check_support(&d, SupportKind::Identity));
        d.set(&[2, 0, 0], int(1));
        assert!(!check_support(&d, SupportKind::Triangular));
        let mut t = i;
        t.set(&[0, 1, 1], int(5));
        assert!(check_support(&t, SupportKind::Triangular));
        assert!(!check_support(&t, SupportKind::Diagonal));
    }

    #[test]
    fn progression_polynomial() {
        // λ² = 1, k = 2: x (x² - 4)
        let p = progression_char_poly(&int(1), 2);
        assert_eq!(p, Poly::new(vec![int(0), int(-4), int(0), int(1)]));
    }
}
