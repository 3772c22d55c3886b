//! Deterministic test tensors, each shipped with what it is expected to be.
//!
//! An expectation is either *constructed* (it holds by the way the tensor was
//! built) or *generic* (it holds for almost every choice of the random
//! parameters and must be confirmed by running the analyses).

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::nondegeneracy::{nondegenerate, NondegeneracyOptions};
use crate::scalar::{int, Rational};
use crate::sl2::{build_identity, make_vandermonde, sl2_basis, NodeFamily, SL2Embedding};
use crate::stabilizer::{classify, linearized_action, ClassifyOptions, StabClass};
use crate::tensor::{multi_indices, BoundaryTensor, Format, GroupElement, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureKind {
    Identity,
    Vandermonde,
    Diagonal,
    Nilpotent,
    Random,
    DegenerateAtPoint,
    ZeroSlice,
}

impl FixtureKind {
    pub const ALL: [Self; 7] = [
        Self::Identity,
        Self::Vandermonde,
        Self::Diagonal,
        Self::Nilpotent,
        Self::Random,
        Self::DegenerateAtPoint,
        Self::ZeroSlice,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Identity => "identity",
            Self::Vandermonde => "vandermonde",
            Self::Diagonal => "diagonal",
            Self::Nilpotent => "nilpotent",
            Self::Random => "random",
            Self::DegenerateAtPoint => "degenerate_at_point",
            Self::ZeroSlice => "zero_slice",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

/// The point where a degenerate fixture is forced to have a zero fiber map:
/// vectors for every slot other than `0` and `j`, in slot order.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessSpec {
    pub j: usize,
    pub x: Vec<Vec<Rational>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FixtureSpec {
    pub kind: FixtureKind,
    pub format: Format,
    pub seed: u64,
    /// Vandermonde nodes (default `0, 1, ..., k_0`).
    pub nodes: Option<Vec<Rational>>,
    /// Diagonal entries in storage order of the support `i_0 = i_1 + ... + i_p`
    /// (default `1, 2, 3, ...`).
    pub entries: Option<Vec<Rational>>,
    /// Degenerate-at-point witness (default `j = 1`, every `x_i = e_0`).
    pub witness: Option<WitnessSpec>,
}

impl FixtureSpec {
    pub fn new(kind: FixtureKind, format: Format, seed: u64) -> Self {
        Self {
            kind,
            format,
            seed,
            nodes: None,
            entries: None,
            witness: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Constructed,
    Generic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Labeled<V> {
    pub value: V,
    pub basis: Basis,
    pub reason: String,
}

impl<V> Labeled<V> {
    fn constructed(value: V, reason: &str) -> Self {
        Self {
            value,
            basis: Basis::Constructed,
            reason: reason.into(),
        }
    }

    fn generic(value: V, reason: &str) -> Self {
        Self {
            value,
            basis: Basis::Generic,
            reason: reason.into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nondegenerate: Option<Labeled<bool>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<Labeled<StabClass>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_flag: Option<Labeled<bool>>,
}

impl Expected {
    fn with_class(mut self, class: Labeled<StabClass>) -> Self {
        self.identity_flag = Some(Labeled {
            value: class.value == StabClass::SL2,
            basis: class.basis,
            reason: "identity_flag holds exactly for the SL2 class".into(),
        });
        self.class = Some(class);
        self
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub spec: FixtureSpec,
    pub tensor: BoundaryTensor<Rational>,
    pub expected: Expected,
}

/// Formats `(k; 1, k - 1)` and `(k; k - 1, 1)`: every nondegenerate tensor is
/// equivalent to the identity.
pub fn single_orbit_format(f: &Format) -> bool {
    f.p() == 2 && f.k()[1..].contains(&1)
}

/// True when `dim V_0 ⊗ ... ⊗ V_p` exceeds the dimension of
/// `SL(V_0) × ... × SL(V_p)` times scalars, so the generic stabilizer is finite.
fn generically_trivial(f: &Format) -> bool {
    let group: usize = f.dims().iter().map(|d| d * d - 1).sum::<usize>() + 1;
    f.len() > group
}

fn generic_class(f: &Format, what: &str) -> Option<Labeled<StabClass>> {
    if single_orbit_format(f) {
        Some(Labeled::generic(
            StabClass::SL2,
            "every nondegenerate tensor of this format is equivalent to the identity",
        ))
    } else if generically_trivial(f) && what == "random" {
        Some(Labeled::generic(
            StabClass::Trivial,
            "tensor space is larger than the group, so the generic stabilizer is finite",
        ))
    } else {
        None
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_entries(f: &Format, rng: &mut impl Rng) -> BoundaryTensor<Rational> {
    BoundaryTensor::from_fn(f.clone(), |_| int(rng.gen_range(-9..=9)))
}

/// Product of elementary shears with integer parameters in `[-bound, bound]`;
/// determinant one, integer entries.
pub fn random_unimodular(n: usize, bound: i64, rng: &mut impl Rng) -> Matrix<Rational> {
    let mut m = Matrix::identity(n);
    if n < 2 {
        return m;
    }
    for _ in 0..2 * n {
        let a = rng.gen_range(0..n);
        let b = (a + rng.gen_range(1..n)) % n;
        let c = rng.gen_range(-bound..=bound);
        let mut e = Matrix::identity(n);
        e[(a, b)] = int(c);
        m = m.matmul(&e);
    }
    m
}

/// A random element of `SL(V_0) × ... × SL(V_p)` with integer blocks.
pub fn random_group_element(f: &Format, rng: &mut impl Rng) -> GroupElement<Rational> {
    let mats = f
        .dims()
        .into_iter()
        .map(|d| random_unimodular(d, 2, rng))
        .collect();
    GroupElement::special(mats).expect("shears have determinant one")
}

pub fn generate(spec: &FixtureSpec) -> Result<Fixture> {
    let f = &spec.format;
    f.require_unreduced()?;
    let mut rng = rng_for(spec.seed);
    let nondeg = |reason: &str| Some(Labeled::constructed(true, reason));
    let (tensor, expected) = match spec.kind {
        FixtureKind::Identity => (
            build_identity(f),
            Expected {
                nondegenerate: nondeg("the identity is nondegenerate"),
                ..Default::default()
            }
            .with_class(Labeled::constructed(
                StabClass::SL2,
                "invariant under the embedded SL(2)",
            )),
        ),
        FixtureKind::Vandermonde => {
            let nodes = match &spec.nodes {
                Some(n) => NodeFamily::new(n.clone())?,
                None => NodeFamily::consecutive(f.k()[0] + 1),
            };
            (
                make_vandermonde(f, &nodes)?,
                Expected {
                    nondegenerate: nondeg("invertible slot-0 change of the identity"),
                    ..Default::default()
                }
                .with_class(Labeled::constructed(
                    StabClass::SL2,
                    "invertible slot-0 change of the identity",
                )),
            )
        }
        FixtureKind::Diagonal => {
            let tensor = diagonal(f, spec.entries.as_deref())?;
            let class = generic_class(f, "diagonal").unwrap_or_else(|| {
                Labeled::generic(
                    StabClass::Torus,
                    "contains the weight torus by construction",
                )
            });
            (
                tensor,
                Expected {
                    nondegenerate: Some(Labeled::generic(
                        true,
                        "nonzero entries on the whole support",
                    )),
                    ..Default::default()
                }
                .with_class(class),
            )
        }
        FixtureKind::Nilpotent => (
            nilpotent_invariant(f, &mut rng)?,
            Expected {
                nondegenerate: nondeg("filtered by the nondegeneracy check"),
                ..Default::default()
            }
            .with_class(Labeled::generic(
                StabClass::Additive,
                "annihilated by the principal nilpotent; confirmed by the solver",
            )),
        ),
        FixtureKind::Random => {
            let mut e = Expected {
                nondegenerate: Some(Labeled::generic(true, "random entries")),
                ..Default::default()
            };
            if let Some(c) = generic_class(f, "random") {
                e = e.with_class(c);
            }
            (random_entries(f, &mut rng), e)
        }
        FixtureKind::DegenerateAtPoint => {
            let w = match &spec.witness {
                Some(w) => w.clone(),
                None => WitnessSpec {
                    j: 1,
                    x: (2..=f.p()).map(|s| unit(f.dim(s), 0)).collect(),
                },
            };
            (
                degenerate_at(f, &w, &mut rng)?,
                Expected {
                    nondegenerate: Some(Labeled::constructed(
                        false,
                        "fiber map vanishes at the witness",
                    )),
                    ..Default::default()
                },
            )
        }
        FixtureKind::ZeroSlice => {
            let mut a = build_identity(f);
            for tail in multi_indices(&f.dims()[1..]) {
                let mut idx = vec![0];
                idx.extend(tail);
                a.set(&idx, int(0));
            }
            (
                a,
                Expected {
                    nondegenerate: Some(Labeled::constructed(false, "the i_0 = 0 slice is zero")),
                    ..Default::default()
                },
            )
        }
    };
    Ok(Fixture {
        spec: spec.clone(),
        tensor,
        expected,
    })
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    (0..n)
        .map(|r| if r == i { int(1) } else { int(0) })
        .collect()
}

fn diagonal(f: &Format, entries: Option<&[Rational]>) -> Result<BoundaryTensor<Rational>> {
    let support = multi_indices(&f.dims())
        .filter(|idx| idx[0] == idx[1..].iter().sum::<usize>())
        .count();
    let entries: Vec<Rational> = match entries {
        Some(e) if e.len() == support => e.to_vec(),
        Some(e) => {
            return Err(Error::Precondition(format!(
                "diagonal fixture on {f} needs {support} entries, got {}",
                e.len()
            )))
        }
        None => (1..=support as i64).map(int).collect(),
    };
    let mut it = entries.into_iter();
    Ok(BoundaryTensor::from_fn(f.clone(), |idx| {
        if idx[0] == idx[1..].iter().sum::<usize>() {
            it.next().expect("one entry per support cell")
        } else {
            int(0)
        }
    }))
}

/// Random integer entries, then the fiber map at the witness is forced to
/// vanish by adjusting one coordinate per `(i_0, i_j)` pair.
fn degenerate_at(
    f: &Format,
    w: &WitnessSpec,
    rng: &mut impl Rng,
) -> Result<BoundaryTensor<Rational>> {
    let p = f.p();
    if w.j == 0 || w.j > p || w.x.len() != p - 1 {
        return Err(Error::Precondition(
            "witness does not match the format".into(),
        ));
    }
    let others: Vec<usize> = (1..=p).filter(|&s| s != w.j).collect();
    for (v, &s) in w.x.iter().zip(&others) {
        if v.len() != f.dim(s) || v.iter().all(|c| c.is_zero()) {
            return Err(Error::Precondition(format!(
                "bad witness vector for slot {s}"
            )));
        }
    }
    let mut a = random_entries(f, rng);
    let other_dims: Vec<usize> = others.iter().map(|&s| f.dim(s)).collect();
    let weight = |rest: &[usize]| -> Rational {
        rest.iter()
            .zip(&w.x)
            .fold(int(1), |acc, (&i, v)| acc * v[i].clone())
    };
    let pivot = multi_indices(&other_dims)
        .find(|r| !weight(r).is_zero())
        .expect("witness vectors are nonzero");
    let full = |i0: usize, ij: usize, rest: &[usize]| {
        let mut idx = vec![0; p + 1];
        idx[0] = i0;
        idx[w.j] = ij;
        for (&s, &i) in others.iter().zip(rest) {
            idx[s] = i;
        }
        idx
    };
    for i0 in 0..f.dim(0) {
        for ij in 0..f.dim(w.j) {
            let total = multi_indices(&other_dims).fold(int(0), |acc, r| {
                acc + a.get(&full(i0, ij, &r)).clone() * weight(&r)
            });
            let idx = full(i0, ij, &pivot);
            let v = a.get(&idx).clone() - total / weight(&pivot);
            a.set(&idx, v);
        }
    }
    Ok(a)
}

const NILPOTENT_ATTEMPTS: usize = 12;

/// A random element of the kernel of `A ↦ dσ(e)·A`, kept only when it is
/// nondegenerate and its stabilizer is exactly additive.
fn nilpotent_invariant(f: &Format, rng: &mut impl Rng) -> Result<BoundaryTensor<Rational>> {
    let e = SL2Embedding::new(f.clone()).algebra(&sl2_basis::<Rational>()[1])?;
    let n = f.len();
    let columns: Vec<Vec<Rational>> = (0..n)
        .map(|c| {
            let mut data = vec![int(0); n];
            data[c] = int(1);
            let basis = BoundaryTensor::new(f.clone(), data).expect("sized to the format");
            linearized_action(&basis, &e).map(Tensor::into_data)
        })
        .collect::<Result<_>>()?;
    let kernel = Matrix::from_columns(&columns)?.nullspace();
    let opts = NondegeneracyOptions {
        restarts: 16,
        ..Default::default()
    };
    for _ in 0..NILPOTENT_ATTEMPTS {
        let mut data = vec![int(0); n];
        for v in &kernel {
            let c = int(rng.gen_range(-9..=9));
            for (d, x) in data.iter_mut().zip(v) {
                *d = d.clone() + c.clone() * x.clone();
            }
        }
        let a = BoundaryTensor::new(f.clone(), data)?;
        if a.is_zero() || !nondegenerate(&a, &opts)?.status.is_nondegenerate() {
            continue;
        }
        if classify(&a, &ClassifyOptions::default())?.class == StabClass::Additive {
            return Ok(a);
        }
    }
    Err(Error::Infeasible(format!(
        "no nondegenerate tensor with additive stabilizer in format {f} after {NILPOTENT_ATTEMPTS} attempts \
         (invariant subspace of dimension {})",
        kernel.len()
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nondegeneracy::{fiber_map, hyperdet_p2, FiberPoint};
    use crate::stabilizer::check_weights;

    fn fmt(k: &[usize]) -> Format {
        Format::new(k.to_vec()).unwrap()
    }

    #[test]
    fn identity_fixture_has_one_entry_per_support_cell() {
        let fx = generate(&FixtureSpec::new(FixtureKind::Identity, fmt(&[4, 2, 2]), 0)).unwrap();
        let ones = fx.tensor.entries().iter().filter(|x| **x == int(1)).count();
        assert_eq!(ones, 9);
        assert_eq!(fx.expected.class.unwrap().value, StabClass::SL2);
    }

    #[test]
    fn same_seed_same_fixture() {
        for kind in [FixtureKind::Random, FixtureKind::DegenerateAtPoint] {
            let s = FixtureSpec::new(kind, fmt(&[3, 1, 2]), 11);
            assert_eq!(generate(&s).unwrap().tensor, generate(&s).unwrap().tensor);
        }
        let a = generate(&FixtureSpec::new(FixtureKind::Random, fmt(&[3, 1, 2]), 1)).unwrap();
        let b = generate(&FixtureSpec::new(FixtureKind::Random, fmt(&[3, 1, 2]), 2)).unwrap();
        assert_ne!(a.tensor, b.tensor);
    }

    #[test]
    fn random_entries_are_small_integers() {
        let fx = generate(&FixtureSpec::new(FixtureKind::Random, fmt(&[3, 1, 2]), 7)).unwrap();
        for x in fx.tensor.entries() {
            assert!(x.is_integer() && x.numer().magnitude() <= &9u32.into());
        }
    }

    #[test]
    fn degenerate_fixture_vanishes_at_its_witness() {
        let f = fmt(&[2, 1, 1]);
        let mut spec = FixtureSpec::new(FixtureKind::DegenerateAtPoint, f, 3);
        spec.witness = Some(WitnessSpec {
            j: 1,
            x: vec![vec![int(1), int(0)]],
        });
        let a = generate(&spec).unwrap().tensor;
        let pt = FiberPoint::new(2, 1, vec![vec![int(1), int(0)]]).unwrap();
        assert!(fiber_map(&a, &pt).unwrap().is_zero());
        assert!(hyperdet_p2(&a).unwrap().is_zero());

        spec.witness = Some(WitnessSpec {
            j: 2,
            x: vec![vec![int(2), int(-3)]],
        });
        let a = generate(&spec).unwrap().tensor;
        let pt = FiberPoint::new(2, 2, vec![vec![int(2), int(-3)]]).unwrap();
        assert!(fiber_map(&a, &pt).unwrap().is_zero());
    }

    #[test]
    fn diagonal_fixture_validates_entry_count() {
        let mut spec = FixtureSpec::new(FixtureKind::Diagonal, fmt(&[2, 1, 1]), 0);
        spec.entries = Some(vec![int(1), int(2)]);
        assert!(matches!(generate(&spec), Err(Error::Precondition(_))));
    }

    #[test]
    fn nilpotent_fixture_is_annihilated_by_the_principal_nilpotent() {
        let f = fmt(&[4, 2, 2]);
        let a = generate(&FixtureSpec::new(FixtureKind::Nilpotent, f.clone(), 0))
            .unwrap()
            .tensor;
        let e = SL2Embedding::new(f)
            .algebra(&sl2_basis::<Rational>()[1])
            .unwrap();
        assert!(linearized_action(&a, &e).unwrap().is_zero());
    }

    #[test]
    fn diagonal_fixture_contains_the_weight_torus() {
        let f = fmt(&[4, 1, 1, 2]);
        let a = generate(&FixtureSpec::new(FixtureKind::Diagonal, f.clone(), 0))
            .unwrap()
            .tensor;
        let h = SL2Embedding::new(f.clone())
            .algebra(&sl2_basis::<Rational>()[0])
            .unwrap();
        assert!(linearized_action(&a, &h).unwrap().is_zero());
        let g = crate::stabilizer::StabGenerator::new(h);
        assert!(check_weights(&g, f.k()).is_some());
    }

    #[test]
    fn unimodular_matrices_have_determinant_one() {
        let mut rng = rng_for(5);
        for n in 1..5 {
            let m = random_unimodular(n, 3, &mut rng);
            assert_eq!(m.det(), int(1));
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in FixtureKind::ALL {
            assert_eq!(FixtureKind::parse(k.name()), Some(k));
        }
    }
}
