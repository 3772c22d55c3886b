mod common;

use bfstab_core::fixtures::{
    generate, random_group_element, random_unimodular, FixtureKind, FixtureSpec,
};
use bfstab_core::jumping::{
    detect_strong, elementary_transform, is_strong, is_weak, DetectOptions, V0Rule,
};
use bfstab_core::linalg::svd;
use bfstab_core::nondegeneracy::hyperdet_p2;
use bfstab_core::scalar::{int, Field};
use bfstab_core::sl2::{build_identity, make_vandermonde, moment_vector, NodeFamily};
use bfstab_core::stabilizer::{linearized_action, stab_algebra, StabGenerator};
use bfstab_core::tensor::residual_rank_one;
use bfstab_core::{BoundaryTensor, Format, GroupElement, Matrix, Rational, Tensor};
use common::{fixture, fmt};
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_int(r: &mut ChaCha8Rng, bound: i64) -> Rational {
    int(r.gen_range(-bound..=bound))
}

fn random_tensor(k: &[usize], seed: u64, bound: i64) -> BoundaryTensor<Rational> {
    let mut r = rng(seed);
    BoundaryTensor::from_fn(fmt(k), |_| small_int(&mut r, bound))
}

fn multi_indices(dims: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for &d in dims {
        out = out
            .into_iter()
            .flat_map(|p| (0..d).map(move |i| [p.clone(), vec![i]].concat()))
            .collect();
    }
    out
}

/// Rank one (or zero) iff `T[I] T[J] = T[I'] T[J']` whenever `I', J'` arise
/// from `I, J` by exchanging one coordinate.
fn binomials_vanish(t: &Tensor<Rational>) -> bool {
    let idx = multi_indices(t.dims());
    for i in &idx {
        for j in &idx {
            for s in 0..i.len() {
                let (mut i2, mut j2) = (i.clone(), j.clone());
                std::mem::swap(&mut i2[s], &mut j2[s]);
                if t.get(i).clone() * t.get(j).clone() != t.get(&i2).clone() * t.get(&j2).clone() {
                    return false;
                }
            }
        }
    }
    true
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Degree of the boundary hyperdeterminant of format `(k_0; k_1, k_2)`.
fn det_degree(k: &[usize]) -> usize {
    factorial(k[0] + 1) / (factorial(k[1]) * factorial(k[2]))
}

const P2_FORMATS: [&[usize]; 3] = [&[2, 1, 1], &[3, 1, 2], &[4, 2, 2]];

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn exact_rank_matches_numeric_rank(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let mut r = rng(seed);
        // Low rank on purpose: a product of thin random factors.
        let inner = r.gen_range(1..=rows.min(cols));
        let a = Matrix::from_fn(rows, inner, |_, _| small_int(&mut r, 3));
        let b = Matrix::from_fn(inner, cols, |_, _| small_int(&mut r, 3));
        let m = a.matmul(&b);
        let exact = m.rank();
        prop_assert_eq!(exact, svd::rank(&m.map(Field::to_c64), 1e-8));
        prop_assert_eq!(exact + m.nullspace().len(), cols);
    }

    #[test]
    fn rank_one_residual_vanishes_exactly_on_binomial_tensors(
        seed in any::<u64>(),
        dims in prop::collection::vec(1usize..4, 2..4),
        outer in any::<bool>(),
    ) {
        let mut r = rng(seed);
        let t = if outer {
            let factors: Vec<Vec<Rational>> =
                dims.iter().map(|&d| (0..d).map(|_| small_int(&mut r, 2)).collect()).collect();
            Tensor::outer(&factors)
        } else {
            let n: usize = dims.iter().product();
            Tensor::from_vec(dims.clone(), (0..n).map(|_| small_int(&mut r, 1)).collect()).unwrap()
        };
        prop_assume!(!t.is_zero());
        let res = residual_rank_one(&t).unwrap();
        prop_assert_eq!(res == 0.0, binomials_vanish(&t));
    }

    #[test]
    fn hyperdeterminant_is_relatively_invariant(seed in any::<u64>(), which in 0usize..3) {
        let k = P2_FORMATS[which];
        let a = random_tensor(k, seed, 3);
        let det = hyperdet_p2(&a).unwrap();
        let mut r = rng(seed ^ 0x5eed);
        let n = det_degree(k);
        // Diagonal scalings with nonzero integer entries.
        let mats: Vec<Matrix<Rational>> = k
            .iter()
            .map(|&ki| {
                let d: Vec<Rational> = (0..=ki).map(|_| int(r.gen_range(1..=3) * if r.gen() { 1 } else { -1 })).collect();
                Matrix::diagonal(&d)
            })
            .collect();
        let factor = mats.iter().zip(k).fold(int(1), |acc, (m, &ki)| {
            let e = (n / (ki + 1)) as i32;
            acc * num_traits::pow::Pow::pow(m.det(), e)
        });
        let b = a.act(&GroupElement::new(mats).unwrap()).unwrap();
        prop_assert_eq!(hyperdet_p2(&b).unwrap(), factor * det.clone());
        let g = random_group_element(a.format(), &mut r);
        prop_assert_eq!(hyperdet_p2(&a.act(&g).unwrap()).unwrap().abs(), det.abs());
    }

    #[test]
    fn hyperdeterminant_vanishes_on_a_zero_slice(seed in any::<u64>(), which in 0usize..3, slice in 0usize..5) {
        let k = P2_FORMATS[which];
        let mut a = random_tensor(k, seed, 5);
        let i0 = slice % (k[0] + 1);
        for idx in multi_indices(&a.format().dims()) {
            if idx[0] == i0 {
                a.set(&idx, Rational::zero());
            }
        }
        prop_assert!(hyperdet_p2(&a).unwrap().is_zero());
    }

    #[test]
    fn strong_hyperplanes_are_equivariant(seed in any::<u64>(), t in -6i64..6, which in 0usize..3) {
        let k: &[usize] = [&[3usize, 1, 2][..], &[4, 2, 2], &[3, 1, 1, 1]][which];
        let a = build_identity::<Rational>(&fmt(k));
        let mut r = rng(seed);
        let g = random_group_element(a.format(), &mut r);
        let b = a.act(&g).unwrap();
        let g0_inv_t = g.matrices()[0].inverse().unwrap().transpose();
        let xi = moment_vector(&int(t), k[0]);
        let h = is_strong(&a, &xi).expect("identity moment vectors are strong");
        let h2 = is_strong(&b, &g0_inv_t.mul_vec(&xi)).expect("transported covector is strong");
        // Witnesses move by g_1, ..., g_p.
        let w = h.witnesses_exact.unwrap();
        let w2 = h2.witnesses_exact.unwrap();
        for (s, (v, v2)) in w.iter().zip(&w2).enumerate() {
            let moved = g.matrices()[s + 1].mul_vec(v);
            let scale = moved.iter().zip(v2).find(|(x, _)| !x.is_zero()).map(|(x, y)| y.clone() / x.clone()).unwrap();
            prop_assert_eq!(moved.iter().map(|x| x.clone() * scale.clone()).collect::<Vec<_>>(), v2.clone());
        }
        // A covector that is not strong stays not strong.
        let mut off = vec![Rational::zero(); k[0] + 1];
        off[1] = int(1);
        off[k[0] - 1] = int(1);
        prop_assert_eq!(is_strong(&a, &off).is_some(), is_strong(&b, &g0_inv_t.mul_vec(&off)).is_some());
    }

    #[test]
    fn identity_slices_at_moment_vectors_are_products(num in -20i64..20, den in 1i64..7, which in 0usize..4) {
        let k: &[usize] = [&[2usize, 1, 1][..], &[3, 1, 2], &[3, 1, 1, 1], &[4, 1, 1, 2]][which];
        let t = Rational::new(num.into(), den.into());
        let a = build_identity::<Rational>(&fmt(k));
        let slice = a.contract0(&moment_vector(&t, k[0])).unwrap();
        let factors: Vec<Vec<Rational>> = k[1..].iter().map(|&ki| moment_vector(&t, ki)).collect();
        prop_assert_eq!(slice, Tensor::outer(&factors));
    }

    #[test]
    fn stabilizer_dimension_and_generators_transport(seed in any::<u64>(), which in 0usize..4) {
        let (kind, k): (FixtureKind, &[usize]) = [
            (FixtureKind::Identity, &[3usize, 1, 2][..]),
            (FixtureKind::Diagonal, &[4, 2, 2]),
            (FixtureKind::Random, &[3, 1, 2]),
            (FixtureKind::Identity, &[3, 1, 1, 1]),
        ][which];
        let a = fixture(kind, k, seed % 16);
        let gens = stab_algebra(&a).unwrap();
        for x in &gens {
            prop_assert!(linearized_action(&a, &x.mats).unwrap().is_zero());
            prop_assert!(x.mats.iter().all(|m| m.trace().is_zero()));
        }
        let mut r = rng(seed);
        let g = random_group_element(a.format(), &mut r);
        let b = a.act(&g).unwrap();
        prop_assert_eq!(stab_algebra(&b).unwrap().len(), gens.len());
        let ginv = g.inverse().unwrap();
        for x in &gens {
            let conj: Vec<Matrix<Rational>> = x
                .mats
                .iter()
                .zip(g.matrices().iter().zip(ginv.matrices()))
                .map(|(m, (gi, gi_inv))| gi.matmul(m).matmul(gi_inv))
                .collect();
            prop_assert!(linearized_action(&b, &conj).unwrap().is_zero());
        }
    }
}

#[test]
fn identity_stabilizer_is_closed_under_the_bracket() {
    for k in [&[2usize, 1, 1][..], &[3, 1, 2], &[3, 1, 1, 1], &[4, 2, 2]] {
        let a = build_identity::<Rational>(&fmt(k));
        let gens = stab_algebra(&a).unwrap();
        assert_eq!(gens.len(), 3);
        for x in &gens {
            for y in &gens {
                let z: StabGenerator<Rational> = x.bracket(y);
                assert!(linearized_action(&a, &z.mats).unwrap().is_zero(), "{k:?}");
            }
        }
    }
}

#[test]
fn strong_detections_are_weak_in_every_slot() {
    for (k, nodes) in [
        (&[3usize, 1, 1, 1][..], vec![0, 1, 3, 7]),
        (&[4, 1, 1, 2], vec![-2, 0, 1, 5, 6]),
        (&[3, 1, 2], vec![1, 2, 4, 8]),
    ] {
        let nodes = NodeFamily::new(nodes.into_iter().map(int).collect()).unwrap();
        let a = make_vandermonde(&fmt(k), &nodes).unwrap();
        let opts = DetectOptions {
            restarts: 64,
            ..Default::default()
        };
        let report = detect_strong(&a, &opts).unwrap();
        assert!(!report.items.is_empty());
        for h in report.items.iter().filter_map(|h| h.xi_exact.as_ref()) {
            for j in 1..k.len() {
                assert!(is_weak(&a, h, j).is_some(), "{k:?} slot {j}");
            }
        }
    }
}

#[test]
fn elementary_transformations_keep_boundary_format_and_nondegeneracy() {
    for k in [&[3usize, 1, 2][..], &[4, 2, 2], &[4, 1, 3]] {
        let a = build_identity::<Rational>(&fmt(k));
        for t in [-1, 2, 5] {
            let xi = moment_vector(&int(t), k[0]);
            for j in 1..k.len() {
                let tr = elementary_transform(&a, &xi, j, V0Rule::default()).unwrap();
                let kk = tr.tensor.format().k().to_vec();
                assert_eq!(kk[0], kk[1..].iter().sum::<usize>());
                let mut expect = k.to_vec();
                expect[0] -= 1;
                expect[j] -= 1;
                assert_eq!(kk, expect);
                if kk.iter().all(|&x| x >= 1) {
                    assert!(
                        !hyperdet_p2(&tr.tensor).unwrap().is_zero(),
                        "{k:?} t={t} slot {j}"
                    );
                }
            }
        }
    }
}

#[test]
fn fixtures_are_reproducible_per_seed() {
    for kind in FixtureKind::ALL {
        for k in [&[3usize, 1, 2][..], &[4, 2, 2]] {
            let spec = FixtureSpec::new(kind, fmt(k), 42);
            match (generate(&spec), generate(&spec)) {
                (Ok(a), Ok(b)) => {
                    assert_eq!(a.tensor, b.tensor, "{}", kind.name());
                    assert_eq!(a.expected, b.expected, "{}", kind.name());
                }
                (Err(_), Err(_)) => {}
                _ => panic!("{}: seed gave different outcomes", kind.name()),
            }
        }
    }
}

#[test]
fn unimodular_sampling_has_determinant_one() {
    let mut r = rng(3);
    for n in 1..6 {
        assert_eq!(random_unimodular(n, 4, &mut r).det(), int(1));
    }
    let f = Format::new(vec![4, 1, 3]).unwrap();
    let g = random_group_element(&f, &mut r);
    assert!(g.matrices().iter().all(|m| m.det() == int(1)));
}
