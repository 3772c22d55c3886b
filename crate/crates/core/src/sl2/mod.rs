//! `SL(2)` acting on binary forms, and the tensors it fixes.
//!
//! `S^k U` has basis `e_m = u_0^(k-m) u_1^m`, `m = 0..=k`. Slot 0 carries the
//! plain representation `ρ_{k_0}`; slots `i >= 1` carry `ρ_{k_i}^{-T}`, so that
//! the multiplication map `S^{k_1}U ⊗ ... ⊗ S^{k_p}U → S^{k_0}U`, read as a
//! tensor, is invariant.

pub mod canonical;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::poly::Poly;
use crate::scalar::{Field, Rational, DEFAULT_RTOL};
use crate::tensor::{multi_indices, BoundaryTensor, Format, GroupElement};

pub use canonical::{canonicalize_identity, Canonicalization, Route};

fn require_2x2<T>(g: &Matrix<T>) -> Result<()> {
    if g.rows() != 2 || g.cols() != 2 {
        return Err(Error::Shape(format!(
            "expected a 2x2 matrix, got {}x{}",
            g.rows(),
            g.cols()
        )));
    }
    Ok(())
}

/// `ρ_k(g)`: column `m` holds the coefficients of `(g u_0)^(k-m) (g u_1)^m`.
pub fn sym_power_rep<T: Field>(g: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    require_2x2(g)?;
    // g u_0 = a u_0 + c u_1 and g u_1 = b u_0 + d u_1; track powers of u_1.
    let gu0 = Poly::new(vec![g[(0, 0)].clone(), g[(1, 0)].clone()]);
    let gu1 = Poly::new(vec![g[(0, 1)].clone(), g[(1, 1)].clone()]);
    let pow = |p: &Poly<T>, n: usize| (0..n).fold(Poly::new(vec![T::one()]), |acc, _| acc.mul(p));
    let mut out = Matrix::zeros(k + 1, k + 1);
    for m in 0..=k {
        let col = pow(&gu0, k - m).mul(&pow(&gu1, m));
        for (r, c) in col.coeffs().iter().enumerate() {
            out[(r, m)] = c.clone();
        }
    }
    Ok(out)
}

/// Derivative `dρ_k(x)` of [`sym_power_rep`] at the identity, for `x ∈ gl(2)`.
pub fn sym_power_algebra<T: Field>(x: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    require_2x2(x)?;
    let mut out = Matrix::zeros(k + 1, k + 1);
    for m in 0..=k {
        let a = T::from_i64((k - m) as i64);
        let b = T::from_i64(m as i64);
        out[(m, m)] = a.clone() * x[(0, 0)].clone() + b.clone() * x[(1, 1)].clone();
        if m < k {
            out[(m + 1, m)] = a * x[(1, 0)].clone();
        }
        if m > 0 {
            out[(m - 1, m)] = b * x[(0, 1)].clone();
        }
    }
    Ok(out)
}

/// The standard basis `(h, e, f)` of `sl(2)`.
pub fn sl2_basis<T: Field>() -> [Matrix<T>; 3] {
    let (o, z) = (T::one(), T::zero());
    [
        Matrix::diagonal(&[o.clone(), -o.clone()]),
        Matrix::from_fn(2, 2, |i, j| {
            if (i, j) == (0, 1) {
                o.clone()
            } else {
                z.clone()
            }
        }),
        Matrix::from_fn(2, 2, |i, j| {
            if (i, j) == (1, 0) {
                o.clone()
            } else {
                z.clone()
            }
        }),
    ]
}

/// The identity tensor: `a_{i_0 ... i_p} = 1` exactly when `i_0 = i_1 + ... + i_p`.
pub fn build_identity<T: Field>(format: &Format) -> BoundaryTensor<T> {
    BoundaryTensor::from_fn(format.clone(), |idx| {
        if idx[0] == idx[1..].iter().sum::<usize>() {
            T::one()
        } else {
            T::zero()
        }
    })
}

/// The embedding `σ : SL(2) → SL(V_0) × ... × SL(V_p)` for one format.
#[derive(Clone, Debug)]
pub struct SL2Embedding {
    format: Format,
}

impl SL2Embedding {
    pub fn new(format: Format) -> Self {
        Self { format }
    }

    pub fn format(&self) -> &Format {
        &self.format
    }

    /// `σ(g) = (ρ_{k_0}(g), ρ_{k_1}(g)^{-T}, ..., ρ_{k_p}(g)^{-T})`.
    pub fn group<T: Field>(&self, g: &Matrix<T>) -> Result<GroupElement<T>> {
        require_2x2(g)?;
        if !(g.det() - T::one()).is_negligible(DEFAULT_RTOL) {
            return Err(Error::Precondition("embed needs det g = 1".into()));
        }
        let ginv = g.inverse().ok_or(Error::Singular { slot: 0 })?;
        let mut mats = vec![sym_power_rep(g, self.format.k()[0])?];
        for &k in &self.format.k()[1..] {
            mats.push(sym_power_rep(&ginv, k)?.transpose());
        }
        GroupElement::special(mats)
    }

    /// `dσ(x) = (dρ_{k_0}(x), -dρ_{k_1}(x)^T, ..., -dρ_{k_p}(x)^T)`.
    pub fn algebra<T: Field>(&self, x: &Matrix<T>) -> Result<Vec<Matrix<T>>> {
        let mut out = vec![sym_power_algebra(x, self.format.k()[0])?];
        for &k in &self.format.k()[1..] {
            out.push(sym_power_algebra(x, k)?.transpose().scale(&-T::one()));
        }
        Ok(out)
    }
}

pub fn embed<T: Field>(g: &Matrix<T>, format: &Format) -> Result<GroupElement<T>> {
    SL2Embedding::new(format.clone()).group(g)
}

/// Pairwise distinct nodes `t_0, ..., t_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeFamily<T> {
    nodes: Vec<T>,
}

impl<T: Field> NodeFamily<T> {
    pub fn new(nodes: Vec<T>) -> Result<Self> {
        for i in 0..nodes.len() {
            for j in 0..i {
                let scale = nodes[i].modulus().max(nodes[j].modulus()).max(1.0);
                if (nodes[i].clone() - nodes[j].clone()).is_negligible(1e-12 * scale) {
                    return Err(Error::Precondition(format!("nodes {j} and {i} coincide")));
                }
            }
        }
        Ok(Self { nodes })
    }

    /// `0, 1, ..., n - 1`.
    pub fn consecutive(n: usize) -> Self {
        Self {
            nodes: (0..n as i64).map(T::from_i64).collect(),
        }
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(1, t, t^2, ..., t^k)`.
pub fn moment_vector<T: Field>(t: &T, k: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = T::one();
    for _ in 0..=k {
        out.push(acc.clone());
        acc = acc * t.clone();
    }
    out
}

/// `W[s][i] = t_s^i`.
pub fn vandermonde_matrix<T: Field>(nodes: &NodeFamily<T>) -> Matrix<T> {
    let n = nodes.len();
    let rows = nodes
        .nodes()
        .iter()
        .map(|t| moment_vector(t, n - 1))
        .collect();
    Matrix::from_rows(rows).expect("rows of equal length")
}

/// `A = sum_s e_s ⊗ ν_{k_1}(t_s) ⊗ ... ⊗ ν_{k_p}(t_s)` with `ν_k(t) = (1, t, ..., t^k)`.
pub fn make_vandermonde<T: Field>(
    format: &Format,
    nodes: &NodeFamily<T>,
) -> Result<BoundaryTensor<T>> {
    let k0 = format.k()[0];
    if nodes.len() != k0 + 1 {
        return Err(Error::Precondition(format!(
            "format {format} needs {} nodes, got {}",
            k0 + 1,
            nodes.len()
        )));
    }
    let dims = format.dims();
    let mut out = BoundaryTensor::zeros(format.clone());
    for (s, t) in nodes.nodes().iter().enumerate() {
        let powers = moment_vector(t, k0);
        for tail in multi_indices(&dims[1..]) {
            let deg: usize = tail.iter().sum();
            let mut idx = vec![s];
            idx.extend_from_slice(&tail);
            out.set(&idx, powers[deg].clone());
        }
    }
    Ok(out)
}

/// Random element of `SL(2, Q)` as a product of elementary shears with small
/// rational parameters.
pub fn random_sl2(rng: &mut impl Rng) -> Matrix<Rational> {
    crate::fixtures::random_unimodular(2, 4, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rational};
    use num_traits::Zero;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| int(x)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn fmt(k: &[usize]) -> Format {
        Format::new(k.to_vec()).unwrap()
    }

    #[test]
    fn rho_one_is_the_matrix_itself() {
        let g = q(&[&[2, 3], &[5, 7]]);
        assert_eq!(sym_power_rep(&g, 1).unwrap(), g);
    }

    #[test]
    fn rho_two_of_a_shear() {
        let g = q(&[&[1, 1], &[0, 1]]);
        assert_eq!(
            sym_power_rep(&g, 2).unwrap(),
            q(&[&[1, 1, 1], &[0, 1, 2], &[0, 0, 1]])
        );
    }

    #[test]
    fn rho_two_of_a_torus_element() {
        let t = rational(3, 2);
        let g = Matrix::diagonal(&[t.clone(), t.recip()]);
        let want = Matrix::diagonal(&[t.clone() * t.clone(), int(1), (t.clone() * t).recip()]);
        assert_eq!(sym_power_rep(&g, 2).unwrap(), want);
    }

    #[test]
    fn algebra_matches_weights() {
        let [h, e, f] = sl2_basis::<Rational>();
        let k = 4;
        let dh = sym_power_algebra(&h, k).unwrap();
        let de = sym_power_algebra(&e, k).unwrap();
        let df = sym_power_algebra(&f, k).unwrap();
        for m in 0..=k {
            assert_eq!(dh[(m, m)], int(k as i64 - 2 * m as i64));
            if m > 0 {
                assert_eq!(de[(m - 1, m)], int(m as i64));
            }
            if m < k {
                assert_eq!(df[(m + 1, m)], int((k - m) as i64));
            }
        }
        // It is a Lie algebra map: [dρ(e), dρ(f)] = dρ(h).
        assert_eq!(de.bracket(&df), dh);
    }

    #[test]
    fn identity_support_small_formats() {
        let i = build_identity::<Rational>(&fmt(&[2, 1, 1]));
        let ones: Vec<Vec<usize>> = multi_indices(&[3, 2, 2])
            .filter(|idx| !i.get(idx).is_zero())
            .collect();
        assert_eq!(
            ones,
            vec![vec![0, 0, 0], vec![1, 0, 1], vec![1, 1, 0], vec![2, 1, 1]]
        );

        let i = build_identity::<Rational>(&fmt(&[3, 1, 2]));
        let count = i.entries().iter().filter(|x| !x.is_zero()).count();
        assert_eq!(count, 6);
        for idx in [
            [0, 0, 0],
            [1, 0, 1],
            [1, 1, 0],
            [2, 0, 2],
            [2, 1, 1],
            [3, 1, 2],
        ] {
            assert_eq!(i.get(&idx), &int(1));
        }
    }

    #[test]
    fn identity_needs_p_at_least_two() {
        assert!(Format::new(vec![2, 2]).is_err());
    }

    #[test]
    fn embedding_fixes_the_identity_on_2_1_1() {
        let f = fmt(&[2, 1, 1]);
        let i = build_identity::<Rational>(&f);
        let shear = q(&[&[1, 1], &[0, 1]]);
        assert_eq!(i.act(&embed(&shear, &f).unwrap()).unwrap(), i);
        let t = rational(2, 5);
        let torus = Matrix::diagonal(&[t.clone(), t.recip()]);
        assert_eq!(i.act(&embed(&torus, &f).unwrap()).unwrap(), i);
        assert_eq!(
            embed(&Matrix::<Rational>::identity(2), &f).unwrap(),
            GroupElement::identity(&f)
        );
    }

    #[test]
    fn embed_rejects_non_special() {
        let f = fmt(&[2, 1, 1]);
        assert!(embed(&q(&[&[2, 0], &[0, 1]]), &f).is_err());
    }

    #[test]
    fn infinitesimal_embedding_annihilates_identity() {
        let f = fmt(&[4, 1, 1, 2]);
        let i = build_identity::<Rational>(&f);
        let emb = SL2Embedding::new(f.clone());
        for x in sl2_basis::<Rational>() {
            let mats = emb.algebra(&x).unwrap();
            let mut acc = crate::Tensor::zeros(f.dims());
            for (slot, m) in mats.iter().enumerate() {
                acc = acc.add(i.act_slot(slot, m).unwrap().tensor()).unwrap();
            }
            assert!(acc.is_zero());
        }
    }

    #[test]
    fn vandermonde_slices_are_moment_products() {
        let f = fmt(&[2, 1, 1]);
        let nodes = NodeFamily::new(vec![int(0), int(1), int(2)]).unwrap();
        let a = make_vandermonde(&f, &nodes).unwrap();
        let slice = a.contract0(&[int(0), int(0), int(1)]).unwrap();
        let want = crate::Tensor::outer(&[vec![int(1), int(2)], vec![int(1), int(2)]]);
        assert_eq!(slice, want);
        for s in 0..3 {
            let mut xi = vec![int(0); 3];
            xi[s] = int(1);
            assert_eq!(
                crate::tensor::residual_rank_one(&a.contract0(&xi).unwrap()).unwrap(),
                0.0
            );
        }
    }

    #[test]
    fn repeated_nodes_rejected() {
        assert!(NodeFamily::new(vec![int(0), int(1), int(1)]).is_err());
    }

    #[test]
    fn vandermonde_is_the_identity_moved_in_slot_zero() {
        let f = fmt(&[3, 1, 2]);
        let nodes = NodeFamily::new(vec![int(-1), int(0), rational(1, 2), int(3)]).unwrap();
        let w = vandermonde_matrix(&nodes);
        let via_action = build_identity::<Rational>(&f).act_slot(0, &w).unwrap();
        assert_eq!(make_vandermonde(&f, &nodes).unwrap(), via_action);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn sigma_is_a_homomorphism_fixing_the_identity(seed in any::<u64>(), which in 0usize..4) {
            let formats = [[2usize, 1, 1].as_slice(), &[3, 1, 2], &[3, 1, 1, 1], &[4, 2, 2]];
            let f = fmt(formats[which]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_sl2(&mut rng);
            let h = random_sl2(&mut rng);
            let sg = embed(&g, &f).unwrap();
            let sh = embed(&h, &f).unwrap();
            prop_assert_eq!(sg.compose(&sh).unwrap(), embed(&g.matmul(&h), &f).unwrap());
            let i = build_identity::<Rational>(&f);
            prop_assert_eq!(i.act(&sg).unwrap(), i);
        }

        #[test]
        fn rho_is_multiplicative_with_det_power(seed in any::<u64>(), k in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = random_sl2(&mut rng).scale(&int(2));
            let h = random_sl2(&mut rng);
            let rg = sym_power_rep(&g, k).unwrap();
            prop_assert_eq!(rg.matmul(&sym_power_rep(&h, k).unwrap()), sym_power_rep(&g.matmul(&h), k).unwrap());
            let want = num_traits::pow(g.det(), k * (k + 1) / 2);
            prop_assert_eq!(rg.det(), want);
        }
    }
}
