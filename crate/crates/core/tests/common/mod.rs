//! Independent oracles shared by the integration tests. They only use the
//! library for tensor storage and slicing, never for the quantity checked.
#![allow(dead_code)]

use bfstab_core::fixtures::{generate, FixtureKind, FixtureSpec};
use bfstab_core::scalar::int;
use bfstab_core::{BoundaryTensor, Format, Rational, C64};
use num_traits::{One, Zero};

pub fn fmt(k: &[usize]) -> Format {
    Format::new(k.to_vec()).unwrap()
}

pub fn fixture(kind: FixtureKind, k: &[usize], seed: u64) -> BoundaryTensor<Rational> {
    generate(&FixtureSpec::new(kind, fmt(k), seed))
        .unwrap()
        .tensor
}

/// Determinant by cofactor expansion along the first row. Fine for the
/// tiny matrices the oracles build.
pub fn det_cofactor(m: &[Vec<Rational>]) -> Rational {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Rational::zero();
    for c in 0..n {
        if m[0][c].is_zero() {
            continue;
        }
        let minor: Vec<Vec<Rational>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != c)
                    .map(|(_, x)| x.clone())
                    .collect()
            })
            .collect();
        let term = m[0][c].clone() * det_cofactor(&minor);
        acc = if c % 2 == 0 { acc + term } else { acc - term };
    }
    acc
}

/// Coefficients (constant first) of the polynomial of degree at most `n`
/// through `(x_i, y_i)`, by Newton divided differences.
pub fn interpolate(xs: &[Rational], ys: &[Rational]) -> Vec<Rational> {
    let n = xs.len();
    let mut dd = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i].clone() - dd[i - 1].clone()) / (xs[i].clone() - xs[i - level].clone());
        }
    }
    // Expand the Newton form.
    let mut coeffs = vec![Rational::zero(); n];
    for i in (0..n).rev() {
        // coeffs = coeffs * (x - xs[i]) + dd[i]
        let mut next = vec![Rational::zero(); n];
        for (d, c) in coeffs.iter().enumerate() {
            if d + 1 < n {
                next[d + 1] = next[d + 1].clone() + c.clone();
            }
            next[d] = next[d].clone() - c.clone() * xs[i].clone();
        }
        next[0] = next[0].clone() + dd[i].clone();
        coeffs = next;
    }
    coeffs
}

/// All complex roots of `sum c_i x^i` (constant first, nonzero leading
/// coefficient) by Durand-Kerner iteration, polished with Newton steps.
pub fn durand_kerner(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[n];
    let monic: Vec<C64> = coeffs.iter().map(|c| c / lead).collect();
    let eval = |x: C64| {
        monic
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, c| acc * x + c)
    };
    let deriv = |x: C64| {
        (1..=n)
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, i| acc * x + monic[i] * i as f64)
    };
    let radius = 1.0 + monic[..n].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut z: Vec<C64> = (0..n)
        .map(|i| {
            C64::from_polar(
                radius * 0.9,
                0.4 + 2.0 * std::f64::consts::PI * i as f64 / n as f64,
            )
        })
        .collect();
    for _ in 0..2000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval(z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    for r in &mut z {
        for _ in 0..3 {
            let d = deriv(*r);
            if d.norm() > 0.0 {
                *r -= eval(*r) / d;
            }
        }
    }
    z
}

fn to_c(q: &Rational) -> C64 {
    C64::new(bfstab_core::scalar::rational_to_f64(q), 0.0)
}

/// Null vector of a square complex matrix: the right singular vector of the
/// smallest singular value.
fn null_vector(m: &[Vec<C64>]) -> Vec<C64> {
    let n = m.len();
    let mat = nalgebra::DMatrix::from_fn(n, n, |i, j| m[i][j]);
    let svd = mat.svd(false, true);
    let vt = svd.v_t.unwrap();
    let (imin, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    vt.row(imin).iter().map(|z| z.conj()).collect()
}

/// Strong jumping covectors of a `(k; 1, k - 1)` tensor on the hyperplane
/// `<c, ξ> = 0`, by elimination.
///
/// On the hyperplane, `ξ = sum_a u_a p_a`. The `2 × k` slice is rank one
/// exactly when some `w ∈ P^1` has `wᵀ A·ξ = 0`. For fixed `w` that is a
/// square linear system `N(w) u = 0`, so `w` runs over the roots of the
/// degree-`k` resultant `det N(w)`.
pub fn strong_on_section(a: &BoundaryTensor<Rational>, c: &[Rational]) -> Vec<Vec<C64>> {
    let k = a.format().k();
    assert!(
        k.len() == 3 && k[1] == 1 && k[2] == k[0] - 1,
        "oracle needs format (k;1,k-1)"
    );
    let d0 = k[0] + 1;
    let pivot = c
        .iter()
        .position(|x| !x.is_zero())
        .expect("nonzero section");
    // Basis of ker c.
    let basis: Vec<Vec<Rational>> = (0..d0)
        .filter(|&i| i != pivot)
        .map(|i| {
            let mut p = vec![Rational::zero(); d0];
            p[i] = Rational::one();
            p[pivot] = -(c[i].clone() / c[pivot].clone());
            p
        })
        .collect();
    let n = basis.len();
    // Slices M_a[r][col] = sum_i p_a[i] a[i][r][col].
    let slices: Vec<Vec<Vec<Rational>>> = basis
        .iter()
        .map(|p| {
            (0..2)
                .map(|r| {
                    (0..n)
                        .map(|col| {
                            (0..d0).fold(Rational::zero(), |acc, i| {
                                acc + p[i].clone() * a.get(&[i, r, col]).clone()
                            })
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    // N(w)[col][a] = w_0 M_a[0][col] + w_1 M_a[1][col].
    let n_of = |w0: &Rational, w1: &Rational| -> Vec<Vec<Rational>> {
        (0..n)
            .map(|col| {
                (0..n)
                    .map(|ai| {
                        w0.clone() * slices[ai][0][col].clone()
                            + w1.clone() * slices[ai][1][col].clone()
                    })
                    .collect()
            })
            .collect()
    };
    let xs: Vec<Rational> = (0..=n as i64).map(int).collect();
    let ys: Vec<Rational> = xs
        .iter()
        .map(|t| det_cofactor(&n_of(&Rational::one(), t)))
        .collect();
    let mut coeffs = interpolate(&xs, &ys);
    let mut roots_w: Vec<(C64, C64)> = Vec::new();
    while coeffs.last().is_some_and(|x| x.is_zero()) {
        coeffs.pop();
        // Degree drop: a root at w = (0, 1).
        roots_w.push((C64::new(0.0, 0.0), C64::new(1.0, 0.0)));
    }
    assert!(
        coeffs.len() > 1 || !roots_w.is_empty(),
        "resultant vanishes identically"
    );
    if coeffs.len() > 1 {
        let cc: Vec<C64> = coeffs.iter().map(to_c).collect();
        for t in durand_kerner(&cc) {
            roots_w.push((C64::new(1.0, 0.0), t));
        }
    }
    roots_w
        .into_iter()
        .map(|(w0, w1)| {
            let nw: Vec<Vec<C64>> = (0..n)
                .map(|col| {
                    (0..n)
                        .map(|ai| w0 * to_c(&slices[ai][0][col]) + w1 * to_c(&slices[ai][1][col]))
                        .collect()
                })
                .collect();
            let u = null_vector(&nw);
            (0..d0)
                .map(|i| {
                    (0..n).fold(C64::new(0.0, 0.0), |acc, ai| {
                        acc + u[ai] * to_c(&basis[ai][i])
                    })
                })
                .collect()
        })
        .collect()
}

/// The weights `-k, -k + 2, ..., k`.
pub fn progression(k: usize) -> Vec<i64> {
    (0..=k as i64).map(|m| 2 * m - k as i64).collect()
}

pub fn sine_distance(a: &[C64], b: &[C64]) -> f64 {
    let dot: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    // Norm of the part of b orthogonal to a, over |b|.
    let proj: Vec<C64> = a.iter().map(|x| x * (dot / (na * na))).collect();
    let orth: f64 = b
        .iter()
        .zip(&proj)
        .map(|(y, p)| (y - p).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (orth / nb).min(1.0)
}
