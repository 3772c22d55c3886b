//! Complex Gauss–Newton with minimum-norm steps, and small helpers for the
//! multistart searches.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Deterministic generator for restart `index` of a search seeded by `seed`.
pub fn restart_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

/// Uniform random point on the unit sphere of `C^n`.
pub fn random_unit(n: usize, rng: &mut impl Rng) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let nrm = norm(&v);
        if nrm > 1e-8 {
            return v.into_iter().map(|z| z / nrm).collect();
        }
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
}

/// Hermitian inner product `<a, b> = sum conj(a_i) b_i`.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `sqrt(1 - |<a,b>|² / (|a|² |b|²))`, the sine of the angle between the
/// complex lines through `a` and `b`.
pub fn projective_distance(a: &[C64], b: &[C64]) -> f64 {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    // Norm of the part of b orthogonal to a; stabler than sqrt(1 - cos²).
    let c = inner(a, b) / (na * na);
    let orth: Vec<C64> = a.iter().zip(b).map(|(x, y)| y - x * c).collect();
    (norm(&orth) / nb).min(1.0)
}

/// Scales so that the first coordinate with modulus at least `1e-6 · max`
/// equals one.
pub fn normalize_first(v: &[C64]) -> Vec<C64> {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() >= 1e-6 * max && max > 0.0) {
        Some(&p) => v.iter().map(|z| z / p).collect(),
        None => v.to_vec(),
    }
}

/// Singular values (descending) with the matching left singular vectors.
pub fn svd_left(m: &CMatrix) -> Vec<(f64, CVector)> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let mut out: Vec<(f64, CVector)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, &s)| (s, u.column(i).into_owned()))
        .collect();
    out.sort_by(|a, b| b.0.total_cmp(&a.0));
    out
}

/// Orthonormal basis of the numerical null space of `m` (singular values at
/// most `rtol · σ_max`).
pub fn null_space(m: &CMatrix, rtol: f64) -> Vec<CVector> {
    let (r, c) = m.shape();
    // The thin SVD of a wide matrix omits part of the row space; pad it square.
    let padded = if r < c {
        let mut p = CMatrix::zeros(c, c);
        p.rows_mut(0, r).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= rtol * smax)
        .map(|i| vt.row(i).adjoint().into_owned())
        .collect()
}

/// Minimum-norm least-squares solution of `j x = r`, discarding singular
/// values below `rcond · σ_max`.
pub fn lstsq(j: &CMatrix, r: &CVector, rcond: f64) -> CVector {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    svd.solve(r, rcond * smax.max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| CVector::zeros(j.ncols()))
}

/// A least-squares problem `min |F(x)|` with a normalization applied after
/// every accepted step.
pub trait Residual {
    fn eval(&self, x: &[C64]) -> (CVector, CMatrix);

    fn residual(&self, x: &[C64]) -> CVector {
        self.eval(x).0
    }

    fn normalize(&self, _x: &mut [C64]) {}
}

#[derive(Clone, Copy, Debug)]
pub struct GnOptions {
    pub max_iter: usize,
    /// Stop once `|F| <= ftol`.
    pub ftol: f64,
    /// Stop once a full step is shorter than `xtol · |x|`.
    pub xtol: f64,
}

impl Default for GnOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            ftol: 1e-14,
            xtol: 1e-15,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GnResult {
    pub x: Vec<C64>,
    pub norm: f64,
    pub iterations: usize,
}

/// Gauss–Newton with halving line search.
pub fn gauss_newton(p: &impl Residual, x0: Vec<C64>, opts: &GnOptions) -> GnResult {
    let mut x = x0;
    p.normalize(&mut x);
    let (mut r, mut j) = p.eval(&x);
    let mut fnorm = r.norm();
    let mut it = 0;
    while it < opts.max_iter && fnorm > opts.ftol {
        it += 1;
        let step = lstsq(&j, &(-&r), 1e-12);
        let xnorm = norm(&x).max(1.0);
        if step.norm() <= opts.xtol * xnorm {
            break;
        }
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let mut y: Vec<C64> = x
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a + d * alpha)
                .collect();
            p.normalize(&mut y);
            let (ry, jy) = p.eval(&y);
            let fy = ry.norm();
            if fy < fnorm {
                accepted = Some((y, ry, jy, fy));
                break;
            }
            alpha *= 0.5;
        }
        match accepted {
            Some((y, ry, jy, fy)) => {
                x = y;
                r = ry;
                j = jy;
                fnorm = fy;
            }
            None => break,
        }
    }
    GnResult {
        x,
        norm: fnorm,
        iterations: it,
    }
}
