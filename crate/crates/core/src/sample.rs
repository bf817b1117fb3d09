//! Reproducible random samplers for rank strata.
//!
//! Every sampler draws Gaussian data from an explicit [`TtkRng`] and redraws
//! (at most [`MAX_REDRAWS`] times) whenever the available certificate for the
//! target stratum fails. Real 2×2×2 border rank 3 holds only a few percent of
//! Gaussian rank-3 sums and gets [`RARE_REDRAWS`].

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
pub use rand_xoshiro::SplitMix64 as TtkRng;

use crate::certify::{classify_222, is_rank_one, rank2_decompose, Class222};
use crate::error::{Error, Result};
use crate::linalg::det;
use crate::mrank::{mrank, MultilinearRank};
use crate::subspace::{GrassmannPoint, TuckerRep};
use crate::sym::{flattening_inertia, multiset_count, SymRankDecomposition, SymTensor};
use crate::tensor::{re, Field, Hypermatrix, Matrix, RankOneFactors, Vector, C64};
use crate::tolerance::TolerancePolicy;

pub const MAX_REDRAWS: usize = 100;
pub const RARE_REDRAWS: usize = 2000;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn rng_from_seed(seed: u64) -> TtkRng {
    TtkRng::seed_from_u64(seed)
}

/// Per-trial seed: one SplitMix64 output from `master XOR (index · γ)`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    TtkRng::seed_from_u64(master ^ index.wrapping_mul(GOLDEN_GAMMA)).next_u64()
}

pub fn gaussian(rng: &mut TtkRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_scalar(field: Field, rng: &mut TtkRng) -> C64 {
    match field {
        Field::Real => re(gaussian(rng)),
        Field::Complex => C64::new(gaussian(rng), gaussian(rng)),
    }
}

pub fn gaussian_vector(n: usize, field: Field, rng: &mut TtkRng) -> Vector {
    Vector::from_fn(n, |_, _| gaussian_scalar(field, rng))
}

pub fn unit_vector(n: usize, field: Field, rng: &mut TtkRng) -> Vector {
    loop {
        let v = gaussian_vector(n, field, rng);
        let norm = v.norm();
        if norm > 1e-8 {
            return v.unscale(norm);
        }
    }
}

/// Gaussian matrix, filled column by column.
pub fn gaussian_matrix(rows: usize, cols: usize, field: Field, rng: &mut TtkRng) -> Matrix {
    let mut m = Matrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = gaussian_scalar(field, rng);
        }
    }
    m
}

pub fn gaussian_tensor(shape: &[usize], field: Field, rng: &mut TtkRng) -> Hypermatrix {
    Hypermatrix::from_fn(shape, field, |_| gaussian_scalar(field, rng))
}

pub fn random_frame(n: usize, r: usize, field: Field, rng: &mut TtkRng) -> GrassmannPoint {
    loop {
        if let Ok(g) = GrassmannPoint::from_basis(&gaussian_matrix(n, r, field, rng)) {
            return g;
        }
    }
}

/// Random invertible matrix; over ℝ with `det_sign = Some(s)`, its determinant has sign `s`.
pub fn random_invertible(n: usize, field: Field, det_sign: Option<i8>, rng: &mut TtkRng) -> Matrix {
    loop {
        let mut m = gaussian_matrix(n, n, field, rng);
        let d = det(&m);
        if d.norm() < 1e-3 {
            continue;
        }
        if let (Field::Real, Some(s)) = (field, det_sign) {
            if (d.re > 0.0) != (s > 0) {
                for j in 0..n {
                    m[(0, j)] = -m[(0, j)];
                }
            }
        }
        return m;
    }
}

fn certified_mrank(a: &Hypermatrix, want: &[usize], tol: &TolerancePolicy) -> bool {
    match mrank(a, tol) {
        Ok(info) => info.ranks.0 == want && info.min_margin() >= tol.gap_min,
        Err(_) => false,
    }
}

/// Sum of `r` random rank-one terms, with its witness.
pub fn sample_rank_r(
    shape: &[usize],
    r: usize,
    field: Field,
    rng: &mut TtkRng,
    tol: &TolerancePolicy,
) -> Result<(Hypermatrix, Vec<RankOneFactors>)> {
    if r == 0 || shape.len() < 2 || shape.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter(format!(
            "rank {r} on shape {shape:?}"
        )));
    }
    let is_222 = shape == [2, 2, 2] && field == Field::Real;
    if is_222 && r > 3 {
        return Err(Error::InvalidParameter(
            "real 2x2x2 tensors have rank at most 3".into(),
        ));
    }
    let capped: Vec<usize> = shape.iter().map(|&n| n.min(r)).collect();
    let expected: Vec<usize> = (0..shape.len())
        .map(|i| {
            let others: usize = capped
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &c)| c)
                .product();
            capped[i].min(others)
        })
        .collect();
    let budget = if is_222 && r == 3 { RARE_REDRAWS } else { MAX_REDRAWS };
    for _ in 0..budget {
        let terms = (0..r)
            .map(|_| {
                let factors = shape.iter().map(|&n| gaussian_vector(n, field, rng)).collect();
                RankOneFactors::new(gaussian_scalar(field, rng), factors)
            })
            .collect::<Result<Vec<_>>>();
        let Ok(terms) = terms else { continue };
        let mut a = Hypermatrix::zeros(shape, field);
        for t in &terms {
            a.add_scaled(re(1.0), &t.to_tensor())?;
        }
        let ok = if r == 1 {
            is_rank_one(&a, tol).is_some()
        } else if is_222 {
            let want = if r == 2 { Class222::Rank2 } else { Class222::BorderRank3 };
            classify_222(&a, tol).map(|c| c.class == want).unwrap_or(false)
                && certified_mrank(&a, &expected, tol)
        } else {
            certified_mrank(&a, &expected, tol)
                && (r != 2 || shape.len() < 3 || rank2_decompose(&a, tol).is_ok())
        };
        if ok {
            return Ok((a, terms));
        }
    }
    Err(Error::SamplerExhausted(budget))
}

/// Random `Σ λ_k v_k^{⊗d}`; over ℝ with even `d` the first `signature`
/// coefficients are positive and the rest negative.
pub fn sample_sym_rank_r(
    n: usize,
    d: usize,
    r: usize,
    signature: usize,
    field: Field,
    rng: &mut TtkRng,
    tol: &TolerancePolicy,
) -> Result<(SymTensor, SymRankDecomposition)> {
    if r == 0 || n < 2 || d < 2 {
        return Err(Error::InvalidParameter(format!("sym rank {r}, n={n}, d={d}")));
    }
    let signed = field == Field::Real && d.is_multiple_of(2);
    if signed && signature > r {
        return Err(Error::InvalidParameter(format!(
            "signature {signature} exceeds rank {r}"
        )));
    }
    for _ in 0..MAX_REDRAWS {
        let terms: Vec<(C64, Vector)> = (0..r)
            .map(|k| {
                let v = unit_vector(n, field, rng);
                let g = gaussian_scalar(field, rng);
                let lambda = if signed {
                    re(if k < signature { g.re.abs() } else { -g.re.abs() })
                } else {
                    g
                };
                (lambda, v)
            })
            .collect();
        if terms.iter().any(|(l, _)| l.norm() < 1e-6) {
            continue;
        }
        let dec = SymRankDecomposition::new(d, field, terms)?;
        let s = dec.to_sym_tensor();
        let mut ok = true;
        if r <= n {
            ok &= certified_mrank(&s.embed(), &vec![r; d], tol);
        }
        if signed && r <= multiset_count(n, d / 2) {
            ok &= matches!(flattening_inertia(&s, tol),
                Ok((p, q, m)) if p == signature && q == r - signature && m >= tol.gap_min);
        }
        if ok {
            return Ok((s, dec));
        }
    }
    Err(Error::SamplerExhausted(MAX_REDRAWS))
}

/// Random Tucker tensor with Gaussian core and uniformly random frames.
pub fn sample_fixed_mrank(
    shape: &[usize],
    ranks: &[usize],
    field: Field,
    rng: &mut TtkRng,
    tol: &TolerancePolicy,
) -> Result<(Hypermatrix, TuckerRep)> {
    let m = MultilinearRank::new(ranks.to_vec())?;
    if !m.fits(shape) || ranks.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "multilinear rank {ranks:?} does not fit shape {shape:?}"
        )));
    }
    for _ in 0..MAX_REDRAWS {
        let core = gaussian_tensor(ranks, field, rng);
        let frames = shape
            .iter()
            .zip(ranks)
            .map(|(&n, &r)| random_frame(n, r, field, rng))
            .collect();
        let t = TuckerRep::new(frames, core)?;
        let a = t.expand();
        if certified_mrank(&a, ranks, tol) {
            return Ok((a, t));
        }
    }
    Err(Error::SamplerExhausted(MAX_REDRAWS))
}

/// Random symmetric tensor in `Sᵈ(U)` for a random `r`-dimensional `U ⊂ Fⁿ`.
pub fn sample_sym_fixed_mrank(
    n: usize,
    d: usize,
    r: usize,
    field: Field,
    rng: &mut TtkRng,
    tol: &TolerancePolicy,
) -> Result<(SymTensor, TuckerRep)> {
    if r == 0 || r > n || d < 2 {
        return Err(Error::InvalidParameter(format!(
            "symmetric multilinear rank {r} in dimension {n}, order {d}"
        )));
    }
    for _ in 0..MAX_REDRAWS {
        let packed = (0..multiset_count(r, d))
            .map(|_| gaussian_scalar(field, rng))
            .collect();
        let core = if r == 1 {
            Hypermatrix::new(vec![1; d], field, packed)?
        } else {
            SymTensor::new(r, d, field, packed)?.embed()
        };
        let u = random_frame(n, r, field, rng);
        let t = TuckerRep::new(vec![u; d], core)?;
        let a = t.expand();
        if certified_mrank(&a, &vec![r; d], tol) {
            let s = crate::sym::sym_extract(&a, &TolerancePolicy::default())?;
            return Ok((s, t));
        }
    }
    Err(Error::SamplerExhausted(MAX_REDRAWS))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a: Vec<u64> = (0..4).map(|i| trial_seed(7, i)).collect();
        let b: Vec<u64> = (0..4).map(|i| trial_seed(7, i)).collect();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        let x = gaussian(&mut rng_from_seed(1));
        assert_eq!(x, gaussian(&mut rng_from_seed(1)));
    }

    #[test]
    fn fixed_mrank_sample() {
        let tol = TolerancePolicy::default();
        let mut rng = rng_from_seed(4);
        let (a, t) = sample_fixed_mrank(&[3, 3, 3], &[2, 2, 2], Field::Real, &mut rng, &tol).unwrap();
        assert_eq!(mrank(&a, &tol).unwrap().ranks.0, vec![2, 2, 2]);
        assert!(a.rel_dist(&t.expand()).unwrap() < 1e-12);
        assert!(sample_fixed_mrank(&[3, 3, 3], &[5, 1, 1], Field::Real, &mut rng, &tol).is_err());
    }

    #[test]
    fn signature_sample_has_mixed_signs() {
        let tol = TolerancePolicy::default();
        let mut rng = rng_from_seed(9);
        let (_, dec) = sample_sym_rank_r(3, 4, 2, 1, Field::Real, &mut rng, &tol).unwrap();
        let pos = dec.terms.iter().filter(|(l, _)| l.re > 0.0).count();
        assert_eq!(pos, 1);
    }

    #[test]
    fn border_rank_three_sample() {
        let tol = TolerancePolicy::default();
        let mut rng = rng_from_seed(12);
        let (a, _) = sample_rank_r(&[2, 2, 2], 3, Field::Real, &mut rng, &tol).unwrap();
        assert_eq!(classify_222(&a, &tol).unwrap().class, Class222::BorderRank3);
    }

    #[test]
    fn sym_fixed_mrank_sample() {
        let tol = TolerancePolicy::default();
        let mut rng = rng_from_seed(13);
        let (s, t) = sample_sym_fixed_mrank(4, 3, 2, Field::Real, &mut rng, &tol).unwrap();
        assert!(s.embed().rel_dist(&t.expand()).unwrap() < 1e-12);
    }
}
