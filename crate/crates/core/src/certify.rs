//! Rank certificates for the cases where rank is decidable in practice:
//! rank one, the 2×2×2 hyperdeterminant classification, and rank-two
//! decompositions by a slice pencil, and low-rank symmetric decompositions.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inverse, svd};
use crate::mrank::mrank;
use crate::subspace::{dominant_subspace, sym_compress, tucker_compress};
use crate::sym::{tensor_power_vector, SymRankDecomposition, SymTensor};
use crate::tensor::{outer_product, re, Field, Hypermatrix, Matrix, RankOneFactors, Vector, C64};
use crate::tolerance::TolerancePolicy;

/// Rotates `v` so that its first non-negligible entry is positive real; returns the unit phase removed.
pub fn normalize_phase(v: &mut Vector) -> C64 {
    let top = v.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let pivot = v.iter().copied().find(|x| x.norm() > 1e-10 * top);
    match pivot {
        Some(p) => {
            let phase = p / p.norm();
            for x in v.iter_mut() {
                *x /= phase;
            }
            phase
        }
        None => re(1.0),
    }
}

/// Frobenius inner product `⟨a, b⟩ = Σ conj(a)·b`.
pub fn inner(a: &Hypermatrix, b: &Hypermatrix) -> C64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| x.conj() * y)
        .sum()
}

/// Rank-one witness when every flattening has numerical rank one.
pub fn is_rank_one(a: &Hypermatrix, tol: &TolerancePolicy) -> Option<RankOneFactors> {
    if !a.is_finite() || a.norm() == 0.0 {
        return None;
    }
    let info = mrank(a, tol).ok()?;
    if info.ranks.0.iter().any(|&r| r != 1) {
        return None;
    }
    let mut factors = Vec::with_capacity(a.order());
    for mode in 0..a.order() {
        let mut u = svd(&a.flatten(mode).ok()?).u.column(0).into_owned();
        if a.field() == Field::Real {
            u = u.map(|x| re(x.re));
        }
        normalize_phase(&mut u);
        let n = u.norm();
        factors.push(u.unscale(n));
    }
    let unit = RankOneFactors {
        scalar: re(1.0),
        factors,
    };
    let mut scalar = inner(&unit.to_tensor(), a);
    if a.field() == Field::Real {
        scalar.im = 0.0;
    }
    Some(RankOneFactors {
        scalar,
        factors: unit.factors,
    })
}

fn check_222(a: &Hypermatrix) -> Result<()> {
    if a.shape() != [2, 2, 2] {
        return Err(Error::Shape(format!("expected 2x2x2, got {:?}", a.shape())));
    }
    Ok(())
}

/// Double-double value `hi + lo`.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd(s, (a - (s - bb)) + (b - bb))
}

impl Dd {
    fn mul(self, x: f64) -> Dd {
        let p = self.0 * x;
        let e = self.0.mul_add(x, -p) + self.1 * x;
        two_sum(p, e)
    }

    fn add(self, o: Dd) -> Dd {
        let Dd(s, e) = two_sum(self.0, o.0);
        two_sum(s, e + self.1 + o.1)
    }
}

/// Cayley's hyperdeterminant on eight entries `a[i][j][k]`.
///
/// Evaluated in double-double arithmetic: the monomials cancel heavily near
/// the hyperdeterminant hypersurface.
pub fn cayley(a: [[[f64; 2]; 2]; 2]) -> f64 {
    let [[[a000, a001], [a010, a011]], [[a100, a101], [a110, a111]]] = a;
    let terms: [(f64, [f64; 4]); 12] = [
        (1.0, [a000, a000, a111, a111]),
        (1.0, [a001, a001, a110, a110]),
        (1.0, [a010, a010, a101, a101]),
        (1.0, [a100, a100, a011, a011]),
        (-2.0, [a000, a001, a110, a111]),
        (-2.0, [a000, a010, a101, a111]),
        (-2.0, [a000, a100, a011, a111]),
        (-2.0, [a001, a010, a101, a110]),
        (-2.0, [a001, a100, a011, a110]),
        (-2.0, [a010, a100, a011, a101]),
        (4.0, [a000, a011, a101, a110]),
        (4.0, [a001, a010, a100, a111]),
    ];
    terms
        .iter()
        .map(|(c, f)| f.iter().fold(Dd(*c, 0.0), |acc, &x| acc.mul(x)))
        .fold(Dd(0.0, 0.0), Dd::add)
        .0
}

pub fn hyperdet222(a: &Hypermatrix) -> Result<f64> {
    check_222(a)?;
    if a.field() != Field::Real {
        return Err(Error::InvalidParameter("hyperdeterminant sign needs a real tensor".into()));
    }
    let mut e = [[[0.0; 2]; 2]; 2];
    for (i, plane) in e.iter_mut().enumerate() {
        for (j, row) in plane.iter_mut().enumerate() {
            for (k, x) in row.iter_mut().enumerate() {
                *x = a.get(&[i, j, k]).re;
            }
        }
    }
    Ok(cayley(e))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class222 {
    Zero,
    Rank1,
    Rank2,
    BorderRank3,
    Boundary,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification222 {
    pub class: Class222,
    pub hyperdet: f64,
    /// Band half-width `eps_rel·‖A‖⁴` used for the decision.
    pub threshold: f64,
}

pub fn classify_222(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<Classification222> {
    check_222(a)?;
    a.ensure_finite()?;
    let det = hyperdet222(a)?;
    let norm = a.norm();
    let threshold = tol.eps_rel * norm.powi(4);
    let class = if norm == 0.0 {
        Class222::Zero
    } else if is_rank_one(a, tol).is_some() {
        Class222::Rank1
    } else if det < -threshold {
        Class222::BorderRank3
    } else if det > threshold || mrank(a, tol)?.ranks.0.iter().any(|&r| r <= 1) {
        Class222::Rank2
    } else {
        Class222::Boundary
    };
    Ok(Classification222 {
        class,
        hyperdet: det,
        threshold,
    })
}

/// The binary quadratic `det(β·T₀ − α·T₁) = a2·α² + a1·αβ + a0·β²`.
fn pencil_coefficients(t0: &Matrix, t1: &Matrix) -> (C64, C64, C64) {
    let det = |m: &Matrix| m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let a1 = -(t0[(0, 0)] * t1[(1, 1)] + t0[(1, 1)] * t1[(0, 0)]
        - t0[(0, 1)] * t1[(1, 0)]
        - t0[(1, 0)] * t1[(0, 1)]);
    (det(t1), a1, det(t0))
}

/// Roots of the pencil as unit projective points `(α, β)`.
struct PencilRoots {
    points: [(C64, C64); 2],
    gap: f64,
}

fn unit_point(a: C64, b: C64) -> (C64, C64) {
    let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
    (a / n, b / n)
}

fn pencil_roots(t0: &Matrix, t1: &Matrix, field: Field, tol: &TolerancePolicy) -> Result<PencilRoots> {
    let (a2, a1, a0) = pencil_coefficients(t0, t1);
    let scale = (t0.norm_squared() + t1.norm_squared()).powi(2);
    if scale == 0.0 {
        return Err(Error::Degenerate("zero pencil".into()));
    }
    let disc = a1 * a1 - a2 * a0 * 4.0;
    if a2.norm() + a1.norm() + a0.norm() <= tol.eps_rel * scale.sqrt() {
        return Err(Error::Degenerate("pencil determinant vanishes identically".into()));
    }
    if field == Field::Real && disc.re < -tol.eps_rel * scale {
        return Err(Error::Degenerate(
            "slice pencil has non-real eigenvalues (real rank exceeds two)".into(),
        ));
    }
    let sq = if field == Field::Real {
        re(disc.re.max(0.0).sqrt())
    } else {
        disc.sqrt()
    };
    let sq = if (a1.conj() * sq).re < 0.0 { -sq } else { sq };
    let q = -(a1 + sq) * 0.5;
    if q.norm() == 0.0 {
        return Err(Error::Tolerance("pencil has a double eigenvalue".into()));
    }
    // Roots of a2 α² + a1 αβ + a0 β² are (q : a2) and (a0 : q).
    let points = [unit_point(q, a2), unit_point(a0, q)];
    let gap = (points[0].0 * points[1].1 - points[1].0 * points[0].1).norm();
    if gap < tol.gap_min {
        return Err(Error::Tolerance(format!(
            "pencil eigenvalues separated by {gap:.3e} < gap_min"
        )));
    }
    Ok(PencilRoots { points, gap })
}

fn slices(k: &Hypermatrix) -> (Matrix, Matrix) {
    let s = |i: usize| Matrix::from_fn(2, 2, |j, l| k.get(&[i, j, l]));
    (s(0), s(1))
}

/// Exact decomposition of a `2×2×2` core into two rank-one terms (columns of the returned factor matrices).
fn decompose_core(k: &Hypermatrix, tol: &TolerancePolicy) -> Result<(Matrix, Matrix, Matrix, f64)> {
    let field = k.field();
    let (t0, t1) = slices(k);
    let roots = pencil_roots(&t0, &t1, field, tol)?;
    let mut b = Matrix::zeros(2, 2);
    let mut c = Matrix::zeros(2, 2);
    for (idx, &(alpha, beta)) in roots.points.iter().enumerate() {
        let m = &t0 * beta - &t1 * alpha;
        let d = svd(&m);
        let other = 1 - idx;
        let mut u = d.u.column(0).into_owned();
        let mut v = d.v.column(0).map(|x| x.conj());
        if field == Field::Real {
            u = u.map(|x| re(x.re));
            v = v.map(|x| re(x.re));
        }
        b.set_column(other, &u);
        c.set_column(other, &v);
    }
    let bi = inverse(&b)?;
    let cit = inverse(&c)?.transpose();
    let d0 = &bi * &t0 * &cit;
    let d1 = &bi * &t1 * &cit;
    let a = Matrix::from_fn(2, 2, |i, kk| if i == 0 { d0[(kk, kk)] } else { d1[(kk, kk)] });
    Ok((a, b, c, roots.gap))
}

/// Splits a grouped factor (length `2^{m}`, `m ≥ 1` modes of size 2 in core coordinates) into per-mode vectors.
fn split_grouped(g: &Vector, modes: usize, field: Field, tol: &TolerancePolicy) -> Result<(C64, Vec<Vector>)> {
    if modes == 1 {
        return Ok((re(1.0), vec![g.clone()]));
    }
    let t = Hypermatrix::new(vec![2; modes], field, g.iter().copied().collect())?;
    let w = is_rank_one(&t, tol).ok_or_else(|| {
        Error::Degenerate("grouped factor is not rank one".into())
    })?;
    Ok((w.scalar, w.factors))
}

/// Two rank-one terms whose sum is `A`, for `A` of multilinear rank `(2,…,2)`.
pub fn rank2_decompose(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<[RankOneFactors; 2]> {
    let d = a.order();
    if d < 3 {
        return Err(Error::InvalidParameter(
            "rank-two decomposition needs order >= 3".into(),
        ));
    }
    let field = a.field();
    let tucker = tucker_compress(a, &vec![2; d], tol)?;
    let grouped = tucker.core.reshape(&[2, 2, 1 << (d - 2)])?;
    let (core, third) = if d == 3 {
        (grouped, None)
    } else {
        let u3 = dominant_subspace(&grouped, 2, 2, tol)?;
        let core = grouped
            .mode_product(2, &u3.frame().adjoint())?
            .with_field(field);
        (core, Some(u3))
    };
    let (fa, fb, fc, _) = decompose_core(&core, tol)?;
    let mut terms = Vec::with_capacity(2);
    for k in 0..2 {
        let mut scalar = re(1.0);
        let mut vecs = vec![
            tucker.frames[0].frame() * fa.column(k),
            tucker.frames[1].frame() * fb.column(k),
        ];
        let g: Vector = match &third {
            Some(u3) => u3.frame() * fc.column(k),
            None => fc.column(k).into_owned(),
        };
        let (s, parts) = split_grouped(&g, d - 2, field, tol)?;
        scalar *= s;
        for (j, p) in parts.into_iter().enumerate() {
            vecs.push(tucker.frames[2 + j].frame() * p);
        }
        if field == Field::Real {
            for v in &mut vecs {
                *v = v.map(|x| re(x.re));
            }
            scalar.im = 0.0;
        }
        let mut t = RankOneFactors::new(scalar, vecs)?;
        for v in &mut t.factors {
            let phase = normalize_phase(v);
            t.scalar *= phase;
        }
        terms.push(t);
    }
    let mut sum = terms[0].to_tensor();
    sum.add_scaled(re(1.0), &terms[1].to_tensor())?;
    let err = a.rel_dist(&sum)?;
    if err > 1e-8 {
        return Err(Error::Tolerance(format!(
            "rank-two reconstruction error {err:.3e}"
        )));
    }
    let [t0, t1]: [RankOneFactors; 2] = terms.try_into().expect("two terms");
    Ok([t0, t1])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rank2Count {
    /// Exactly one decomposition as a set; `orderings` counts its term orderings.
    UniqueUpToPermutation { orderings: usize },
    ContinuumOrDegenerate,
}

pub fn count_rank2_decompositions(a: &Hypermatrix, tol: &TolerancePolicy) -> Rank2Count {
    match rank2_decompose(a, tol) {
        Ok([x, y]) => {
            let distinct = x
                .to_tensor()
                .dist(&y.to_tensor())
                .map(|dd| dd > tol.gap_min * a.norm())
                .unwrap_or(false);
            if distinct {
                Rank2Count::UniqueUpToPermutation { orderings: 2 }
            } else {
                Rank2Count::ContinuumOrDegenerate
            }
        }
        Err(_) => Rank2Count::ContinuumOrDegenerate,
    }
}

/// The conjugate-pair decomposition `A = T + conj(T)` of a real 2×2×2 tensor
/// with negative hyperdeterminant, `T = p⊗q⊗r` with the scalar absorbed into `p`.
pub fn conjugate_pair_222(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<[Vector; 3]> {
    check_222(a)?;
    if a.field() != Field::Real {
        return Err(Error::InvalidParameter("conjugate pair needs a real tensor".into()));
    }
    let c = classify_222(a, tol)?;
    if c.class != Class222::BorderRank3 {
        return Err(Error::NotInStratum(format!(
            "hyperdeterminant {:.3e} is not negative",
            c.hyperdet
        )));
    }
    let ac = a.clone().with_field(Field::Complex);
    let (fa, fb, fc, _) = decompose_core(&ac, tol)?;
    let start = [
        fa.column(0).into_owned(),
        fb.column(0).into_owned(),
        fc.column(0).into_owned(),
    ];
    refine_conjugate_pair(a, start)
}

fn conjugate_pair_residual(a: &Hypermatrix, f: &[Vector; 3]) -> Vector {
    let t = outer_product(re(1.0), f, Field::Complex);
    Vector::from_iterator(8, t.data().iter().zip(a.data()).map(|(x, y)| re(2.0 * x.re - y.re)))
}

/// Gauss–Newton on `‖2·Re(p⊗q⊗r) − A‖` with minimum-norm steps; near the
/// boundary `Det = 0` the pencil factors are accurate only to about `√ε`.
fn refine_conjugate_pair(a: &Hypermatrix, mut f: [Vector; 3]) -> Result<[Vector; 3]> {
    let target = 1e-14 * a.norm();
    let mut res = conjugate_pair_residual(a, &f);
    for _ in 0..50 {
        if res.norm() <= target {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(8, 12);
        for mode in 0..3 {
            for j in 0..2 {
                for (part, unit) in [(0, re(1.0)), (1, C64::new(0.0, 1.0))] {
                    let mut g = f.clone();
                    g[mode] = Vector::zeros(2);
                    g[mode][j] = unit;
                    let d = outer_product(re(1.0), &g, Field::Complex);
                    for (row, x) in d.data().iter().enumerate() {
                        jac[(row, mode * 4 + j * 2 + part)] = 2.0 * x.re;
                    }
                }
            }
        }
        let rhs = DVector::from_iterator(8, res.iter().map(|x| -x.re));
        let step = jac
            .svd(true, true)
            .solve(&rhs, 1e-13)
            .map_err(|e| Error::Degenerate(e.to_string()))?;
        let mut next = f.clone();
        for mode in 0..3 {
            for j in 0..2 {
                next[mode][j] += C64::new(step[mode * 4 + j * 2], step[mode * 4 + j * 2 + 1]);
            }
        }
        let next_res = conjugate_pair_residual(a, &next);
        if next_res.norm() >= res.norm() {
            break;
        }
        f = next;
        res = next_res;
    }
    if res.norm() > 1e-10 * a.norm() {
        return Err(Error::Tolerance(format!(
            "conjugate pair residual {:.3e}",
            res.norm() / a.norm()
        )));
    }
    Ok(f)
}

/// `ω(x) = det[Re x | Im x]` for `x ∈ ℂ²`.
pub fn omega(x: &Vector) -> f64 {
    x[0].re * x[1].im - x[1].re * x[0].im
}

/// Symmetric decomposition `Σ λ_k v_k^{⊗d}` of symmetric rank `r ≤ n`, `d ≥ 3`,
/// by simultaneous diagonalization of two contractions of the compressed core.
pub fn sym_decompose(s: &SymTensor, r: usize, tol: &TolerancePolicy) -> Result<SymRankDecomposition> {
    let (n, d, field) = (s.dim(), s.order(), s.field());
    if d < 3 || r == 0 || r > n {
        return Err(Error::InvalidParameter(format!(
            "decomposition needs d >= 3 and 1 <= r <= n, got d={d}, r={r}, n={n}"
        )));
    }
    let a = s.embed();
    if r == 1 {
        let w = is_rank_one(&a, tol).ok_or_else(|| Error::NotInStratum("not rank one".into()))?;
        return SymRankDecomposition::new(d, field, vec![(w.scalar, w.factors[0].clone())]);
    }
    let t = sym_compress(&a, r, tol)?;
    let u = t.frames[0].frame().clone();
    let contract = |x: &Vector| -> Result<Matrix> {
        let mut c = t.core.clone();
        for mode in 2..d {
            c = c.mode_product(mode, &Matrix::from_row_slice(1, r, x.as_slice()))?;
        }
        Ok(Matrix::from_row_slice(r, r, c.data()))
    };
    let x = Vector::from_fn(r, |j, _| re((1.7 * j as f64 + 0.3).cos() + 1.1));
    let y = Vector::from_fn(r, |j, _| re((2.3 * j as f64 + 0.1).sin() - 0.4));
    let mx = contract(&x)?;
    let my = contract(&y)?;
    let pencil = mx * inverse(&my)?;
    let eig = nalgebra::linalg::Schur::new(pencil.clone())
        .eigenvalues()
        .ok_or_else(|| Error::Degenerate("Schur form did not converge".into()))?;
    let scale = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for i in 0..r {
        for j in 0..i {
            if (eig[i] - eig[j]).norm() < tol.gap_min * scale {
                return Err(Error::Tolerance("repeated eigenvalue in the contraction pencil".into()));
            }
        }
    }
    let mut ws = Vec::with_capacity(r);
    for mu in eig.iter() {
        if field == Field::Real && mu.im.abs() > 1e-8 * scale {
            return Err(Error::Degenerate(
                "non-real eigenvalues: real symmetric rank exceeds r".into(),
            ));
        }
        let shifted = &pencil - Matrix::identity(r, r) * *mu;
        let mut w = svd(&shifted).v.column(r - 1).into_owned();
        if field == Field::Real {
            w = w.map(|z| re(z.re));
        }
        let norm = w.norm();
        ws.push(w.unscale(norm));
    }
    let powers = Matrix::from_columns(&ws.iter().map(|w| tensor_power_vector(w, d)).collect::<Vec<_>>());
    let rhs = Vector::from_column_slice(t.core.data());
    let lambdas = nalgebra::linalg::SVD::new(powers, true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Degenerate(e.to_string()))?;
    let terms = ws
        .iter()
        .zip(lambdas.iter())
        .map(|(w, &l)| {
            let l = if field == Field::Real { re(l.re) } else { l };
            (l, &u * w)
        })
        .collect();
    let dec = SymRankDecomposition::new(d, field, terms)?;
    let err = dec.to_sym_tensor().embed().rel_dist(&a)?;
    if err > 1e-8 {
        return Err(Error::Tolerance(format!(
            "symmetric decomposition residual {err:.3e}"
        )));
    }
    Ok(dec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{basis_vector, outer_product, real_vector, ONE};

    fn e(i: usize) -> Vector {
        basis_vector(2, i)
    }

    fn from_entries(entries: &[([usize; 3], f64)]) -> Hypermatrix {
        let mut data = vec![0.0; 8];
        for (idx, v) in entries {
            data[idx[0] * 4 + idx[1] * 2 + idx[2]] = *v;
        }
        Hypermatrix::from_real(&[2, 2, 2], &data).unwrap()
    }

    #[test]
    fn cayley_is_accurate_under_cancellation() {
        use num_rational::BigRational;
        let q = |x: f64| BigRational::from_float(x).unwrap();
        let eps = 0.01;
        let g = [[1.0, 1.0], [1.0, 1.0 + eps]];
        let a = [[[0.3, -1.1], [0.7, 1.9]], [[-1.3, 0.6], [0.2, 0.9]]];
        let mut b = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let mut x = 0.0;
                    for (p, gp) in g[i].iter().enumerate() {
                        for (r, gr) in g[j].iter().enumerate() {
                            for (s, gs) in g[k].iter().enumerate() {
                                x += gp * gr * gs * a[p][r][s];
                            }
                        }
                    }
                    b[i][j][k] = x;
                }
            }
        }
        let e = |i: usize, j: usize, k: usize| q(b[i][j][k]);
        let d0 = e(0, 0, 0) * e(0, 1, 1) - e(0, 0, 1) * e(0, 1, 0);
        let d1 = e(1, 0, 0) * e(1, 1, 1) - e(1, 0, 1) * e(1, 1, 0);
        let m = e(0, 0, 0) * e(1, 1, 1) + e(1, 0, 0) * e(0, 1, 1) - e(0, 0, 1) * e(1, 1, 0) - e(1, 0, 1) * e(0, 1, 0);
        let exact = m.clone() * m - q(4.0) * d0 * d1;
        let got = q(cayley(b));
        let diff = if got > exact { got - exact.clone() } else { exact.clone() - got };
        let scale = if exact > q(0.0) { exact } else { -exact };
        assert!(diff <= scale * q(1e-14));
    }

    fn reference_b() -> Hypermatrix {
        from_entries(&[([0, 0, 0], 1.0), ([1, 1, 0], 1.0), ([0, 1, 1], -1.0), ([1, 0, 1], 1.0)])
    }

    fn diag() -> Hypermatrix {
        from_entries(&[([0, 0, 0], 1.0), ([1, 1, 1], 1.0)])
    }

    #[test]
    fn rank_one_detection() {
        let tol = TolerancePolicy::default();
        let a = outer_product(ONE, &[e(0), e(1), e(0)], Field::Real);
        let w = is_rank_one(&a, &tol).unwrap();
        assert_eq!(w.scalar, ONE);
        assert!(is_rank_one(&diag(), &tol).is_none());
    }

    #[test]
    fn rank_one_witness_scalar() {
        let u = real_vector(&[0.6, 0.8]);
        let v = real_vector(&[0.0, -1.0]);
        let w = real_vector(&[1.0, 0.0, 0.0]);
        let a = outer_product(re(3.0), &[u.clone(), v, w], Field::Real);
        let wit = is_rank_one(&a, &TolerancePolicy::default()).unwrap();
        assert!((wit.scalar.re.abs() - 3.0).abs() < 1e-14);
        assert!(wit.to_tensor().dist(&a).unwrap() < 1e-14);
        for f in &wit.factors {
            let first = f.iter().find(|x| x.norm() > 1e-12).unwrap();
            assert!(first.re > 0.0 && first.im == 0.0);
        }
    }

    #[test]
    fn hyperdeterminant_anchors() {
        assert_eq!(hyperdet222(&reference_b()).unwrap(), -4.0);
        assert_eq!(hyperdet222(&diag()).unwrap(), 1.0);
        let r1 = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        assert_eq!(hyperdet222(&r1).unwrap(), 0.0);
        assert!(hyperdet222(&Hypermatrix::zeros(&[2, 2, 3], Field::Real)).is_err());
    }

    #[test]
    fn classification_examples() {
        let tol = TolerancePolicy::default();
        let z = Hypermatrix::zeros(&[2, 2, 2], Field::Real);
        assert_eq!(classify_222(&z, &tol).unwrap().class, Class222::Zero);
        assert_eq!(classify_222(&reference_b(), &tol).unwrap().class, Class222::BorderRank3);
        assert_eq!(classify_222(&diag(), &tol).unwrap().class, Class222::Rank2);
        let r1 = outer_product(ONE, &[e(0), e(1), e(1)], Field::Real);
        assert_eq!(classify_222(&r1, &tol).unwrap().class, Class222::Rank1);
        // e1⊗(e1⊗e1 + e2⊗e2): mode-1 rank one, real rank two.
        let m = from_entries(&[([0, 0, 0], 1.0), ([0, 1, 1], 1.0)]);
        assert_eq!(classify_222(&m, &tol).unwrap().class, Class222::Rank2);
        let w = from_entries(&[([0, 0, 1], 1.0), ([0, 1, 0], 1.0), ([1, 0, 0], 1.0)]);
        assert_eq!(classify_222(&w, &tol).unwrap().class, Class222::Boundary);
    }

    #[test]
    fn diagonal_decomposes_into_unit_terms() {
        let tol = TolerancePolicy::default();
        let [x, y] = rank2_decompose(&diag(), &tol).unwrap();
        let mut got = [x.to_tensor(), y.to_tensor()];
        got.sort_by(|p, q| q.get(&[0, 0, 0]).re.total_cmp(&p.get(&[0, 0, 0]).re));
        let first = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        let second = outer_product(ONE, &[e(1), e(1), e(1)], Field::Real);
        assert!(got[0].dist(&first).unwrap() < 1e-12);
        assert!(got[1].dist(&second).unwrap() < 1e-12);
    }

    #[test]
    fn reference_b_real_is_degenerate_complex_is_conjugate_pair() {
        let tol = TolerancePolicy::default();
        assert!(matches!(rank2_decompose(&reference_b(), &tol), Err(Error::Degenerate(_))));
        let bc = reference_b().with_field(Field::Complex);
        let [x, y] = rank2_decompose(&bc, &tol).unwrap();
        let tx = x.to_tensor();
        let ty = y.to_tensor();
        assert!(tx.conj().dist(&ty).unwrap() < 1e-12);
        let mut sum = tx.clone();
        sum.add_scaled(ONE, &ty).unwrap();
        assert!(sum.dist(&bc).unwrap() < 1e-12);
    }

    #[test]
    fn w_state_is_not_identifiable() {
        let w = from_entries(&[([0, 0, 1], 1.0), ([0, 1, 0], 1.0), ([1, 0, 0], 1.0)]);
        let tol = TolerancePolicy::default();
        assert_eq!(count_rank2_decompositions(&w, &tol), Rank2Count::ContinuumOrDegenerate);
        assert_eq!(
            count_rank2_decompositions(&diag(), &tol),
            Rank2Count::UniqueUpToPermutation { orderings: 2 }
        );
    }

    #[test]
    fn order_four_decomposition() {
        let tol = TolerancePolicy::default();
        let u = [
            real_vector(&[1.0, 0.5, -0.2]),
            real_vector(&[0.3, 1.0, 0.0]),
            real_vector(&[0.0, 1.0, 1.0]),
            real_vector(&[2.0, -1.0, 0.5]),
        ];
        let v = [
            real_vector(&[0.2, -1.0, 0.7]),
            real_vector(&[1.0, 1.0, 1.0]),
            real_vector(&[1.0, 0.0, -0.4]),
            real_vector(&[0.1, 0.9, 0.3]),
        ];
        let mut a = outer_product(ONE, &u, Field::Real);
        a.add_scaled(re(-2.0), &outer_product(ONE, &v, Field::Real)).unwrap();
        let [x, y] = rank2_decompose(&a, &tol).unwrap();
        let mut sum = x.to_tensor();
        sum.add_scaled(ONE, &y.to_tensor()).unwrap();
        assert!(a.rel_dist(&sum).unwrap() < 1e-10);
    }

    #[test]
    fn reference_b_conjugate_pair_has_nonzero_omegas() {
        let [p, q, r] = conjugate_pair_222(&reference_b(), &TolerancePolicy::default()).unwrap();
        for x in [&p, &q, &r] {
            assert!(omega(x).abs() > 1e-8);
        }
    }
}
