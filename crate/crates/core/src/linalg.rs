//! Dense linear algebra on complex matrices, with real fast paths.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{re, Matrix, Vector, C64, ONE, ZERO};
use crate::tolerance::TolerancePolicy;

/// Thin SVD `A = U · diag(s) · Vᴴ` with `s` sorted descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub v: Matrix,
}

pub fn is_real(m: &Matrix) -> bool {
    m.iter().all(|x| x.im == 0.0)
}

pub fn to_real(m: &Matrix) -> DMatrix<f64> {
    m.map(|x| x.re)
}

pub fn from_real(m: &DMatrix<f64>) -> Matrix {
    m.map(re)
}

pub fn is_finite(m: &Matrix) -> bool {
    m.iter().all(|x| x.re.is_finite() && x.im.is_finite())
}

pub fn svd(m: &Matrix) -> Svd {
    let k = m.nrows().min(m.ncols());
    let (u, s, v) = checked_svd(m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    Svd {
        u: Matrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]),
        s: order.iter().map(|&j| s[j]).collect(),
        v: Matrix::from_fn(v.nrows(), k, |i, j| v[(i, order[j])]),
    }
}

fn raw_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    if is_real(m) {
        let d = nalgebra::linalg::SVD::new(to_real(m), true, true);
        let u = from_real(&d.u.expect("u requested"));
        let v = from_real(&d.v_t.expect("v_t requested").transpose());
        return (u, d.singular_values.iter().copied().collect(), v);
    }
    let d = nalgebra::linalg::SVD::new(m.clone(), true, true);
    let u = d.u.expect("u requested");
    let v = d.v_t.expect("v_t requested").adjoint();
    (u, d.singular_values.iter().copied().collect(), v)
}

fn svd_residual(m: &Matrix, (u, s, v): &(Matrix, Vec<f64>, Matrix)) -> f64 {
    let mut rec = u.clone();
    for (j, &x) in s.iter().enumerate() {
        rec.column_mut(j).scale_mut(x);
    }
    let k = s.len();
    let eye = Matrix::identity(k, k);
    let rec_err = (rec * v.adjoint() - m).norm() / m.norm().max(f64::MIN_POSITIVE);
    rec_err
        .max((u.adjoint() * u - &eye).norm())
        .max((v.adjoint() * v - &eye).norm())
}

/// Embeds `m` as the leading block of `diag(m, c)` with `c` above every singular value.
fn padded_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let (r, c) = m.shape();
    let big = 2.0 * m.norm() + 1.0;
    let mut p = Matrix::zeros(r + 1, c + 1);
    p.view_mut((0, 0), (r, c)).copy_from(m);
    p[(r, c)] = re(big);
    let (u, s, v) = raw_svd(&p);
    let pad = (0..s.len())
        .max_by(|&a, &b| u[(r, a)].norm().total_cmp(&u[(r, b)].norm()))
        .expect("nonempty");
    let keep: Vec<usize> = (0..s.len()).filter(|&j| j != pad).collect();
    (
        Matrix::from_fn(r, keep.len(), |i, j| u[(i, keep[j])]),
        keep.iter().map(|&j| s[j]).collect(),
        Matrix::from_fn(c, keep.len(), |i, j| v[(i, keep[j])]),
    )
}

/// nalgebra's SVD occasionally returns inconsistent singular vectors when
/// singular values repeat; each candidate is checked and the most accurate one kept.
fn checked_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    let ok = 1e-12 * (m.nrows().max(m.ncols()) as f64);
    let first = raw_svd(m);
    let mut best_err = svd_residual(m, &first);
    let mut best = first;
    if best_err <= ok {
        return best;
    }
    let (u, s, v) = raw_svd(&m.adjoint());
    let candidates = [(v, s, u), padded_svd(m)];
    for cand in candidates {
        let e = svd_residual(m, &cand);
        if e < best_err {
            best_err = e;
            best = cand;
        }
        if best_err <= ok {
            return best;
        }
    }
    let cand = jacobi_svd(m);
    if svd_residual(m, &cand) < best_err {
        best = cand;
    }
    best
}

/// One-sided Jacobi SVD; slow but accurate for clustered singular values.
fn jacobi_svd(m: &Matrix) -> (Matrix, Vec<f64>, Matrix) {
    if m.nrows() < m.ncols() {
        let (u, s, v) = jacobi_svd(&m.adjoint());
        return (v, s, u);
    }
    let n = m.ncols();
    let mut g = m.clone();
    let mut v = eye(n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = g.column(p).norm_squared();
                let beta = g.column(q).norm_squared();
                let gamma = g.column(p).dotc(&g.column(q));
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / re(gamma.norm());
                let zeta = (beta - alpha) / (2.0 * gamma.norm());
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut g, &mut v] {
                    for i in 0..mat.nrows() {
                        let x = mat[(i, p)];
                        let y = mat[(i, q)] * phase.conj();
                        mat[(i, p)] = x * re(c) - y * re(sn);
                        mat[(i, q)] = x * re(sn) + y * re(c);
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..n).map(|j| g.column(j).norm()).collect();
    let floor = s.iter().copied().fold(0.0, f64::max) * f64::EPSILON * (m.nrows() as f64);
    let live: Vec<usize> = (0..n).filter(|&j| s[j] > floor && s[j] > 0.0).collect();
    let mut u = Matrix::zeros(m.nrows(), n);
    for &j in &live {
        u.set_column(j, &g.column(j).unscale(s[j]));
    }
    let dead: Vec<usize> = (0..n).filter(|j| !live.contains(j)).collect();
    if !dead.is_empty() {
        let basis = Matrix::from_fn(m.nrows(), live.len(), |i, k| u[(i, live[k])]);
        let fill = complement(&basis);
        for (k, &j) in dead.iter().enumerate() {
            u.set_column(j, &fill.column(k));
        }
    }
    (u, s, v)
}

pub fn singular_values(m: &Matrix) -> Vec<f64> {
    let mut s: Vec<f64> = if is_real(m) {
        to_real(m).singular_values().iter().copied().collect()
    } else {
        m.singular_values().iter().copied().collect()
    };
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Outcome of a numerical rank decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankInfo {
    pub rank: usize,
    /// `σ_r / σ₁`, or 1 when the rank is zero.
    pub margin: f64,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

fn rank_from_singular_values(s: Vec<f64>, rows: usize, cols: usize, tol: &TolerancePolicy) -> RankInfo {
    let s1 = s.first().copied().unwrap_or(0.0);
    if s1 == 0.0 {
        return RankInfo {
            rank: 0,
            margin: 1.0,
            threshold: 0.0,
            singular_values: s,
        };
    }
    let threshold = s1 * rows.max(cols) as f64 * tol.eps_rel;
    let rank = s.iter().filter(|&&x| x > threshold).count();
    RankInfo {
        rank,
        margin: s[rank - 1] / s1,
        threshold,
        singular_values: s,
    }
}

pub fn numerical_rank(m: &Matrix, tol: &TolerancePolicy) -> Result<RankInfo> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(rank_from_singular_values(
        singular_values(m),
        m.nrows(),
        m.ncols(),
        tol,
    ))
}

/// Real determinant when the matrix is real, complex otherwise.
pub fn det(m: &Matrix) -> C64 {
    if is_real(m) {
        re(to_real(m).determinant())
    } else {
        m.clone().determinant()
    }
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if is_real(m) {
        to_real(m)
            .try_inverse()
            .map(|x| from_real(&x))
            .ok_or_else(|| Error::Degenerate("singular matrix".into()))
    } else {
        m.clone()
            .try_inverse()
            .ok_or_else(|| Error::Degenerate("singular matrix".into()))
    }
}

/// Orthonormal basis of the column span via modified Gram–Schmidt (run twice).
/// Columns that fall below `1e-12` relative to their input norm are dropped.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    let mut cols: Vec<Vector> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).into_owned();
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v.axpy(-c, q, ONE);
            }
        }
        let n = v.norm();
        if n > 1e-12 * n0 {
            cols.push(v.unscale(n));
        }
    }
    if cols.is_empty() {
        return Matrix::zeros(m.nrows(), 0);
    }
    Matrix::from_columns(&cols)
}

/// Orthonormal basis of the orthogonal complement of the (orthonormal) columns
/// of `u`, built by projecting standard basis vectors in index order.
pub fn complement(u: &Matrix) -> Matrix {
    let n = u.nrows();
    let need = n - u.ncols();
    let mut cols: Vec<Vector> = (0..u.ncols()).map(|j| u.column(j).into_owned()).collect();
    let mut out = Vec::new();
    let mut candidates: Vec<usize> = (0..n).collect();
    // Prefer basis vectors least represented in span(u).
    let weight = |i: usize| (0..u.ncols()).map(|j| u[(i, j)].norm_sqr()).sum::<f64>();
    candidates.sort_by(|&a, &b| weight(a).total_cmp(&weight(b)).then(a.cmp(&b)));
    for i in candidates {
        if out.len() == need {
            break;
        }
        let mut v = Vector::zeros(n);
        v[i] = ONE;
        for _ in 0..2 {
            for q in &cols {
                let c = q.dotc(&v);
                v.axpy(-c, q, ONE);
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            let v = v.unscale(nv);
            cols.push(v.clone());
            out.push(v);
        }
    }
    if out.is_empty() {
        return Matrix::zeros(n, 0);
    }
    Matrix::from_columns(&out)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &Matrix) -> (Vec<f64>, Matrix) {
    let h = (m + m.adjoint()) * re(0.5);
    let (vals, vecs): (Vec<f64>, Matrix) = if is_real(&h) {
        let e = to_real(&h).symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), from_real(&e.eigenvectors))
    } else {
        let e = h.symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    };
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let v = Matrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, order[j])]);
    (order.iter().map(|&j| vals[j]).collect(), v)
}

/// `(positive, negative)` eigenvalue counts of a Hermitian matrix, ignoring
/// eigenvalues below `max|λ| · dim · eps_rel`. Also returns the smallest
/// retained `|λ| / max|λ|`.
pub fn inertia(m: &Matrix, tol: &TolerancePolicy) -> (usize, usize, f64) {
    let (vals, _) = hermitian_eigen(m);
    let top = vals.iter().map(|x| x.abs()).fold(0.0, f64::max);
    if top == 0.0 {
        return (0, 0, 1.0);
    }
    let cut = top * m.nrows() as f64 * tol.eps_rel;
    let pos = vals.iter().filter(|&&x| x > cut).count();
    let neg = vals.iter().filter(|&&x| x < -cut).count();
    let margin = vals
        .iter()
        .filter(|x| x.abs() > cut)
        .map(|x| x.abs() / top)
        .fold(1.0, f64::min);
    (pos, neg, margin)
}

/// Identity matrix.
pub fn eye(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// Polar decomposition `M = O · S` of a real invertible matrix, `O` orthogonal and `S` symmetric positive definite.
pub fn polar_real(m: &Matrix) -> (Matrix, Matrix) {
    let d = svd(m);
    let o = &d.u * d.v.adjoint();
    let sigma = Matrix::from_diagonal(&Vector::from_iterator(d.s.len(), d.s.iter().map(|&x| re(x))));
    let s = &d.v * sigma * d.v.adjoint();
    (o, s)
}

/// Kronecker product.
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    Matrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Maximal `|x|` entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// `‖UᴴU − I‖_max`.
pub fn orthonormality_defect(u: &Matrix) -> f64 {
    let g = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
