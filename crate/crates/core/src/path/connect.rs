//! Path constructors between two points of the same stratum.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{chebyshev_grid, path_verify, PolarPath, Segment, TensorPath};
use crate::certify::{conjugate_pair_222, is_rank_one, rank2_decompose, sym_decompose};
use crate::classify::{classify, classify_brank3_222, sym_signature, ComponentLabel, Sign};
use crate::error::{Error, Result};
use crate::linalg::{det, from_real, hermitian_eigen, polar_real, to_real};
use crate::mrank::{mrank, MultilinearRank};
use crate::sample::{gaussian_scalar, gaussian_tensor, sample_rank_r, sample_sym_rank_r, TtkRng};
use crate::stratum::{StratumDescriptor, StratumKind};
use crate::subspace::{sym_compress, tucker_compress, Geodesic};
use crate::sym::{multiset_count, sym_extract, sym_power, SymRankDecomposition, SymTensor};
use crate::tensor::{re, Field, Hypermatrix, Matrix, RankOneFactors, Vector, C64, ONE};
use crate::tolerance::TolerancePolicy;

/// Attempts at a random midpoint before giving up.
pub const DETOUR_DEPTH: usize = 8;

const DEPENDENT: f64 = 1.0 - 1e-9;
const SAME: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Connection {
    Path(TensorPath),
    DifferentComponents {
        reason: String,
        labels: Option<(ComponentLabel, ComponentLabel)>,
    },
}

impl Connection {
    pub fn into_path(self) -> Option<TensorPath> {
        match self {
            Connection::Path(p) => Some(p),
            Connection::DifferentComponents { .. } => None,
        }
    }

    pub fn is_path(&self) -> bool {
        matches!(self, Connection::Path(_))
    }
}

fn with_mode(v: &[Vector], i: usize, x: Vector) -> Vec<Vector> {
    let mut out = v.to_vec();
    out[i] = x;
    out
}

/// Basis vector at the smallest entry of `x`, scaled to `‖x‖`; never parallel to `x`.
fn detour_vector(x: &Vector) -> Vector {
    let j = (0..x.len())
        .min_by(|&a, &b| x[a].norm().total_cmp(&x[b].norm()))
        .expect("nonempty");
    let mut w = Vector::zeros(x.len());
    w[j] = re(x.norm());
    w
}

fn same_shape(a: &[usize], b: &[usize]) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("endpoints of shapes {a:?} and {b:?}")));
    }
    Ok(())
}

/// Rank-one path: per-mode straight lines, detours around antipodal factors,
/// then the scalar.
pub fn connect_rank_one(a: &Hypermatrix, b: &Hypermatrix, tol: &TolerancePolicy) -> Result<TensorPath> {
    same_shape(a.shape(), b.shape())?;
    let field = a.field().join(b.field());
    let (a, b) = (a.clone().with_field(field), b.clone().with_field(field));
    let wa = is_rank_one(&a, tol).ok_or_else(|| Error::NotInStratum("first endpoint is not rank one".into()))?;
    let wb = is_rank_one(&b, tol).ok_or_else(|| Error::NotInStratum("second endpoint is not rank one".into()))?;
    let stratum = StratumDescriptor::rank(1, a.shape(), field)?;
    let mut cur = wa.factors.clone();
    let mut lambda = wa.scalar;
    let mut segs = Vec::new();
    for i in 0..a.order() {
        let (x, y) = (cur[i].clone(), wb.factors[i].clone());
        if (&x - &y).norm() <= SAME {
            cur[i] = y;
            continue;
        }
        let c = x.dotc(&y);
        if field == Field::Real && c.re < -DEPENDENT {
            segs.push(Segment::DetourArc {
                scalar: lambda,
                modes: vec![i],
                start: cur.clone(),
                via: with_mode(&cur, i, detour_vector(&x)),
                end: with_mode(&cur, i, y.clone()),
            });
        } else if field == Field::Complex && c.norm() > DEPENDENT {
            let phase = c / c.norm();
            segs.push(Segment::FactorLerp {
                scalar: lambda,
                start: cur.clone(),
                end: with_mode(&cur, i, &y * phase.conj()),
            });
            lambda *= phase.conj();
        } else {
            segs.push(Segment::FactorLerp {
                scalar: lambda,
                start: cur.clone(),
                end: with_mode(&cur, i, y.clone()),
            });
        }
        cur[i] = y;
    }
    let mu = wb.scalar;
    match field {
        Field::Real => {
            if (lambda.re < 0.0) != (mu.re < 0.0) {
                segs.push(Segment::DetourArc {
                    scalar: lambda,
                    modes: vec![0],
                    start: cur.clone(),
                    via: with_mode(&cur, 0, detour_vector(&cur[0])),
                    end: with_mode(&cur, 0, -&cur[0]),
                });
                lambda = -lambda;
            }
        }
        Field::Complex => {
            let angle = (mu / lambda).arg();
            if angle.abs() > 1e-15 {
                segs.push(Segment::ComplexPhase {
                    factors: cur.clone(),
                    scalar: lambda,
                    angle,
                });
                lambda *= C64::from_polar(1.0, angle);
            }
        }
    }
    if (lambda - mu).norm() > 1e-15 * mu.norm() || segs.is_empty() {
        segs.push(Segment::ScalarScale {
            factors: cur,
            start: lambda,
            end: mu,
        });
    }
    TensorPath::from_segments(stratum, field, a.shape().to_vec(), segs, Some(1))
}

fn sym_rank_one_witness(s: &SymTensor, tol: &TolerancePolicy) -> Result<(C64, Vector)> {
    let a = s.embed();
    let w = is_rank_one(&a, tol).ok_or_else(|| Error::NotInStratum("not symmetric rank one".into()))?;
    let u = w.factors[0].clone();
    let rebuilt = sym_power(&u, s.order(), w.scalar)?.embed();
    if rebuilt.rel_dist(&a)? > 1e-8 {
        return Err(Error::NotInStratum("rank-one factors differ between modes".into()));
    }
    Ok((w.scalar, u))
}

/// Symmetric rank-one path `(x(t))^{⊗d}` after absorbing the coefficient into the vector.
pub fn connect_sym_rank_one(a: &SymTensor, b: &SymTensor, tol: &TolerancePolicy) -> Result<Connection> {
    same_shape(&a.shape(), &b.shape())?;
    let (n, d) = (a.dim(), a.order());
    let field = a.field().join(b.field());
    let (lambda, u) = sym_rank_one_witness(a, tol)?;
    let (mu, v) = sym_rank_one_witness(b, tol)?;
    let stratum = StratumDescriptor::sym_rank(1, n, d, field)?;
    let inv = 1.0 / d as f64;
    let (scalar, x, y) = match field {
        Field::Real if d % 2 == 0 => {
            let (sa, sb) = (Sign::of(lambda.re), Sign::of(mu.re));
            if sa != sb {
                return Ok(Connection::DifferentComponents {
                    reason: "coefficient signs differ for even order".into(),
                    labels: Some((ComponentLabel::Sign(sa), ComponentLabel::Sign(sb))),
                });
            }
            let x = &u * re(lambda.re.abs().powf(inv));
            let mut y = &v * re(mu.re.abs().powf(inv));
            if x.dotc(&y).re < 0.0 {
                y = -y;
            }
            (re(sa.value() as f64), x, y)
        }
        Field::Real => {
            let root = |l: f64| l.signum() * l.abs().powf(inv);
            (ONE, &u * re(root(lambda.re)), &v * re(root(mu.re)))
        }
        Field::Complex => {
            let x = &u * lambda.powf(inv);
            let y0 = &v * mu.powf(inv);
            let y = (0..d)
                .map(|k| &y0 * C64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64))
                .max_by(|p, q| x.dotc(p).re.total_cmp(&x.dotc(q).re))
                .expect("d >= 2");
            (ONE, x, y)
        }
    };
    let cos = x.dotc(&y).re / (x.norm() * y.norm());
    let seg = if field == Field::Real && cos < -DEPENDENT {
        Segment::DetourArc {
            scalar,
            modes: (0..d).collect(),
            start: vec![x.clone(); d],
            via: vec![detour_vector(&x); d],
            end: vec![y; d],
        }
    } else {
        Segment::FactorLerp {
            scalar,
            start: vec![x; d],
            end: vec![y; d],
        }
    };
    Ok(Connection::Path(TensorPath::from_segments(
        stratum,
        field,
        vec![n; d],
        vec![seg],
        Some(1),
    )?))
}

/// Greedy matching by largest `score`, restricted to pairs in the same group.
fn greedy_match(
    count: usize,
    group_a: &[i8],
    group_b: &[i8],
    score: impl Fn(usize, usize) -> f64,
) -> Result<Vec<usize>> {
    let mut used_a = vec![false; count];
    let mut used_b = vec![false; count];
    let mut out = vec![usize::MAX; count];
    for _ in 0..count {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..count).filter(|&i| !used_a[i]) {
            for j in (0..count).filter(|&j| !used_b[j] && group_a[i] == group_b[j]) {
                let s = score(i, j);
                if best.is_none_or(|(_, _, b)| s > b) {
                    best = Some((i, j, s));
                }
            }
        }
        let (i, j, _) = best.ok_or_else(|| Error::InvalidParameter("terms cannot be matched".into()))?;
        used_a[i] = true;
        used_b[j] = true;
        out[i] = j;
    }
    Ok(out)
}

fn sum_path(stratum: StratumDescriptor, field: Field, shape: Vec<usize>, terms: Vec<TensorPath>, r: usize) -> Result<TensorPath> {
    if terms.len() == 1 {
        let mut p = terms.into_iter().next().expect("one term");
        p.stratum = stratum;
        return Ok(p);
    }
    TensorPath::from_segments(stratum, field, shape, vec![Segment::TermSum { terms }], Some(r))
}

fn sym_rank_r_direct(
    da: &SymRankDecomposition,
    db: &SymRankDecomposition,
    stratum: &StratumDescriptor,
    tol: &TolerancePolicy,
) -> Result<TensorPath> {
    let r = da.rank();
    let signed = stratum.field == Field::Real && da.order.is_multiple_of(2);
    let group = |dec: &SymRankDecomposition| -> Vec<i8> {
        dec.terms
            .iter()
            .map(|(l, _)| if signed { Sign::of(l.re).value() } else { 0 })
            .collect()
    };
    let m = greedy_match(r, &group(da), &group(db), |i, j| {
        da.terms[i].1.dotc(&db.terms[j].1).norm()
    })?;
    let mut terms = Vec::with_capacity(r);
    for (i, &j) in m.iter().enumerate() {
        let (la, ua) = &da.terms[i];
        let (lb, ub) = &db.terms[j];
        let ta = sym_power(ua, da.order, *la)?;
        let tb = sym_power(ub, db.order, *lb)?;
        let c = connect_sym_rank_one(&ta, &tb, tol)?;
        terms.push(c.into_path().ok_or_else(|| Error::InvalidParameter("matched terms have opposite signs".into()))?);
    }
    sum_path(stratum.clone(), stratum.field, stratum.shape.clone(), terms, r)
}

/// Term-by-term composition of symmetric rank-one curves, verified on the
/// default grid and rerouted through random midpoints when a sample fails.
pub fn connect_sym_rank_r(
    da: &SymRankDecomposition,
    db: &SymRankDecomposition,
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Connection> {
    if da.dim != db.dim || da.order != db.order || da.rank() != db.rank() {
        return Err(Error::Shape("decompositions differ in dimension, order or rank".into()));
    }
    let (n, d, r) = (da.dim, da.order, da.rank());
    let field = da.field.join(db.field);
    let stratum = StratumDescriptor::sym_rank(r, n, d, field)?;
    if r == 1 {
        return connect_sym_rank_one(&da.to_sym_tensor(), &db.to_sym_tensor(), tol);
    }
    let signed = field == Field::Real && d % 2 == 0;
    let mut positive = 0;
    if signed {
        let (la, lb) = (sym_signature(da)?, sym_signature(db)?);
        if la != lb {
            return Ok(Connection::DifferentComponents {
                reason: "coefficient signatures differ for even order".into(),
                labels: Some((la, lb)),
            });
        }
        if let ComponentLabel::Signature { positive: p, .. } = la {
            positive = p;
        }
    }
    let direct = sym_rank_r_direct(da, db, &stratum, tol)?;
    if path_verify(&direct, tol.path_samples_default, tol).pass {
        return Ok(Connection::Path(direct));
    }
    for _ in 0..DETOUR_DEPTH {
        let (_, mid) = sample_sym_rank_r(n, d, r, positive, field, rng, tol)?;
        let first = sym_rank_r_direct(da, &mid, &stratum, tol)?;
        if !path_verify(&first, tol.path_samples_default, tol).pass {
            continue;
        }
        let second = sym_rank_r_direct(&mid, db, &stratum, tol)?;
        if !path_verify(&second, tol.path_samples_default, tol).pass {
            continue;
        }
        let mut p = first.concat(second)?;
        p.stratum = stratum;
        return Ok(Connection::Path(p));
    }
    Err(Error::RetryExhausted(format!("no admissible midpoint after {DETOUR_DEPTH} attempts")))
}

fn rank_r_direct(
    wa: &[RankOneFactors],
    wb: &[RankOneFactors],
    stratum: &StratumDescriptor,
    tol: &TolerancePolicy,
) -> Result<TensorPath> {
    let r = wa.len();
    let zeros = vec![0i8; r];
    let m = greedy_match(r, &zeros, &zeros, |i, j| {
        wa[i].factors
            .iter()
            .zip(&wb[j].factors)
            .map(|(x, y)| x.dotc(y).norm() / (x.norm() * y.norm()))
            .product()
    })?;
    let terms = m
        .iter()
        .enumerate()
        .map(|(i, &j)| connect_rank_one(&wa[i].to_tensor(), &wb[j].to_tensor(), tol))
        .collect::<Result<Vec<_>>>()?;
    sum_path(stratum.clone(), stratum.field, stratum.shape.clone(), terms, r)
}

/// Sum of matched rank-one paths between two rank-`r` witnesses, with detours.
pub fn connect_rank_r(
    wa: &[RankOneFactors],
    wb: &[RankOneFactors],
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Connection> {
    let r = wa.len();
    if r == 0 || wb.len() != r {
        return Err(Error::InvalidParameter("witnesses need the same positive number of terms".into()));
    }
    let shape = wa[0].shape();
    if wa.iter().chain(wb).any(|w| w.shape() != shape) {
        return Err(Error::Shape("witness terms of different shapes".into()));
    }
    let field = wa.iter().chain(wb).fold(Field::Real, |f, w| f.join(w.field()));
    let stratum = StratumDescriptor::rank(r, &shape, field)?;
    if r == 1 {
        return Ok(Connection::Path(connect_rank_one(
            &wa[0].to_tensor(),
            &wb[0].to_tensor(),
            tol,
        )?));
    }
    let direct = rank_r_direct(wa, wb, &stratum, tol)?;
    if path_verify(&direct, tol.path_samples_default, tol).pass {
        return Ok(Connection::Path(direct));
    }
    for _ in 0..DETOUR_DEPTH {
        let (_, mid) = sample_rank_r(&shape, r, field, rng, tol)?;
        let first = rank_r_direct(wa, &mid, &stratum, tol)?;
        if !path_verify(&first, tol.path_samples_default, tol).pass {
            continue;
        }
        let second = rank_r_direct(&mid, wb, &stratum, tol)?;
        if !path_verify(&second, tol.path_samples_default, tol).pass {
            continue;
        }
        let mut p = first.concat(second)?;
        p.stratum = stratum;
        return Ok(Connection::Path(p));
    }
    Err(Error::RetryExhausted(format!("no admissible midpoint after {DETOUR_DEPTH} attempts")))
}

fn flat_sign(c: &Hypermatrix, mode: usize) -> Result<Sign> {
    Ok(Sign::of(det(&c.flatten(mode)?).re))
}

/// `c ×_mode diag(−1, 1, …, 1)`.
fn negate_first_slice(c: &Hypermatrix, mode: usize) -> Result<Hypermatrix> {
    let n = c.shape()[mode];
    let mut dm = Matrix::identity(n, n);
    dm[(0, 0)] = re(-1.0);
    Ok(c.mode_product(mode, &dm)?.with_field(c.field()))
}

/// Whether the straight line between two cores keeps full multilinear rank
/// and the listed determinant signs.
fn core_segment_ok(
    c0: &Hypermatrix,
    c1: &Hypermatrix,
    ranks: &[usize],
    signs: &[(usize, Sign)],
    tol: &TolerancePolicy,
) -> bool {
    let mut ts = chebyshev_grid(2 * tol.path_samples_default + 1);
    ts.extend((0..=32).map(|k| k as f64 / 32.0));
    ts.par_iter().all(|&s| {
        let c = Hypermatrix::lerp(c0, c1, s).expect("same shape");
        let ok = matches!(mrank(&c, tol), Ok(info) if info.ranks.0 == ranks && info.min_margin() >= 10.0 * tol.gap_min);
        ok && signs
            .iter()
            .all(|&(i, sg)| matches!(flat_sign(&c, i), Ok(x) if x == sg))
    })
}

/// Waypoints `c0, m…, c1` whose consecutive straight lines stay in the stratum.
fn core_route(
    c0: &Hypermatrix,
    c1: &Hypermatrix,
    signs: &[(usize, Sign)],
    random_core: &mut dyn FnMut(&mut TtkRng) -> Hypermatrix,
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Vec<Hypermatrix>> {
    let ranks = c0.shape().to_vec();
    if core_segment_ok(c0, c1, &ranks, signs, tol) {
        return Ok(vec![c0.clone(), c1.clone()]);
    }
    let scale = 0.5 * (c0.norm() + c1.norm());
    for _ in 0..DETOUR_DEPTH {
        let mut m = None;
        for _ in 0..crate::sample::MAX_REDRAWS {
            let cand = random_core(rng);
            let cand = cand.scale(re(scale / cand.norm()));
            if signs.iter().all(|&(i, sg)| matches!(flat_sign(&cand, i), Ok(x) if x == sg)) {
                m = Some(cand);
                break;
            }
        }
        let Some(m) = m else { continue };
        if core_segment_ok(c0, &m, &ranks, signs, tol) && core_segment_ok(&m, c1, &ranks, signs, tol) {
            return Ok(vec![c0.clone(), m, c1.clone()]);
        }
    }
    Err(Error::RetryExhausted(format!("no admissible midpoint after {DETOUR_DEPTH} attempts")))
}

/// Rotations `(j, i, θ)` and trailing signs with `Q = G₁ᵀ⋯G_Kᵀ·D` for orthogonal `Q`.
fn givens_factor(q: &DMatrix<f64>) -> (Vec<(usize, usize, f64)>, Vec<f64>) {
    let n = q.nrows();
    let mut w = q.clone();
    let mut rots = Vec::new();
    for j in 0..n {
        for i in j + 1..n {
            let (a, b) = (w[(j, j)], w[(i, j)]);
            if b == 0.0 {
                continue;
            }
            let theta = b.atan2(a);
            rots.push((j, i, theta));
            apply_givens(&mut w, j, i, theta);
        }
    }
    let d = (0..n).map(|k| w[(k, k)].signum()).collect();
    (rots, d)
}

/// Left-multiplies rows `j`, `i` by the rotation taking `(cos θ, sin θ)` to `(1, 0)`.
fn apply_givens(w: &mut DMatrix<f64>, j: usize, i: usize, theta: f64) {
    let (c, s) = (theta.cos(), theta.sin());
    for col in 0..w.ncols() {
        let (x, y) = (w[(j, col)], w[(i, col)]);
        w[(j, col)] = c * x + s * y;
        w[(i, col)] = -s * x + c * y;
    }
}

/// `M(t) = O₀·Q(t)·S(t)` from `m0` to `m1`: polar factors, `Q(t)` scaling every
/// Givens angle by `t` and turning pairs of `−1` signs through `π·t`.
struct GlPath {
    o0: DMatrix<f64>,
    rots: Vec<(usize, usize, f64)>,
    flips: Vec<(usize, usize)>,
    s0: DMatrix<f64>,
    s1: DMatrix<f64>,
}

impl GlPath {
    fn new(m0: &Matrix, m1: &Matrix) -> Result<Self> {
        let (o0, s0) = polar_real(m0);
        let (o1, s1) = polar_real(m1);
        let (o0, o1) = (to_real(&o0), to_real(&o1));
        let (rots, d) = givens_factor(&(o0.transpose() * o1));
        let neg: Vec<usize> = (0..d.len()).filter(|&k| d[k] < 0.0).collect();
        if neg.len() % 2 == 1 {
            return Err(Error::InvalidParameter("endpoints have opposite determinant signs".into()));
        }
        Ok(Self {
            o0,
            rots,
            flips: neg.chunks(2).map(|p| (p[0], p[1])).collect(),
            s0: to_real(&s0),
            s1: to_real(&s1),
        })
    }

    fn at(&self, t: f64) -> Matrix {
        let n = self.o0.nrows();
        let mut q = DMatrix::<f64>::identity(n, n);
        for &(a, b) in &self.flips {
            let (c, s) = ((PI * t).cos(), (PI * t).sin());
            q[(a, a)] = c;
            q[(a, b)] = -s;
            q[(b, a)] = s;
            q[(b, b)] = c;
        }
        for &(j, i, theta) in self.rots.iter().rev() {
            apply_givens(&mut q, j, i, -theta * t);
        }
        let s = &self.s0 * (1.0 - t) + &self.s1 * t;
        from_real(&(&self.o0 * q * s))
    }
}

/// Core waypoints along a `GL` path of the square flattening at `mode`,
/// bisected until every chord passes [`core_segment_ok`].
fn group_route(
    c0: &Hypermatrix,
    c1: &Hypermatrix,
    mode: usize,
    signs: &[(usize, Sign)],
    tol: &TolerancePolicy,
) -> Result<Vec<Hypermatrix>> {
    let shape = c0.shape().to_vec();
    let field = c0.field();
    let path = GlPath::new(&c0.flatten(mode)?, &c1.flatten(mode)?)?;
    let core_at = |t: f64| -> Result<Hypermatrix> {
        if t == 0.0 {
            return Ok(c0.clone());
        }
        if t == 1.0 {
            return Ok(c1.clone());
        }
        Ok(Hypermatrix::fold(&path.at(t), mode, &shape, field)?.with_field(field))
    };
    let mut out = vec![c0.clone()];
    let mut stack = vec![(0.0, 1.0, 0usize)];
    let mut ends = vec![(0.0, c0.clone())];
    while let Some((t0, t1, depth)) = stack.pop() {
        let a = ends.last().expect("start pushed").1.clone();
        let b = core_at(t1)?;
        if core_segment_ok(&a, &b, &shape, signs, tol) {
            ends.push((t1, b.clone()));
            out.push(b);
            continue;
        }
        if depth >= 12 {
            return Err(Error::RetryExhausted(format!(
                "group path chord near t={t0:.3} still leaves the stratum"
            )));
        }
        let mid = 0.5 * (t0 + t1);
        stack.push((mid, t1, depth + 1));
        stack.push((t0, mid, depth + 1));
    }
    Ok(out)
}

fn labels_of(s: &StratumDescriptor, a: &Hypermatrix, b: &Hypermatrix, tol: &TolerancePolicy) -> Option<(ComponentLabel, ComponentLabel)> {
    Some((classify(s, a, tol).ok()?, classify(s, b, tol).ok()?))
}

/// Frame-flip loops (by mode) that fix the given determinant-sign mismatches
/// on the square modes, if any combination does.
fn parity_fix(ranks: &[usize], shape: &[usize], square: &[usize], mismatch: &[bool]) -> Option<Vec<usize>> {
    let loopable: Vec<usize> = (0..ranks.len()).filter(|&j| shape[j] > ranks[j]).collect();
    let parity = |i: usize, j: usize| -> bool {
        if i == j {
            true
        } else {
            (0..ranks.len())
                .filter(|&k| k != i && k != j)
                .map(|k| ranks[k])
                .product::<usize>()
                % 2
                == 1
        }
    };
    let mut subsets: Vec<u32> = (0..1u32 << loopable.len()).collect();
    subsets.sort_by_key(|m| (m.count_ones(), *m));
    subsets.into_iter().find_map(|mask| {
        let chosen: Vec<usize> = loopable
            .iter()
            .enumerate()
            .filter(|(b, _)| mask >> b & 1 == 1)
            .map(|(_, &j)| j)
            .collect();
        let fixes = square.iter().zip(mismatch).all(|(&i, &bad)| {
            chosen.iter().filter(|&&j| parity(i, j)).count() % 2 == usize::from(bad)
        });
        fixes.then_some(chosen)
    })
}

/// Path in a fixed multilinear rank stratum: orientation loops at `A` if
/// needed, a core path in `A`'s frames, then frame transport to `B`.
pub fn connect_mrank(
    a: &Hypermatrix,
    b: &Hypermatrix,
    ranks: &[usize],
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Connection> {
    same_shape(a.shape(), b.shape())?;
    let field = a.field().join(b.field());
    let (a, b) = (a.clone().with_field(field), b.clone().with_field(field));
    let shape = a.shape().to_vec();
    let stratum = StratumDescriptor::mrank(ranks, &shape, field)?;
    let ta = tucker_compress(&a, ranks, tol)?;
    let tb = tucker_compress(&b, ranks, tol)?;
    let geos = ta
        .frames
        .iter()
        .zip(&tb.frames)
        .map(|(u, v)| Geodesic::between(u, v))
        .collect::<Result<Vec<_>>>()?;
    let back: Vec<Matrix> = geos.iter().map(|g| g.end_change_of_basis().adjoint()).collect();
    let cb = tb.core.multilinear(&back)?.with_field(field);
    let mut ca = ta.core.clone();
    let mut segs = Vec::new();
    let mut signs = Vec::new();
    if field == Field::Real {
        let square = MultilinearRank(ranks.to_vec()).square_modes();
        let sa = square.iter().map(|&i| flat_sign(&ca, i)).collect::<Result<Vec<_>>>()?;
        let sb = square.iter().map(|&i| flat_sign(&cb, i)).collect::<Result<Vec<_>>>()?;
        let mismatch: Vec<bool> = sa.iter().zip(&sb).map(|(x, y)| x != y).collect();
        if mismatch.iter().any(|&m| m) {
            let Some(loops) = parity_fix(ranks, &shape, &square, &mismatch) else {
                return Ok(Connection::DifferentComponents {
                    reason: "determinant signs of the square flattenings cannot be matched".into(),
                    labels: labels_of(&stratum, &a, &b, tol),
                });
            };
            for j in loops {
                let geodesics = ta
                    .frames
                    .iter()
                    .enumerate()
                    .map(|(k, f)| if k == j { Geodesic::flip_loop(f, 0) } else { Ok(Geodesic::constant(f)) })
                    .collect::<Result<Vec<_>>>()?;
                segs.push(Segment::FrameTransport {
                    core: ca.clone(),
                    geodesics,
                });
                ca = negate_first_slice(&ca, j)?;
            }
        }
        signs = square.iter().zip(&sb).map(|(&i, &s)| (i, s)).collect();
    }
    let route = if let Some(&(i, _)) = signs.first() {
        group_route(&ca, &cb, i, &signs, tol)?
    } else {
        let mut draw = |rng: &mut TtkRng| gaussian_tensor(ranks, field, rng);
        core_route(&ca, &cb, &signs, &mut draw, tol, rng)?
    };
    let frames: Vec<Matrix> = ta.frames.iter().map(|f| f.frame().clone()).collect();
    for w in route.windows(2) {
        segs.push(Segment::CoreLerp {
            frames: frames.clone(),
            start: w[0].clone(),
            end: w[1].clone(),
        });
    }
    segs.push(Segment::FrameTransport {
        core: cb,
        geodesics: geos,
    });
    Ok(Connection::Path(TensorPath::from_segments(stratum, field, shape, segs, None)?))
}

fn random_sym_core(r: usize, d: usize, field: Field, rng: &mut TtkRng) -> Hypermatrix {
    let packed = (0..multiset_count(r, d)).map(|_| gaussian_scalar(field, rng)).collect();
    SymTensor::new(r, d, field, packed).expect("packed length").embed()
}

/// Symmetric analogue of [`connect_mrank`] with one shared frame.
pub fn connect_sym_mrank(
    a: &SymTensor,
    b: &SymTensor,
    r: usize,
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Connection> {
    same_shape(&a.shape(), &b.shape())?;
    let (n, d) = (a.dim(), a.order());
    let field = a.field().join(b.field());
    let stratum = StratumDescriptor::sym_mrank(r, n, d, field)?;
    let retag = |c: Connection| match c {
        Connection::Path(mut p) => {
            p.stratum = stratum.clone();
            Connection::Path(p)
        }
        other => other,
    };
    if r == 1 {
        return connect_sym_rank_one(a, b, tol).map(retag);
    }
    if d == 2 && field == Field::Real {
        let da = eigen_decomposition(a, r, tol)?;
        let db = eigen_decomposition(b, r, tol)?;
        return connect_sym_rank_r(&da, &db, tol, rng).map(retag);
    }
    let ea = a.embed().with_field(field);
    let eb = b.embed().with_field(field);
    let ta = sym_compress(&ea, r, tol)?;
    let tb = sym_compress(&eb, r, tol)?;
    let g = Geodesic::between(&ta.frames[0], &tb.frames[0])?;
    let back = vec![g.end_change_of_basis().adjoint(); d];
    let cb = tb.core.multilinear(&back)?.with_field(field);
    let mut draw = |rng: &mut TtkRng| random_sym_core(r, d, field, rng);
    let route = core_route(&ta.core, &cb, &[], &mut draw, tol, rng)?;
    let frames = vec![ta.frames[0].frame().clone(); d];
    let mut segs: Vec<Segment> = route
        .windows(2)
        .map(|w| Segment::CoreLerp {
            frames: frames.clone(),
            start: w[0].clone(),
            end: w[1].clone(),
        })
        .collect();
    segs.push(Segment::FrameTransport {
        core: cb,
        geodesics: vec![g; d],
    });
    Ok(Connection::Path(TensorPath::from_segments(stratum, field, vec![n; d], segs, None)?))
}

/// `Σ λ_k v_k v_kᵀ` over the `r` eigenvalues of largest magnitude.
fn eigen_decomposition(s: &SymTensor, r: usize, tol: &TolerancePolicy) -> Result<SymRankDecomposition> {
    let m = crate::sym::middle_flattening(s)?;
    let (vals, vecs) = hermitian_eigen(&m);
    let mut idx: Vec<usize> = (0..vals.len()).collect();
    idx.sort_by(|&i, &j| vals[j].abs().total_cmp(&vals[i].abs()));
    let top = vals[idx[0]].abs();
    if idx.len() < r || vals[idx[r - 1]].abs() < tol.gap_min * top {
        return Err(Error::NotInStratum(format!("matrix rank below {r}")));
    }
    let terms = idx[..r]
        .iter()
        .map(|&k| (re(vals[k]), vecs.column(k).map(|x| re(x.re))))
        .collect();
    SymRankDecomposition::new(2, Field::Real, terms)
}

fn c0_orbit_base() -> Hypermatrix {
    Hypermatrix::from_fn(&[2, 2, 2], Field::Real, |idx| {
        match idx.iter().filter(|&&i| i == 1).count() {
            0 => re(2.0),
            2 => re(-2.0),
            _ => re(0.0),
        }
    })
}

fn real_frame(x: &Vector, conjugate: bool) -> Matrix {
    let s = if conjugate { -1.0 } else { 1.0 };
    Matrix::from_row_slice(2, 2, &[re(x[0].re), re(s * x[0].im), re(x[1].re), re(s * x[1].im)])
}

/// Path between real `2×2×2` tensors with negative hyperdeterminant, moving
/// `(g₁,g₂,g₃)·C₀` through `GL₂(ℝ)³` with `C₀ = 2·Re(e⊗e⊗e)`, `e = (1, i)`.
pub fn connect_brank3_222(a: &Hypermatrix, b: &Hypermatrix, tol: &TolerancePolicy) -> Result<Connection> {
    same_shape(a.shape(), b.shape())?;
    if a.shape() != [2, 2, 2] {
        return Err(Error::Shape("orbit transport is defined on 2x2x2 tensors".into()));
    }
    let la = classify_brank3_222(a, tol)?;
    let lb = classify_brank3_222(b, tol)?;
    if la != lb {
        return Ok(Connection::DifferentComponents {
            reason: "omega sign triples differ".into(),
            labels: Some((ComponentLabel::SignTriple(la), ComponentLabel::SignTriple(lb))),
        });
    }
    let pa = conjugate_pair_222(a, tol)?;
    let pb = conjugate_pair_222(b, tol)?;
    let g: Vec<Matrix> = pa.iter().map(|x| real_frame(x, false)).collect();
    let sign = |m: &Matrix| det(m).re > 0.0;
    let flip = sign(&g[0]) != sign(&real_frame(&pb[0], false));
    let h: Vec<Matrix> = pb.iter().map(|x| real_frame(x, flip)).collect();
    let group = g
        .iter()
        .zip(&h)
        .map(|(x, y)| PolarPath::new(x, y))
        .collect::<Result<Vec<_>>>()?;
    let stratum = StratumDescriptor::border_rank(3, &[2, 2, 2], Field::Real)?;
    Ok(Connection::Path(TensorPath::from_segments(
        stratum,
        Field::Real,
        vec![2, 2, 2],
        vec![Segment::OrbitTransport {
            base: c0_orbit_base(),
            group,
        }],
        None,
    )?))
}

/// Connects `a` to `b` inside stratum `s`, choosing the constructor by kind.
pub fn connect(
    s: &StratumDescriptor,
    a: &Hypermatrix,
    b: &Hypermatrix,
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Connection> {
    s.validate()?;
    for x in [a, b] {
        if x.shape() != s.shape.as_slice() {
            return Err(Error::Shape(format!("tensor shape {:?} does not match {s}", x.shape())));
        }
        if s.field == Field::Real && x.field() == Field::Complex {
            return Err(Error::InvalidParameter(format!("complex tensor given for real stratum {s}")));
        }
        x.ensure_finite()?;
    }
    let a = a.clone().with_field(s.field);
    let b = b.clone().with_field(s.field);
    let d = s.order();
    let real = s.field == Field::Real;
    let out = match &s.kind {
        StratumKind::Rank(1) | StratumKind::BorderRank(1) => Connection::Path(connect_rank_one(&a, &b, tol)?),
        StratumKind::Rank(3) | StratumKind::BorderRank(3) if real && s.shape == [2, 2, 2] => {
            connect_brank3_222(&a, &b, tol)?
        }
        StratumKind::Rank(2) if d >= 3 => {
            let wa = rank2_decompose(&a, tol)?;
            let wb = rank2_decompose(&b, tol)?;
            connect_rank_r(&wa, &wb, tol, rng)?
        }
        StratumKind::SymRank(1) | StratumKind::SymBorderRank(1) => {
            connect_sym_rank_one(&sym_extract(&a, tol)?, &sym_extract(&b, tol)?, tol)?
        }
        StratumKind::SymRank(r) if d >= 3 && *r <= s.dim() => {
            let da = sym_decompose(&sym_extract(&a, tol)?, *r, tol)?;
            let db = sym_decompose(&sym_extract(&b, tol)?, *r, tol)?;
            connect_sym_rank_r(&da, &db, tol, rng)?
        }
        StratumKind::MultilinearRank(rs) => connect_mrank(&a, &b, rs, tol, rng)?,
        StratumKind::SymMultilinearRank(r) => {
            connect_sym_mrank(&sym_extract(&a, tol)?, &sym_extract(&b, tol)?, *r, tol, rng)?
        }
        _ => {
            return Err(Error::Unsupported(format!(
                "no path constructor for {s} without decomposition witnesses"
            )))
        }
    };
    Ok(match out {
        Connection::Path(mut p) => {
            p.stratum = s.clone();
            Connection::Path(p)
        }
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{rng_from_seed, unit_vector};
    use crate::tensor::{basis_vector, outer_product, real_vector};

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn basis_to_basis_uses_three_lerps() {
        let e = |i| basis_vector(2, i);
        let a = outer_product(ONE, &[e(0), e(0), e(0)], Field::Real);
        let b = outer_product(ONE, &[e(1), e(1), e(1)], Field::Real);
        let p = connect_rank_one(&a, &b, &tol()).unwrap();
        assert_eq!(p.segment_kinds(), vec!["FactorLerp"; 3]);
        assert!(p.endpoint_error(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn negation_is_a_single_detour() {
        let u = real_vector(&[1.0, 2.0, -1.0]);
        let v = real_vector(&[0.5, 0.5]);
        let w = real_vector(&[3.0, -1.0, 0.0, 2.0]);
        let a = outer_product(ONE, &[u.clone(), v.clone(), w.clone()], Field::Real);
        let b = a.scale(re(-1.0));
        let p = connect_rank_one(&a, &b, &tol()).unwrap();
        assert_eq!(p.segment_kinds(), vec!["DetourArc"]);
        assert!(p.endpoint_error(&a, &b).unwrap() < 1e-12);
        assert!(path_verify(&p, 32, &tol()).pass);
    }

    #[test]
    fn complex_rank_one_phase() {
        let mut rng = rng_from_seed(3);
        let f: Vec<Vector> = (0..3).map(|_| unit_vector(2, Field::Complex, &mut rng)).collect();
        let a = outer_product(C64::new(1.0, 1.0), &f, Field::Complex);
        let b = outer_product(C64::new(-2.0, 0.5), &f, Field::Complex);
        let p = connect_rank_one(&a, &b, &tol()).unwrap();
        assert!(p.segment_kinds().contains(&"ComplexPhase"));
        assert!(p.endpoint_error(&a, &b).unwrap() < 1e-12);
        assert!(path_verify(&p, 32, &tol()).pass);
    }

    #[test]
    fn sym_rank_one_odd_curve() {
        let u = real_vector(&[1.0, 0.0, 0.0]);
        let v = real_vector(&[0.0, 1.0, 0.0]);
        let a = sym_power(&u, 3, re(2.0)).unwrap();
        let b = sym_power(&v, 3, re(-5.0)).unwrap();
        let p = connect_sym_rank_one(&a, &b, &tol()).unwrap().into_path().unwrap();
        let x = &u * re(2f64.cbrt());
        let y = &v * re(-(5f64.cbrt()));
        for t in [0.25, 0.5, 0.8] {
            let z = &x * re(1.0 - t) + &y * re(t);
            let expect = outer_product(ONE, &[z.clone(), z.clone(), z], Field::Real);
            assert!(p.eval(t).dist(&expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn sym_rank_one_even_signs() {
        let u = real_vector(&[0.6, 0.8]);
        let a = sym_power(&u, 4, ONE).unwrap();
        let b = sym_power(&u, 4, re(-1.0)).unwrap();
        assert!(!connect_sym_rank_one(&a, &b, &tol()).unwrap().is_path());
        let v = real_vector(&[-0.8, 0.6]);
        let c = sym_power(&v, 4, re(3.0)).unwrap();
        let p = connect_sym_rank_one(&a, &c, &tol()).unwrap().into_path().unwrap();
        let rep = path_verify(&p, 64, &tol());
        assert!(rep.pass);
        assert!(rep.entries.iter().all(|e| e.label == Some(ComponentLabel::Sign(Sign::Plus))));
    }

    #[test]
    fn determinant_sign_blocks_matrix_paths() {
        let m = |x: [f64; 4]| Hypermatrix::from_real(&[2, 2], &x).unwrap();
        let mut rng = rng_from_seed(1);
        let (p, q, r) = (m([2.0, 1.0, 0.0, 1.0]), m([0.0, -1.0, 1.0, 0.3]), m([1.0, 0.0, 0.0, -1.0]));
        let c = connect_mrank(&p, &q, &[2, 2], &tol(), &mut rng).unwrap();
        let path = c.into_path().unwrap();
        assert!(path_verify(&path, 64, &tol()).pass);
        assert!(path.endpoint_error(&p, &q).unwrap() < 1e-10);
        assert!(!connect_mrank(&p, &r, &[2, 2], &tol(), &mut rng).unwrap().is_path());
    }

    #[test]
    fn group_path_endpoints_and_sign() {
        let mut rng = rng_from_seed(17);
        for sign in [1i8, -1] {
            let m0 = crate::sample::random_invertible(4, Field::Real, Some(sign), &mut rng);
            let m1 = crate::sample::random_invertible(4, Field::Real, Some(sign), &mut rng);
            let g = GlPath::new(&m0, &m1).unwrap();
            assert!((g.at(0.0) - &m0).norm() < 1e-12);
            assert!((g.at(1.0) - &m1).norm() < 1e-12);
            for k in 0..=50 {
                assert_eq!(det(&g.at(k as f64 / 50.0)).re.signum(), sign as f64);
            }
        }
    }

    #[test]
    fn parity_table() {
        assert_eq!(parity_fix(&[2, 2, 2], &[3, 3, 3], &[], &[]), Some(vec![]));
        assert_eq!(parity_fix(&[4, 2, 2], &[4, 2, 2], &[0], &[true]), None);
        assert_eq!(parity_fix(&[4, 2, 2], &[4, 3, 3], &[0], &[true]), None);
        assert_eq!(parity_fix(&[6, 2, 3], &[6, 3, 3], &[0], &[true]), Some(vec![1]));
        assert_eq!(parity_fix(&[2, 2], &[3, 2], &[0, 1], &[true, true]), Some(vec![0]));
    }
}
