//! Connected-component invariants.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::certify::{classify_222, conjugate_pair_222, is_rank_one, omega, Class222};
use crate::error::{Error, Result};
use crate::linalg::{det, numerical_rank};
use crate::mrank::{mrank, MultilinearRank};
use crate::stratum::{StratumDescriptor, StratumKind};
use crate::sym::{binomial, flattening_inertia, multiset_count, sym_extract, SymRankDecomposition, SymTensor};
use crate::tensor::{Field, Hypermatrix};
use crate::tolerance::TolerancePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Minus
        } else {
            Sign::Plus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        if self == other {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SignTriple {
    pub s12: Sign,
    pub s13: Sign,
    pub s23: Sign,
}

impl SignTriple {
    pub fn product(&self) -> Sign {
        self.s12.times(self.s13).times(self.s23)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum ComponentLabel {
    Single,
    Sign(Sign),
    /// `positive` of `rank` coefficients are positive.
    Signature { positive: usize, rank: usize },
    SignTriple(SignTriple),
}

impl fmt::Display for ComponentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ComponentLabel::Single => f.write_str("single"),
            ComponentLabel::Sign(s) => write!(f, "sign({s})"),
            ComponentLabel::Signature { positive, rank } => {
                write!(f, "signature({positive}/{rank})")
            }
            ComponentLabel::SignTriple(t) => write!(f, "signs({},{},{})", t.s12, t.s13, t.s23),
        }
    }
}

/// Sign of the diagonal sum `Σᵢ A[i,…,i]` of an even-order real symmetric rank-one tensor.
pub fn sym_sign_rank1(a: &SymTensor, tol: &TolerancePolicy) -> Result<Sign> {
    if !a.order().is_multiple_of(2) || a.field() != Field::Real {
        return Err(Error::InvalidParameter(
            "sign invariant needs a real tensor of even order".into(),
        ));
    }
    let full = a.embed();
    if is_rank_one(&full, tol).is_none() {
        return Err(Error::NotInStratum("not symmetric rank one".into()));
    }
    let phi: f64 = (0..a.dim()).map(|i| a.get(&vec![i; a.order()]).re).sum();
    if phi.abs() <= tol.eps_rel * full.norm() {
        return Err(Error::NotInStratum(format!("diagonal sum {phi:.3e} vanishes")));
    }
    Ok(Sign::of(phi))
}

/// Number of positive coefficients of an even-order real decomposition.
pub fn sym_signature(dec: &SymRankDecomposition) -> Result<ComponentLabel> {
    if !dec.order.is_multiple_of(2) || dec.field != Field::Real {
        return Err(Error::InvalidParameter(
            "signature needs a real decomposition of even order".into(),
        ));
    }
    let mut positive = 0;
    for (lambda, v) in &dec.terms {
        let c = lambda.re * v.norm().powi(dec.order as i32);
        if c == 0.0 {
            return Err(Error::InvalidParameter("zero coefficient".into()));
        }
        if c > 0.0 {
            positive += 1;
        }
    }
    Ok(ComponentLabel::Signature {
        positive,
        rank: dec.rank(),
    })
}

/// Sign of `det ♭ᵢ(A)` for a square, invertible flattening.
pub fn det_sign_mrank(a: &Hypermatrix, mode: usize, tol: &TolerancePolicy) -> Result<Sign> {
    if a.field() != Field::Real {
        return Err(Error::InvalidParameter("determinant sign needs a real tensor".into()));
    }
    let flat = a.flatten(mode)?;
    if flat.nrows() != flat.ncols() {
        return Err(Error::Shape(format!(
            "flattening {} is {}x{}, not square",
            mode,
            flat.nrows(),
            flat.ncols()
        )));
    }
    let info = numerical_rank(&flat, tol)?;
    if info.rank < flat.nrows() {
        return Err(Error::NotInStratum(format!(
            "flattening {mode} is numerically singular"
        )));
    }
    Ok(Sign::of(det(&flat).re))
}

fn reference_tensor() -> Hypermatrix {
    let mut data = [0.0; 8];
    data[0] = 1.0; // a000
    data[6] = 1.0; // a110
    data[3] = -1.0; // a011
    data[5] = 1.0; // a101
    Hypermatrix::from_real(&[2, 2, 2], &data).expect("static shape")
}

fn raw_sign_triple(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<SignTriple> {
    let [p, q, r] = conjugate_pair_222(a, tol)?;
    let mut w = [0.0; 3];
    for (k, x) in [&p, &q, &r].into_iter().enumerate() {
        w[k] = omega(x);
        if w[k].abs() <= tol.gap_min * x.norm_squared() {
            return Err(Error::Tolerance(format!("omega of factor {} vanishes", k + 1)));
        }
    }
    Ok(SignTriple {
        s12: Sign::of(w[0] * w[1]),
        s13: Sign::of(w[0] * w[2]),
        s23: Sign::of(w[1] * w[2]),
    })
}

fn baseline() -> SignTriple {
    static BASE: OnceLock<SignTriple> = OnceLock::new();
    *BASE.get_or_init(|| {
        raw_sign_triple(&reference_tensor(), &TolerancePolicy::default())
            .expect("reference tensor has negative hyperdeterminant")
    })
}

/// Component label of a real 2×2×2 tensor with negative hyperdeterminant,
/// normalized so that the reference tensor with entries
/// `a000 = a110 = a101 = 1`, `a011 = −1` is `(+,+,+)`.
pub fn classify_brank3_222(a: &Hypermatrix, tol: &TolerancePolicy) -> Result<SignTriple> {
    let raw = raw_sign_triple(a, tol)?;
    let b = baseline();
    Ok(SignTriple {
        s12: raw.s12.times(b.s12),
        s13: raw.s13.times(b.s13),
        s23: raw.s23.times(b.s23),
    })
}

/// Expected rank bound `⌈∏n / (Σn − d + 1)⌉` for generic complex rank.
pub fn expected_generic_rank(shape: &[usize]) -> usize {
    let total: usize = shape.iter().product();
    let dim = shape.iter().sum::<usize>() - shape.len() + 1;
    total.div_ceil(dim)
}

/// Whether the real rank-`r` stratum on `shape` is covered by the connectivity result used here.
pub fn real_rank_connected_case(shape: &[usize], r: usize) -> bool {
    let min_n = *shape.iter().min().expect("nonempty shape");
    r == 1 || (shape.len() >= 3 && r <= min_n && r < expected_generic_rank(shape))
}

/// Whether real odd-order symmetric rank `r` is a connected case.
pub fn sym_odd_connected_case(n: usize, d: usize, r: usize) -> bool {
    r == 1 || (n > 2 && r * n < binomial(n + d - 1, d))
}

/// Even-order symmetric rank `r` has `r + 1` components in this range, and a
/// witness-free signature when the `v^{⊗d/2}` can be independent.
pub fn sym_even_signature_supported(n: usize, d: usize, r: usize) -> bool {
    n > 2 && r * n < binomial(n + d - 1, d) && r <= multiset_count(n, d / 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaturationCase {
    /// Every mode saturated with a square flattening at mode `i`.
    SaturatedSquare(usize),
    /// `r_i = ∏ r_j = n_i` for some `i` while some other mode has room.
    Mixed(usize),
    Generic,
}

pub fn saturation_case(ranks: &[usize], shape: &[usize]) -> SaturationCase {
    let m = MultilinearRank(ranks.to_vec());
    for i in m.square_modes() {
        if ranks[i] == shape[i] {
            return if ranks.iter().zip(shape).all(|(r, n)| r == n) {
                SaturationCase::SaturatedSquare(i)
            } else {
                SaturationCase::Mixed(i)
            };
        }
    }
    SaturationCase::Generic
}

/// Number of connected components the classifier distinguishes, when known.
pub fn expected_component_count(s: &StratumDescriptor) -> Option<usize> {
    if s.field == Field::Complex {
        return Some(1);
    }
    let d = s.order();
    let n = s.dim();
    match &s.kind {
        StratumKind::Rank(r) => real_rank_connected_case(&s.shape, *r).then_some(1),
        StratumKind::BorderRank(1) => Some(1),
        StratumKind::BorderRank(3) if s.shape == [2, 2, 2] => Some(4),
        StratumKind::BorderRank(_) => None,
        StratumKind::SymRank(r) if d % 2 == 1 => sym_odd_connected_case(n, d, *r).then_some(1),
        StratumKind::SymBorderRank(1) if d % 2 == 1 => Some(1),
        StratumKind::SymRank(1) | StratumKind::SymBorderRank(1) => Some(2),
        StratumKind::SymRank(r) => sym_even_signature_supported(n, d, *r).then_some(r + 1),
        StratumKind::SymBorderRank(_) => None,
        StratumKind::MultilinearRank(rs) => match saturation_case(rs, &s.shape) {
            SaturationCase::SaturatedSquare(_) => Some(2),
            SaturationCase::Mixed(_) => None,
            SaturationCase::Generic => Some(1),
        },
        StratumKind::SymMultilinearRank(r) => {
            if *r == 1 {
                Some(if d.is_multiple_of(2) { 2 } else { 1 })
            } else if d == 2 {
                Some(r + 1)
            } else {
                Some(1)
            }
        }
    }
}

fn check_membership_mrank(a: &Hypermatrix, want: &[usize], tol: &TolerancePolicy) -> Result<()> {
    let info = mrank(a, tol)?;
    if info.ranks.0 != want {
        return Err(Error::NotInStratum(format!(
            "multilinear rank {} differs from {:?}",
            info.ranks, want
        )));
    }
    if info.min_margin() < tol.gap_min {
        return Err(Error::Tolerance(format!(
            "flattening margin {:.3e} below gap_min",
            info.min_margin()
        )));
    }
    Ok(())
}

fn unsupported(s: &StratumDescriptor) -> Error {
    Error::Unsupported(format!("no component classifier for {s}"))
}

/// Component label of `a` within stratum `s`.
pub fn classify(s: &StratumDescriptor, a: &Hypermatrix, tol: &TolerancePolicy) -> Result<ComponentLabel> {
    if a.shape() != s.shape.as_slice() {
        return Err(Error::Shape(format!(
            "tensor shape {:?} does not match stratum {s}",
            a.shape()
        )));
    }
    if s.field == Field::Real && a.field() == Field::Complex {
        return Err(Error::InvalidParameter(format!(
            "complex tensor given for real stratum {s}"
        )));
    }
    a.ensure_finite()?;
    let d = s.order();
    let n = s.dim();
    let sym = if s.kind.is_symmetric() {
        Some(sym_extract(a, tol)?)
    } else {
        None
    };
    let real = s.field == Field::Real;
    match &s.kind {
        StratumKind::Rank(1) | StratumKind::BorderRank(1) => {
            is_rank_one(a, tol).ok_or_else(|| Error::NotInStratum("not rank one".into()))?;
            Ok(ComponentLabel::Single)
        }
        StratumKind::Rank(r) => {
            if real && !real_rank_connected_case(&s.shape, *r) {
                return Err(unsupported(s));
            }
            let want: Vec<usize> = s.shape.iter().map(|&m| m.min(*r)).collect();
            if *r <= *s.shape.iter().min().expect("nonempty") {
                check_membership_mrank(a, &want, tol)?;
            }
            Ok(ComponentLabel::Single)
        }
        StratumKind::BorderRank(3) if real && s.shape == [2, 2, 2] => {
            let c = classify_222(a, tol)?;
            if c.class != Class222::BorderRank3 {
                return Err(Error::NotInStratum(format!(
                    "hyperdeterminant {:.3e} is not negative",
                    c.hyperdet
                )));
            }
            Ok(ComponentLabel::SignTriple(classify_brank3_222(a, tol)?))
        }
        StratumKind::BorderRank(_) if real => Err(unsupported(s)),
        StratumKind::BorderRank(_) => Ok(ComponentLabel::Single),
        StratumKind::SymRank(1) | StratumKind::SymBorderRank(1) => {
            let st = sym.expect("symmetric");
            if real && d.is_multiple_of(2) {
                Ok(ComponentLabel::Sign(sym_sign_rank1(&st, tol)?))
            } else {
                is_rank_one(a, tol).ok_or_else(|| Error::NotInStratum("not rank one".into()))?;
                Ok(ComponentLabel::Single)
            }
        }
        StratumKind::SymBorderRank(_) if real => Err(unsupported(s)),
        StratumKind::SymRank(r) | StratumKind::SymBorderRank(r) => {
            if *r <= n {
                check_membership_mrank(a, &vec![*r; d], tol)?;
            }
            if !real {
                return Ok(ComponentLabel::Single);
            }
            if d % 2 == 1 {
                if !sym_odd_connected_case(n, d, *r) {
                    return Err(unsupported(s));
                }
                return Ok(ComponentLabel::Single);
            }
            if !sym_even_signature_supported(n, d, *r) {
                return Err(unsupported(s));
            }
            let (p, q, margin) = flattening_inertia(&sym.expect("symmetric"), tol)?;
            if p + q != *r {
                return Err(Error::NotInStratum(format!(
                    "middle flattening has rank {} instead of {r}",
                    p + q
                )));
            }
            if margin < tol.gap_min {
                return Err(Error::Tolerance(format!(
                    "signature margin {margin:.3e} below gap_min"
                )));
            }
            Ok(ComponentLabel::Signature {
                positive: p,
                rank: *r,
            })
        }
        StratumKind::MultilinearRank(rs) => {
            check_membership_mrank(a, rs, tol)?;
            if !real {
                return Ok(ComponentLabel::Single);
            }
            match saturation_case(rs, &s.shape) {
                SaturationCase::SaturatedSquare(i) => Ok(ComponentLabel::Sign(det_sign_mrank(a, i, tol)?)),
                SaturationCase::Mixed(_) => Err(Error::Unsupported(format!(
                    "{s}: square flattening with unsaturated modes has no certified classifier; see the monodromy probe"
                ))),
                SaturationCase::Generic => Ok(ComponentLabel::Single),
            }
        }
        StratumKind::SymMultilinearRank(r) => {
            check_membership_mrank(a, &vec![*r; d], tol)?;
            if !real {
                return Ok(ComponentLabel::Single);
            }
            let st = sym.expect("symmetric");
            if *r == 1 {
                return if d.is_multiple_of(2) {
                    Ok(ComponentLabel::Sign(sym_sign_rank1(&st, tol)?))
                } else {
                    Ok(ComponentLabel::Single)
                };
            }
            if d == 2 {
                let (p, q, margin) = flattening_inertia(&st, tol)?;
                if p + q != *r || margin < tol.gap_min {
                    return Err(Error::NotInStratum("matrix rank or inertia margin".into()));
                }
                return Ok(ComponentLabel::Signature {
                    positive: p,
                    rank: *r,
                });
            }
            Ok(ComponentLabel::Single)
        }
    }
}

/// Label from a symmetric decomposition witness.
pub fn classify_sym_witness(
    s: &StratumDescriptor,
    dec: &SymRankDecomposition,
    tol: &TolerancePolicy,
) -> Result<ComponentLabel> {
    match s.kind {
        StratumKind::SymRank(r) if dec.rank() == r => {
            if s.field == Field::Complex || s.order() % 2 == 1 {
                return Ok(ComponentLabel::Single);
            }
            if r == 1 {
                return Ok(ComponentLabel::Sign(sym_sign_rank1(&dec.to_sym_tensor(), tol)?));
            }
            sym_signature(dec)
        }
        _ => Err(Error::InvalidParameter(format!(
            "witness of rank {} does not match {s}",
            dec.rank()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{random_invertible, rng_from_seed};
    use crate::sym::sym_power;
    use crate::tensor::{basis_vector, re, real_vector};

    #[test]
    fn sym_rank_one_signs() {
        let tol = TolerancePolicy::default();
        let a = sym_power(&basis_vector(3, 0), 4, re(-2.0)).unwrap();
        assert_eq!(sym_sign_rank1(&a, &tol).unwrap(), Sign::Minus);
        let u = real_vector(&[0.3, -1.2, 0.7]);
        let b = sym_power(&u, 4, re(1.0)).unwrap();
        assert_eq!(sym_sign_rank1(&b, &tol).unwrap(), Sign::Plus);
    }

    #[test]
    fn signature_examples() {
        let dec = SymRankDecomposition::new(
            4,
            Field::Real,
            vec![
                (re(1.0), real_vector(&[1.0, 0.0])),
                (re(-1.0), real_vector(&[0.0, 1.0])),
            ],
        )
        .unwrap();
        assert_eq!(
            sym_signature(&dec).unwrap(),
            ComponentLabel::Signature { positive: 1, rank: 2 }
        );
        let mut flipped = dec.clone();
        flipped.terms.reverse();
        flipped.terms[0].1 = -flipped.terms[0].1.clone();
        assert_eq!(sym_signature(&flipped).unwrap(), sym_signature(&dec).unwrap());
    }

    #[test]
    fn determinant_signs() {
        let tol = TolerancePolicy::default();
        let id = Hypermatrix::from_real(&[2, 2], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(det_sign_mrank(&id, 0, &tol).unwrap(), Sign::Plus);
        let flip = Hypermatrix::from_real(&[2, 2], &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(det_sign_mrank(&flip, 0, &tol).unwrap(), Sign::Minus);
        let cube = Hypermatrix::zeros(&[2, 2, 2], Field::Real);
        assert!(det_sign_mrank(&cube, 0, &tol).is_err());
    }

    #[test]
    fn reference_tensor_is_baseline_and_flips_follow_determinants() {
        let tol = TolerancePolicy::default();
        let b = reference_tensor();
        let base = classify_brank3_222(&b, &tol).unwrap();
        assert_eq!(
            base,
            SignTriple { s12: Sign::Plus, s13: Sign::Plus, s23: Sign::Plus }
        );
        let mut rng = rng_from_seed(21);
        let g1 = random_invertible(2, Field::Real, Some(-1), &mut rng);
        let g2 = random_invertible(2, Field::Real, Some(-1), &mut rng);
        let g3 = random_invertible(2, Field::Real, Some(1), &mut rng);
        let moved = b.multilinear(&[g1, g2, g3]).unwrap();
        let label = classify_brank3_222(&moved, &tol).unwrap();
        assert_eq!(
            label,
            SignTriple { s12: Sign::Plus, s13: Sign::Minus, s23: Sign::Minus }
        );
        assert_eq!(label.product(), Sign::Plus);
    }

    #[test]
    fn dispatcher_examples() {
        let tol = TolerancePolicy::default();
        let s: StratumDescriptor = "brank:r=3;shape=2,2,2;field=real".parse().unwrap();
        assert!(matches!(
            classify(&s, &reference_tensor(), &tol).unwrap(),
            ComponentLabel::SignTriple(_)
        ));
        let m: StratumDescriptor = "mrank:r=2,2;shape=2,2;field=real".parse().unwrap();
        let flip = Hypermatrix::from_real(&[2, 2], &[1.0, 0.0, 0.0, -1.0]).unwrap();
        assert_eq!(classify(&m, &flip, &tol).unwrap(), ComponentLabel::Sign(Sign::Minus));
        let mixed: StratumDescriptor = "mrank:r=4,2,2;shape=4,3,3;field=real".parse().unwrap();
        assert_eq!(expected_component_count(&mixed), None);
        let c: StratumDescriptor = "mrank:r=2,2;shape=2,2;field=complex".parse().unwrap();
        assert_eq!(
            classify(&c, &flip.clone().with_field(Field::Complex), &tol).unwrap(),
            ComponentLabel::Single
        );
    }

    #[test]
    fn component_counts() {
        let parse = |s: &str| s.parse::<StratumDescriptor>().unwrap();
        assert_eq!(expected_component_count(&parse("brank:r=3;shape=2,2,2")), Some(4));
        assert_eq!(expected_component_count(&parse("sym-rank:d=4;n=4;r=2")), Some(3));
        assert_eq!(expected_component_count(&parse("sym-rank:d=3;n=4;r=2")), Some(1));
        assert_eq!(expected_component_count(&parse("mrank:r=4,2,2;shape=4,2,2")), Some(2));
        assert_eq!(expected_component_count(&parse("mrank:r=4,2,2;shape=5,2,2")), Some(1));
        assert_eq!(expected_component_count(&parse("rank:r=1;shape=3,3,3")), Some(1));
        assert_eq!(expected_component_count(&parse("rank:r=2;shape=3,3,3")), Some(1));
    }
}
