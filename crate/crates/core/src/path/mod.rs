//! Piecewise parametric paths `t ∈ [0,1] ↦ tensor` and their verification.

mod connect;
mod verify;

pub use connect::*;
pub use verify::*;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{polar_real, svd};
use crate::stratum::StratumDescriptor;
use crate::subspace::Geodesic;
use crate::tensor::{outer_product, re, Field, Hypermatrix, Matrix, Vector, C64};

fn lerp_vec(a: &Vector, b: &Vector, s: f64) -> Vector {
    a * re(1.0 - s) + b * re(s)
}

/// `O(s) · S(s)` with `O(s) = O₀ · Rot(s·φ)` and `S(s)` the straight line
/// between two symmetric positive definite factors (2×2 only).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarPath {
    pub o_start: Matrix,
    pub angle: f64,
    pub s_start: Matrix,
    pub s_end: Matrix,
}

impl PolarPath {
    /// Path in `GL₂(ℝ)` from `g` to `h`; their determinants must share a sign.
    pub fn new(g: &Matrix, h: &Matrix) -> Result<Self> {
        if g.shape() != (2, 2) || h.shape() != (2, 2) {
            return Err(Error::Shape("polar paths are implemented for 2x2 matrices".into()));
        }
        let (og, sg) = polar_real(g);
        let (oh, sh) = polar_real(h);
        let rel = og.transpose() * &oh;
        let det = (rel[(0, 0)] * rel[(1, 1)] - rel[(0, 1)] * rel[(1, 0)]).re;
        if det < 0.0 {
            return Err(Error::InvalidParameter(
                "endpoints lie in different components of GL(2)".into(),
            ));
        }
        let angle = rel[(1, 0)].re.atan2(rel[(0, 0)].re);
        Ok(Self {
            o_start: og,
            angle,
            s_start: sg,
            s_end: sh,
        })
    }

    pub fn at(&self, s: f64) -> Matrix {
        let (c, n) = ((self.angle * s).cos(), (self.angle * s).sin());
        let rot = Matrix::from_row_slice(2, 2, &[re(c), re(-n), re(n), re(c)]);
        let p = &self.s_start * re(1.0 - s) + &self.s_end * re(s);
        &self.o_start * rot * p
    }
}

/// One piece of a path, parametrized by a local `s ∈ [0,1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Segment {
    /// `scalar · ⊗ᵢ ((1−s)·startᵢ + s·endᵢ)`.
    FactorLerp {
        scalar: C64,
        start: Vec<Vector>,
        end: Vec<Vector>,
    },
    /// Two straight pieces `start → via → end` in the listed modes, joined at `s = 1/2`.
    DetourArc {
        scalar: C64,
        modes: Vec<usize>,
        start: Vec<Vector>,
        via: Vec<Vector>,
        end: Vec<Vector>,
    },
    /// `((1−s)·start + s·end) · ⊗ factors`.
    ScalarScale {
        factors: Vec<Vector>,
        start: C64,
        end: C64,
    },
    /// `scalar · e^{i·angle·s} · ⊗ factors`.
    ComplexPhase {
        factors: Vec<Vector>,
        scalar: C64,
        angle: f64,
    },
    /// `core ×ᵢ Yᵢ(s)` along per-mode Grassmannian geodesics.
    FrameTransport {
        core: Hypermatrix,
        geodesics: Vec<Geodesic>,
    },
    /// `((1−s)·start + s·end) ×ᵢ frameᵢ`.
    CoreLerp {
        frames: Vec<Matrix>,
        start: Hypermatrix,
        end: Hypermatrix,
    },
    /// `base ×ᵢ gᵢ(s)` for paths `gᵢ` in `GL₂(ℝ)`.
    OrbitTransport {
        base: Hypermatrix,
        group: Vec<PolarPath>,
    },
    /// Pointwise sum of paths evaluated at the same `s`.
    TermSum { terms: Vec<TensorPath> },
    /// A nested path run over the segment's interval.
    Nested { path: Box<TensorPath> },
}

impl Segment {
    fn eval(&self, s: f64, field: Field) -> Hypermatrix {
        match self {
            Segment::FactorLerp { scalar, start, end } => {
                let f: Vec<Vector> = start.iter().zip(end).map(|(a, b)| lerp_vec(a, b, s)).collect();
                outer_product(*scalar, &f, field)
            }
            Segment::DetourArc {
                scalar,
                modes,
                start,
                via,
                end,
            } => {
                let f: Vec<Vector> = (0..start.len())
                    .map(|i| {
                        if !modes.contains(&i) {
                            start[i].clone()
                        } else if s <= 0.5 {
                            lerp_vec(&start[i], &via[i], 2.0 * s)
                        } else {
                            lerp_vec(&via[i], &end[i], 2.0 * s - 1.0)
                        }
                    })
                    .collect();
                outer_product(*scalar, &f, field)
            }
            Segment::ScalarScale {
                factors,
                start,
                end,
            } => outer_product(start * (1.0 - s) + end * s, factors, field),
            Segment::ComplexPhase {
                factors,
                scalar,
                angle,
            } => outer_product(scalar * C64::from_polar(1.0, angle * s), factors, field),
            Segment::FrameTransport { core, geodesics } => {
                let mats: Vec<Matrix> = geodesics.iter().map(|g| g.frame_at(s)).collect();
                core.multilinear(&mats)
                    .expect("frames match core")
                    .with_field(field)
            }
            Segment::CoreLerp { frames, start, end } => Hypermatrix::lerp(start, end, s)
                .expect("cores share a shape")
                .multilinear(frames)
                .expect("frames match core")
                .with_field(field),
            Segment::OrbitTransport { base, group } => {
                let mats: Vec<Matrix> = group.iter().map(|g| g.at(s)).collect();
                base.multilinear(&mats)
                    .expect("2x2 group elements")
                    .with_field(field)
            }
            Segment::TermSum { terms } => {
                let mut acc = terms[0].eval(s);
                for t in &terms[1..] {
                    acc.add_scaled(re(1.0), &t.eval(s)).expect("terms share a shape");
                }
                acc.with_field(field)
            }
            Segment::Nested { path } => path.eval(s),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Segment::FactorLerp { .. } => "FactorLerp",
            Segment::DetourArc { .. } => "DetourArc",
            Segment::ScalarScale { .. } => "ScalarScale",
            Segment::ComplexPhase { .. } => "ComplexPhase",
            Segment::FrameTransport { .. } => "FrameTransport",
            Segment::CoreLerp { .. } => "CoreLerp",
            Segment::OrbitTransport { .. } => "OrbitTransport",
            Segment::TermSum { .. } => "TermSum",
            Segment::Nested { .. } => "Nested",
        }
    }

    /// Interior joints of nested structure, in local coordinates.
    fn inner_joints(&self) -> Vec<f64> {
        match self {
            Segment::DetourArc { .. } => vec![0.5],
            Segment::TermSum { terms } => terms.iter().flat_map(|t| t.joints()).collect(),
            Segment::Nested { path } => path.joints(),
            _ => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedSegment {
    pub t0: f64,
    pub t1: f64,
    pub segment: Segment,
}

/// A continuous curve through a stratum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorPath {
    pub stratum: StratumDescriptor,
    pub field: Field,
    pub shape: Vec<usize>,
    pub segments: Vec<TimedSegment>,
    /// Upper bound on the rank of every point, known from the construction.
    pub term_bound: Option<usize>,
}

impl TensorPath {
    /// Spreads `segments` over equal sub-intervals of `[0,1]`.
    pub fn from_segments(
        stratum: StratumDescriptor,
        field: Field,
        shape: Vec<usize>,
        segments: Vec<Segment>,
        term_bound: Option<usize>,
    ) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidParameter("a path needs at least one segment".into()));
        }
        let count = segments.len();
        let m = count as f64;
        let segments = segments
            .into_iter()
            .enumerate()
            .map(|(k, segment)| TimedSegment {
                t0: k as f64 / m,
                t1: if k + 1 == count { 1.0 } else { (k + 1) as f64 / m },
                segment,
            })
            .collect();
        Ok(Self {
            stratum,
            field,
            shape,
            segments,
            term_bound,
        })
    }

    /// Constant path at `a`.
    pub fn constant(stratum: StratumDescriptor, a: &Hypermatrix) -> Self {
        let frames: Vec<Matrix> = a.shape().iter().map(|&n| Matrix::identity(n, n)).collect();
        Self {
            stratum,
            field: a.field(),
            shape: a.shape().to_vec(),
            segments: vec![TimedSegment {
                t0: 0.0,
                t1: 1.0,
                segment: Segment::CoreLerp {
                    frames,
                    start: a.clone(),
                    end: a.clone(),
                },
            }],
            term_bound: None,
        }
    }

    /// Runs `self` then `next`, each over half of `[0,1]`.
    pub fn concat(self, next: TensorPath) -> Result<Self> {
        if self.shape != next.shape {
            return Err(Error::Shape("paths of different shapes".into()));
        }
        let term_bound = match (self.term_bound, next.term_bound) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        let field = self.field.join(next.field);
        let stratum = self.stratum.clone();
        let shape = self.shape.clone();
        Self::from_segments(
            stratum,
            field,
            shape,
            vec![
                Segment::Nested { path: Box::new(self) },
                Segment::Nested { path: Box::new(next) },
            ],
            term_bound,
        )
    }

    fn locate(&self, t: f64) -> (&TimedSegment, f64) {
        let t = t.clamp(0.0, 1.0);
        let seg = self
            .segments
            .iter()
            .find(|s| t <= s.t1)
            .unwrap_or_else(|| self.segments.last().expect("nonempty"));
        let width = seg.t1 - seg.t0;
        let s = if width > 0.0 { ((t - seg.t0) / width).clamp(0.0, 1.0) } else { 0.0 };
        (seg, s)
    }

    pub fn eval(&self, t: f64) -> Hypermatrix {
        let (seg, s) = self.locate(t);
        seg.segment.eval(s, self.field)
    }

    /// All joints in `(0,1)`, including those of nested segments.
    pub fn joints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (k, seg) in self.segments.iter().enumerate() {
            if k > 0 {
                out.push(seg.t0);
            }
            let w = seg.t1 - seg.t0;
            out.extend(seg.segment.inner_joints().into_iter().map(|s| seg.t0 + w * s));
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// Largest `‖left limit − right limit‖` over top-level and nested joints.
    pub fn joint_gap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for pair in self.segments.windows(2) {
            let left = pair[0].segment.eval(1.0, self.field);
            let right = pair[1].segment.eval(0.0, self.field);
            worst = worst.max(left.dist(&right).unwrap_or(f64::INFINITY));
        }
        for seg in &self.segments {
            worst = worst.max(match &seg.segment {
                Segment::TermSum { terms } => terms.iter().map(|t| t.joint_gap()).fold(0.0, f64::max),
                Segment::Nested { path } => path.joint_gap(),
                _ => 0.0,
            });
        }
        worst
    }

    pub fn segment_kinds(&self) -> Vec<&'static str> {
        self.segments.iter().map(|s| s.segment.kind()).collect()
    }

    /// Largest relative deviation of `eval(0)`, `eval(1)` from the given endpoints.
    pub fn endpoint_error(&self, a: &Hypermatrix, b: &Hypermatrix) -> Result<f64> {
        Ok(a.rel_dist(&self.eval(0.0))?.max(b.rel_dist(&self.eval(1.0))?))
    }
}

/// Singular values of the mode flattenings at `a`, used for CSV dumps.
pub fn flattening_spectrum(a: &Hypermatrix) -> Vec<Vec<f64>> {
    (0..a.order())
        .map(|i| a.flatten(i).map(|m| svd(&m).s).unwrap_or_default())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{basis_vector, ONE};

    fn stratum() -> StratumDescriptor {
        StratumDescriptor::rank(1, &[2, 2, 2], Field::Real).unwrap()
    }

    #[test]
    fn factor_lerp_endpoints_and_joints() {
        let e = |i| basis_vector(2, i);
        let seg = Segment::FactorLerp {
            scalar: ONE,
            start: vec![e(0), e(0), e(0)],
            end: vec![e(1), e(0), e(0)],
        };
        let p = TensorPath::from_segments(stratum(), Field::Real, vec![2, 2, 2], vec![seg.clone(), seg], None)
            .unwrap();
        assert_eq!(p.segments[1].t0, 0.5);
        assert_eq!(p.segments[1].t1, 1.0);
        assert_eq!(p.joints(), vec![0.5]);
        assert_eq!(p.eval(0.0).get(&[0, 0, 0]), ONE);
        assert_eq!(p.eval(1.0).get(&[1, 0, 0]), ONE);
        assert!(p.joint_gap() > 0.5);
    }

    #[test]
    fn polar_path_keeps_determinant_sign() {
        let g = Matrix::from_row_slice(2, 2, &[re(2.0), re(1.0), re(0.0), re(1.0)]);
        let h = Matrix::from_row_slice(2, 2, &[re(0.0), re(-1.0), re(3.0), re(0.5)]);
        let p = PolarPath::new(&g, &h).unwrap();
        assert!((p.at(0.0) - &g).norm() < 1e-12);
        assert!((p.at(1.0) - &h).norm() < 1e-12);
        for k in 0..=20 {
            let m = p.at(k as f64 / 20.0);
            assert!((m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).re > 0.0);
        }
        let flip = Matrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]);
        assert!(PolarPath::new(&g, &flip).is_err());
    }
}
