use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TensorPath;
use crate::certify::{classify_222, is_rank_one, Class222};
use crate::classify::{classify, ComponentLabel};
use crate::error::Error;
use crate::mrank::mrank;
use crate::stratum::StratumKind;
use crate::sym::asymmetry;
use crate::tensor::{Field, Hypermatrix};
use crate::tolerance::TolerancePolicy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InStratum,
    OutOfStratum,
    UnverifiableExactly,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::InStratum => "in-stratum",
            Verdict::OutOfStratum => "out-of-stratum",
            Verdict::UnverifiableExactly => "unverifiable-exactly",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub t: f64,
    pub verdict: Verdict,
    pub mrank: Vec<usize>,
    pub min_margin: f64,
    pub label: Option<ComponentLabel>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathReport {
    /// Size of the Chebyshev grid (endpoints and joints come on top).
    pub samples: usize,
    pub entries: Vec<SampleReport>,
    pub pass: bool,
    pub min_margin: f64,
    pub label_constant: bool,
    pub joint_gap: f64,
}

impl PathReport {
    pub fn failures(&self) -> impl Iterator<Item = &SampleReport> {
        self.entries.iter().filter(|e| e.verdict == Verdict::OutOfStratum)
    }

    pub fn count(&self, v: Verdict) -> usize {
        self.entries.iter().filter(|e| e.verdict == v).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,verdict,mrank,min_margin,label\n");
        for e in &self.entries {
            let ranks = e.mrank.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",");
            let label = e.label.map(|l| l.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:.17},{},\"({})\",{:.6e},\"{}\"",
                e.t,
                e.verdict.as_str(),
                ranks,
                e.min_margin,
                label
            );
        }
        out
    }
}

/// `K` Chebyshev points of the first kind mapped to `(0,1)`.
pub fn chebyshev_grid(k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| 0.5 * (1.0 - (PI * (2 * j + 1) as f64 / (2 * k) as f64).cos()))
        .collect()
}

fn sample_times(path: &TensorPath, k: usize) -> Vec<f64> {
    let mut ts = chebyshev_grid(k);
    ts.push(0.0);
    ts.push(1.0);
    ts.extend(path.joints());
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

fn membership(path: &TensorPath, a: &Hypermatrix, tol: &TolerancePolicy) -> (Verdict, Vec<usize>, f64, Option<String>) {
    let info = match mrank(a, tol) {
        Ok(i) => i,
        Err(e) => return (Verdict::OutOfStratum, Vec::new(), 0.0, Some(e.to_string())),
    };
    let ranks = info.ranks.0.clone();
    let margin = info.min_margin();
    let s = &path.stratum;
    let real = s.field == Field::Real;
    let out = |note: &str| (Verdict::OutOfStratum, ranks.clone(), margin, Some(note.to_string()));
    let inside = (Verdict::InStratum, ranks.clone(), margin, None);
    let unverifiable =
        |note: &str| (Verdict::UnverifiableExactly, ranks.clone(), margin, Some(note.to_string()));
    if s.kind.is_symmetric() {
        match asymmetry(a) {
            Ok(x) if x <= tol.eps_rel * a.norm().max(f64::MIN_POSITIVE) => {}
            _ => return out("not symmetric"),
        }
    }
    let flat_ok = |want: &[usize]| ranks == want && margin >= tol.gap_min;
    match &s.kind {
        StratumKind::Rank(1) | StratumKind::BorderRank(1) | StratumKind::SymRank(1) | StratumKind::SymBorderRank(1) => {
            if is_rank_one(a, tol).is_some() {
                inside
            } else {
                out("not rank one")
            }
        }
        StratumKind::MultilinearRank(rs) => {
            if flat_ok(rs) {
                inside
            } else {
                out("multilinear rank or margin")
            }
        }
        StratumKind::SymMultilinearRank(r) => {
            if flat_ok(&vec![*r; s.order()]) {
                inside
            } else {
                out("multilinear rank or margin")
            }
        }
        StratumKind::Rank(_) | StratumKind::BorderRank(_) if real && s.shape == [2, 2, 2] => {
            let target = match s.kind {
                StratumKind::Rank(2) => Class222::Rank2,
                StratumKind::Rank(3) | StratumKind::BorderRank(3) => Class222::BorderRank3,
                _ => return unverifiable("no 2x2x2 certificate for this rank"),
            };
            match classify_222(a, tol) {
                Ok(c) if c.class == target => inside,
                Ok(c) if c.class == Class222::Boundary => unverifiable("hyperdeterminant within tolerance of zero"),
                Ok(_) => out("wrong 2x2x2 orbit"),
                Err(e) => out(&e.to_string()),
            }
        }
        StratumKind::Rank(r) | StratumKind::SymRank(r) => {
            let min_n = *s.shape.iter().min().expect("nonempty");
            if *r > min_n {
                return unverifiable("rank exceeds every flattening bound");
            }
            if !flat_ok(&vec![*r; s.order()]) {
                return out("flattening ranks or margin");
            }
            if path.term_bound == Some(*r) {
                inside
            } else {
                unverifiable("flattening lower bound only")
            }
        }
        StratumKind::BorderRank(_) | StratumKind::SymBorderRank(_) => {
            unverifiable("no border rank certificate")
        }
    }
}

/// Evaluates `path` on a Chebyshev grid of size `k` plus endpoints and joints,
/// certifying membership and the component label at every sample.
pub fn path_verify(path: &TensorPath, k: usize, tol: &TolerancePolicy) -> PathReport {
    let ts = sample_times(path, k);
    let entries: Vec<SampleReport> = ts
        .par_iter()
        .map(|&t| {
            let a = path.eval(t);
            let (verdict, mrank, min_margin, note) = membership(path, &a, tol);
            let label = classify(&path.stratum, &a, tol);
            let (label, note) = match label {
                Ok(l) => (Some(l), note),
                Err(Error::Unsupported(_)) => (None, note),
                Err(e) => (None, note.or_else(|| Some(format!("classifier: {e}")))),
            };
            SampleReport {
                t,
                verdict,
                mrank,
                min_margin,
                label,
                note,
            }
        })
        .collect();
    let applicable = !matches!(
        classify(&path.stratum, &path.eval(0.0), tol),
        Err(Error::Unsupported(_))
    );
    let first = entries[0].label;
    let label_constant = !applicable || (first.is_some() && entries.iter().all(|e| e.label == first));
    let min_margin = entries.iter().map(|e| e.min_margin).fold(f64::INFINITY, f64::min);
    let scale = entries
        .iter()
        .map(|e| path.eval(e.t).norm())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let joint_gap = path.joint_gap() / scale;
    let pass = entries.iter().all(|e| e.verdict != Verdict::OutOfStratum)
        && label_constant
        && joint_gap <= 1e-10;
    PathReport {
        samples: k,
        entries,
        pass,
        min_margin,
        label_constant,
        joint_gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Segment;
    use crate::stratum::StratumDescriptor;
    use crate::tensor::{re, Matrix};

    fn diag(a: f64, b: f64) -> Hypermatrix {
        Hypermatrix::from_real(&[2, 2], &[a, 0.0, 0.0, b]).unwrap()
    }

    #[test]
    fn grid_is_symmetric_and_interior() {
        let g = chebyshev_grid(8);
        assert_eq!(g.len(), 8);
        for (x, y) in g.iter().zip(g.iter().rev()) {
            assert!((x + y - 1.0).abs() < 1e-15);
            assert!(*x > 0.0 && *x < 1.0);
        }
    }

    #[test]
    fn constant_path_passes_with_endpoint_margin() {
        let s = StratumDescriptor::mrank(&[2, 2], &[2, 2], Field::Real).unwrap();
        let a = diag(1.0, 0.5);
        let p = TensorPath::constant(s, &a);
        let rep = path_verify(&p, 16, &TolerancePolicy::default());
        assert!(rep.pass);
        assert!((rep.min_margin - 0.5).abs() < 1e-12);
    }

    #[test]
    fn straight_line_across_determinant_zero_fails() {
        let s = StratumDescriptor::mrank(&[2, 2], &[2, 2], Field::Real).unwrap();
        let id = Matrix::identity(2, 2);
        let seg = Segment::CoreLerp {
            frames: vec![id.clone(), id],
            start: diag(1.0, 1.0),
            end: diag(1.0, -1.0),
        };
        let p = TensorPath::from_segments(s, Field::Real, vec![2, 2], vec![seg], None).unwrap();
        assert!(p.eval(0.5).get(&[1, 1]) == re(0.0));
        let rep = path_verify(&p, 65, &TolerancePolicy::default());
        assert!(!rep.pass);
        assert!(!rep.label_constant);
        let bad = rep.failures().next().unwrap();
        assert!((bad.t - 0.5).abs() < 1e-12);
        let csv = rep.to_csv();
        assert!(csv.starts_with("t,verdict,mrank,min_margin,label\n"));
        assert!(csv.contains("out-of-stratum"));
    }
}
