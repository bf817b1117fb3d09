//! Orientation loops in the mixed saturation case `r_i = ∏_{j≠i} r_j = n_i`
//! with some `n_j > r_j`.
//!
//! Each loop transports a fixed core once around a closed frame loop in
//! `Gr(r_j, n_j)` whose frame returns with one column negated. Reading the
//! endpoint back in the starting frames multiplies the determinant of the
//! square core flattening by `(−1)^{∏_{k≠i,j} r_k}`. A flip observed along a
//! verified in-stratum loop is evidence against the determinant sign being a
//! component invariant. It is not a proof.

use serde::{Deserialize, Serialize};
use ttk_core::classify::{saturation_case, SaturationCase, Sign};
use ttk_core::linalg::det;
use ttk_core::path::{path_verify, Segment, TensorPath};
use ttk_core::sample::{rng_from_seed, sample_fixed_mrank};
use ttk_core::stratum::StratumDescriptor;
use ttk_core::subspace::Geodesic;
use ttk_core::{Error, Field, Hypermatrix, Matrix, Result, TolerancePolicy};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub mode: usize,
    /// `∏_{k≠i,j} r_k`, the power of `det(diag(−1,1,…))` picked up by the square flattening.
    pub exponent: usize,
    pub parity_predicts_flip: bool,
    pub sign_flipped: bool,
    pub all_in_stratum: bool,
    pub min_margin: f64,
    pub samples: usize,
    /// Relative distance between the loop's endpoints (the loop moves the tensor unless the core is fixed).
    pub endpoint_distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyReport {
    pub r: Vec<usize>,
    pub n: Vec<usize>,
    pub seed: u64,
    pub saturated_mode: usize,
    pub base_sign: Sign,
    pub loops: Vec<LoopRecord>,
    pub flip_observed: bool,
    pub evidence: String,
}

impl MonodromyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn core_sign(core: &Hypermatrix, mode: usize) -> Result<Sign> {
    Ok(Sign::of(det(&core.flatten(mode)?).re))
}

/// Runs one orientation loop per unsaturated mode and reports determinant flips.
pub fn monodromy_probe(r: &[usize], n: &[usize], seed: u64, k: usize, tol: &TolerancePolicy) -> Result<MonodromyReport> {
    if r.len() != n.len() || r.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "rank tuple {r:?} and shape {n:?} must have the same length >= 2"
        )));
    }
    let i = match saturation_case(r, n) {
        SaturationCase::Mixed(i) => i,
        SaturationCase::SaturatedSquare(_) => {
            return Err(Error::InvalidParameter(format!(
                "r={r:?} saturates every mode of n={n:?}; the determinant sign classifies this case"
            )))
        }
        SaturationCase::Generic => {
            return Err(Error::InvalidParameter(format!(
                "r={r:?}, n={n:?} has no mode with r_i = prod of the others = n_i"
            )))
        }
    };
    let s = StratumDescriptor::mrank(r, n, Field::Real)?;
    let mut rng = rng_from_seed(seed);
    let (a, tucker) = sample_fixed_mrank(n, r, Field::Real, &mut rng, tol)?;
    let base_sign = core_sign(&tucker.core, i)?;
    let adjoints: Vec<Matrix> = tucker.frames.iter().map(|f| f.frame().adjoint()).collect();
    let mut loops = Vec::new();
    for j in (0..r.len()).filter(|&j| n[j] > r[j]) {
        let geodesics = tucker
            .frames
            .iter()
            .enumerate()
            .map(|(m, f)| if m == j { Geodesic::flip_loop(f, 0) } else { Ok(Geodesic::constant(f)) })
            .collect::<Result<Vec<_>>>()?;
        let seg = Segment::FrameTransport {
            core: tucker.core.clone(),
            geodesics,
        };
        let path = TensorPath::from_segments(s.clone(), Field::Real, n.to_vec(), vec![seg], None)?;
        let rep = path_verify(&path, k, tol);
        let end = path.eval(1.0);
        let end_core = end.multilinear(&adjoints)?;
        let exponent: usize = (0..r.len()).filter(|&m| m != i && m != j).map(|m| r[m]).product();
        loops.push(LoopRecord {
            mode: j,
            exponent,
            parity_predicts_flip: exponent % 2 == 1,
            sign_flipped: core_sign(&end_core, i)? != base_sign,
            all_in_stratum: rep.failures().next().is_none(),
            min_margin: rep.min_margin,
            samples: rep.entries.len(),
            endpoint_distance: end.rel_dist(&a)?,
        });
    }
    let flip_observed = loops.iter().any(|l| l.sign_flipped && l.all_in_stratum);
    let evidence = if flip_observed {
        "EVIDENCE ONLY: an in-stratum loop reverses the core determinant sign, so that sign is not a component invariant here (suggests one component)"
    } else {
        "EVIDENCE ONLY: no in-stratum loop reversed the core determinant sign (consistent with two components)"
    };
    Ok(MonodromyReport {
        r: r.to_vec(),
        n: n.to_vec(),
        seed,
        saturated_mode: i,
        base_sign,
        loops,
        flip_observed,
        evidence: evidence.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn even_exponent_keeps_sign() {
        let rep = monodromy_probe(&[4, 2, 2], &[4, 3, 3], 1, 32, &TolerancePolicy::default()).unwrap();
        assert_eq!(rep.saturated_mode, 0);
        assert_eq!(rep.loops.len(), 2);
        for l in &rep.loops {
            assert_eq!(l.exponent, 2);
            assert!(l.all_in_stratum);
            assert!(!l.sign_flipped);
        }
        assert!(!rep.flip_observed);
    }

    #[test]
    fn odd_exponent_flips_sign() {
        let rep = monodromy_probe(&[6, 2, 3], &[6, 3, 3], 2, 32, &TolerancePolicy::default()).unwrap();
        assert_eq!(rep.loops.len(), 1);
        let l = &rep.loops[0];
        assert_eq!((l.mode, l.exponent), (1, 3));
        assert!(l.all_in_stratum && l.sign_flipped);
        assert!(rep.flip_observed);
    }

    #[test]
    fn saturated_case_is_refused() {
        assert!(monodromy_probe(&[4, 2, 2], &[4, 2, 2], 1, 16, &TolerancePolicy::default()).is_err());
        assert!(monodromy_probe(&[2, 2, 2], &[3, 3, 3], 1, 16, &TolerancePolicy::default()).is_err());
    }
}
