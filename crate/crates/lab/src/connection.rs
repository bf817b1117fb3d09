//! One connector call followed by path verification.

use serde::{Deserialize, Serialize};
use ttk_core::path::{connect, path_verify, Connection};
use ttk_core::sample::TtkRng;
use ttk_core::stratum::StratumDescriptor;
use ttk_core::{Error, Hypermatrix, TolerancePolicy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    PathPass,
    PathFail,
    DifferentComponents,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub outcome: Outcome,
    /// Smallest flattening margin over the verified samples.
    pub min_margin: Option<f64>,
    pub endpoint_error: Option<f64>,
    pub label_constant: Option<bool>,
    /// Componentwise maximum of the multilinear rank over the samples.
    pub max_mrank: Option<Vec<usize>>,
    pub note: Option<String>,
}

impl Attempt {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::PathPass
    }
}

/// Connects `a` to `b` in `s` and verifies the result on `k` samples.
/// `Err` only for strata without a connector.
pub fn attempt(
    s: &StratumDescriptor,
    a: &Hypermatrix,
    b: &Hypermatrix,
    k: usize,
    tol: &TolerancePolicy,
    rng: &mut TtkRng,
) -> Result<Attempt, Error> {
    let empty = |outcome, note: Option<String>| Attempt {
        outcome,
        min_margin: None,
        endpoint_error: None,
        label_constant: None,
        max_mrank: None,
        note,
    };
    match connect(s, a, b, tol, rng) {
        Ok(Connection::Path(p)) => {
            let rep = path_verify(&p, k, tol);
            let endpoint_error = p.endpoint_error(a, b).ok();
            let close = endpoint_error.is_some_and(|e| e <= 1e-10);
            let pass = rep.pass && close;
            let note = if pass {
                None
            } else if !close {
                Some("endpoint mismatch".to_string())
            } else {
                rep.failures()
                    .next()
                    .map(|f| format!("t={:.6}: {}", f.t, f.note.clone().unwrap_or_default()))
                    .or_else(|| (!rep.label_constant).then(|| "label changed along path".to_string()))
            };
            let max_mrank = rep.entries.iter().fold(vec![0; p.shape.len()], |mut m, e| {
                for (x, &y) in m.iter_mut().zip(&e.mrank) {
                    *x = (*x).max(y);
                }
                m
            });
            Ok(Attempt {
                outcome: if pass { Outcome::PathPass } else { Outcome::PathFail },
                min_margin: Some(rep.min_margin),
                endpoint_error,
                label_constant: Some(rep.label_constant),
                max_mrank: Some(max_mrank),
                note,
            })
        }
        Ok(Connection::DifferentComponents { reason, .. }) => Ok(empty(Outcome::DifferentComponents, Some(reason))),
        Err(e @ Error::Unsupported(_)) => Err(e),
        Err(e) => Ok(empty(Outcome::Error, Some(e.to_string()))),
    }
}
