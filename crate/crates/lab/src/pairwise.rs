//! Independent endpoint pairs, each connected and verified.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ttk_core::classify::{classify, ComponentLabel};
use ttk_core::sample::{rng_from_seed, trial_seed};
use ttk_core::stratum::StratumDescriptor;
use ttk_core::{Result, TolerancePolicy};

use crate::connection::{attempt, Attempt, Outcome};
use crate::sampling::sample_point;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTrial {
    pub index: usize,
    pub seed: u64,
    pub labels: Option<(ComponentLabel, ComponentLabel)>,
    /// Set when the endpoints were not both drawn, or carry different labels.
    pub skipped: Option<String>,
    pub attempt: Option<Attempt>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseReport {
    pub stratum: String,
    pub seed: u64,
    pub trials: usize,
    pub samples: usize,
    pub attempted: usize,
    pub passed: usize,
    pub failed: usize,
    pub refused: usize,
    pub errors: usize,
    pub skipped: usize,
    pub success_rate: f64,
    /// Smallest flattening margin over every sample of every passing path.
    pub worst_margin: Option<f64>,
    pub max_endpoint_error: Option<f64>,
    pub runtime_ms: Option<u64>,
    pub pairs: Vec<PairTrial>,
}

impl PairwiseReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn run_pair(s: &StratumDescriptor, master: u64, index: usize, k: usize, tol: &TolerancePolicy) -> Result<PairTrial> {
    let seed = trial_seed(master, index as u64);
    let mut rng = rng_from_seed(seed);
    let mut rec = PairTrial {
        index,
        seed,
        labels: None,
        skipped: None,
        attempt: None,
    };
    let (a, b) = match (sample_point(s, &mut rng, tol), sample_point(s, &mut rng, tol)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            rec.skipped = Some(format!("sampler: {e}"));
            return Ok(rec);
        }
    };
    if let (Ok(la), Ok(lb)) = (classify(s, &a, tol), classify(s, &b, tol)) {
        rec.labels = Some((la, lb));
        if la != lb {
            rec.skipped = Some("endpoints carry different labels".into());
            return Ok(rec);
        }
    }
    rec.attempt = Some(attempt(s, &a, &b, k, tol, &mut rng)?);
    Ok(rec)
}

/// Runs `n` independent pair trials in `s`, verifying each path on `k` samples.
pub fn pairwise_connect_experiment(
    s: &StratumDescriptor,
    n: usize,
    k: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> Result<PairwiseReport> {
    s.validate()?;
    tol.validate()?;
    let pairs = (0..n)
        .into_par_iter()
        .map(|i| run_pair(s, seed, i, k, tol))
        .collect::<Result<Vec<_>>>()?;
    let attempts: Vec<&Attempt> = pairs.iter().filter_map(|p| p.attempt.as_ref()).collect();
    let count = |o: Outcome| attempts.iter().filter(|a| a.outcome == o).count();
    let passed = count(Outcome::PathPass);
    let fold_min = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.min(x))));
    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x))));
    let worst_margin = fold_min(&mut attempts.iter().filter(|a| a.passed()).filter_map(|a| a.min_margin));
    let max_endpoint_error = fold_max(&mut attempts.iter().filter_map(|a| a.endpoint_error));
    Ok(PairwiseReport {
        stratum: s.to_string(),
        seed,
        trials: n,
        samples: k,
        attempted: attempts.len(),
        passed,
        failed: count(Outcome::PathFail),
        refused: count(Outcome::DifferentComponents),
        errors: count(Outcome::Error),
        skipped: pairs.iter().filter(|p| p.skipped.is_some()).count(),
        success_rate: if attempts.is_empty() { 0.0 } else { passed as f64 / attempts.len() as f64 },
        worst_margin,
        max_endpoint_error,
        runtime_ms: None,
        pairs,
    })
}
