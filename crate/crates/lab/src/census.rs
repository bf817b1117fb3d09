//! Label census of a stratum with connection attempts between representatives.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ttk_core::classify::{classify, expected_component_count, ComponentLabel};
use ttk_core::sample::{rng_from_seed, trial_seed};
use ttk_core::stratum::StratumDescriptor;
use ttk_core::{Error, Hypermatrix, Result, TolerancePolicy};

use crate::connection::{attempt, Attempt, Outcome};
use crate::sampling::sample_point;

/// Representatives per label group.
pub const REPRESENTATIVE_BUDGET: usize = 20;
/// Cross-label attempts per pair of label groups.
pub const CROSS_PAIRS: usize = 3;
const CONNECT_SALT: u64 = 0xC0FF_EE00_D15C_0A11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CensusVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCount {
    /// `None` when the stratum has no classifier.
    pub label: Option<ComponentLabel>,
    pub name: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub label: Option<ComponentLabel>,
    pub rejected: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: usize,
    pub b: usize,
    pub same_label: bool,
    #[serde(flatten)]
    pub attempt: Attempt,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub attempted: usize,
    pub passed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub stratum: String,
    pub seed: u64,
    pub trials: usize,
    pub labels: Vec<LabelCount>,
    pub cross_label_connections: usize,
    pub verdict: CensusVerdict,
    /// Left empty so that reports are reproducible byte for byte.
    pub runtime_ms: Option<u64>,
    pub expected_components: Option<usize>,
    pub rejected: usize,
    pub within_label: Tally,
    pub cross_label: Tally,
    /// `connection_matrix[g][h]`: attempts between representatives of label groups `g` and `h`.
    pub connection_matrix: Vec<Vec<Tally>>,
    pub samples: usize,
    pub caveat: String,
    pub pairs: Vec<PairRecord>,
    pub diagnostics: Vec<TrialRecord>,
}

impl CensusReport {
    pub fn observed_labels(&self) -> usize {
        self.labels.iter().filter(|l| l.label.is_some()).count()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn label_name(l: &Option<ComponentLabel>) -> String {
    l.map(|x| x.to_string()).unwrap_or_else(|| "unclassified".into())
}

fn run_trial(s: &StratumDescriptor, master: u64, index: usize, tol: &TolerancePolicy) -> (TrialRecord, Option<Hypermatrix>) {
    let seed = trial_seed(master, index as u64);
    let mut rng = rng_from_seed(seed);
    let mut rec = TrialRecord {
        index,
        seed,
        label: None,
        rejected: None,
    };
    let a = match sample_point(s, &mut rng, tol) {
        Ok(a) => a,
        Err(e) => {
            rec.rejected = Some(format!("sampler: {e}"));
            return (rec, None);
        }
    };
    match classify(s, &a, tol) {
        Ok(l) => rec.label = Some(l),
        Err(Error::Unsupported(_)) => {}
        Err(e) => {
            rec.rejected = Some(format!("classifier: {e}"));
            return (rec, None);
        }
    }
    (rec, Some(a))
}

fn verdict(expected: Option<usize>, observed: usize, unlabeled: bool, cross: usize, within: Tally) -> CensusVerdict {
    if cross > 0 || expected.is_some_and(|e| observed > e) {
        return CensusVerdict::Inconsistent;
    }
    match expected {
        Some(e) if !unlabeled && observed == e && within.passed == within.attempted => CensusVerdict::Consistent,
        _ => CensusVerdict::Inconclusive,
    }
}

/// Samples `n` points of `s`, labels them and tries to connect representatives
/// within and across label groups. `k` is the verification grid size.
pub fn census(s: &StratumDescriptor, n: usize, seed: u64, k: usize, tol: &TolerancePolicy) -> Result<CensusReport> {
    s.validate()?;
    tol.validate()?;
    let results: Vec<(TrialRecord, Option<Hypermatrix>)> =
        (0..n).into_par_iter().map(|i| run_trial(s, seed, i, tol)).collect();

    let mut groups: BTreeMap<Option<ComponentLabel>, Vec<usize>> = BTreeMap::new();
    for (rec, a) in &results {
        if a.is_some() {
            groups.entry(rec.label).or_default().push(rec.index);
        }
    }
    let keys: Vec<Option<ComponentLabel>> = groups.keys().copied().collect();
    let reps: Vec<Vec<usize>> = groups
        .values()
        .map(|v| v.iter().copied().take(REPRESENTATIVE_BUDGET.min(n)).collect())
        .collect();

    // (group g, member, group h, member)
    let mut plan: Vec<(usize, usize, usize, usize)> = Vec::new();
    for (g, r) in reps.iter().enumerate() {
        for w in r.windows(2) {
            plan.push((g, w[0], g, w[1]));
        }
    }
    for g in 0..reps.len() {
        for h in g + 1..reps.len() {
            for (&a, &b) in reps[g].iter().zip(&reps[h]).take(CROSS_PAIRS) {
                plan.push((g, a, h, b));
            }
        }
    }
    let tensor = |i: usize| results[i].1.as_ref().expect("accepted trial");
    let attempts: Vec<Result<Attempt>> = plan
        .par_iter()
        .enumerate()
        .map(|(j, &(_, a, _, b))| {
            let mut rng = rng_from_seed(trial_seed(seed ^ CONNECT_SALT, j as u64));
            attempt(s, tensor(a), tensor(b), k, tol, &mut rng)
        })
        .collect();

    let mut pairs = Vec::with_capacity(plan.len());
    let mut matrix = vec![vec![Tally::default(); keys.len()]; keys.len()];
    let (mut within, mut cross) = (Tally::default(), Tally::default());
    for (&(g, a, h, b), res) in plan.iter().zip(attempts) {
        let at = match res {
            Ok(at) => at,
            Err(e) if keys.iter().any(Option::is_some) => Attempt {
                outcome: Outcome::Error,
                min_margin: None,
                endpoint_error: None,
                label_constant: None,
                max_mrank: None,
                note: Some(e.to_string()),
            },
            Err(e) => return Err(e),
        };
        let pass = at.passed();
        let same = g == h && keys[g].is_some();
        let cells = if g == h { vec![(g, g)] } else { vec![(g, h), (h, g)] };
        for (x, y) in cells {
            matrix[x][y].attempted += 1;
            matrix[x][y].passed += usize::from(pass);
        }
        let t = if g == h { &mut within } else { &mut cross };
        t.attempted += 1;
        t.passed += usize::from(pass);
        pairs.push(PairRecord {
            a,
            b,
            same_label: same,
            attempt: at,
        });
    }

    let labels: Vec<LabelCount> = groups
        .iter()
        .map(|(l, v)| LabelCount {
            label: *l,
            name: label_name(l),
            count: v.len(),
        })
        .collect();
    let rejected = results.iter().filter(|(_, a)| a.is_none()).count();
    let expected = expected_component_count(s);
    let observed = labels.iter().filter(|l| l.label.is_some()).count();
    let unlabeled = labels.iter().any(|l| l.label.is_none());
    Ok(CensusReport {
        stratum: s.to_string(),
        seed,
        trials: n,
        cross_label_connections: cross.passed,
        verdict: verdict(expected, observed, unlabeled, cross.passed, within),
        labels,
        runtime_ms: None,
        expected_components: expected,
        rejected,
        within_label: within,
        cross_label: cross,
        connection_matrix: matrix,
        samples: k,
        caveat: format!(
            "Monte Carlo evidence from {n} trials: a census can refute a component count but cannot prove connectivity"
        ),
        pairs,
        diagnostics: results.into_iter().map(|(r, _)| r).collect(),
    })
}
