//! Counting rank-two decompositions of random tensors.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use ttk_core::certify::{count_rank2_decompositions, Rank2Count};
use ttk_core::sample::{rng_from_seed, sample_rank_r, trial_seed};
use ttk_core::{Error, Field, Hypermatrix, Result, TolerancePolicy};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DecompositionTally {
    pub unique: usize,
    /// Histogram of the number of term orderings among unique decompositions.
    pub orderings: BTreeMap<usize, usize>,
    pub continuum_or_degenerate: usize,
}

impl DecompositionTally {
    pub fn add(&mut self, c: Rank2Count) {
        match c {
            Rank2Count::UniqueUpToPermutation { orderings } => {
                self.unique += 1;
                *self.orderings.entry(orderings).or_default() += 1;
            }
            Rank2Count::ContinuumOrDegenerate => self.continuum_or_degenerate += 1,
        }
    }
}

pub fn tally_decompositions(tensors: &[Hypermatrix], tol: &TolerancePolicy) -> DecompositionTally {
    let mut t = DecompositionTally::default();
    for c in tensors.par_iter().map(|a| count_rank2_decompositions(a, tol)).collect::<Vec<_>>() {
        t.add(c);
    }
    t
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityReport {
    pub shape: Vec<usize>,
    pub seed: u64,
    pub trials: usize,
    pub sampler_failures: usize,
    #[serde(flatten)]
    pub tally: DecompositionTally,
    pub fraction_unique: f64,
}

impl IdentifiabilityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Draws `n` real rank-two tensors of `shape` and counts their decompositions.
/// On `2×2×2` the sampler keeps only positive hyperdeterminants.
pub fn identifiability_experiment(shape: &[usize], n: usize, seed: u64, tol: &TolerancePolicy) -> Result<IdentifiabilityReport> {
    if shape.len() < 3 || shape.iter().any(|&m| m < 2) {
        return Err(Error::InvalidParameter(format!(
            "rank-two identifiability needs order >= 3 and every dimension >= 2, got {shape:?}"
        )));
    }
    let draws: Vec<Option<Hypermatrix>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(trial_seed(seed, i as u64));
            sample_rank_r(shape, 2, Field::Real, &mut rng, tol).ok().map(|(a, _)| a)
        })
        .collect();
    let tensors: Vec<Hypermatrix> = draws.iter().flatten().cloned().collect();
    let tally = tally_decompositions(&tensors, tol);
    Ok(IdentifiabilityReport {
        shape: shape.to_vec(),
        seed,
        trials: n,
        sampler_failures: n - tensors.len(),
        fraction_unique: if n == 0 { 0.0 } else { tally.unique as f64 / n as f64 },
        tally,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ttk_core::tensor::{basis_vector, outer_product, re};

    #[test]
    fn repeated_pencil_eigenvalue_is_degenerate() {
        // Slices I and a Jordan block: the pencil has a double eigenvalue.
        let a = Hypermatrix::from_real(&[2, 2, 2], &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0]).unwrap();
        let e = |i| basis_vector(2, i);
        let b = outer_product(re(1.0), &[e(0), e(0), e(0)], Field::Real)
            .add(&outer_product(re(1.0), &[e(1), e(1), e(1)], Field::Real))
            .unwrap();
        let t = tally_decompositions(&[a, b], &TolerancePolicy::default());
        assert_eq!(t.continuum_or_degenerate, 1);
        assert_eq!(t.unique, 1);
        assert_eq!(t.orderings.get(&2), Some(&1));
    }
}
