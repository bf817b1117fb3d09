//! Monte Carlo experiments on tensor rank strata: label censuses, pairwise
//! connection trials, decomposition counting and orientation-loop probes.
//!
//! Trials run in parallel; each draws from its own seed derived from the
//! master seed and the trial index, so reports do not depend on scheduling.

pub mod census;
pub mod connection;
pub mod identifiability;
pub mod monodromy;
pub mod pairwise;
pub mod sampling;
pub mod suite;

pub use census::{census, CensusReport, CensusVerdict};
pub use identifiability::{identifiability_experiment, IdentifiabilityReport};
pub use monodromy::{monodromy_probe, MonodromyReport};
pub use pairwise::{pairwise_connect_experiment, PairwiseReport};
pub use sampling::sample_point;
pub use suite::{run_suite, SuiteReport, DEFAULT_SUITE_SEED};
