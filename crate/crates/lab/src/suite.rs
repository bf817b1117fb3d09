//! The verification suite: every component count, connectivity and invariance
//! check in one deterministic report.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ttk_core::certify::{classify_222, hyperdet222, Class222};
use ttk_core::classify::{classify_brank3_222, ComponentLabel};
use ttk_core::linalg::det;
use ttk_core::sample::{gaussian_tensor, random_invertible, rng_from_seed, sample_rank_r, trial_seed, unit_vector};
use ttk_core::stratum::StratumDescriptor;
use ttk_core::tensor::{outer_product, re};
use ttk_core::{Field, Hypermatrix, Matrix, Result, TolerancePolicy};

use crate::census::{census, CensusReport};
use crate::identifiability::identifiability_experiment;
use crate::pairwise::{pairwise_connect_experiment, PairwiseReport};

pub const CENSUS_TIME_BUDGET: Duration = Duration::from_secs(60);
pub const DEFAULT_SUITE_SEED: u64 = 20240611;
const GROUP_REDRAWS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub measured: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub quick: bool,
    pub criteria: Vec<CriterionResult>,
    pub passed: usize,
    pub total: usize,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.passed == self.total
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One `PASS`/`FAIL` line per criterion.
    pub fn summary_lines(&self) -> Vec<String> {
        self.criteria
            .iter()
            .map(|c| format!("{} criterion {:>2}: {}", if c.pass { "PASS" } else { "FAIL" }, c.id, c.name))
            .collect()
    }
}

/// Trial counts for the full suite and its quick variant.
#[derive(Clone, Copy, Debug)]
struct Sizes {
    brank_census: usize,
    sym_census: usize,
    pairs: usize,
    saturated_census: usize,
    matrix_census: usize,
    identifiability: usize,
    invariance: usize,
}

impl Sizes {
    fn new(quick: bool) -> Self {
        if quick {
            Sizes {
                brank_census: 200,
                sym_census: 60,
                pairs: 10,
                saturated_census: 60,
                matrix_census: 40,
                identifiability: 20,
                invariance: 40,
            }
        } else {
            Sizes {
                brank_census: 1000,
                sym_census: 300,
                pairs: 100,
                saturated_census: 500,
                matrix_census: 200,
                identifiability: 100,
                invariance: 200,
            }
        }
    }
}

struct Ctx {
    seed: u64,
    k: usize,
    tol: TolerancePolicy,
    /// Largest endpoint error over every path built so far.
    endpoint_error: f64,
    paths: usize,
}

impl Ctx {
    fn seed_for(&self, id: u64) -> u64 {
        trial_seed(self.seed, id)
    }

    fn note_census(&mut self, r: &CensusReport) {
        for p in &r.pairs {
            if let Some(e) = p.attempt.endpoint_error {
                self.endpoint_error = self.endpoint_error.max(e);
                self.paths += 1;
            }
        }
    }

    fn note_pairs(&mut self, r: &PairwiseReport) {
        if let Some(e) = r.max_endpoint_error {
            self.endpoint_error = self.endpoint_error.max(e);
        }
        self.paths += r.pairs.iter().filter(|p| p.attempt.as_ref().is_some_and(|a| a.endpoint_error.is_some())).count();
    }
}

fn stratum(text: &str) -> StratumDescriptor {
    text.parse().expect("built-in stratum string")
}

fn census_summary(r: &CensusReport) -> Value {
    json!({
        "trials": r.trials,
        "rejected": r.rejected,
        "labels": r.labels.iter().map(|l| json!({"label": l.name, "count": l.count})).collect::<Vec<_>>(),
        "cross_label_connections": r.cross_label_connections,
        "cross_label_attempts": r.cross_label.attempted,
        "within_label_attempts": r.within_label.attempted,
        "within_label_passes": r.within_label.passed,
        "verdict": r.verdict,
    })
}

fn pairwise_summary(r: &PairwiseReport) -> Value {
    json!({
        "trials": r.trials,
        "passed": r.passed,
        "failed": r.failed,
        "errors": r.errors,
        "skipped": r.skipped,
        "worst_margin": r.worst_margin,
        "max_endpoint_error": r.max_endpoint_error,
    })
}

fn border_rank_components(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let s = stratum("brank:r=3;shape=2,2,2;field=real");
    let start = Instant::now();
    let r = census(&s, n, ctx.seed_for(1), ctx.k, &ctx.tol)?;
    let in_budget = start.elapsed() <= CENSUS_TIME_BUDGET;
    ctx.note_census(&r);
    let all_triples = r.labels.iter().all(|l| matches!(l.label, Some(ComponentLabel::SignTriple(_))));
    let pass = r.observed_labels() == 4
        && all_triples
        && r.cross_label_connections == 0
        && r.within_label.passed >= 50
        && in_budget;
    let mut m = census_summary(&r);
    m["within_time_budget"] = json!(in_budget);
    Ok(CriterionResult {
        id: 1,
        name: "real 2x2x2 border rank 3: four sign-triple components".into(),
        pass,
        measured: m,
    })
}

fn reference_b() -> Hypermatrix {
    let mut d = [0.0; 8];
    for (idx, v) in [([0, 0, 0], 1.0), ([1, 1, 0], 1.0), ([0, 1, 1], -1.0), ([1, 0, 1], 1.0)] {
        d[idx[0] * 4 + idx[1] * 2 + idx[2]] = v;
    }
    Hypermatrix::from_real(&[2, 2, 2], &d).expect("2x2x2")
}

fn hyperdeterminant_anchors(ctx: &mut Ctx) -> Result<CriterionResult> {
    let b = hyperdet222(&reference_b())?;
    let mut diag = [0.0; 8];
    diag[0] = 1.0;
    diag[7] = 1.0;
    let unit = hyperdet222(&Hypermatrix::from_real(&[2, 2, 2], &diag)?)?;
    let mut rng = rng_from_seed(ctx.seed_for(2));
    let worst_rank_one = (0..100)
        .map(|_| {
            let f: Vec<_> = (0..3).map(|_| unit_vector(2, Field::Real, &mut rng)).collect();
            hyperdet222(&outer_product(re(1.0), &f, Field::Real)).map(f64::abs)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(CriterionResult {
        id: 2,
        name: "hyperdeterminant anchors".into(),
        pass: b == -4.0 && unit == 1.0 && worst_rank_one <= 1e-12,
        measured: json!({"det_b": b, "det_unit_diagonal": unit, "max_abs_det_rank_one": worst_rank_one}),
    })
}

fn even_symmetric_components(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let s = stratum("sym-rank:d=4;n=4;r=2;field=real");
    let r = census(&s, n, ctx.seed_for(3), ctx.k, &ctx.tol)?;
    ctx.note_census(&r);
    let in_label: Vec<_> = r.pairs.iter().filter(|p| p.same_label && p.attempt.label_constant.is_some()).collect();
    let constant = in_label.iter().filter(|p| p.attempt.label_constant == Some(true)).count();
    let signatures = r
        .labels
        .iter()
        .filter_map(|l| match l.label {
            Some(ComponentLabel::Signature { positive, rank: 2 }) => Some(positive),
            _ => None,
        })
        .count();
    let mut m = census_summary(&r);
    m["verified_in_label_paths"] = json!(in_label.len());
    m["label_constant_paths"] = json!(constant);
    Ok(CriterionResult {
        id: 3,
        name: "even-order symmetric rank 2: three signature components".into(),
        pass: r.observed_labels() == 3
            && signatures == 3
            && r.cross_label_connections == 0
            && !in_label.is_empty()
            && constant == in_label.len(),
        measured: m,
    })
}

fn all_pairs_pass(ctx: &mut Ctx, text: &str, n: usize, id: u64, tol: &TolerancePolicy) -> Result<(bool, PairwiseReport)> {
    let r = pairwise_connect_experiment(&stratum(text), n, ctx.k, ctx.seed_for(id), tol)?;
    ctx.note_pairs(&r);
    Ok((r.passed == n, r))
}

fn odd_symmetric_connected(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let tol = ctx.tol;
    let (all, r) = all_pairs_pass(ctx, "sym-rank:d=3;n=4;r=2;field=real", n, 4, &tol)?;
    let margin_ok = r.worst_margin.is_some_and(|m| m >= 1e-8);
    Ok(CriterionResult {
        id: 4,
        name: "odd-order symmetric rank 2 is path-connected".into(),
        pass: all && margin_ok,
        measured: pairwise_summary(&r),
    })
}

fn rank_one_connected(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let machine = TolerancePolicy::machine();
    let mut pass = true;
    let mut m = serde_json::Map::new();
    for (id, field) in [(51, "real"), (52, "complex")] {
        let text = format!("rank:r=1;shape=3,4,5;field={field}");
        let (all, r) = all_pairs_pass(ctx, &text, n, id, &machine)?;
        let exact = r
            .pairs
            .iter()
            .filter_map(|p| p.attempt.as_ref())
            .all(|a| a.max_mrank.as_deref() == Some(&[1, 1, 1][..]));
        pass &= all && exact;
        let mut v = pairwise_summary(&r);
        v["pointwise_rank_one"] = json!(exact);
        m.insert(field.to_string(), v);
    }
    Ok(CriterionResult {
        id: 5,
        name: "rank one is path-connected over R and C".into(),
        pass,
        measured: Value::Object(m),
    })
}

fn multilinear_trichotomy(ctx: &mut Ctx, sizes: &Sizes) -> Result<CriterionResult> {
    let tol = ctx.tol;
    let (a, ra) = all_pairs_pass(ctx, "mrank:r=2,2,2;shape=3,3,3;field=real", sizes.pairs, 61, &tol)?;
    let s = stratum("mrank:r=4,2,2;shape=4,2,2;field=real");
    let rb = census(&s, sizes.saturated_census, ctx.seed_for(62), ctx.k, &ctx.tol)?;
    ctx.note_census(&rb);
    let b = rb.observed_labels() == 2
        && rb.labels.iter().all(|l| matches!(l.label, Some(ComponentLabel::Sign(_))))
        && rb.cross_label_connections == 0;
    let (c, rc) = all_pairs_pass(ctx, "mrank:r=4,2,2;shape=5,2,2;field=real", sizes.pairs, 63, &tol)?;
    let (d, rd) = all_pairs_pass(ctx, "mrank:r=2,2,2;shape=2,2,2;field=complex", sizes.pairs, 64, &tol)?;
    Ok(CriterionResult {
        id: 6,
        name: "multilinear rank trichotomy".into(),
        pass: a && b && c && d,
        measured: json!({
            "a_real_222_in_333": pairwise_summary(&ra),
            "b_saturated_422": census_summary(&rb),
            "c_square_422_in_522": pairwise_summary(&rc),
            "d_complex_222": pairwise_summary(&rd),
        }),
    })
}

fn matrix_oracle(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let real = census(&stratum("mrank:r=2,2;shape=2,2;field=real"), n, ctx.seed_for(71), ctx.k, &ctx.tol)?;
    let complex = census(&stratum("mrank:r=2,2;shape=2,2;field=complex"), n, ctx.seed_for(72), ctx.k, &ctx.tol)?;
    ctx.note_census(&real);
    ctx.note_census(&complex);
    Ok(CriterionResult {
        id: 7,
        name: "invertible 2x2 matrices: two components over R, one over C".into(),
        pass: real.observed_labels() == 2
            && real.cross_label_connections == 0
            && complex.observed_labels() == 1
            && complex.within_label.passed == complex.within_label.attempted,
        measured: json!({"real": census_summary(&real), "complex": census_summary(&complex)}),
    })
}

fn identifiability(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let r = identifiability_experiment(&[3, 3, 3], n, ctx.seed_for(8), &ctx.tol)?;
    Ok(CriterionResult {
        id: 8,
        name: "rank-2 decompositions on 3x3x3 are unique up to the 2 orderings".into(),
        pass: r.tally.unique == n && r.tally.orderings.get(&2) == Some(&n),
        measured: serde_json::to_value(&r).expect("serializable"),
    })
}

fn invariants(ctx: &mut Ctx, n: usize) -> Result<CriterionResult> {
    let mut rng = rng_from_seed(ctx.seed_for(9));
    let mut worst_det: f64 = 0.0;
    for _ in 0..n {
        let a = gaussian_tensor(&[2, 2, 2], Field::Real, &mut rng);
        let gs: Vec<Matrix> = (0..3).map(|_| random_invertible(2, Field::Real, None, &mut rng)).collect();
        let factor: f64 = gs.iter().map(|g| det(g).re.powi(2)).product();
        let want = factor * hyperdet222(&a)?;
        let got = hyperdet222(&a.multilinear(&gs)?)?;
        worst_det = worst_det.max((got - want).abs() / want.abs());
    }
    // Images inside the certifier's boundary band get a fresh group element.
    let (mut changes, mut compared, mut abstained, mut unclassified) = (0, 0, 0, 0);
    for _ in 0..n {
        let (a, _) = sample_rank_r(&[2, 2, 2], 3, Field::Real, &mut rng, &ctx.tol)?;
        let Ok(before) = classify_brank3_222(&a, &ctx.tol) else {
            unclassified += 1;
            continue;
        };
        let mut after = None;
        for _ in 0..GROUP_REDRAWS {
            let gs: Vec<Matrix> = (0..3).map(|_| random_invertible(2, Field::Real, Some(1), &mut rng)).collect();
            let b = a.multilinear(&gs)?;
            match classify_222(&b, &ctx.tol) {
                Ok(c) if c.class == Class222::BorderRank3 => {
                    after = classify_brank3_222(&b, &ctx.tol).ok();
                    break;
                }
                _ => abstained += 1,
            }
        }
        match after {
            Some(y) => {
                compared += 1;
                if y != before {
                    changes += 1;
                }
            }
            None => unclassified += 1,
        }
    }
    let fidelity_ok = ctx.endpoint_error <= 1e-10;
    Ok(CriterionResult {
        id: 9,
        name: "hyperdeterminant, sign-triple and endpoint invariants".into(),
        pass: worst_det <= 1e-8 && changes == 0 && compared == n && fidelity_ok && ctx.paths > 0,
        measured: json!({
            "group_elements": n,
            "max_hyperdet_relative_error": worst_det,
            "sign_triple_trials": n,
            "sign_triple_compared": compared,
            "sign_triple_changes": changes,
            "sign_triple_unclassified": unclassified,
            "boundary_draws_replaced": abstained,
            "paths_checked": ctx.paths,
            "max_endpoint_error": ctx.endpoint_error,
        }),
    })
}

fn determinism(ctx: &mut Ctx) -> Result<CriterionResult> {
    let s = stratum("brank:r=3;shape=2,2,2;field=real");
    let seed = ctx.seed_for(10);
    let first = census(&s, 60, seed, ctx.k, &ctx.tol)?.to_json();
    let second = census(&s, 60, seed, ctx.k, &ctx.tol)?.to_json();
    Ok(CriterionResult {
        id: 10,
        name: "reports are byte-identical across runs".into(),
        pass: first == second,
        measured: json!({"bytes": first.len(), "identical": first == second}),
    })
}

/// Runs every criterion; `quick` shrinks the trial counts.
pub fn run_suite(seed: u64, quick: bool) -> Result<SuiteReport> {
    let sizes = Sizes::new(quick);
    let tol = TolerancePolicy::default();
    let mut ctx = Ctx {
        seed,
        k: tol.path_samples_default,
        tol,
        endpoint_error: 0.0,
        paths: 0,
    };
    let criteria = vec![
        border_rank_components(&mut ctx, sizes.brank_census)?,
        hyperdeterminant_anchors(&mut ctx)?,
        even_symmetric_components(&mut ctx, sizes.sym_census)?,
        odd_symmetric_connected(&mut ctx, sizes.pairs)?,
        rank_one_connected(&mut ctx, sizes.pairs)?,
        multilinear_trichotomy(&mut ctx, &sizes)?,
        matrix_oracle(&mut ctx, sizes.matrix_census)?,
        identifiability(&mut ctx, sizes.identifiability)?,
        invariants(&mut ctx, sizes.invariance)?,
        determinism(&mut ctx)?,
    ];
    let passed = criteria.iter().filter(|c| c.pass).count();
    Ok(SuiteReport {
        seed,
        quick,
        total: criteria.len(),
        passed,
        criteria,
    })
}
