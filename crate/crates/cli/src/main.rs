//! `ttk`: ranks, component labels, paths and census experiments on tensor
//! rank strata.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use ttk_core::certify::{classify_222, is_rank_one};
use ttk_core::classify::classify;
use ttk_core::json::path_to_json;
use ttk_core::mrank::mrank;
use ttk_core::path::{connect, path_verify, Connection};
use ttk_core::sample::rng_from_seed;
use ttk_core::{Error, Field, TolerancePolicy};
use ttk_lab::{census, monodromy_probe, run_suite, DEFAULT_SUITE_SEED};

use io::{parse_stratum, read_tensor, write_atomic, CliError};

const EXIT_ERROR: u8 = 1;
const EXIT_DIFFERENT_COMPONENTS: u8 = 2;
const EXIT_VERIFICATION_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "ttk", version, about = "Rank strata of real and complex tensors")]
struct Cli {
    /// Worker threads for parallel experiments (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed; falls back to $TTK_SEED.
    #[arg(long, env = "TTK_SEED")]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Multilinear rank and, where available, a rank certificate.
    Rank {
        file: PathBuf,
        /// Relative singular-value cutoff.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Component label of a tensor inside a stratum.
    Classify {
        #[arg(long)]
        stratum: String,
        file: PathBuf,
    },
    /// Builds and verifies a path between two tensors of a stratum.
    Connect {
        #[arg(long)]
        stratum: String,
        a: PathBuf,
        b: PathBuf,
        /// Interior verification samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Write the path as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the per-sample verification table as CSV.
        #[arg(long)]
        dump: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Samples a stratum, labels every point and tests connections.
    Census {
        #[arg(long)]
        stratum: String,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Transports a Tucker frame around orientation loops and reports flips.
    ProbeMonodromy {
        /// Multilinear rank, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<usize>,
        /// Shape, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Runs the acceptance suite and prints a JSON summary.
    VerifySuite {
        #[arg(long)]
        quick: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes") + "\n"
}

/// Writes to `out` when given, stdout otherwise.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => write_atomic(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn rank_cmd(file: &Path, tol: Option<f64>) -> Result<u8, CliError> {
    let mut policy = TolerancePolicy::default();
    if let Some(eps) = tol {
        policy = TolerancePolicy::new(eps, policy.gap_min, policy.path_samples_default)?;
    }
    let a = read_tensor(file)?;
    let info = mrank(&a, &policy)?;
    let certificate = if a.order() == 2 {
        json!({ "rank": info.ranks.ranks()[0] })
    } else if is_rank_one(&a, &policy).is_some() {
        json!({ "rank": 1 })
    } else if a.shape() == [2, 2, 2] && a.field() == Field::Real {
        serde_json::to_value(classify_222(&a, &policy)?).expect("classification serializes")
    } else {
        Value::Null
    };
    let report = json!({
        "shape": a.shape(),
        "field": a.field(),
        "mrank": info.ranks.ranks(),
        "margins": info.margins,
        "admissible": info.admissible,
        "certificate": certificate,
    });
    print!("{}", pretty(&report));
    Ok(0)
}

fn classify_cmd(stratum: &str, file: &Path) -> Result<u8, CliError> {
    let s = parse_stratum(stratum)?;
    let a = read_tensor(file)?;
    let label = classify(&s, &a, &TolerancePolicy::default())?;
    print!("{}", pretty(&serde_json::to_value(label).expect("label serializes")));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn connect_cmd(
    stratum: &str,
    a: &Path,
    b: &Path,
    samples: Option<usize>,
    out: Option<&Path>,
    dump: Option<&Path>,
    seed: u64,
) -> Result<u8, CliError> {
    let s = parse_stratum(stratum)?;
    let (ta, tb) = (read_tensor(a)?, read_tensor(b)?);
    let tol = TolerancePolicy::default();
    let k = samples.unwrap_or(tol.path_samples_default);
    let mut rng = rng_from_seed(seed);
    let path = match connect(&s, &ta, &tb, &tol, &mut rng) {
        Ok(Connection::Path(p)) => p,
        Ok(Connection::DifferentComponents { reason, labels }) => {
            let labels = labels.map(|(x, y)| [x.to_string(), y.to_string()]);
            print!(
                "{}",
                pretty(&json!({ "outcome": "different-components", "reason": reason, "labels": labels }))
            );
            return Ok(EXIT_DIFFERENT_COMPONENTS);
        }
        Err(Error::RetryExhausted(msg)) => {
            print!("{}", pretty(&json!({ "outcome": "verification-failed", "reason": msg })));
            return Ok(EXIT_VERIFICATION_FAILED);
        }
        Err(e) => return Err(e.into()),
    };
    let rep = path_verify(&path, k, &tol);
    let endpoint_error = path.endpoint_error(&ta, &tb)?;
    let pass = rep.pass && endpoint_error <= 1e-10;
    if let Some(p) = out {
        write_atomic(p, &(path_to_json(&path)? + "\n"))?;
    }
    if let Some(p) = dump {
        write_atomic(p, &rep.to_csv())?;
    }
    let first_failure = rep.failures().next().map(|f| json!({ "t": f.t, "note": f.note }));
    print!(
        "{}",
        pretty(&json!({
            "outcome": if pass { "path" } else { "verification-failed" },
            "pass": pass,
            "segments": path.segment_kinds(),
            "samples": rep.samples,
            "min_margin": rep.min_margin,
            "label_constant": rep.label_constant,
            "joint_gap": rep.joint_gap,
            "endpoint_error": endpoint_error,
            "first_failure": first_failure,
        }))
    );
    Ok(if pass { 0 } else { EXIT_VERIFICATION_FAILED })
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let tol = TolerancePolicy::default();
    match &cli.command {
        Command::Rank { file, tol } => rank_cmd(file, *tol),
        Command::Classify { stratum, file } => classify_cmd(stratum, file),
        Command::Connect { stratum, a, b, samples, out, dump, seed } => {
            connect_cmd(stratum, a, b, *samples, out.as_deref(), dump.as_deref(), seed.seed.unwrap_or(0))
        }
        Command::Census { stratum, trials, samples, out, seed } => {
            let s = parse_stratum(stratum)?;
            let k = samples.unwrap_or(tol.path_samples_default);
            let report = census(&s, *trials, seed.seed.unwrap_or(0), k, &tol)?;
            emit(out.as_deref(), &report.to_json())?;
            if out.is_some() {
                let names: Vec<String> = report.labels.iter().map(|l| l.name.clone()).collect();
                let verdict = serde_json::to_value(report.verdict).expect("verdict serializes");
                eprintln!("{} labels [{}], verdict {}", names.len(), names.join(", "), verdict.as_str().unwrap_or("?"));
            }
            Ok(0)
        }
        Command::ProbeMonodromy { r, n, samples, out, seed } => {
            let k = samples.unwrap_or(tol.path_samples_default);
            let report = monodromy_probe(r, n, seed.seed.unwrap_or(0), k, &tol)?;
            emit(out.as_deref(), &report.to_json())?;
            Ok(0)
        }
        Command::VerifySuite { quick, out, seed } => {
            let report = run_suite(seed.seed.unwrap_or(DEFAULT_SUITE_SEED), *quick)?;
            for line in report.summary_lines() {
                eprintln!("{line}");
            }
            emit(out.as_deref(), &report.to_json())?;
            Ok(if report.passed == report.total { 0 } else { EXIT_VERIFICATION_FAILED })
        }
    }
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|info| {
        let msg = info
            .payload()
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| info.payload().downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "unknown failure".into());
        eprintln!("error: internal failure: {msg}");
    }));
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}
