//! `rmf-lab`: command-line front end for the random multiplicative function
//! laboratory.
//!
//! Exit codes: 0 success, 1 failed `--assert` expectation or replay mismatch,
//! 2 usage error, 3 domain or precondition error, 4 I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use rmf_core::analytic::{ComplexPoint, PrimeTerms};
use rmf_core::io::{fmt_f64, sha256_hex, write_run, RunManifest};
use rmf_core::mellin::check_truncated_identity;
use rmf_core::montecarlo::{AggregateStats, Experiment, ExperimentConfig, ExperimentRunner, SignSource, Thresholds};
use rmf_core::partial_sums::{compute_series_with, detect_sign_changes, Summation};
use rmf_core::primes::build_spf_sieve;
use rmf_core::sampler::{Model, SignAssignment};
use rmf_core::LabError;

const RESIDUAL_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(name = "rmf-lab", version, about = "Desk-scale experiments with Rademacher random multiplicative functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true, env = "RMF_LAB_THREADS")]
    threads: Option<usize>,

    /// Output directory (default: rmf-lab-out/<subcommand>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Turn statistical expectations into pass/fail (exit 1 on failure).
    #[arg(long, global = true)]
    assert: bool,
}

#[derive(Args, Debug, Clone)]
struct SignArgs {
    /// Seed of the i.i.d. Rademacher signs (base seed for multi-trial runs).
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Use f(p) = -1 for every prime (Mobius / Liouville).
    #[arg(long, conflicts_with = "signs_file")]
    all_minus_one: bool,

    /// Explicit signs, one "p sign" pair per line.
    #[arg(long)]
    signs_file: Option<PathBuf>,
}

impl SignArgs {
    fn fixed(&self) -> Result<Option<SignAssignment>, LabError> {
        if self.all_minus_one {
            Ok(Some(SignAssignment::AllMinusOne))
        } else if let Some(p) = &self.signs_file {
            Ok(Some(SignAssignment::load_explicit(p)?))
        } else {
            Ok(None)
        }
    }

    fn assignment(&self) -> Result<SignAssignment, LabError> {
        Ok(self.fixed()?.unwrap_or(SignAssignment::rademacher(self.seed)))
    }

    fn source(&self) -> Result<SignSource, LabError> {
        Ok(self.fixed()?.map_or(SignSource::Rademacher, SignSource::Fixed))
    }
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Weighted partial sums M_alpha(x) for one assignment, with sign changes.
    Series {
        #[arg(long, default_value = "f")]
        model: Model,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        limit: u64,
        /// Neumaier-compensated accumulation.
        #[arg(long)]
        compensated: bool,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Sign-change census over many trials.
    SignChanges {
        #[arg(long, default_value = "f")]
        model: Model,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        /// A trial passes with at least this many crossings.
        #[arg(long, default_value_t = Thresholds::default().min_sign_changes)]
        min_changes: u64,
        /// Required fraction of passing trials.
        #[arg(long, default_value_t = Thresholds::default().sign_change_pass)]
        pass_fraction: f64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Probability that sum f*(n)/n stays positive up to N.
    Positivity {
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = Thresholds::default().positivity_pass)]
        pass_fraction: f64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Harper sup statistic along a sigma grid.
    Harper {
        #[arg(long, value_delimiter = ',', required = true)]
        sigma_grid: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        prime_limit: u64,
        /// Grid spacing in t (default: 0.01 / log(1/(sigma - 1/2)) per sigma).
        #[arg(long)]
        grid_step: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Signed versus absolute Mellin integrals along a sigma grid.
    Divergence {
        #[arg(long, default_value = "f")]
        model: Model,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        sigma_grid: Vec<f64>,
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 1_000_000)]
        prime_limit: u64,
        #[arg(long, default_value_t = 50)]
        trials: u64,
        #[arg(long, default_value_t = Thresholds::default().majority)]
        majority: f64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Growth statistic max |M_0(x)| / (sqrt(x) (log log x)^theta).
    Growth {
        #[arg(long)]
        limit: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 0.25, 0.5])]
        thetas: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<u64>,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Truncated Euler product F(s) or F*(s).
    Euler {
        #[arg(long, default_value = "f")]
        model: Model,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long = "t", default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long, default_value_t = 1_000_000)]
        prime_limit: u64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Residual of the truncated partial-summation identity.
    MellinCheck {
        #[arg(long, default_value = "f")]
        model: Model,
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, allow_negative_numbers = true)]
        sigma: f64,
        #[arg(long = "t", default_value_t = 0.0, allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        limit: u64,
        #[command(flatten)]
        signs: SignArgs,
    },
    /// Rerun a recorded run and compare output digests.
    Replay {
        /// Directory holding manifest.json and the recorded outputs.
        #[arg(long)]
        dir: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Series { .. } => "series",
            Command::SignChanges { .. } => "sign-changes",
            Command::Positivity { .. } => "positivity",
            Command::Harper { .. } => "harper",
            Command::Divergence { .. } => "divergence",
            Command::Growth { .. } => "growth",
            Command::Euler { .. } => "euler",
            Command::MellinCheck { .. } => "mellin-check",
            Command::Replay { .. } => "replay",
        }
    }
}

/// What a computation produced, before anything is written.
struct Outcome {
    manifest: RunManifest,
    files: Vec<(&'static str, Vec<u8>)>,
    report: Vec<String>,
    /// False when an expectation checked under `--assert` failed.
    expectation_met: bool,
}

fn experiment_outcome(config: ExperimentConfig) -> Result<Outcome, LabError> {
    let runner = ExperimentRunner::new(config)?;
    let stats = runner.run()?;
    Ok(Outcome {
        manifest: stats.config.manifest(),
        files: vec![
            ("trials.csv", stats.trials_csv().into_bytes()),
            ("summary.json", stats.summary_json().into_bytes()),
        ],
        report: summary_lines(&stats),
        expectation_met: stats.summary.expectation.as_ref().is_none_or(|e| e.met),
    })
}

fn summary_lines(stats: &AggregateStats) -> Vec<String> {
    let s = &stats.summary;
    let mut out = vec![format!("{} trials, statistic: {}", s.trials, s.statistic)];
    for g in &s.groups {
        out.push(format!(
            "  {}: mean {:.6}, median {:.6}, q05 {:.6}, q95 {:.6}",
            g.group, g.mean, g.median, g.q05, g.q95
        ));
    }
    if let Some(f) = s.pass_fraction {
        out.push(format!("pass fraction {f:.4}"));
    }
    if let Some(t) = &s.trend {
        out.push(format!("median trend: {} of {} steps increasing", t.increasing_steps, t.steps));
    }
    match &s.expectation {
        Some(e) => out.push(format!(
            "expectation ({}): observed {:.4}, threshold {} (engineering default): {}",
            e.description,
            e.observed,
            e.threshold,
            if e.met { "met" } else { "not met" }
        )),
        None => out.push("reporting only: no pass/fail verdict".into()),
    }
    out
}

fn base_config(
    experiment: Experiment,
    model: Model,
    alpha: f64,
    limit: u64,
    trials: u64,
    signs: &SignArgs,
    threads: Option<usize>,
) -> Result<ExperimentConfig, LabError> {
    let mut c = ExperimentConfig::new(experiment, model, alpha, limit, trials, signs.seed);
    c.signs = signs.source()?;
    c.threads = threads;
    Ok(c)
}

fn single_manifest(experiment: &str, model: Model, alpha: Option<f64>, limit: Option<u64>, signs: &SignAssignment) -> RunManifest {
    let mut m = RunManifest::new(experiment);
    m.model = Some(model.as_str().to_string());
    m.alpha = alpha;
    m.limit = limit;
    m.trials = Some(1);
    m.base_seed = signs.seed();
    m.sign_mode = Some(signs.mode_name().to_string());
    m
}

fn execute(cmd: &Command, threads: Option<usize>) -> Result<Outcome, LabError> {
    match cmd {
        Command::Series { model, alpha, limit, compensated, signs } => {
            let assignment = signs.assignment()?;
            let table = build_spf_sieve((*limit).max(2))?;
            let summation = if *compensated { Summation::Compensated } else { Summation::Plain };
            let series = compute_series_with(&assignment, &table, *model, *alpha, *limit, summation)?;
            let log = detect_sign_changes(&series);
            let mut series_csv = Vec::new();
            series.write_csv(&mut series_csv).expect("in-memory write");
            let mut log_csv = Vec::new();
            log.write_csv(&mut log_csv).expect("in-memory write");
            let mut manifest = single_manifest("series", *model, Some(*alpha), Some(*limit), &assignment);
            manifest.parameters.insert("compensated".into(), json!(compensated));
            Ok(Outcome {
                manifest,
                files: vec![("series.csv", series_csv), ("sign_changes.csv", log_csv)],
                report: vec![
                    format!("M_alpha(N) = {}", fmt_f64(series.at(*limit))),
                    format!("max |M_alpha| = {} at x = {}", fmt_f64(series.max_abs), series.argmax),
                    format!(
                        "{} sign changes, last at {}",
                        log.count(),
                        log.last_position().map_or("-".to_string(), |p| p.to_string())
                    ),
                ],
                expectation_met: true,
            })
        }
        Command::SignChanges { model, alpha, limit, trials, min_changes, pass_fraction, signs } => {
            let mut c = base_config(Experiment::SignChanges, *model, *alpha, *limit, *trials, signs, threads)?;
            c.thresholds.min_sign_changes = *min_changes;
            c.thresholds.sign_change_pass = *pass_fraction;
            experiment_outcome(c)
        }
        Command::Positivity { limit, trials, pass_fraction, signs } => {
            let mut c = base_config(Experiment::Positivity, Model::FStar, 1.0, *limit, *trials, signs, threads)?;
            c.thresholds.positivity_pass = *pass_fraction;
            experiment_outcome(c)
        }
        Command::Harper { sigma_grid, prime_limit, grid_step, trials, signs } => {
            let mut c = base_config(Experiment::HarperScan, Model::F, 0.0, 1, *trials, signs, threads)?;
            c.sigma_grid = Some(sigma_grid.clone());
            c.prime_limit = Some(*prime_limit);
            c.grid_step = *grid_step;
            experiment_outcome(c)
        }
        Command::Divergence { model, alpha, sigma_grid, limit, prime_limit, trials, majority, signs } => {
            let mut c = base_config(Experiment::Divergence, *model, *alpha, *limit, *trials, signs, threads)?;
            c.sigma_grid = Some(sigma_grid.clone());
            c.prime_limit = Some(*prime_limit);
            c.thresholds.majority = *majority;
            experiment_outcome(c)
        }
        Command::Growth { limit, trials, thetas, checkpoints, signs } => {
            let mut c = base_config(Experiment::Growth, Model::F, 0.0, *limit, *trials, signs, threads)?;
            c.thetas = thetas.clone();
            c.checkpoints = checkpoints.clone();
            experiment_outcome(c)
        }
        Command::Euler { model, sigma, t, prime_limit, signs } => {
            let s = ComplexPoint::new(*sigma, *t);
            s.require_euler_domain()?;
            let assignment = signs.assignment()?;
            let table = build_spf_sieve((*prime_limit).max(2))?;
            let terms = PrimeTerms::new(&assignment, &table, *prime_limit)?;
            let e = terms.euler(*model, s)?;
            let csv = format!(
                "model,sigma,t,re,im,abs,last_factor_deviation,prime_limit\n{},{},{},{},{},{},{},{}\n",
                model,
                fmt_f64(*sigma),
                fmt_f64(*t),
                fmt_f64(e.value.re),
                fmt_f64(e.value.im),
                fmt_f64(e.value.norm()),
                fmt_f64(e.last_factor_deviation),
                e.prime_limit
            );
            let mut manifest = single_manifest("euler", *model, None, None, &assignment);
            manifest.prime_limit = Some(*prime_limit);
            manifest.parameters.insert("sigma".into(), json!(sigma));
            manifest.parameters.insert("t".into(), json!(t));
            Ok(Outcome {
                manifest,
                files: vec![("euler.csv", csv.into_bytes())],
                report: vec![
                    format!("{model}({} + {}i) = {} + {}i", sigma, t, fmt_f64(e.value.re), fmt_f64(e.value.im)),
                    format!("last factor deviation {}", fmt_f64(e.last_factor_deviation)),
                ],
                expectation_met: true,
            })
        }
        Command::MellinCheck { model, alpha, sigma, t, limit, signs } => {
            let assignment = signs.assignment()?;
            let table = build_spf_sieve((*limit).max(2))?;
            let s = ComplexPoint::new(*sigma, *t);
            let chk = check_truncated_identity(&assignment, &table, *model, *alpha, s, *limit)?;
            let csv = format!(
                "model,alpha,sigma,t,N,dirichlet_re,dirichlet_im,mellin_re,mellin_im,residual,relative\n{},{},{},{},{},{},{},{},{},{},{}\n",
                model,
                fmt_f64(*alpha),
                fmt_f64(*sigma),
                fmt_f64(*t),
                limit,
                fmt_f64(chk.dirichlet_sum.re),
                fmt_f64(chk.dirichlet_sum.im),
                fmt_f64(chk.mellin_side.re),
                fmt_f64(chk.mellin_side.im),
                fmt_f64(chk.residual),
                fmt_f64(chk.relative())
            );
            let mut manifest = single_manifest("mellin-check", *model, Some(*alpha), Some(*limit), &assignment);
            manifest.parameters.insert("sigma".into(), json!(sigma));
            manifest.parameters.insert("t".into(), json!(t));
            let ok = chk.relative() <= RESIDUAL_TOLERANCE;
            Ok(Outcome {
                manifest,
                files: vec![("mellin_check.csv", csv.into_bytes())],
                report: vec![
                    format!("residual {:.3e} (relative {:.3e}, tolerance {RESIDUAL_TOLERANCE:e})", chk.residual, chk.relative()),
                    format!("identity {}", if ok { "holds" } else { "VIOLATED" }),
                ],
                expectation_met: ok,
            })
        }
        Command::Replay { .. } => unreachable!("replay is handled before dispatch"),
    }
}

/// Subcommand arguments with the global output and threading flags removed,
/// so a replay reproduces the computation without its incidental settings.
fn recorded_args(raw: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(a) = it.next() {
        match a.as_str() {
            "--out" | "--threads" => {
                it.next();
            }
            "--assert" => {}
            _ if a.starts_with("--out=") || a.starts_with("--threads=") => {}
            _ => out.push(a.clone()),
        }
    }
    out
}

enum Failure {
    Lab(LabError),
    Usage(clap::Error),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

fn replay(dir: &Path, threads: Option<usize>) -> Result<bool, Failure> {
    let recorded = RunManifest::load(&dir.join("manifest.json"))?;
    let args: Vec<String> = recorded
        .parameters
        .get("command")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .ok_or_else(|| LabError::Manifest("manifest has no recorded command".into()))?;
    let cli = Cli::try_parse_from(std::iter::once("rmf-lab".to_string()).chain(args.iter().cloned()))
        .map_err(Failure::Usage)?;
    if matches!(cli.command, Command::Replay { .. }) {
        return Err(LabError::Manifest("recorded command is itself a replay".into()).into());
    }
    let outcome = execute(&cli.command, threads)?;
    let mut all_match = true;
    for entry in &recorded.outputs {
        let fresh = outcome
            .files
            .iter()
            .find(|(name, _)| *name == entry.file)
            .map(|(_, bytes)| sha256_hex(bytes));
        let on_disk = std::fs::read(dir.join(&entry.file))
            .map(|b| sha256_hex(&b))
            .map_err(|e| LabError::Io { path: dir.join(&entry.file), source: e })?;
        let ok = fresh.as_deref() == Some(entry.sha256.as_str()) && on_disk == entry.sha256;
        all_match &= ok;
        println!("{}: {}", entry.file, if ok { "identical" } else { "MISMATCH" });
    }
    if outcome.files.len() != recorded.outputs.len() {
        all_match = false;
        println!("output file sets differ");
    }
    Ok(all_match)
}

fn run(cli: Cli, raw_args: &[String]) -> Result<ExitCode, Failure> {
    if let Command::Replay { dir } = &cli.command {
        let ok = replay(dir, cli.threads)?;
        println!("replay {}", if ok { "reproduced every output" } else { "found differences" });
        return Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) });
    }
    let started = Instant::now();
    let mut outcome = execute(&cli.command, cli.threads)?;
    outcome.manifest.wall_time = started.elapsed().as_secs_f64();
    outcome.manifest.threads = cli
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    outcome
        .manifest
        .parameters
        .insert("command".into(), json!(recorded_args(raw_args)));
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("rmf-lab-out").join(cli.command.name()));
    let files: Vec<(&str, Vec<u8>)> = outcome.files.drain(..).collect();
    let manifest_path = write_run(&dir, &mut outcome.manifest, &files)?;
    for line in &outcome.report {
        println!("{line}");
    }
    println!("wrote {}", manifest_path.display());
    if cli.assert && !outcome.expectation_met {
        eprintln!("assertion failed: expectation not met");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let raw: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    if let Some(0) = cli.threads {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    match run(cli, &raw) {
        Ok(code) => code,
        Err(Failure::Usage(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Lab(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_domain() { 3 } else { 4 })
        }
    }
}
