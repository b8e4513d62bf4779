//! Multi-seed experiments.
//!
//! Trial `i` draws its signs from `mix(base_seed, i)` and nothing else, so a
//! trial's record is a pure function of `(config, i)`. Trials run on a rayon
//! pool of the configured size and are collected in trial order; summaries
//! are an ordered fold over those records and can be rebuilt bit-for-bit from
//! the per-trial CSV.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analytic::{default_harper_grid_step, HarperScanResult, PrimeTerms};
use crate::error::{invalid, LabError, Result};
use crate::io::{fmt_f64, read_csv_column, write_run, RunManifest};
use crate::mellin::{divergence_table, ratio_increases, validate_sigma_grid, DivergenceRow};
use crate::partial_sums::{
    fold_series, growth_envelope, series_from_values, InverseWeights, SignChangeTracker, Summation,
};
use crate::primes::{build_spf_sieve, SpfTable};
use crate::sampler::{fill_values, mix, Model, PrimeSignTable, SignAssignment};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SignChanges,
    Positivity,
    HarperScan,
    Divergence,
    Growth,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::SignChanges => "sign-changes",
            Experiment::Positivity => "positivity",
            Experiment::HarperScan => "harper-scan",
            Experiment::Divergence => "divergence",
            Experiment::Growth => "growth",
        }
    }

    pub fn csv_header(self) -> &'static str {
        match self {
            Experiment::SignChanges => "trial,seed,count,last_position,final_value,max_abs",
            Experiment::Positivity => "trial,seed,positive,min_value,argmin",
            Experiment::HarperScan => "trial,seed,sigma,t_star,sup_value,centered_value,grid_step,prime_limit",
            Experiment::Divergence => {
                "trial,seed,sigma,signed,absolute,harper_witness,ratio,ratio_increasing,N,prime_limit"
            }
            Experiment::Growth => "trial,seed,N,theta,statistic",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sign-changes" => Experiment::SignChanges,
            "positivity" => Experiment::Positivity,
            "harper-scan" | "harper" => Experiment::HarperScan,
            "divergence" => Experiment::Divergence,
            "growth" => Experiment::Growth,
            other => return Err(invalid(format!("unknown experiment '{other}'"))),
        })
    }
}

/// Where each trial's signs come from.
#[derive(Clone, Debug, PartialEq)]
pub enum SignSource {
    /// Trial `i` uses `IidRademacher { seed: mix(base_seed, i) }`.
    Rademacher,
    /// Every trial uses the same assignment (all-minus-one or explicit).
    Fixed(SignAssignment),
}

impl SignSource {
    pub fn mode_name(&self) -> &'static str {
        match self {
            SignSource::Rademacher => "iid-rademacher",
            SignSource::Fixed(a) => a.mode_name(),
        }
    }
}

/// Pass/fail thresholds for the statistical expectations. These are
/// engineering defaults chosen from pilot runs, not constants of the theory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A trial passes the sign-change census with at least this many crossings.
    pub min_sign_changes: u64,
    /// Required fraction of passing trials in the sign-change census.
    pub sign_change_pass: f64,
    /// Required fraction of always-positive trials in the positivity run.
    pub positivity_pass: f64,
    /// Fraction of trials that must show the divergence ratio trend.
    pub majority: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_sign_changes: 5,
            sign_change_pass: 0.95,
            positivity_pass: 0.99,
            majority: 0.5,
        }
    }
}

impl Thresholds {
    pub fn to_json_map(&self) -> Map<String, Value> {
        let mut m = match serde_json::to_value(self).expect("thresholds serialize") {
            Value::Object(m) => m,
            _ => unreachable!(),
        };
        m.insert("origin".into(), json!("engineering default from pilot calibration"));
        m
    }

    pub fn from_json_map(m: &Map<String, Value>) -> Result<Self> {
        let mut m = m.clone();
        m.remove("origin");
        serde_json::from_value(Value::Object(m)).map_err(|e| LabError::Manifest(e.to_string()))
    }
}

pub const DEFAULT_THETAS: [f64; 3] = [0.0, 0.25, 0.5];
pub const DEFAULT_CHECKPOINTS: [u64; 3] = [10_000, 100_000, 1_000_000];

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: Model,
    pub alpha: f64,
    pub limit: u64,
    pub trials: u64,
    pub base_seed: u64,
    pub sigma_grid: Option<Vec<f64>>,
    pub prime_limit: Option<u64>,
    /// Harper grid spacing; per-sigma default when absent.
    pub grid_step: Option<f64>,
    /// Growth normalizer exponents.
    pub thetas: Vec<f64>,
    /// Growth evaluation points, each at most `limit`.
    pub checkpoints: Vec<u64>,
    pub signs: SignSource,
    pub thresholds: Thresholds,
    /// Worker count; `None` uses the available parallelism.
    pub threads: Option<usize>,
    pub output_path: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with the defaults for everything but the essentials.
    pub fn new(experiment: Experiment, model: Model, alpha: f64, limit: u64, trials: u64, base_seed: u64) -> Self {
        ExperimentConfig {
            experiment,
            model,
            alpha,
            limit,
            trials,
            base_seed,
            sigma_grid: None,
            prime_limit: None,
            grid_step: None,
            thetas: DEFAULT_THETAS.to_vec(),
            checkpoints: Vec::new(),
            signs: SignSource::Rademacher,
            thresholds: Thresholds::default(),
            threads: None,
            output_path: None,
        }
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        mix(self.base_seed, trial)
    }

    pub fn assignment(&self, trial: u64) -> SignAssignment {
        match &self.signs {
            SignSource::Rademacher => SignAssignment::rademacher(self.trial_seed(trial)),
            SignSource::Fixed(a) => a.clone(),
        }
    }

    /// Growth checkpoints, defaulting to `10^4, 10^5, 10^6` capped at `limit`
    /// and always ending at `limit`.
    pub fn growth_checkpoints(&self) -> Vec<u64> {
        if !self.checkpoints.is_empty() {
            return self.checkpoints.clone();
        }
        let mut c: Vec<u64> = DEFAULT_CHECKPOINTS.iter().copied().filter(|&x| x < self.limit).collect();
        c.push(self.limit);
        c
    }

    /// The sign-change census at `F*`, `alpha = 1/2` is never given a verdict.
    pub fn reporting_only(&self) -> bool {
        match self.experiment {
            Experiment::SignChanges => self.model == Model::FStar && self.alpha == 0.5,
            Experiment::Growth => true,
            _ => false,
        }
    }

    fn grid(&self) -> Result<&[f64]> {
        match self.sigma_grid.as_deref() {
            Some(g) if !g.is_empty() => Ok(g),
            _ => Err(invalid(format!("{} needs a sigma grid", self.experiment))),
        }
    }

    fn require_prime_limit(&self) -> Result<u64> {
        match self.prime_limit {
            Some(p) if p >= 2 => Ok(p),
            Some(p) => Err(invalid(format!("prime_limit must be >= 2, got {p}"))),
            None => Err(invalid(format!("{} needs a prime limit", self.experiment))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.limit == 0 {
            return Err(invalid("N must be >= 1"));
        }
        if let Some(0) = self.threads {
            return Err(invalid("threads must be >= 1"));
        }
        match self.experiment {
            Experiment::SignChanges => {
                if !(0.0..=0.5).contains(&self.alpha) {
                    return Err(invalid(format!(
                        "sign-change census needs 0 <= alpha <= 1/2, got {}",
                        self.alpha
                    )));
                }
            }
            Experiment::Positivity => {
                if self.model != Model::FStar || self.alpha != 1.0 {
                    return Err(invalid("positivity runs model fstar at alpha = 1"));
                }
            }
            Experiment::HarperScan => {
                self.require_prime_limit()?;
                for &s in self.grid()? {
                    if !(s > 0.5 && s <= 0.6) {
                        return Err(invalid(format!("Harper grid needs 1/2 < sigma <= 0.6, got {s}")));
                    }
                }
                if let Some(h) = self.grid_step {
                    if !(h > 0.0 && h.is_finite()) {
                        return Err(invalid(format!("grid_step must be positive, got {h}")));
                    }
                }
            }
            Experiment::Divergence => {
                self.require_prime_limit()?;
                if !(0.0..=0.5).contains(&self.alpha) {
                    return Err(invalid(format!(
                        "divergence comparison needs 0 <= alpha <= 1/2, got {}",
                        self.alpha
                    )));
                }
                validate_sigma_grid(self.alpha, self.grid()?)?;
            }
            Experiment::Growth => {
                if self.model != Model::F || self.alpha != 0.0 {
                    return Err(invalid("growth runs model f at alpha = 0"));
                }
                if self.thetas.is_empty() || self.thetas.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(invalid("thetas must be nonempty and nonnegative"));
                }
                let cps = self.growth_checkpoints();
                if cps.iter().any(|&c| c < 16 || c > self.limit) {
                    return Err(invalid(format!("growth checkpoints must lie in [16, {}]", self.limit)));
                }
            }
        }
        Ok(())
    }

    /// Sieve bound the experiment needs.
    pub fn sieve_limit(&self) -> u64 {
        self.limit.max(self.prime_limit.unwrap_or(0)).max(2)
    }

    /// Manifest describing this config; `outputs` and `wall_time` are filled
    /// in when the run is written.
    pub fn manifest(&self) -> RunManifest {
        let mut m = RunManifest::new(self.experiment.as_str());
        m.model = Some(self.model.as_str().to_string());
        m.alpha = Some(self.alpha);
        m.limit = Some(self.limit);
        m.trials = Some(self.trials);
        m.base_seed = Some(self.base_seed);
        m.prime_limit = self.prime_limit;
        m.sigma_grid = self.sigma_grid.clone();
        m.sign_mode = Some(self.signs.mode_name().to_string());
        m.thresholds = self.thresholds.to_json_map();
        m.threads = self.worker_count();
        if let Some(h) = self.grid_step {
            m.parameters.insert("grid_step".into(), json!(h));
        }
        if self.experiment == Experiment::Growth {
            m.parameters.insert("thetas".into(), json!(self.thetas));
            m.parameters.insert("checkpoints".into(), json!(self.growth_checkpoints()));
        }
        m.parameters.insert("reporting_only".into(), json!(self.reporting_only()));
        m
    }

    /// Rebuilds the config recorded in a manifest. Explicit sign files are
    /// not reconstructed here; pass them in via `signs`.
    pub fn from_manifest(m: &RunManifest, signs: SignSource) -> Result<Self> {
        let need = |what: &str| LabError::Manifest(format!("manifest lacks '{what}'"));
        let experiment: Experiment = m.experiment.parse()?;
        let model: Model = m
            .model
            .as_deref()
            .ok_or_else(|| need("model"))?
            .parse()?;
        let mut c = ExperimentConfig::new(
            experiment,
            model,
            m.alpha.ok_or_else(|| need("alpha"))?,
            m.limit.ok_or_else(|| need("N"))?,
            m.trials.ok_or_else(|| need("trials"))?,
            m.base_seed.ok_or_else(|| need("base_seed"))?,
        );
        c.sigma_grid = m.sigma_grid.clone();
        c.prime_limit = m.prime_limit;
        c.signs = signs;
        if !m.thresholds.is_empty() {
            c.thresholds = Thresholds::from_json_map(&m.thresholds)?;
        }
        let p = &m.parameters;
        c.grid_step = p.get("grid_step").and_then(Value::as_f64);
        if let Some(v) = p.get("thetas") {
            c.thetas = serde_json::from_value(v.clone()).map_err(|e| LabError::Manifest(e.to_string()))?;
        }
        if let Some(v) = p.get("checkpoints") {
            c.checkpoints = serde_json::from_value(v.clone()).map_err(|e| LabError::Manifest(e.to_string()))?;
        }
        Ok(c)
    }

    pub fn worker_count(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
    }
}

/// Everything one trial produces.
#[derive(Clone, Debug, PartialEq)]
pub enum TrialRecord {
    SignChanges {
        trial: u64,
        seed: u64,
        count: u64,
        /// 0 when the series never crosses.
        last_position: u64,
        final_value: f64,
        max_abs: f64,
    },
    Positivity {
        trial: u64,
        seed: u64,
        /// `M_1(x) > 0` for every `2 <= x <= N`.
        positive: bool,
        min_value: f64,
        argmin: u64,
    },
    Harper {
        trial: u64,
        seed: u64,
        scans: Vec<HarperScanResult>,
    },
    Divergence {
        trial: u64,
        seed: u64,
        rows: Vec<DivergenceRow>,
    },
    Growth {
        trial: u64,
        seed: u64,
        /// `(N, theta, statistic)`, checkpoint-major.
        values: Vec<(u64, f64, f64)>,
    },
}

impl TrialRecord {
    pub fn trial(&self) -> u64 {
        match self {
            TrialRecord::SignChanges { trial, .. }
            | TrialRecord::Positivity { trial, .. }
            | TrialRecord::Harper { trial, .. }
            | TrialRecord::Divergence { trial, .. }
            | TrialRecord::Growth { trial, .. } => *trial,
        }
    }

    fn csv_rows(&self, out: &mut String) {
        use std::fmt::Write;
        match self {
            TrialRecord::SignChanges { trial, seed, count, last_position, final_value, max_abs } => {
                let _ = writeln!(
                    out,
                    "{trial},{seed},{count},{last_position},{},{}",
                    fmt_f64(*final_value),
                    fmt_f64(*max_abs)
                );
            }
            TrialRecord::Positivity { trial, seed, positive, min_value, argmin } => {
                let _ = writeln!(out, "{trial},{seed},{},{},{argmin}", *positive as u8, fmt_f64(*min_value));
            }
            TrialRecord::Harper { trial, seed, scans } => {
                for s in scans {
                    let _ = writeln!(out, "{trial},{seed},{}", s.csv_row());
                }
            }
            TrialRecord::Divergence { trial, seed, rows } => {
                let inc = ratio_increases(rows) as u8;
                for r in rows {
                    let _ = writeln!(
                        out,
                        "{trial},{seed},{},{},{},{},{},{inc},{},{}",
                        fmt_f64(r.sigma),
                        fmt_f64(r.signed),
                        fmt_f64(r.absolute),
                        fmt_f64(r.harper_witness),
                        fmt_f64(r.ratio()),
                        r.limit,
                        r.prime_limit
                    );
                }
            }
            TrialRecord::Growth { trial, seed, values } => {
                for (n, theta, v) in values {
                    let _ = writeln!(out, "{trial},{seed},{n},{},{}", fmt_f64(*theta), fmt_f64(*v));
                }
            }
        }
    }

    /// The scalar observations this record contributes to the summary.
    fn observations(&self, sink: &mut Vec<Observation>, thresholds: &Thresholds) {
        match self {
            TrialRecord::SignChanges { trial, count, .. } => sink.push(Observation {
                trial: *trial,
                group: "all".into(),
                value: *count as f64,
                pass: Some(*count >= thresholds.min_sign_changes),
            }),
            TrialRecord::Positivity { trial, positive, min_value, .. } => sink.push(Observation {
                trial: *trial,
                group: "all".into(),
                value: *min_value,
                pass: Some(*positive),
            }),
            TrialRecord::Harper { trial, scans, .. } => {
                for s in scans {
                    sink.push(Observation {
                        trial: *trial,
                        group: sigma_group(s.sigma),
                        value: s.centered_value,
                        pass: None,
                    });
                }
            }
            TrialRecord::Divergence { trial, rows, .. } => {
                let inc = ratio_increases(rows);
                for (k, r) in rows.iter().enumerate() {
                    sink.push(Observation {
                        trial: *trial,
                        group: sigma_group(r.sigma),
                        value: r.ratio(),
                        pass: (k == 0).then_some(inc),
                    });
                }
            }
            TrialRecord::Growth { trial, values, .. } => {
                for &(n, theta, v) in values {
                    sink.push(Observation {
                        trial: *trial,
                        group: growth_group(n, theta),
                        value: v,
                        pass: None,
                    });
                }
            }
        }
    }
}

fn sigma_group(sigma: f64) -> String {
    format!("sigma={}", fmt_f64(sigma))
}

fn growth_group(n: u64, theta: f64) -> String {
    format!("N={n};theta={}", fmt_f64(theta))
}

/// One scalar per trial and group; `pass` is set on at most one observation
/// per trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub trial: u64,
    pub group: String,
    pub value: f64,
    pub pass: Option<bool>,
}

/// Linear-interpolation quantile (R type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
    pub min: f64,
    pub max: f64,
}

impl GroupSummary {
    fn from_values(group: String, values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        GroupSummary {
            group,
            count: values.len(),
            mean,
            median: quantile_sorted(&sorted, 0.5),
            q05: quantile_sorted(&sorted, 0.05),
            q95: quantile_sorted(&sorted, 0.95),
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Outcome of a statistical expectation: observed value against a labelled
/// engineering threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Expectation {
    pub description: String,
    pub observed: f64,
    pub threshold: f64,
    pub met: bool,
}

/// Medians along the sigma grid and how many consecutive steps increase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub medians: Vec<f64>,
    pub increasing_steps: usize,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: Experiment,
    pub trials: usize,
    /// The per-trial scalar each group summarizes.
    pub statistic: String,
    pub groups: Vec<GroupSummary>,
    pub pass_fraction: Option<f64>,
    pub trend: Option<Trend>,
    pub reporting_only: bool,
    /// `None` when the run is reporting-only.
    pub expectation: Option<Expectation>,
}

fn statistic_name(e: Experiment) -> &'static str {
    match e {
        Experiment::SignChanges => "sign change count",
        Experiment::Positivity => "min_x M_1(x)",
        Experiment::HarperScan => "centered sup value",
        Experiment::Divergence => "absolute / |signed|",
        Experiment::Growth => "growth statistic",
    }
}

/// Ordered fold of observations into a summary. Groups appear in order of
/// first occurrence.
pub fn summarize(
    experiment: Experiment,
    observations: &[Observation],
    thresholds: &Thresholds,
    reporting_only: bool,
) -> Summary {
    let mut order: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut trials: Vec<u64> = Vec::new();
    let mut passes = 0usize;
    let mut judged = 0usize;
    for o in observations {
        match order.iter().position(|g| *g == o.group) {
            Some(i) => values[i].push(o.value),
            None => {
                order.push(o.group.clone());
                values.push(vec![o.value]);
            }
        }
        if trials.last() != Some(&o.trial) {
            trials.push(o.trial);
        }
        if let Some(p) = o.pass {
            judged += 1;
            passes += p as usize;
        }
    }
    let groups: Vec<GroupSummary> = order
        .into_iter()
        .zip(&values)
        .map(|(g, v)| GroupSummary::from_values(g, v))
        .collect();
    let pass_fraction = (judged > 0).then(|| passes as f64 / judged as f64);

    let trend = (experiment == Experiment::HarperScan).then(|| {
        let medians: Vec<f64> = groups.iter().map(|g| g.median).collect();
        Trend {
            increasing_steps: medians.windows(2).filter(|w| w[1] > w[0]).count(),
            steps: medians.len().saturating_sub(1),
            medians,
        }
    });

    let expectation = if reporting_only {
        None
    } else {
        match experiment {
            Experiment::SignChanges => pass_fraction.map(|f| Expectation {
                description: format!(
                    "fraction of trials with >= {} sign changes",
                    thresholds.min_sign_changes
                ),
                observed: f,
                threshold: thresholds.sign_change_pass,
                met: f >= thresholds.sign_change_pass,
            }),
            Experiment::Positivity => pass_fraction.map(|f| Expectation {
                description: "fraction of trials with M_1(x) > 0 for all 2 <= x <= N".into(),
                observed: f,
                threshold: thresholds.positivity_pass,
                met: f >= thresholds.positivity_pass,
            }),
            Experiment::Divergence => pass_fraction.map(|f| Expectation {
                description: "fraction of trials whose ratio increases toward sigma = 1/2".into(),
                observed: f,
                threshold: thresholds.majority,
                met: f > thresholds.majority,
            }),
            Experiment::HarperScan => trend.as_ref().map(|t| Expectation {
                description: "increasing steps of the median centered sup along the grid".into(),
                observed: t.increasing_steps as f64,
                threshold: t.steps as f64,
                met: t.increasing_steps == t.steps,
            }),
            Experiment::Growth => None,
        }
    };

    Summary {
        experiment,
        trials: trials.len(),
        statistic: statistic_name(experiment).into(),
        groups,
        pass_fraction,
        trend,
        reporting_only,
        expectation,
    }
}

/// Per-trial records together with their summary.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateStats {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

impl AggregateStats {
    pub fn from_records(config: ExperimentConfig, records: Vec<TrialRecord>) -> Self {
        let mut obs = Vec::new();
        for r in &records {
            r.observations(&mut obs, &config.thresholds);
        }
        let summary = summarize(config.experiment, &obs, &config.thresholds, config.reporting_only());
        AggregateStats { config, records, summary }
    }

    pub fn trials_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.config.experiment.csv_header());
        out.push('\n');
        for r in &self.records {
            r.csv_rows(&mut out);
        }
        out
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        s.push('\n');
        s
    }

    /// Writes `manifest.json`, `trials.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path, wall_time: f64) -> Result<RunManifest> {
        let mut m = self.config.manifest();
        m.wall_time = wall_time;
        write_run(
            dir,
            &mut m,
            &[
                ("trials.csv", self.trials_csv().into_bytes()),
                ("summary.json", self.summary_json().into_bytes()),
            ],
        )?;
        Ok(m)
    }
}

/// Rebuilds the summary from per-trial CSV text alone.
pub fn summary_from_csv(
    experiment: Experiment,
    csv: &str,
    thresholds: &Thresholds,
    reporting_only: bool,
) -> Result<Summary> {
    let col = |name: &str| read_csv_column(csv, name);
    let trial = col("trial")?;
    let mut obs = Vec::with_capacity(trial.len());
    match experiment {
        Experiment::SignChanges => {
            for (t, c) in trial.iter().zip(col("count")?) {
                obs.push(Observation {
                    trial: *t as u64,
                    group: "all".into(),
                    value: c,
                    pass: Some(c >= thresholds.min_sign_changes as f64),
                });
            }
        }
        Experiment::Positivity => {
            for ((t, p), m) in trial.iter().zip(col("positive")?).zip(col("min_value")?) {
                obs.push(Observation { trial: *t as u64, group: "all".into(), value: m, pass: Some(p == 1.0) });
            }
        }
        Experiment::HarperScan => {
            for ((t, s), v) in trial.iter().zip(col("sigma")?).zip(col("centered_value")?) {
                obs.push(Observation { trial: *t as u64, group: sigma_group(s), value: v, pass: None });
            }
        }
        Experiment::Divergence => {
            let mut prev = None;
            for (((t, s), r), inc) in trial.iter().zip(col("sigma")?).zip(col("ratio")?).zip(col("ratio_increasing")?) {
                let first = prev != Some(*t);
                prev = Some(*t);
                obs.push(Observation {
                    trial: *t as u64,
                    group: sigma_group(s),
                    value: r,
                    pass: first.then_some(inc == 1.0),
                });
            }
        }
        Experiment::Growth => {
            for (((t, n), th), v) in trial.iter().zip(col("N")?).zip(col("theta")?).zip(col("statistic")?) {
                obs.push(Observation { trial: *t as u64, group: growth_group(n as u64, th), value: v, pass: None });
            }
        }
    }
    Ok(summarize(experiment, &obs, thresholds, reporting_only))
}

/// Shared read-only state for running trials of one config.
pub struct ExperimentRunner {
    config: ExperimentConfig,
    table: SpfTable,
    weights: Option<InverseWeights>,
}

impl ExperimentRunner {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let table = build_spf_sieve(config.sieve_limit())?;
        let weights = match config.experiment {
            Experiment::SignChanges | Experiment::Positivity | Experiment::Divergence | Experiment::Growth => {
                Some(InverseWeights::new(config.alpha, config.limit)?)
            }
            Experiment::HarperScan => None,
        };
        Ok(ExperimentRunner { config, table, weights })
    }

    /// Reuses an existing sieve, which must cover `config.sieve_limit()`.
    pub fn with_table(config: ExperimentConfig, table: SpfTable) -> Result<Self> {
        config.validate()?;
        if table.limit() < config.sieve_limit() {
            return Err(invalid(format!(
                "sieve covers {} but the experiment needs {}",
                table.limit(),
                config.sieve_limit()
            )));
        }
        let weights = match config.experiment {
            Experiment::HarperScan => None,
            _ => Some(InverseWeights::new(config.alpha, config.limit)?),
        };
        Ok(ExperimentRunner { config, table, weights })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn table(&self) -> &SpfTable {
        &self.table
    }

    fn weights(&self) -> &InverseWeights {
        self.weights.as_ref().expect("weights prepared for this experiment")
    }

    fn values(&self, assignment: &SignAssignment) -> Result<Vec<i8>> {
        let limit = self.config.limit;
        if limit == 1 {
            return Ok(vec![0, 1]);
        }
        let signs = PrimeSignTable::new(assignment, &self.table, limit)?;
        fill_values(&self.table, &signs, self.config.model, limit)
    }

    /// Runs trial `trial`; depends on nothing but the config and the index.
    pub fn trial(&self, trial: u64) -> Result<TrialRecord> {
        let c = &self.config;
        let assignment = c.assignment(trial);
        let seed = assignment.seed().unwrap_or(0);
        match c.experiment {
            Experiment::SignChanges => {
                let g = self.values(&assignment)?;
                let mut tracker = SignChangeTracker::new();
                let mut max_abs = 0.0f64;
                let mut last = 0.0;
                fold_series(&g, self.weights(), c.limit, Summation::Plain, |x, m| {
                    tracker.observe(x, m);
                    max_abs = max_abs.max(m.abs());
                    last = m;
                });
                let log = tracker.finish();
                Ok(TrialRecord::SignChanges {
                    trial,
                    seed,
                    count: log.count() as u64,
                    last_position: log.last_position().unwrap_or(0),
                    final_value: last,
                    max_abs,
                })
            }
            Experiment::Positivity => {
                let g = self.values(&assignment)?;
                let mut positive = true;
                let (mut min_value, mut argmin) = (f64::INFINITY, 0);
                fold_series(&g, self.weights(), c.limit, Summation::Plain, |x, m| {
                    if x >= 2 && m <= 0.0 {
                        positive = false;
                    }
                    if m < min_value {
                        min_value = m;
                        argmin = x;
                    }
                });
                Ok(TrialRecord::Positivity { trial, seed, positive, min_value, argmin })
            }
            Experiment::HarperScan => {
                let terms = PrimeTerms::new(&assignment, &self.table, c.require_prime_limit()?)?;
                let scans = c
                    .grid()?
                    .iter()
                    .map(|&s| terms.harper_sup_statistic(s, c.grid_step.unwrap_or_else(|| default_harper_grid_step(s))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(TrialRecord::Harper { trial, seed, scans })
            }
            Experiment::Divergence => {
                let g = self.values(&assignment)?;
                let series = series_from_values(&g, self.weights(), c.model, c.limit, Summation::Plain);
                drop(g);
                let terms = PrimeTerms::new(&assignment, &self.table, c.require_prime_limit()?)?;
                let rows = divergence_table(&series, &terms, c.grid()?, seed)?;
                Ok(TrialRecord::Divergence { trial, seed, rows })
            }
            Experiment::Growth => {
                let g = self.values(&assignment)?;
                let series = series_from_values(&g, self.weights(), c.model, c.limit, Summation::Plain);
                let mut values = Vec::new();
                for n in c.growth_checkpoints() {
                    for &theta in &c.thetas {
                        values.push((n, theta, growth_envelope(series.values(), theta, n)));
                    }
                }
                Ok(TrialRecord::Growth { trial, seed, values })
            }
        }
    }

    /// Runs the given trial indices sequentially, in the given order.
    pub fn run_trials(&self, order: &[u64]) -> Result<Vec<TrialRecord>> {
        order.iter().map(|&i| self.trial(i)).collect()
    }

    /// All trials on a pool of `config.threads` workers, collected in trial
    /// order.
    pub fn run(&self) -> Result<AggregateStats> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.worker_count())
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        let records = pool.install(|| {
            (0..self.config.trials)
                .into_par_iter()
                .map(|i| self.trial(i))
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(AggregateStats::from_records(self.config.clone(), records))
    }
}

fn run_kind(config: &ExperimentConfig, kind: Experiment) -> Result<AggregateStats> {
    if config.experiment != kind {
        return Err(invalid(format!(
            "config is for {}, not {kind}",
            config.experiment
        )));
    }
    ExperimentRunner::new(config.clone())?.run()
}

/// Sign-change census per trial.
pub fn run_sign_change_experiment(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, Experiment::SignChanges)
}

/// Fraction of trials with `sum_{n<=x} f*(n)/n > 0` for all `2 <= x <= N`.
pub fn run_positivity_experiment(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, Experiment::Positivity)
}

/// Harper sup statistic per trial and grid point.
pub fn run_harper_scan(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, Experiment::HarperScan)
}

/// Signed versus absolute Mellin integrals per trial, one assignment across
/// the whole grid.
pub fn run_divergence_comparison(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, Experiment::Divergence)
}

/// Growth statistics at every checkpoint and theta.
pub fn run_growth_experiment(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, Experiment::Growth)
}

/// Dispatches on `config.experiment`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<AggregateStats> {
    run_kind(config, config.experiment)
}
