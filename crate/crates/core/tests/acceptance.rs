//! Acceptance suite: one line per criterion.
//!
//! Exact, oracle and determinism criteria decide the exit status. Statistical
//! criteria print PASS/FAIL against their engineering thresholds but only
//! decide the exit status when `RMF_ACCEPTANCE_STRICT=1`.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;
use rmf_core::analytic::{zeta, ComplexPoint, PrimeTerms};
use rmf_core::mellin::{check_truncated_identity, mellin_step_integral};
use rmf_core::montecarlo::{
    quantile_sorted, summary_from_csv, Experiment, ExperimentConfig, ExperimentRunner, TrialRecord,
};
use rmf_core::partial_sums::{compute_series, detect_sign_changes};
use rmf_core::primes::{build_spf_sieve, SpfTable};
use rmf_core::sampler::{Model, MultiplicativeEvaluator, SignAssignment};

use common::Stream;

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Hard,
    Statistical,
    Report,
}

struct Suite {
    strict: bool,
    failures: Vec<String>,
    clock: Instant,
}

impl Suite {
    fn record(&mut self, kind: Kind, name: &str, ok: bool, detail: String) {
        let secs = self.clock.elapsed().as_secs_f64();
        self.clock = Instant::now();
        let (status, tag) = match kind {
            Kind::Report => ("REPORT", "report"),
            Kind::Hard => (if ok { "PASS" } else { "FAIL" }, "exact"),
            Kind::Statistical => (if ok { "PASS" } else { "FAIL" }, "statistical"),
        };
        println!("{status:<6} [{tag}] {name}: {detail} ({secs:.1} s)");
        let counts = match kind {
            Kind::Hard => true,
            Kind::Statistical => self.strict,
            Kind::Report => false,
        };
        if counts && !ok {
            self.failures.push(name.to_string());
        }
    }
}

fn convolution(suite: &mut Suite, table: &SpfTable) {
    let limit = 10_000u64;
    let mut mismatches = 0;
    for seed in 0..10u64 {
        let a = SignAssignment::rademacher(seed);
        let ev = MultiplicativeEvaluator::new(&a, table);
        let f = ev.values(Model::F, limit).unwrap();
        let fs = ev.values(Model::FStar, limit).unwrap();
        for n in 1..=limit {
            let mut conv = 0i32;
            let mut d = 1u64;
            while d * d <= n {
                if n % (d * d) == 0 {
                    conv += f[(n / (d * d)) as usize] as i32;
                }
                d += 1;
            }
            if conv != fs[n as usize] as i32 {
                mismatches += 1;
            }
        }
    }
    suite.record(
        Kind::Hard,
        "convolution f* = f * 1_squares, n <= 10^4, 10 seeds",
        mismatches == 0,
        format!("{mismatches} mismatches"),
    );
}

fn truncated_identity(suite: &mut Suite, table: &SpfTable) {
    let mut rng = Stream::new(0x1de7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let seed = rng.next_u64();
        let alpha = rng.pick(&[0.0, 0.25, 0.5]);
        let sigma = rng.range(alpha + 0.05, 1.5);
        let sigma = if sigma > alpha + 0.05 { sigma } else { alpha + 0.06 };
        let t = rng.range(-20.0, 20.0);
        let limit = rng.pick(&[1_000u64, 100_000]);
        let model = rng.pick(&[Model::F, Model::FStar]);
        let chk = check_truncated_identity(
            &SignAssignment::rademacher(seed),
            table,
            model,
            alpha,
            ComplexPoint::new(sigma, t),
            limit,
        )
        .unwrap();
        worst = worst.max(chk.relative());
    }
    suite.record(
        Kind::Hard,
        "truncated partial-summation identity, 100 random configurations",
        worst <= 1e-9,
        format!("max residual / (|sum| + 1) = {worst:.3e}, tolerance 1e-9"),
    );
}

fn euler_classical(suite: &mut Suite, table: &SpfTable) {
    let terms = PrimeTerms::new(&SignAssignment::AllMinusOne, table, 1_000_000).unwrap();
    let s = ComplexPoint::real(2.0);
    let f = terms.euler_f(s).unwrap().value;
    let fs = terms.euler_f_star(s).unwrap().value;
    let ef = (f - 6.0 / (PI * PI)).norm();
    let efs = (fs - PI * PI / 15.0).norm();
    suite.record(
        Kind::Hard,
        "Euler products at s = 2, all signs -1, primes <= 10^6",
        ef <= 1e-4 && efs <= 1e-4,
        format!("|F - 6/pi^2| = {ef:.2e}, |F* - zeta(4)/zeta(2)| = {efs:.2e}, tolerance 1e-4"),
    );
}

fn zeta_checks(suite: &mut Suite) {
    let z2 = zeta(Complex64::new(2.0, 0.0)).unwrap();
    let e = (z2 - PI * PI / 6.0).norm();
    let mut worst = 0.0f64;
    for sigma in [0.51, 0.505, 0.501] {
        let v = zeta(Complex64::new(2.0 * sigma, 0.0)).unwrap().re.ln() + (2.0 * sigma - 1.0).ln();
        worst = worst.max(v.abs());
    }
    suite.record(
        Kind::Hard,
        "zeta(2) = pi^2/6 and log zeta(2 sigma) + log(2 sigma - 1) bounded",
        e <= 1e-10 && worst <= 1.0,
        format!("|zeta(2) - pi^2/6| = {e:.2e}, max |log zeta(2s) + log(2s-1)| = {worst:.4}"),
    );
}

fn mobius_liouville(suite: &mut Suite, table: &SpfTable) {
    let limit = 100_000u64;
    let a = SignAssignment::AllMinusOne;
    let ev = MultiplicativeEvaluator::new(&a, table);
    let mu = ev.values(Model::F, limit).unwrap();
    let la = ev.values(Model::FStar, limit).unwrap();
    let bad = (1..=limit)
        .filter(|&n| mu[n as usize] != common::mobius(n) || la[n as usize] != common::liouville(n))
        .count();
    let m10 = compute_series(&a, table, Model::F, 0.0, 10).unwrap().at(10);
    let l10 = compute_series(&a, table, Model::FStar, 0.0, 10).unwrap().at(10);
    suite.record(
        Kind::Hard,
        "mu and lambda modes against trial-division oracles, n <= 10^5",
        bad == 0 && m10 == -1.0 && l10 == 0.0,
        format!("{bad} mismatches, M(10) = {m10}, L(10) = {l10}"),
    );
}

fn mellin_quadrature(suite: &mut Suite, table: &SpfTable) {
    let mut rng = Stream::new(0x9a5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let alpha = rng.pick(&[0.0, 0.25, 0.5]);
        let model = rng.pick(&[Model::F, Model::FStar]);
        let limit = rng.pick(&[100u64, 1_000, 5_000]);
        let s = ComplexPoint::new(rng.range(alpha + 0.05, 1.5), rng.range(-10.0, 10.0));
        let series =
            compute_series(&SignAssignment::rademacher(rng.next_u64()), table, model, alpha, limit).unwrap();
        let exact = mellin_step_integral(&series, s).unwrap();
        let quad = common::mellin_by_quadrature(series.values(), alpha, s.to_complex());
        worst = worst.max((exact - quad).norm());
    }
    suite.record(
        Kind::Hard,
        "step Mellin integral against adaptive Gauss-Kronrod, 20 configurations",
        worst <= 1e-8,
        format!("max |difference| = {worst:.3e}, tolerance 1e-8"),
    );
}

fn run(table: &SpfTable, config: ExperimentConfig) -> rmf_core::montecarlo::AggregateStats {
    ExperimentRunner::with_table(config, table.clone()).unwrap().run().unwrap()
}

fn sign_changes(suite: &mut Suite, table: &SpfTable) {
    for (model, alpha) in [
        (Model::F, 0.0),
        (Model::F, 0.25),
        (Model::F, 0.5),
        (Model::FStar, 0.0),
        (Model::FStar, 0.25),
    ] {
        let c = ExperimentConfig::new(Experiment::SignChanges, model, alpha, 1_000_000, 100, 42);
        let stats = run(table, c);
        let e = stats.summary.expectation.clone().unwrap();
        let g = &stats.summary.groups[0];
        suite.record(
            Kind::Statistical,
            &format!("sign changes, model {model}, alpha {alpha}, N 10^6, 100 trials"),
            e.met,
            format!(
                "{:.2} of trials with >= {} crossings (threshold {}), median count {}, min {}",
                e.observed, stats.config.thresholds.min_sign_changes, e.threshold, g.median, g.min
            ),
        );
        if model == Model::F && alpha == 0.0 {
            let ten = stats
                .records
                .iter()
                .filter(|r| matches!(r, TrialRecord::SignChanges { count, .. } if *count >= 10))
                .count() as f64
                / 100.0;
            suite.record(
                Kind::Report,
                "sign changes >= 10, model f, alpha 0, N 10^6",
                true,
                format!("{ten:.2} of trials"),
            );
        }
    }

    let c = ExperimentConfig::new(Experiment::SignChanges, Model::FStar, 0.5, 1_000_000, 100, 42);
    let stats = run(table, c);
    let g = &stats.summary.groups[0];
    suite.record(
        Kind::Report,
        "sign changes, model fstar, alpha 1/2 (open question, no verdict)",
        true,
        format!(
            "counts: min {}, q05 {}, median {}, q95 {}, max {}; {:.2} of trials with >= 5",
            g.min,
            g.q05,
            g.median,
            g.q95,
            g.max,
            stats.summary.pass_fraction.unwrap()
        ),
    );
}

fn constant_sign_tail(suite: &mut Suite, table: &SpfTable) {
    let limit = 1_000_000u64;
    let seeds = 50u64;
    let tail_start = limit - limit / 10;
    let constant = (0..seeds)
        .filter(|&i| {
            let s = compute_series(&SignAssignment::rademacher(1000 + i), table, Model::F, 0.75, limit).unwrap();
            let log = detect_sign_changes(&s);
            log.last_position().map_or(true, |p| p <= tail_start)
        })
        .count();
    let frac = constant as f64 / seeds as f64;
    suite.record(
        Kind::Statistical,
        "alpha 0.75 sanity: last 10% of the series has constant sign, 50 seeds",
        frac >= 0.9,
        format!("{frac:.2} of seeds (threshold 0.90)"),
    );
}

fn positivity(suite: &mut Suite, table: &SpfTable) {
    let c = ExperimentConfig::new(Experiment::Positivity, Model::FStar, 1.0, 10_000, 10_000, 42);
    let stats = run(table, c);
    let e = stats.summary.expectation.clone().unwrap();
    suite.record(
        Kind::Statistical,
        "positivity of sum f*(n)/n, N 10^4, 10^4 trials",
        e.met,
        format!(
            "pass fraction {:.4} (threshold {}), smallest minimum {:.4}",
            e.observed, e.threshold, stats.summary.groups[0].min
        ),
    );
}

fn harper(suite: &mut Suite, table: &SpfTable) {
    let mut c = ExperimentConfig::new(Experiment::HarperScan, Model::F, 0.0, 1, 100, 42);
    c.sigma_grid = Some(vec![0.58, 0.55, 0.52, 0.51]);
    c.prime_limit = Some(1_000_000);
    let stats = run(table, c);
    let trend = stats.summary.trend.clone().unwrap();
    let e = stats.summary.expectation.clone().unwrap();
    suite.record(
        Kind::Statistical,
        "Harper trend: median centered sup increasing along sigma 0.58, 0.55, 0.52, 0.51",
        e.met,
        format!(
            "medians {:?}, {} of {} steps increasing",
            trend.medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>(),
            trend.increasing_steps,
            trend.steps
        ),
    );
    let mut sup_medians = Vec::new();
    for k in 0..4 {
        let mut v: Vec<f64> = stats
            .records
            .iter()
            .map(|r| match r {
                TrialRecord::Harper { scans, .. } => scans[k].sup_value,
                _ => unreachable!(),
            })
            .collect();
        v.sort_by(f64::total_cmp);
        sup_medians.push(format!("{:.4}", quantile_sorted(&v, 0.5)));
    }
    suite.record(Kind::Report, "Harper uncentered median sup along the same grid", true, format!("{sup_medians:?}"));
}

fn divergence(suite: &mut Suite, table: &SpfTable) {
    for (model, alpha) in [(Model::F, 0.5), (Model::FStar, 0.0)] {
        let mut c = ExperimentConfig::new(Experiment::Divergence, model, alpha, 1_000_000, 50, 42);
        c.sigma_grid = Some(vec![0.56, 0.54, 0.52]);
        c.prime_limit = Some(1_000_000);
        let stats = run(table, c);
        let rows: Vec<_> = stats
            .records
            .iter()
            .flat_map(|r| match r {
                TrialRecord::Divergence { rows, .. } => rows.clone(),
                _ => unreachable!(),
            })
            .collect();
        let violations = rows.iter().filter(|r| !(r.absolute >= r.signed.abs())).count();
        suite.record(
            Kind::Hard,
            &format!("divergence, model {model}, alpha {alpha}: absolute >= |signed| everywhere"),
            violations == 0,
            format!("{violations} violations in {} grid points", rows.len()),
        );
        let e = stats.summary.expectation.clone().unwrap();
        suite.record(
            Kind::Statistical,
            &format!("divergence, model {model}, alpha {alpha}: ratio increases toward 1/2"),
            e.met,
            format!("{:.2} of 50 trials (needs > {})", e.observed, e.threshold),
        );
        if model == Model::F {
            let inside = stats
                .records
                .iter()
                .filter(|r| match r {
                    TrialRecord::Divergence { rows, .. } => rows.iter().all(|row| {
                        let x = row.signed.ln() / (1.0 / (2.0 * row.sigma - 1.0)).ln();
                        (0.2..=0.8).contains(&x)
                    }),
                    _ => unreachable!(),
                })
                .count();
            suite.record(
                Kind::Statistical,
                "signed integral exponent log(signed)/log(1/(2 sigma - 1)) in [0.2, 0.8]",
                inside * 2 > 50,
                format!("{inside} of 50 seeds inside at all of sigma 0.56, 0.54, 0.52"),
            );
            let per_sigma: Vec<String> = [0.56f64, 0.54, 0.52]
                .iter()
                .enumerate()
                .map(|(k, sigma)| {
                    let n = stats
                        .records
                        .iter()
                        .filter(|r| match r {
                            TrialRecord::Divergence { rows, .. } => {
                                let x = rows[k].signed.ln() / (1.0 / (2.0 * sigma - 1.0)).ln();
                                (0.2..=0.8).contains(&x)
                            }
                            _ => unreachable!(),
                        })
                        .count();
                    format!("sigma {sigma}: {n} of 50")
                })
                .collect();
            suite.record(Kind::Report, "signed integral exponent window, per sigma", true, per_sigma.join(", "));
        }
    }
}

fn growth(suite: &mut Suite, table: &SpfTable) {
    let c = ExperimentConfig::new(Experiment::Growth, Model::F, 0.0, 1_000_000, 100, 42);
    let stats = run(table, c);
    let q: Vec<String> = stats
        .summary
        .groups
        .iter()
        .filter(|g| g.group.ends_with(&format!("theta={}", rmf_core::io::fmt_f64(0.25))))
        .map(|g| format!("{}: q95 {:.4}", g.group.split(';').next().unwrap(), g.q95))
        .collect();
    suite.record(Kind::Report, "growth statistic, theta 1/4, 95% quantile per N", true, q.join(", "));
}

fn determinism(suite: &mut Suite, table: &SpfTable) {
    let mut configs = vec![
        ExperimentConfig::new(Experiment::SignChanges, Model::F, 0.5, 100_000, 24, 7),
        ExperimentConfig::new(Experiment::Positivity, Model::FStar, 1.0, 10_000, 64, 7),
        ExperimentConfig::new(Experiment::Growth, Model::F, 0.0, 100_000, 12, 7),
    ];
    let mut h = ExperimentConfig::new(Experiment::HarperScan, Model::F, 0.0, 1, 8, 7);
    h.sigma_grid = Some(vec![0.58, 0.55]);
    h.prime_limit = Some(10_000);
    configs.push(h);
    let mut d = ExperimentConfig::new(Experiment::Divergence, Model::FStar, 0.0, 100_000, 8, 7);
    d.sigma_grid = Some(vec![0.6, 0.55]);
    d.prime_limit = Some(10_000);
    configs.push(d);

    let mut ok = true;
    let mut notes = Vec::new();
    for base in configs {
        let mut csvs = Vec::new();
        for threads in [1usize, 4, 8] {
            let mut c = base.clone();
            c.threads = Some(threads);
            let stats = run(table, c);
            let csv = stats.trials_csv();
            let rebuilt =
                summary_from_csv(base.experiment, &csv, &base.thresholds, base.reporting_only()).unwrap();
            ok &= rebuilt == stats.summary;
            csvs.push(csv);
        }
        let same = csvs.windows(2).all(|w| w[0] == w[1]);
        ok &= same;
        notes.push(format!("{} {}", base.experiment, if same { "identical" } else { "DIFFERENT" }));
    }
    suite.record(
        Kind::Hard,
        "per-trial CSV byte-identical across 1, 4 and 8 workers; summaries rebuilt from CSV",
        ok,
        notes.join(", "),
    );
}

fn main() {
    let strict = std::env::var("RMF_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut suite = Suite { strict, failures: Vec::new(), clock: Instant::now() };
    let table = build_spf_sieve(1_000_000).unwrap();
    println!("acceptance suite (statistical criteria {})", if strict { "enforced" } else { "reported" });

    convolution(&mut suite, &table);
    truncated_identity(&mut suite, &table);
    euler_classical(&mut suite, &table);
    zeta_checks(&mut suite);
    mobius_liouville(&mut suite, &table);
    mellin_quadrature(&mut suite, &table);
    determinism(&mut suite, &table);
    sign_changes(&mut suite, &table);
    constant_sign_tail(&mut suite, &table);
    positivity(&mut suite, &table);
    divergence(&mut suite, &table);
    harper(&mut suite, &table);
    growth(&mut suite, &table);

    if suite.failures.is_empty() {
        println!("acceptance: all enforced criteria passed");
    } else {
        println!("acceptance: {} enforced criteria failed: {:?}", suite.failures.len(), suite.failures);
        std::process::exit(1);
    }
}
