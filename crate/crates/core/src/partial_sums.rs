//! Weighted partial sums `M_alpha(x) = sum_{n <= x} g(n) / n^alpha`, their sign
//! changes, the Riesz mean and the growth-envelope statistic.
//!
//! Sums accumulate in `f64` in ascending `n`. `M_alpha` is a step function
//! constant on `[n, n + 1)`, so sampling at integers loses nothing.

use std::io::Write;

use crate::error::{invalid, Result};
use crate::io::fmt_f64;
use crate::primes::SpfTable;
use crate::sampler::{Model, MultiplicativeEvaluator, SignAssignment};

/// Accumulation strategy for the running sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Summation {
    /// Plain left-to-right addition. The default, and the only mode whose
    /// output the Monte Carlo layer reproduces.
    #[default]
    Plain,
    /// Neumaier-compensated addition, for validating rounding drift.
    Compensated,
}

/// `1 / n^alpha` for `n = 0..=limit` (slot 0 unused).
///
/// Shared by the stored and streaming paths so both produce bit-identical
/// sums.
#[derive(Clone, Debug)]
pub struct InverseWeights {
    alpha: f64,
    w: Vec<f64>,
}

impl InverseWeights {
    pub fn new(alpha: f64, limit: u64) -> Result<Self> {
        check_alpha(alpha)?;
        let len = limit as usize + 1;
        let mut w = vec![0.0; len];
        for (n, slot) in w.iter_mut().enumerate().skip(1) {
            *slot = inverse_power(n as u64, alpha);
        }
        Ok(InverseWeights { alpha, w })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn limit(&self) -> u64 {
        self.w.len() as u64 - 1
    }

    #[inline]
    pub fn get(&self, n: u64) -> f64 {
        self.w[n as usize]
    }
}

/// `1 / n^alpha`, exact for `alpha = 0` and correctly rounded for `alpha = 1`.
#[inline]
pub fn inverse_power(n: u64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else {
        1.0 / (n as f64).powf(alpha)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(invalid(format!("alpha = {alpha} outside [0, 1]")));
    }
    Ok(())
}

/// Streams `(x, M_alpha(x))` for `x = 1..=limit` given precomputed `g` values.
///
/// `g` must cover `0..=limit` (slot 0 ignored).
pub fn fold_series(
    g: &[i8],
    weights: &InverseWeights,
    limit: u64,
    summation: Summation,
    mut visit: impl FnMut(u64, f64),
) {
    debug_assert!(g.len() as u64 > limit && weights.limit() >= limit);
    match summation {
        Summation::Plain => {
            let mut m = 0.0f64;
            for x in 1..=limit {
                m += g[x as usize] as f64 * weights.get(x);
                visit(x, m);
            }
        }
        Summation::Compensated => {
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for x in 1..=limit {
                let term = g[x as usize] as f64 * weights.get(x);
                let t = sum + term;
                if sum.abs() >= term.abs() {
                    comp += (sum - t) + term;
                } else {
                    comp += (term - t) + sum;
                }
                sum = t;
                visit(x, sum + comp);
            }
        }
    }
}

/// Stored series `M_alpha(1..=N)` with its running extreme.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedSumSeries {
    pub model: Model,
    pub alpha: f64,
    /// `values[x - 1] = M_alpha(x)`.
    values: Vec<f64>,
    pub max_abs: f64,
    pub argmax: u64,
}

impl WeightedSumSeries {
    /// Wraps precomputed values `M_alpha(1), ..., M_alpha(N)`; used for
    /// synthetic series and for reloading exports.
    pub fn from_values(model: Model, alpha: f64, values: Vec<f64>) -> Result<Self> {
        check_alpha(alpha)?;
        if values.is_empty() {
            return Err(invalid("series must contain at least M(1)"));
        }
        let (mut max_abs, mut argmax) = (f64::NEG_INFINITY, 0);
        for (i, v) in values.iter().enumerate() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                argmax = i as u64 + 1;
            }
        }
        Ok(WeightedSumSeries {
            model,
            alpha,
            values,
            max_abs,
            argmax,
        })
    }

    pub fn limit(&self) -> u64 {
        self.values.len() as u64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `M_alpha(x)` for `1 <= x <= N`; `M_alpha(0) = 0`.
    pub fn at(&self, x: u64) -> f64 {
        if x == 0 {
            0.0
        } else {
            self.values[x as usize - 1]
        }
    }

    /// The series of `-g`.
    pub fn negated(&self) -> Self {
        WeightedSumSeries {
            model: self.model,
            alpha: self.alpha,
            values: self.values.iter().map(|v| -v).collect(),
            max_abs: self.max_abs,
            argmax: self.argmax,
        }
    }

    /// Writes `x,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, fmt_f64(*v))?;
        }
        Ok(())
    }
}

/// `M_alpha(1..=limit)` for `g in {f, f*}` under `assignment`.
pub fn compute_series(
    assignment: &SignAssignment,
    table: &SpfTable,
    model: Model,
    alpha: f64,
    limit: u64,
) -> Result<WeightedSumSeries> {
    compute_series_with(assignment, table, model, alpha, limit, Summation::Plain)
}

pub fn compute_series_with(
    assignment: &SignAssignment,
    table: &SpfTable,
    model: Model,
    alpha: f64,
    limit: u64,
    summation: Summation,
) -> Result<WeightedSumSeries> {
    check_alpha(alpha)?;
    if limit == 0 {
        return Err(invalid("series limit must be at least 1"));
    }
    let weights = InverseWeights::new(alpha, limit)?;
    let g = if limit == 1 {
        vec![0, 1]
    } else {
        MultiplicativeEvaluator::new(assignment, table).values(model, limit)?
    };
    Ok(series_from_values(&g, &weights, model, limit, summation))
}

pub(crate) fn series_from_values(
    g: &[i8],
    weights: &InverseWeights,
    model: Model,
    limit: u64,
    summation: Summation,
) -> WeightedSumSeries {
    let mut values = Vec::with_capacity(limit as usize);
    let (mut max_abs, mut argmax) = (f64::NEG_INFINITY, 0);
    fold_series(g, weights, limit, summation, |x, m| {
        values.push(m);
        if m.abs() > max_abs {
            max_abs = m.abs();
            argmax = x;
        }
    });
    WeightedSumSeries {
        model,
        alpha: weights.alpha(),
        values,
        max_abs,
        argmax,
    }
}

/// Positions where the partial sum crosses from strictly positive to strictly
/// negative or back. Zeros neither start nor end a crossing.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SignChangeLog {
    pub positions: Vec<u64>,
    /// Sign held from each recorded position on.
    pub signs_after: Vec<i8>,
    /// Sign of the first nonzero value, 0 if the series is identically 0.
    pub first_sign: i8,
}

impl SignChangeLog {
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    pub fn last_position(&self) -> Option<u64> {
        self.positions.last().copied()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "position,sign_after")?;
        for (p, s) in self.positions.iter().zip(&self.signs_after) {
            writeln!(out, "{p},{s}")?;
        }
        Ok(())
    }
}

/// Incremental form of [`detect_sign_changes`] for streamed values.
#[derive(Clone, Debug, Default)]
pub struct SignChangeTracker {
    current: i8,
    log: SignChangeLog,
}

impl SignChangeTracker {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn observe(&mut self, x: u64, value: f64) {
        let s = if value > 0.0 {
            1
        } else if value < 0.0 {
            -1
        } else {
            return;
        };
        if self.current == 0 {
            self.current = s;
            self.log.first_sign = s;
        } else if s != self.current {
            self.current = s;
            self.log.positions.push(x);
            self.log.signs_after.push(s);
        }
    }

    pub fn finish(self) -> SignChangeLog {
        self.log
    }
}

pub fn detect_sign_changes(series: &WeightedSumSeries) -> SignChangeLog {
    let mut tracker = SignChangeTracker::new();
    for (i, &v) in series.values().iter().enumerate() {
        tracker.observe(i as u64 + 1, v);
    }
    tracker.finish()
}

/// `sum_{n <= x} (f(n) / sqrt(n)) log(x / n)`, natural log, ascending `n`.
pub fn riesz_mean(evaluator: &MultiplicativeEvaluator<'_>, x: u64) -> Result<f64> {
    if x == 0 {
        return Err(invalid("Riesz mean needs x >= 1"));
    }
    let xf = x as f64;
    let g = evaluator.values(Model::F, x)?;
    let mut sum = 0.0;
    for n in 1..=x {
        let fnv = g[n as usize];
        if fnv != 0 {
            let nf = n as f64;
            sum += fnv as f64 / nf.sqrt() * (xf / nf).ln();
        }
    }
    Ok(sum)
}

/// `max_{16 <= x <= N} |M_0(x)| / (sqrt(x) (log log x)^theta)`.
pub fn growth_statistic(series: &WeightedSumSeries, theta: f64) -> Result<f64> {
    if series.alpha != 0.0 {
        return Err(invalid(format!(
            "growth statistic needs an unweighted series, got alpha = {}",
            series.alpha
        )));
    }
    if series.limit() < 16 {
        return Err(invalid(format!(
            "growth statistic needs N >= 16, got {}",
            series.limit()
        )));
    }
    Ok(growth_envelope(series.values(), theta, series.limit()))
}

/// Growth statistic restricted to `16 <= x <= upto` over `values[x - 1]`.
pub(crate) fn growth_envelope(values: &[f64], theta: f64, upto: u64) -> f64 {
    (16..=upto)
        .map(|x| values[x as usize - 1].abs() * growth_inverse_normalizer(x, theta))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[inline]
pub(crate) fn growth_inverse_normalizer(x: u64, theta: f64) -> f64 {
    let xf = x as f64;
    1.0 / (xf.sqrt() * xf.ln().ln().powf(theta))
}
