//! Mellin integrals of the step functions `M_alpha(x)`.
//!
//! `M_alpha` is constant on every `[n, n + 1)`, so
//! `int_1^N M_alpha(x) x^{-(s+1-alpha)} dx` is a finite sum of closed-form
//! interval integrals; nothing here is a quadrature. With
//! `beta = s - alpha`, partial summation gives the exact truncated identity
//!
//! ```text
//! sum_{n<=N} g(n) n^{-s} = beta int_1^N M_alpha(x) x^{-(beta+1)} dx + M_alpha(N) N^{-beta}.
//! ```

use std::io::Write;

use num_complex::Complex64;

use crate::analytic::{default_harper_grid_step, expm1_c, ComplexPoint, PrimeTerms};
use crate::error::{invalid, LabError, Result};
use crate::io::fmt_f64;
use crate::partial_sums::{compute_series, WeightedSumSeries};
use crate::primes::SpfTable;
use crate::sampler::{Model, MultiplicativeEvaluator, SignAssignment};

fn require_kernel(re_s: f64, alpha: f64) -> Result<()> {
    if !(re_s > alpha) {
        return Err(LabError::DivergentKernel { re_s, alpha });
    }
    Ok(())
}

/// `n^{-beta} - (n+1)^{-beta}`, i.e. `beta int_n^{n+1} x^{-(beta+1)} dx`,
/// evaluated as `n^{-beta} (1 - (1 + 1/n)^{-beta})` to avoid cancellation.
#[inline]
pub fn scaled_interval_kernel(n: u64, beta: Complex64) -> Complex64 {
    let ln_n = (n as f64).ln();
    let head = (-beta * ln_n).exp();
    let step = (1.0 / n as f64).ln_1p();
    head * -expm1_c(-beta * step)
}

/// `int_n^{n+1} x^{-(beta+1)} dx` for real `beta > 0`; always positive.
#[inline]
pub fn interval_kernel(n: u64, beta: f64) -> f64 {
    let nf = n as f64;
    let head = nf.powf(-beta);
    let step = (1.0 / nf).ln_1p();
    head * -(-beta * step).exp_m1() / beta
}

/// `(s - alpha) int_1^N M_alpha(x) x^{-(s+1-alpha)} dx`.
pub fn mellin_step_integral(series: &WeightedSumSeries, s: ComplexPoint) -> Result<Complex64> {
    require_kernel(s.sigma, series.alpha)?;
    let beta = s.to_complex() - series.alpha;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..series.limit() {
        sum += scaled_interval_kernel(n, beta) * series.at(n);
    }
    Ok(sum)
}

/// `int_1^N M_alpha(x) x^{-(sigma+1-alpha)} dx` at real `sigma`, without the
/// `(sigma - alpha)` prefactor.
pub fn signed_mellin_integral(series: &WeightedSumSeries, sigma: f64) -> Result<f64> {
    require_kernel(sigma, series.alpha)?;
    let beta = sigma - series.alpha;
    let mut sum = 0.0;
    for n in 1..series.limit() {
        sum += series.at(n) * interval_kernel(n, beta);
    }
    Ok(sum)
}

/// `int_1^N |M_alpha(x)| x^{-(sigma+1-alpha)} dx`, without prefactor.
pub fn abs_mellin_integral(series: &WeightedSumSeries, sigma: f64) -> Result<f64> {
    require_kernel(sigma, series.alpha)?;
    let beta = sigma - series.alpha;
    let mut sum = 0.0;
    for n in 1..series.limit() {
        sum += series.at(n).abs() * interval_kernel(n, beta);
    }
    Ok(sum)
}

/// Partial-summation boundary term `M_alpha(N) N^{-(s-alpha)}`.
pub fn boundary_term(series: &WeightedSumSeries, s: ComplexPoint) -> Complex64 {
    let beta = s.to_complex() - series.alpha;
    let n = series.limit();
    (-beta * (n as f64).ln()).exp() * series.at(n)
}

/// Both sides of the truncated identity for one series and one `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MellinEvaluation {
    pub s: ComplexPoint,
    pub alpha: f64,
    pub limit: u64,
    pub signed_integral: Complex64,
    pub boundary_term: Complex64,
    /// Only for real `s`.
    pub abs_integral: Option<f64>,
}

pub fn evaluate_mellin(series: &WeightedSumSeries, s: ComplexPoint) -> Result<MellinEvaluation> {
    let signed_integral = mellin_step_integral(series, s)?;
    let abs_integral = if s.t == 0.0 {
        Some(abs_mellin_integral(series, s.sigma)?)
    } else {
        None
    };
    Ok(MellinEvaluation {
        s,
        alpha: series.alpha,
        limit: series.limit(),
        signed_integral,
        boundary_term: boundary_term(series, s),
        abs_integral,
    })
}

/// `sum_{n<=N} g(n) n^{-s}` summed directly in ascending `n`.
pub fn dirichlet_partial_sum(g: &[i8], limit: u64, s: ComplexPoint) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=limit {
        let v = g[n as usize];
        if v != 0 {
            let ln_n = (n as f64).ln();
            let mag = (-s.sigma * ln_n).exp();
            let (sin, cos) = (-s.t * ln_n).sin_cos();
            sum += Complex64::new(mag * cos, mag * sin) * v as f64;
        }
    }
    sum
}

/// Outcome of checking the truncated partial-summation identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityCheck {
    pub dirichlet_sum: Complex64,
    pub mellin_side: Complex64,
    /// `|dirichlet_sum - mellin_side|`.
    pub residual: f64,
}

impl IdentityCheck {
    /// Residual scaled by `|dirichlet_sum| + 1`.
    pub fn relative(&self) -> f64 {
        self.residual / (self.dirichlet_sum.norm() + 1.0)
    }
}

pub fn check_truncated_identity(
    assignment: &SignAssignment,
    table: &SpfTable,
    model: Model,
    alpha: f64,
    s: ComplexPoint,
    limit: u64,
) -> Result<IdentityCheck> {
    require_kernel(s.sigma, alpha)?;
    let series = compute_series(assignment, table, model, alpha, limit)?;
    let g = if limit == 1 {
        vec![0, 1]
    } else {
        MultiplicativeEvaluator::new(assignment, table).values(model, limit)?
    };
    let dirichlet_sum = dirichlet_partial_sum(&g, limit, s);
    let mellin_side = mellin_step_integral(&series, s)? + boundary_term(&series, s);
    Ok(IdentityCheck {
        dirichlet_sum,
        mellin_side,
        residual: (dirichlet_sum - mellin_side).norm(),
    })
}

/// `|sum_{n<=N} g(n) n^{-s} - (mellin_step_integral + M_alpha(N) N^{-(s-alpha)})|`.
pub fn truncated_identity_residual(
    assignment: &SignAssignment,
    table: &SpfTable,
    model: Model,
    alpha: f64,
    s: ComplexPoint,
    limit: u64,
) -> Result<f64> {
    Ok(check_truncated_identity(assignment, table, model, alpha, s, limit)?.residual)
}

/// One row of the signed-versus-absolute comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DivergenceRow {
    pub sigma: f64,
    /// `int_1^N M_alpha(x) x^{-(sigma+1-alpha)} dx`.
    pub signed: f64,
    /// Same with `|M_alpha|`.
    pub absolute: f64,
    /// `|F(sigma + i t*)| / t*` with `t*` from the Harper scan.
    pub harper_witness: f64,
    pub t_star: f64,
    pub limit: u64,
    pub prime_limit: u64,
    pub seed: u64,
}

impl DivergenceRow {
    pub const CSV_HEADER: &'static str = "sigma,signed,absolute,harper_witness,N,prime_limit,seed";

    /// `absolute / |signed|`; equals 1 exactly when `M_alpha` never changes
    /// sign on `[1, N)`.
    pub fn ratio(&self) -> f64 {
        self.absolute / self.signed.abs()
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt_f64(self.sigma),
            fmt_f64(self.signed),
            fmt_f64(self.absolute),
            fmt_f64(self.harper_witness),
            self.limit,
            self.prime_limit,
            self.seed
        )
    }
}

pub fn write_divergence_csv<W: Write>(rows: &[DivergenceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", DivergenceRow::CSV_HEADER)?;
    for r in rows {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

pub(crate) fn validate_sigma_grid(alpha: f64, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("sigma grid is empty"));
    }
    let floor = alpha.max(0.5);
    for &s in grid {
        if !(s > floor && s <= 0.7) {
            return Err(invalid(format!(
                "sigma = {s} outside ({floor}, 0.7] for alpha = {alpha}"
            )));
        }
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid("sigma grid must be strictly decreasing toward 1/2"));
    }
    Ok(())
}

/// Signed and absolute integrals plus the Harper witness at every `sigma` of
/// the grid, all for one fixed realization (`series` and `terms` must come
/// from the same assignment).
pub fn divergence_table(
    series: &WeightedSumSeries,
    terms: &PrimeTerms,
    sigma_grid: &[f64],
    seed: u64,
) -> Result<Vec<DivergenceRow>> {
    validate_sigma_grid(series.alpha, sigma_grid)?;
    sigma_grid
        .iter()
        .map(|&sigma| {
            let scan = terms.harper_scan(sigma, default_harper_grid_step(sigma))?;
            let f = terms.euler(series.model, ComplexPoint::new(sigma, scan.t_star))?;
            Ok(DivergenceRow {
                sigma,
                signed: signed_mellin_integral(series, sigma)?,
                absolute: abs_mellin_integral(series, sigma)?,
                harper_witness: f.value.norm() / scan.t_star,
                t_star: scan.t_star,
                limit: series.limit(),
                prime_limit: terms.prime_limit(),
                seed,
            })
        })
        .collect()
}

pub fn divergence_comparison(
    assignment: &SignAssignment,
    table: &SpfTable,
    model: Model,
    alpha: f64,
    sigma_grid: &[f64],
    limit: u64,
    prime_limit: u64,
) -> Result<Vec<DivergenceRow>> {
    validate_sigma_grid(alpha, sigma_grid)?;
    let series = compute_series(assignment, table, model, alpha, limit)?;
    let terms = PrimeTerms::new(assignment, table, prime_limit)?;
    divergence_table(&series, &terms, sigma_grid, assignment.seed().unwrap_or(0))
}

/// True when `absolute / |signed|` strictly increases along the grid.
pub fn ratio_increases(rows: &[DivergenceRow]) -> bool {
    rows.windows(2).all(|w| w[1].ratio() > w[0].ratio())
}
