//! Riemann zeta, truncated Euler products for `F(s)` and `F*(s)`, prime sums,
//! the exponential-formula residual and the Harper sup statistic.
//!
//! Every infinite product or sum over primes is truncated at a prime limit
//! `P`, and every result records `P`.

use std::f64::consts::LN_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::io::fmt_f64;
use crate::primes::SpfTable;
use crate::sampler::{Model, SignAssignment};

/// A point `s = sigma + i t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoint {
    pub sigma: f64,
    pub t: f64,
}

impl ComplexPoint {
    pub fn new(sigma: f64, t: f64) -> Self {
        ComplexPoint { sigma, t }
    }

    pub fn real(sigma: f64) -> Self {
        ComplexPoint { sigma, t: 0.0 }
    }

    pub fn conj(self) -> Self {
        ComplexPoint {
            sigma: self.sigma,
            t: -self.t,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.sigma, self.t)
    }

    pub fn require_euler_domain(self) -> Result<()> {
        if !(self.sigma > 0.5) || !self.t.is_finite() {
            return Err(LabError::OutOfDomain(format!(
                "Euler products need Re s > 1/2, got s = {} + {}i",
                self.sigma, self.t
            )));
        }
        Ok(())
    }
}

impl From<ComplexPoint> for Complex64 {
    fn from(p: ComplexPoint) -> Self {
        p.to_complex()
    }
}

/// `e^z - 1` without cancellation for small `|z|`.
pub(crate) fn expm1_c(z: Complex64) -> Complex64 {
    let (sin_y, cos_y) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    // e^x cos y - 1 = expm1(x) cos y - 2 sin^2(y/2)
    let re = z.re.exp_m1() * cos_y - 2.0 * half * half;
    Complex64::new(re, z.re.exp() * sin_y)
}

/// Number of Borwein terms giving absolute error below about `1e-12` for
/// `|Im s| <= 100`. The error bound is
/// `3 (1 + 2|t|) e^{pi |t| / 2} / (3 + sqrt 8)^n` up to the `1 - 2^{1-s}` factor.
fn borwein_terms(t: f64) -> usize {
    let t = t.abs();
    let log10_rate = (3.0 + 8f64.sqrt()).log10();
    let needed = 13.0 + (3.0 * (1.0 + 2.0 * t)).log10() + t * std::f64::consts::FRAC_PI_2 / std::f64::consts::LN_10;
    ((needed / log10_rate).ceil() as usize + 4).clamp(20, 400)
}

/// Riemann zeta for `Re s > 0`, `s != 1`.
///
/// Uses Borwein's accelerated alternating series for the eta function,
/// `zeta(s) = eta(s) / (1 - 2^{1-s})`, with `d_k = n sum_{i<=k} (n+i-1)! 4^i / ((n-i)! (2i)!)`
/// and `eta(s) ~ -1/d_n sum_{k<n} (-1)^k (d_k - d_n) / (k+1)^s`. Accurate to
/// about `1e-11` on `Re s >= 0.5`, `|Im s| <= 100`, away from the zeros of
/// `1 - 2^{1-s}` on `Re s = 1`.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if s == Complex64::new(1.0, 0.0) {
        return Err(LabError::Pole);
    }
    if !(s.re > 0.0) || !s.im.is_finite() || !s.re.is_finite() {
        return Err(LabError::OutOfDomain(format!(
            "zeta is evaluated only for Re s > 0, got s = {} + {}i",
            s.re, s.im
        )));
    }
    let n = borwein_terms(s.im);
    let nf = n as f64;
    let mut d = Vec::with_capacity(n + 1);
    let mut term = 1.0f64;
    let mut acc = 1.0f64;
    d.push(acc);
    for i in 1..=n {
        let fi = i as f64;
        term *= 4.0 * (nf + fi - 1.0) * (nf - fi + 1.0) / ((2.0 * fi) * (2.0 * fi - 1.0));
        acc += term;
        d.push(acc);
    }
    let dn = d[n];
    let mut eta = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let coeff = (d[k] - dn) / dn;
        let signed = if k % 2 == 0 { coeff } else { -coeff };
        // (k+1)^{-s}
        let base = ((k + 1) as f64).ln();
        eta += (-s * base).exp() * signed;
    }
    eta = -eta;
    // 1 - 2^{1-s} = -expm1((1-s) ln 2)
    let denom = -expm1_c((Complex64::new(1.0, 0.0) - s) * LN_2);
    Ok(eta / denom)
}

/// Truncated Euler product with its convergence diagnostic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EulerProduct {
    pub value: Complex64,
    /// `|last factor - 1|` for the largest prime included.
    pub last_factor_deviation: f64,
    pub prime_limit: u64,
}

/// Primes up to a limit together with `f(p)` and `log p`, shared by every
/// prime-indexed computation for one assignment.
#[derive(Clone, Debug)]
pub struct PrimeTerms {
    primes: Vec<u32>,
    signs: Vec<f64>,
    logs: Vec<f64>,
    prime_limit: u64,
}

impl PrimeTerms {
    pub fn new(assignment: &SignAssignment, table: &SpfTable, prime_limit: u64) -> Result<Self> {
        if prime_limit < 2 {
            return Err(invalid(format!("prime_limit must be >= 2, got {prime_limit}")));
        }
        if prime_limit > table.limit() {
            return Err(invalid(format!(
                "prime_limit {prime_limit} exceeds sieve limit {}",
                table.limit()
            )));
        }
        let primes = table.primes_through(prime_limit).to_vec();
        let signs = primes
            .iter()
            .map(|&p| assignment.sign_at_prime(p as u64).map(f64::from))
            .collect::<Result<Vec<_>>>()?;
        let logs = primes.iter().map(|&p| (p as f64).ln()).collect();
        Ok(PrimeTerms {
            primes,
            signs,
            logs,
            prime_limit,
        })
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// `p^{-s}` for the `i`-th prime.
    #[inline]
    fn prime_power(&self, i: usize, s: ComplexPoint) -> Complex64 {
        let mag = (self.primes[i] as f64).powf(-s.sigma);
        let (sin, cos) = (-s.t * self.logs[i]).sin_cos();
        Complex64::new(mag * cos, mag * sin)
    }

    /// `f(p) p^{-sigma}`, the amplitude of each cosine term.
    #[inline]
    fn amplitude(&self, i: usize, sigma: f64) -> f64 {
        self.signs[i] * (self.primes[i] as f64).powf(-sigma)
    }

    /// `prod_{p <= P} (1 + f(p) p^{-s})`, factors multiplied in ascending `p`.
    pub fn euler_f(&self, s: ComplexPoint) -> Result<EulerProduct> {
        s.require_euler_domain()?;
        Ok(self.product(s, |z| 1.0 + z))
    }

    /// `prod_{p <= P} (1 - f(p) p^{-s})^{-1}`.
    pub fn euler_f_star(&self, s: ComplexPoint) -> Result<EulerProduct> {
        s.require_euler_domain()?;
        Ok(self.product(s, |z| (1.0 - z).inv()))
    }

    /// `prod_{p <= P} (1 - f(p) p^{-s})`: the product of the reciprocals of the
    /// `F*` factors.
    pub fn euler_f_star_inverse(&self, s: ComplexPoint) -> Result<EulerProduct> {
        s.require_euler_domain()?;
        Ok(self.product(s, |z| 1.0 - z))
    }

    pub fn euler(&self, model: Model, s: ComplexPoint) -> Result<EulerProduct> {
        match model {
            Model::F => self.euler_f(s),
            Model::FStar => self.euler_f_star(s),
        }
    }

    fn product(&self, s: ComplexPoint, factor: impl Fn(Complex64) -> Complex64) -> EulerProduct {
        let mut value = Complex64::new(1.0, 0.0);
        let mut last = Complex64::new(1.0, 0.0);
        for i in 0..self.primes.len() {
            last = factor(self.prime_power(i, s) * self.signs[i]);
            value *= last;
        }
        EulerProduct {
            value,
            last_factor_deviation: (last - 1.0).norm(),
            prime_limit: self.prime_limit,
        }
    }

    /// `sum_{p <= P} f(p) cos(t log p) p^{-sigma}`, ascending `p`.
    pub fn cosine_sum(&self, sigma: f64, t: f64) -> Result<f64> {
        require_sigma(sigma)?;
        let mut sum = 0.0;
        for i in 0..self.primes.len() {
            sum += self.amplitude(i, sigma) * (t * self.logs[i]).cos();
        }
        Ok(sum)
    }

    /// `sum_{p <= P} f(p) p^{-sigma}`.
    pub fn prime_sum_real(&self, sigma: f64) -> Result<f64> {
        require_sigma(sigma)?;
        let mut sum = 0.0;
        for i in 0..self.primes.len() {
            sum += self.amplitude(i, sigma);
        }
        Ok(sum)
    }

    /// Complex residual `log F(s) - (sum_p f(p) p^{-s} -+ log zeta(2s) / 2)`,
    /// where `log F` is the sum of principal logs of the factors and
    /// `log zeta(2s)` is principal.
    pub fn exponential_residual(&self, model: Model, s: ComplexPoint) -> Result<Complex64> {
        if !(s.sigma >= 0.51) {
            return Err(LabError::OutOfDomain(format!(
                "exponential formula check needs Re s >= 0.51, got {}",
                s.sigma
            )));
        }
        if self.prime_limit < 1000 {
            return Err(invalid(format!(
                "exponential formula check needs prime_limit >= 1000, got {}",
                self.prime_limit
            )));
        }
        let mut log_product = Complex64::new(0.0, 0.0);
        let mut prime_sum = Complex64::new(0.0, 0.0);
        for i in 0..self.primes.len() {
            let z = self.prime_power(i, s) * self.signs[i];
            prime_sum += z;
            log_product += match model {
                Model::F => (1.0 + z).ln(),
                Model::FStar => -(1.0 - z).ln(),
            };
        }
        let half_log_zeta = 0.5 * zeta(2.0 * s.to_complex())?.ln();
        Ok(match model {
            Model::F => log_product - (prime_sum - half_log_zeta),
            Model::FStar => log_product - (prime_sum + half_log_zeta),
        })
    }

    pub fn exponential_formula_check(&self, model: Model, s: ComplexPoint) -> Result<f64> {
        Ok(self.exponential_residual(model, s)?.norm())
    }

    /// Harper sup statistic over `t in [1, 2 log(1/(sigma - 1/2))^2]` on a
    /// uniform grid `t_k = 1 + k * grid_step`. Requires `1/2 < sigma <= 0.6`.
    pub fn harper_sup_statistic(&self, sigma: f64, grid_step: f64) -> Result<HarperScanResult> {
        if !(sigma > 0.5 && sigma <= 0.6) {
            return Err(invalid(format!(
                "Harper scan needs 1/2 < sigma <= 0.6, got {sigma}"
            )));
        }
        self.harper_scan(sigma, grid_step)
    }

    /// Same scan without the upper bound on `sigma`; the window must still be
    /// nonempty.
    pub fn harper_scan(&self, sigma: f64, grid_step: f64) -> Result<HarperScanResult> {
        require_sigma(sigma)
            .map_err(|_| invalid(format!("Harper scan needs sigma > 1/2, got {sigma}")))?;
        if !(grid_step > 0.0) || !grid_step.is_finite() {
            return Err(invalid(format!("grid_step must be positive, got {grid_step}")));
        }
        let t_max = harper_window_end(sigma);
        if !(t_max >= 1.0) {
            return Err(invalid(format!(
                "empty Harper window [1, {t_max}] at sigma = {sigma}"
            )));
        }
        let mut steps = ((t_max - 1.0) / grid_step).floor() as u64;
        while grid_t(steps + 1, grid_step) <= t_max {
            steps += 1;
        }
        while steps > 0 && grid_t(steps, grid_step) > t_max {
            steps -= 1;
        }
        let amplitudes: Vec<f64> = (0..self.primes.len()).map(|i| self.amplitude(i, sigma)).collect();
        let exact = |k: u64| -> f64 {
            let t = grid_t(k, grid_step);
            let mut sum = 0.0;
            for (w, l) in amplitudes.iter().zip(&self.logs) {
                sum += w * (t * l).cos();
            }
            sum
        };

        let approx = approximate_cosine_grid(&amplitudes, &self.logs, grid_step, steps as usize + 1);
        let approx_max = approx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Approximation error is below ~1e-11 * sum |w|; every grid point that
        // could be the exact maximum lies within this margin.
        let margin = 1e-9 * amplitudes.iter().map(|w| w.abs()).sum::<f64>() + 1e-12;
        let (mut best_k, mut best) = (0u64, f64::NEG_INFINITY);
        for (k, &a) in approx.iter().enumerate() {
            if a >= approx_max - margin {
                let v = exact(k as u64);
                if v > best {
                    best = v;
                    best_k = k as u64;
                }
            }
        }
        Ok(HarperScanResult {
            sigma,
            t_star: grid_t(best_k, grid_step),
            sup_value: best,
            centered_value: best - 2.0 * (1.0 / (sigma - 0.5)).ln().ln(),
            grid_step,
            prime_limit: self.prime_limit,
            grid_points: steps + 1,
        })
    }
}

#[inline]
fn grid_t(k: u64, step: f64) -> f64 {
    1.0 + k as f64 * step
}

/// Right end `2 log(1/(sigma - 1/2))^2` of the Harper window.
pub fn harper_window_end(sigma: f64) -> f64 {
    let l = (1.0 / (sigma - 0.5)).ln();
    2.0 * l * l
}

/// Default Harper grid spacing `0.01 / log(1/(sigma - 1/2))`.
pub fn default_harper_grid_step(sigma: f64) -> f64 {
    0.01 / (1.0 / (sigma - 0.5)).ln()
}

const CHUNK: usize = 256;
const BLOCK: usize = 256;
const LANES: usize = 8;

/// Cosine sums at `t_k = 1 + k h`, `k < count`, by phase rotation.
///
/// Each block of `BLOCK` grid points is anchored with exact `sin_cos` at its
/// first point and advanced by multiplying with `e^{i h log p}`; primes are
/// processed in cache-sized chunks. Values differ from direct evaluation by
/// rounding only (a few hundred ulps per term).
fn approximate_cosine_grid(amplitudes: &[f64], logs: &[f64], h: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0; count];
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, block)| {
        let t0 = grid_t((b * BLOCK) as u64, h);
        let mut c = [0.0f64; CHUNK];
        let mut s = [0.0f64; CHUNK];
        let mut rc = [0.0f64; CHUNK];
        let mut rs = [0.0f64; CHUNK];
        let mut w = [0.0f64; CHUNK];
        for start in (0..amplitudes.len()).step_by(CHUNK) {
            let end = (start + CHUNK).min(amplitudes.len());
            let n = end - start;
            for i in 0..CHUNK {
                if i < n {
                    let l = logs[start + i];
                    (s[i], c[i]) = (t0 * l).sin_cos();
                    (rs[i], rc[i]) = (h * l).sin_cos();
                    w[i] = amplitudes[start + i];
                } else {
                    (c[i], s[i], rc[i], rs[i], w[i]) = (0.0, 0.0, 1.0, 0.0, 0.0);
                }
            }
            for slot in block.iter_mut() {
                let mut acc = [0.0f64; LANES];
                for ((((cc, ss), rcc), rss), ww) in c
                    .chunks_exact_mut(LANES)
                    .zip(s.chunks_exact_mut(LANES))
                    .zip(rc.chunks_exact(LANES))
                    .zip(rs.chunks_exact(LANES))
                    .zip(w.chunks_exact(LANES))
                {
                    for l in 0..LANES {
                        acc[l] += ww[l] * cc[l];
                        let nc = cc[l] * rcc[l] - ss[l] * rss[l];
                        ss[l] = ss[l] * rcc[l] + cc[l] * rss[l];
                        cc[l] = nc;
                    }
                }
                *slot += acc.iter().sum::<f64>();
            }
        }
    });
    out
}

fn require_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.5) || !sigma.is_finite() {
        return Err(LabError::OutOfDomain(format!(
            "prime sums need sigma > 1/2, got {sigma}"
        )));
    }
    Ok(())
}

/// Result of one Harper sup scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarperScanResult {
    pub sigma: f64,
    /// Smallest grid point attaining the maximum.
    pub t_star: f64,
    pub sup_value: f64,
    /// `sup_value - 2 log log(1/(sigma - 1/2))`.
    pub centered_value: f64,
    pub grid_step: f64,
    pub prime_limit: u64,
    pub grid_points: u64,
}

impl HarperScanResult {
    pub const CSV_HEADER: &'static str = "sigma,t_star,sup_value,centered_value,grid_step,prime_limit";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            fmt_f64(self.sigma),
            fmt_f64(self.t_star),
            fmt_f64(self.sup_value),
            fmt_f64(self.centered_value),
            fmt_f64(self.grid_step),
            self.prime_limit
        )
    }
}

pub fn euler_product_f(
    assignment: &SignAssignment,
    table: &SpfTable,
    s: ComplexPoint,
    prime_limit: u64,
) -> Result<EulerProduct> {
    s.require_euler_domain()?;
    PrimeTerms::new(assignment, table, prime_limit)?.euler_f(s)
}

pub fn euler_product_f_star(
    assignment: &SignAssignment,
    table: &SpfTable,
    s: ComplexPoint,
    prime_limit: u64,
) -> Result<EulerProduct> {
    s.require_euler_domain()?;
    PrimeTerms::new(assignment, table, prime_limit)?.euler_f_star(s)
}

pub fn prime_cosine_sum(
    assignment: &SignAssignment,
    table: &SpfTable,
    sigma: f64,
    t: f64,
    prime_limit: u64,
) -> Result<f64> {
    require_sigma(sigma)?;
    PrimeTerms::new(assignment, table, prime_limit)?.cosine_sum(sigma, t)
}

pub fn prime_sum_real(
    assignment: &SignAssignment,
    table: &SpfTable,
    sigma: f64,
    prime_limit: u64,
) -> Result<f64> {
    require_sigma(sigma)?;
    PrimeTerms::new(assignment, table, prime_limit)?.prime_sum_real(sigma)
}

pub fn exponential_formula_check(
    assignment: &SignAssignment,
    table: &SpfTable,
    s: ComplexPoint,
    prime_limit: u64,
    model: Model,
) -> Result<f64> {
    PrimeTerms::new(assignment, table, prime_limit)?.exponential_formula_check(model, s)
}

pub fn harper_sup_statistic(
    assignment: &SignAssignment,
    table: &SpfTable,
    sigma: f64,
    grid_step: f64,
    prime_limit: u64,
) -> Result<HarperScanResult> {
    PrimeTerms::new(assignment, table, prime_limit)?.harper_sup_statistic(sigma, grid_step)
}
