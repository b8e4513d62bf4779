//! Sign assignments on primes and evaluation of `f` (squarefree support) and
//! `f*` (completely multiplicative).
//!
//! Randomness is counter-based: the sign of prime `p` under seed `s` is a pure
//! function of `(s, p)`, so values never depend on which `n` are evaluated,
//! in what order, or on how many threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::primes::SpfTable;

/// SplitMix64 finalizer: a bijection on `u64` with full avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Keyed counter hash: `mix64(mix64(seed ^ K0) ^ key * K1)`.
///
/// For a fixed seed this is a bijection in `key`, so distinct keys never
/// collide.
#[inline]
pub fn mix(seed: u64, key: u64) -> u64 {
    const K0: u64 = 0x243f_6a88_85a3_08d3;
    const K1: u64 = 0x9e37_79b9_7f4a_7c15;
    mix64(mix64(seed ^ K0) ^ key.wrapping_mul(K1))
}

/// Which of the two random multiplicative models a computation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// `f(n) = mu^2(n) prod_{p | n} f(p)`.
    #[serde(rename = "f")]
    F,
    /// `f*(n) = prod_{p^a || n} f(p)^a`.
    #[serde(rename = "fstar")]
    FStar,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::F => "f",
            Model::FStar => "fstar",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Model {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f" => Ok(Model::F),
            "fstar" | "f*" | "f_star" => Ok(Model::FStar),
            other => Err(invalid(format!("unknown model '{other}' (expected f or fstar)"))),
        }
    }
}

/// Rule assigning `f(p) in {-1, +1}` to every prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SignAssignment {
    /// Independent fair coins derived from `mix(seed, p)`.
    IidRademacher { seed: u64 },
    /// `f(p) = -1` for all `p`, giving `f = mu` and `f* = lambda`.
    AllMinusOne,
    /// Signs read from a fixture; primes outside the map are an error.
    Explicit(BTreeMap<u64, i8>),
}

impl SignAssignment {
    pub fn rademacher(seed: u64) -> Self {
        SignAssignment::IidRademacher { seed }
    }

    /// The seed for random assignments, `None` otherwise.
    pub fn seed(&self) -> Option<u64> {
        match self {
            SignAssignment::IidRademacher { seed } => Some(*seed),
            _ => None,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            SignAssignment::IidRademacher { .. } => "iid_rademacher",
            SignAssignment::AllMinusOne => "all_minus_one",
            SignAssignment::Explicit(_) => "explicit",
        }
    }

    /// `f(p)`. The caller guarantees `p` is prime.
    #[inline]
    pub fn sign_at_prime(&self, p: u64) -> Result<i8> {
        match self {
            SignAssignment::IidRademacher { seed } => Ok(rademacher_sign(*seed, p)),
            SignAssignment::AllMinusOne => Ok(-1),
            SignAssignment::Explicit(map) => map.get(&p).copied().ok_or(LabError::MissingSign(p)),
        }
    }

    /// Parses the two-column fixture format: one `p sign` pair per line,
    /// sign written as `1`, `+1` or `-1`. Blank lines and `#` comments are
    /// skipped.
    pub fn parse_explicit(text: &str, origin: &Path) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| LabError::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            let mut cols = line.split_whitespace();
            let (Some(p), Some(s), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(parse_err(format!("expected 'p sign', got '{line}'")));
            };
            let p: u64 = p
                .parse()
                .map_err(|_| parse_err(format!("bad prime '{p}'")))?;
            let sign: i8 = match s {
                "1" | "+1" => 1,
                "-1" => -1,
                _ => return Err(parse_err(format!("bad sign '{s}' (expected +1 or -1)"))),
            };
            if map.insert(p, sign).is_some() {
                return Err(parse_err(format!("duplicate entry for {p}")));
            }
        }
        Ok(SignAssignment::Explicit(map))
    }

    pub fn load_explicit(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse_explicit(&text, path)
    }
}

/// Sign of prime `p` under `seed`: the top bit of `mix(seed, p)`.
#[inline]
pub fn rademacher_sign(seed: u64, p: u64) -> i8 {
    if mix(seed, p) >> 63 == 0 {
        1
    } else {
        -1
    }
}

/// Precomputed `f(p)` for every prime up to a bound, indexed by `p`.
/// Non-prime slots hold 0.
#[derive(Clone, Debug)]
pub struct PrimeSignTable {
    signs: Vec<i8>,
}

impl PrimeSignTable {
    pub fn new(assignment: &SignAssignment, table: &SpfTable, limit: u64) -> Result<Self> {
        if limit > table.limit() {
            return Err(invalid(format!(
                "sign table bound {limit} exceeds sieve limit {}",
                table.limit()
            )));
        }
        let mut signs = vec![0i8; limit as usize + 1];
        for &p in table.primes_through(limit) {
            signs[p as usize] = assignment.sign_at_prime(p as u64)?;
        }
        Ok(PrimeSignTable { signs })
    }

    pub fn limit(&self) -> u64 {
        self.signs.len() as u64 - 1
    }

    #[inline]
    pub fn get(&self, p: u64) -> i8 {
        self.signs[p as usize]
    }
}

/// Evaluates `f` and `f*` for one assignment over one sieve.
#[derive(Clone, Debug)]
pub struct MultiplicativeEvaluator<'a> {
    assignment: &'a SignAssignment,
    table: &'a SpfTable,
    signs: Option<PrimeSignTable>,
}

impl<'a> MultiplicativeEvaluator<'a> {
    pub fn new(assignment: &'a SignAssignment, table: &'a SpfTable) -> Self {
        MultiplicativeEvaluator {
            assignment,
            table,
            signs: None,
        }
    }

    /// Same evaluator backed by a sign table over every prime in the sieve.
    pub fn with_sign_table(assignment: &'a SignAssignment, table: &'a SpfTable) -> Result<Self> {
        let signs = PrimeSignTable::new(assignment, table, table.limit())?;
        Ok(MultiplicativeEvaluator {
            assignment,
            table,
            signs: Some(signs),
        })
    }

    pub fn assignment(&self) -> &'a SignAssignment {
        self.assignment
    }

    pub fn table(&self) -> &'a SpfTable {
        self.table
    }

    #[inline]
    fn sign(&self, p: u64) -> Result<i8> {
        match &self.signs {
            Some(t) => Ok(t.get(p)),
            None => self.assignment.sign_at_prime(p),
        }
    }

    pub fn evaluate(&self, model: Model, n: u64) -> Result<i8> {
        match model {
            Model::F => self.evaluate_f(n),
            Model::FStar => self.evaluate_f_star(n),
        }
    }

    /// `f(n)`: zero off the squarefree integers, `f(1) = 1`.
    pub fn evaluate_f(&self, n: u64) -> Result<i8> {
        self.table.check_range(n)?;
        let mut m = n;
        let mut v = 1i8;
        while m > 1 {
            let p = self.table.spf(m) as u64;
            m /= p;
            if m % p == 0 {
                return Ok(0);
            }
            v *= self.sign(p)?;
        }
        Ok(v)
    }

    /// `f*(n)`, never zero, `f*(1) = 1`.
    pub fn evaluate_f_star(&self, n: u64) -> Result<i8> {
        self.table.check_range(n)?;
        let mut m = n;
        let mut v = 1i8;
        while m > 1 {
            let p = self.table.spf(m) as u64;
            m /= p;
            v *= self.sign(p)?;
        }
        Ok(v)
    }

    /// `sum_{d^2 | n} f(n / d^2)`, the Dirichlet convolution of `f` with the
    /// perfect-square indicator. Equals `f*(n)`: only the `d` whose square
    /// strips every repeated prime pair leaves a squarefree cofactor.
    pub fn evaluate_f_star_by_convolution(&self, n: u64) -> Result<i32> {
        self.table.check_range(n)?;
        let mut total = 0i32;
        let mut d = 1u64;
        while d * d <= n {
            if n % (d * d) == 0 {
                total += self.evaluate_f(n / (d * d))? as i32;
            }
            d += 1;
        }
        Ok(total)
    }

    /// `g(0..=limit)` for the chosen model in one linear pass over the sieve
    /// (`g(0) = 0` as padding). This is the hot path for whole-range sums.
    pub fn values(&self, model: Model, limit: u64) -> Result<Vec<i8>> {
        let owned;
        let signs = match &self.signs {
            Some(t) if t.limit() >= limit => t,
            _ => {
                owned = PrimeSignTable::new(self.assignment, self.table, limit)?;
                &owned
            }
        };
        fill_values(self.table, signs, model, limit)
    }
}

pub(crate) fn fill_values(
    table: &SpfTable,
    signs: &PrimeSignTable,
    model: Model,
    limit: u64,
) -> Result<Vec<i8>> {
    if limit == 0 || limit > table.limit() {
        return Err(invalid(format!(
            "limit {limit} outside [1, {}] covered by the sieve",
            table.limit()
        )));
    }
    let len = limit as usize + 1;
    let mut g = vec![0i8; len];
    g[1] = 1;
    match model {
        Model::FStar => {
            for n in 2..len {
                let p = table.spf(n as u64) as usize;
                g[n] = signs.get(p as u64) * g[n / p];
            }
        }
        Model::F => {
            for n in 2..len {
                let p = table.spf(n as u64) as usize;
                let m = n / p;
                g[n] = if m > 1 && table.spf(m as u64) as usize == p {
                    0
                } else {
                    signs.get(p as u64) * g[m]
                };
            }
        }
    }
    Ok(g)
}
