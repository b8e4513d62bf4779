//! Smallest-prime-factor sieve, factorization and squarefree tests.
//!
//! The table stores one `u32` per integer, so a sieve up to `N` costs `4N`
//! bytes plus the prime list (about `4N / ln N` bytes). Limits up to
//! [`MAX_SIEVE_LIMIT`] are accepted; `N = 10^8` needs roughly 420 MB.

use crate::error::{invalid, LabError, Result};

/// Largest limit representable with 32-bit table entries.
pub const MAX_SIEVE_LIMIT: u64 = u32::MAX as u64;

/// Smallest prime factor of every `2 <= n <= limit`.
///
/// Immutable after construction and `Sync`, so any number of workers may
/// read it concurrently.
#[derive(Clone, Debug)]
pub struct SpfTable {
    limit: u64,
    // spf[0] and spf[1] are 0.
    spf: Vec<u32>,
    primes: Vec<u32>,
}

/// Builds the table with a linear (Euler) sieve: every composite is struck
/// exactly once, by its smallest prime factor.
pub fn build_spf_sieve(limit: u64) -> Result<SpfTable> {
    if limit < 2 {
        return Err(invalid(format!("sieve limit must be at least 2, got {limit}")));
    }
    if limit > MAX_SIEVE_LIMIT {
        return Err(invalid(format!(
            "sieve limit {limit} exceeds the 32-bit table bound {MAX_SIEVE_LIMIT}"
        )));
    }
    let len = (limit + 1) as usize;
    let mut spf: Vec<u32> = Vec::new();
    spf.try_reserve_exact(len).map_err(|_| LabError::Resource {
        limit,
        requested_bytes: 4 * len as u64,
    })?;
    spf.resize(len, 0);

    let mut primes: Vec<u32> = Vec::new();
    // Rosser-Schoenfeld style upper estimate for pi(N), only used as a capacity hint.
    let lf = limit as f64;
    let hint = (1.26 * lf / lf.ln()) as usize + 16;
    primes
        .try_reserve_exact(hint)
        .map_err(|_| LabError::Resource {
            limit,
            requested_bytes: 4 * (len + hint) as u64,
        })?;

    for i in 2..len {
        if spf[i] == 0 {
            spf[i] = i as u32;
            primes.push(i as u32);
        }
        let lp = spf[i];
        for &p in &primes {
            let m = i as u64 * p as u64;
            if p > lp || m > limit {
                break;
            }
            spf[m as usize] = p;
        }
    }
    Ok(SpfTable { limit, spf, primes })
}

impl SpfTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    #[inline]
    pub fn spf(&self, n: u64) -> u32 {
        self.spf[n as usize]
    }

    /// All primes up to the limit, ascending.
    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    /// Primes `p <= bound` (clamped to the table limit).
    pub fn primes_through(&self, bound: u64) -> &[u32] {
        let end = self.primes.partition_point(|&p| p as u64 <= bound);
        &self.primes[..end]
    }

    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.limit && self.spf[n as usize] as u64 == n
    }

    pub(crate) fn check_range(&self, n: u64) -> Result<()> {
        if n == 0 || n > self.limit {
            Err(invalid(format!(
                "n = {n} outside [1, {}] covered by the sieve",
                self.limit
            )))
        } else {
            Ok(())
        }
    }

    /// Prime factorization of `n` as ascending `(prime, exponent)` pairs.
    /// `n = 1` yields the empty factorization.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        self.check_range(n)?;
        let mut out = Vec::new();
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize] as u64;
            let mut a = 0;
            while m % p == 0 {
                m /= p;
                a += 1;
            }
            out.push((p, a));
        }
        Ok(out)
    }

    /// `mu(n)^2`: true iff no prime square divides `n`.
    pub fn is_squarefree(&self, n: u64) -> Result<bool> {
        self.check_range(n)?;
        let mut m = n;
        while m > 1 {
            let p = self.spf[m as usize] as u64;
            m /= p;
            if m % p == 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Ordered list of all primes covered by `table`.
pub fn primes_up_to(table: &SpfTable) -> Vec<u64> {
    table.primes.iter().map(|&p| p as u64).collect()
}

/// Free-function form of [`SpfTable::factorize`].
pub fn factorize(n: u64, table: &SpfTable) -> Result<Vec<(u64, u32)>> {
    table.factorize(n)
}

/// Free-function form of [`SpfTable::is_squarefree`].
pub fn is_squarefree(n: u64, table: &SpfTable) -> Result<bool> {
    table.is_squarefree(n)
}
