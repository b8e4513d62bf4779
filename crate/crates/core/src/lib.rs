//! Desk-scale laboratory for Rademacher random multiplicative functions.
//!
//! Layers, bottom up:
//!
//! * [`primes`]: smallest-prime-factor sieve, factorization, squarefree tests.
//! * [`sampler`]: counter-based sign assignments and evaluation of `f`, `f*`.
//! * [`partial_sums`]: weighted partial sums, sign changes, Riesz mean, growth.
//! * [`analytic`]: zeta, Euler products, prime sums, Harper sup scans.
//! * [`mellin`]: exact Mellin integrals of the partial-sum step functions.
//! * [`montecarlo`]: multi-seed experiments with reproducible per-trial output.
//! * [`io`]: lossless CSV text, atomic writes, manifests.

pub mod analytic;
pub mod error;
pub mod io;
pub mod mellin;
pub mod montecarlo;
pub mod partial_sums;
pub mod primes;
pub mod sampler;

pub use error::{LabError, Result};
