//! Core machinery for working with Ramanujan expansions whose coefficients
//! are multiplicative arithmetic functions.
//!
//! The crate is organised bottom-up:
//!
//! - [`sieve`] — smallest-prime-factor sieve and the elementary arithmetic
//!   functions built on it (factorization, μ, φ, rad, divisors);
//! - [`scalar`] — a small numeric abstraction so every construction runs both
//!   in exact complex-rational arithmetic and in `f64` complex arithmetic;
//! - [`tabulated`] — dense tabulations of arithmetic functions together with
//!   Dirichlet convolution and the Möbius (Eratosthenes) transform;
//! - [`ramsum`] — Ramanujan sums `c_q(a)` via both classical closed forms;
//! - [`coeff`] — symbolic coefficient specifications, prime classification
//!   (bad/transparent, simply/hyper) and the two conductors built from it;
//! - [`series`] — truncated expansion series of the four kinds (R/S/L/F),
//!   exact finite summation, the partial-sum identity suite, and heuristic
//!   limit estimation from traces;
//! - [`clouds`] — constructions of expansion coefficients for a target
//!   function: canonical, Hildebrand, completely multiplicative clouds,
//!   opacity cores and their inverse, Euler products for expansion values,
//!   and the Selberg factorization of semi-multiplicative functions;
//! - [`lab`] — numerical experiments: limit recovery from dilated mixtures,
//!   a divergent coefficient family, square-free counting statistics and
//!   growth-exponent fits.

pub mod clouds;
pub mod coeff;
pub mod error;
pub mod lab;
pub mod ramsum;
pub mod scalar;
pub mod series;
pub mod sieve;
pub mod specgen;
pub mod tabulated;

pub use error::Error;
pub use scalar::{ExactC, Scalar};
pub use sieve::Sieve;

/// Crate version, embedded in CLI output documents.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable overriding the default sieve bound used by binaries.
pub const SIEVE_BOUND_ENV: &str = "RK_SIEVE_BOUND";

/// Default sieve bound when none is configured.
pub const DEFAULT_SIEVE_BOUND: u64 = 10_000_000;
