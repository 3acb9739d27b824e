//! Smallest-prime-factor sieve and elementary arithmetic functions.
//!
//! A [`Sieve`] stores, for every integer up to its bound, the smallest prime
//! dividing it. Factorization is then a walk down that table, and μ, φ, rad
//! and the divisor list all derive from the factorization. The sieve is built
//! once and only read afterwards, so sharing a reference across computations
//! is cheap and safe.

use crate::error::{Error, Result};

/// Prime factorization of a positive integer as `(prime, exponent)` pairs in
/// increasing prime order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    /// The factored integer.
    pub n: u64,
    /// `(p, e)` with `e >= 1`, primes strictly increasing.
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Number of distinct prime factors (little omega).
    pub fn omega(&self) -> usize {
        self.factors.len()
    }

    /// Exponent of `p` in `n` (zero when `p` does not divide `n`).
    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }
}

/// Linear sieve of smallest prime factors up to a fixed bound.
pub struct Sieve {
    bound: u64,
    // spf[n] = smallest prime factor of n (spf[0] = spf[1] = 0).
    spf: Vec<u32>,
    primes: Vec<u64>,
}

impl Sieve {
    /// Build the sieve for arguments `1..=bound`.
    ///
    /// Uses the linear (Euler) sieve: every composite is crossed off exactly
    /// once by its smallest prime factor.
    pub fn new(bound: u64) -> Sieve {
        let bound = bound.max(1);
        assert!(bound <= u32::MAX as u64, "sieve bound must fit in u32");
        let n = bound as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u64> = Vec::new();
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u64);
            }
            let si = spf[i] as usize;
            for &p in &primes {
                let p = p as usize;
                if p > si || p * i > n {
                    break;
                }
                spf[p * i] = p as u32;
            }
        }
        Sieve { bound, spf, primes }
    }

    /// Inclusive upper bound of the sieve.
    pub fn bound(&self) -> u64 {
        self.bound
    }

    /// All primes up to the bound, increasing.
    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    fn check(&self, n: u64) -> Result<()> {
        if n == 0 {
            return Err(Error::ZeroArgument);
        }
        if n > self.bound {
            return Err(Error::SieveBound {
                n,
                bound: self.bound,
            });
        }
        Ok(())
    }

    /// Smallest prime factor of `n >= 2`.
    pub fn smallest_prime_factor(&self, n: u64) -> Result<u64> {
        self.check(n)?;
        if n < 2 {
            return Err(Error::Precondition("smallest prime factor needs n >= 2".into()));
        }
        Ok(self.spf[n as usize] as u64)
    }

    /// True when `n` is prime.
    pub fn is_prime(&self, n: u64) -> bool {
        n >= 2 && n <= self.bound && self.spf[n as usize] as u64 == n
    }

    /// Full factorization of `n`.
    pub fn factorize(&self, n: u64) -> Result<Factorization> {
        self.check(n)?;
        let mut m = n as usize;
        let mut factors = Vec::new();
        while m > 1 {
            let p = self.spf[m] as u64;
            let mut e = 0u32;
            while m > 1 && self.spf[m] as u64 == p {
                m /= p as usize;
                e += 1;
            }
            factors.push((p, e));
        }
        Ok(Factorization { n, factors })
    }

    /// Möbius function μ(n) ∈ {-1, 0, 1}.
    pub fn mobius(&self, n: u64) -> Result<i64> {
        self.check(n)?;
        let mut m = n as usize;
        let mut sign = 1i64;
        while m > 1 {
            let p = self.spf[m] as usize;
            m /= p;
            if m % p == 0 {
                return Ok(0);
            }
            sign = -sign;
        }
        Ok(sign)
    }

    /// Euler totient φ(n).
    pub fn euler_phi(&self, n: u64) -> Result<u64> {
        let f = self.factorize(n)?;
        let mut out = 1u64;
        for (p, e) in f.factors {
            out *= (p - 1) * p.pow(e - 1);
        }
        Ok(out)
    }

    /// Radical rad(n): product of the distinct primes dividing n; rad(1) = 1.
    pub fn radical(&self, n: u64) -> Result<u64> {
        let f = self.factorize(n)?;
        Ok(f.factors.iter().map(|&(p, _)| p).product())
    }

    /// p-adic valuation v_p(n) for prime `p`.
    pub fn valuation(&self, p: u64, n: u64) -> Result<u32> {
        if !self.is_prime(p) {
            return Err(Error::NotPrime { n: p });
        }
        self.check(n)?;
        let mut m = n;
        let mut v = 0;
        while m % p == 0 {
            m /= p;
            v += 1;
        }
        Ok(v)
    }

    /// All positive divisors of `n`, sorted increasing.
    pub fn divisors(&self, n: u64) -> Result<Vec<u64>> {
        let f = self.factorize(n)?;
        let mut out = vec![1u64];
        for (p, e) in f.factors {
            let prev = out.clone();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                out.extend(prev.iter().map(|d| d * pk));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Count of square-free integers in `1..=x`.
    pub fn squarefree_count(&self, x: u64) -> Result<u64> {
        self.check(x.max(1))?;
        let mut count = 0u64;
        for n in 1..=x {
            if self.mobius(n)? != 0 {
                count += 1;
            }
        }
        Ok(count)
    }
}

/// Greatest common divisor.
pub fn gcd(a: u64, b: u64) -> u64 {
    num_integer::gcd(a, b)
}

/// Sieve bound configured through the environment, falling back to the
/// crate default. Used by binaries; library callers pick their own bound.
pub fn configured_bound() -> u64 {
    std::env::var(crate::SIEVE_BOUND_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(crate::DEFAULT_SIEVE_BOUND)
}
