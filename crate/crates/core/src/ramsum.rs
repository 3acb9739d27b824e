//! Ramanujan sums `c_q(a)` and their structural properties.
//!
//! The default evaluation path is the totient/Möbius closed form
//! `c_q(a) = φ(q) · μ(q/(q,a)) / φ(q/(q,a))`, which needs one gcd and two
//! factorizations. The divisor-sum form `c_q(a) = Σ_{d | (q,a)} d · μ(q/d)`
//! is kept as an independent cross-check route.

use crate::error::{Error, Result};
use crate::sieve::{gcd, Sieve};

/// `c_q(a)` via the totient/Möbius closed form (default path).
pub fn ramanujan_sum(sieve: &Sieve, q: u64, a: u64) -> Result<i64> {
    if q == 0 || a == 0 {
        return Err(Error::ZeroArgument);
    }
    let g = gcd(q, a);
    let m = q / g;
    let mu = sieve.mobius(m)?;
    if mu == 0 {
        return Ok(0);
    }
    let phi_q = sieve.euler_phi(q)? as i64;
    let phi_m = sieve.euler_phi(m)? as i64;
    // φ(m) divides φ(q) whenever m divides q, so this division is exact.
    Ok(mu * (phi_q / phi_m))
}

/// `c_q(a)` via the divisor sum over `(q, a)` (cross-check path).
pub fn ramanujan_sum_divisor_form(sieve: &Sieve, q: u64, a: u64) -> Result<i64> {
    if q == 0 || a == 0 {
        return Err(Error::ZeroArgument);
    }
    let g = gcd(q, a);
    let mut sum = 0i64;
    for d in sieve.divisors(g)? {
        sum += d as i64 * sieve.mobius(q / d)?;
    }
    Ok(sum)
}

/// `c_{p^e}(a)` for prime `p`, given only `v = v_p(a)`.
///
/// This avoids factorizing the (possibly huge) modulus: the value depends on
/// `p`, `e` and `v` alone, and vanishes as soon as `e > v + 1`.
pub fn ramanujan_sum_prime_power(p: u64, e: u32, v_p_a: u32) -> i64 {
    if e == 0 {
        return 1;
    }
    if e <= v_p_a {
        // Full totient: φ(p^e).
        let pe1 = p.pow(e - 1) as i64;
        pe1 * (p as i64 - 1)
    } else if e == v_p_a + 1 {
        -(p.pow(e - 1) as i64)
    } else {
        0
    }
}

/// Smallest exponent bound witnessing the vertical vanishing of `c_{p^K}(a)`:
/// returns `v_p(a) + 1`, the largest `K` with `c_{p^K}(a)` possibly nonzero;
/// every `K` strictly beyond it gives zero.
pub fn vertical_limit_bound(sieve: &Sieve, p: u64, a: u64) -> Result<u32> {
    Ok(sieve.valuation(p, a)? + 1)
}

/// Dense table of `c_q(a)` for `1 <= q <= q_max`, `1 <= a <= a_max`,
/// row-major in `q`.
pub struct RamanujanSumTable {
    pub q_max: u64,
    pub a_max: u64,
    values: Vec<i64>,
}

impl RamanujanSumTable {
    pub fn new(sieve: &Sieve, q_max: u64, a_max: u64) -> Result<Self> {
        let mut values = Vec::with_capacity((q_max * a_max) as usize);
        for q in 1..=q_max {
            for a in 1..=a_max {
                values.push(ramanujan_sum(sieve, q, a)?);
            }
        }
        Ok(RamanujanSumTable {
            q_max,
            a_max,
            values,
        })
    }

    pub fn get(&self, q: u64, a: u64) -> Result<i64> {
        if q == 0 || a == 0 {
            return Err(Error::ZeroArgument);
        }
        if q > self.q_max || a > self.a_max {
            return Err(Error::OutOfRange {
                n: q.max(a),
                max: self.q_max.max(self.a_max),
            });
        }
        Ok(self.values[((q - 1) * self.a_max + (a - 1)) as usize])
    }
}
