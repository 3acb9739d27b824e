//! Dense tabulations of arithmetic functions and Dirichlet convolution.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sieve::Sieve;

/// Values of an arithmetic function on `1..=a_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction<S> {
    values: Vec<S>, // values[i] = f(i + 1)
}

impl<S: Scalar> TabulatedFunction<S> {
    /// Tabulate `f` on `1..=a_max`.
    pub fn from_fn(a_max: u64, mut f: impl FnMut(u64) -> S) -> Self {
        let values = (1..=a_max).map(|n| f(n)).collect();
        TabulatedFunction { values }
    }

    /// Wrap an explicit value vector (`values[0]` is the value at 1).
    pub fn from_values(values: Vec<S>) -> Self {
        TabulatedFunction { values }
    }

    /// Largest tabulated argument.
    pub fn a_max(&self) -> u64 {
        self.values.len() as u64
    }

    /// Value at `n`; arguments beyond the tabulation are a domain error.
    pub fn get(&self, n: u64) -> Result<&S> {
        if n == 0 {
            return Err(Error::ZeroArgument);
        }
        self.values.get(n as usize - 1).ok_or(Error::OutOfRange {
            n,
            max: self.a_max(),
        })
    }

    /// Dirichlet convolution `(self * other)(n) = Σ_{d|n} self(d) · other(n/d)`,
    /// tabulated on the common domain.
    pub fn dirichlet_convolve(&self, other: &Self) -> Self {
        let n = self.values.len().min(other.values.len());
        let mut out = vec![S::zero(); n];
        for d in 1..=n {
            for k in 1..=(n / d) {
                let t = self.values[d - 1].clone() * other.values[k - 1].clone();
                out[d * k - 1] = out[d * k - 1].clone() + t;
            }
        }
        TabulatedFunction { values: out }
    }

    /// Möbius (Eratosthenes) transform `f' = f * μ`.
    pub fn eratosthenes_transform(&self, sieve: &Sieve) -> Result<Self> {
        let mu = mobius_tabulation(sieve, self.a_max())?;
        Ok(self.dirichlet_convolve(&mu))
    }

    /// Inverse transform `f = f' * 1`.
    pub fn eratosthenes_inverse(&self) -> Self {
        let one = TabulatedFunction::from_fn(self.a_max(), |_| S::one());
        self.dirichlet_convolve(&one)
    }

    /// Check multiplicativity on the domain: `f(1) = 1` and
    /// `f(mn) = f(m) f(n)` for every coprime pair with `mn <= a_max`.
    /// Returns the first violating pair, if any.
    pub fn multiplicativity_witness(&self, sieve: &Sieve, tol: f64) -> Result<Option<(u64, u64)>> {
        if !self.get(1)?.close_to(&S::one(), tol) {
            return Ok(Some((1, 1)));
        }
        let a_max = self.a_max();
        for m in 2..=a_max {
            for n in m..=(a_max / m) {
                if crate::sieve::gcd(m, n) != 1 {
                    continue;
                }
                let lhs = self.get(m * n)?.clone();
                let rhs = self.get(m)?.clone() * self.get(n)?.clone();
                if !lhs.close_to(&rhs, tol) {
                    return Ok(Some((m, n)));
                }
            }
        }
        let _ = sieve;
        Ok(None)
    }
}

/// μ tabulated on `1..=a_max`.
pub fn mobius_tabulation<S: Scalar>(sieve: &Sieve, a_max: u64) -> Result<TabulatedFunction<S>> {
    let mut values = Vec::with_capacity(a_max as usize);
    for n in 1..=a_max {
        values.push(S::from_i64(sieve.mobius(n)?));
    }
    Ok(TabulatedFunction { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactC;

    /// Brute-force convolution oracle.
    fn convolve_oracle(f: &[i64], g: &[i64], n: u64) -> i64 {
        (1..=n)
            .filter(|d| n % d == 0)
            .map(|d| f[d as usize - 1] * g[(n / d) as usize - 1])
            .sum()
    }

    #[test]
    fn convolution_matches_brute_force() {
        let a_max = 200u64;
        let f_raw: Vec<i64> = (1..=a_max as i64).map(|n| n % 7 - 3).collect();
        let g_raw: Vec<i64> = (1..=a_max as i64).map(|n| (n * n) % 5 - 2).collect();
        let f = TabulatedFunction::from_fn(a_max, |n| ExactC::from_i64(f_raw[n as usize - 1]));
        let g = TabulatedFunction::from_fn(a_max, |n| ExactC::from_i64(g_raw[n as usize - 1]));
        let h = f.dirichlet_convolve(&g);
        for n in 1..=a_max {
            assert_eq!(
                *h.get(n).unwrap(),
                ExactC::from_i64(convolve_oracle(&f_raw, &g_raw, n))
            );
        }
    }

    #[test]
    fn transform_round_trip() {
        let sieve = Sieve::new(2000);
        // f(n) = n is multiplicative; the transform of the identity is φ.
        let f = TabulatedFunction::from_fn(1000, |n| ExactC::from_u64(n));
        let fp = f.eratosthenes_transform(&sieve).unwrap();
        for n in 1..=1000 {
            assert_eq!(
                *fp.get(n).unwrap(),
                ExactC::from_u64(sieve.euler_phi(n).unwrap()),
                "n={n}"
            );
        }
        let back = fp.eratosthenes_inverse();
        assert_eq!(back, f);
    }

    #[test]
    fn multiplicativity_check() {
        let sieve = Sieve::new(1000);
        let phi = TabulatedFunction::from_fn(300, |n| ExactC::from_u64(sieve.euler_phi(n).unwrap()));
        assert_eq!(phi.multiplicativity_witness(&sieve, 0.0).unwrap(), None);
        let not_mult = TabulatedFunction::from_fn(50, |n| ExactC::from_u64(n + 1));
        assert!(not_mult
            .multiplicativity_witness(&sieve, 0.0)
            .unwrap()
            .is_some());
    }
}
