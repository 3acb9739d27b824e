//! Numerical experiments around convergence and divergence of the series.
//!
//! Everything here lives in the float regime: a fast zeta evaluator for
//! reference constants, square-free density statistics, partial sums of the
//! square-free Dirichlet series restricted to coprimality classes, the
//! two-prime coefficient whose expansion converges or diverges depending on
//! which residue classes the argument meets, and a contraction experiment
//! that recovers the limit of a hidden function from a dilated mixture.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::coeff::{CoefficientSpec, DefaultRule, PrimeEntry, TailRule};
use crate::error::{Error, Result};
use crate::series;
use crate::sieve::Sieve;

/// Riemann zeta via accelerated alternating-series summation
/// (Chebyshev-weighted, 48 terms): `ζ(s) = η(s) / (1 − 2^{1−s})` with
/// `η(s) = Σ (−1)^k (k+1)^{−s}`. Accurate to well below 1e-10 for the
/// moderate `s` used here; the pole at `s = 1` (and the other zeros of the
/// denominator on `Re s = 1`) are rejected.
pub fn zeta(s: Complex64) -> Result<Complex64> {
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-9 {
        return Err(Error::Precondition("zeta has a pole at s = 1".into()));
    }
    let denom = Complex64::new(1.0, 0.0) - (-(s - 1.0) * std::f64::consts::LN_2).exp();
    if denom.norm() < 1e-9 {
        return Err(Error::Precondition(
            "alternating-series route degenerates: 2^{1-s} = 1".into(),
        ));
    }
    let n = 48i64;
    let q = 3.0 + 8f64.sqrt();
    let d = (q.powi(n as i32) + q.powi(-(n as i32))) / 2.0;
    let mut b = -1.0f64;
    let mut c = -d;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..n {
        c = b - c;
        let a_k = (-s * ((k + 1) as f64).ln()).exp();
        acc += c * a_k;
        b *= ((k + n) as f64 * (k - n) as f64) / ((k as f64 + 0.5) * (k + 1) as f64);
    }
    Ok(acc / d / denom)
}

/// Square-free counting statistics up to `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquarefreeStats {
    pub x: u64,
    pub count: u64,
    /// `count / x`.
    pub ratio: f64,
    /// The density `6/π²` this ratio approaches.
    pub limit: f64,
    pub deviation: f64,
}

/// Count square-free integers up to `x` and compare against the density.
pub fn squarefree_stats(sieve: &Sieve, x: u64) -> Result<SquarefreeStats> {
    if x == 0 {
        return Err(Error::ZeroArgument);
    }
    let count = sieve.squarefree_count(x)?;
    let ratio = count as f64 / x as f64;
    let limit = 6.0 / (PI * PI);
    Ok(SquarefreeStats {
        x,
        count,
        ratio,
        limit,
        deviation: (ratio - limit).abs(),
    })
}

fn check_sf_exponent(s: Complex64) -> Result<()> {
    if s.re < 0.5 {
        return Err(Error::Precondition(format!(
            "square-free Dirichlet experiments need Re s >= 1/2, got {}",
            s.re
        )));
    }
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-9 {
        return Err(Error::Precondition(
            "s = 1 sits on the pole of the comparison term".into(),
        ));
    }
    Ok(())
}

/// Partial sum `Σ_{q <= x, (q,b) = 1} μ²(q) q^{-s}`.
pub fn squarefree_dirichlet_partial(
    sieve: &Sieve,
    s: Complex64,
    b: u64,
    x: u64,
) -> Result<Complex64> {
    if b == 0 {
        return Err(Error::ZeroArgument);
    }
    check_sf_exponent(s)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for q in 1..=x {
        if crate::sieve::gcd(q, b) != 1 || sieve.mobius(q)? == 0 {
            continue;
        }
        acc += (-s * (q as f64).ln()).exp();
    }
    Ok(acc)
}

/// Density constant of the square-free integers coprime to `b`:
/// `(6/π²) Π_{p | b} (1 + 1/p)^{-1}`.
pub fn squarefree_density_constant(sieve: &Sieve, b: u64) -> Result<f64> {
    if b == 0 {
        return Err(Error::ZeroArgument);
    }
    let mut c = 6.0 / (PI * PI);
    for (p, _) in sieve.factorize(b)?.factors {
        c /= 1.0 + 1.0 / p as f64;
    }
    Ok(c)
}

/// Euler-factor correction of the square-free Dirichlet series for the
/// coprimality constraint: `Π_{p | b} (1 + p^{-s})^{-1}`.
pub fn squarefree_dirichlet_constant(sieve: &Sieve, s: Complex64, b: u64) -> Result<Complex64> {
    if b == 0 {
        return Err(Error::ZeroArgument);
    }
    check_sf_exponent(s)?;
    let mut c = Complex64::new(1.0, 0.0);
    for (p, _) in sieve.factorize(b)?.factors {
        c /= Complex64::new(1.0, 0.0) + (-s * (p as f64).ln()).exp();
    }
    Ok(c)
}

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// The two-prime coefficient whose expansion behaviour depends on the
/// argument's residue classes: in the strip `1/2 <= Re s < 1`,
///
/// - `G(p1) = p1^{1-s}` with the zero tail,
/// - `G(p2^k) = (−p2^{-s})^k`,
/// - `G(p^k) = (−p^{-s})^k` at every other prime.
///
/// The expansion at arguments divisible by `p1` diverges like `x^{1-s}`,
/// while at arguments coprime to `p1` it converges.
pub fn counterexample_coefficient(
    s: Complex64,
    p1: u64,
    p2: u64,
) -> Result<CoefficientSpec<Complex64>> {
    if s.re < 0.5 || s.re >= 1.0 {
        return Err(Error::Precondition(format!(
            "the counterexample needs 1/2 <= Re s < 1, got {}",
            s.re
        )));
    }
    if p1 == p2 {
        return Err(Error::Precondition(
            "the two distinguished primes must differ".into(),
        ));
    }
    for &p in &[p1, p2] {
        if !is_prime_trial(p) {
            return Err(Error::NotPrime { n: p });
        }
    }
    let g_p1 = ((1.0 - s) * (p1 as f64).ln()).exp();
    let g_p2 = -(-s * (p2 as f64).ln()).exp();
    let mut entries = BTreeMap::new();
    entries.insert(
        p1,
        PrimeEntry {
            values: vec![g_p1],
            tail: TailRule::Zero,
        },
    );
    entries.insert(
        p2,
        PrimeEntry {
            values: vec![g_p2],
            tail: TailRule::Geometric { ratio: g_p2 },
        },
    );
    CoefficientSpec::new(entries, DefaultRule::PowerLaw { s, negated: true })
}

/// Growth exponent of a trace, requiring that the trace actually grows:
/// refuses (rather than fitting noise) when the final modulus does not
/// exceed the initial one.
pub fn growth_exponent(checkpoints: &[(f64, Complex64)]) -> Result<(f64, f64)> {
    let first = checkpoints.first().map(|c| c.1.norm()).unwrap_or(0.0);
    let last = checkpoints.last().map(|c| c.1.norm()).unwrap_or(0.0);
    if last <= first {
        return Err(Error::NotGrowing(format!(
            "trace modulus moves from {first:.6e} to {last:.6e}"
        )));
    }
    series::growth_exponent(checkpoints)
}

/// Recover the limit of a hidden function `H` from its dilated mixture
/// `K(x) = H(x) + α·H(x/ρ)`.
///
/// Two branches un-mix `K`:
/// - `|α| < 1`: `H(x) = Σ_{j>=0} (−α)^j K(x/ρ^j)` (backward dilation),
/// - `|α| > ρ`: `H(x) = Σ_{j>=1} (−1)^{j−1} α^{−j} K(x ρ^j)` (forward),
///
/// and `lim H = ℓ/(1+α)` when `lim K = ℓ`. The band `1 <= |α| <= ρ` is not
/// handled and is rejected. The experiment carries the hidden `H` so the
/// mixture can be synthesised and the recovery validated.
pub struct ContractionExperiment {
    alpha: Complex64,
    rho: f64,
    ell: Complex64,
    h: Box<dyn Fn(f64) -> Complex64>,
}

impl ContractionExperiment {
    /// `alpha` must stay away from −1 (the mixture destroys the limit
    /// there), `rho` must exceed 1, and `ell` is the claimed limit of the
    /// mixture `K`.
    pub fn new(
        alpha: Complex64,
        rho: f64,
        ell: Complex64,
        h: Box<dyn Fn(f64) -> Complex64>,
    ) -> Result<Self> {
        if (alpha + Complex64::new(1.0, 0.0)).norm() < 1e-9 {
            return Err(Error::Precondition(
                "alpha = -1 makes the mixture limit-blind".into(),
            ));
        }
        if !(rho > 1.0) {
            return Err(Error::Precondition(format!(
                "dilation factor must exceed 1, got {rho}"
            )));
        }
        Ok(ContractionExperiment {
            alpha,
            rho,
            ell,
            h,
        })
    }

    /// The observable mixture `K(x) = H(x) + α·H(x/ρ)`.
    pub fn combined(&self, x: f64) -> Complex64 {
        (self.h)(x) + self.alpha * (self.h)(x / self.rho)
    }

    /// The limit the recovery should land on: `ℓ/(1+α)`.
    pub fn expected_limit(&self) -> Complex64 {
        self.ell / (Complex64::new(1.0, 0.0) + self.alpha)
    }

    /// Recovered value of the hidden function at `x`, using only the
    /// mixture.
    pub fn recover(&self, x: f64) -> Result<Complex64> {
        if !(x > 0.0) {
            return Err(Error::ZeroArgument);
        }
        let a = self.alpha.norm();
        if a < 1.0 {
            // Truncate when the geometric weight is negligible (or the
            // argument has contracted to nothing).
            let mut acc = Complex64::new(0.0, 0.0);
            let mut w = Complex64::new(1.0, 0.0);
            let mut xj = x;
            for _ in 0..20_000 {
                acc += w * self.combined(xj);
                w *= -self.alpha;
                xj /= self.rho;
                if w.norm() < 1e-14 && xj < 1.0 {
                    break;
                }
                if w.norm() < 1e-16 {
                    break;
                }
            }
            Ok(acc)
        } else if a > self.rho {
            let steps = (14.0 * std::f64::consts::LN_10 / a.ln()).ceil() as usize + 1;
            let mut acc = Complex64::new(0.0, 0.0);
            let mut w = Complex64::new(1.0, 0.0);
            let mut xj = x;
            for _ in 0..steps {
                w /= -self.alpha;
                xj *= self.rho;
                acc -= w * self.combined(xj);
            }
            Ok(acc)
        } else {
            Err(Error::UnsupportedBranch {
                alpha_abs: a,
                rho: self.rho,
            })
        }
    }

    /// Recovered trace over a schedule of evaluation points.
    pub fn run(&self, xs: &[f64]) -> Result<Vec<(f64, Complex64)>> {
        xs.iter().map(|&x| Ok((x, self.recover(x)?))).collect()
    }
}
