//! Symbolic coefficient specifications and their arithmetic structure.
//!
//! A multiplicative coefficient `G` is described by finitely many explicit
//! values at prime powers plus symbolic rules: a [`TailRule`] for higher
//! powers of each listed prime and a [`DefaultRule`] for every unlisted
//! prime. Because the rules are symbolic, the two stability indices of a
//! prime — how long `G` stays completely multiplicative along `p`
//! ([`CoefficientSpec::cm_index`]) and how long it stays equal to 1
//! ([`CoefficientSpec::transparency_index`]) — are decided exactly, not by
//! scanning a finite prefix.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, CLASSIFY_TOL};
use crate::sieve::Sieve;

/// Behaviour of `G(p^k)` beyond the explicitly listed values at `p`.
#[derive(Debug, Clone, PartialEq)]
pub enum TailRule<S> {
    /// `G(p^k) = 0` past the listed values.
    Zero,
    /// `G(p^k)` continues geometrically from the last listed value.
    Geometric { ratio: S },
    /// `G(p^k) = 1` past the listed values.
    One,
}

/// Behaviour of `G` at primes with no explicit entry.
#[derive(Debug, Clone, PartialEq)]
pub enum DefaultRule<S> {
    /// `G(p^k) = 0` for all `k >= 1` (finite-support coefficients).
    ZeroOnPrimes,
    /// `G(p^k) = (±1)^k p^{-ks}`, i.e. completely multiplicative with
    /// `G(p) = ±p^{-s}`; requires `Re s > 0`.
    PowerLaw { s: S, negated: bool },
    /// `G = 1` everywhere (the coefficient of the constant expansion).
    OneEverywhere,
}

/// Explicit values at powers of one prime plus a tail rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeEntry<S> {
    /// `values[k-1] = G(p^k)`; must be non-empty.
    pub values: Vec<S>,
    pub tail: TailRule<S>,
}

/// Symbolic description of a multiplicative coefficient `G` (with `G(1) = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSpec<S> {
    entries: BTreeMap<u64, PrimeEntry<S>>,
    default_rule: DefaultRule<S>,
}

/// A possibly infinite stability index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Index {
    Finite(u32),
    Infinite,
}

impl Index {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Index::Infinite)
    }
    pub fn finite(&self) -> Option<u32> {
        match self {
            Index::Finite(k) => Some(*k),
            Index::Infinite => None,
        }
    }
}

/// Classification of one prime relative to a coefficient.
///
/// "Bad" means `1 <= |G(p)| <= p`; "transparent" means `G(p) = 1` (a special
/// case of bad); "hyper" versus "simply" records whether the complete
/// multiplicativity of `G` along `p` persists forever or breaks at a finite
/// power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimeClass {
    NotBad,
    SimplyBadOpaque,
    HyperBadOpaque,
    SimplyTransparent,
    HyperTransparent,
}

/// Full classification report for one prime.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimeClassification {
    pub p: u64,
    /// Complete-multiplicativity index `w`: largest `w` with
    /// `G(p^k) = G(p)^k` for all `k <= w`.
    pub w: Index,
    /// Transparency index `v`: smallest `K >= 0` with `G(p^{K+1}) != 1`.
    pub v: Index,
    pub class: PrimeClass,
}

impl PrimeClassification {
    pub fn is_bad(&self) -> bool {
        self.class != PrimeClass::NotBad
    }
    pub fn is_transparent(&self) -> bool {
        matches!(
            self.class,
            PrimeClass::SimplyTransparent | PrimeClass::HyperTransparent
        )
    }
    pub fn is_simply_bad(&self) -> bool {
        matches!(
            self.class,
            PrimeClass::SimplyBadOpaque | PrimeClass::SimplyTransparent
        )
    }
    pub fn is_hyper_bad(&self) -> bool {
        matches!(
            self.class,
            PrimeClass::HyperBadOpaque | PrimeClass::HyperTransparent
        )
    }
}

/// The two conductors of a coefficient, together with the per-prime reports
/// they were built from (listed primes only; unlisted primes can never be
/// simply bad under any default rule).
#[derive(Debug, Clone)]
pub struct Conductors {
    /// Product of `p^w` over simply bad primes.
    pub n: u64,
    /// Product of `p^v` over simply transparent primes; always divides `n`.
    pub n_t: u64,
    pub classifications: Vec<PrimeClassification>,
}

fn is_prime_u64(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl<S: Scalar> CoefficientSpec<S> {
    /// Build and validate a specification.
    pub fn new(
        entries: BTreeMap<u64, PrimeEntry<S>>,
        default_rule: DefaultRule<S>,
    ) -> Result<Self> {
        for (&p, e) in &entries {
            if !is_prime_u64(p) {
                return Err(Error::NotPrime { n: p });
            }
            if e.values.is_empty() {
                return Err(Error::Precondition(format!(
                    "entry for prime {p} lists no values"
                )));
            }
        }
        if let DefaultRule::PowerLaw { s, .. } = &default_rule {
            if !(s.re_f64() > 0.0) {
                return Err(Error::Precondition(
                    "power-law default requires Re s > 0".into(),
                ));
            }
        }
        Ok(CoefficientSpec {
            entries,
            default_rule,
        })
    }

    /// Convenience constructor from `(prime, entry)` pairs.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (u64, PrimeEntry<S>)>,
        default_rule: DefaultRule<S>,
    ) -> Result<Self> {
        Self::new(entries.into_iter().collect(), default_rule)
    }

    pub fn default_rule(&self) -> &DefaultRule<S> {
        &self.default_rule
    }

    pub fn entry(&self, p: u64) -> Option<&PrimeEntry<S>> {
        self.entries.get(&p)
    }

    /// Primes with explicit entries, increasing.
    pub fn listed_primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.keys().copied()
    }

    /// `G(p^k)`; `k = 0` gives 1.
    pub fn prime_power(&self, p: u64, k: u32) -> Result<S> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime { n: p });
        }
        if k == 0 {
            return Ok(S::one());
        }
        match self.entries.get(&p) {
            Some(e) => {
                let len = e.values.len() as u32;
                if k <= len {
                    Ok(e.values[k as usize - 1].clone())
                } else {
                    match &e.tail {
                        TailRule::Zero => Ok(S::zero()),
                        TailRule::One => Ok(S::one()),
                        TailRule::Geometric { ratio } => {
                            Ok(e.values[len as usize - 1].clone() * ratio.powu(k - len))
                        }
                    }
                }
            }
            None => match &self.default_rule {
                DefaultRule::ZeroOnPrimes => Ok(S::zero()),
                DefaultRule::OneEverywhere => Ok(S::one()),
                DefaultRule::PowerLaw { s, negated } => {
                    let v = S::prime_power_neg(p, k, s)?;
                    Ok(if *negated && k % 2 == 1 { -v } else { v })
                }
            },
        }
    }

    /// `G(n)` by multiplicativity over the factorization of `n`.
    pub fn value_at(&self, sieve: &Sieve, n: u64) -> Result<S> {
        let f = sieve.factorize(n)?;
        let mut out = S::one();
        for (p, e) in f.factors {
            let v = self.prime_power(p, e)?;
            if v.is_zero() {
                return Ok(S::zero());
            }
            out = out * v;
        }
        Ok(out)
    }

    fn is_one(v: &S) -> bool {
        v.close_to(&S::one(), CLASSIFY_TOL)
    }

    /// Complete-multiplicativity index `w` of `G` along `p`:
    /// the largest `w >= 1` with `G(p^k) = G(p)^k` for all `k <= w`
    /// (infinite when this never breaks).
    pub fn cm_index(&self, p: u64) -> Result<Index> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime { n: p });
        }
        let Some(e) = self.entries.get(&p) else {
            // Every default rule is completely multiplicative along p.
            return Ok(Index::Infinite);
        };
        let g1 = e.values[0].clone();
        let len = e.values.len() as u32;
        let mut pow = g1.clone();
        for k in 2..=len {
            pow = pow * g1.clone();
            if !e.values[k as usize - 1].close_to(&pow, CLASSIFY_TOL) {
                return Ok(Index::Finite(k - 1));
            }
        }
        // The listed values are consistent; the tail decides.
        let g_last = e.values[len as usize - 1].clone();
        match &e.tail {
            TailRule::Zero => {
                if g1.is_zero() {
                    Ok(Index::Infinite)
                } else {
                    Ok(Index::Finite(len))
                }
            }
            TailRule::One => {
                if Self::is_one(&g1) {
                    Ok(Index::Infinite)
                } else {
                    Ok(Index::Finite(len))
                }
            }
            TailRule::Geometric { ratio } => {
                if g_last.is_zero() {
                    // Tail is identically zero from here on.
                    if g1.is_zero() {
                        Ok(Index::Infinite)
                    } else {
                        Ok(Index::Finite(len))
                    }
                } else if ratio.close_to(&g1, CLASSIFY_TOL) {
                    Ok(Index::Infinite)
                } else {
                    Ok(Index::Finite(len))
                }
            }
        }
    }

    /// Transparency index `v` of `G` along `p`: the smallest `K >= 0` with
    /// `G(p^{K+1}) != 1` (infinite when `G` is 1 on all powers of `p`).
    pub fn transparency_index(&self, p: u64) -> Result<Index> {
        if !is_prime_u64(p) {
            return Err(Error::NotPrime { n: p });
        }
        let Some(e) = self.entries.get(&p) else {
            return Ok(match &self.default_rule {
                DefaultRule::OneEverywhere => Index::Infinite,
                // Zero and power-law defaults give G(p) != 1 (|G(p)| < 1).
                _ => Index::Finite(0),
            });
        };
        let len = e.values.len() as u32;
        for k in 1..=len {
            if !Self::is_one(&e.values[k as usize - 1]) {
                return Ok(Index::Finite(k - 1));
            }
        }
        match &e.tail {
            TailRule::Zero => Ok(Index::Finite(len)),
            TailRule::One => Ok(Index::Infinite),
            TailRule::Geometric { ratio } => {
                if Self::is_one(ratio) {
                    Ok(Index::Infinite)
                } else {
                    Ok(Index::Finite(len))
                }
            }
        }
    }

    /// Classify one prime: bad/transparent and simply/hyper.
    pub fn classify_prime(&self, p: u64) -> Result<PrimeClassification> {
        let g1 = self.prime_power(p, 1)?;
        let w = self.cm_index(p)?;
        let v = self.transparency_index(p)?;
        let bad = modulus_between_one_and(&g1, p);
        let transparent = Self::is_one(&g1);
        let class = if !bad {
            PrimeClass::NotBad
        } else if transparent {
            if w.is_infinite() {
                PrimeClass::HyperTransparent
            } else {
                PrimeClass::SimplyTransparent
            }
        } else if w.is_infinite() {
            PrimeClass::HyperBadOpaque
        } else {
            PrimeClass::SimplyBadOpaque
        };
        Ok(PrimeClassification { p, w, v, class })
    }

    /// Both conductors. Only listed primes can contribute: under every
    /// default rule an unlisted prime is either not bad or hyper bad.
    pub fn conductors(&self) -> Result<Conductors> {
        let mut n: u64 = 1;
        let mut n_t: u64 = 1;
        let mut classifications = Vec::new();
        for p in self.listed_primes().collect::<Vec<_>>() {
            let c = self.classify_prime(p)?;
            if c.is_simply_bad() {
                let w = c.w.finite().expect("simply bad has finite w");
                let pw = p
                    .checked_pow(w)
                    .ok_or(Error::Overflow("conductor prime power"))?;
                n = n.checked_mul(pw).ok_or(Error::Overflow("conductor"))?;
                if c.class == PrimeClass::SimplyTransparent {
                    let v = c.v.finite().expect("simply transparent has finite v");
                    let pv = p
                        .checked_pow(v)
                        .ok_or(Error::Overflow("transparency conductor prime power"))?;
                    n_t = n_t
                        .checked_mul(pv)
                        .ok_or(Error::Overflow("transparency conductor"))?;
                }
            }
            classifications.push(c);
        }
        debug_assert_eq!(n % n_t, 0, "transparency conductor must divide the conductor");
        Ok(Conductors {
            n,
            n_t,
            classifications,
        })
    }
}

/// `1 <= |v| <= bound`, decided exactly in the exact regime and at the
/// classification tolerance in the float regime.
fn modulus_between_one_and<S: Scalar>(v: &S, bound: u64) -> bool {
    v.modulus_in_unit_band(bound)
}

// ---------------------------------------------------------------------------
// Finite factors: the four multiplicative weights attached to an argument.
// ---------------------------------------------------------------------------

/// Local Euler factor at `p`:
/// `Σ_{K=0}^{v_p(a)} p^K (G(p^K) − G(p^{K+1}))`.
pub fn euler_factor_at_prime<S: Scalar>(
    g: &CoefficientSpec<S>,
    p: u64,
    v_p_a: u32,
) -> Result<S> {
    let mut sum = S::zero();
    for k in 0..=v_p_a {
        let diff = g.prime_power(p, k)? - g.prime_power(p, k + 1)?;
        sum = sum + S::from_u64(p.pow(k)) * diff;
    }
    Ok(sum)
}

/// Euler factor `E_G(a) = Π_{p|a} E_{p,G}(a)` (empty product 1).
pub fn euler_factor<S: Scalar>(g: &CoefficientSpec<S>, sieve: &Sieve, a: u64) -> Result<S> {
    let f = sieve.factorize(a)?;
    let mut out = S::one();
    for (p, e) in f.factors {
        out = out * euler_factor_at_prime(g, p, e)?;
    }
    Ok(out)
}

/// Cross-check route for the local Euler factor: the truncated vertical
/// series `Σ_{K=0}^{v_p(a)+1} G(p^K) c_{p^K}(a)`; adding further terms
/// changes nothing because the Ramanujan sums vanish beyond the bound.
pub fn euler_factor_at_prime_series_form<S: Scalar>(
    g: &CoefficientSpec<S>,
    p: u64,
    v_p_a: u32,
) -> Result<S> {
    let mut sum = S::zero();
    for k in 0..=(v_p_a + 1) {
        let c = crate::ramsum::ramanujan_sum_prime_power(p, k, v_p_a);
        sum = sum + g.prime_power(p, k)? * S::from_i64(c);
    }
    Ok(sum)
}

/// Cross-check route for the Euler factor: `Σ_{d | a·rad a} G(d) c_d(a)`.
pub fn euler_factor_divisor_form<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
) -> Result<S> {
    let rad = sieve.radical(a)?;
    let m = a
        .checked_mul(rad)
        .ok_or(Error::Overflow("a * rad(a)"))?;
    let mut sum = S::zero();
    for d in sieve.divisors(m)? {
        let c = crate::ramsum::ramanujan_sum(sieve, d, a)?;
        sum = sum + g.value_at(sieve, d)? * S::from_i64(c);
    }
    Ok(sum)
}

/// Local tail difference at `p`: `G(p^{v_p(a)}) − G(p^{v_p(a)+1})`.
pub fn tail_difference_at_prime<S: Scalar>(
    g: &CoefficientSpec<S>,
    p: u64,
    v_p_a: u32,
) -> Result<S> {
    Ok(g.prime_power(p, v_p_a)? - g.prime_power(p, v_p_a + 1)?)
}

/// Tail difference `U_G(a) = Π_{p|a} (G(p^{v_p(a)}) − G(p^{v_p(a)+1}))`.
pub fn tail_difference<S: Scalar>(g: &CoefficientSpec<S>, sieve: &Sieve, a: u64) -> Result<S> {
    let f = sieve.factorize(a)?;
    let mut out = S::one();
    for (p, e) in f.factors {
        out = out * tail_difference_at_prime(g, p, e)?;
    }
    Ok(out)
}

/// Cross-check route: `U_G(a) = Σ_{d|a} μ(d) G(d·a)`.
pub fn tail_difference_divisor_form<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
) -> Result<S> {
    let mut sum = S::zero();
    for d in sieve.divisors(a)? {
        let mu = sieve.mobius(d)?;
        if mu == 0 {
            continue;
        }
        let da = d.checked_mul(a).ok_or(Error::Overflow("d * a"))?;
        sum = sum + S::from_i64(mu) * g.value_at(sieve, da)?;
    }
    Ok(sum)
}

/// Square-free correlation weight `C_G(a) = Π_{p|a} (1 − G(p))`.
pub fn correlation_weight<S: Scalar>(g: &CoefficientSpec<S>, sieve: &Sieve, a: u64) -> Result<S> {
    let f = sieve.factorize(a)?;
    let mut out = S::one();
    for (p, _) in f.factors {
        out = out * (S::one() - g.prime_power(p, 1)?);
    }
    Ok(out)
}

/// Cross-check route: `C_G(a) = Σ_{d|a} G(d) μ(d)`.
pub fn correlation_weight_divisor_form<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
) -> Result<S> {
    let mut sum = S::zero();
    for d in sieve.divisors(a)? {
        let mu = sieve.mobius(d)?;
        if mu == 0 {
            continue;
        }
        sum = sum + S::from_i64(mu) * g.value_at(sieve, d)?;
    }
    Ok(sum)
}

/// Divisor-weighted sum `D_G(a) = Σ_{d|a} G(d) · d`.
pub fn divisor_weighted_sum<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
) -> Result<S> {
    let mut sum = S::zero();
    for d in sieve.divisors(a)? {
        sum = sum + g.value_at(sieve, d)? * S::from_u64(d);
    }
    Ok(sum)
}

// ---------------------------------------------------------------------------
// The multiplicative splitting of an argument induced by the classification.
// ---------------------------------------------------------------------------

/// Splitting `a = hyper · transparent · plain` along the prime classes of `G`:
/// hyper collects the hyper bad primes of `a`, transparent the simply
/// transparent ones, plain the rest. Each part keeps the full multiplicity
/// of its primes, so the three parts are pairwise coprime and multiply to `a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArgumentSplit {
    pub hyper: u64,
    pub transparent: u64,
    pub plain: u64,
}

/// Split an argument along the prime classification of `G`.
pub fn argument_split<S: Scalar>(
    g: &CoefficientSpec<S>,
    sieve: &Sieve,
    a: u64,
) -> Result<ArgumentSplit> {
    let f = sieve.factorize(a)?;
    let mut hyper = 1u64;
    let mut transparent = 1u64;
    let mut plain = 1u64;
    for (p, e) in f.factors {
        let c = g.classify_prime(p)?;
        let pe = p.pow(e);
        if c.is_hyper_bad() {
            hyper *= pe;
        } else if c.class == PrimeClass::SimplyTransparent {
            transparent *= pe;
        } else {
            plain *= pe;
        }
    }
    Ok(ArgumentSplit {
        hyper,
        transparent,
        plain,
    })
}

// ---------------------------------------------------------------------------
// JSON document form (float-valued wire format).
// ---------------------------------------------------------------------------

/// Wire form of a tail rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailDoc {
    Zero,
    Geometric { ratio: [f64; 2] },
    One,
}

/// Wire form of a default rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DefaultDoc {
    ZeroOnPrimes,
    PowerLaw {
        s: [f64; 2],
        #[serde(default)]
        negated: bool,
    },
    OneEverywhere,
}

/// Wire form of one prime's entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrimeDoc {
    pub values: Vec<[f64; 2]>,
    pub tail: TailDoc,
}

/// JSON document form of a [`CoefficientSpec`]: a default rule plus a map
/// from decimal prime strings to entries; values are `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecDoc {
    pub default: DefaultDoc,
    pub primes: BTreeMap<String, PrimeDoc>,
}

impl SpecDoc {
    /// Materialise the document in a scalar regime. Exact instantiations
    /// convert each float bit pattern to the rational it denotes.
    pub fn to_spec<S: Scalar>(&self) -> Result<CoefficientSpec<S>> {
        let conv = |[re, im]: [f64; 2]| S::from_c64(Complex64::new(re, im));
        let mut entries = BTreeMap::new();
        for (key, doc) in &self.primes {
            let p: u64 = key
                .parse()
                .map_err(|_| Error::Precondition(format!("prime key {key:?} is not an integer")))?;
            let tail = match &doc.tail {
                TailDoc::Zero => TailRule::Zero,
                TailDoc::One => TailRule::One,
                TailDoc::Geometric { ratio } => TailRule::Geometric {
                    ratio: conv(*ratio),
                },
            };
            entries.insert(
                p,
                PrimeEntry {
                    values: doc.values.iter().map(|v| conv(*v)).collect(),
                    tail,
                },
            );
        }
        let default_rule = match &self.default {
            DefaultDoc::ZeroOnPrimes => DefaultRule::ZeroOnPrimes,
            DefaultDoc::OneEverywhere => DefaultRule::OneEverywhere,
            DefaultDoc::PowerLaw { s, negated } => DefaultRule::PowerLaw {
                s: conv(*s),
                negated: *negated,
            },
        };
        CoefficientSpec::new(entries, default_rule)
    }

    /// Lossy (f64) document form of a spec.
    pub fn from_spec<S: Scalar>(spec: &CoefficientSpec<S>) -> SpecDoc {
        let conv = |v: &S| {
            let z = v.to_c64();
            [z.re, z.im]
        };
        let primes = spec
            .entries
            .iter()
            .map(|(&p, e)| {
                let tail = match &e.tail {
                    TailRule::Zero => TailDoc::Zero,
                    TailRule::One => TailDoc::One,
                    TailRule::Geometric { ratio } => TailDoc::Geometric { ratio: conv(ratio) },
                };
                (
                    p.to_string(),
                    PrimeDoc {
                        values: e.values.iter().map(conv).collect(),
                        tail,
                    },
                )
            })
            .collect();
        let default = match &spec.default_rule {
            DefaultRule::ZeroOnPrimes => DefaultDoc::ZeroOnPrimes,
            DefaultRule::OneEverywhere => DefaultDoc::OneEverywhere,
            DefaultRule::PowerLaw { s, negated } => DefaultDoc::PowerLaw {
                s: conv(s),
                negated: *negated,
            },
        };
        SpecDoc { default, primes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ExactC;

    fn zero_spec(entries: Vec<(u64, Vec<i64>, TailRule<ExactC>)>) -> CoefficientSpec<ExactC> {
        CoefficientSpec::from_entries(
            entries.into_iter().map(|(p, vs, tail)| {
                (
                    p,
                    PrimeEntry {
                        values: vs.into_iter().map(ExactC::from_i64).collect(),
                        tail,
                    },
                )
            }),
            DefaultRule::ZeroOnPrimes,
        )
        .unwrap()
    }

    #[test]
    fn simply_bad_example() {
        // G(3) = 2, G(9) = 4 = 2^2, zero beyond: breaks at the cube.
        let g = zero_spec(vec![(3, vec![2, 4], TailRule::Zero)]);
        let c = g.classify_prime(3).unwrap();
        assert_eq!(c.w, Index::Finite(2));
        assert_eq!(c.v, Index::Finite(0));
        assert_eq!(c.class, PrimeClass::SimplyBadOpaque);
        let cond = g.conductors().unwrap();
        assert_eq!(cond.n, 9);
        assert_eq!(cond.n_t, 1);
    }

    #[test]
    fn simply_transparent_example() {
        // G(5) = G(25) = 1, G(125) = 3, zero beyond.
        let g = zero_spec(vec![(5, vec![1, 1, 3], TailRule::Zero)]);
        let c = g.classify_prime(5).unwrap();
        assert_eq!(c.v, Index::Finite(2));
        assert_eq!(c.w, Index::Finite(2));
        assert_eq!(c.class, PrimeClass::SimplyTransparent);
        let cond = g.conductors().unwrap();
        assert_eq!(cond.n, 25);
        assert_eq!(cond.n_t, 25);
    }

    #[test]
    fn hyper_classes() {
        let g = CoefficientSpec::from_entries(
            vec![
                (
                    2,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(1)],
                        tail: TailRule::One,
                    },
                ),
                (
                    3,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(-2)],
                        tail: TailRule::Geometric {
                            ratio: ExactC::from_i64(-2),
                        },
                    },
                ),
            ],
            DefaultRule::ZeroOnPrimes,
        )
        .unwrap();
        assert_eq!(g.classify_prime(2).unwrap().class, PrimeClass::HyperTransparent);
        assert_eq!(g.classify_prime(3).unwrap().class, PrimeClass::HyperBadOpaque);
        // Hyper primes contribute to neither conductor.
        let cond = g.conductors().unwrap();
        assert_eq!((cond.n, cond.n_t), (1, 1));
        // Unlisted primes under the zero default are not bad.
        assert_eq!(g.classify_prime(7).unwrap().class, PrimeClass::NotBad);
        assert_eq!(g.cm_index(7).unwrap(), Index::Infinite);
        assert_eq!(g.transparency_index(7).unwrap(), Index::Finite(0));
    }

    #[test]
    fn power_law_default_values() {
        let sieve = Sieve::new(1000);
        let g: CoefficientSpec<ExactC> = CoefficientSpec::new(
            BTreeMap::new(),
            DefaultRule::PowerLaw {
                s: ExactC::from_i64(2),
                negated: false,
            },
        )
        .unwrap();
        // G(12) = G(4) G(3) = 2^-4 · 3^-2 = 1/144.
        assert_eq!(g.value_at(&sieve, 12).unwrap(), ExactC::from_ratio(1, 144));
        assert_eq!(g.classify_prime(7).unwrap().class, PrimeClass::NotBad);
    }

    #[test]
    fn negated_power_law_is_cm() {
        let g: CoefficientSpec<ExactC> = CoefficientSpec::new(
            BTreeMap::new(),
            DefaultRule::PowerLaw {
                s: ExactC::from_i64(1),
                negated: true,
            },
        )
        .unwrap();
        assert_eq!(g.prime_power(5, 1).unwrap(), ExactC::from_ratio(-1, 5));
        assert_eq!(g.prime_power(5, 2).unwrap(), ExactC::from_ratio(1, 25));
        assert_eq!(g.cm_index(5).unwrap(), Index::Infinite);
    }

    #[test]
    fn finite_factor_routes_agree() {
        let sieve = Sieve::new(100_000);
        let g = zero_spec(vec![
            (2, vec![1, 1, 3], TailRule::Zero),
            (3, vec![2, 4], TailRule::Zero),
            (5, vec![1], TailRule::One),
        ]);
        for a in 1..=200u64 {
            let e1 = euler_factor(&g, &sieve, a).unwrap();
            let e2 = euler_factor_divisor_form(&g, &sieve, a).unwrap();
            assert_eq!(e1, e2, "euler a={a}");
            let f = sieve.factorize(a).unwrap();
            let mut e3 = ExactC::one();
            for (p, e) in &f.factors {
                e3 = e3 * euler_factor_at_prime_series_form(&g, *p, *e).unwrap();
            }
            assert_eq!(e1, e3, "euler series form a={a}");
            let u1 = tail_difference(&g, &sieve, a).unwrap();
            let u2 = tail_difference_divisor_form(&g, &sieve, a).unwrap();
            assert_eq!(u1, u2, "tail difference a={a}");
            let c1 = correlation_weight(&g, &sieve, a).unwrap();
            let c2 = correlation_weight_divisor_form(&g, &sieve, a).unwrap();
            assert_eq!(c1, c2, "correlation a={a}");
        }
    }

    #[test]
    fn argument_split_parts() {
        let sieve = Sieve::new(10_000);
        let g = CoefficientSpec::from_entries(
            vec![
                (
                    2,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(1)],
                        tail: TailRule::One, // hyper transparent
                    },
                ),
                (
                    3,
                    PrimeEntry {
                        values: vec![ExactC::from_i64(1), ExactC::from_i64(5)],
                        tail: TailRule::Zero, // simply transparent, v = 1
                    },
                ),
            ],
            DefaultRule::ZeroOnPrimes,
        )
        .unwrap();
        let s = argument_split(&g, &sieve, 360).unwrap(); // 2^3 · 3^2 · 5
        assert_eq!(s.hyper, 8);
        assert_eq!(s.transparent, 9);
        assert_eq!(s.plain, 5);
        assert_eq!(s.hyper * s.transparent * s.plain, 360);
    }

    #[test]
    fn spec_doc_round_trip() {
        let g = zero_spec(vec![(2, vec![1, -2], TailRule::Zero)]);
        let doc = SpecDoc::from_spec(&g);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SpecDoc = serde_json::from_str(&json).unwrap();
        let g2: CoefficientSpec<ExactC> = back.to_spec().unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn invalid_specs_rejected() {
        let bad_prime = CoefficientSpec::from_entries(
            vec![(
                6,
                PrimeEntry {
                    values: vec![ExactC::from_i64(1)],
                    tail: TailRule::Zero,
                },
            )],
            DefaultRule::<ExactC>::ZeroOnPrimes,
        );
        assert!(matches!(bad_prime, Err(Error::NotPrime { .. })));
        let bad_s = CoefficientSpec::<ExactC>::new(
            BTreeMap::new(),
            DefaultRule::PowerLaw {
                s: ExactC::from_i64(0),
                negated: false,
            },
        );
        assert!(bad_s.is_err());
    }
}
