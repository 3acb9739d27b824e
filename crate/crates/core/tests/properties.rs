//! Randomized properties over wide input ranges, complementing the pinned
//! corpora in the acceptance gate.

use proptest::prelude::*;

use ramex_core::ramsum::{ramanujan_sum, ramanujan_sum_divisor_form};
use ramex_core::series::{exact_sum, identity_residual, partial_sum, IdentityKind, SeriesKind};
use ramex_core::sieve::gcd;
use ramex_core::specgen;
use ramex_core::{Scalar, Sieve};

fn sieve() -> Sieve {
    Sieve::new(4_000)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The two closed forms of the Ramanujan sum agree everywhere.
    #[test]
    fn ramanujan_sum_forms_agree(q in 1u64..=400, a in 1u64..=400) {
        let sieve = sieve();
        prop_assert_eq!(
            ramanujan_sum(&sieve, q, a).unwrap(),
            ramanujan_sum_divisor_form(&sieve, q, a).unwrap()
        );
    }

    /// c_q(a) is multiplicative in q across coprime moduli.
    #[test]
    fn ramanujan_sum_multiplicative_in_q(q1 in 1u64..=60, q2 in 1u64..=60, a in 1u64..=300) {
        prop_assume!(gcd(q1, q2) == 1);
        let sieve = sieve();
        prop_assert_eq!(
            ramanujan_sum(&sieve, q1 * q2, a).unwrap(),
            ramanujan_sum(&sieve, q1, a).unwrap() * ramanujan_sum(&sieve, q2, a).unwrap()
        );
    }

    /// A truncation past every nonzero modulus reproduces the closed-form
    /// value of a finite-support series. A modulus contributes only when its
    /// exponent at p stays within both the value list and v_p(a) + 1, which
    /// bounds the support by the product below.
    #[test]
    fn exact_sum_is_a_stable_truncation(seed in 0u64..1_000, a in 1u64..=24) {
        let g = specgen::random_finite_spec(&mut specgen::rng(seed));
        let mut support = 1u64;
        for p in g.listed_primes().collect::<Vec<_>>() {
            let len = g.entry(p).unwrap().values.len() as u32;
            let mut v = 0u32;
            let mut m = a;
            while m % p == 0 {
                v += 1;
                m /= p;
            }
            support *= p.pow(len.min(v + 1));
        }
        let sieve = Sieve::new(support.max(10));
        let kind = SeriesKind::Expansion { a };
        let closed = exact_sum(&sieve, &g, kind).unwrap();
        prop_assert_eq!(partial_sum(&sieve, &g, kind, support as f64).unwrap(), closed);
    }

    /// The coprime-trace recursion holds with residual exactly zero for any
    /// coprime pair of small parameters.
    #[test]
    fn coprime_recursion_residual_zero(seed in 0u64..1_000, b in 1u64..=12, c in 1u64..=12) {
        prop_assume!(gcd(b, c) == 1);
        let sieve = sieve();
        let g = specgen::random_finite_spec(&mut specgen::rng(seed));
        let xs: Vec<f64> = (0..=60).map(|k| k as f64).collect();
        let r = identity_residual(&sieve, &g, IdentityKind::CoprimeRecursion { b, c }, &xs)
            .unwrap();
        prop_assert_eq!(r.max_residual, 0.0);
    }

    /// Expansions vanish off multiples of the transparency conductor.
    #[test]
    fn expansion_vanishes_off_conductor_multiples(seed in 0u64..1_000, a in 1u64..=40) {
        let sieve = sieve();
        let g = specgen::random_mixed_spec(&mut specgen::rng(seed));
        let n_t = g.conductors().unwrap().n_t;
        prop_assume!(a % n_t != 0);
        let v = exact_sum(&sieve, &g, SeriesKind::Expansion { a }).unwrap();
        prop_assert!(v.is_zero());
    }
}
