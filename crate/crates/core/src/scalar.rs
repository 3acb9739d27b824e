//! Numeric abstraction over the two arithmetic regimes.
//!
//! Every construction in this crate is generic over a [`Scalar`]: either
//! [`ExactC`] (complex numbers with arbitrary-precision rational parts, for
//! identities that must hold with residual exactly zero) or
//! [`num_complex::Complex64`] (for large numerical scans where exactness is
//! neither possible nor needed). Comparison tolerances for the float regime
//! are pinned here so the whole crate agrees on them.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero as _};
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Tolerance for knife-edge value comparisons during prime classification
/// (e.g. deciding whether a coefficient value equals 1) in the float regime.
pub const CLASSIFY_TOL: f64 = 1e-12;

/// Tolerance on identity residuals in the float regime.
pub const IDENTITY_TOL: f64 = 1e-10;

/// Tolerance on cloud-construction postconditions in the float regime.
pub const CLOUD_TOL: f64 = 1e-9;

/// A field element usable throughout the toolkit.
///
/// Implementations must be exact fields or behave like one up to the pinned
/// tolerances; [`Scalar::EXACT`] records which regime an instantiation is in
/// so reports can label their numeric mode.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Sized
{
    /// True when arithmetic is exact (no rounding anywhere).
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(n: i64) -> Self;
    fn from_u64(n: u64) -> Self;

    /// The rational `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Build a scalar from a complex double. Exact implementations convert
    /// the dyadic rational bit pattern losslessly.
    fn from_c64(z: Complex64) -> Self;

    fn is_zero(&self) -> bool;

    /// Equality at a given absolute tolerance; exact scalars ignore `tol`.
    fn close_to(&self, other: &Self, tol: f64) -> bool;

    /// Complex modulus, approximated through `f64` for exact scalars.
    fn modulus(&self) -> f64;

    /// Lossy view as a complex double, for reporting.
    fn to_c64(&self) -> Complex64;

    /// Non-negative integer power by repeated multiplication.
    fn powu(&self, k: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    /// `p^(-k·s)` for a prime `p`. The exact regime supports only integer
    /// real `s`; the float regime supports any complex `s`.
    fn prime_power_neg(p: u64, k: u32, s: &Self) -> Result<Self>;

    /// `1 <= |self| <= bound`, decided exactly where possible and at the
    /// classification tolerance in the float regime.
    fn modulus_in_unit_band(&self, bound: u64) -> bool;

    /// Real part as `f64` (used for validating exponent ranges).
    fn re_f64(&self) -> f64 {
        self.to_c64().re
    }
}

impl Scalar for Complex64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_i64(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_u64(n: u64) -> Self {
        Complex64::new(n as f64, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn close_to(&self, other: &Self, tol: f64) -> bool {
        (self - other).norm() <= tol
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn prime_power_neg(p: u64, k: u32, s: &Self) -> Result<Self> {
        let ln_p = (p as f64).ln();
        Ok((-(k as f64) * s * ln_p).exp())
    }
    fn modulus_in_unit_band(&self, bound: u64) -> bool {
        let m = self.norm();
        m >= 1.0 - CLASSIFY_TOL && m <= bound as f64 + CLASSIFY_TOL
    }
}

/// Complex number with arbitrary-precision rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq)]
pub struct ExactC {
    pub re: BigRational,
    pub im: BigRational,
}

impl ExactC {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        ExactC { re, im }
    }

    /// Purely real rational.
    pub fn real(re: BigRational) -> Self {
        ExactC {
            re,
            im: BigRational::zero(),
        }
    }

    fn rat_i64(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    /// True when the value is a real integer, returning it if it fits `i64`.
    fn as_integer(&self) -> Option<BigInt> {
        if self.im.is_zero() && self.re.is_integer() {
            Some(self.re.to_integer())
        } else {
            None
        }
    }
}

impl fmt::Debug for ExactC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else {
            write!(f, "{} + {}i", self.re, self.im)
        }
    }
}

impl Add for ExactC {
    type Output = ExactC;
    fn add(self, o: ExactC) -> ExactC {
        ExactC::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for ExactC {
    type Output = ExactC;
    fn sub(self, o: ExactC) -> ExactC {
        ExactC::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul for ExactC {
    type Output = ExactC;
    fn mul(self, o: ExactC) -> ExactC {
        let re = &self.re * &o.re - &self.im * &o.im;
        let im = &self.re * &o.im + &self.im * &o.re;
        ExactC::new(re, im)
    }
}

impl Div for ExactC {
    type Output = ExactC;
    fn div(self, o: ExactC) -> ExactC {
        let denom = &o.re * &o.re + &o.im * &o.im;
        assert!(!denom.is_zero(), "division by zero in exact arithmetic");
        let re = (&self.re * &o.re + &self.im * &o.im) / &denom;
        let im = (&self.im * &o.re - &self.re * &o.im) / &denom;
        ExactC::new(re, im)
    }
}

impl Neg for ExactC {
    type Output = ExactC;
    fn neg(self) -> ExactC {
        ExactC::new(-self.re, -self.im)
    }
}

impl Scalar for ExactC {
    const EXACT: bool = true;

    fn zero() -> Self {
        ExactC::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        ExactC::real(Self::rat_i64(1))
    }
    fn from_i64(n: i64) -> Self {
        ExactC::real(Self::rat_i64(n))
    }
    fn from_u64(n: u64) -> Self {
        ExactC::real(BigRational::from_integer(BigInt::from(n)))
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        ExactC::real(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }
    fn from_c64(z: Complex64) -> Self {
        let conv = |x: f64| {
            BigRational::from_float(x).expect("non-finite float cannot become a rational")
        };
        ExactC::new(conv(z.re), conv(z.im))
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn close_to(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
    fn modulus(&self) -> f64 {
        let re = self.re.to_f64().unwrap_or(f64::NAN);
        let im = self.im.to_f64().unwrap_or(f64::NAN);
        re.hypot(im)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
    fn prime_power_neg(p: u64, k: u32, s: &Self) -> Result<Self> {
        let n = ExactC::as_integer(s).ok_or_else(|| {
            Error::ExactUnsupported(format!(
                "p^(-k*s) needs an integer exponent in exact mode, got {s:?}"
            ))
        })?;
        let n = n
            .to_i64()
            .ok_or_else(|| Error::ExactUnsupported("exponent too large".into()))?;
        let total = n
            .checked_mul(k as i64)
            .ok_or(Error::Overflow("prime power exponent"))?;
        let mag = BigInt::from(p).pow(total.unsigned_abs() as u32);
        let r = if total >= 0 {
            BigRational::new(BigInt::from(1), mag)
        } else {
            BigRational::from_integer(mag)
        };
        Ok(ExactC::real(r))
    }
    fn modulus_in_unit_band(&self, bound: u64) -> bool {
        // |self|^2 = re^2 + im^2 is an exactly comparable rational.
        let sq = &self.re * &self.re + &self.im * &self.im;
        let one = BigRational::from_integer(BigInt::from(1));
        let b2 = BigRational::from_integer(BigInt::from(bound) * BigInt::from(bound));
        sq >= one && sq <= b2
    }
}

/// `|a - b|` as an `f64`, usable in both regimes for reporting residuals.
pub fn residual<S: Scalar>(a: &S, b: &S) -> f64 {
    if S::EXACT {
        if a == b {
            0.0
        } else {
            (a.to_c64() - b.to_c64()).norm().max(f64::MIN_POSITIVE)
        }
    } else {
        (a.to_c64() - b.to_c64()).norm()
    }
}
