//! Exact integer and rational arithmetic.
//!
//! Everything on the synthesis side of the crate is computed with
//! arbitrary-precision integers and reduced fractions. Floating point only
//! enters in the simulator, and [`rational_from_float`] is the single door
//! back from floats into exact values.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::reduction::PhaseSet;

/// Exact rational number, always stored in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational(BigRational);

impl Rational {
    /// Builds `numer / denom`. Panics if `denom` is zero.
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Self {
        Self(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn abs(&self) -> Self {
        Self(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Self(self.0.recip())
    }

    /// Euclidean remainder: the unique `r` in `[0, |m|)` with `self - r` an
    /// integer multiple of `m`.
    pub fn rem_euclid(&self, m: &Rational) -> Rational {
        assert!(!m.is_zero(), "rem_euclid by zero");
        let m = m.abs();
        let q = (&self.0 / &m.0).floor();
        Self(&self.0 - q * &m.0)
    }

    /// Nearest double. Exact for values whose numerator and denominator fit.
    pub fn to_f64(&self) -> f64 {
        if let (Some(n), Some(d)) = (self.numer().to_f64(), self.denom().to_f64()) {
            if n.is_finite() && d.is_finite() && d != 0.0 {
                return n / d;
            }
        }
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn as_big(&self) -> &BigRational {
        &self.0
    }

    /// The exact binary value of a finite double.
    pub fn from_f64_exact(x: f64) -> Option<Self> {
        BigRational::from_float(x).map(Rational)
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Self::from_integer(n)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Self::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Self(r)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: &'a Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl std::iter::Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> std::iter::Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denom().is_one() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse_int = |t: &str| {
            t.trim()
                .parse::<BigInt>()
                .map_err(|_| Error::Parse(format!("not a rational: {s:?}")))
        };
        match s.split_once('/') {
            Some((n, d)) => {
                let n = parse_int(n)?;
                let d = parse_int(d)?;
                if d.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in {s:?}")));
                }
                Ok(Rational::new(n, d))
            }
            None => Ok(Rational::from_integer(parse_int(s)?)),
        }
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing `BigInt`s as decimal strings.
pub mod int_string {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(n)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }

    /// Same encoding for `Vec<BigInt>`.
    pub mod vec {
        use num_bigint::BigInt;
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[BigInt], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for n in v {
                seq.serialize_element(&n.to_string())?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigInt>, D::Error> {
            let v = Vec::<String>::deserialize(d)?;
            v.iter()
                .map(|s| s.trim().parse().map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

/// Greatest common divisor of a set of non-negative integers, with
/// `gcd(0, a) = a`. Negative inputs contribute their absolute value.
pub fn gcd_set<'a, I>(values: I) -> Result<BigInt>
where
    I: IntoIterator<Item = &'a BigInt>,
{
    let mut iter = values.into_iter().peekable();
    if iter.peek().is_none() {
        return Err(Error::EmptyInput);
    }
    let g = iter.fold(BigInt::zero(), |g, v| g.gcd(v));
    if g.is_zero() {
        Err(Error::DegenerateSet)
    } else {
        Ok(g)
    }
}

pub fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    a.lcm(b)
}

/// Rational approximation of `value` by continued-fraction convergents.
///
/// Returns the first convergent within `tolerance` of `value`.
pub fn rational_from_float(value: f64, tolerance: f64) -> Result<Rational> {
    if !value.is_finite() {
        return Err(Error::NonFinite(value));
    }
    if !(tolerance > 0.0) || !tolerance.is_finite() {
        return Err(Error::BadTolerance(tolerance));
    }
    // h_{k} = a_k h_{k-1} + h_{k-2}, same for k; seeded with (1, 0), (0, 1).
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut x = value;
    for _ in 0..128 {
        let a = x.floor();
        let a_int = BigInt::from_f64(a).expect("finite floor");
        let h_next = &a_int * &h + &h_prev;
        let k_next = &a_int * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);

        let approx = Rational::new(h.clone(), k.clone());
        if (approx.to_f64() - value).abs() <= tolerance {
            return Ok(approx);
        }
        let frac = x - a;
        if frac == 0.0 {
            return Ok(approx);
        }
        x = 1.0 / frac;
        if !x.is_finite() || x.abs() > 9.0e15 {
            return Ok(approx);
        }
    }
    Ok(Rational::new(h, k))
}

/// Brings a list of phases (each a multiple of π) onto a common integer
/// denominator, reducing every phase mod 2 (i.e. θ mod 2π) and dropping
/// duplicates.
pub fn normalize_phase_set(phases: &[Rational]) -> Result<PhaseSet> {
    if phases.is_empty() {
        return Err(Error::EmptyInput);
    }
    let two = Rational::from_integer(2);
    let reduced: Vec<Rational> = phases.iter().map(|p| p.rem_euclid(&two)).collect();
    let d = reduced
        .iter()
        .fold(BigInt::one(), |acc, r| lcm(&acc, r.denom()));
    let d_rat = Rational::from_integer(d.clone());
    let numerators = reduced
        .iter()
        .map(|r| {
            let x = r * &d_rat;
            debug_assert!(x.is_integer());
            x.numer().clone()
        })
        .collect::<Vec<_>>();
    PhaseSet::new(d, numerators)
}

/// Total order helper used when ranking candidate differences.
pub(crate) fn cmp_abs_then_sign(a: &BigInt, b: &BigInt) -> Ordering {
    a.abs()
        .cmp(&b.abs())
        .then_with(|| a.is_positive().cmp(&b.is_positive()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    fn euclid(mut a: u64, mut b: u64) -> u64 {
        while b != 0 {
            (a, b) = (b, a % b);
        }
        a
    }

    #[test]
    fn gcd_set_examples() {
        assert_eq!(
            gcd_set(&ints(&[21, 22, 64, 65, 107, 108])).unwrap(),
            BigInt::from(1)
        );
        assert_eq!(gcd_set(&ints(&[0, 5])).unwrap(), BigInt::from(5));
        assert_eq!(
            gcd_set(&ints(&[66, 93, 108, 123, 138])).unwrap(),
            BigInt::from(3)
        );
    }

    #[test]
    fn gcd_set_degenerate() {
        assert_eq!(gcd_set(&ints(&[0, 0])), Err(Error::DegenerateSet));
        assert_eq!(gcd_set(&ints(&[])), Err(Error::EmptyInput));
    }

    #[test]
    fn continued_fraction_examples() {
        assert_eq!(rational_from_float(0.5, 1e-9).unwrap(), Rational::new(1, 2));
        assert_eq!(
            rational_from_float(0.328125, 1e-9).unwrap(),
            Rational::new(21, 64)
        );
        assert_eq!(
            rational_from_float(0.042857142857, 1e-9).unwrap(),
            Rational::new(3, 70)
        );
        assert_eq!(
            rational_from_float(-1.25, 1e-9).unwrap(),
            Rational::new(-5, 4)
        );
        assert_eq!(rational_from_float(3.0, 1e-9).unwrap(), Rational::from(3));
    }

    #[test]
    fn continued_fraction_rejects_bad_input() {
        assert!(matches!(
            rational_from_float(f64::NAN, 1e-9),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            rational_from_float(f64::INFINITY, 1e-9),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            rational_from_float(0.5, 0.0),
            Err(Error::BadTolerance(_))
        ));
    }

    #[test]
    fn continued_fraction_stops_at_first_close_convergent() {
        // pi: 3, 22/7, 333/106, 355/113
        assert_eq!(
            rational_from_float(std::f64::consts::PI, 2e-3).unwrap(),
            Rational::new(22, 7)
        );
        assert_eq!(
            rational_from_float(std::f64::consts::PI, 1e-6).unwrap(),
            Rational::new(355, 113)
        );
    }

    #[test]
    fn normalize_examples() {
        let six_phase: Vec<Rational> = [21, 22, 64, 65, 107, 108]
            .iter()
            .map(|&x| Rational::new(x, 64))
            .collect();
        let ps = normalize_phase_set(&six_phase).unwrap();
        assert_eq!(ps.denominator(), &BigInt::from(64));
        assert_eq!(ps.numerators(), &ints(&[21, 22, 64, 65, 107, 108])[..]);

        let ri = normalize_phase_set(&[Rational::zero(), Rational::new(1, 7)]).unwrap();
        assert_eq!(ri.denominator(), &BigInt::from(7));
        assert_eq!(ri.numerators(), &ints(&[0, 1])[..]);

        let wrapped = normalize_phase_set(&[Rational::new(5, 2)]).unwrap();
        assert_eq!(wrapped.denominator(), &BigInt::from(2));
        assert_eq!(wrapped.numerators(), &ints(&[1])[..]);
    }

    #[test]
    fn normalize_dedupes_and_rejects_empty() {
        let ps = normalize_phase_set(&[Rational::new(1, 2), Rational::new(5, 2)]).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(normalize_phase_set(&[]).unwrap_err(), Error::EmptyInput);
    }

    #[test]
    fn rational_text_format() {
        assert_eq!(Rational::new(-11, 16).to_string(), "-11/16");
        assert_eq!(Rational::new(64, 64).to_string(), "1");
        assert_eq!("43/2".parse::<Rational>().unwrap(), Rational::new(43, 2));
        assert_eq!(
            " -6 / 4 ".parse::<Rational>().unwrap(),
            Rational::new(-3, 2)
        );
        assert!("1/0".parse::<Rational>().is_err());
        assert!("x".parse::<Rational>().is_err());
        let json = serde_json::to_string(&Rational::new(70, 3)).unwrap();
        assert_eq!(json, "\"70/3\"");
    }

    #[test]
    fn rem_euclid_wraps_negative() {
        let two = Rational::from(2);
        assert_eq!(
            Rational::new(-21, 64).rem_euclid(&two),
            Rational::new(107, 64)
        );
        assert_eq!(Rational::from(2).rem_euclid(&two), Rational::zero());
    }

    proptest! {
        #[test]
        fn gcd_pair_is_greatest_common_divisor(a in 0u64..100_000, b in 0u64..100_000) {
            prop_assume!(a != 0 || b != 0);
            let g = gcd_set(&[BigInt::from(a), BigInt::from(b)]).unwrap();
            let g = g.to_u64().unwrap();
            prop_assert_eq!(a % g, 0);
            prop_assert_eq!(b % g, 0);
            prop_assert_eq!(g, euclid(a, b));
        }

        #[test]
        fn continued_fraction_round_trip(p in -20_000i64..20_000, q in 1i64..=10_000) {
            let r = Rational::new(p, q);
            let back = rational_from_float(p as f64 / q as f64, 1e-12).unwrap();
            prop_assert_eq!(back, r);
        }

        #[test]
        fn normalized_numerators_in_range(v in proptest::collection::vec((-50i64..50, 1i64..40), 1..10)) {
            let phases: Vec<Rational> = v.iter().map(|&(n, d)| Rational::new(n, d)).collect();
            let ps = normalize_phase_set(&phases).unwrap();
            let two_d = ps.denominator() * 2;
            for x in ps.numerators() {
                prop_assert!(!x.is_negative() && x < &two_d);
            }
        }
    }
}
