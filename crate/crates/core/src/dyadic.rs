//! Exact dyadic rationals `m / 2^e`, the natural carrier for values of the
//! question-mark function at rationals.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

/// `mantissa / 2^exponent`, always normalized: the mantissa is odd, or zero
/// with exponent 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DyadicRational {
    mantissa: BigInt,
    exponent: u64,
}

impl DyadicRational {
    pub fn new(mantissa: BigInt, exponent: u64) -> Self {
        let mut d = DyadicRational { mantissa, exponent };
        d.normalize();
        d
    }

    pub fn zero() -> Self {
        DyadicRational {
            mantissa: BigInt::zero(),
            exponent: 0,
        }
    }

    /// `2^-exponent`.
    pub fn pow2_inv(exponent: u64) -> Self {
        DyadicRational {
            mantissa: BigInt::one(),
            exponent,
        }
    }

    fn normalize(&mut self) {
        if self.mantissa.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self
            .mantissa
            .trailing_zeros()
            .unwrap_or(0)
            .min(self.exponent);
        if tz > 0 {
            self.mantissa >>= tz;
            self.exponent -= tz;
        }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    pub fn half(&self) -> Self {
        if self.mantissa.is_zero() {
            return self.clone();
        }
        DyadicRational {
            mantissa: self.mantissa.clone(),
            exponent: self.exponent + 1,
        }
    }

    pub fn to_big_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), BigInt::one() << self.exponent)
    }

    pub fn to_f64(&self) -> f64 {
        self.to_big_rational().to_f64().unwrap_or(f64::NAN)
    }

    /// Exact decimal expansion; `m / 2^e` always terminates after `e` places.
    pub fn to_decimal_string(&self) -> String {
        let e = self.exponent as usize;
        let scaled = self.mantissa.abs() * num_traits::pow(BigInt::from(5u8), e);
        let mut digits = scaled.to_string();
        if digits.len() <= e {
            digits = "0".repeat(e + 1 - digits.len()) + &digits;
        }
        let (int, frac) = digits.split_at(digits.len() - e);
        let sign = if self.mantissa.sign() == Sign::Minus {
            "-"
        } else {
            ""
        };
        if frac.is_empty() {
            format!("{sign}{int}")
        } else {
            format!("{sign}{int}.{frac}")
        }
    }

    fn aligned(&self, other: &Self) -> (BigInt, BigInt, u64) {
        let e = self.exponent.max(other.exponent);
        (
            &self.mantissa << (e - self.exponent),
            &other.mantissa << (e - other.exponent),
            e,
        )
    }
}

impl fmt::Display for DyadicRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.mantissa, self.exponent)
    }
}

impl Serialize for DyadicRational {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Add for &DyadicRational {
    type Output = DyadicRational;

    fn add(self, rhs: Self) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a + b, e)
    }
}

impl Sub for &DyadicRational {
    type Output = DyadicRational;

    fn sub(self, rhs: Self) -> DyadicRational {
        let (a, b, e) = self.aligned(rhs);
        DyadicRational::new(a - b, e)
    }
}

impl Neg for DyadicRational {
    type Output = DyadicRational;

    fn neg(self) -> DyadicRational {
        DyadicRational {
            mantissa: -self.mantissa,
            exponent: self.exponent,
        }
    }
}

impl Ord for DyadicRational {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(m: i64, e: u64) -> DyadicRational {
        DyadicRational::new(BigInt::from(m), e)
    }

    #[test]
    fn normalizes_even_mantissa() {
        let x = d(12, 5);
        assert_eq!(x.mantissa(), &BigInt::from(3));
        assert_eq!(x.exponent(), 3);
        assert_eq!(d(0, 9).exponent(), 0);
        assert_eq!(d(8, 2), d(2, 0));
    }

    #[test]
    fn arithmetic() {
        assert_eq!(&d(1, 1) + &d(1, 2), d(3, 2));
        assert_eq!(&d(1, 1) - &d(1, 1), DyadicRational::zero());
        assert_eq!(d(3, 2).half(), d(3, 3));
        assert!(d(1, 2) < d(1, 1));
        assert!(-d(1, 2) < DyadicRational::zero());
    }

    #[test]
    fn decimal_is_exact() {
        assert_eq!(d(5, 3).to_decimal_string(), "0.625");
        assert_eq!(d(1, 1).to_decimal_string(), "0.5");
        assert_eq!(d(3, 0).to_decimal_string(), "3");
        assert_eq!(d(-1, 4).to_decimal_string(), "-0.0625");
        assert_eq!(d(5, 3).to_string(), "5/2^3");
        assert_eq!(d(5, 3).to_f64(), 0.625);
    }
}
