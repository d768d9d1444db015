//! The Minkowski question-mark function and the cylinder measures used as
//! frequency targets.
//!
//! `?([a1, a2, ...]) = 2 * sum_i (-1)^(i+1) 2^-(a1 + ... + ai)`. On rationals
//! the sum is finite and the value is computed exactly as a dyadic rational.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::cf::{BlockQuery, CFWord, Rational};
use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};

pub const DEFAULT_QMARK_TOL: f64 = 1e-12;

/// `?(w)` exactly. The result has denominator `2^(digit_sum - 1)`.
pub fn qmark_rational(w: &CFWord) -> DyadicRational {
    // Scale every term to the common denominator 2^(s_n - 1):
    // 2 * 2^-s_i = 2^(s_n - s_i) / 2^(s_n - 1).
    let total = w.digit_sum();
    let mut acc = BigInt::zero();
    let mut partial = 0u64;
    for (i, &a) in w.digits().iter().enumerate() {
        partial += a;
        let term = BigInt::one() << (total - partial);
        if i % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    DyadicRational::new(acc, total - 1)
}

pub fn qmark_of(r: &Rational) -> Result<DyadicRational> {
    Ok(qmark_rational(&r.to_cf()?))
}

/// `?(x)` from a stream of continued-fraction digits of `x`. Summation stops
/// before the first term `2 * 2^-s_i` smaller than `tol`; the alternating
/// tail is then bounded by that term. A finite stream yields the exact sum.
pub fn qmark_real<I>(digits: I, tol: f64) -> Result<f64>
where
    I: IntoIterator,
    I::Item: Into<u64>,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut sum = 0.0f64;
    let mut partial = 0u64;
    let mut sign = 1.0f64;
    for d in digits {
        partial = partial.saturating_add(d.into());
        let term = if partial > 1100 {
            0.0
        } else {
            2f64.powi(1 - partial as i32)
        };
        if term < tol {
            break;
        }
        sum += sign * term;
        sign = -sign;
    }
    Ok(sum)
}

/// `mu_?(Delta(d)) = 2^-(d1 + ... + dk)`.
pub fn cylinder_qmark(d: &BlockQuery) -> DyadicRational {
    DyadicRational::pow2_inv(d.digit_sum())
}

/// The set of `y` in [0,1] whose expansion begins with a given block.
/// `lo_closed`/`hi_closed` record which endpoints belong to it; neither
/// measure used here charges single points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CylinderInterval {
    pub lo: BigRational,
    pub hi: BigRational,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl CylinderInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        let above = if self.lo_closed {
            x >= &self.lo
        } else {
            x > &self.lo
        };
        let below = if self.hi_closed {
            x <= &self.hi
        } else {
            x < &self.hi
        };
        above && below
    }
}

/// Convergents `p_k/q_k` of `[d1, ..., dk]`, starting from `p_0/q_0 = 0/1`.
/// Returns `(p_k, q_k, p_{k-1}, q_{k-1})`.
pub(crate) fn convergent_pair(digits: &[u64]) -> (BigInt, BigInt, BigInt, BigInt) {
    let (mut p_prev, mut q_prev) = (BigInt::one(), BigInt::zero());
    let (mut p, mut q) = (BigInt::zero(), BigInt::one());
    for &a in digits {
        let p_next = &p * a + &p_prev;
        let q_next = &q * a + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    (p, q, p_prev, q_prev)
}

/// `Delta(d)` for a possibly empty digit prefix. A tail `t` in [0,1) gives
/// `(p_k + t p_{k-1}) / (q_k + t q_{k-1})`: `t = 0` is attained, `t -> 1`
/// is not.
pub fn cylinder_interval_of(digits: &[u64]) -> CylinderInterval {
    let (p, q, pp, qp) = convergent_pair(digits);
    let attained = BigRational::new(p.clone(), q.clone());
    let limit = BigRational::new(p + pp, q + qp);
    if attained < limit {
        CylinderInterval {
            lo: attained,
            hi: limit,
            lo_closed: true,
            hi_closed: false,
        }
    } else {
        CylinderInterval {
            lo: limit,
            hi: attained,
            lo_closed: false,
            hi_closed: true,
        }
    }
}

pub fn cylinder_interval(d: &BlockQuery) -> CylinderInterval {
    cylinder_interval_of(d.digits())
}

/// Gauss measure of `[a, b]`: `log((1 + b)/(1 + a)) / log 2`, evaluated as
/// `ln_1p((b - a)/(1 + a))` so narrow cylinders keep their precision.
pub fn gauss_measure(a: &BigRational, b: &BigRational) -> f64 {
    let ratio = (b - a) / (BigRational::one() + a);
    let x = ratio.to_f64().unwrap_or(f64::NAN);
    let x = if ratio.is_negative() { -x.abs() } else { x };
    x.ln_1p() / std::f64::consts::LN_2
}

pub fn cylinder_gauss_of(digits: &[u64]) -> f64 {
    let iv = cylinder_interval_of(digits);
    gauss_measure(&iv.lo, &iv.hi)
}

pub fn cylinder_gauss(d: &BlockQuery) -> f64 {
    cylinder_gauss_of(d.digits())
}
