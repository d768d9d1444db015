//! Exact rationals in the unit interval, reduced continued-fraction words and
//! the binary path codes that locate each word in the Kepler tree.
//!
//! A reduced word `[a1, ..., an]` (last digit at least 2) and its path code
//! `0^(an-2) 1 0^(a(n-1)-1) ... 1 0^(a1-1)` determine each other, and the code
//! length is always `a1 + ... + an - 2`.

use std::cmp::Ordering;
use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A fraction `num/den` in lowest terms with `0 < num < den`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigUint,
    den: BigUint,
}

impl Rational {
    /// Builds `num/den`, reducing to lowest terms. Rejects values outside (0,1).
    pub fn new(num: BigUint, den: BigUint) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        if num.is_zero() || num >= den {
            return Err(Error::OutOfRange(format!("{num}/{den}")));
        }
        let g = num.gcd(&den);
        Ok(Rational {
            num: num / &g,
            den: den / g,
        })
    }

    pub fn from_u64(num: u64, den: u64) -> Result<Self> {
        Self::new(BigUint::from(num), BigUint::from(den))
    }

    pub fn numer(&self) -> &BigUint {
        &self.num
    }

    pub fn denom(&self) -> &BigUint {
        &self.den
    }

    pub fn to_f64(&self) -> f64 {
        let r = num_rational::BigRational::new(self.num.clone().into(), self.den.clone().into());
        r.to_f64().unwrap_or(f64::NAN)
    }

    pub fn to_big_rational(&self) -> num_rational::BigRational {
        num_rational::BigRational::new(self.num.clone().into(), self.den.clone().into())
    }

    /// Reduced continued fraction of this rational.
    pub fn to_cf(&self) -> Result<CFWord> {
        rational_to_cf(self)
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (p, q) = s
            .trim()
            .split_once('/')
            .ok_or_else(|| Error::parse("rational", s))?;
        let p: BigUint = p.trim().parse().map_err(|_| Error::parse("rational", s))?;
        let q: BigUint = q.trim().parse().map_err(|_| Error::parse("rational", s))?;
        Rational::new(p, q)
    }
}

fn parse_digits(what: &'static str, s: &str) -> Result<Vec<u64>> {
    let s = s.trim().trim_start_matches('[').trim_end_matches(']');
    s.split(',')
        .map(|t| t.trim().parse::<u64>().map_err(|_| Error::parse(what, s)))
        .collect()
}

fn write_digits(f: &mut fmt::Formatter<'_>, digits: &[u64]) -> fmt::Result {
    for (i, d) in digits.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{d}")?;
    }
    Ok(())
}

/// A finite continued fraction `[a1, ..., an]` in reduced form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CFWord {
    digits: Vec<u64>,
}

impl CFWord {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        match digits.last() {
            None => Err(Error::EmptyWord),
            Some(_) if digits.contains(&0) => Err(Error::ZeroDigit),
            Some(&last) if last < 2 => Err(Error::NotReduced(
                digits
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(","),
            )),
            Some(_) => Ok(CFWord { digits }),
        }
    }

    /// Caller guarantees the reduced-form invariant.
    pub(crate) fn from_digits_unchecked(digits: Vec<u64>) -> Self {
        debug_assert!(digits.last().is_some_and(|&d| d >= 2));
        CFWord { digits }
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn into_digits(self) -> Vec<u64> {
        self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn digit_sum(&self) -> u64 {
        digit_sum(&self.digits)
    }

    /// Kepler-tree level of the word, `digit_sum - 2`.
    pub fn level(&self) -> u64 {
        self.digit_sum() - 2
    }

    pub fn to_rational(&self) -> Rational {
        cf_to_rational(self)
    }

    pub fn to_code(&self) -> PathCode {
        cf_to_code(self)
    }
}

impl fmt::Display for CFWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.digits)
    }
}

impl FromStr for CFWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CFWord::new(parse_digits("continued fraction", s)?)
    }
}

/// A block of positive digits to search for; unlike [`CFWord`] it may end in 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockQuery {
    digits: Vec<u64>,
}

impl BlockQuery {
    pub fn new(digits: Vec<u64>) -> Result<Self> {
        if digits.is_empty() {
            return Err(Error::EmptyWord);
        }
        if digits.contains(&0) {
            return Err(Error::ZeroDigit);
        }
        Ok(BlockQuery { digits })
    }

    pub fn digits(&self) -> &[u64] {
        &self.digits
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn digit_sum(&self) -> u64 {
        digit_sum(&self.digits)
    }
}

impl fmt::Display for BlockQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_digits(f, &self.digits)
    }
}

impl FromStr for BlockQuery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BlockQuery::new(parse_digits("block", s)?)
    }
}

impl From<CFWord> for BlockQuery {
    fn from(w: CFWord) -> Self {
        BlockQuery { digits: w.digits }
    }
}

/// Downward Kepler path from the root `1/2`: left move = 0, right move = 1,
/// first move first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PathCode {
    bits: Vec<bool>,
}

impl PathCode {
    pub fn new(bits: Vec<bool>) -> Self {
        PathCode { bits }
    }

    /// The `len` low bits of `value`, most significant first.
    pub fn from_index(value: u64, len: u32) -> Self {
        assert!(len <= 64);
        PathCode {
            bits: (0..len).rev().map(|i| (value >> i) & 1 == 1).collect(),
        }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The code read as a binary numeral; the empty code is 0.
    pub fn value(&self) -> BigUint {
        self.bits.iter().fold(BigUint::zero(), |acc, &b| {
            let acc = acc << 1u32;
            if b {
                acc + 1u32
            } else {
                acc
            }
        })
    }

    pub fn to_cf(&self) -> CFWord {
        code_to_cf(self)
    }
}

impl fmt::Display for PathCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for PathCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::parse("path code", s)),
            })
            .collect::<Result<Vec<_>>>()
            .map(PathCode::new)
    }
}

pub fn digit_sum(digits: &[u64]) -> u64 {
    digits.iter().sum()
}

/// Euclid's algorithm. The final partial quotient of a reduced fraction in
/// (0,1) is always at least 2, so the result is the reduced form.
pub fn rational_to_cf(r: &Rational) -> Result<CFWord> {
    let mut p = r.num.clone();
    let mut q = r.den.clone();
    let mut digits = Vec::new();
    while !p.is_zero() {
        let (a, rem) = q.div_rem(&p);
        digits.push(a.to_u64().ok_or(Error::DigitOverflow)?);
        q = p;
        p = rem;
    }
    Ok(CFWord::from_digits_unchecked(digits))
}

/// Backward evaluation `x <- 1/(a + x)` from the last digit.
pub fn cf_to_rational(w: &CFWord) -> Rational {
    let mut num = BigUint::zero();
    let mut den = BigUint::one();
    for &a in w.digits.iter().rev() {
        let next_den = &den * a + &num;
        num = den;
        den = next_den;
    }
    Rational { num, den }
}

pub fn cf_to_code(w: &CFWord) -> PathCode {
    let d = &w.digits;
    let n = d.len();
    let mut bits = Vec::with_capacity((w.digit_sum() - 2) as usize);
    bits.extend(std::iter::repeat_n(false, (d[n - 1] - 2) as usize));
    for &a in d[..n - 1].iter().rev() {
        bits.push(true);
        bits.extend(std::iter::repeat_n(false, (a - 1) as usize));
    }
    PathCode { bits }
}

/// Replays the path from `[2]`: a left move bumps the first digit, a right
/// move prepends a 1.
pub fn code_to_cf(c: &PathCode) -> CFWord {
    let mut digits: VecDeque<u64> = VecDeque::from([2]);
    for &b in &c.bits {
        if b {
            digits.push_front(1);
        } else {
            digits[0] += 1;
        }
    }
    CFWord::from_digits_unchecked(digits.into())
}
