//! Exhaustive identity checks, grouped into suites.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;

use crate::cf::{cf_to_code, CFWord};
use crate::error::{Error, Result};
use crate::measures::qmark_rational;
use crate::tree::{
    count_words_with_sum, farey_level, farey_level_bfs, kepler_children, kepler_index,
    kepler_level, kepler_word_into, kepler_words, level_digit_count, q_of_n_u64,
};

/// Counterexamples kept per check.
const MAX_REPORTED: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Identities,
    Bijection,
    Codes,
    Counts,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "identities" => Ok(Suite::Identities),
            "bijection" => Ok(Suite::Bijection),
            "codes" => Ok(Suite::Codes),
            "counts" => Ok(Suite::Counts),
            "all" => Ok(Suite::All),
            _ => Err(Error::parse("suite", s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerifyLimits {
    /// Largest n for the closed-form bijection.
    pub max_n: u64,
    /// Bits of the path-code concatenation compared with `C2`.
    pub max_bits: u64,
    /// Largest digit sum whose words are counted.
    pub max_sum: u64,
    /// Deepest level for the question-mark identities.
    pub max_level: u64,
    /// Deepest level for the Farey/Kepler comparisons.
    pub farey_level: u64,
    /// Levels summed for the digit bookkeeping.
    pub digit_levels: u64,
}

impl Default for VerifyLimits {
    fn default() -> Self {
        VerifyLimits {
            max_n: 1 << 16,
            max_bits: 1 << 20,
            max_sum: 16,
            max_level: 12,
            farey_level: 14,
            digit_levels: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub name: String,
    pub checked: u64,
    pub failed: u64,
    pub counterexamples: Vec<String>,
}

impl CheckResult {
    fn new(name: impl Into<String>) -> Self {
        CheckResult {
            name: name.into(),
            checked: 0,
            failed: 0,
            counterexamples: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.failed += 1;
            if self.counterexamples.len() < MAX_REPORTED {
                self.counterexamples.push(describe());
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed() { "ok" } else { "FAILED" };
        write!(f, "{status:6} {} ({} checked", self.name, self.checked)?;
        if self.failed > 0 {
            write!(f, ", {} failed", self.failed)?;
        }
        f.write_str(")")?;
        for c in &self.counterexamples {
            write!(f, "\n       counterexample: {c}")?;
        }
        Ok(())
    }
}

pub fn run_suite(suite: Suite, limits: &VerifyLimits) -> Result<Vec<CheckResult>> {
    Ok(match suite {
        Suite::Identities => identities(limits)?,
        Suite::Bijection => vec![bijection(limits.max_n)?],
        Suite::Codes => vec![codes(limits.max_bits)?],
        Suite::Counts => vec![counts(limits.max_sum)?],
        Suite::All => {
            let mut all = identities(limits)?;
            all.push(bijection(limits.max_n)?);
            all.push(codes(limits.max_bits)?);
            all.push(counts(limits.max_sum)?);
            all
        }
    })
}

pub fn identities(limits: &VerifyLimits) -> Result<Vec<CheckResult>> {
    Ok(vec![
        qmark_halving(limits.max_level)?,
        qmark_monotone(limits.max_level)?,
        farey_same_levels(limits.farey_level)?,
        farey_descent_matches_bfs(limits.farey_level.min(16))?,
        level_digit_totals(limits.digit_levels)?,
    ])
}

/// `?(p/(p+q)) = ?(p/q) / 2` on every node of levels `0..=max_level`.
pub fn qmark_halving(max_level: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("qmark halving, levels <= {max_level}"));
    for w in kepler_words(max_level + 1)? {
        let (left, _) = kepler_children(&w);
        r.check(qmark_rational(&left) == qmark_rational(&w).half(), || {
            format!("{w} -> {left}")
        });
    }
    Ok(r)
}

/// `?` is strictly increasing on all rationals of levels `0..=max_level`.
pub fn qmark_monotone(max_level: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("qmark monotone, levels <= {max_level}"));
    let mut points: Vec<(CFWord, _)> = kepler_words(max_level + 1)?
        .map(|w| {
            let x = w.to_rational();
            (w, x)
        })
        .collect();
    points.sort_by(|a, b| a.1.cmp(&b.1));
    let values: Vec<_> = points.iter().map(|(w, _)| qmark_rational(w)).collect();
    for i in 1..points.len() {
        r.check(values[i - 1] < values[i], || {
            format!("?({}) >= ?({})", points[i - 1].1, points[i].1)
        });
    }
    Ok(r)
}

/// Each Farey level holds the same words as the Kepler level.
pub fn farey_same_levels(max_level: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("farey level contents, levels <= {max_level}"));
    for l in 0..=max_level {
        let mut farey: Vec<Vec<u64>> = farey_level(l)?.map(CFWord::into_digits).collect();
        let mut kepler: Vec<Vec<u64>> = kepler_level(l)?.map(CFWord::into_digits).collect();
        farey.sort_unstable();
        kepler.sort_unstable();
        r.check(farey == kepler, || format!("level {l} differs"));
    }
    Ok(r)
}

/// Direct per-word descent agrees with breadth-first construction.
pub fn farey_descent_matches_bfs(max_level: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!(
        "farey descent vs breadth-first, levels <= {max_level}"
    ));
    for l in 0..=max_level {
        let bfs = farey_level_bfs(l)?;
        for (pos, (a, b)) in farey_level(l)?.zip(&bfs).enumerate() {
            r.check(&a == b, || format!("level {l} position {pos}: {a} vs {b}"));
        }
    }
    Ok(r)
}

/// Digits per level by summing actual word lengths, against `(l+2) 2^(l-1)`,
/// and the running total against `L 2^(L-1)`.
pub fn level_digit_totals(levels: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("digits per level, levels < {levels}"));
    let mut buf = Vec::new();
    let mut cumulative = BigUint::from(0u32);
    for l in 0..levels {
        let mut total = 0u64;
        for pos in 0..(1u64 << l) {
            kepler_word_into(l, pos, &mut buf);
            total += buf.len() as u64;
        }
        r.check(BigUint::from(total) == level_digit_count(l), || {
            format!("level {l}: {total} digits")
        });
        cumulative += total;
        let through = l + 1;
        let expected = BigUint::from(through) << (through - 1);
        r.check(cumulative == expected, || {
            format!("levels < {through}: {cumulative} digits, expected {expected}")
        });
    }
    Ok(r)
}

/// Closed form `q(n)` against the `n`-th word of the ordering, and the
/// index map back.
pub fn bijection(max_n: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("q(n) bijection, n <= {max_n}"));
    let levels = 64 - max_n.leading_zeros() as u64;
    for (i, w) in kepler_words(levels)?.take(max_n as usize).enumerate() {
        let n = i as u64 + 1;
        let q = q_of_n_u64(n)?;
        r.check(q == w, || format!("n={n}: q(n)={q}, ordering gives {w}"));
        r.check(kepler_index(&w) == BigUint::from(n), || {
            format!("index of {w} is not {n}")
        });
    }
    Ok(r)
}

/// Path codes of the Kepler ordering, concatenated, against binary counting.
pub fn codes(max_bits: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!(
        "path codes vs dyadic Champernowne, {max_bits} bits"
    ));
    let mut from_codes = Vec::with_capacity(max_bits as usize);
    let mut level = 0;
    while (from_codes.len() as u64) < max_bits {
        for w in kepler_level(level)? {
            from_codes.extend_from_slice(cf_to_code(&w).bits());
        }
        level += 1;
    }
    let mut counting = Vec::with_capacity(from_codes.len());
    for l in 0..level {
        for v in 0..(1u64 << l) {
            counting.extend((0..l).rev().map(|i| (v >> i) & 1 == 1));
        }
    }
    for (i, (a, b)) in from_codes
        .iter()
        .zip(&counting)
        .take(max_bits as usize)
        .enumerate()
    {
        r.check(a == b, || format!("bit {i}"));
    }
    Ok(r)
}

/// Exactly `2^(s-2)` reduced words have digit sum `s`.
pub fn counts(max_sum: u64) -> Result<CheckResult> {
    let mut r = CheckResult::new(format!("words per digit sum, 2 <= s <= {max_sum}"));
    for s in 2..=max_sum {
        let got = count_words_with_sum(s)?;
        r.check(got == 1 << (s - 2), || format!("s={s}: {got} words"));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        let limits = VerifyLimits {
            max_n: 4096,
            max_bits: 1 << 14,
            max_sum: 12,
            max_level: 8,
            farey_level: 9,
            digit_levels: 12,
        };
        for r in run_suite(Suite::All, &limits).unwrap() {
            assert!(r.passed(), "{r}");
            assert!(r.checked > 0);
        }
    }

    #[test]
    fn failures_are_reported() {
        let mut r = CheckResult::new("demo");
        for i in 0..20 {
            r.check(i % 2 == 0, || format!("odd {i}"));
        }
        assert!(!r.passed());
        assert_eq!(r.failed, 10);
        assert_eq!(r.counterexamples.len(), MAX_REPORTED);
        assert!(r.to_string().contains("counterexample: odd 1"));
    }

    #[test]
    fn suite_names() {
        assert_eq!("codes".parse::<Suite>().unwrap(), Suite::Codes);
        assert!("everything".parse::<Suite>().is_err());
    }
}
