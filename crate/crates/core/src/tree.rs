//! Orderings of the rationals in (0,1): the Kepler tree read top-down and
//! left-right, the Farey tree, and the denominator ordering used for `x_aks`.
//!
//! Kepler level `l` holds exactly the reduced words with digit sum `l + 2`;
//! its `pos`-th entry is the word whose path code is `pos` written with `l`
//! bits. Levels are therefore enumerated by binary counting, never by
//! building the tree.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::cf::{cf_to_code, CFWord, Rational};
use crate::error::{Error, Result};

/// Largest level whose positions fit a `u64`.
pub const MAX_LEVEL: u64 = 63;

/// Largest Farey level [`farey_level_bfs`] will materialize.
pub const MAX_BFS_LEVEL: u64 = 24;

/// Largest digit sum [`count_words_with_sum`] will enumerate.
pub const MAX_ENUMERATED_SUM: u64 = 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OrderingId {
    Kepler,
    Farey,
    Aks,
    KeplerPerm { seed: u64 },
}

impl OrderingId {
    /// Parses a CLI ordering name. `seed` must be given for `kepler-perm`
    /// and only for it.
    pub fn parse(name: &str, seed: Option<u64>) -> Result<Self> {
        match (name.trim(), seed) {
            ("kepler", None) => Ok(OrderingId::Kepler),
            ("farey", None) => Ok(OrderingId::Farey),
            ("aks", None) => Ok(OrderingId::Aks),
            ("kepler-perm", Some(seed)) => Ok(OrderingId::KeplerPerm { seed }),
            ("kepler-perm", None) => Err(Error::InvalidArgument(
                "ordering kepler-perm requires a seed".into(),
            )),
            ("kepler" | "farey" | "aks", Some(_)) => Err(Error::InvalidArgument(format!(
                "ordering {name} does not take a seed"
            ))),
            _ => Err(Error::parse("ordering", name)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrderingId::Kepler => "kepler",
            OrderingId::Farey => "farey",
            OrderingId::Aks => "aks",
            OrderingId::KeplerPerm { .. } => "kepler-perm",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            OrderingId::KeplerPerm { seed } => Some(*seed),
            _ => None,
        }
    }
}

impl fmt::Display for OrderingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderingId::KeplerPerm { seed } => write!(f, "kepler-perm(seed={seed})"),
            other => f.write_str(other.name()),
        }
    }
}

/// A word together with its place in the Kepler tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNode {
    pub word: CFWord,
    pub level: u64,
    pub pos: BigUint,
}

impl TreeNode {
    pub fn from_word(word: CFWord) -> Self {
        let level = word.level();
        let pos = cf_to_code(&word).value();
        TreeNode { word, level, pos }
    }
}

pub fn kepler_children(w: &CFWord) -> (CFWord, CFWord) {
    let mut left = w.digits().to_vec();
    left[0] += 1;
    let mut right = Vec::with_capacity(w.len() + 1);
    right.push(1);
    right.extend_from_slice(w.digits());
    (
        CFWord::from_digits_unchecked(left),
        CFWord::from_digits_unchecked(right),
    )
}

/// Kepler rule in rational form: `p/q -> (p/(p+q), q/(p+q))`.
pub fn kepler_children_rational(r: &Rational) -> (Rational, Rational) {
    let s = r.numer() + r.denom();
    (
        Rational::new(r.numer().clone(), s.clone()).expect("p/(p+q) lies in (0,1)"),
        Rational::new(r.denom().clone(), s).expect("q/(p+q) lies in (0,1)"),
    )
}

/// Writes the digits of the word with path code `pos` (`level` bits) into
/// `buf`. The code is consumed from its last bit: every run of zeros closed
/// by a one contributes `run + 1`, the leading run contributes `run + 2`.
pub fn kepler_word_into(level: u64, pos: u64, buf: &mut Vec<u64>) {
    debug_assert!(level <= MAX_LEVEL && (level == 64 || pos >> level == 0));
    buf.clear();
    let mut v = pos;
    let mut remaining = level;
    while v != 0 {
        let tz = v.trailing_zeros() as u64;
        buf.push(tz + 1);
        v >>= tz;
        v >>= 1;
        remaining -= tz + 1;
    }
    buf.push(remaining + 2);
}

/// Number of digits of the Kepler word at `pos`: one per right move, plus one.
pub fn kepler_word_len(pos: u64) -> u64 {
    pos.count_ones() as u64 + 1
}

fn check_level(level: u64) -> Result<()> {
    if level > MAX_LEVEL {
        return Err(Error::Budget(format!(
            "level {level} exceeds the enumerable maximum {MAX_LEVEL}"
        )));
    }
    Ok(())
}

/// Streaming iterator over one Kepler level, left to right.
#[derive(Clone, Debug)]
pub struct KeplerLevel {
    level: u64,
    next: u64,
    end: u64,
}

impl Iterator for KeplerLevel {
    type Item = CFWord;

    fn next(&mut self) -> Option<CFWord> {
        if self.next >= self.end {
            return None;
        }
        let mut buf = Vec::new();
        kepler_word_into(self.level, self.next, &mut buf);
        self.next += 1;
        Some(CFWord::from_digits_unchecked(buf))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

pub fn kepler_level(level: u64) -> Result<KeplerLevel> {
    check_level(level)?;
    Ok(KeplerLevel {
        level,
        next: 0,
        end: 1u64 << level,
    })
}

/// All Kepler words of levels `0..levels`, top-down and left-right.
pub fn kepler_words(levels: u64) -> Result<impl Iterator<Item = CFWord>> {
    if levels > 0 {
        check_level(levels - 1)?;
    }
    Ok((0..levels).flat_map(|l| kepler_level(l).expect("level checked")))
}

/// Closed form for the `n`-th rational of the Kepler ordering: with
/// `n = 2^α1 + ... + 2^αk`, `α1 < ... < αk`, the word is `[k + 2]` when `n`
/// is a power of two and `[α1 + 1, α2 - α1, ..., αk - α(k-1) + 1]` otherwise.
pub fn q_of_n(n: &BigUint) -> Result<CFWord> {
    if n.is_zero() {
        return Err(Error::InvalidArgument("q(n) is defined for n >= 1".into()));
    }
    let exponents: Vec<u64> = (0..n.bits()).filter(|&i| n.bit(i)).collect();
    let k = exponents.len();
    if k == 1 {
        return Ok(CFWord::from_digits_unchecked(vec![exponents[0] + 2]));
    }
    let mut digits = Vec::with_capacity(k);
    digits.push(exponents[0] + 1);
    for pair in exponents.windows(2) {
        digits.push(pair[1] - pair[0]);
    }
    *digits.last_mut().expect("k >= 2") += 1;
    Ok(CFWord::from_digits_unchecked(digits))
}

pub fn q_of_n_u64(n: u64) -> Result<CFWord> {
    q_of_n(&BigUint::from(n))
}

/// 1-based position of `w` in the Kepler ordering: `2^level + code value`.
pub fn kepler_index(w: &CFWord) -> BigUint {
    (BigUint::one() << w.level()) + cf_to_code(w).value()
}

/// Farey-tree rule: odd length `([.., an + 1], [.., an - 1, 2])`, even length
/// the same pair swapped.
pub fn farey_children(w: &CFWord) -> (CFWord, CFWord) {
    let mut bumped = w.digits().to_vec();
    *bumped.last_mut().expect("nonempty") += 1;
    let mut split = w.digits().to_vec();
    *split.last_mut().expect("nonempty") -= 1;
    split.push(2);
    let bumped = CFWord::from_digits_unchecked(bumped);
    let split = CFWord::from_digits_unchecked(split);
    if w.len() % 2 == 1 {
        (bumped, split)
    } else {
        (split, bumped)
    }
}

/// Writes the Farey word at `(level, pos)` into `buf` by descending from the
/// root along the bits of `pos`, most significant first.
pub fn farey_word_into(level: u64, pos: u64, buf: &mut Vec<u64>) {
    buf.clear();
    buf.push(2);
    for i in (0..level).rev() {
        let right = (pos >> i) & 1 == 1;
        let odd = buf.len() % 2 == 1;
        if right != odd {
            // left child of an odd word or right child of an even word
            *buf.last_mut().expect("nonempty") += 1;
        } else {
            *buf.last_mut().expect("nonempty") -= 1;
            buf.push(2);
        }
    }
}

/// Streaming iterator over one Farey level, left to right.
#[derive(Clone, Debug)]
pub struct FareyLevel {
    level: u64,
    next: u64,
    end: u64,
}

impl Iterator for FareyLevel {
    type Item = CFWord;

    fn next(&mut self) -> Option<CFWord> {
        if self.next >= self.end {
            return None;
        }
        let mut buf = Vec::new();
        farey_word_into(self.level, self.next, &mut buf);
        self.next += 1;
        Some(CFWord::from_digits_unchecked(buf))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

pub fn farey_level(level: u64) -> Result<FareyLevel> {
    check_level(level)?;
    Ok(FareyLevel {
        level,
        next: 0,
        end: 1u64 << level,
    })
}

/// Materializes Farey level `level` by breadth-first application of
/// [`farey_children`] from the root.
pub fn farey_level_bfs(level: u64) -> Result<Vec<CFWord>> {
    if level > MAX_BFS_LEVEL {
        return Err(Error::Budget(format!(
            "breadth-first Farey level {level} exceeds {MAX_BFS_LEVEL}"
        )));
    }
    let mut current = vec![CFWord::from_digits_unchecked(vec![2])];
    for _ in 0..level {
        current = current
            .iter()
            .flat_map(|w| {
                let (l, r) = farey_children(w);
                [l, r]
            })
            .collect();
    }
    Ok(current)
}

/// Iterator over `p/n` for `n = 2, 3, ...` and `p = 1..n`, reduced to lowest
/// terms. Non-reduced fractions such as `2/4` are kept as occurrences.
#[derive(Clone, Debug)]
pub struct AksRationals {
    den: u64,
    num: u64,
    limit_den: Option<u64>,
}

impl AksRationals {
    pub fn unbounded() -> Self {
        AksRationals {
            den: 2,
            num: 1,
            limit_den: None,
        }
    }
}

impl Iterator for AksRationals {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        if self.limit_den.is_some_and(|lim| self.den > lim) {
            return None;
        }
        let r = Rational::from_u64(self.num, self.den).expect("0 < p < n");
        self.num += 1;
        if self.num == self.den {
            self.den += 1;
            self.num = 1;
        }
        Some(r)
    }
}

pub fn aks_sequence(limit_den: u64) -> Result<Vec<Rational>> {
    if limit_den < 2 {
        return Err(Error::InvalidArgument(format!(
            "denominator limit must be at least 2, got {limit_den}"
        )));
    }
    Ok(AksRationals {
        den: 2,
        num: 1,
        limit_den: Some(limit_den),
    }
    .collect())
}

/// Continued fraction of `p/n` reduced, written into `buf` (u64 Euclid).
pub fn aks_word_into(num: u64, den: u64, buf: &mut Vec<u64>) {
    let g = num.gcd(&den);
    let (mut p, mut q) = (num / g, den / g);
    buf.clear();
    while p != 0 {
        buf.push(q / p);
        let r = q % p;
        q = p;
        p = r;
    }
}

/// Counts reduced words with digit sum `s` by walking every composition of
/// `s` and keeping those whose last part is at least 2. Deliberately does not
/// touch the tree code it is used to check.
pub fn count_words_with_sum(s: u64) -> Result<u64> {
    if s > MAX_ENUMERATED_SUM {
        return Err(Error::Budget(format!(
            "digit sum {s} exceeds the enumeration budget {MAX_ENUMERATED_SUM}"
        )));
    }
    fn walk(remaining: u64, last: u64, count: &mut u64) {
        if remaining == 0 {
            if last >= 2 {
                *count += 1;
            }
            return;
        }
        for part in 1..=remaining {
            walk(remaining - part, part, count);
        }
    }
    let mut count = 0;
    if s > 0 {
        walk(s, 0, &mut count);
    }
    Ok(count)
}

/// Total digits in Kepler level `l`: `(l + 2) 2^(l-1)`, and 1 for the root.
pub fn level_digit_count(level: u64) -> BigUint {
    if level == 0 {
        return BigUint::one();
    }
    BigUint::from(level + 2) << (level - 1)
}

/// Digits in levels `0..levels`, i.e. `L 2^(L-1)`.
pub fn cumulative_digit_count(levels: u64) -> BigUint {
    if levels == 0 {
        return BigUint::zero();
    }
    BigUint::from(levels) << (levels - 1)
}

/// `u64` form of [`cumulative_digit_count`] for stream cutoffs.
pub fn cumulative_digit_count_u64(levels: u64) -> Option<u64> {
    cumulative_digit_count(levels).to_u64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn w(d: &[u64]) -> CFWord {
        CFWord::new(d.to_vec()).unwrap()
    }

    fn words(list: &[&[u64]]) -> Vec<CFWord> {
        list.iter().map(|d| w(d)).collect()
    }

    #[test]
    fn kepler_children_examples() {
        assert_eq!(kepler_children(&w(&[2])), (w(&[3]), w(&[1, 2])));
        assert_eq!(kepler_children(&w(&[1, 2])), (w(&[2, 2]), w(&[1, 1, 2])));
        assert_eq!(kepler_children(&w(&[4])), (w(&[5]), w(&[1, 4])));
    }

    #[test]
    fn kepler_children_agree_with_rational_rule() {
        for word in kepler_words(9).unwrap() {
            let (l, r) = kepler_children(&word);
            let (lr, rr) = kepler_children_rational(&word.to_rational());
            assert_eq!(l.to_rational(), lr);
            assert_eq!(r.to_rational(), rr);
        }
    }

    #[test]
    fn kepler_level_examples() {
        assert_eq!(kepler_level(0).unwrap().collect::<Vec<_>>(), words(&[&[2]]));
        assert_eq!(
            kepler_level(2).unwrap().collect::<Vec<_>>(),
            words(&[&[4], &[1, 3], &[2, 2], &[1, 1, 2]])
        );
        assert_eq!(kepler_level(3).unwrap().next(), Some(w(&[5])));
        assert!(matches!(kepler_level(64), Err(Error::Budget(_))));
    }

    #[test]
    fn fast_words_match_code_replay() {
        for level in 0..=12u64 {
            let mut buf = Vec::new();
            for pos in 0..(1u64 << level) {
                kepler_word_into(level, pos, &mut buf);
                let slow =
                    crate::cf::code_to_cf(&crate::cf::PathCode::from_index(pos, level as u32));
                assert_eq!(buf.as_slice(), slow.digits());
                assert_eq!(buf.len() as u64, kepler_word_len(pos));
            }
        }
    }

    #[test]
    fn q_of_n_examples() {
        assert_eq!(q_of_n_u64(8).unwrap(), w(&[5]));
        assert_eq!(q_of_n_u64(7).unwrap(), w(&[1, 1, 2]));
        assert_eq!(q_of_n_u64(6).unwrap(), w(&[2, 2]));
        assert_eq!(q_of_n_u64(1).unwrap(), w(&[2]));
        assert!(q_of_n_u64(0).is_err());
    }

    #[test]
    fn kepler_index_examples() {
        assert_eq!(kepler_index(&w(&[2])), BigUint::from(1u32));
        assert_eq!(kepler_index(&w(&[1, 3])), BigUint::from(5u32));
        assert_eq!(kepler_index(&w(&[2, 2])), BigUint::from(6u32));
        assert_eq!(q_of_n_u64(6).unwrap(), w(&[2, 2]));
    }

    #[test]
    fn q_of_n_matches_enumeration() {
        for (i, word) in kepler_words(13).unwrap().enumerate() {
            let n = i as u64 + 1;
            assert_eq!(q_of_n_u64(n).unwrap(), word, "n = {n}");
            assert_eq!(kepler_index(&word), BigUint::from(n));
        }
    }

    #[test]
    fn kepler_index_is_a_bijection_onto_prefix() {
        let levels = 10;
        let seen: HashSet<BigUint> = kepler_words(levels)
            .unwrap()
            .map(|w| kepler_index(&w))
            .collect();
        let expected: HashSet<BigUint> = (1u64..(1 << levels)).map(BigUint::from).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn farey_children_examples() {
        assert_eq!(farey_children(&w(&[2])), (w(&[3]), w(&[1, 2])));
        assert_eq!(farey_children(&w(&[3])), (w(&[4]), w(&[2, 2])));
        assert_eq!(farey_children(&w(&[1, 2])), (w(&[1, 1, 2]), w(&[1, 3])));
    }

    #[test]
    fn farey_descent_matches_bfs() {
        for level in 0..=12 {
            let bfs = farey_level_bfs(level).unwrap();
            let descent: Vec<_> = farey_level(level).unwrap().collect();
            assert_eq!(bfs, descent, "level {level}");
        }
        assert!(farey_level_bfs(MAX_BFS_LEVEL + 1).is_err());
    }

    #[test]
    fn farey_rational_prefix() {
        let got: Vec<String> = (0..=3)
            .flat_map(|l| farey_level(l).unwrap())
            .take(8)
            .map(|w| w.to_rational().to_string())
            .collect();
        assert_eq!(
            got,
            ["1/2", "1/3", "2/3", "1/4", "2/5", "3/5", "3/4", "1/5"]
        );
    }

    #[test]
    fn child_sum_law() {
        for word in kepler_words(10).unwrap() {
            let s = word.digit_sum();
            let (a, b) = kepler_children(&word);
            let (c, d) = farey_children(&word);
            for child in [a, b, c, d] {
                assert_eq!(child.digit_sum(), s + 1);
            }
        }
    }

    #[test]
    fn aks_examples() {
        let seq = aks_sequence(3).unwrap();
        let shown: Vec<String> = seq.iter().map(|r| r.to_string()).collect();
        assert_eq!(shown, ["1/2", "1/3", "2/3"]);

        let digits: Vec<u64> = aks_sequence(4)
            .unwrap()
            .iter()
            .flat_map(|r| r.to_cf().unwrap().into_digits())
            .collect();
        assert_eq!(digits, [2, 3, 1, 2, 4, 2, 1, 3]);

        assert_eq!(aks_sequence(5).unwrap().last().unwrap().to_string(), "4/5");
        assert!(aks_sequence(1).is_err());

        let mut buf = Vec::new();
        for r in aks_sequence(30).unwrap() {
            // only reduced values are produced; reuse them as (p, q)
            let (p, q) = (r.numer().to_u64().unwrap(), r.denom().to_u64().unwrap());
            aks_word_into(p * 3, q * 3, &mut buf);
            assert_eq!(buf.as_slice(), r.to_cf().unwrap().digits());
        }
    }

    #[test]
    fn word_count_examples() {
        assert_eq!(count_words_with_sum(2).unwrap(), 1);
        assert_eq!(count_words_with_sum(4).unwrap(), 4);
        assert_eq!(count_words_with_sum(10).unwrap(), 256);
        assert_eq!(count_words_with_sum(1).unwrap(), 0);
        assert!(count_words_with_sum(MAX_ENUMERATED_SUM + 1).is_err());
    }

    #[test]
    fn level_digit_count_examples() {
        assert_eq!(level_digit_count(0), BigUint::from(1u32));
        assert_eq!(level_digit_count(1), BigUint::from(3u32));
        assert_eq!(level_digit_count(2), BigUint::from(8u32));
        for level in 0..=14 {
            let direct: u64 = kepler_level(level).unwrap().map(|w| w.len() as u64).sum();
            assert_eq!(level_digit_count(level), BigUint::from(direct));
        }
    }

    #[test]
    fn ordering_ids() {
        assert_eq!(
            OrderingId::parse("kepler", None).unwrap(),
            OrderingId::Kepler
        );
        assert_eq!(
            OrderingId::parse("kepler-perm", Some(3)).unwrap(),
            OrderingId::KeplerPerm { seed: 3 }
        );
        assert!(OrderingId::parse("kepler-perm", None).is_err());
        assert!(OrderingId::parse("farey", Some(1)).is_err());
        assert!(OrderingId::parse("stern-brocot", None).is_err());
    }

    #[test]
    fn tree_node_positions() {
        let node = TreeNode::from_word(w(&[2, 2]));
        assert_eq!(node.level, 2);
        assert_eq!(node.pos, BigUint::from(2u32));
    }
}
