//! Lazy digit streams: the continued-fraction digits of `K` (Kepler order),
//! its per-level permutations, the Farey number and `x_aks`, plus the binary
//! Champernowne stream `C2` made of the Kepler path codes.
//!
//! Every stream is organized in levels. For the tree orderings level `l`
//! holds `2^l` words; for `x_aks` level `l` holds the `l + 1` fractions with
//! denominator `l + 2`. A position inside a stream is therefore the triple
//! `(level, slot in level, offset in word)`, which is also the checkpoint
//! format.

use std::fmt;
use std::io::{self, Read, Write};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::cf::{CFWord, PathCode};
use crate::error::{Error, Result};
use crate::measures::convergent_pair;
use crate::perm::{LevelPermutation, MAX_PERM_LEVEL};
use crate::tree::{self, OrderingId, MAX_LEVEL};

/// Largest `x_aks` level (denominator `level + 2`) a stream will reach.
pub const MAX_AKS_LEVEL: u64 = u32::MAX as u64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StreamSource {
    /// Continued-fraction digits of the words of an ordering.
    Digits(OrderingId),
    /// Kepler path codes, bit by bit; `seed` permutes each level like
    /// `kepler-perm` does.
    CodeBits { seed: Option<u64> },
}

impl From<OrderingId> for StreamSource {
    fn from(o: OrderingId) -> Self {
        StreamSource::Digits(o)
    }
}

impl StreamSource {
    fn perm_seed(&self) -> Option<u64> {
        match *self {
            StreamSource::Digits(OrderingId::KeplerPerm { seed }) => Some(seed),
            StreamSource::CodeBits { seed } => seed,
            _ => None,
        }
    }

    pub fn is_bits(&self) -> bool {
        matches!(self, StreamSource::CodeBits { .. })
    }

    pub fn max_level(&self) -> u64 {
        match self {
            StreamSource::Digits(OrderingId::Aks) => MAX_AKS_LEVEL,
            _ if self.perm_seed().is_some() => MAX_PERM_LEVEL,
            _ => MAX_LEVEL,
        }
    }

    /// Number of words in `level`.
    pub fn level_size(&self, level: u64) -> u64 {
        match self {
            StreamSource::Digits(OrderingId::Aks) => level + 1,
            _ => 1u64 << level,
        }
    }

    /// 0-based index, within the whole ordering, of the word at `(level, slot)`.
    pub fn word_index(&self, level: u64, slot: u64) -> u64 {
        match self {
            StreamSource::Digits(OrderingId::Aks) => level * (level + 1) / 2 + slot,
            _ => (1u64 << level) - 1 + slot,
        }
    }

    /// Symbols emitted by all levels below `level`. Closed forms for the tree
    /// orderings (`l 2^(l-1)` digits, `(l-2) 2^l + 2` bits); `x_aks` is summed.
    pub fn symbols_before_level(&self, level: u64) -> Result<u64> {
        let overflow = || Error::Budget(format!("symbol count before level {level} overflows u64"));
        if level == 0 {
            return Ok(0);
        }
        match self {
            StreamSource::Digits(OrderingId::Aks) => {
                let mut total = 0u64;
                let mut buf = Vec::new();
                for l in 0..level {
                    let den = l + 2;
                    for num in 1..den {
                        tree::aks_word_into(num, den, &mut buf);
                        total = total.checked_add(buf.len() as u64).ok_or_else(overflow)?;
                    }
                }
                Ok(total)
            }
            StreamSource::Digits(_) => tree::cumulative_digit_count_u64(level).ok_or_else(overflow),
            StreamSource::CodeBits { .. } => {
                if level > 58 {
                    return Err(overflow());
                }
                Ok(((level as i128 - 2) * (1i128 << level) + 2) as u64)
            }
        }
    }
}

/// Walks the words of a source in order and keeps the current one in a buffer.
#[derive(Clone, Debug)]
pub struct WordCursor {
    source: StreamSource,
    level: u64,
    slot: u64,
    perm: Option<LevelPermutation>,
    buf: Vec<u64>,
    done: bool,
}

impl WordCursor {
    pub fn new(source: StreamSource) -> Self {
        Self::at(source, 0, 0).expect("origin is always valid")
    }

    /// Cursor positioned on the word at `(level, slot)`.
    pub fn at(source: StreamSource, level: u64, slot: u64) -> Result<Self> {
        if level > source.max_level() {
            return Err(Error::Checkpoint(format!(
                "level {level} exceeds {} for this stream",
                source.max_level()
            )));
        }
        if slot >= source.level_size(level) {
            return Err(Error::Checkpoint(format!(
                "slot {slot} is outside level {level} ({} words)",
                source.level_size(level)
            )));
        }
        let mut c = WordCursor {
            source,
            level,
            slot,
            perm: None,
            buf: Vec::new(),
            done: false,
        };
        c.load()?;
        Ok(c)
    }

    /// Repositions the cursor, reusing the level permutation when possible.
    pub fn seek(&mut self, level: u64, slot: u64) -> Result<()> {
        if level > self.source.max_level() || slot >= self.source.level_size(level) {
            return Err(Error::Checkpoint(format!(
                "no word at level {level}, slot {slot}"
            )));
        }
        self.level = level;
        self.slot = slot;
        self.done = false;
        self.load()
    }

    fn ensure_perm(&mut self) -> Result<()> {
        if let Some(seed) = self.source.perm_seed() {
            if self.perm.as_ref().map(|p| p.level()) != Some(self.level) {
                self.perm = Some(LevelPermutation::new(self.level, seed)?);
            }
        }
        Ok(())
    }

    fn load(&mut self) -> Result<()> {
        self.ensure_perm()?;
        let pos = match &self.perm {
            Some(p) => p.get(self.slot),
            None => self.slot,
        };
        match self.source {
            StreamSource::Digits(OrderingId::Kepler | OrderingId::KeplerPerm { .. }) => {
                tree::kepler_word_into(self.level, pos, &mut self.buf)
            }
            StreamSource::Digits(OrderingId::Farey) => {
                tree::farey_word_into(self.level, pos, &mut self.buf)
            }
            StreamSource::Digits(OrderingId::Aks) => {
                tree::aks_word_into(pos + 1, self.level + 2, &mut self.buf)
            }
            StreamSource::CodeBits { .. } => {
                self.buf.clear();
                self.buf
                    .extend((0..self.level).rev().map(|i| (pos >> i) & 1));
            }
        }
        Ok(())
    }

    /// Moves to the next word; returns false once the source's level budget
    /// is exhausted.
    pub fn advance(&mut self) -> bool {
        if self.done {
            return false;
        }
        self.slot += 1;
        if self.slot >= self.source.level_size(self.level) {
            self.slot = 0;
            self.level += 1;
            if self.level > self.source.max_level() {
                self.done = true;
                self.buf.clear();
                return false;
            }
        }
        if self.load().is_err() {
            self.done = true;
            self.buf.clear();
            return false;
        }
        true
    }

    pub fn word(&self) -> &[u64] {
        &self.buf
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn word_index(&self) -> u64 {
        self.source.word_index(self.level, self.slot)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }
}

/// One emitted symbol with the word it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamDigit {
    pub value: u64,
    /// 0-based index of the word in the ordering.
    pub word: u64,
    /// Offset of the symbol inside its word.
    pub offset: u64,
    /// Whether this symbol ends its word.
    pub last: bool,
}

impl From<StreamDigit> for u64 {
    fn from(d: StreamDigit) -> u64 {
        d.value
    }
}

/// `(level, slot in level, offset in word)` of the next symbol to emit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Checkpoint {
    pub level: u64,
    pub slot: u64,
    pub offset: u64,
}

impl fmt::Display for Checkpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.level)?;
        writeln!(f, "{}", self.slot)?;
        writeln!(f, "{}", self.offset)
    }
}

impl FromStr for Checkpoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let fields: Vec<u64> = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|l| l.parse().map_err(|_| Error::parse("checkpoint", s)))
            .collect::<Result<_>>()?;
        match fields.as_slice() {
            &[level, slot, offset] => Ok(Checkpoint {
                level,
                slot,
                offset,
            }),
            _ => Err(Error::parse("checkpoint", s)),
        }
    }
}

/// A resumable, single-consumer stream of digits (or bits).
#[derive(Clone, Debug)]
pub struct DigitStream {
    cursor: WordCursor,
    offset: u64,
    position: u64,
}

impl DigitStream {
    pub fn new(source: impl Into<StreamSource>) -> Self {
        let mut s = DigitStream {
            cursor: WordCursor::new(source.into()),
            offset: 0,
            position: 0,
        };
        s.settle();
        s
    }

    /// Continues a stream from a checkpoint taken earlier. The absolute
    /// position is recomputed from the levels and words skipped.
    pub fn resume(source: impl Into<StreamSource>, cp: Checkpoint) -> Result<Self> {
        let source = source.into();
        let cursor = WordCursor::at(source, cp.level, cp.slot)?;
        let len = cursor.word().len() as u64;
        if cp.offset >= len && !(len == 0 && cp.offset == 0) {
            return Err(Error::Checkpoint(format!(
                "offset {} is outside a word of length {len}",
                cp.offset
            )));
        }
        let mut position = source.symbols_before_level(cp.level)?;
        let mut scan = WordCursor::at(source, cp.level, 0)?;
        while scan.slot() < cp.slot {
            position += scan.word().len() as u64;
            scan.advance();
        }
        let mut s = DigitStream {
            cursor,
            offset: cp.offset,
            position: position + cp.offset,
        };
        s.settle();
        Ok(s)
    }

    fn settle(&mut self) {
        while self.offset >= self.cursor.word().len() as u64 {
            if !self.cursor.advance() {
                return;
            }
            self.offset = 0;
        }
    }

    pub fn source(&self) -> StreamSource {
        self.cursor.source
    }

    /// Number of symbols emitted so far (0-based position of the next one).
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            level: self.cursor.level(),
            slot: self.cursor.slot(),
            offset: self.offset,
        }
    }

    /// Plain symbol values, without boundary metadata.
    pub fn values(self) -> impl Iterator<Item = u64> {
        self.map(|d| d.value)
    }
}

impl Iterator for DigitStream {
    type Item = StreamDigit;

    fn next(&mut self) -> Option<StreamDigit> {
        if self.cursor.is_done() {
            return None;
        }
        let word = self.cursor.word();
        let len = word.len() as u64;
        let digit = StreamDigit {
            value: word[self.offset as usize],
            word: self.cursor.word_index(),
            offset: self.offset,
            last: self.offset + 1 == len,
        };
        self.offset += 1;
        self.position += 1;
        self.settle();
        Some(digit)
    }
}

pub fn kepler_stream() -> DigitStream {
    DigitStream::new(OrderingId::Kepler)
}

pub fn kepler_perm_stream(seed: u64) -> DigitStream {
    DigitStream::new(OrderingId::KeplerPerm { seed })
}

pub fn farey_stream() -> DigitStream {
    DigitStream::new(OrderingId::Farey)
}

pub fn aks_stream() -> DigitStream {
    DigitStream::new(OrderingId::Aks)
}

/// `C2 = 0. 0 1 00 01 10 11 000 ...`
pub fn champernowne_bits() -> DigitStream {
    DigitStream::new(StreamSource::CodeBits { seed: None })
}

/// `C2` with each level's codes in `kepler-perm` order.
pub fn champernowne_perm_bits(seed: u64) -> DigitStream {
    DigitStream::new(StreamSource::CodeBits { seed: Some(seed) })
}

/// Words of an ordering, in order.
pub fn ordering_words(order: OrderingId) -> impl Iterator<Item = CFWord> {
    let mut cursor = WordCursor::new(order.into());
    let mut first = true;
    std::iter::from_fn(move || {
        if !first && !cursor.advance() {
            return None;
        }
        first = false;
        Some(CFWord::from_digits_unchecked(cursor.word().to_vec()))
    })
}

/// Path codes in `C2` order (identity or permuted levels).
pub fn code_words(seed: Option<u64>) -> impl Iterator<Item = PathCode> {
    let mut cursor = WordCursor::new(StreamSource::CodeBits { seed });
    let mut first = true;
    std::iter::from_fn(move || {
        if !first && !cursor.advance() {
            return None;
        }
        first = false;
        Some(PathCode::new(
            cursor.word().iter().map(|&b| b == 1).collect(),
        ))
    })
}

/// Brackets the value of an infinite continued fraction by its `m`-th and
/// `(m+1)`-th convergents. Returns `(lower, upper)`.
pub fn stream_to_real<I>(digits: I, m: u64) -> Result<(BigRational, BigRational)>
where
    I: IntoIterator,
    I::Item: Into<u64>,
{
    if m == 0 {
        return Err(Error::InvalidArgument(
            "convergent index must be at least 1".into(),
        ));
    }
    let prefix: Vec<u64> = digits
        .into_iter()
        .take((m + 1) as usize)
        .map(Into::into)
        .collect();
    if (prefix.len() as u64) < m + 1 {
        return Err(Error::StreamExhausted {
            got: prefix.len() as u64,
            needed: m + 1,
        });
    }
    let (p_next, q_next, p, q) = convergent_pair(&prefix);
    let a = BigRational::new(p, q);
    let b = BigRational::new(p_next, q_next);
    Ok(if a <= b { (a, b) } else { (b, a) })
}

/// Midpoint of a bracket as an `f64`.
pub fn bracket_midpoint(lo: &BigRational, hi: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    ((lo + hi) / BigRational::from_integer(BigInt::from(2)))
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Unsigned LEB128, one value per digit.
pub fn write_leb128<W: Write + ?Sized>(out: &mut W, mut value: u64) -> io::Result<()> {
    loop {
        let byte = (value & 0x7f) as u8;
        value >>= 7;
        if value == 0 {
            return out.write_all(&[byte]);
        }
        out.write_all(&[byte | 0x80])?;
    }
}

/// Reads one LEB128 value; `Ok(None)` at a clean end of input.
pub fn read_leb128<R: Read>(input: &mut R) -> io::Result<Option<u64>> {
    let mut value = 0u64;
    let mut shift = 0u32;
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            return if shift == 0 {
                Ok(None)
            } else {
                Err(io::Error::new(
                    io::ErrorKind::UnexpectedEof,
                    "truncated LEB128 value",
                ))
            };
        }
        if shift >= 64 {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "LEB128 value overflows u64",
            ));
        }
        value |= u64::from(byte[0] & 0x7f) << shift;
        if byte[0] & 0x80 == 0 {
            return Ok(Some(value));
        }
        shift += 7;
    }
}

/// Packs bits eight per byte, most significant bit first; the final byte is
/// zero-padded.
pub fn pack_bits<I: IntoIterator<Item = u64>>(bits: I) -> Vec<u8> {
    let mut out = Vec::new();
    let mut acc = 0u8;
    let mut n = 0;
    for b in bits {
        acc = (acc << 1) | (b & 1) as u8;
        n += 1;
        if n == 8 {
            out.push(acc);
            acc = 0;
            n = 0;
        }
    }
    if n > 0 {
        out.push(acc << (8 - n));
    }
    out
}

pub fn unpack_bits(bytes: &[u8], count: usize) -> Vec<u64> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| u64::from((b >> i) & 1)))
        .take(count)
        .collect()
}
