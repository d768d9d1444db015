//! Block-frequency analysis of digit streams.
//!
//! Occurrences are counted with overlap: `G_n(x, d)` is the number of start
//! positions `i` in `1..=n-k+1` where digits `i..i+k-1` equal `d`. Each
//! occurrence is also classified by how it sits relative to the words of the
//! stream: inside a word at its start, strictly inside, finishing the word,
//! or divided across a junction. An occurrence that is a whole word finishes
//! it and counts as `end`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{BlockQuery, Rational};
use crate::dyadic::DyadicRational;
use crate::error::{Error, Result};
use crate::measures::{cylinder_gauss, cylinder_qmark, qmark_of};
use crate::streams::{
    champernowne_bits, champernowne_perm_bits, kepler_perm_stream, kepler_stream, ordering_words,
    DigitStream, StreamDigit, StreamSource, WordCursor,
};
use crate::tree::OrderingId;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccurrenceClass {
    Start,
    Middle,
    End,
    Divided,
}

impl OccurrenceClass {
    /// Class of an occurrence given its first and last symbol.
    pub fn of(first: &StreamDigit, last: &StreamDigit) -> Self {
        if first.word != last.word {
            OccurrenceClass::Divided
        } else if last.last {
            OccurrenceClass::End
        } else if first.offset == 0 {
            OccurrenceClass::Start
        } else {
            OccurrenceClass::Middle
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct OccurrenceBreakdown {
    pub start: u64,
    pub middle: u64,
    pub end: u64,
    pub divided: u64,
}

impl OccurrenceBreakdown {
    pub fn total(&self) -> u64 {
        self.start + self.middle + self.end + self.divided
    }

    fn record(&mut self, class: OccurrenceClass) {
        match class {
            OccurrenceClass::Start => self.start += 1,
            OccurrenceClass::Middle => self.middle += 1,
            OccurrenceClass::End => self.end += 1,
            OccurrenceClass::Divided => self.divided += 1,
        }
    }

    fn add(&mut self, other: &Self) {
        self.start += other.start;
        self.middle += other.middle;
        self.end += other.end;
        self.divided += other.divided;
    }
}

/// Rolling window over the last `max_k` symbols, counting every block of a
/// fixed set as the stream goes by.
#[derive(Clone, Debug)]
pub struct BlockScanner {
    blocks: Vec<BlockQuery>,
    ring: Vec<StreamDigit>,
    head: usize,
    seen: u64,
    counts: Vec<OccurrenceBreakdown>,
    prev: Option<StreamDigit>,
    junctions: u64,
    check_metadata: bool,
}

impl BlockScanner {
    pub fn new(blocks: &[BlockQuery]) -> Self {
        let cap = blocks.iter().map(BlockQuery::len).max().unwrap_or(1).max(1);
        let blank = StreamDigit {
            value: 0,
            word: 0,
            offset: 0,
            last: false,
        };
        BlockScanner {
            blocks: blocks.to_vec(),
            ring: vec![blank; cap],
            head: 0,
            seen: 0,
            counts: vec![OccurrenceBreakdown::default(); blocks.len()],
            prev: None,
            junctions: 0,
            check_metadata: true,
        }
    }

    /// Scanner for plain digit values, without boundary checks.
    fn values_only(blocks: &[BlockQuery]) -> Self {
        let mut s = Self::new(blocks);
        s.check_metadata = false;
        s
    }

    fn at_back(&self, j: usize) -> &StreamDigit {
        let cap = self.ring.len();
        &self.ring[(self.head + cap - 1 - j) % cap]
    }

    fn insert(&mut self, d: StreamDigit) -> Result<()> {
        if let Some(p) = self.prev {
            if self.check_metadata {
                let same_word = d.word == p.word && d.offset == p.offset + 1 && !p.last;
                let next_word = d.word > p.word && d.offset == 0 && p.last;
                if !(same_word || next_word) {
                    return Err(Error::BoundaryMetadata(self.seen));
                }
            }
            if d.word != p.word {
                self.junctions += 1;
            }
        }
        self.prev = Some(d);
        self.ring[self.head] = d;
        self.head = (self.head + 1) % self.ring.len();
        self.seen += 1;
        Ok(())
    }

    /// Feeds one symbol and counts the occurrences that end on it.
    pub fn push(&mut self, d: StreamDigit) -> Result<()> {
        self.insert(d)?;
        for b in 0..self.blocks.len() {
            let digits = self.blocks[b].digits();
            let k = digits.len();
            if (k as u64) > self.seen {
                continue;
            }
            if (0..k).all(|j| self.at_back(j).value == digits[k - 1 - j]) {
                let class = OccurrenceClass::of(self.at_back(k - 1), self.at_back(0));
                self.counts[b].record(class);
            }
        }
        Ok(())
    }

    /// Feeds a symbol as context only; occurrences ending on it are not counted.
    pub fn prime(&mut self, d: StreamDigit) -> Result<()> {
        self.insert(d)
    }

    pub fn counts(&self) -> &[OccurrenceBreakdown] {
        &self.counts
    }

    /// Symbols fed so far, primed ones included.
    pub fn seen(&self) -> u64 {
        self.seen
    }

    /// Word changes observed between consecutive symbols.
    pub fn junctions(&self) -> u64 {
        self.junctions
    }
}

fn plain(i: u64, value: u64) -> StreamDigit {
    StreamDigit {
        value,
        word: 0,
        offset: i,
        last: false,
    }
}

/// Result of [`count_block`]; `short` flags a cutoff smaller than the block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockCount {
    pub count: u64,
    pub short: bool,
}

/// `G_n(x, d)` over the first `n` symbols.
pub fn count_block<I>(digits: I, n: u64, d: &BlockQuery) -> Result<BlockCount>
where
    I: IntoIterator,
    I::Item: Into<u64>,
{
    if n < d.len() as u64 {
        return Ok(BlockCount {
            count: 0,
            short: true,
        });
    }
    let mut scanner = BlockScanner::values_only(std::slice::from_ref(d));
    let mut got = 0u64;
    for (i, v) in digits.into_iter().take(n as usize).enumerate() {
        scanner.push(plain(i as u64, v.into()))?;
        got += 1;
    }
    if got < n {
        return Err(Error::StreamExhausted { got, needed: n });
    }
    Ok(BlockCount {
        count: scanner.counts()[0].total(),
        short: false,
    })
}

/// Counts over an in-memory prefix split into chunks of `chunk` symbols.
/// Each chunk after the first is scanned with the `k - 1` preceding symbols
/// as context, then the chunk totals are summed in parallel.
pub fn count_block_chunked(digits: &[u64], d: &BlockQuery, chunk: usize) -> u64 {
    let k = d.len();
    let chunk = chunk.max(1);
    let starts: Vec<usize> = (0..digits.len()).step_by(chunk).collect();
    starts
        .par_iter()
        .map(|&start| {
            let end = (start + chunk).min(digits.len());
            let ctx = start.saturating_sub(k - 1);
            let mut scanner = BlockScanner::values_only(std::slice::from_ref(d));
            for (i, &v) in digits[ctx..start].iter().enumerate() {
                scanner.prime(plain(i as u64, v)).expect("unchecked");
            }
            for (i, &v) in digits[start..end].iter().enumerate() {
                scanner.push(plain(i as u64, v)).expect("unchecked");
            }
            scanner.counts()[0].total()
        })
        .sum()
}

/// Splits the occurrences of `d` in the first `n` symbols by class.
pub fn classify_occurrences<I>(stream: I, n: u64, d: &BlockQuery) -> Result<OccurrenceBreakdown>
where
    I: IntoIterator<Item = StreamDigit>,
{
    if n < d.len() as u64 {
        return Ok(OccurrenceBreakdown::default());
    }
    let mut scanner = BlockScanner::new(std::slice::from_ref(d));
    for digit in stream.into_iter().take(n as usize) {
        scanner.push(digit)?;
    }
    if scanner.seen() < n {
        return Err(Error::StreamExhausted {
            got: scanner.seen(),
            needed: n,
        });
    }
    Ok(scanner.counts()[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMeasure {
    Qmark,
    Gauss,
}

impl FromStr for TargetMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "qmark" => Ok(TargetMeasure::Qmark),
            "gauss" => Ok(TargetMeasure::Gauss),
            _ => Err(Error::parse("target measure", s)),
        }
    }
}

impl fmt::Display for TargetMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetMeasure::Qmark => "qmark",
            TargetMeasure::Gauss => "gauss",
        })
    }
}

/// A report cutoff: `n` symbols, printed as `label`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cutoff {
    pub label: String,
    pub n: u64,
}

impl Cutoff {
    pub fn at(n: u64) -> Self {
        Cutoff {
            label: n.to_string(),
            n,
        }
    }

    /// All symbols of levels `0..levels`.
    pub fn level(source: &StreamSource, levels: u64) -> Result<Self> {
        Ok(Cutoff {
            label: format!("level:{levels}"),
            n: source.symbols_before_level(levels)?,
        })
    }
}

/// Parses `level:<l1,l2,...>` or a comma-separated list of symbol counts.
pub fn parse_cutoffs(spec: &str, source: &StreamSource) -> Result<Vec<Cutoff>> {
    let spec = spec.trim();
    let (levels, list) = match spec.strip_prefix("level:") {
        Some(rest) => (true, rest),
        None => (false, spec),
    };
    list.split(',')
        .map(|t| {
            let v: u64 = t
                .trim()
                .parse()
                .map_err(|_| Error::parse("cutoff list", spec))?;
            if levels {
                Cutoff::level(source, v)
            } else {
                Ok(Cutoff::at(v))
            }
        })
        .collect()
}

/// Parses blocks separated by `;`, digits separated by `,`.
pub fn parse_blocks(spec: &str) -> Result<Vec<BlockQuery>> {
    spec.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect()
}

fn check_increasing(cutoffs: &[Cutoff]) -> Result<()> {
    if cutoffs.windows(2).any(|w| w[0].n >= w[1].n) {
        return Err(Error::InvalidArgument(
            "cutoffs must be strictly increasing".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyRow {
    pub cutoff: String,
    pub n_digits: u64,
    pub block: BlockQuery,
    pub count: u64,
    pub freq: Ratio<u64>,
    pub target: f64,
    /// Exact target when it is dyadic (question-mark measure).
    pub target_exact: Option<DyadicRational>,
    pub abs_err: f64,
    pub breakdown: OccurrenceBreakdown,
    /// Cutoff shorter than the block; the count is 0 by definition.
    pub short: bool,
}

impl FrequencyRow {
    fn build(
        cutoff: &Cutoff,
        block: &BlockQuery,
        counts: OccurrenceBreakdown,
        target: TargetMeasure,
    ) -> Self {
        let short = cutoff.n < block.len() as u64;
        let count = counts.total();
        let freq = if cutoff.n == 0 {
            Ratio::new_raw(0, 1)
        } else {
            Ratio::new(count, cutoff.n)
        };
        let (target_value, target_exact, abs_err) = match target {
            TargetMeasure::Qmark => {
                let t = cylinder_qmark(block);
                let exact_freq =
                    BigRational::new(BigInt::from(*freq.numer()), BigInt::from(*freq.denom()));
                let err = (exact_freq - t.to_big_rational())
                    .abs()
                    .to_f64()
                    .unwrap_or(f64::NAN);
                (t.to_f64(), Some(t), err)
            }
            TargetMeasure::Gauss => {
                let t = cylinder_gauss(block);
                let f = ratio_to_f64(&freq);
                (t, None, (f - t).abs())
            }
        };
        FrequencyRow {
            cutoff: cutoff.label.clone(),
            n_digits: cutoff.n,
            block: block.clone(),
            count,
            freq,
            target: target_value,
            target_exact,
            abs_err,
            breakdown: counts,
            short,
        }
    }

    pub fn freq_f64(&self) -> f64 {
        ratio_to_f64(&self.freq)
    }
}

fn ratio_to_f64(r: &Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportMeta {
    pub order: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub target: TargetMeasure,
}

impl ReportMeta {
    pub fn for_source(source: &StreamSource, target: TargetMeasure) -> Self {
        let (order, seed) = match source {
            StreamSource::Digits(o) => (o.name().to_string(), o.seed()),
            StreamSource::CodeBits { seed } => (
                if seed.is_some() {
                    "code-bits-perm"
                } else {
                    "code-bits"
                }
                .to_string(),
                *seed,
            ),
        };
        ReportMeta {
            order,
            seed,
            tool_version: TOOL_VERSION.to_string(),
            target,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyReport {
    pub meta: ReportMeta,
    pub rows: Vec<FrequencyRow>,
}

/// One pass over `stream`, one row per `(cutoff, block)` in that order.
pub fn scan_rows<I>(
    stream: I,
    cutoffs: &[Cutoff],
    blocks: &[BlockQuery],
    target: TargetMeasure,
) -> Result<Vec<FrequencyRow>>
where
    I: IntoIterator<Item = StreamDigit>,
{
    check_increasing(cutoffs)?;
    let mut scanner = BlockScanner::new(blocks);
    let mut rows = Vec::with_capacity(cutoffs.len() * blocks.len());
    let mut iter = stream.into_iter();
    for cutoff in cutoffs {
        while scanner.seen() < cutoff.n {
            match iter.next() {
                Some(d) => scanner.push(d)?,
                None => {
                    return Err(Error::StreamExhausted {
                        got: scanner.seen(),
                        needed: cutoff.n,
                    })
                }
            }
        }
        for (block, counts) in blocks.iter().zip(scanner.counts()) {
            rows.push(FrequencyRow::build(cutoff, block, *counts, target));
        }
    }
    Ok(rows)
}

pub fn frequency_report(
    stream: DigitStream,
    cutoffs: &[Cutoff],
    blocks: &[BlockQuery],
    target: TargetMeasure,
) -> Result<FrequencyReport> {
    let meta = ReportMeta::for_source(&stream.source(), target);
    Ok(FrequencyReport {
        meta,
        rows: scan_rows(stream, cutoffs, blocks, target)?,
    })
}

/// The last `need` symbols before `(level, slot)`, with their metadata.
fn symbols_before(
    source: StreamSource,
    level: u64,
    slot: u64,
    need: usize,
) -> Result<Vec<StreamDigit>> {
    let mut words: Vec<(u64, Vec<u64>)> = Vec::new();
    let mut have = 0usize;
    let (mut lv, mut sl) = (level, slot);
    let mut cursor: Option<WordCursor> = None;
    while have < need {
        if sl == 0 {
            if lv == 0 {
                break;
            }
            lv -= 1;
            sl = source.level_size(lv);
        }
        sl -= 1;
        match cursor.as_mut() {
            Some(c) => c.seek(lv, sl)?,
            None => cursor = Some(WordCursor::at(source, lv, sl)?),
        }
        let c = cursor.as_ref().expect("set above");
        have += c.word().len();
        words.push((c.word_index(), c.word().to_vec()));
    }
    let mut out: Vec<StreamDigit> = words
        .iter()
        .rev()
        .flat_map(|(index, w)| {
            let len = w.len() as u64;
            w.iter().enumerate().map(move |(i, &value)| StreamDigit {
                value,
                word: *index,
                offset: i as u64,
                last: i as u64 + 1 == len,
            })
        })
        .collect();
    let excess = out.len().saturating_sub(need);
    out.drain(..excess);
    Ok(out)
}

const SLOTS_PER_TASK: u64 = 1 << 16;

/// Per-level counts for levels `0..levels`, computed in parallel over slices
/// of each level. Every slice is primed with the `k - 1` symbols before it,
/// so results are identical to a sequential scan.
pub fn level_counts(
    source: StreamSource,
    levels: u64,
    blocks: &[BlockQuery],
    threads: usize,
) -> Result<Vec<Vec<OccurrenceBreakdown>>> {
    let context = blocks.iter().map(BlockQuery::len).max().unwrap_or(1) - 1;
    let mut tasks = Vec::new();
    for level in 0..levels {
        let size = source.level_size(level);
        let mut start = 0;
        while start < size {
            let end = (start + SLOTS_PER_TASK).min(size);
            tasks.push((level, start, end));
            start = end;
        }
    }
    let run = || {
        tasks
            .par_iter()
            .map(|&(level, start, end)| {
                let mut scanner = BlockScanner::new(blocks);
                for d in symbols_before(source, level, start, context)? {
                    scanner.prime(d)?;
                }
                let mut cursor = WordCursor::at(source, level, start)?;
                loop {
                    let index = cursor.word_index();
                    let w = cursor.word();
                    let len = w.len() as u64;
                    for (i, &value) in w.iter().enumerate() {
                        scanner.push(StreamDigit {
                            value,
                            word: index,
                            offset: i as u64,
                            last: i as u64 + 1 == len,
                        })?;
                    }
                    if cursor.slot() + 1 >= end {
                        break;
                    }
                    cursor.advance();
                }
                Ok((level, scanner.counts().to_vec()))
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = if threads == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run)?
    };
    let mut per_level = vec![vec![OccurrenceBreakdown::default(); blocks.len()]; levels as usize];
    for (level, counts) in results {
        for (acc, c) in per_level[level as usize].iter_mut().zip(&counts) {
            acc.add(c);
        }
    }
    Ok(per_level)
}

/// Same rows as [`frequency_report`] with cutoffs `level:L` for each of
/// `levels`, but computed by [`level_counts`]. `threads == 0` uses the
/// global pool.
pub fn frequency_report_by_levels(
    source: StreamSource,
    levels: &[u64],
    blocks: &[BlockQuery],
    target: TargetMeasure,
    threads: usize,
) -> Result<FrequencyReport> {
    let cutoffs: Vec<Cutoff> = levels
        .iter()
        .map(|&l| Cutoff::level(&source, l))
        .collect::<Result<_>>()?;
    check_increasing(&cutoffs)?;
    let max = levels.last().copied().unwrap_or(0);
    let per_level = level_counts(source, max, blocks, threads)?;
    let mut rows = Vec::new();
    for (cutoff, &l) in cutoffs.iter().zip(levels) {
        for (b, block) in blocks.iter().enumerate() {
            let mut total = OccurrenceBreakdown::default();
            for counts in &per_level[..l as usize] {
                total.add(&counts[b]);
            }
            rows.push(FrequencyRow::build(cutoff, block, total, target));
        }
    }
    Ok(FrequencyReport {
        meta: ReportMeta::for_source(&source, target),
        rows,
    })
}

const CSV_HEADER: [&str; 11] = [
    "cutoff", "n_digits", "block", "count", "freq", "target", "abs_err", "start", "middle", "end",
    "divided",
];

pub fn write_csv<W: Write>(report: &FrequencyReport, out: W) -> Result<()> {
    let ser = |e: csv::Error| Error::Serialize(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(ser)?;
    for r in &report.rows {
        w.write_record([
            r.cutoff.clone(),
            r.n_digits.to_string(),
            r.block.to_string(),
            r.count.to_string(),
            r.freq_f64().to_string(),
            r.target.to_string(),
            r.abs_err.to_string(),
            r.breakdown.start.to_string(),
            r.breakdown.middle.to_string(),
            r.breakdown.end.to_string(),
            r.breakdown.divided.to_string(),
        ])
        .map_err(ser)?;
    }
    w.flush().map_err(|e| Error::Serialize(e.to_string()))
}

#[derive(Serialize)]
struct JsonRow<'a> {
    cutoff: &'a str,
    n_digits: u64,
    block: String,
    count: u64,
    freq: f64,
    target: f64,
    abs_err: f64,
    start: u64,
    middle: u64,
    end: u64,
    divided: u64,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    meta: &'a ReportMeta,
    rows: Vec<JsonRow<'a>>,
}

pub fn write_json<W: Write>(report: &FrequencyReport, out: W) -> Result<()> {
    let doc = JsonReport {
        meta: &report.meta,
        rows: report
            .rows
            .iter()
            .map(|r| JsonRow {
                cutoff: &r.cutoff,
                n_digits: r.n_digits,
                block: r.block.to_string(),
                count: r.count,
                freq: r.freq_f64(),
                target: r.target,
                abs_err: r.abs_err,
                start: r.breakdown.start,
                middle: r.breakdown.middle,
                end: r.breakdown.end,
                divided: r.breakdown.divided,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(out, &doc).map_err(|e| Error::Serialize(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DividedRatio {
    pub levels: u64,
    pub n: u64,
    pub divided: u64,
    /// Possible start positions, `n - k + 1`.
    pub positions: u64,
    pub ratio: f64,
    /// `k (2^L - 1) / (L 2^(L-1) - k + 1)`.
    pub level_bound: f64,
    /// Junctions between consecutive words inside the prefix.
    pub junctions: u64,
}

impl DividedRatio {
    /// At most `k - 1` windows first cross any given junction.
    pub fn junction_cap(&self, k: u64) -> u64 {
        (k - 1) * self.junctions
    }
}

/// Ratio of divided occurrences of `d` at cutoffs `level:L` of a
/// level-structured stream.
pub fn divided_ratio_curve(
    source: StreamSource,
    d: &BlockQuery,
    levels: &[u64],
) -> Result<Vec<DividedRatio>> {
    let cutoffs: Vec<Cutoff> = levels
        .iter()
        .map(|&l| Cutoff::level(&source, l))
        .collect::<Result<_>>()?;
    check_increasing(&cutoffs)?;
    let k = d.len() as u64;
    let mut scanner = BlockScanner::new(std::slice::from_ref(d));
    let mut stream = DigitStream::new(source);
    let mut out = Vec::new();
    for (cutoff, &l) in cutoffs.iter().zip(levels) {
        while scanner.seen() < cutoff.n {
            let digit = stream.next().ok_or(Error::StreamExhausted {
                got: scanner.seen(),
                needed: cutoff.n,
            })?;
            scanner.push(digit)?;
        }
        let positions = (cutoff.n + 1).saturating_sub(k);
        let divided = scanner.counts()[0].divided;
        let denom = (l as f64) * 2f64.powi(l as i32 - 1) - k as f64 + 1.0;
        out.push(DividedRatio {
            levels: l,
            n: cutoff.n,
            divided,
            positions,
            ratio: if positions == 0 {
                0.0
            } else {
                divided as f64 / positions as f64
            },
            level_bound: k as f64 * (2f64.powi(l as i32) - 1.0) / denom,
            junctions: scanner.junctions(),
        });
    }
    Ok(out)
}

/// The two binary blocks whose occurrences in `C2` account for `d`:
/// `1 0^(dk-1) ... 1 0^(d2-1) 1 0^(d1-1)` followed by `1`, and by `0`.
pub fn binary_patterns(d: &BlockQuery) -> (Vec<u8>, Vec<u8>) {
    let mut prefix = Vec::with_capacity(d.digit_sum() as usize + 1);
    for &di in d.digits().iter().rev() {
        prefix.push(1);
        prefix.extend(std::iter::repeat_n(0, (di - 1) as usize));
    }
    let mut tail1 = prefix.clone();
    tail1.push(1);
    let mut tail0 = prefix;
    tail0.push(0);
    (tail1, tail0)
}

fn pattern_string(p: &[u8]) -> String {
    p.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternCounts {
    pub pattern_tail1: String,
    pub pattern_tail0: String,
    pub n_bits: u64,
    pub tail1: u64,
    pub tail0: u64,
}

impl PatternCounts {
    pub fn combined_freq(&self) -> f64 {
        (self.tail1 + self.tail0) as f64 / self.n_bits as f64
    }
}

/// Overlapping occurrences of both [`binary_patterns`] in the first `n_bits`.
pub fn pattern_counts_in_bits<I>(bits: I, n_bits: u64, d: &BlockQuery) -> Result<PatternCounts>
where
    I: IntoIterator,
    I::Item: Into<u64>,
{
    let (p1, p0) = binary_patterns(d);
    let blocks = [
        BlockQuery::new(p1.iter().map(|&b| b as u64 + 1).collect())?,
        BlockQuery::new(p0.iter().map(|&b| b as u64 + 1).collect())?,
    ];
    let mut scanner = BlockScanner::values_only(&blocks);
    let mut got = 0u64;
    for (i, b) in bits.into_iter().take(n_bits as usize).enumerate() {
        // shifted to {1, 2} so the pattern can reuse the digit scanner
        scanner.push(plain(i as u64, b.into() + 1))?;
        got += 1;
    }
    if got < n_bits {
        return Err(Error::StreamExhausted {
            got,
            needed: n_bits,
        });
    }
    Ok(PatternCounts {
        pattern_tail1: pattern_string(&p1),
        pattern_tail0: pattern_string(&p0),
        n_bits,
        tail1: scanner.counts()[0].total(),
        tail0: scanner.counts()[1].total(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossCheck {
    pub levels: u64,
    pub n_digits: u64,
    pub direct_count: u64,
    pub direct_freq: f64,
    pub patterns: PatternCounts,
    pub pattern_freq: f64,
    pub gap: f64,
}

/// Direct frequency of `d` over levels `0..levels` of `K` (or `K^pi` with a
/// seed) against the combined pattern frequency over the matching prefix of
/// `C2` (or `C2^pi`).
pub fn cross_check_for(seed: Option<u64>, d: &BlockQuery, levels: u64) -> Result<CrossCheck> {
    let (digits, bits, digit_src, bit_src) = match seed {
        None => (
            kepler_stream(),
            champernowne_bits(),
            StreamSource::Digits(OrderingId::Kepler),
            StreamSource::CodeBits { seed: None },
        ),
        Some(s) => (
            kepler_perm_stream(s),
            champernowne_perm_bits(s),
            StreamSource::Digits(OrderingId::KeplerPerm { seed: s }),
            StreamSource::CodeBits { seed: Some(s) },
        ),
    };
    let n_digits = digit_src.symbols_before_level(levels)?;
    let n_bits = bit_src.symbols_before_level(levels)?;
    let direct = count_block(digits.values(), n_digits, d)?;
    let patterns = pattern_counts_in_bits(bits.values(), n_bits, d)?;
    let direct_freq = direct.count as f64 / n_digits as f64;
    let pattern_freq = patterns.combined_freq();
    Ok(CrossCheck {
        levels,
        n_digits,
        direct_count: direct.count,
        direct_freq,
        patterns,
        pattern_freq,
        gap: (direct_freq - pattern_freq).abs(),
    })
}

pub fn cross_check_pattern_vs_direct(d: &BlockQuery, levels: u64) -> Result<CrossCheck> {
    cross_check_for(None, d, levels)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdfPoint {
    pub x: Rational,
    pub count: u64,
    pub n: u64,
    /// Fraction of the first `n` rationals that are at most `x`.
    pub fraction: Ratio<u64>,
    pub target: DyadicRational,
    pub abs_err: f64,
}

/// Empirical distribution of the first `n` rationals of an ordering at each
/// `x`, against `?(x)`.
pub fn empirical_cdf(order: OrderingId, n: u64, xs: &[Rational]) -> Result<Vec<CdfPoint>> {
    if n == 0 {
        return Err(Error::InvalidArgument("empirical CDF needs n >= 1".into()));
    }
    let mut counts = vec![0u64; xs.len()];
    let mut taken = 0u64;
    for word in ordering_words(order).take(n as usize) {
        let r = word.to_rational();
        for (c, x) in counts.iter_mut().zip(xs) {
            if &r <= x {
                *c += 1;
            }
        }
        taken += 1;
    }
    if taken < n {
        return Err(Error::StreamExhausted {
            got: taken,
            needed: n,
        });
    }
    xs.iter()
        .zip(counts)
        .map(|(x, count)| {
            let target = qmark_of(x)?;
            let fraction = Ratio::new(count, n);
            let exact = BigRational::new(BigInt::from(count), BigInt::from(n));
            let abs_err = (exact - target.to_big_rational())
                .abs()
                .to_f64()
                .unwrap_or(f64::NAN);
            Ok(CdfPoint {
                x: x.clone(),
                count,
                n,
                fraction,
                target,
                abs_err,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::{aks_stream, farey_stream};

    fn b(d: &[u64]) -> BlockQuery {
        BlockQuery::new(d.to_vec()).unwrap()
    }

    const K13: [u64; 13] = [2, 3, 1, 2, 4, 1, 3, 2, 2, 1, 1, 2, 5];

    #[test]
    fn count_block_examples() {
        // 2,3,1,2,4,1,3,2,2,1,1,2,5 holds five 2s and four 1s
        assert_eq!(
            count_block(kepler_stream().values(), 13, &b(&[2]))
                .unwrap()
                .count,
            5
        );
        assert_eq!(
            count_block(kepler_stream().values(), 13, &b(&[1]))
                .unwrap()
                .count,
            4
        );
        assert_eq!(
            count_block(kepler_stream().values(), 13, &b(&[1, 1]))
                .unwrap()
                .count,
            1
        );
        assert_eq!(count_block(K13, 3, &b(&[2, 3, 1])).unwrap().count, 1);
        let short = count_block(K13, 2, &b(&[2, 3, 1])).unwrap();
        assert_eq!(
            short,
            BlockCount {
                count: 0,
                short: true
            }
        );
        assert!(count_block(K13, 14, &b(&[2])).is_err());
    }

    #[test]
    fn overlapping_occurrences_count() {
        let ones = [1u64; 6];
        assert_eq!(count_block(ones, 6, &b(&[1, 1])).unwrap().count, 5);
    }

    #[test]
    fn classification_examples() {
        let single = classify_occurrences(kepler_stream(), 13, &b(&[2])).unwrap();
        // [2] as a whole word, [1,2] end, [2,2] start and end, [1,1,2] end
        assert_eq!(
            single,
            OccurrenceBreakdown {
                start: 1,
                middle: 0,
                end: 4,
                divided: 0
            }
        );

        let one_two = classify_occurrences(kepler_stream(), 13, &b(&[1, 2])).unwrap();
        assert_eq!(
            one_two,
            OccurrenceBreakdown {
                start: 0,
                middle: 0,
                end: 2,
                divided: 0
            }
        );

        let three_two = classify_occurrences(kepler_stream(), 13, &b(&[3, 2])).unwrap();
        assert_eq!(
            three_two,
            OccurrenceBreakdown {
                start: 0,
                middle: 0,
                end: 0,
                divided: 1
            }
        );

        let first_word = classify_occurrences(kepler_stream(), 13, &b(&[2, 3])).unwrap();
        assert_eq!(first_word.divided, 1);
    }

    #[test]
    fn classification_rejects_missing_boundaries() {
        let fake = K13.iter().map(|&v| plain(0, v));
        assert!(matches!(
            classify_occurrences(fake, 13, &b(&[2])),
            Err(Error::BoundaryMetadata(_))
        ));
    }

    #[test]
    fn breakdown_totals_match_counts() {
        for d in [
            vec![1u64],
            vec![2],
            vec![1, 1],
            vec![1, 2],
            vec![2, 1, 1],
            vec![3, 1],
        ] {
            let d = b(&d);
            for n in [1u64, 13, 500, 7000] {
                let total = classify_occurrences(kepler_stream(), n, &d)
                    .unwrap()
                    .total();
                assert_eq!(
                    total,
                    count_block(kepler_stream().values(), n, &d).unwrap().count
                );
                let total = classify_occurrences(farey_stream(), n, &d).unwrap().total();
                assert_eq!(
                    total,
                    count_block(farey_stream().values(), n, &d).unwrap().count
                );
            }
        }
    }

    #[test]
    fn chunking_does_not_change_counts() {
        let digits: Vec<u64> = kepler_stream().values().take(20_000).collect();
        for d in [b(&[1]), b(&[1, 2]), b(&[1, 1, 1]), b(&[2, 1, 1, 3])] {
            let whole = count_block(digits.iter().copied(), 20_000, &d)
                .unwrap()
                .count;
            for chunk in [1usize, 2, 3, 17, 1000, 20_000, 50_000] {
                assert_eq!(
                    count_block_chunked(&digits, &d, chunk),
                    whole,
                    "chunk {chunk}"
                );
            }
        }
    }

    #[test]
    fn report_rows_and_targets() {
        let cutoffs = [Cutoff::at(13)];
        let report =
            frequency_report(kepler_stream(), &cutoffs, &[b(&[1])], TargetMeasure::Qmark).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.count, 4);
        assert_eq!(row.freq, Ratio::new(4, 13));
        assert_eq!(row.target_exact, Some(cylinder_qmark(&b(&[1]))));
        assert!((row.abs_err - (4.0 / 13.0 - 0.5f64).abs()).abs() < 1e-15);

        let gauss =
            frequency_report(aks_stream(), &cutoffs, &[b(&[1])], TargetMeasure::Gauss).unwrap();
        assert!((gauss.rows[0].target - (4.0f64 / 3.0).log2()).abs() < 1e-15);
        assert_eq!(gauss.meta.order, "aks");

        let long = frequency_report(
            kepler_stream(),
            &[Cutoff::at(2)],
            &[b(&[1, 1, 1])],
            TargetMeasure::Qmark,
        )
        .unwrap();
        assert!(long.rows[0].short);
        assert_eq!(long.rows[0].count, 0);

        let bad = [Cutoff::at(10), Cutoff::at(10)];
        assert!(frequency_report(kepler_stream(), &bad, &[b(&[1])], TargetMeasure::Qmark).is_err());
    }

    #[test]
    fn level_parallel_report_matches_sequential() {
        let blocks = [b(&[1]), b(&[2]), b(&[1, 2]), b(&[2, 1, 1])];
        let sources = [
            StreamSource::Digits(OrderingId::Kepler),
            StreamSource::Digits(OrderingId::Farey),
            StreamSource::Digits(OrderingId::Aks),
            StreamSource::Digits(OrderingId::KeplerPerm { seed: 9 }),
        ];
        for source in sources {
            let levels = [1u64, 4, 9, 13];
            let cutoffs: Vec<Cutoff> = levels
                .iter()
                .map(|&l| Cutoff::level(&source, l).unwrap())
                .collect();
            let seq = frequency_report(
                DigitStream::new(source),
                &cutoffs,
                &blocks,
                TargetMeasure::Qmark,
            )
            .unwrap();
            for threads in [0, 1, 3] {
                let par = frequency_report_by_levels(
                    source,
                    &levels,
                    &blocks,
                    TargetMeasure::Qmark,
                    threads,
                )
                .unwrap();
                assert_eq!(seq, par, "{source:?} threads {threads}");
            }
        }
    }

    #[test]
    fn context_spans_several_short_words() {
        // level 1 -> 2 boundary: the 4-digit context reaches back into level 0
        let blocks = [b(&[2, 3, 1, 2, 4])];
        let levels = [3u64];
        let source = StreamSource::Digits(OrderingId::Kepler);
        let par =
            frequency_report_by_levels(source, &levels, &blocks, TargetMeasure::Qmark, 2).unwrap();
        assert_eq!(par.rows[0].count, 1);
        assert_eq!(par.rows[0].breakdown.divided, 1);
    }

    #[test]
    fn csv_and_json_layout() {
        let report = frequency_report(
            kepler_stream(),
            &[Cutoff::at(13)],
            &[b(&[1]), b(&[1, 2])],
            TargetMeasure::Qmark,
        )
        .unwrap();
        let mut csv_out = Vec::new();
        write_csv(&report, &mut csv_out).unwrap();
        let text = String::from_utf8(csv_out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines[0],
            "cutoff,n_digits,block,count,freq,target,abs_err,start,middle,end,divided"
        );
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("13,13,\"1,2\",2,"));

        let mut json_out = Vec::new();
        write_json(&report, &mut json_out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json_out).unwrap();
        assert_eq!(v["meta"]["order"], "kepler");
        assert_eq!(v["meta"]["target"], "qmark");
        assert_eq!(v["rows"][0]["count"], 4);
        assert_eq!(v["rows"][1]["block"], "1,2");
    }

    #[test]
    fn cutoff_and_block_parsing() {
        let src = StreamSource::Digits(OrderingId::Kepler);
        let c = parse_cutoffs("level:4,8", &src).unwrap();
        assert_eq!(
            c,
            [
                Cutoff {
                    label: "level:4".into(),
                    n: 32
                },
                Cutoff {
                    label: "level:8".into(),
                    n: 1024
                }
            ]
        );
        assert_eq!(parse_cutoffs("10, 20", &src).unwrap()[1], Cutoff::at(20));
        assert!(parse_cutoffs("level:x", &src).is_err());
        assert_eq!(
            parse_blocks("1;2;1,2").unwrap(),
            [b(&[1]), b(&[2]), b(&[1, 2])]
        );
        assert!(parse_blocks("1;0").is_err());
        assert_eq!(
            "gauss".parse::<TargetMeasure>().unwrap(),
            TargetMeasure::Gauss
        );
    }

    #[test]
    fn divided_curve_examples() {
        let src = StreamSource::Digits(OrderingId::Kepler);
        let single = divided_ratio_curve(src, &b(&[1]), &[4, 8]).unwrap();
        assert!(single.iter().all(|r| r.divided == 0 && r.ratio == 0.0));

        // words never end in 1, so [1, 2] cannot straddle a junction
        let never = divided_ratio_curve(src, &b(&[1, 2]), &[6, 16]).unwrap();
        assert!(never.iter().all(|r| r.divided == 0));

        let curve = divided_ratio_curve(src, &b(&[2, 1]), &[6, 16]).unwrap();
        assert!(curve[0].divided > 0);
        assert!(curve[1].ratio < curve[0].ratio);
        assert!(curve[1].ratio <= 2.0 * 2.0 / 16.0);
        for r in &curve {
            assert!(r.divided <= r.junction_cap(2));
            assert_eq!(r.junctions, (1u64 << r.levels) - 2);
        }
    }

    #[test]
    fn binary_pattern_shapes() {
        let (p1, p0) = binary_patterns(&b(&[1]));
        assert_eq!(
            (pattern_string(&p1), pattern_string(&p0)),
            ("11".into(), "10".into())
        );
        let (p1, p0) = binary_patterns(&b(&[2, 1]));
        assert_eq!(
            (pattern_string(&p1), pattern_string(&p0)),
            ("1101".into(), "1100".into())
        );
        let (p1, _) = binary_patterns(&b(&[1, 3]));
        assert_eq!(pattern_string(&p1), "10011");
    }

    #[test]
    fn pattern_counts_small() {
        // 0 1 00 01 10 11 -> "0100011011"
        let c = pattern_counts_in_bits(champernowne_bits().values(), 10, &b(&[1])).unwrap();
        assert_eq!((c.tail1, c.tail0), (2, 2));
    }

    #[test]
    fn pattern_frequency_on_two_to_the_twenty_bits() {
        // "11" and "10" together count the 1s that have a successor
        let n = 1u64 << 20;
        let c = pattern_counts_in_bits(champernowne_bits().values(), n, &b(&[1])).unwrap();
        let ones = champernowne_bits()
            .values()
            .take(n as usize - 1)
            .filter(|&v| v == 1)
            .count() as u64;
        assert_eq!(c.tail1 + c.tail0, ones);
        // 2^20 stops early in level 16, where every word so far starts with 000
        assert!((c.combined_freq() - 0.5).abs() < 0.012, "{c:?}");

        let whole = StreamSource::CodeBits { seed: None }
            .symbols_before_level(16)
            .unwrap();
        let c = pattern_counts_in_bits(champernowne_bits().values(), whole, &b(&[1])).unwrap();
        assert!((c.combined_freq() - 0.5).abs() < 1e-5, "{c:?}");
    }

    #[test]
    fn cross_check_gap_shrinks() {
        for d in [b(&[1]), b(&[2]), b(&[1, 1])] {
            let a = cross_check_pattern_vs_direct(&d, 12).unwrap();
            let c = cross_check_pattern_vs_direct(&d, 16).unwrap();
            assert!(c.gap < a.gap, "{d}");
            // the residual tracks 1/(2L): still 0.028 at L = 18
            assert!((c.gap - 1.0 / 32.0).abs() < 1e-4, "{d}: {}", c.gap);
        }
    }

    #[test]
    fn cdf_examples() {
        let half = Rational::from_u64(1, 2).unwrap();
        let p = &empirical_cdf(OrderingId::Kepler, 1, std::slice::from_ref(&half)).unwrap()[0];
        assert_eq!(p.fraction, Ratio::new(1, 1));
        // 1/2, 1/3, 2/3, 1/4, 3/4, 2/5, 3/5: four are at most 1/2
        let p = &empirical_cdf(OrderingId::Kepler, 7, std::slice::from_ref(&half)).unwrap()[0];
        assert_eq!(p.fraction, Ratio::new(4, 7));
        assert!(empirical_cdf(OrderingId::Kepler, 0, &[half]).is_err());
    }

    #[test]
    fn cdf_is_monotone_in_x() {
        let xs: Vec<Rational> = (1..40u64)
            .map(|p| Rational::from_u64(p, 40).unwrap())
            .collect();
        for order in [OrderingId::Kepler, OrderingId::Farey, OrderingId::Aks] {
            let pts = empirical_cdf(order, 1000, &xs).unwrap();
            assert!(pts.windows(2).all(|w| w[0].fraction <= w[1].fraction));
        }
    }
}
