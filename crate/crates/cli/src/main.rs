//! `minklab`: generate the concatenated streams, count block frequencies,
//! evaluate the question-mark function and run the identity suites.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use minklab_core::analyzer::{
    empirical_cdf, frequency_report, frequency_report_by_levels, parse_blocks, parse_cutoffs,
    write_csv, write_json, FrequencyReport, TargetMeasure,
};
use minklab_core::measures::{qmark_of, qmark_rational};
use minklab_core::streams::{pack_bits, write_leb128, WordCursor};
use minklab_core::verify::{run_suite, Suite, VerifyLimits};
use minklab_core::{CFWord, Checkpoint, DigitStream, Error, OrderingId, Rational, StreamSource};

#[derive(Parser)]
#[command(
    name = "minklab",
    version,
    about = "Minkowski-normal numbers from continued-fraction enumerations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the rationals, words, digits or path-code bits of an ordering.
    Gen(GenArgs),
    /// Block-frequency report over a stream.
    Analyze(AnalyzeArgs),
    /// Exact value of the question-mark function at a rational.
    Qmark(QmarkArgs),
    /// Empirical distribution of an ordering against ?(x).
    Cdf(CdfArgs),
    /// Run identity suites; exits 1 if any identity fails.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct OrderArgs {
    /// kepler, farey, aks or kepler-perm.
    #[arg(long, env = "MINKLAB_ORDER", default_value = "kepler")]
    order: String,
    /// Permutation seed; required for kepler-perm and rejected otherwise.
    #[arg(long, env = "MINKLAB_SEED")]
    seed: Option<u64>,
}

impl OrderArgs {
    fn ordering(&self) -> Result<OrderingId, CliError> {
        Ok(OrderingId::parse(&self.order, self.seed)?)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenFormat {
    /// `p/q` separated by spaces.
    Rationals,
    /// One word per line, digits separated by commas.
    Words,
    /// All digits on one line, separated by commas.
    Digits,
    /// Path-code bits as a string of 0 and 1.
    Bits,
    /// One unsigned LEB128 value per digit.
    Leb128,
    /// Path-code bits, 8 per byte, most significant first.
    PackedBits,
}

impl GenFormat {
    fn is_bits(self) -> bool {
        matches!(self, GenFormat::Bits | GenFormat::PackedBits)
    }

    fn is_symbols(self) -> bool {
        !matches!(self, GenFormat::Rationals | GenFormat::Words)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    order: OrderArgs,
    /// Last level to emit (inclusive).
    #[arg(long, required_unless_present = "max_den")]
    levels: Option<u64>,
    /// For aks: last denominator to emit, i.e. level `max_den - 2`.
    #[arg(long, conflicts_with = "levels")]
    max_den: Option<u64>,
    #[arg(long, value_enum, default_value = "digits")]
    format: GenFormat,
    /// Write here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Start from a checkpoint file (symbol formats only).
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Write the checkpoint of the next symbol after the output.
    #[arg(long)]
    save_checkpoint: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    order: OrderArgs,
    /// Blocks separated by `;`, digits by `,` (e.g. "1;2;1,2").
    #[arg(long)]
    blocks: String,
    /// `level:<l1,l2,...>` or a comma-separated list of digit counts.
    #[arg(long)]
    cutoffs: String,
    /// qmark or gauss.
    #[arg(long, env = "MINKLAB_TARGET", default_value = "qmark")]
    target: String,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormat,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Worker threads for level cutoffs; 0 uses every core.
    #[arg(long, env = "MINKLAB_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct QmarkInput {
    /// A rational `p/q` in (0, 1).
    #[arg(long)]
    rational: Option<String>,
    /// A reduced continued fraction, digits separated by commas.
    #[arg(long)]
    cf: Option<String>,
}

#[derive(Args)]
struct QmarkArgs {
    #[command(flatten)]
    input: QmarkInput,
}

#[derive(Args)]
struct CdfArgs {
    #[command(flatten)]
    order: OrderArgs,
    /// Number of rationals taken from the ordering.
    #[arg(long, short)]
    n: u64,
    /// Comma-separated points `p/q`.
    #[arg(long, default_value = "1/4,1/3,1/2,2/3,3/4")]
    at: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// identities, bijection, codes, counts or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    max_n: Option<u64>,
    #[arg(long)]
    max_bits: Option<u64>,
    #[arg(long)]
    max_sum: Option<u64>,
    #[arg(long)]
    max_level: Option<u64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Serialize(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn last_level(args: &GenArgs, order: OrderingId) -> CliResult<u64> {
    match (args.levels, args.max_den) {
        (Some(l), _) => Ok(l),
        (None, Some(d)) if order == OrderingId::Aks => d
            .checked_sub(2)
            .ok_or_else(|| CliError::Usage("--max-den must be at least 2".into())),
        (None, Some(_)) => Err(CliError::Usage("--max-den applies to --order aks".into())),
        (None, None) => Err(CliError::Usage("--levels is required".into())),
    }
}

fn gen(args: &GenArgs) -> CliResult {
    let order = args.order.ordering()?;
    let last = last_level(args, order)?;
    let source = if args.format.is_bits() {
        match order {
            OrderingId::Kepler | OrderingId::KeplerPerm { .. } => {
                StreamSource::CodeBits { seed: order.seed() }
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "path-code bits exist for kepler and kepler-perm, not {}",
                    order.name()
                )))
            }
        }
    } else {
        StreamSource::Digits(order)
    };
    if last > source.max_level() {
        return Err(CliError::Usage(format!(
            "level {last} exceeds {}",
            source.max_level()
        )));
    }
    if !args.format.is_symbols() && (args.resume.is_some() || args.save_checkpoint.is_some()) {
        return Err(CliError::Usage(
            "checkpoints apply to digit and bit formats".into(),
        ));
    }
    let mut out = open_output(args.output.as_deref())?;
    if args.format.is_symbols() {
        let stream = match &args.resume {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
                DigitStream::resume(source, text.parse::<Checkpoint>()?)?
            }
            None => DigitStream::new(source),
        };
        let end = source.symbols_before_level(last + 1)?;
        let count = end.saturating_sub(stream.position());
        let checkpoint = write_symbols(&mut out, stream, count, args.format)?;
        if let Some(p) = &args.save_checkpoint {
            std::fs::write(p, checkpoint.to_string())
                .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        }
    } else {
        write_words(&mut out, source, last, args.format)?;
    }
    out.flush()?;
    Ok(())
}

fn write_symbols(
    out: &mut dyn Write,
    mut stream: DigitStream,
    count: u64,
    format: GenFormat,
) -> CliResult<Checkpoint> {
    match format {
        GenFormat::Digits => {
            for i in 0..count {
                let d = stream.next().expect("bounded by level");
                if i > 0 {
                    out.write_all(b",")?;
                }
                write!(out, "{}", d.value)?;
            }
            out.write_all(b"\n")?;
        }
        GenFormat::Bits => {
            for _ in 0..count {
                let d = stream.next().expect("bounded by level");
                out.write_all(if d.value == 1 { b"1" } else { b"0" })?;
            }
            out.write_all(b"\n")?;
        }
        GenFormat::Leb128 => {
            for _ in 0..count {
                write_leb128(out, stream.next().expect("bounded by level").value)?;
            }
        }
        GenFormat::PackedBits => {
            const CHUNK: u64 = 1 << 16;
            let mut left = count;
            while left > 0 {
                let take = left.min(CHUNK);
                let bits: Vec<u64> = (&mut stream).take(take as usize).map(|d| d.value).collect();
                out.write_all(&pack_bits(bits))?;
                left -= take;
            }
        }
        GenFormat::Rationals | GenFormat::Words => unreachable!("word formats"),
    }
    Ok(stream.checkpoint())
}

fn write_words(
    out: &mut dyn Write,
    source: StreamSource,
    last: u64,
    format: GenFormat,
) -> CliResult {
    let mut cursor = WordCursor::new(source);
    let mut first = true;
    while !cursor.is_done() && cursor.level() <= last {
        let word = CFWord::new(cursor.word().to_vec())?;
        match format {
            GenFormat::Rationals => {
                if !first {
                    out.write_all(b" ")?;
                }
                write!(out, "{}", word.to_rational())?;
            }
            _ => writeln!(out, "{word}")?,
        }
        first = false;
        cursor.advance();
    }
    if format == GenFormat::Rationals {
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn analyze(args: &AnalyzeArgs) -> CliResult {
    let source = StreamSource::Digits(args.order.ordering()?);
    let blocks = parse_blocks(&args.blocks)?;
    if blocks.is_empty() {
        return Err(CliError::Usage("no blocks given".into()));
    }
    let target: TargetMeasure = args.target.parse()?;
    let report: FrequencyReport = match args.cutoffs.trim().strip_prefix("level:") {
        Some(list) => {
            let levels = list
                .split(',')
                .map(|t| t.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("invalid cutoff list: {}", args.cutoffs)))?;
            frequency_report_by_levels(source, &levels, &blocks, target, args.threads)?
        }
        None => {
            let cutoffs = parse_cutoffs(&args.cutoffs, &source)?;
            frequency_report(DigitStream::new(source), &cutoffs, &blocks, target)?
        }
    };
    for row in report.rows.iter().filter(|r| r.short) {
        eprintln!(
            "minklab: warning: block {} is longer than cutoff {}; count is 0",
            row.block, row.cutoff
        );
    }
    let mut out = open_output(args.output.as_deref())?;
    match args.format {
        ReportFormat::Csv => write_csv(&report, &mut out)?,
        ReportFormat::Json => {
            write_json(&report, &mut out)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn qmark(args: &QmarkArgs) -> CliResult {
    let value = match (&args.input.rational, &args.input.cf) {
        (Some(r), _) => qmark_of(&r.parse::<Rational>()?)?,
        (None, Some(cf)) => qmark_rational(&cf.parse::<CFWord>()?),
        (None, None) => unreachable!("clap requires one input"),
    };
    println!("{value} {}", value.to_decimal_string());
    Ok(())
}

fn cdf(args: &CdfArgs) -> CliResult {
    let order = args.order.ordering()?;
    let xs = args
        .at
        .split(',')
        .map(|t| t.trim().parse::<Rational>())
        .collect::<Result<Vec<_>, _>>()?;
    let points = empirical_cdf(order, args.n, &xs)?;
    let mut out = open_output(args.output.as_deref())?;
    writeln!(out, "x,n,count,fraction,target,abs_err")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            p.x,
            p.n,
            p.count,
            *p.fraction.numer() as f64 / *p.fraction.denom() as f64,
            p.target.to_f64(),
            p.abs_err
        )?;
    }
    out.flush()?;
    Ok(())
}

fn verify(args: &VerifyArgs) -> CliResult {
    let suite: Suite = args.suite.parse()?;
    let defaults = VerifyLimits::default();
    let limits = VerifyLimits {
        max_n: args.max_n.unwrap_or(defaults.max_n),
        max_bits: args.max_bits.unwrap_or(defaults.max_bits),
        max_sum: args.max_sum.unwrap_or(defaults.max_sum),
        max_level: args.max_level.unwrap_or(defaults.max_level),
        ..defaults
    };
    let results = run_suite(suite, &limits)?;
    let mut out = io::stdout().lock();
    for r in &results {
        writeln!(out, "{r}")?;
    }
    let failed = results.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::Failed(format!(
            "{failed} of {} checks failed",
            results.len()
        )));
    }
    writeln!(out, "all {} checks passed", results.len())?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::Analyze(a) => analyze(a),
        Command::Qmark(a) => qmark(a),
        Command::Cdf(a) => cdf(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Io(m) | CliError::Failed(m) => m,
            };
            eprintln!("minklab: error: {msg}");
            ExitCode::from(e.code())
        }
    }
}
