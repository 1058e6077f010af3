use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::builder::RangedU64ValueParser;
use clap::{Args, Parser, Subcommand, ValueEnum};
use orb_core::orientation::SampleSpec;
use orb_core::stream::{PAPER_REFERENCE_TEXT, TraceEvent};
use orb_core::{
    build_pyramid, decode_pgm, extract_batch, memory_report, run_stream, wordlength_sweep, Extraction,
    ExtractorParams, Image, Pyramid, SweepRow, WordLength, DEFAULT_PAIRS, DEFAULT_PATTERN_SEED,
    DEFAULT_THRESHOLD,
};

mod report;

use report::{BenchReport, ExtractionRecord, MemReport};

#[derive(Parser, Debug)]
#[command(name = "orbx", version, about = "ORB feature extraction with a streaming line-buffer model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect and describe features in a binary PGM image.
    Extract(ExtractArgs),
    /// Sweep orientation word lengths and report rotation errors as CSV.
    Sweep(SweepArgs),
    /// Time the extractor on one or more images (software timing).
    Bench(BenchArgs),
    /// Compare streaming buffer memory against whole-image buffering.
    Memreport(MemreportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    Batch,
    Stream,
}

impl Mode {
    fn as_str(self) -> &'static str {
        match self {
            Mode::Batch => "batch",
            Mode::Stream => "stream",
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Args, Debug, Clone)]
struct ExtractorFlags {
    /// FAST intensity threshold.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: u8,
    /// Orientation word length N (1..20) or "full".
    #[arg(long, default_value = "8")]
    wordlen: WordLength,
    /// Number of BRIEF pairs.
    #[arg(long, default_value_t = DEFAULT_PAIRS, value_parser = RangedU64ValueParser::<usize>::new().range(1..))]
    pairs: usize,
    /// Seed of the BRIEF sampling pattern.
    #[arg(long, default_value_t = DEFAULT_PATTERN_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Batch)]
    mode: Mode,
}

impl ExtractorFlags {
    fn params(&self) -> ExtractorParams {
        ExtractorParams { threshold: self.threshold, word_length: self.wordlen, pairs: self.pairs, seed: self.seed }
    }
}

#[derive(Args, Debug)]
struct ExtractArgs {
    input: PathBuf,
    #[command(flatten)]
    flags: ExtractorFlags,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Keep at most this many features (in level, row, column order).
    #[arg(long)]
    max_features: Option<usize>,
    /// Write the streaming control trace as CSV (stream mode only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Comma-separated word lengths.
    #[arg(long, value_delimiter = ',', default_values_t = 1u32..=20)]
    wordlens: Vec<u32>,
    /// Random moment pairs added to the deterministic grid.
    #[arg(long, default_value_t = SampleSpec::DEFAULT_RANDOM)]
    samples: usize,
    #[arg(long, default_value_t = SampleSpec::DEFAULT_SEED)]
    seed: u64,
    /// Skip the magnitude x angle grid.
    #[arg(long)]
    no_grid: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[command(flatten)]
    flags: ExtractorFlags,
    /// Timed iterations per image.
    #[arg(long, default_value_t = 10, value_parser = RangedU64ValueParser::<usize>::new().range(10..))]
    iterations: usize,
    /// Untimed iterations before measuring.
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MemreportArgs {
    /// Level-0 frame size, WIDTHxHEIGHT.
    #[arg(long, value_parser = parse_dims)]
    dims: (usize, usize),
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    format: ReportFormat,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|_| format!("bad dimension {v:?}"));
    let (w, h) = (parse(w)?, parse(h)?);
    if w == 0 || h == 0 {
        return Err("dimensions must be positive".into());
    }
    Ok((w, h))
}

/// Failure carrying the process exit code: 1 for usage, 2 for I/O.
#[derive(Debug)]
enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

type CmdResult = Result<(), Failure>;

fn io_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Io(e.into())
}

fn usage_err(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Extract(a) => cmd_extract(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Memreport(a) => cmd_memreport(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Usage(e) | Failure::Io(e)) = &f;
            eprintln!("error: {e:#}");
            ExitCode::from(f.code())
        }
    }
}

fn write_output(path: Option<&Path>, contents: &[u8]) -> CmdResult {
    match path {
        Some(p) => fs::write(p, contents).with_context(|| format!("writing {}", p.display())).map_err(io_err),
        None => io::stdout().lock().write_all(contents).context("writing stdout").map_err(io_err),
    }
}

fn load_pyramid(path: &Path) -> Result<(Image, Pyramid), Failure> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display())).map_err(io_err)?;
    let img = decode_pgm(&bytes).with_context(|| format!("decoding {}", path.display())).map_err(io_err)?;
    let pyramid = build_pyramid(&img).with_context(|| format!("building pyramid for {}", path.display())).map_err(usage_err)?;
    Ok((img, pyramid))
}

fn extract(pyramid: &Pyramid, params: &ExtractorParams, mode: Mode, trace: bool) -> orb_core::Result<(Extraction, Option<orb_core::stream::StreamRun>)> {
    match mode {
        Mode::Batch => Ok((extract_batch(pyramid, params)?, None)),
        Mode::Stream => {
            let mut run = run_stream(pyramid, params, trace)?;
            let extraction = std::mem::take(&mut run.extraction);
            Ok((extraction, Some(run)))
        }
    }
}

fn cmd_extract(args: ExtractArgs) -> CmdResult {
    if args.trace.is_some() && args.flags.mode != Mode::Stream {
        return Err(usage_err(anyhow::anyhow!("--trace requires --mode stream")));
    }
    let params = args.flags.params();
    let (img, pyramid) = load_pyramid(&args.input)?;
    let (mut extraction, run) = extract(&pyramid, &params, args.flags.mode, args.trace.is_some()).map_err(usage_err)?;
    if let Some(cap) = args.max_features {
        extraction.features.truncate(cap);
    }

    if let (Some(path), Some(run)) = (&args.trace, &run) {
        let mut csv = String::from(TraceEvent::CSV_HEADER);
        csv.push('\n');
        for ev in &run.trace {
            csv.push_str(&ev.to_csv());
            csv.push('\n');
        }
        write_output(Some(path), csv.as_bytes())?;
    }

    let record = ExtractionRecord::new(&img, &pyramid, &params, args.flags.mode.as_str(), &extraction, run.as_ref());
    let body = match args.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&record).map_err(io_err)?;
            s.push('\n');
            s
        }
        Format::Csv => record.to_csv(),
    };
    write_output(args.output.as_deref(), body.as_bytes())
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let spec = SampleSpec { grid: !args.no_grid, random: args.samples, seed: args.seed };
    let rows = wordlength_sweep(&args.wordlens, &spec).map_err(usage_err)?;
    let mut csv = String::from(SweepRow::CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv());
        csv.push('\n');
    }
    write_output(args.output.as_deref(), csv.as_bytes())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    let params = args.flags.params();
    let mut out = String::new();
    for input in &args.inputs {
        // decode is outside the timed region
        let bytes = fs::read(input).with_context(|| format!("reading {}", input.display())).map_err(io_err)?;
        let img = decode_pgm(&bytes).with_context(|| format!("decoding {}", input.display())).map_err(io_err)?;

        let run_once = || -> Result<usize, Failure> {
            let pyramid = build_pyramid(&img).map_err(usage_err)?;
            let (extraction, _) = extract(&pyramid, &params, args.flags.mode, false).map_err(usage_err)?;
            Ok(extraction.len())
        };
        let mut features = 0;
        for _ in 0..args.warmup {
            features = run_once()?;
        }
        let start = Instant::now();
        for _ in 0..args.iterations {
            features = run_once()?;
        }
        let elapsed = start.elapsed().as_secs_f64();
        let report = BenchReport::new(input, &img, args.flags.mode.as_str(), args.iterations, elapsed, features);
        out.push_str(&serde_json::to_string(&report).map_err(io_err)?);
        out.push('\n');
    }
    write_output(args.output.as_deref(), out.as_bytes())
}

fn cmd_memreport(args: MemreportArgs) -> CmdResult {
    let (w, h) = args.dims;
    let level1 = Pyramid::level1_dims(w, h);
    let report = MemReport::from(memory_report([(w, h), level1]));
    let body = match args.format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&report).map_err(io_err)?;
            s.push('\n');
            s
        }
        ReportFormat::Text => report.to_text(PAPER_REFERENCE_TEXT),
    };
    write_output(args.output.as_deref(), body.as_bytes())
}
