//! `logtrawl` subcommands: `scan`, `bench` and `gen`.
//!
//! Each command writes its results to the given output stream and returns
//! the process exit status. `scan` exits 0 when nothing matched, 1 when at
//! least one alert was raised, and 2 on any error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::thread;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use logtrawl::bench::{self, PatternSpec};
use logtrawl::loggen::{self, GenSpec};
use logtrawl::scan::default_workers;
use logtrawl::{parse_rules, EngineConfig, EngineKind, ScanConfig, ScanReport, Scanner};

pub const EXIT_CLEAN: i32 = 0;
pub const EXIT_MATCHES: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "logtrawl", version, about = "Batch multi-pattern scanning of log files")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scan log files against a rule file and report alerts.
    Scan(ScanArgs),
    /// Measure engine throughput over random pattern sets.
    Bench(BenchArgs),
    /// Generate a synthetic log file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jsonl,
    Summary,
}

#[derive(Debug, Args)]
pub struct EngineArgs {
    /// kmp, pfac_dense, pfac_compact or ac_chunked.
    #[arg(long, default_value = "pfac_compact")]
    pub engine: EngineKind,
    #[arg(long, default_value_t = logtrawl::rules::DEFAULT_PREFIX_LEN, value_parser = positive)]
    pub prefix_len: usize,
    /// Worker threads per scan (default: available parallelism).
    #[arg(long, env = "LOGTRAWL_WORKERS")]
    pub workers: Option<NonZeroUsize>,
    /// Owned bytes per chunk for ac_chunked.
    #[arg(long, default_value_t = 1 << 20, value_parser = positive)]
    pub chunk_size: usize,
}

impl EngineArgs {
    pub fn config(&self) -> EngineConfig {
        EngineConfig {
            engine: self.engine,
            prefix_len: self.prefix_len,
            scan: ScanConfig {
                workers: self.workers.unwrap_or_else(default_workers),
                chunk_size: self.chunk_size,
                overlap: 0,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, short)]
    pub rules: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub format: Format,
    /// Bytes of log held in memory per scan window.
    #[arg(long, default_value_t = 64 << 20, value_parser = positive)]
    pub window: usize,
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub engine: EngineArgs,
    /// Comma-separated pattern counts, one report per count.
    #[arg(long, value_delimiter = ',', required = true)]
    pub patterns: Vec<usize>,
    #[arg(long, default_value_t = 16)]
    pub pattern_len: usize,
    #[arg(long, default_value_t = 1)]
    pub pattern_seed: u32,
    /// Existing log to scan; a synthetic one is generated otherwise.
    #[arg(long, conflicts_with_all = ["size", "seed"])]
    pub log: Option<PathBuf>,
    #[arg(long, default_value_t = loggen::DEFAULT_SIZE)]
    pub size: usize,
    #[arg(long, default_value_t = loggen::Mt19937::DEFAULT_SEED)]
    pub seed: u32,
    #[arg(long, default_value_t = bench::DEFAULT_RUNS, value_parser = positive)]
    pub runs: usize,
    /// Measure pfac_dense and pfac_compact side by side instead of --engine.
    #[arg(long)]
    pub compare_backends: bool,
    /// CSV destination (default: standard output).
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub size: usize,
    #[arg(long)]
    pub seed: u32,
    #[arg(long, default_value_t = loggen::DEFAULT_LINE_LEN)]
    pub line_len: usize,
    #[arg(long, short)]
    pub output: PathBuf,
}

/// Runs a parsed command line, reporting errors on `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Scan(args) => run_scan(args, out, err),
        Command::Bench(args) => run_bench(args, out, err),
        Command::Gen(args) => run_gen(args, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "logtrawl: {e:#}");
            EXIT_ERROR
        }
    }
}

#[derive(Serialize)]
struct AlertLine<'a> {
    file: &'a str,
    offset: usize,
    line: usize,
    rule_id: u32,
    rule: &'a str,
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    file: &'a str,
    total_matches: usize,
    stage1_hits: usize,
    stage1_rejected: usize,
    bytes_scanned: usize,
}

pub fn run_scan(args: &ScanArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let source = std::fs::read(&args.rules)
        .with_context(|| format!("reading rules {}", args.rules.display()))?;
    let rules = parse_rules(&source).with_context(|| format!("parsing rules {}", args.rules.display()))?;
    if rules.is_empty() {
        bail!("{} contains no rules", args.rules.display());
    }
    let config = args.engine.config();
    let scanner = Scanner::new(&rules, config)?;

    // Files are scanned concurrently in batches of `workers`; output keeps
    // input order.
    let batch = config.scan.workers.get();
    let mut any_match = false;
    let mut failed = false;
    for group in args.inputs.chunks(batch) {
        let results: Vec<Result<ScanReport>> = thread::scope(|s| {
            let handles: Vec<_> = group
                .iter()
                .map(|path| s.spawn(|| scan_file(&scanner, path, args.window)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scan thread panicked"))
                .collect()
        });
        for (path, result) in group.iter().zip(results) {
            match result {
                Ok(report) => {
                    any_match |= report.total_matches > 0;
                    write_report(out, &path.to_string_lossy(), &report, args.format)?;
                }
                Err(e) => {
                    failed = true;
                    writeln!(err, "logtrawl: {e:#}")?;
                }
            }
        }
    }
    out.flush()?;
    Ok(if failed {
        EXIT_ERROR
    } else if any_match {
        EXIT_MATCHES
    } else {
        EXIT_CLEAN
    })
}

fn scan_file(scanner: &Scanner, path: &Path, window: usize) -> Result<ScanReport> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    scanner
        .scan_reader(file, window)
        .with_context(|| format!("scanning {}", path.display()))
}

fn write_report(out: &mut dyn Write, file: &str, report: &ScanReport, format: Format) -> Result<()> {
    match format {
        Format::Jsonl => {
            for a in &report.alerts {
                let line = AlertLine {
                    file,
                    offset: a.offset,
                    line: a.line,
                    rule_id: a.rule_id,
                    rule: &a.rule_name,
                };
                serde_json::to_writer(&mut *out, &line)?;
                out.write_all(b"\n")?;
            }
            let summary = SummaryLine {
                file,
                total_matches: report.total_matches,
                stage1_hits: report.stage1_hits,
                stage1_rejected: report.stage1_rejected,
                bytes_scanned: report.bytes_scanned,
            };
            serde_json::to_writer(&mut *out, &summary)?;
            out.write_all(b"\n")?;
        }
        Format::Summary => {
            writeln!(
                out,
                "{file}: {} matches in {} bytes ({} stage-1 hits, {} rejected)",
                report.total_matches, report.bytes_scanned, report.stage1_hits, report.stage1_rejected
            )?;
        }
    }
    Ok(())
}

pub fn run_bench(args: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let text = match &args.log {
        Some(path) => std::fs::read(path).with_context(|| format!("reading {}", path.display()))?,
        None => loggen::generate_log(&GenSpec::new(args.size, args.seed))?.bytes,
    };
    let config = args.engine.config();
    let patterns = PatternSpec {
        len: args.pattern_len,
        seed: args.pattern_seed,
    };
    if args.pattern_len == 0 {
        bail!("--pattern-len must be at least 1");
    }

    let mut reports = Vec::new();
    if args.compare_backends {
        for (i, &k) in args.patterns.iter().enumerate() {
            let rules = loggen::random_patterns(k, patterns.len, patterns.seed.wrapping_add(i as u32))?;
            let cmp = bench::compare_backends(&config, &text, &rules, args.runs)?;
            writeln!(
                err,
                "patterns={k}: compact/dense throughput ratio {:.3}",
                cmp.ratio()
            )?;
            reports.push(cmp.dense);
            reports.push(cmp.compact);
        }
    } else {
        reports = bench::scaling_sweep(&config, &text, &args.patterns, patterns, args.runs)?;
    }

    match &args.output {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            bench::write_csv(BufWriter::new(file), &reports)?;
        }
        None => bench::write_csv(&mut *out, &reports)?,
    }
    Ok(EXIT_CLEAN)
}

pub fn run_gen(args: &GenArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = GenSpec {
        size: args.size,
        seed: args.seed,
        line_len: args.line_len,
    };
    let file = File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))?;
    let digest = loggen::write_log(&spec, BufWriter::new(file))?;
    writeln!(out, "sha256  {digest} {} {}", args.output.display(), args.size)?;
    Ok(EXIT_CLEAN)
}

/// Entry point shared by the binary: parses `std::env::args`, runs, and
/// returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_CLEAN };
        }
    };
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    let code = run(&cli, &mut out, &mut io::stderr());
    if out.flush().is_err() {
        return EXIT_ERROR;
    }
    code
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}
