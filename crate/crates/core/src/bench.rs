//! Throughput measurement: repeated timed runs, mean duration, and
//! `throughput = 8 * bytes / mean_seconds` in bits per second.
//!
//! Automata and failure tables are built before the clock starts and one
//! untimed warm-up run precedes the measured ones. Only search plus
//! verification is inside the timed region.

use std::hint::black_box;
use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::loggen::{random_patterns, GenError};
use crate::pipeline::{EngineConfig, EngineKind, Error as ScanError, Scanner, UnknownEngine};
use crate::rules::RuleSet;

/// Default number of timed runs per measurement.
pub const DEFAULT_RUNS: usize = 100;

pub const CSV_HEADER: [&str; 7] = [
    "engine",
    "backend",
    "patterns",
    "bytes",
    "runs",
    "mean_seconds",
    "throughput_bps",
];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least one timed run is required")]
    NoRuns,
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Engine(#[from] UnknownEngine),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThroughputReport {
    pub engine: EngineKind,
    pub pattern_count: usize,
    /// Log size N in bytes.
    pub bytes: usize,
    pub runs: usize,
    pub run_seconds: Vec<f64>,
    pub mean_seconds: f64,
    pub throughput_bps: f64,
    /// Automaton or table construction time; not part of the throughput.
    pub build_seconds: f64,
}

impl ThroughputReport {
    pub fn from_runs(
        engine: EngineKind,
        pattern_count: usize,
        bytes: usize,
        run_seconds: Vec<f64>,
    ) -> Result<Self, BenchError> {
        if run_seconds.is_empty() {
            return Err(BenchError::NoRuns);
        }
        let mean_seconds = run_seconds.iter().sum::<f64>() / run_seconds.len() as f64;
        Ok(ThroughputReport {
            engine,
            pattern_count,
            bytes,
            runs: run_seconds.len(),
            run_seconds,
            mean_seconds,
            throughput_bps: throughput_bps(bytes, mean_seconds),
            build_seconds: 0.0,
        })
    }

    pub fn backend_name(&self) -> &'static str {
        self.engine.backend().map_or("none", |b| b.as_str())
    }

    pub fn median_seconds(&self) -> f64 {
        let mut v = self.run_seconds.clone();
        v.sort_by(f64::total_cmp);
        let mid = v.len() / 2;
        if v.len() % 2 == 0 {
            (v[mid - 1] + v[mid]) / 2.0
        } else {
            v[mid]
        }
    }

    pub fn to_row(&self) -> CsvRow {
        CsvRow {
            engine: self.engine.as_str().to_owned(),
            backend: self.backend_name().to_owned(),
            patterns: self.pattern_count,
            bytes: self.bytes,
            runs: self.runs,
            mean_seconds: self.mean_seconds,
            throughput_bps: self.throughput_bps,
        }
    }
}

pub fn throughput_bps(bytes: usize, mean_seconds: f64) -> f64 {
    8.0 * bytes as f64 / mean_seconds
}

/// Runs `f` once untimed, then `runs` times under the clock.
pub fn time_runs<T, F: FnMut() -> T>(runs: usize, mut f: F) -> Vec<f64> {
    black_box(f());
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            black_box(f());
            start.elapsed().as_secs_f64()
        })
        .collect()
}

/// Measures a prebuilt scanner.
pub fn measure_scanner(scanner: &Scanner, text: &[u8], runs: usize) -> Result<ThroughputReport, BenchError> {
    if runs == 0 {
        return Err(BenchError::NoRuns);
    }
    // Surface scan errors before timing; the timed closure cannot fail
    // differently on identical input.
    scanner.find(text)?;
    let seconds = time_runs(runs, || scanner.find(text).map(|d| d.matches.len()));
    ThroughputReport::from_runs(
        scanner.config().engine,
        scanner.rules().len(),
        text.len(),
        seconds,
    )
}

/// Builds the engine for `rules`, then measures it on `text`.
pub fn measure(
    config: &EngineConfig,
    text: &[u8],
    rules: &RuleSet,
    runs: usize,
) -> Result<ThroughputReport, BenchError> {
    let start = Instant::now();
    let scanner = Scanner::new(rules, *config)?;
    let build_seconds = start.elapsed().as_secs_f64();
    let mut report = measure_scanner(&scanner, text, runs)?;
    report.build_seconds = build_seconds;
    Ok(report)
}

/// Random-pattern parameters for sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternSpec {
    pub len: usize,
    pub seed: u32,
}

impl Default for PatternSpec {
    fn default() -> Self {
        PatternSpec { len: 16, seed: 1 }
    }
}

/// One measurement per pattern count, each with fresh random patterns
/// (`seed + i` for the i-th point) over the same text.
pub fn scaling_sweep(
    config: &EngineConfig,
    text: &[u8],
    pattern_counts: &[usize],
    patterns: PatternSpec,
    runs: usize,
) -> Result<Vec<ThroughputReport>, BenchError> {
    pattern_counts
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let rules = random_patterns(k, patterns.len, patterns.seed.wrapping_add(i as u32))?;
            measure(config, text, &rules, runs)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BackendComparison {
    pub dense: ThroughputReport,
    pub compact: ThroughputReport,
}

impl BackendComparison {
    /// Compact throughput over dense throughput.
    pub fn ratio(&self) -> f64 {
        self.compact.throughput_bps / self.dense.throughput_bps
    }
}

/// Dense and compact failureless-trie runs on identical inputs. `base`
/// supplies everything but the engine.
pub fn compare_backends(
    base: &EngineConfig,
    text: &[u8],
    rules: &RuleSet,
    runs: usize,
) -> Result<BackendComparison, BenchError> {
    let with = |engine| EngineConfig { engine, ..*base };
    Ok(BackendComparison {
        dense: measure(&with(EngineKind::PfacDense), text, rules, runs)?,
        compact: measure(&with(EngineKind::PfacCompact), text, rules, runs)?,
    })
}

/// The CSV projection of a [`ThroughputReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub engine: String,
    pub backend: String,
    pub patterns: usize,
    pub bytes: usize,
    pub runs: usize,
    pub mean_seconds: f64,
    pub throughput_bps: f64,
}

pub fn write_csv<W: io::Write>(out: W, reports: &[ThroughputReport]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record([
            r.engine.as_str().to_owned(),
            r.backend_name().to_owned(),
            r.pattern_count.to_string(),
            r.bytes.to_string(),
            r.runs.to_string(),
            format!("{:.12e}", r.mean_seconds),
            format!("{:.12e}", r.throughput_bps),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CsvRow>, BenchError> {
    let mut rd = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in rd.deserialize() {
        let row: CsvRow = row?;
        row.engine.parse::<EngineKind>()?;
        rows.push(row);
    }
    Ok(rows)
}
