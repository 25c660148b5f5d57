//! Engine selection and the end-to-end scan: stage-1 search, verification,
//! and alert report.

use std::fmt;
use std::io::{self, Read};
use std::str::FromStr;

use thiserror::Error;

use crate::automaton::{AutomatonBuilder, Automaton, Backend, BuildError};
use crate::kmp::KmpMatcher;
use crate::rules::{truncate_prefixes, PrefixSet, RuleSet, DEFAULT_PREFIX_LEN};
use crate::scan::{chunked_ac_scan, pfac_scan, Match, ScanConfig, ScanError};
use crate::verify::{alerts_from_matches, assemble_report, confirm_hits, LineIndex, ScanReport, VerifyError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("scan produced an inconsistent hit: {0}")]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EngineKind {
    /// One KMP pass per pattern.
    Kmp,
    /// Failureless trie prefix scan, dense table, then verification.
    PfacDense,
    /// Failureless trie prefix scan, compact table, then verification.
    PfacCompact,
    /// Chunked Aho-Corasick with lossless overlap, dense table.
    AcChunked,
}

impl EngineKind {
    pub const ALL: [EngineKind; 4] = [
        EngineKind::Kmp,
        EngineKind::PfacDense,
        EngineKind::PfacCompact,
        EngineKind::AcChunked,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineKind::Kmp => "kmp",
            EngineKind::PfacDense => "pfac_dense",
            EngineKind::PfacCompact => "pfac_compact",
            EngineKind::AcChunked => "ac_chunked",
        }
    }

    /// Transition storage used by the engine, `None` for KMP.
    pub fn backend(self) -> Option<Backend> {
        match self {
            EngineKind::Kmp => None,
            EngineKind::PfacDense | EngineKind::AcChunked => Some(Backend::Dense),
            EngineKind::PfacCompact => Some(Backend::Compact),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown engine `{0}` (expected kmp, pfac_dense, pfac_compact or ac_chunked)")]
pub struct UnknownEngine(String);

impl FromStr for EngineKind {
    type Err = UnknownEngine;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EngineKind::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| UnknownEngine(s.to_owned()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub engine: EngineKind,
    pub prefix_len: usize,
    pub scan: ScanConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            engine: EngineKind::PfacCompact,
            prefix_len: DEFAULT_PREFIX_LEN,
            scan: ScanConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn new(engine: EngineKind) -> Self {
        EngineConfig {
            engine,
            ..Default::default()
        }
    }
}

/// Full matches plus the number of stage-1 candidates they came from. For
/// engines without a prefix stage every match is its own candidate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Detections {
    pub matches: Vec<Match>,
    pub stage1_hits: usize,
}

#[derive(Debug)]
enum Prepared {
    Kmp(KmpMatcher),
    Pfac(Automaton),
    Ac(Automaton),
}

/// A rule set compiled for one engine. Immutable once built; scans may run
/// concurrently from several threads.
#[derive(Debug)]
pub struct Scanner {
    rules: RuleSet,
    prefixes: PrefixSet,
    config: EngineConfig,
    prepared: Prepared,
}

impl Scanner {
    pub fn new(rules: &RuleSet, config: EngineConfig) -> Result<Self, Error> {
        Self::with_builder(rules, config, AutomatonBuilder::default())
    }

    /// As [`Scanner::new`] but with a custom state ceiling; the builder's
    /// backend is replaced by the engine's.
    pub fn with_builder(
        rules: &RuleSet,
        mut config: EngineConfig,
        builder: AutomatonBuilder,
    ) -> Result<Self, Error> {
        let prefixes = truncate_prefixes(rules, config.prefix_len);
        config.scan = config.scan.lossless_for(rules);
        let prepared = match config.engine {
            EngineKind::Kmp => Prepared::Kmp(KmpMatcher::new(rules)),
            EngineKind::PfacDense => {
                Prepared::Pfac(builder.backend(Backend::Dense).failureless(&prefixes)?)
            }
            EngineKind::PfacCompact => {
                Prepared::Pfac(builder.backend(Backend::Compact).failureless(&prefixes)?)
            }
            EngineKind::AcChunked => {
                Prepared::Ac(builder.backend(Backend::Dense).aho_corasick(rules)?)
            }
        };
        Ok(Scanner {
            rules: rules.clone(),
            prefixes,
            config,
            prepared,
        })
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    pub fn prefixes(&self) -> &PrefixSet {
        &self.prefixes
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn automaton(&self) -> Option<&Automaton> {
        match &self.prepared {
            Prepared::Kmp(_) => None,
            Prepared::Pfac(a) | Prepared::Ac(a) => Some(a),
        }
    }

    /// Search and verification, without line numbers. This is the region
    /// the benchmarks time.
    pub fn find(&self, text: &[u8]) -> Result<Detections, Error> {
        self.find_owned(text, text.len())
    }

    /// Like [`Scanner::find`], keeping only matches and stage-1 hits that
    /// start before `owned_end`.
    fn find_owned(&self, text: &[u8], owned_end: usize) -> Result<Detections, Error> {
        let mut det = match &self.prepared {
            Prepared::Kmp(m) => {
                let matches = m.find_all(text).matches;
                Detections {
                    stage1_hits: matches.len(),
                    matches,
                }
            }
            Prepared::Pfac(a) => {
                let mut hits = pfac_scan(text, a, &self.config.scan)?;
                hits.retain(|h| h.offset < owned_end);
                Detections {
                    matches: confirm_hits(text, &hits, &self.prefixes, &self.rules)?,
                    stage1_hits: hits.len(),
                }
            }
            Prepared::Ac(a) => {
                let matches = chunked_ac_scan(text, a, &self.config.scan)?;
                Detections {
                    stage1_hits: matches.len(),
                    matches,
                }
            }
        };
        if owned_end < text.len() && !matches!(self.prepared, Prepared::Pfac(_)) {
            det.matches.retain(|m| m.offset < owned_end);
            det.stage1_hits = det.matches.len();
        }
        Ok(det)
    }

    /// Full report for an in-memory log.
    pub fn scan(&self, text: &[u8]) -> Result<ScanReport, Error> {
        let det = self.find(text)?;
        let lines = LineIndex::new(text);
        let alerts = alerts_from_matches(&det.matches, &self.rules, &lines);
        Ok(assemble_report(alerts, det.stage1_hits, text.len()))
    }

    /// Scans a stream in windows of `window` owned bytes, each extended by
    /// `max_len - 1` bytes of lookahead so matches across window edges are
    /// found exactly once. The report equals [`Scanner::scan`] on the
    /// concatenated input.
    pub fn scan_reader<R: Read>(&self, mut reader: R, window: usize) -> Result<ScanReport, Error> {
        let window = window.max(1);
        let lookahead = self.rules.max_len().saturating_sub(1);
        let mut buf: Vec<u8> = Vec::with_capacity(window + lookahead);
        let mut base = 0usize;
        let mut lines_before = 0usize;
        let mut stage1_hits = 0usize;
        let mut alerts = Vec::new();
        let mut eof = false;

        loop {
            let want = window + lookahead;
            while !eof && buf.len() < want {
                let old = buf.len();
                buf.resize(want, 0);
                let n = read_retrying(&mut reader, &mut buf[old..])?;
                buf.truncate(old + n);
                eof = n == 0;
            }
            if buf.is_empty() {
                break;
            }
            let owned = if eof { buf.len().min(window) } else { window };
            let det = self.find_owned(&buf, owned)?;
            stage1_hits += det.stage1_hits;
            let lines = LineIndex::new(&buf[..owned]);
            alerts.extend(alerts_from_matches(&det.matches, &self.rules, &lines).into_iter().map(
                |mut a| {
                    a.offset += base;
                    a.line += lines_before;
                    a
                },
            ));
            lines_before += lines.newline_count();
            base += owned;
            buf.drain(..owned);
            if eof && buf.is_empty() {
                break;
            }
        }
        Ok(assemble_report(alerts, stage1_hits, base))
    }
}

fn read_retrying<R: Read>(reader: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    loop {
        match reader.read(buf) {
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            r => return r,
        }
    }
}
