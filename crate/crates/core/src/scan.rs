//! Scan kernels.
//!
//! [`pfac_scan`] starts one logical worker at every byte of the text and
//! walks the failureless trie until the walk dies. The logical workers are
//! batched: start positions are split into contiguous ranges, one per OS
//! thread, and the per-thread hit buffers are merged and sorted afterwards,
//! so the result does not depend on the worker count. Within a range, a
//! 64 Kibit table of two-byte starts drops positions whose walk cannot reach
//! an output before any walking is done.
//!
//! [`chunked_ac_scan`] is the classic way of parallelizing Aho-Corasick: cut
//! the text into chunks and walk each one from the root. Chunks are extended
//! by `overlap` bytes; a match is reported only by the chunk that owns its
//! start offset.

use std::num::NonZeroUsize;
use std::ops::Range;
use std::thread;

use thiserror::Error;

use crate::automaton::{Automaton, AutomatonKind, Goto, Transitions, ROOT};
use crate::rules::{PatternId, PrefixSet, RuleSet};

/// A full-pattern occurrence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Match {
    pub offset: usize,
    pub pattern_id: PatternId,
}

/// A stage-1 prefix occurrence awaiting verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hit {
    pub offset: usize,
    pub pattern_id: PatternId,
    pub matched_len: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScanError {
    #[error("expected a {expected:?} automaton, got {found:?}")]
    WrongKind {
        expected: AutomatonKind,
        found: AutomatonKind,
    },
    #[error("chunk size must be at least 1")]
    ZeroChunk,
}

/// Minimum start positions per thread before a scan is split.
const MIN_POSITIONS_PER_WORKER: usize = 16 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanConfig {
    pub workers: NonZeroUsize,
    /// Owned bytes per chunk (chunked Aho-Corasick only).
    pub chunk_size: usize,
    /// Extra bytes each chunk reads past its owned range (chunked
    /// Aho-Corasick only). Lossless once `overlap >= max_len - 1`.
    pub overlap: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            workers: default_workers(),
            chunk_size: 1 << 20,
            overlap: 0,
        }
    }
}

impl ScanConfig {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = NonZeroUsize::new(workers).unwrap_or(NonZeroUsize::MIN);
        self
    }

    /// Sets the overlap to the minimum lossless value for `rules`.
    pub fn lossless_for(mut self, rules: &RuleSet) -> Self {
        self.overlap = rules.max_len().saturating_sub(1);
        self
    }
}

pub fn default_workers() -> NonZeroUsize {
    thread::available_parallelism().unwrap_or(NonZeroUsize::MIN)
}

/// Splits `0..n` into at most `workers` contiguous ranges, runs `f` on each
/// (in parallel when worthwhile) and concatenates the results in range order.
pub(crate) fn run_partitioned<T, F>(n: usize, workers: NonZeroUsize, min_per_worker: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> Vec<T> + Sync,
{
    let workers = workers.get().min(n / min_per_worker.max(1)).max(1);
    if workers == 1 {
        return f(0..n);
    }
    let step = n.div_ceil(workers);
    let parts: Vec<Vec<T>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let range = (w * step).min(n)..((w + 1) * step).min(n);
                let f = &f;
                scope.spawn(move || f(range))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect()
    });
    parts.into_iter().flatten().collect()
}

fn expect_kind(a: &Automaton, expected: AutomatonKind) -> Result<(), ScanError> {
    if a.kind() == expected {
        Ok(())
    } else {
        Err(ScanError::WrongKind {
            expected,
            found: a.kind(),
        })
    }
}

/// Stage-1 scan: every start position walks the failureless trie and emits a
/// hit for each output state it passes. Sorted by `(offset, pattern_id)`.
pub fn pfac_scan(text: &[u8], a: &Automaton, cfg: &ScanConfig) -> Result<Vec<Hit>, ScanError> {
    expect_kind(a, AutomatonKind::Failureless)?;
    let mut hits = match a.transitions() {
        Transitions::Dense(t) => pfac_partitioned(text, a, t, cfg),
        Transitions::Compact(t) => pfac_partitioned(text, a, t, cfg),
    };
    hits.sort_unstable();
    Ok(hits)
}

fn pfac_partitioned<G: Goto + Sync>(
    text: &[u8],
    a: &Automaton,
    table: &G,
    cfg: &ScanConfig,
) -> Vec<Hit> {
    run_partitioned(text.len(), cfg.workers, MIN_POSITIONS_PER_WORKER, |range| {
        let mut hits = Vec::new();
        pfac_range(text, a, table, range, &mut hits);
        hits
    })
}

/// Start positions filtered per block before walking.
const FILTER_BLOCK: usize = 1024;

#[inline]
fn pfac_range<G: Goto>(
    text: &[u8],
    a: &Automaton,
    table: &G,
    starts: Range<usize>,
    hits: &mut Vec<Hit>,
) {
    // Positions whose first two bytes cannot lead to an output are dropped
    // without a branch; only the survivors are walked.
    let mut candidates = [0usize; FILTER_BLOCK];
    let mut block = starts.start;
    while block < starts.end {
        let end = (block + FILTER_BLOCK).min(starts.end);
        let paired_end = end.min(text.len() - 1).max(block);
        let mut n = 0;
        for start in block..paired_end {
            candidates[n] = start;
            n += a.may_start(text[start], text[start + 1]) as usize;
        }
        for start in paired_end..end {
            candidates[n] = start;
            n += 1;
        }
        for &start in &candidates[..n] {
            walk_from(text, a, table, start, hits);
        }
        block = end;
    }
}

#[inline]
fn walk_from<G: Goto>(text: &[u8], a: &Automaton, table: &G, start: usize, hits: &mut Vec<Hit>) {
    let Some(mut state) = a.root_step(text[start]) else {
        return;
    };
    let mut pos = start;
    loop {
        if a.has_output(state) {
            hits.extend(a.outputs(state).iter().map(|o| Hit {
                offset: start,
                pattern_id: o.pattern_id,
                matched_len: o.matched_len as usize,
            }));
        }
        pos += 1;
        match text.get(pos).and_then(|&b| table.goto(state, b)) {
            Some(next) => state = next,
            None => return,
        }
    }
}

/// Sequential Aho-Corasick walk over the whole text.
pub fn ac_scan(text: &[u8], a: &Automaton) -> Result<Vec<Match>, ScanError> {
    expect_kind(a, AutomatonKind::FullAc)?;
    let mut out = match a.transitions() {
        Transitions::Dense(t) => ac_window(text, a, t, 0, text.len(), text.len()),
        Transitions::Compact(t) => ac_window(text, a, t, 0, text.len(), text.len()),
    };
    out.sort_unstable();
    Ok(out)
}

/// Walks `text[from..to)` from the root, keeping matches that start before
/// `owned_end`.
fn ac_window<G: Goto>(
    text: &[u8],
    a: &Automaton,
    table: &G,
    from: usize,
    owned_end: usize,
    to: usize,
) -> Vec<Match> {
    let mut out = Vec::new();
    let mut state = ROOT;
    for (pos, &b) in text[from..to].iter().enumerate() {
        state = a.ac_step_with(table, state, b);
        if a.has_output(state) {
            let end = from + pos + 1;
            for o in a.outputs(state) {
                let offset = end - o.matched_len as usize;
                if offset < owned_end {
                    out.push(Match {
                        offset,
                        pattern_id: o.pattern_id,
                    });
                }
            }
        }
    }
    out
}

/// Chunked Aho-Corasick. Chunk `k` owns `[k*c, (k+1)*c)` and reads up to
/// `(k+1)*c + overlap`. Sorted by `(offset, pattern_id)`.
pub fn chunked_ac_scan(
    text: &[u8],
    a: &Automaton,
    cfg: &ScanConfig,
) -> Result<Vec<Match>, ScanError> {
    expect_kind(a, AutomatonKind::FullAc)?;
    if cfg.chunk_size == 0 {
        return Err(ScanError::ZeroChunk);
    }
    let chunks = text.len().div_ceil(cfg.chunk_size);
    let mut out = match a.transitions() {
        Transitions::Dense(t) => chunked_partitioned(text, a, t, cfg, chunks),
        Transitions::Compact(t) => chunked_partitioned(text, a, t, cfg, chunks),
    };
    out.sort_unstable();
    Ok(out)
}

fn chunked_partitioned<G: Goto + Sync>(
    text: &[u8],
    a: &Automaton,
    table: &G,
    cfg: &ScanConfig,
    chunks: usize,
) -> Vec<Match> {
    let min_chunks = MIN_POSITIONS_PER_WORKER.div_ceil(cfg.chunk_size);
    run_partitioned(chunks, cfg.workers, min_chunks, |range| {
        let mut out = Vec::new();
        for k in range {
            let from = k * cfg.chunk_size;
            let owned_end = (from + cfg.chunk_size).min(text.len());
            let to = owned_end.saturating_add(cfg.overlap).min(text.len());
            out.extend(ac_window(text, a, table, from, owned_end, to));
        }
        out
    })
}

/// Brute-force oracle: compares every pattern at every offset.
pub fn naive_scan(text: &[u8], rules: &RuleSet) -> Vec<Match> {
    let mut out = Vec::new();
    for offset in 0..text.len() {
        for p in rules.patterns() {
            if text[offset..].starts_with(&p.bytes) {
                out.push(Match {
                    offset,
                    pattern_id: p.id,
                });
            }
        }
    }
    out
}

/// Brute-force stage 1: every prefix entry at every offset.
pub fn naive_prefix_scan(text: &[u8], prefixes: &PrefixSet) -> Vec<Hit> {
    let mut out = Vec::new();
    for offset in 0..text.len() {
        for e in prefixes.entries() {
            if text[offset..].starts_with(&e.bytes) {
                out.extend(e.pattern_ids.iter().map(|&pattern_id| Hit {
                    offset,
                    pattern_id,
                    matched_len: e.bytes.len(),
                }));
            }
        }
    }
    out.sort_unstable();
    out
}
