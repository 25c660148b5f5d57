//! Synthetic log corpora.
//!
//! Each byte comes from one MT19937 output: the low byte of the word is
//! accepted if it is below 190 and mapped to `32 + b % 95` (printable ASCII),
//! otherwise the word is discarded and the next one drawn. Every
//! `line_len`-th byte is a forced LF that consumes no generator output, so
//! each line holds `line_len - 1` printable bytes plus its terminator. The
//! SHA-256 of the whole output fingerprints the corpus.

mod mt19937;

use std::collections::HashSet;
use std::io::{self, Write};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::rules::{RuleError, RuleSet};

pub use mt19937::Mt19937;

/// Default corpus size: 100 MB (decimal).
pub const DEFAULT_SIZE: usize = 100_000_000;
pub const DEFAULT_LINE_LEN: usize = 80;

const PRINTABLE: u32 = 95;
/// Largest multiple of 95 that fits in a byte.
const ACCEPT_BELOW: u32 = PRINTABLE * 2;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("log size must be at least 1 byte")]
    EmptySize,
    #[error("line length must be at least 2 bytes, got {0}")]
    LineTooShort(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Rules(#[from] RuleError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub size: usize,
    pub seed: u32,
    pub line_len: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            size: DEFAULT_SIZE,
            seed: Mt19937::DEFAULT_SEED,
            line_len: DEFAULT_LINE_LEN,
        }
    }
}

impl GenSpec {
    pub fn new(size: usize, seed: u32) -> Self {
        GenSpec {
            size,
            seed,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.size == 0 {
            return Err(GenError::EmptySize);
        }
        if self.line_len < 2 {
            return Err(GenError::LineTooShort(self.line_len));
        }
        Ok(())
    }
}

/// Uniform printable-ASCII bytes from an MT19937 stream.
#[derive(Clone, Debug)]
pub struct PrintableBytes {
    mt: Mt19937,
}

impl PrintableBytes {
    pub fn new(seed: u32) -> Self {
        PrintableBytes {
            mt: Mt19937::new(seed),
        }
    }

    #[inline]
    pub fn next_byte(&mut self) -> u8 {
        loop {
            let b = self.mt.next_u32() & 0xff;
            if b < ACCEPT_BELOW {
                return (32 + b % PRINTABLE) as u8;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratedLog {
    pub bytes: Vec<u8>,
    /// Lowercase hex SHA-256 of `bytes`.
    pub digest: String,
}

pub fn generate_log(spec: &GenSpec) -> Result<GeneratedLog, GenError> {
    let mut bytes = Vec::with_capacity(spec.size);
    let digest = write_log(spec, &mut bytes)?;
    Ok(GeneratedLog { bytes, digest })
}

/// Streams a corpus into `out`, returning its hex SHA-256.
pub fn write_log<W: Write>(spec: &GenSpec, mut out: W) -> Result<String, GenError> {
    spec.validate()?;
    let mut src = PrintableBytes::new(spec.seed);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 64 * 1024];
    let mut pos = 0;
    while pos < spec.size {
        let n = buf.len().min(spec.size - pos);
        for (i, slot) in buf[..n].iter_mut().enumerate() {
            *slot = if (pos + i + 1) % spec.line_len == 0 {
                b'\n'
            } else {
                src.next_byte()
            };
        }
        hasher.update(&buf[..n]);
        out.write_all(&buf[..n])?;
        pos += n;
    }
    out.flush()?;
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `count` distinct random printable patterns of `len` bytes each, named
/// `rand-0`, `rand-1`, ...
pub fn random_patterns(count: usize, len: usize, seed: u32) -> Result<RuleSet, GenError> {
    let mut src = PrintableBytes::new(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut patterns = Vec::with_capacity(count);
    while patterns.len() < count {
        let p: Vec<u8> = (0..len).map(|_| src.next_byte()).collect();
        if seen.insert(p.clone()) {
            patterns.push((format!("rand-{}", patterns.len()), p));
        }
    }
    Ok(RuleSet::from_patterns(patterns)?)
}
