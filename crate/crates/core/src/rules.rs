//! Rule files and the truncated prefix sets used by the first search stage.
//!
//! A rule file holds one rule per line:
//!
//! ```text
//! # comment
//! ssh-fail : Failed password for
//! nul-probe : \x00\x00GET
//! ```
//!
//! The name is everything before the first `:`, the pattern everything after
//! it, both trimmed of surrounding ASCII whitespace. The pattern segment
//! understands `\xNN` hex escapes and `\\` for a literal backslash. Lines may
//! end in LF or CRLF.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

/// Default prefix length for the first search stage.
pub const DEFAULT_PREFIX_LEN: usize = 8;

/// Longest pattern accepted by the parser.
pub const MAX_PATTERN_LEN: usize = 4096;

/// Dense pattern index within a [`RuleSet`].
pub type PatternId = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("line {line}: expected `name : pattern`")]
    MissingSeparator { line: usize },
    #[error("line {line}: rule name is empty")]
    EmptyName { line: usize },
    #[error("line {line}: rule name is not valid UTF-8")]
    InvalidName { line: usize },
    #[error("line {line}: pattern is empty")]
    EmptyPattern { line: usize },
    #[error("line {line}: pattern is {len} bytes, longer than the {max} byte limit")]
    PatternTooLong { line: usize, len: usize, max: usize },
    #[error("line {line}: malformed escape at column {column}")]
    MalformedEscape { line: usize, column: usize },
    #[error("line {line}: pattern duplicates the one on line {first}")]
    DuplicatePattern { line: usize, first: usize },
    #[error("pattern {index} is empty")]
    EmptyPatternBytes { index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub id: PatternId,
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

/// An ordered, duplicate-free set of patterns with ids `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    patterns: Vec<Pattern>,
    max_len: usize,
}

impl RuleSet {
    /// Builds a rule set from `(name, bytes)` pairs, assigning ids in order.
    pub fn from_patterns<I, N, B>(patterns: I) -> Result<Self, RuleError>
    where
        I: IntoIterator<Item = (N, B)>,
        N: Into<String>,
        B: Into<Vec<u8>>,
    {
        let mut set = RuleSet::default();
        let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
        for (index, (name, bytes)) in patterns.into_iter().enumerate() {
            let bytes = bytes.into();
            if bytes.is_empty() {
                return Err(RuleError::EmptyPatternBytes { index });
            }
            if bytes.len() > MAX_PATTERN_LEN {
                return Err(RuleError::PatternTooLong {
                    line: index + 1,
                    len: bytes.len(),
                    max: MAX_PATTERN_LEN,
                });
            }
            if let Some(&first) = seen.get(&bytes) {
                return Err(RuleError::DuplicatePattern {
                    line: index + 1,
                    first: first + 1,
                });
            }
            seen.insert(bytes.clone(), index);
            set.push(name.into(), bytes);
        }
        Ok(set)
    }

    fn push(&mut self, name: String, bytes: Vec<u8>) {
        self.max_len = self.max_len.max(bytes.len());
        self.patterns.push(Pattern {
            id: self.patterns.len() as PatternId,
            name,
            bytes,
        });
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    pub fn get(&self, id: PatternId) -> Option<&Pattern> {
        self.patterns.get(id as usize)
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Length of the longest pattern, 0 for an empty set.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    /// Renders the set back into rule-file syntax. Bytes outside printable
    /// ASCII, backslashes, and edge whitespace are escaped so that
    /// [`parse_rules`] reproduces the same set.
    pub fn to_rule_text(&self) -> String {
        let mut out = String::new();
        for p in &self.patterns {
            out.push_str(&p.name);
            out.push_str(" : ");
            let last = p.bytes.len() - 1;
            for (i, &b) in p.bytes.iter().enumerate() {
                match b {
                    b'\\' => out.push_str("\\\\"),
                    b' ' if i == 0 || i == last => out.push_str("\\x20"),
                    0x21..=0x7e | b' ' => out.push(b as char),
                    _ => {
                        let _ = write!(out, "\\x{b:02x}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Parses rule-file bytes into a [`RuleSet`].
pub fn parse_rules(source: &[u8]) -> Result<RuleSet, RuleError> {
    let mut set = RuleSet::default();
    let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();

    for (idx, raw) in source.split(|&b| b == b'\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix(b"\r").unwrap_or(raw);
        let trimmed = line.trim_ascii();
        if trimmed.is_empty() || trimmed[0] == b'#' {
            continue;
        }
        let colon = trimmed
            .iter()
            .position(|&b| b == b':')
            .ok_or(RuleError::MissingSeparator { line: line_no })?;
        let name = trimmed[..colon].trim_ascii();
        if name.is_empty() {
            return Err(RuleError::EmptyName { line: line_no });
        }
        let name = std::str::from_utf8(name)
            .map_err(|_| RuleError::InvalidName { line: line_no })?
            .to_owned();

        let segment = trimmed[colon + 1..].trim_ascii();
        let bytes = unescape(segment, line_no)?;
        if bytes.is_empty() {
            return Err(RuleError::EmptyPattern { line: line_no });
        }
        if bytes.len() > MAX_PATTERN_LEN {
            return Err(RuleError::PatternTooLong {
                line: line_no,
                len: bytes.len(),
                max: MAX_PATTERN_LEN,
            });
        }
        if let Some(&first) = seen.get(&bytes) {
            return Err(RuleError::DuplicatePattern {
                line: line_no,
                first,
            });
        }
        seen.insert(bytes.clone(), line_no);
        set.push(name, bytes);
    }
    Ok(set)
}

fn unescape(segment: &[u8], line: usize) -> Result<Vec<u8>, RuleError> {
    let mut out = Vec::with_capacity(segment.len());
    let mut i = 0;
    while i < segment.len() {
        let b = segment[i];
        if b != b'\\' {
            out.push(b);
            i += 1;
            continue;
        }
        let bad = RuleError::MalformedEscape {
            line,
            column: i + 1,
        };
        match segment.get(i + 1) {
            Some(b'\\') => {
                out.push(b'\\');
                i += 2;
            }
            Some(b'x') => {
                let hi = segment.get(i + 2).and_then(|&c| hex_digit(c));
                let lo = segment.get(i + 3).and_then(|&c| hex_digit(c));
                match (hi, lo) {
                    (Some(hi), Some(lo)) => out.push(hi << 4 | lo),
                    _ => return Err(bad),
                }
                i += 4;
            }
            _ => return Err(bad),
        }
    }
    Ok(out)
}

fn hex_digit(c: u8) -> Option<u8> {
    (c as char).to_digit(16).map(|d| d as u8)
}

/// One distinct truncated prefix and every pattern that truncates to it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixEntry {
    pub bytes: Vec<u8>,
    pub pattern_ids: Vec<PatternId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrefixSet {
    prefix_len: usize,
    entries: Vec<PrefixEntry>,
}

impl PrefixSet {
    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn entries(&self) -> &[PrefixEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Truncates every pattern to at most `prefix_len` bytes, merging patterns
/// whose truncations coincide. Entries keep first-appearance order.
///
/// # Panics
///
/// Panics if `prefix_len` is zero.
pub fn truncate_prefixes(rules: &RuleSet, prefix_len: usize) -> PrefixSet {
    assert!(prefix_len >= 1, "prefix length must be at least 1");
    let mut entries: Vec<PrefixEntry> = Vec::new();
    let mut index: HashMap<&[u8], usize> = HashMap::new();
    for p in rules.patterns() {
        let prefix = &p.bytes[..p.len().min(prefix_len)];
        match index.get(prefix) {
            Some(&e) => entries[e].pattern_ids.push(p.id),
            None => {
                index.insert(prefix, entries.len());
                entries.push(PrefixEntry {
                    bytes: prefix.to_vec(),
                    pattern_ids: vec![p.id],
                });
            }
        }
    }
    PrefixSet {
        prefix_len,
        entries,
    }
}
