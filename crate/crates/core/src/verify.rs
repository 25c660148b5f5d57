//! Stage-2 verification of prefix hits and alert reports.

use std::ops::Range;

use thiserror::Error;

use crate::rules::{PatternId, PrefixSet, RuleSet};
use crate::scan::{Hit, Match};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("hit at offset {offset} (+{len} bytes) lies outside the {text_len} byte text")]
    OutOfRange {
        offset: usize,
        len: usize,
        text_len: usize,
    },
    #[error("hit refers to unknown pattern {0}")]
    UnknownPattern(PatternId),
    #[error("hit at offset {offset} has matched length {found}, prefix set expects {expected}")]
    PrefixLength {
        offset: usize,
        found: usize,
        expected: usize,
    },
}

/// Offsets of every LF in a log, for mapping byte offsets to 1-based lines.
/// An LF belongs to the line it terminates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LineIndex {
    newlines: Vec<usize>,
    len: usize,
}

impl LineIndex {
    pub fn new(text: &[u8]) -> Self {
        let newlines = text
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| (b == b'\n').then_some(i))
            .collect();
        LineIndex {
            newlines,
            len: text.len(),
        }
    }

    pub fn line_of(&self, offset: usize) -> usize {
        self.newlines.partition_point(|&nl| nl < offset) + 1
    }

    /// Byte range of a 1-based line, terminator included.
    pub fn line_span(&self, line: usize) -> Range<usize> {
        assert!(line >= 1, "lines are 1-based");
        let start = match line {
            1 => 0,
            _ => self.newlines.get(line - 2).map_or(self.len, |&nl| nl + 1),
        };
        let end = self.newlines.get(line - 1).map_or(self.len, |&nl| nl + 1);
        start..end
    }

    pub fn newline_count(&self) -> usize {
        self.newlines.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alert {
    pub offset: usize,
    /// 1-based line containing `offset`.
    pub line: usize,
    pub rule_id: PatternId,
    pub rule_name: String,
    pub pattern_len: usize,
    pub verified: bool,
}

/// Confirms each hit against its full pattern. Patterns no longer than the
/// prefix length are accepted as-is; longer ones must match the bytes past
/// the prefix. Output is sorted by `(offset, pattern_id)`.
pub fn confirm_hits(
    text: &[u8],
    hits: &[Hit],
    prefixes: &PrefixSet,
    rules: &RuleSet,
) -> Result<Vec<Match>, VerifyError> {
    let prefix_len = prefixes.prefix_len();
    let mut out = Vec::new();
    for hit in hits {
        let pattern = rules
            .get(hit.pattern_id)
            .ok_or(VerifyError::UnknownPattern(hit.pattern_id))?;
        if hit.offset.saturating_add(hit.matched_len) > text.len() {
            return Err(VerifyError::OutOfRange {
                offset: hit.offset,
                len: hit.matched_len,
                text_len: text.len(),
            });
        }
        let expected = pattern.len().min(prefix_len);
        if hit.matched_len != expected {
            return Err(VerifyError::PrefixLength {
                offset: hit.offset,
                found: hit.matched_len,
                expected,
            });
        }
        let confirmed = pattern.len() <= prefix_len
            || text
                .get(hit.offset + prefix_len..hit.offset + pattern.len())
                .is_some_and(|rest| rest == &pattern.bytes[prefix_len..]);
        if confirmed {
            out.push(Match {
                offset: hit.offset,
                pattern_id: pattern.id,
            });
        }
    }
    out.sort_unstable();
    debug_assert!(out.windows(2).all(|w| w[0] != w[1]));
    Ok(out)
}

/// Attaches rule names and line numbers to confirmed matches.
///
/// # Panics
///
/// Panics if a match names a pattern missing from `rules`.
pub fn alerts_from_matches(matches: &[Match], rules: &RuleSet, lines: &LineIndex) -> Vec<Alert> {
    matches
        .iter()
        .map(|m| {
            let p = rules.get(m.pattern_id).expect("match for unknown pattern");
            Alert {
                offset: m.offset,
                line: lines.line_of(m.offset),
                rule_id: p.id,
                rule_name: p.name.clone(),
                pattern_len: p.len(),
                verified: true,
            }
        })
        .collect()
}

/// [`confirm_hits`] followed by [`alerts_from_matches`].
pub fn verify_hits(
    text: &[u8],
    lines: &LineIndex,
    hits: &[Hit],
    prefixes: &PrefixSet,
    rules: &RuleSet,
) -> Result<Vec<Alert>, VerifyError> {
    let matches = confirm_hits(text, hits, prefixes, rules)?;
    Ok(alerts_from_matches(&matches, rules, lines))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScanReport {
    pub alerts: Vec<Alert>,
    pub total_matches: usize,
    pub stage1_hits: usize,
    pub stage1_rejected: usize,
    pub bytes_scanned: usize,
}

/// # Panics
///
/// Panics if there are more alerts than stage-1 hits.
pub fn assemble_report(alerts: Vec<Alert>, stage1_hits: usize, bytes_scanned: usize) -> ScanReport {
    assert!(
        alerts.len() <= stage1_hits,
        "{} alerts from {stage1_hits} stage-1 hits",
        alerts.len()
    );
    ScanReport {
        total_matches: alerts.len(),
        stage1_rejected: stage1_hits - alerts.len(),
        stage1_hits,
        bytes_scanned,
        alerts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::truncate_prefixes;

    fn setup() -> (RuleSet, PrefixSet) {
        let rules = RuleSet::from_patterns([("getpw", "GETPASSWORDFILE"), ("root", "root")]).unwrap();
        let prefixes = truncate_prefixes(&rules, 8);
        (rules, prefixes)
    }

    fn hit(offset: usize, pattern_id: u32, matched_len: usize) -> Hit {
        Hit {
            offset,
            pattern_id,
            matched_len,
        }
    }

    #[test]
    fn confirms_full_pattern() {
        let (rules, prefixes) = setup();
        let text = b"0123456789GETPASSWORDFILE and more";
        let lines = LineIndex::new(text);
        let alerts = verify_hits(text, &lines, &[hit(10, 0, 8)], &prefixes, &rules).unwrap();
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].offset, 10);
        assert_eq!(alerts[0].rule_name, "getpw");
        assert_eq!(alerts[0].pattern_len, 15);
        assert!(alerts[0].verified);
    }

    #[test]
    fn rejects_suffix_mismatch() {
        let (rules, prefixes) = setup();
        let text = b"0123456789GETPASSWXYZ";
        let lines = LineIndex::new(text);
        assert!(verify_hits(text, &lines, &[hit(10, 0, 8)], &prefixes, &rules)
            .unwrap()
            .is_empty());
        // suffix runs off the end of the text
        let text = b"0123456789GETPASSWORD";
        assert!(verify_hits(text, &LineIndex::new(text), &[hit(10, 0, 8)], &prefixes, &rules)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn short_patterns_auto_verify() {
        let (rules, prefixes) = setup();
        let text = b"root:x:0:0";
        let alerts = verify_hits(text, &LineIndex::new(text), &[hit(0, 1, 4)], &prefixes, &rules).unwrap();
        assert_eq!(alerts.len(), 1);
        assert_eq!(alerts[0].rule_id, 1);
    }

    #[test]
    fn inconsistent_hits_are_errors() {
        let (rules, prefixes) = setup();
        let text = b"roo";
        let lines = LineIndex::new(text);
        assert!(matches!(
            verify_hits(text, &lines, &[hit(0, 1, 4)], &prefixes, &rules),
            Err(VerifyError::OutOfRange { .. })
        ));
        assert_eq!(
            verify_hits(text, &lines, &[hit(0, 9, 1)], &prefixes, &rules),
            Err(VerifyError::UnknownPattern(9))
        );
        assert!(matches!(
            verify_hits(text, &lines, &[hit(0, 1, 2)], &prefixes, &rules),
            Err(VerifyError::PrefixLength { .. })
        ));
    }

    #[test]
    fn line_numbers() {
        let text = b"ab\ncd\n\nef";
        let idx = LineIndex::new(text);
        assert_eq!(idx.line_of(0), 1);
        assert_eq!(idx.line_of(2), 1); // the LF itself
        assert_eq!(idx.line_of(3), 2);
        assert_eq!(idx.line_of(6), 3);
        assert_eq!(idx.line_of(7), 4);
        assert_eq!(idx.line_span(1), 0..3);
        assert_eq!(idx.line_span(3), 6..7);
        assert_eq!(idx.line_span(4), 7..9);
        for off in 0..text.len() {
            assert!(idx.line_span(idx.line_of(off)).contains(&off));
        }
    }

    #[test]
    fn report_counts() {
        let r = assemble_report(Vec::new(), 0, 0);
        assert_eq!((r.total_matches, r.stage1_hits, r.stage1_rejected, r.bytes_scanned), (0, 0, 0, 0));

        let alert = |offset| Alert {
            offset,
            line: 1,
            rule_id: 0,
            rule_name: "x".into(),
            pattern_len: 1,
            verified: true,
        };
        let r = assemble_report(vec![alert(0), alert(1), alert(2)], 5, 100);
        assert_eq!(r.total_matches, 3);
        assert_eq!(r.stage1_rejected, 2);
        assert_eq!(r.total_matches, r.stage1_hits - r.stage1_rejected);
    }
}
