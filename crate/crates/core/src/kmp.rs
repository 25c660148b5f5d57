//! Knuth-Morris-Pratt single-pattern search and a sequential multi-pattern
//! driver, kept as the one-pattern-at-a-time baseline.

use crate::rules::{Pattern, PatternId, RuleSet};
use crate::scan::Match;

/// `table[i]` is the length of the longest proper prefix of `pattern[..=i]`
/// that is also a suffix of it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FailureTable {
    pub pattern_id: PatternId,
    pub table: Vec<usize>,
}

pub fn build_failure_table(pattern: &Pattern) -> FailureTable {
    let p = &pattern.bytes;
    let mut table = vec![0; p.len()];
    let mut k = 0;
    for i in 1..p.len() {
        while k > 0 && p[k] != p[i] {
            k = table[k - 1];
        }
        if p[k] == p[i] {
            k += 1;
        }
        table[i] = k;
    }
    FailureTable {
        pattern_id: pattern.id,
        table,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Start offsets in ascending order, overlapping occurrences included.
    pub offsets: Vec<usize>,
    /// Text-versus-pattern byte comparisons performed.
    pub comparisons: u64,
}

pub fn kmp_search(text: &[u8], pattern: &Pattern, ft: &FailureTable) -> SearchOutcome {
    let p = &pattern.bytes;
    let m = p.len();
    let mut out = SearchOutcome::default();
    if m == 0 || text.len() < m {
        return out;
    }
    let mut k = 0;
    for (i, &t) in text.iter().enumerate() {
        loop {
            out.comparisons += 1;
            if p[k] == t {
                k += 1;
                break;
            }
            if k == 0 {
                break;
            }
            k = ft.table[k - 1];
        }
        if k == m {
            out.offsets.push(i + 1 - m);
            k = ft.table[m - 1];
        }
    }
    out
}

/// Failure tables for every pattern of a rule set, built once and reused.
#[derive(Clone, Debug)]
pub struct KmpMatcher {
    rules: RuleSet,
    tables: Vec<FailureTable>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiOutcome {
    /// Sorted by `(offset, pattern_id)`.
    pub matches: Vec<Match>,
    pub comparisons: u64,
}

impl KmpMatcher {
    pub fn new(rules: &RuleSet) -> Self {
        let tables = rules.patterns().iter().map(build_failure_table).collect();
        KmpMatcher {
            rules: rules.clone(),
            tables,
        }
    }

    /// Searches the text once per pattern.
    pub fn find_all(&self, text: &[u8]) -> MultiOutcome {
        let mut out = MultiOutcome::default();
        for (p, ft) in self.rules.patterns().iter().zip(&self.tables) {
            let r = kmp_search(text, p, ft);
            out.comparisons += r.comparisons;
            out.matches.extend(r.offsets.into_iter().map(|offset| Match {
                offset,
                pattern_id: p.id,
            }));
        }
        out.matches.sort_unstable();
        out
    }
}

pub fn kmp_multi(text: &[u8], rules: &RuleSet) -> MultiOutcome {
    KmpMatcher::new(rules).find_all(text)
}
