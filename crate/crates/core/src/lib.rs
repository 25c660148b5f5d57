//! Multi-pattern log scanning.
//!
//! The main path is a two-stage search. Patterns are truncated to short
//! prefixes (8 bytes by default) and compiled into a failureless trie; every
//! byte offset of the log starts an independent trie walk that stops at the
//! first mismatch ([`scan::pfac_scan`]). Each prefix hit is then checked
//! against its full pattern ([`verify::confirm_hits`]).
//!
//! Chunked Aho-Corasick and a per-pattern KMP driver are provided as
//! baselines, along with a brute-force oracle, a deterministic synthetic log
//! generator, and a throughput harness.
//!
//! ```
//! use logtrawl::{parse_rules, EngineConfig, Scanner};
//!
//! let rules = parse_rules(b"his : HIS\nshe : SHE").unwrap();
//! let scanner = Scanner::new(&rules, EngineConfig::default()).unwrap();
//! let report = scanner.scan(b"SHIS").unwrap();
//! assert_eq!(report.total_matches, 1);
//! assert_eq!(report.alerts[0].offset, 1);
//! assert_eq!(report.alerts[0].rule_name, "his");
//! ```

pub mod automaton;
pub mod bench;
pub mod kmp;
pub mod loggen;
pub mod pipeline;
pub mod rules;
pub mod scan;
pub mod verify;

pub use automaton::{
    build_ac_automaton, build_failureless_trie, Automaton, AutomatonBuilder, AutomatonKind,
    Backend, BuildError, StateId,
};
pub use bench::{ThroughputReport, DEFAULT_RUNS};
pub use kmp::{build_failure_table, kmp_multi, kmp_search, FailureTable};
pub use loggen::{generate_log, GenSpec};
pub use pipeline::{Detections, EngineConfig, EngineKind, Error, Scanner};
pub use rules::{parse_rules, truncate_prefixes, Pattern, PatternId, PrefixSet, RuleSet};
pub use scan::{chunked_ac_scan, naive_scan, pfac_scan, Hit, Match, ScanConfig};
pub use verify::{assemble_report, verify_hits, Alert, LineIndex, ScanReport};
