//! Shared fixtures for the criterion benchmarks.

use logtrawl::loggen::{generate_log, random_patterns, GenSpec};
use logtrawl::RuleSet;

/// A synthetic log and a random rule set, both derived from fixed seeds.
pub struct Corpus {
    pub text: Vec<u8>,
    pub rules: RuleSet,
}

impl Corpus {
    pub fn new(size: usize, patterns: usize, pattern_len: usize) -> Self {
        let text = generate_log(&GenSpec::new(size, 1234))
            .expect("valid generator spec")
            .bytes;
        let rules = random_patterns(patterns, pattern_len, 99).expect("distinct patterns");
        Corpus { text, rules }
    }
}
