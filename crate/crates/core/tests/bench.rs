use logtrawl::bench::{measure_scanner, time_runs};
use logtrawl::loggen::{generate_log, random_patterns, GenSpec};
use logtrawl::{EngineConfig, EngineKind, Scanner};

#[test]
fn twice_the_bytes_takes_at_least_as_long() {
    let text = generate_log(&GenSpec::new(2_000_000, 8)).unwrap().bytes;
    let rules = random_patterns(20, 16, 8).unwrap();
    let scanner = Scanner::new(&rules, EngineConfig::new(EngineKind::Kmp)).unwrap();
    let half = measure_scanner(&scanner, &text[..1_000_000], 7).unwrap();
    let full = measure_scanner(&scanner, &text, 7).unwrap();
    assert!(
        full.median_seconds() >= 0.9 * half.median_seconds(),
        "{} vs {}",
        full.median_seconds(),
        half.median_seconds()
    );
}

#[test]
fn timed_closure_sees_prebuilt_inputs() {
    // The closure only borrows a built scanner and the text; nothing is
    // rebuilt per run, so repeated runs return the same detections.
    let text = b"HIS SHE HIS".repeat(50);
    let rules = logtrawl::RuleSet::from_patterns([("h", "HIS"), ("s", "SHE")]).unwrap();
    let scanner = Scanner::new(&rules, EngineConfig::new(EngineKind::PfacDense)).unwrap();
    let mut seen = Vec::new();
    let times = time_runs(5, || seen.push(scanner.find(&text).unwrap()));
    assert_eq!(times.len(), 5);
    assert!(seen.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(seen[0].matches.len(), 150);
}
