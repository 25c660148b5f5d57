//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p logtrawl-cli --test acceptance`.

use std::collections::BTreeSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use clap::Parser;

use logtrawl::bench::{self, PatternSpec};
use logtrawl::kmp::{build_failure_table, kmp_search};
use logtrawl::loggen::{self, random_patterns, sha256_hex, GenSpec, Mt19937};
use logtrawl::{
    build_ac_automaton, chunked_ac_scan, generate_log, naive_scan, Backend, EngineConfig,
    EngineKind, Match, Pattern, RuleSet, ScanConfig, Scanner,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Rng(Mt19937);

impl Rng {
    fn new(seed: u32) -> Self {
        Rng(Mt19937::new(seed))
    }

    fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u32() as u64 * n as u64) >> 32) as usize
    }

    fn range(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    fn bytes(&mut self, n: usize, small: bool) -> Vec<u8> {
        (0..n)
            .map(|_| {
                if small {
                    b"ABCD"[self.below(4)]
                } else {
                    self.0.next_u32() as u8
                }
            })
            .collect()
    }
}

fn rule_set(pats: Vec<Vec<u8>>) -> RuleSet {
    let mut seen = BTreeSet::new();
    let uniq = pats.into_iter().filter(|p| seen.insert(p.clone()));
    RuleSet::from_patterns(uniq.enumerate().map(|(i, p)| (format!("r{i}"), p))).unwrap()
}

fn scanner(rules: &RuleSet, engine: EngineKind, prefix_len: usize) -> Scanner {
    let config = EngineConfig {
        prefix_len,
        ..EngineConfig::new(engine)
    };
    Scanner::new(rules, config).unwrap()
}

fn oracle_exactness() -> Outcome {
    let mut rng = Rng::new(20240601);
    let mut total_matches = 0;
    for trial in 0..1000 {
        let small = trial % 2 == 0;
        let len = rng.range(0, 4096);
        let mut text = rng.bytes(len, small);
        let count = rng.range(1, 32);
        let pats: Vec<_> = (0..count).map(|_| {
            let n = rng.range(1, 16);
            rng.bytes(n, small)
        }).collect();
        let rules = rule_set(pats);
        for _ in 0..rng.range(0, 8) {
            let p = rules.patterns()[rng.below(rules.len())].bytes.clone();
            if p.len() <= text.len() {
                let at = rng.range(0, text.len() - p.len());
                text[at..at + p.len()].copy_from_slice(&p);
            }
        }
        let l = [4, 8, usize::MAX][trial % 3];
        let engine = if trial % 4 < 2 { EngineKind::PfacDense } else { EngineKind::PfacCompact };
        let got = scanner(&rules, engine, l).find(&text).unwrap().matches;
        let want = naive_scan(&text, &rules);
        check(got == want, || {
            format!("trial {trial} (L={l}, {}): {} matches vs naive {}", engine.as_str(), got.len(), want.len())
        })?;
        total_matches += want.len();
    }
    Ok(format!("1000 trials, {total_matches} matches, all equal to naive scan"))
}

fn chunk_boundary() -> Outcome {
    let text = b"XXHISXX";
    let rules = RuleSet::from_patterns([("his", "HIS"), ("she", "SHE")]).unwrap();
    let a = build_ac_automaton(&rules, Backend::Dense).unwrap();
    let cfg = |overlap| ScanConfig { chunk_size: 4, overlap, ..ScanConfig::default().with_workers(1) };
    let none = chunked_ac_scan(text, &a, &cfg(0)).unwrap();
    check(none.is_empty(), || format!("overlap 0 found {none:?}"))?;
    let lossless = chunked_ac_scan(text, &a, &cfg(rules.max_len() - 1)).unwrap();
    let want = vec![Match { offset: 2, pattern_id: 0 }];
    check(lossless == want, || format!("overlap 2 found {lossless:?}"))?;
    let unchunked = chunked_ac_scan(text, &a, &ScanConfig { chunk_size: text.len(), ..cfg(0) }).unwrap();
    check(unchunked == want, || format!("unchunked scan found {unchunked:?}"))?;
    Ok("overlap 0 -> [], overlap 2 -> [(2, HIS)] = unchunked".into())
}

fn kmp_scaling() -> Outcome {
    let text = generate_log(&GenSpec::new(5_000_000, loggen::Mt19937::DEFAULT_SEED)).unwrap().bytes;
    let cfg = EngineConfig::new(EngineKind::Kmp);
    let r = bench::scaling_sweep(&cfg, &text, &[10, 100], PatternSpec::default(), 3).unwrap();
    let ratio = r[0].throughput_bps / r[1].throughput_bps;
    let detail = format!(
        "k=10 {:.3e} bps, k=100 {:.3e} bps, ratio {ratio:.2} (want 6..14)",
        r[0].throughput_bps, r[1].throughput_bps
    );
    check((6.0..=14.0).contains(&ratio), || detail.clone())?;
    Ok(detail)
}

fn pfac_invariance() -> Outcome {
    let text = generate_log(&GenSpec::new(10_000_000, loggen::Mt19937::DEFAULT_SEED)).unwrap().bytes;
    let mut parts = Vec::new();
    for engine in [EngineKind::PfacDense, EngineKind::PfacCompact] {
        let r = bench::scaling_sweep(&EngineConfig::new(engine), &text, &[10, 1000], PatternSpec::default(), bench::DEFAULT_RUNS).unwrap();
        let ratio = r[1].throughput_bps / r[0].throughput_bps;
        let detail = format!("{}: k=1000/k=10 = {ratio:.3}", engine.as_str());
        check(ratio >= 0.5, || format!("{detail} (want >= 0.5)"))?;
        parts.push(detail);
    }
    Ok(parts.join(", "))
}

fn backend_comparison() -> Outcome {
    let text = generate_log(&GenSpec::new(1 << 20, loggen::Mt19937::DEFAULT_SEED)).unwrap().bytes;
    let rules = random_patterns(1000, 16, 1).unwrap();
    let cmp = bench::compare_backends(&EngineConfig::new(EngineKind::PfacCompact), &text, &rules, 100).unwrap();
    let (d, c) = (&cmp.dense, &cmp.compact);
    check(d.engine == EngineKind::PfacDense && c.engine == EngineKind::PfacCompact, || "engines not paired".into())?;
    check(d.runs == 100 && c.runs == 100, || format!("runs {} / {}", d.runs, c.runs))?;
    check((d.bytes, d.pattern_count) == (c.bytes, c.pattern_count), || "inputs differ".into())?;
    for r in [d, c] {
        let mean = r.run_seconds.iter().sum::<f64>() / r.run_seconds.len() as f64;
        check(r.mean_seconds == mean, || "mean is not the run average".into())?;
        check(r.throughput_bps == 8.0 * r.bytes as f64 / mean, || "throughput formula".into())?;
    }
    let mut csv = Vec::new();
    bench::write_csv(&mut csv, &[d.clone(), c.clone()]).unwrap();
    let rows = bench::read_csv(&csv[..]).unwrap();
    check(rows.len() == 2 && rows[0].backend == "dense" && rows[1].backend == "compact", || "csv rows".into())?;
    Ok(format!(
        "1 MiB, 1000 patterns, 100 runs: dense {:.3e} bps, compact {:.3e} bps, compact/dense {:.3}",
        d.throughput_bps,
        c.throughput_bps,
        cmp.ratio()
    ))
}

fn false_positive_rate() -> Outcome {
    let text = generate_log(&GenSpec::new(10_000_000, loggen::Mt19937::DEFAULT_SEED)).unwrap().bytes;
    let rules = random_patterns(1000, 32, 3).unwrap();
    let report = scanner(&rules, EngineKind::PfacCompact, 8).scan(&text).unwrap();
    let rate = report.stage1_rejected as f64 / report.bytes_scanned as f64;
    let detail = format!(
        "{} stage-1 hits, {} rejected over {} bytes, rate {rate:.3e}",
        report.stage1_hits, report.stage1_rejected, report.bytes_scanned
    );
    check(rate < 1e-6, || detail.clone())?;
    Ok(detail)
}

fn scan_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut text = generate_log(&GenSpec::new(10_000_000, 11)).unwrap().bytes;
    let rules = random_patterns(100, 12, 5).unwrap();
    let mut rng = Rng::new(9);
    for _ in 0..500 {
        let p = &rules.patterns()[rng.below(rules.len())].bytes;
        let at = rng.below(text.len() - p.len());
        text[at..at + p.len()].copy_from_slice(p);
    }
    let log = dir.path().join("big.log");
    let rules_path = dir.path().join("rules.txt");
    fs::write(&log, &text).unwrap();
    fs::write(&rules_path, rules.to_rule_text()).unwrap();

    let run = |workers: &str| {
        let cli = logtrawl_cli::Cli::try_parse_from([
            "logtrawl",
            "scan",
            "--rules",
            rules_path.to_str().unwrap(),
            "--workers",
            workers,
            log.to_str().unwrap(),
        ])
        .unwrap();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = logtrawl_cli::run(&cli, &mut out, &mut err);
        (code, out)
    };
    let (code, one) = run("1");
    check(code == 1, || format!("exit code {code}"))?;
    let alerts = one.iter().filter(|&&b| b == b'\n').count() - 1;
    check(alerts >= 500, || format!("only {alerts} alerts"))?;
    for w in ["2", "8"] {
        let (c, out) = run(w);
        check(c == code && out == one, || format!("workers {w} output differs"))?;
    }
    Ok(format!("{alerts} alerts, {} output bytes identical for workers 1, 2, 8", one.len()))
}

fn kmp_comparison_bound() -> Outcome {
    let mut rng = Rng::new(4242);
    let mut worst = 0.0f64;
    for i in 0..10_000 {
        let alphabet = [2usize, 4, 256][i % 3];
        let sym = |r: &mut Rng| if alphabet == 256 { r.0.next_u32() as u8 } else { b'a' + r.below(alphabet) as u8 };
        let n = rng.range(0, 2048);
        let m = rng.range(1, 16);
        let text: Vec<u8> = (0..n).map(|_| sym(&mut rng)).collect();
        let pattern = Pattern { id: 0, name: "p".into(), bytes: (0..m).map(|_| sym(&mut rng)).collect() };
        let out = kmp_search(&text, &pattern, &build_failure_table(&pattern));
        check(out.comparisons <= 2 * n as u64, || {
            format!("pair {i}: {} comparisons for |text| = {n}", out.comparisons)
        })?;
        if n > 0 {
            worst = worst.max(out.comparisons as f64 / n as f64);
        }
    }
    Ok(format!("10000 pairs, max comparisons/|text| = {worst:.3}"))
}

fn generator_fidelity() -> Outcome {
    let first = Mt19937::new(5489).next_u32();
    check(first == 3_499_211_612, || format!("first output {first}"))?;
    let vectors: [(&[u8], &str); 3] = [
        (b"", "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"),
        (b"abc", "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"),
        (
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
        ),
    ];
    for (input, want) in vectors {
        let got = sha256_hex(input);
        check(got == want, || format!("sha256({:?}) = {got}", String::from_utf8_lossy(input)))?;
    }
    let dir = tempfile::tempdir().unwrap();
    for size in [1usize, 1023, 1024, 1_000_000] {
        let spec = GenSpec::new(size, 5489);
        let log = generate_log(&spec).unwrap();
        check(log.bytes.len() == size, || format!("buffered size {} for {size}", log.bytes.len()))?;
        let path = dir.path().join(format!("{size}.log"));
        let digest = loggen::write_log(&spec, fs::File::create(&path).unwrap()).unwrap();
        let on_disk = fs::read(&path).unwrap();
        check(on_disk.len() == size, || format!("file size {} for {size}", on_disk.len()))?;
        check(digest == log.digest && digest == sha256_hex(&on_disk), || format!("digest mismatch at {size}"))?;
    }
    Ok("MT19937(5489)[0] = 3499211612, 3 SHA-256 vectors, sizes 1/1023/1024/1e6 exact".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("oracle exactness", oracle_exactness),
        ("chunk boundary regression", chunk_boundary),
        ("kmp pattern-count scaling", kmp_scaling),
        ("pfac pattern-count invariance", pfac_invariance),
        ("backend comparison", backend_comparison),
        ("prefix false-positive rate", false_positive_rate),
        ("scan determinism across workers", scan_determinism),
        ("kmp comparison bound", kmp_comparison_bound),
        ("generator fidelity", generator_fidelity),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
