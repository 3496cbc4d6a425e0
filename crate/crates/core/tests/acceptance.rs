//! Acceptance suite: one pass/fail line per criterion, run sequentially.
//!
//! Run with `cargo test -p textprobe-core --test acceptance -- --nocapture`
//! to see the per-criterion lines as they complete.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use textprobe_core::compare::{self, RankedVocab, VocabMode};
use textprobe_core::dedup;
use textprobe_core::hash::hash64;
use textprobe_core::index::{self, EvalExample};
use textprobe_core::pii;
use textprobe_core::report::{render_json, render_jsonl, ReportHeader};
use textprobe_core::sketch::{self, SketchParams};
use textprobe_core::stats;
use textprobe_core::tokenize::{ngrams, UnicodeWordTokenizer};
use textprobe_core::{Corpus, CorpusSpec, Tokenizer};

// ---------------------------------------------------------------------------
// deterministic helpers
// ---------------------------------------------------------------------------

/// SplitMix64: tiny deterministic RNG for fixture generation.
#[derive(Clone)]
struct Rng(u64);

impl Rng {
    fn new(seed: u64) -> Self {
        Rng(seed)
    }

    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    fn f64(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn tok() -> Arc<dyn Tokenizer> {
    Arc::new(UnicodeWordTokenizer)
}

fn write_shards(dir: &std::path::Path, shards: &[Vec<String>], gz: bool) -> Vec<PathBuf> {
    let mut paths = Vec::new();
    for (i, texts) in shards.iter().enumerate() {
        let ext = if gz { "jsonl.gz" } else { "jsonl" };
        let path = dir.join(format!("shard{i:04}.{ext}"));
        let file = std::fs::File::create(&path).unwrap();
        let mut sink: Box<dyn std::io::Write> = if gz {
            Box::new(flate2::write::GzEncoder::new(
                file,
                flate2::Compression::fast(),
            ))
        } else {
            Box::new(std::io::BufWriter::new(file))
        };
        for t in texts {
            writeln!(sink, "{}", serde_json::json!({ "text": t })).unwrap();
        }
        sink.flush().unwrap();
        paths.push(path);
    }
    paths
}

fn open_corpus(paths: Vec<PathBuf>, name: &str) -> Corpus {
    Corpus::open(CorpusSpec::new(name, paths)).unwrap()
}

// ---------------------------------------------------------------------------
// Zipf fixture (criteria 1-3)
// ---------------------------------------------------------------------------

/// Generation seed chosen (see `tune_zipf_fixture`) so the fixture is fully
/// collision-free at table 2^22 for n in {1,2,3} under hash seeds 1 and 2:
/// the exact-equality criteria are then well-defined and deterministic.
const ZIPF_GEN_SEED: u64 = 1;
const ZIPF_DOCS: usize = 10_000;
const ZIPF_VOCAB: usize = 1_000;
const ZIPF_POOL: usize = 160;
const ZIPF_SENT_LEN: usize = 10;

/// A Zipf corpus built from a pool of template sentences: word frequencies
/// follow a Zipf-like law, repeated boilerplate dominates (as in real web
/// corpora), and the distinct n-gram counts stay in the regime where a 2^22
/// table is honestly collision-free.
fn zipf_corpus(dir: &std::path::Path, gen_seed: u64) -> Corpus {
    let mut rng = Rng::new(gen_seed);
    // Fill 1600 word slots: every word once, the rest Zipf-weighted.
    let mut slots: Vec<usize> = (0..ZIPF_VOCAB).collect();
    let weights: Vec<f64> = (0..ZIPF_VOCAB)
        .map(|r| 1.0 / (r as f64 + 1.0).powf(0.8))
        .collect();
    let total_w: f64 = weights.iter().sum();
    while slots.len() < ZIPF_POOL * ZIPF_SENT_LEN {
        let mut x = rng.f64() * total_w;
        let mut pick = 0;
        for (i, w) in weights.iter().enumerate() {
            x -= w;
            if x <= 0.0 {
                pick = i;
                break;
            }
        }
        slots.push(pick);
    }
    // Shuffle slots and cut into template sentences.
    for i in (1..slots.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        slots.swap(i, j);
    }
    let sentences: Vec<String> = slots
        .chunks(ZIPF_SENT_LEN)
        .map(|chunk| {
            chunk
                .iter()
                .map(|w| format!("w{w:03}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();

    // Documents: each template once (coverage), then Zipf draws over the pool.
    let mut texts: Vec<String> = Vec::with_capacity(ZIPF_DOCS);
    texts.extend(sentences.iter().cloned());
    let pool_weights: Vec<f64> = (0..ZIPF_POOL)
        .map(|r| 1.0 / (r as f64 + 1.0).powf(1.3))
        .collect();
    let pool_total: f64 = pool_weights.iter().sum();
    while texts.len() < ZIPF_DOCS {
        let mut x = rng.f64() * pool_total;
        let mut pick = 0;
        for (i, w) in pool_weights.iter().enumerate() {
            x -= w;
            if x <= 0.0 {
                pick = i;
                break;
            }
        }
        texts.push(sentences[pick].clone());
    }

    let shards: Vec<Vec<String>> = texts.chunks(500).map(|c| c.to_vec()).collect();
    let paths = write_shards(dir, &shards, false);
    open_corpus(paths, "zipf")
}

/// Independent oracle: exact n-gram counts via a plain hash map.
fn oracle_counts(corpus: &Corpus, n: usize) -> HashMap<String, u64> {
    let mut counts = HashMap::new();
    for doc in corpus.documents() {
        let doc = doc.unwrap();
        let spans = UnicodeWordTokenizer.spans(&doc.text);
        for g in ngrams(&doc.text, &spans, n).unwrap() {
            *counts.entry(g).or_insert(0) += 1;
        }
    }
    counts
}

fn oracle_topk(counts: &HashMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut v: Vec<(String, u64)> = counts.iter().map(|(g, c)| (g.clone(), *c)).collect();
    v.sort_unstable_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
    v.truncate(k);
    v
}

fn oracle_bottomk(counts: &HashMap<String, u64>, k: usize) -> Vec<(String, u64)> {
    let mut v: Vec<(String, u64)> = counts.iter().map(|(g, c)| (g.clone(), *c)).collect();
    v.sort_unstable_by(|(ga, ca), (gb, cb)| ca.cmp(cb).then_with(|| ga.cmp(gb)));
    v.truncate(k);
    v
}

/// True iff no two distinct n-grams (n in 1..=3) share a table slot under
/// `hash_seed` with 2^22 slots.
fn fixture_clean(corpus: &Corpus, hash_seed: u64) -> bool {
    let mask = (1u64 << 22) - 1;
    for n in 1..=3 {
        let counts = oracle_counts(corpus, n);
        let mut seen: HashMap<u64, &str> = HashMap::with_capacity(counts.len());
        for g in counts.keys() {
            let idx = hash64(g.as_bytes(), hash_seed) & mask;
            if let Some(other) = seen.insert(idx, g) {
                if other != g {
                    return false;
                }
            }
        }
    }
    true
}

/// One-off helper used to pick ZIPF_GEN_SEED; run with
/// `cargo test -p textprobe-core --test acceptance tune_zipf -- --ignored --nocapture`.
#[test]
#[ignore]
fn tune_zipf_fixture() {
    for gen_seed in 1..=40u64 {
        let dir = tempfile::tempdir().unwrap();
        let corpus = zipf_corpus(dir.path(), gen_seed);
        let clean = fixture_clean(&corpus, 1) && fixture_clean(&corpus, 2);
        let d3 = oracle_counts(&corpus, 3).len();
        println!("gen_seed={gen_seed} distinct3={d3} clean_under_seeds_1_2={clean}");
        if clean {
            println!("-> usable gen seed: {gen_seed}");
            return;
        }
    }
    panic!("no clean gen seed in 1..=40");
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

fn criterion_1_sketch_vs_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = zipf_corpus(dir.path(), ZIPF_GEN_SEED);
    let started = Instant::now();
    for n in 1..=3usize {
        let params = SketchParams {
            n,
            table_bits: 22,
            seed: 1,
        };
        let counts = oracle_counts(&corpus, n);
        let (top, _) = sketch::topk_ngrams::<u32>(&corpus, tok(), params, 100, 1).unwrap();
        assert_eq!(top, oracle_topk(&counts, 100), "top-100 mismatch at n={n}");
        let (bottom, _) = sketch::bottomk_ngrams::<u32>(&corpus, tok(), params, 25, 1).unwrap();
        assert_eq!(
            bottom,
            oracle_bottomk(&counts, 25),
            "bottom-25 mismatch at n={n}"
        );
        let (unique, _) = sketch::unique_ngrams(&corpus, tok(), params, 1).unwrap();
        assert_eq!(unique, counts.len() as u64, "unique mismatch at n={n}");
    }
    let elapsed = started.elapsed();
    assert!(
        elapsed < Duration::from_secs(30),
        "single-threaded sketch runs took {elapsed:?} (budget 30s)"
    );
}

fn criterion_2_bound_properties() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = zipf_corpus(dir.path(), ZIPF_GEN_SEED);
    let params = SketchParams {
        n: 3,
        table_bits: 6,
        seed: 1,
    };
    let counts = oracle_counts(&corpus, 3);
    // k=1000 returns >= 1000 sampled n-grams with their slot counts.
    let (reported, _) = sketch::topk_ngrams::<u32>(&corpus, tok(), params, 1000, 1).unwrap();
    assert!(
        reported.len() >= 1000,
        "wanted 1000 sampled n-grams, got {}",
        reported.len()
    );
    let mut violations = 0;
    for (g, c) in reported.iter().take(1000) {
        if *c < counts[g] {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "upper-bound violations under collisions");

    let (unique, _) = sketch::unique_ngrams(&corpus, tok(), params, 1).unwrap();
    assert!(unique <= counts.len() as u64, "unique exceeded true distinct");
    assert!(unique <= 64, "unique exceeded table size 2^6");
}

fn criterion_3_seed_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = zipf_corpus(dir.path(), ZIPF_GEN_SEED);
    for n in 1..=3usize {
        let run = |seed: u64| {
            let params = SketchParams {
                n,
                table_bits: 22,
                seed,
            };
            sketch::topk_ngrams::<u32>(&corpus, tok(), params, 100, 2)
                .unwrap()
                .0
        };
        assert_eq!(run(1), run(2), "top-k reports differ between seeds at n={n}");
    }
    let (dup1, _) = dedup::text_duplicates(&corpus, 1, 0, 2).unwrap();
    let (dup2, _) = dedup::text_duplicates(&corpus, 2, 0, 2).unwrap();
    assert_eq!(dup1.duplicate_documents, dup2.duplicate_documents);
    assert_eq!(dup1.duplicate_clusters, dup2.duplicate_clusters);
    assert_eq!(dup1.cluster_sizes, dup2.cluster_sizes);
    assert_eq!(dup1.ratio_documents, dup2.ratio_documents);
}

/// 1,000-shard synthetic corpus for the parallel-determinism criterion:
/// templated text (so n-gram counts are collision-free at 2^22), planted
/// PII, and duplicate documents.
fn determinism_corpus(dir: &std::path::Path) -> Corpus {
    let mut rng = Rng::new(77);
    let pool: Vec<String> = (0..80)
        .map(|_| {
            (0..10)
                .map(|_| format!("v{:03}", rng.below(500)))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let mut shards: Vec<Vec<String>> = Vec::with_capacity(1000);
    for s in 0..1000usize {
        let mut texts = Vec::with_capacity(20);
        for d in 0..20usize {
            let mut t = pool[rng.below(80) as usize].clone();
            match (s + d) % 17 {
                0 => t.push_str(&format!(" mail u{}@host{}.org sent", s % 97, d)),
                1 => t.push_str(&format!(" call (20{}) 555-01{:02} now", s % 10, d % 100)),
                2 => t.push_str(&format!(" node 10.0.{}.{} up", s % 256, d % 256)),
                3 => t = "repeated duplicate body".to_string(),
                _ => {}
            }
            texts.push(t);
        }
        shards.push(texts);
    }
    let paths = write_shards(dir, &shards, true);
    open_corpus(paths, "determinism")
}

fn criterion_4_parallel_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = determinism_corpus(dir.path());
    let seed = 42u64;
    let header = |analysis: &str| ReportHeader::new("textprobe", "test", analysis, seed, &[analysis]);

    let reports_for = |workers: usize| -> Vec<Vec<u8>> {
        let (stats_report, _) = stats::summary_stats(&corpus, tok(), workers).unwrap();
        let (dupes_report, _) = dedup::text_duplicates(&corpus, seed, 10, workers).unwrap();
        let (pii_report, _) = pii::scan_corpus(
            &corpus,
            tok(),
            Arc::new(pii::default_rules()),
            50,
            seed,
            false,
            workers,
        )
        .unwrap();
        let params = SketchParams {
            n: 2,
            table_bits: 22,
            seed,
        };
        let (ngrams_report, _) =
            sketch::topk_ngrams::<u32>(&corpus, tok(), params, 50, workers).unwrap();
        #[derive(serde::Serialize)]
        struct Row<'g> {
            rank: usize,
            ngram: &'g str,
            count: u64,
        }
        let ngram_bytes =
            render_jsonl(ngrams_report.iter().enumerate().map(|(i, (g, c))| Row {
                rank: i + 1,
                ngram: g,
                count: *c,
            }))
            .unwrap();
        vec![
            render_json(&header("stats"), &stats_report).unwrap(),
            render_json(&header("dupes"), &dupes_report).unwrap(),
            render_json(&header("pii"), &pii_report).unwrap(),
            ngram_bytes,
        ]
    };

    let baseline = reports_for(1);
    for workers in [2, 8] {
        let got = reports_for(workers);
        for (i, name) in ["stats", "dupes", "pii", "ngrams"].iter().enumerate() {
            assert_eq!(
                got[i], baseline[i],
                "{name} report differs between workers=1 and workers={workers}"
            );
        }
    }
}

fn criterion_5_duplicate_planting() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(5);
    let mut texts: Vec<String> = (0..9_997)
        .map(|i| format!("unique document {i} salt {}", rng.next()))
        .collect();
    for _ in 0..5 {
        texts.push("planted cluster of five".to_string());
    }
    for _ in 0..3 {
        texts.push("planted cluster of three".to_string());
    }
    for _ in 0..2 {
        texts.push("planted cluster of two".to_string());
    }
    // Deterministic shuffle so clusters spread across shards.
    for i in (1..texts.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        texts.swap(i, j);
    }
    let shards: Vec<Vec<String>> = texts.chunks(400).map(|c| c.to_vec()).collect();
    let corpus = open_corpus(write_shards(dir.path(), &shards, false), "plants");

    let (report, _) = dedup::text_duplicates(&corpus, 42, 5, 2).unwrap();
    assert_eq!(report.duplicate_documents, 10);
    assert_eq!(report.duplicate_clusters, 3);
    assert_eq!(report.documents_considered, 10_007);
    assert_eq!(report.distinct_values, 10_000);
    let expect_docs = 10.0 / 10_007.0;
    let expect_clusters = 3.0 / 10_000.0;
    assert!((report.ratio_documents - expect_docs).abs() < 1e-12);
    assert!((report.ratio_clusters - expect_clusters).abs() < 1e-12);
    let sizes: Vec<u64> = report.top_clusters.iter().map(|c| c.size).collect();
    assert_eq!(sizes, vec![5, 3, 2]);
}

fn criterion_6_contamination_planting() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(6);
    let field = |rng: &mut Rng| -> String {
        (0..5)
            .map(|_| format!("qx{:04}", rng.below(10_000)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut examples: Vec<EvalExample> = (0..100)
        .map(|_| EvalExample {
            dataset: "planted".to_string(),
            split: Some("test".to_string()),
            fields: vec![field(&mut rng), field(&mut rng)],
        })
        .collect();

    let mut texts: Vec<String> = Vec::with_capacity(50_000);
    // 37 planted: both fields inside one document, varying order/separators.
    for (i, ex) in examples.iter().take(37).enumerate() {
        let (a, b) = (&ex.fields[0], &ex.fields[1]);
        let t = match i % 3 {
            0 => format!("preamble {a} divider {b} coda"),
            1 => format!("{b} , then ; {a}"),
            _ => format!("noise words {b} more {a} tail"),
        };
        texts.push(t);
    }
    // Split variant: each field of one extra example in a different document.
    let split_example = EvalExample {
        dataset: "split".to_string(),
        split: None,
        fields: vec![field(&mut rng), field(&mut rng)],
    };
    texts.push(format!("only first {}", split_example.fields[0]));
    texts.push(format!("only second {}", split_example.fields[1]));
    examples.push(split_example);

    while texts.len() < 50_000 {
        texts.push(format!(
            "filler {} {} {}",
            rng.below(4000),
            rng.below(4000),
            rng.below(4000)
        ));
    }
    // Shuffle so planted docs land in arbitrary shards.
    for i in (1..texts.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        texts.swap(i, j);
    }
    let shards: Vec<Vec<String>> = texts.chunks(1000).map(|c| c.to_vec()).collect();
    let corpus = open_corpus(write_shards(dir.path(), &shards, true), "contam");

    let (idx, _) = index::build_index(&corpus, tok(), &dir.path().join("index"), 2).unwrap();
    let reports =
        index::contamination_reports(&idx, &examples, &UnicodeWordTokenizer, false).unwrap();
    let planted = reports.iter().find(|r| r.dataset == "planted").unwrap();
    assert_eq!(planted.examined, 100);
    assert_eq!(planted.contaminated, 37);
    assert_eq!(planted.percentage, 37.00);
    let split = reports.iter().find(|r| r.dataset == "split").unwrap();
    assert_eq!(split.examined, 1);
    assert_eq!(
        split.contaminated, 0,
        "fields in different documents must not count as contamination"
    );
}

fn criterion_7_pii_fixture() {
    let rules = pii::default_rules();
    let mut true_emails: Vec<(String, String)> = Vec::new();
    for i in 0..20 {
        let email = match i % 4 {
            0 => format!("user{i}@lab{i}.org"),
            1 => format!("first.last{i}@dept.example{i}.edu"),
            2 => format!("dev+tag{i}@host{i}.co.uk"),
            _ => format!("a{i}_b@mail{i}.net"),
        };
        true_emails.push((format!("please write to {email} soon"), email));
    }
    let mut true_phones: Vec<(String, String)> = Vec::new();
    for i in 0..20 {
        let phone = match i % 4 {
            0 => format!("(20{}) 555-01{:02}", i % 10, i),
            1 => format!("20{}-555-02{:02}", i % 10, i),
            2 => format!("20{}.555.03{:02}", i % 10, i),
            _ => format!("(40{}) 555 04{:02}", i % 10, i),
        };
        true_phones.push((format!("call {phone} today"), phone));
    }
    let decoys = [
        "ISBN 9780306406157 listed in the catalog",
        "the ISBN 4012138149625 edition sold out",
        "see DOI 1011770022 for the article",
        "cited as DOI 2015550123 in the review",
        "ticket #5550123456 remains open",
        "ref #2065550101 was closed",
        "ISBN: 978-555-0199876 reprint",
        "DOI 555.0147777 entry",
        "issue #555 0102 2024 tracked",
        "ISBN catalog 5550173 and 5550174",
    ];
    let invalid_ips = [
        "peer at 999.1.1.1 dropped",
        "node 256.0.0.7 ignored",
        "addr 300.300.300.300 invalid",
        "source 1.2.3.999 rejected",
        "host 999.999.999.999 bogus",
        "range 264.1.1.1 skipped",
        "probe 1.256.1.1 failed",
        "entry 300.12.1.1 missing",
        "mask 999.0.0.0 unset",
        "via 256.256.256.256 nothing",
    ];

    for (text, expected) in &true_emails {
        let matches = pii::scan_text(text, &rules);
        assert_eq!(matches.len(), 1, "email fixture {text:?}");
        assert_eq!(matches[0].kind, pii::PiiKind::Email);
        assert_eq!(&matches[0].text, expected);
    }
    for (text, expected) in &true_phones {
        let matches = pii::scan_text(text, &rules);
        assert_eq!(matches.len(), 1, "phone fixture {text:?}");
        assert_eq!(matches[0].kind, pii::PiiKind::Phone);
        assert_eq!(&matches[0].text, expected);
        // Window soundness, directly on the output.
        let window = &matches[0].context;
        assert!(
            !window.contains("ISBN") && !window.contains("DOI") && !window.contains('#'),
            "dirty window for {text:?}"
        );
    }
    for text in decoys {
        let matches = pii::scan_text(text, &rules);
        assert!(matches.is_empty(), "decoy matched: {text:?} -> {matches:?}");
    }
    for text in invalid_ips {
        let matches = pii::scan_text(text, &rules);
        assert!(
            matches.is_empty(),
            "invalid IP matched: {text:?} -> {matches:?}"
        );
    }
}

fn criterion_8_js_metric_suite() {
    let mut rng = Rng::new(8);
    let random_vocab = |rng: &mut Rng| -> RankedVocab {
        let size = 1 + rng.below(12) as usize;
        let mut m: BTreeMap<String, u64> = BTreeMap::new();
        for _ in 0..size {
            let g = format!("g{}", rng.below(30));
            m.insert(g, 1 + rng.below(500));
        }
        let mut v: Vec<(String, u64)> = m.into_iter().collect();
        v.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
        RankedVocab::new(v)
    };

    for i in 0..100 {
        let a = random_vocab(&mut rng);
        let b = random_vocab(&mut rng);
        let c = random_vocab(&mut rng);

        // Identity.
        for mode in [VocabMode::Intersection, VocabMode::Union] {
            let d = compare::js_distance(&a, &a, mode).unwrap();
            assert!(d.abs() < 1e-12, "identity failed at triple {i}: {d}");
        }
        // Disjoint union distance.
        let left = RankedVocab::new(vec![("aa".into(), 3), ("ab".into(), 1 + rng.below(9))]);
        let right = RankedVocab::new(vec![("zz".into(), 2), ("zy".into(), 1 + rng.below(9))]);
        let d = compare::js_distance(&left, &right, VocabMode::Union).unwrap();
        assert!((d - 1.0).abs() < 1e-9, "disjoint union distance {d}");
        // Symmetry.
        let ab = compare::js_distance(&a, &b, VocabMode::Union).unwrap();
        let ba = compare::js_distance(&b, &a, VocabMode::Union).unwrap();
        assert!((ab - ba).abs() < 1e-9, "asymmetry at triple {i}");
        // Triangle inequality.
        let bc = compare::js_distance(&b, &c, VocabMode::Union).unwrap();
        let ac = compare::js_distance(&a, &c, VocabMode::Union).unwrap();
        assert!(
            ac <= ab + bc + 1e-9,
            "triangle violated at triple {i}: {ac} > {ab} + {bc}"
        );
    }
}

fn criterion_9_throughput() {
    let dir = tempfile::tempdir().unwrap();
    let target_compressed: u64 = 1 << 30; // 1 GiB of gzip shards

    // Random word soup compresses poorly, which keeps the uncompressed volume
    // (and the test runtime) down for a fixed compressed size.
    let mut vocab_rng = Rng::new(90);
    let vocab: Vec<String> = (0..65_536)
        .map(|_| {
            let len = 5 + vocab_rng.below(6);
            (0..len)
                .map(|_| (b'a' + vocab_rng.below(26) as u8) as char)
                .collect::<String>()
        })
        .collect();

    let shard_count = std::thread::available_parallelism().map_or(2, |n| n.get());
    let counter = std::sync::atomic::AtomicU64::new(0);
    let written: Vec<PathBuf> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        let counter = &counter;
        let vocab = &vocab;
        let dir_path = dir.path().to_path_buf();
        for t in 0..shard_count {
            let dir_path = dir_path.clone();
            handles.push(scope.spawn(move || {
                let mut rng = Rng::new(9_000 + t as u64);
                let mut paths = Vec::new();
                let mut shard_idx = 0usize;
                while counter.load(std::sync::atomic::Ordering::Relaxed) < target_compressed {
                    let path = dir_path.join(format!("big-{t}-{shard_idx}.jsonl.gz"));
                    shard_idx += 1;
                    let file = std::fs::File::create(&path).unwrap();
                    let mut enc = flate2::write::GzEncoder::new(
                        std::io::BufWriter::new(file),
                        flate2::Compression::fast(),
                    );
                    let mut line = String::new();
                    for _ in 0..6_000 {
                        line.clear();
                        line.push_str("{\"text\": \"");
                        let words = 120 + rng.below(120);
                        for w in 0..words {
                            if w > 0 {
                                line.push(' ');
                            }
                            line.push_str(&vocab[rng.below(65_536) as usize]);
                        }
                        line.push_str("\"}\n");
                        enc.write_all(line.as_bytes()).unwrap();
                    }
                    let file = enc.finish().unwrap();
                    file.into_inner().unwrap().sync_all().ok();
                    let size = std::fs::metadata(&path).unwrap().len();
                    counter.fetch_add(size, std::sync::atomic::Ordering::Relaxed);
                    paths.push(path);
                }
                paths
            }));
        }
        handles.into_iter().flat_map(|h| h.join().unwrap()).collect()
    });
    let total: u64 = written
        .iter()
        .map(|p| std::fs::metadata(p).unwrap().len())
        .sum();
    assert!(
        total >= target_compressed,
        "generated only {total} compressed bytes"
    );
    eprintln!(
        "criterion 9: generated {} shards, {:.2} GiB gzip",
        written.len(),
        total as f64 / (1u64 << 30) as f64
    );

    let corpus = open_corpus(written, "big");
    let t8 = Instant::now();
    let (stats8, _) = stats::summary_stats(&corpus, tok(), 8).unwrap();
    let t8 = t8.elapsed();
    let t1 = Instant::now();
    let (stats1, _) = stats::summary_stats(&corpus, tok(), 1).unwrap();
    let t1 = t1.elapsed();
    assert_eq!(stats1, stats8);
    let speedup = t1.as_secs_f64() / t8.as_secs_f64();
    eprintln!(
        "criterion 9: 1 worker {:.1}s, 8 workers {:.1}s, speedup {speedup:.2}x ({} cores)",
        t1.as_secs_f64(),
        t8.as_secs_f64(),
        std::thread::available_parallelism().map_or(0, |n| n.get())
    );
    assert!(
        t8 < Duration::from_secs(300),
        "8-worker run took {t8:?} (budget 5 minutes)"
    );
    assert!(
        speedup >= 2.0,
        "8-worker speedup {speedup:.2}x below 2x (machine has {} logical cores; the \
         criterion presumes 8)",
        std::thread::available_parallelism().map_or(0, |n| n.get())
    );
}

fn criterion_10_index_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = Rng::new(10);
    let vocab: Vec<String> = (0..2_000).map(|i| format!("t{i:04}")).collect();
    let texts: Vec<String> = (0..5_000)
        .map(|_| {
            let len = 8 + rng.below(40);
            (0..len)
                .map(|_| vocab[(rng.below(2_000) as f64 * rng.f64()) as usize].clone())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let shards: Vec<Vec<String>> = texts.chunks(250).map(|c| c.to_vec()).collect();
    let corpus = open_corpus(write_shards(dir.path(), &shards, false), "roundtrip");

    let (idx_a, _) = index::build_index(&corpus, tok(), &dir.path().join("a"), 1).unwrap();
    let (idx_b, _) = index::build_index(&corpus, tok(), &dir.path().join("b"), 4).unwrap();

    // 1,000 random phrase queries sampled from documents (plus some absent).
    let mut queries: Vec<String> = Vec::with_capacity(1000);
    for q in 0..1000usize {
        if q % 10 == 9 {
            queries.push(format!("zz{:05} zz{:05}", rng.below(99_999), rng.below(99_999)));
            continue;
        }
        let doc = &texts[rng.below(5_000) as usize];
        let words: Vec<&str> = doc.split(' ').collect();
        let n = 1 + rng.below(4) as usize;
        let start = rng.below((words.len() - n + 1) as u64) as usize;
        queries.push(words[start..start + n].join(" "));
    }
    const TOK: UnicodeWordTokenizer = UnicodeWordTokenizer;
    for q in &queries {
        let a = idx_a.count_occurrences(q, &TOK, false).unwrap();
        let b = idx_b.count_occurrences(q, &TOK, false).unwrap();
        assert_eq!(a, b, "rebuild answers differ for {q:?}");
    }

    // Normalized-substring scan oracle on 50 sampled queries.
    let normalized: Vec<String> = texts
        .iter()
        .map(|t| {
            let spans = TOK.spans(t);
            let toks: Vec<String> = spans
                .iter()
                .map(|s| s.slice(t).to_lowercase())
                .collect();
            format!(" {} ", toks.join(" "))
        })
        .collect();
    for q in queries.iter().step_by(20).take(50) {
        let spans = TOK.spans(q);
        let needle = format!(
            " {} ",
            spans
                .iter()
                .map(|s| s.slice(q).to_lowercase())
                .collect::<Vec<_>>()
                .join(" ")
        );
        let oracle_df = normalized.iter().filter(|t| t.contains(&needle)).count() as u64;
        let (df, _) = idx_a.count_occurrences(q, &TOK, false).unwrap();
        assert_eq!(df, oracle_df, "document frequency mismatch for {q:?}");
    }
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn())> = vec![
        ("01 sketch-vs-oracle", criterion_1_sketch_vs_oracle),
        ("02 bound-properties", criterion_2_bound_properties),
        ("03 seed-invariance", criterion_3_seed_invariance),
        ("04 parallel-determinism", criterion_4_parallel_determinism),
        ("05 duplicate-planting", criterion_5_duplicate_planting),
        ("06 contamination-planting", criterion_6_contamination_planting),
        ("07 pii-fixture", criterion_7_pii_fixture),
        ("08 js-metric-suite", criterion_8_js_metric_suite),
        ("09 throughput-sanity", criterion_9_throughput),
        ("10 index-round-trip", criterion_10_index_round_trip),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let line = match &outcome {
            Ok(()) => "PASS",
            Err(_) => "FAIL",
        };
        println!(
            "acceptance criterion {name}: {line} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
        if outcome.is_err() {
            failures.push(name);
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
