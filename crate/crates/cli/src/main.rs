//! `textprobe` — count-and-search analyses over sharded JSONL corpora.
//!
//! One analysis per invocation. Reports are written to stdout (or
//! `--output`) with a deterministic header; the run summary (documents,
//! shards, wall time) goes to stderr. Identical configuration and seed
//! produce byte-identical reports at any `--workers` value.

mod config;
mod scorer;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use textprobe_core::report::{render_json, render_jsonl, run_summary, ReportHeader};
use textprobe_core::tokenize::UnicodeWordTokenizer;
use textprobe_core::{compare, dedup, index, lexicon, pii, sketch, stats};
use textprobe_core::{RunReport, Tokenizer};

const DEFAULT_SEED: u64 = 42;
const TOOL: &str = "textprobe";

#[derive(Parser)]
#[command(
    name = TOOL,
    version,
    about = "Count-and-search analyses for large sharded text corpora",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Worker threads (default: number of logical CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed for all hashing; the fixed default keeps reports reproducible.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Memory budget used to size sketch tables and spill thresholds
    /// (e.g. "512M", "2G").
    #[arg(long, global = true, default_value = "1G")]
    memory: String,

    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct CorpusArg {
    /// Corpus spec TOML (name, shard globs, field names).
    #[arg(long)]
    corpus: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnitArg {
    Chars,
    Tokens,
}

#[derive(Clone, Copy, ValueEnum)]
enum ByArg {
    Text,
    Url,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Email,
    Phone,
    Ip,
}

impl KindArg {
    fn kind(self) -> pii::PiiKind {
        match self {
            KindArg::Email => pii::PiiKind::Email,
            KindArg::Phone => pii::PiiKind::Phone,
            KindArg::Ip => pii::PiiKind::Ip,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, Default)]
enum ModeArg {
    #[default]
    Both,
    Intersection,
    Union,
}

#[derive(Subcommand)]
enum Command {
    /// Exact summary statistics: bytes, documents, tokens, min/max lengths.
    Stats {
        #[command(flatten)]
        corpus: CorpusArg,
    },
    /// Scheme/domain/suffix distributions and domain token quantiles.
    Urls {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Public-suffix list file (one suffix per line, e.g. "co.uk").
        #[arg(long)]
        suffixes: Option<PathBuf>,
        /// Percentiles for the per-domain token distribution.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 25.0, 50.0, 75.0, 99.0])]
        quantiles: Vec<f64>,
        /// Keep only the N largest entries of each distribution in the
        /// report (0 = keep everything).
        #[arg(long, default_value_t = 100)]
        top_domains: usize,
    },
    /// Exact document-length histogram.
    Lengths {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, value_enum)]
        unit: UnitArg,
        /// Also write the histogram as CSV (length,documents).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Approximate n-gram counting: most common, least common, or unique
    /// estimate. Output is JSONL of (rank, ngram, count) after a header line.
    Ngrams {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long)]
        n: usize,
        /// Report the K most common n-grams.
        #[arg(long)]
        top: Option<usize>,
        /// Report the K least common n-grams (two passes).
        #[arg(long)]
        bottom: Option<usize>,
        /// Estimate the number of unique n-grams.
        #[arg(long)]
        unique: bool,
        /// Counter table size as log2(slots); default sized from --memory.
        #[arg(long)]
        table_bits: Option<u32>,
        /// 64-bit counters (for unigrams over very large corpora).
        #[arg(long)]
        wide_counters: bool,
        /// Rerun with this second seed and report whether counts agree
        /// (hash-collision check).
        #[arg(long)]
        collision_check: Option<u64>,
    },
    /// Exact duplicate clusters over text or URL hashes.
    Dupes {
        #[command(flatten)]
        corpus: CorpusArg,
        #[arg(long, value_enum)]
        by: ByArg,
        /// How many of the largest clusters to list.
        #[arg(long, default_value_t = 10)]
        top: usize,
        /// Rerun with this second seed and report whether counts agree.
        #[arg(long)]
        collision_check: Option<u64>,
    },
    /// Exact-text overlap between two or more corpora.
    Overlap {
        /// Corpus spec TOMLs, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        corpora: Vec<PathBuf>,
    },
    /// Email/phone/IP detection with postprocessing filters.
    Pii {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Which detectors to run.
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = vec![KindArg::Email, KindArg::Phone, KindArg::Ip])]
        kinds: Vec<KindArg>,
        /// Audit sample size (matches with context).
        #[arg(long, default_value_t = 100)]
        sample: usize,
        /// Manual precision per kind for extrapolated counts,
        /// e.g. email=0.99,phone=0.87.
        #[arg(long, value_delimiter = ',')]
        precision: Vec<String>,
        /// Skip documents with >50 consecutive ":)" emoticons.
        #[arg(long)]
        skip_degenerate: bool,
        /// Write the audit sample as JSONL here.
        #[arg(long)]
        sample_out: Option<PathBuf>,
    },
    /// Inverted-index maintenance.
    Index {
        #[command(subcommand)]
        action: IndexAction,
    },
    /// Document frequency and occurrence count of a word or phrase.
    Search {
        /// Index directory built by `index build`.
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        query: String,
        /// Case-sensitive matching.
        #[arg(long)]
        strict: bool,
    },
    /// Share of evaluation examples whose fields co-occur in one document.
    Contamination {
        #[arg(long)]
        index: PathBuf,
        /// Evaluation examples JSONL: {"dataset":..., "fields":[...]}.
        #[arg(long)]
        examples: PathBuf,
        /// Also write dataset,corpus,examined,contaminated,percentage CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        strict: bool,
    },
    /// Jensen-Shannon distance and rank pairs between two ranked vocabularies
    /// (the JSONL written by `ngrams --top`).
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        mode: ModeArg,
        /// How many of A's top unigrams to pair with ranks in B.
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Also write the rank pairs as CSV (ngram,rank_a,rank_b).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lexicon-based toxicity taxonomy counts.
    Toxicity {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Lexicon file with [category] headers, one term per line.
        #[arg(long)]
        lexicon: PathBuf,
    },
    /// Sentences mentioning demographic terms, optionally scored.
    Demographics {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Term list file, one unigram/bigram per line.
        #[arg(long)]
        terms: PathBuf,
        /// External line-oriented scorer command (sentence in, polarity out).
        #[arg(long)]
        scorer: Option<String>,
    },
}

#[derive(Subcommand)]
enum IndexAction {
    /// Tokenize a corpus and persist the inverted index.
    Build {
        #[command(flatten)]
        corpus: CorpusArg,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn tokenizer() -> Arc<dyn Tokenizer> {
    Arc::new(UnicodeWordTokenizer)
}

fn emit(output: &Option<PathBuf>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => {
            std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn emit_report<T: Serialize>(
    output: &Option<PathBuf>,
    analysis: &str,
    seed: u64,
    cfg: &[&str],
    body: &T,
) -> Result<()> {
    let header = ReportHeader::new(TOOL, env!("CARGO_PKG_VERSION"), analysis, seed, cfg);
    emit(output, &render_json(&header, body)?)
}

fn summarize(report: &RunReport) {
    eprintln!("{}", run_summary(report));
}

fn run(cli: Cli) -> Result<()> {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let seed = cli.seed;
    let memory = config::parse_memory(&cli.memory)?;
    let tok = tokenizer();

    match cli.command {
        Command::Stats { corpus } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let (report, run) = stats::summary_stats(&c, tok, workers)?;
            summarize(&run);
            let cfg = ["stats".to_string(), corpus.corpus.display().to_string()];
            emit_report(
                &cli.output,
                "stats",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
        Command::Urls {
            corpus,
            suffixes,
            quantiles,
            top_domains,
        } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let suffix_list = match &suffixes {
                Some(path) => Arc::new(stats::SuffixList::from_file(path)?),
                None => Arc::default(),
            };
            let (breakdown, run) = stats::url_breakdown(&c, tok, suffix_list, workers)?;
            summarize(&run);
            let q = stats::domain_quantiles(&breakdown, &quantiles)?;
            #[derive(Serialize)]
            struct Body {
                breakdown: stats::UrlBreakdown,
                quantiles: stats::DomainQuantiles,
                #[serde(skip_serializing_if = "Option::is_none")]
                truncated_to: Option<usize>,
            }
            let (breakdown, truncated_to) = if top_domains > 0 {
                (truncate_breakdown(breakdown, top_domains), Some(top_domains))
            } else {
                (breakdown, None)
            };
            let cfg = [
                "urls".to_string(),
                corpus.corpus.display().to_string(),
                format!("quantiles={quantiles:?}"),
                format!("top_domains={top_domains}"),
                format!("suffixes={suffixes:?}"),
            ];
            emit_report(
                &cli.output,
                "urls",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &Body {
                    breakdown,
                    quantiles: q,
                    truncated_to,
                },
            )
        }
        Command::Lengths { corpus, unit, csv } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let u = match unit {
                UnitArg::Chars => stats::LengthUnit::Characters,
                UnitArg::Tokens => stats::LengthUnit::Tokens,
            };
            let (report, run) = stats::length_histogram(&c, tok, u, workers)?;
            summarize(&run);
            if let Some(path) = &csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["length", "documents"])?;
                for (len, count) in &report.bins {
                    w.write_record([len.to_string(), count.to_string()])?;
                }
                w.flush()?;
            }
            let cfg = [
                "lengths".to_string(),
                corpus.corpus.display().to_string(),
                format!(
                    "unit={}",
                    if matches!(unit, UnitArg::Chars) { "chars" } else { "tokens" }
                ),
            ];
            emit_report(
                &cli.output,
                "lengths",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
        Command::Ngrams {
            corpus,
            n,
            top,
            bottom,
            unique,
            table_bits,
            wide_counters,
            collision_check,
        } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let modes = [top.is_some(), bottom.is_some(), unique];
            if modes.iter().filter(|m| **m).count() != 1 {
                bail!("pick exactly one of --top K, --bottom K, --unique");
            }
            let slot_bytes = if wide_counters { 8 } else { 4 };
            let bits = table_bits
                .unwrap_or_else(|| config::auto_table_bits(memory, if unique { 0 } else { slot_bytes }));
            let params = sketch::SketchParams {
                n,
                table_bits: bits,
                seed,
            };
            let mode_name = if unique {
                "unique".to_string()
            } else if let Some(k) = top {
                format!("top={k}")
            } else {
                format!("bottom={}", bottom.unwrap())
            };
            let cfg_strings = [
                "ngrams".to_string(),
                corpus.corpus.display().to_string(),
                format!("n={n}"),
                mode_name.clone(),
                format!("table_bits={bits}"),
                format!("wide={wide_counters}"),
            ];
            let cfg: Vec<&str> = cfg_strings.iter().map(String::as_str).collect();
            let header =
                ReportHeader::new(TOOL, env!("CARGO_PKG_VERSION"), "ngrams", seed, &cfg);

            if unique {
                let (estimate, run) = sketch::unique_ngrams(&c, tok.clone(), params, workers)?;
                summarize(&run);
                #[derive(Serialize)]
                struct Body {
                    n: usize,
                    table_bits: u32,
                    unique_estimate: u64,
                }
                return emit_report(
                    &cli.output,
                    "ngrams",
                    seed,
                    &cfg,
                    &Body {
                        n,
                        table_bits: bits,
                        unique_estimate: estimate,
                    },
                );
            }

            let ranked = if let Some(k) = top {
                let (ranked, run) = if wide_counters {
                    sketch::topk_ngrams::<u64>(&c, tok.clone(), params, k, workers)?
                } else {
                    sketch::topk_ngrams::<u32>(&c, tok.clone(), params, k, workers)?
                };
                summarize(&run);
                ranked
            } else {
                let k = bottom.unwrap();
                let (ranked, run) = if wide_counters {
                    sketch::bottomk_ngrams::<u64>(&c, tok.clone(), params, k, workers)?
                } else {
                    sketch::bottomk_ngrams::<u32>(&c, tok.clone(), params, k, workers)?
                };
                summarize(&run);
                ranked
            };

            if let Some(seed_b) = collision_check {
                let analysis = match (top, bottom) {
                    (Some(k), _) => sketch::CollisionAnalysis::TopK { n, k },
                    (None, Some(k)) => sketch::CollisionAnalysis::BottomK { n, k },
                    (None, None) => unreachable!("mode validated above"),
                };
                let check =
                    sketch::collision_check(&c, tok.clone(), analysis, bits, seed, seed_b, workers)?;
                eprintln!(
                    "collision check (seeds {}, {}): {}",
                    check.seed_a,
                    check.seed_b,
                    if check.matches { "match" } else { "MISMATCH" }
                );
                for d in &check.differences {
                    eprintln!("  {d}");
                }
            }

            #[derive(Serialize)]
            struct HeaderLine<'h> {
                header: &'h ReportHeader,
            }
            #[derive(Serialize)]
            struct Row<'g> {
                rank: usize,
                ngram: &'g str,
                count: u64,
            }
            let mut bytes = render_jsonl([HeaderLine { header: &header }])?;
            bytes.extend(render_jsonl(ranked.iter().enumerate().map(|(i, (g, c))| Row {
                rank: i + 1,
                ngram: g,
                count: *c,
            }))?);
            emit(&cli.output, &bytes)
        }
        Command::Dupes {
            corpus,
            by,
            top,
            collision_check,
        } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let key = match by {
                ByArg::Text => dedup::DedupKey::Text,
                ByArg::Url => dedup::DedupKey::Url,
            };
            let (report, run) = dedup::duplicates(&c, key, seed, top, workers)?;
            summarize(&run);
            if let Some(seed_b) = collision_check {
                let analysis = match by {
                    ByArg::Text => sketch::CollisionAnalysis::TextDuplicates,
                    ByArg::Url => sketch::CollisionAnalysis::UrlDuplicates,
                };
                let check =
                    sketch::collision_check(&c, tok.clone(), analysis, 1, seed, seed_b, workers)?;
                eprintln!(
                    "collision check (seeds {}, {}): {}",
                    check.seed_a,
                    check.seed_b,
                    if check.matches { "match" } else { "MISMATCH" }
                );
                for d in &check.differences {
                    eprintln!("  {d}");
                }
            }
            let cfg = [
                "dupes".to_string(),
                corpus.corpus.display().to_string(),
                format!("by={}", if matches!(by, ByArg::Text) { "text" } else { "url" }),
                format!("top={top}"),
            ];
            emit_report(
                &cli.output,
                "dupes",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
        Command::Overlap { corpora } => {
            if corpora.len() < 2 {
                bail!("--corpora needs at least two spec files");
            }
            let budget = memory / corpora.len() as u64;
            let mut sets = Vec::new();
            for path in &corpora {
                let c = config::open_corpus(path)?;
                let (hashes, run) =
                    dedup::corpus_hashes(&c, dedup::DedupKey::Text, seed, budget, workers)?;
                eprintln!(
                    "{}: distinct={} ({})",
                    c.name(),
                    hashes.distinct_count(),
                    run_summary(&run)
                );
                sets.push(hashes);
            }
            let refs: Vec<&dedup::CorpusHashes> = sets.iter().collect();
            let entries = dedup::cross_overlap(&refs)?;
            let cfg_strings: Vec<String> = std::iter::once("overlap".to_string())
                .chain(corpora.iter().map(|p| p.display().to_string()))
                .collect();
            emit_report(
                &cli.output,
                "overlap",
                seed,
                &cfg_strings.iter().map(String::as_str).collect::<Vec<_>>(),
                &entries,
            )
        }
        Command::Pii {
            corpus,
            kinds,
            sample,
            precision,
            skip_degenerate,
            sample_out,
        } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let wanted: Vec<pii::PiiKind> = kinds.iter().map(|k| k.kind()).collect();
            let rules: Vec<pii::PiiRule> = pii::default_rules()
                .into_iter()
                .filter(|r| wanted.contains(&r.kind))
                .collect();
            let (mut report, run) = pii::scan_corpus(
                &c,
                tok,
                Arc::new(rules),
                sample,
                seed,
                skip_degenerate,
                workers,
            )?;
            summarize(&run);
            if !precision.is_empty() {
                let parsed = parse_precision(&precision)?;
                report.extrapolated = Some(pii::extrapolate(&report.counts, &parsed)?);
            }
            if let Some(path) = &sample_out {
                std::fs::write(path, render_jsonl(report.samples.iter())?)?;
            }
            let cfg = [
                "pii".to_string(),
                corpus.corpus.display().to_string(),
                format!("kinds={:?}", wanted),
                format!("sample={sample}"),
                format!("skip_degenerate={skip_degenerate}"),
                format!("precision={precision:?}"),
            ];
            emit_report(
                &cli.output,
                "pii",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
        Command::Index { action } => match action {
            IndexAction::Build { corpus, out } => {
                let c = config::open_corpus(&corpus.corpus)?;
                let (idx, run) = index::build_index(&c, tok, &out, workers)?;
                summarize(&run);
                let cfg = [
                    "index-build".to_string(),
                    corpus.corpus.display().to_string(),
                    out.display().to_string(),
                ];
                emit_report(
                    &cli.output,
                    "index-build",
                    seed,
                    &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                    idx.meta(),
                )
            }
        },
        Command::Search {
            index: dir,
            query,
            strict,
        } => {
            let idx = index::InvertedIndex::open(&dir)?;
            let (df, total) = idx.count_occurrences(&query, &UnicodeWordTokenizer, strict)?;
            #[derive(Serialize)]
            struct Body<'q> {
                query: &'q str,
                document_frequency: u64,
                total_occurrences: u64,
                documents_indexed: u64,
            }
            let cfg = [
                "search".to_string(),
                dir.display().to_string(),
                query.clone(),
                format!("strict={strict}"),
            ];
            emit_report(
                &cli.output,
                "search",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &Body {
                    query: &query,
                    document_frequency: df,
                    total_occurrences: total,
                    documents_indexed: idx.document_count(),
                },
            )
        }
        Command::Contamination {
            index: dir,
            examples,
            csv,
            strict,
        } => {
            let idx = index::InvertedIndex::open(&dir)?;
            let file = std::fs::File::open(&examples)
                .with_context(|| format!("opening {}", examples.display()))?;
            let examples_list = index::load_examples(std::io::BufReader::new(file))?;
            let reports =
                index::contamination_reports(&idx, &examples_list, &UnicodeWordTokenizer, strict)?;
            if let Some(path) = &csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record([
                    "dataset",
                    "corpus",
                    "examined",
                    "contaminated",
                    "rejected",
                    "percentage",
                ])?;
                for r in &reports {
                    w.write_record([
                        r.dataset.clone(),
                        idx.meta().corpus_name.clone(),
                        r.examined.to_string(),
                        r.contaminated.to_string(),
                        r.rejected.to_string(),
                        format!("{:.2}", r.percentage),
                    ])?;
                }
                w.flush()?;
            }
            let cfg = [
                "contamination".to_string(),
                dir.display().to_string(),
                examples.display().to_string(),
                format!("strict={strict}"),
            ];
            emit_report(
                &cli.output,
                "contamination",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &reports,
            )
        }
        Command::Compare {
            a,
            b,
            mode,
            pairs,
            csv,
        } => {
            let va = load_vocab(&a)?;
            let vb = load_vocab(&b)?;
            #[derive(Serialize)]
            struct Body {
                #[serde(skip_serializing_if = "Option::is_none")]
                js_intersection: Option<f64>,
                #[serde(skip_serializing_if = "Option::is_none")]
                js_union: Option<f64>,
                vocab_a: usize,
                vocab_b: usize,
                rank_pairs: Vec<compare::RankPair>,
            }
            let body = Body {
                js_intersection: match mode {
                    ModeArg::Union => None,
                    _ => Some(compare::js_distance(
                        &va,
                        &vb,
                        compare::VocabMode::Intersection,
                    )?),
                },
                js_union: match mode {
                    ModeArg::Intersection => None,
                    _ => Some(compare::js_distance(&va, &vb, compare::VocabMode::Union)?),
                },
                vocab_a: va.len(),
                vocab_b: vb.len(),
                rank_pairs: compare::rank_pairs(&va, &vb, pairs),
            };
            if let Some(path) = &csv {
                let mut w = csv::Writer::from_path(path)?;
                w.write_record(["ngram", "rank_a", "rank_b"])?;
                for p in &body.rank_pairs {
                    w.write_record([
                        p.ngram.clone(),
                        p.rank_a.to_string(),
                        p.rank_b.map_or_else(|| "absent".to_string(), |r| r.to_string()),
                    ])?;
                }
                w.flush()?;
            }
            let cfg = [
                "compare".to_string(),
                a.display().to_string(),
                b.display().to_string(),
                format!("pairs={pairs}"),
            ];
            emit_report(
                &cli.output,
                "compare",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &body,
            )
        }
        Command::Toxicity { corpus, lexicon: path } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let lex = Arc::new(lexicon::Lexicon::from_file(&path)?);
            let (report, run) = lexicon::taxonomy_scan(&c, tok, lex, workers)?;
            summarize(&run);
            let cfg = [
                "toxicity".to_string(),
                corpus.corpus.display().to_string(),
                path.display().to_string(),
            ];
            emit_report(
                &cli.output,
                "toxicity",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
        Command::Demographics {
            corpus,
            terms,
            scorer: scorer_cmd,
        } => {
            let c = config::open_corpus(&corpus.corpus)?;
            let term_set = Arc::new(lexicon::load_terms(&terms)?);
            let scorer: Option<Arc<dyn lexicon::SentenceScorer>> = match &scorer_cmd {
                Some(cmd) => Some(Arc::new(scorer::CommandScorer::spawn(cmd)?)),
                None => None,
            };
            let (report, run) =
                lexicon::demographic_sentences(&c, tok, term_set, scorer, workers)?;
            summarize(&run);
            let cfg = [
                "demographics".to_string(),
                corpus.corpus.display().to_string(),
                terms.display().to_string(),
                format!("scorer={}", scorer_cmd.is_some()),
            ];
            emit_report(
                &cli.output,
                "demographics",
                seed,
                &cfg.iter().map(String::as_str).collect::<Vec<_>>(),
                &report,
            )
        }
    }
}

fn load_vocab(path: &PathBuf) -> Result<compare::RankedVocab> {
    let file =
        std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(compare::RankedVocab::from_jsonl(std::io::BufReader::new(
        file,
    ))?)
}

fn parse_precision(entries: &[String]) -> Result<BTreeMap<pii::PiiKind, f64>> {
    let mut out = BTreeMap::new();
    for entry in entries {
        let (kind, value) = entry
            .split_once('=')
            .with_context(|| format!("bad --precision entry {entry:?}, want kind=0.xx"))?;
        let kind = match kind.trim() {
            "email" => pii::PiiKind::Email,
            "phone" => pii::PiiKind::Phone,
            "ip" => pii::PiiKind::Ip,
            other => bail!("unknown PII kind {other:?}"),
        };
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("bad precision value in {entry:?}"))?;
        out.insert(kind, value);
    }
    Ok(out)
}

/// Keeps the N largest entries of each count map (count desc, key asc).
fn truncate_breakdown(b: stats::UrlBreakdown, n: usize) -> stats::UrlBreakdown {
    fn top_n(map: BTreeMap<String, u64>, n: usize) -> BTreeMap<String, u64> {
        let mut entries: Vec<(String, u64)> = map.into_iter().collect();
        entries.sort_by(|(ka, ca), (kb, cb)| cb.cmp(ca).then_with(|| ka.cmp(kb)));
        entries.truncate(n);
        entries.into_iter().collect()
    }
    stats::UrlBreakdown {
        scheme_counts: top_n(b.scheme_counts, n),
        domain_doc_counts: top_n(b.domain_doc_counts, n),
        domain_token_counts: top_n(b.domain_token_counts, n),
        suffix_counts: top_n(b.suffix_counts, n),
        docs_without_url: b.docs_without_url,
        num_documents: b.num_documents,
    }
}
