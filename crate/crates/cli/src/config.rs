//! Corpus spec files and size parsing.
//!
//! A corpus spec is a small TOML file:
//!
//! ```toml
//! name = "mini"
//! shards = ["shards/*.jsonl.gz"]   # globs allowed, relative to this file
//! text_field = "text"              # optional, default "text"
//! url_field = "url"                # optional
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use textprobe_core::{Corpus, CorpusSpec};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    name: String,
    shards: Vec<String>,
    #[serde(default)]
    text_field: Option<String>,
    #[serde(default)]
    url_field: Option<String>,
}

/// Loads a corpus spec TOML, expanding shard globs (sorted lexicographically
/// for a stable shard order).
pub fn load_corpus_spec(path: &Path) -> Result<CorpusSpec> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus spec {}", path.display()))?;
    let file: CorpusFile = toml::from_str(&text)
        .with_context(|| format!("parsing corpus spec {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));

    let mut shards: Vec<PathBuf> = Vec::new();
    for entry in &file.shards {
        let full = if Path::new(entry).is_absolute() {
            PathBuf::from(entry)
        } else {
            base.join(entry)
        };
        if entry.contains(['*', '?', '[']) {
            let pattern = full.to_string_lossy().into_owned();
            let mut matched: Vec<PathBuf> = glob::glob(&pattern)
                .with_context(|| format!("bad shard glob {entry:?}"))?
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("expanding shard glob {entry:?}"))?;
            if matched.is_empty() {
                bail!("shard glob {entry:?} matched nothing");
            }
            matched.sort();
            shards.extend(matched);
        } else {
            shards.push(full);
        }
    }

    let mut spec = CorpusSpec::new(file.name, shards);
    if let Some(f) = file.text_field {
        spec = spec.with_text_field(f);
    }
    if let Some(f) = file.url_field {
        spec = spec.with_url_field(f);
    }
    Ok(spec)
}

pub fn open_corpus(path: &Path) -> Result<Corpus> {
    let spec = load_corpus_spec(path)?;
    Corpus::open(spec).with_context(|| format!("opening corpus {}", path.display()))
}

/// Parses "512M", "4G", "64K", or plain bytes.
pub fn parse_memory(s: &str) -> Result<u64> {
    let s = s.trim();
    let (digits, mult) = match s.chars().last() {
        Some('k') | Some('K') => (&s[..s.len() - 1], 1u64 << 10),
        Some('m') | Some('M') => (&s[..s.len() - 1], 1 << 20),
        Some('g') | Some('G') => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    let n: u64 = digits
        .trim()
        .parse()
        .with_context(|| format!("bad memory size {s:?}"))?;
    Ok(n * mult)
}

/// Largest table_bits whose slots fit the budget, capped at 32 as the
/// default table size, with a small floor so tiny budgets still work.
pub fn auto_table_bits(memory_bytes: u64, slot_bytes: u64) -> u32 {
    let slots = (memory_bytes / slot_bytes.max(1)).max(1024);
    (63 - slots.leading_zeros() as u64).clamp(10, 32) as u32
}
