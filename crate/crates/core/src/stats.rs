//! Exact-count analyses: summary statistics, URL breakdowns, document
//! length distributions, and domain token quantiles.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use url::Url;

use crate::corpus::{Corpus, Document};
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::tokenize::Tokenizer;

/// High-level corpus statistics. `size_bytes` is the sum of UTF-8 text byte
/// lengths, not the on-disk (possibly compressed) shard size.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub size_bytes: u64,
    pub num_documents: u64,
    pub num_tokens: u64,
    pub max_doc_tokens: u64,
    pub min_doc_tokens: u64,
}

pub struct SummaryStatsAcc {
    tok: Arc<dyn Tokenizer>,
    size_bytes: u64,
    num_documents: u64,
    num_tokens: u64,
    min_max: Option<(u64, u64)>,
}

impl SummaryStatsAcc {
    pub fn new(tok: Arc<dyn Tokenizer>) -> Self {
        SummaryStatsAcc {
            tok,
            size_bytes: 0,
            num_documents: 0,
            num_tokens: 0,
            min_max: None,
        }
    }

    pub fn finish(self) -> SummaryStats {
        let (min, max) = self.min_max.unwrap_or((0, 0));
        SummaryStats {
            size_bytes: self.size_bytes,
            num_documents: self.num_documents,
            num_tokens: self.num_tokens,
            max_doc_tokens: max,
            min_doc_tokens: min,
        }
    }
}

impl Accumulator for SummaryStatsAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let tokens = self.tok.count(&doc.text);
        self.size_bytes += doc.text.len() as u64;
        self.num_documents += 1;
        self.num_tokens += tokens;
        self.min_max = Some(match self.min_max {
            None => (tokens, tokens),
            Some((lo, hi)) => (lo.min(tokens), hi.max(tokens)),
        });
    }

    fn merge(&mut self, other: Self) {
        self.size_bytes += other.size_bytes;
        self.num_documents += other.num_documents;
        self.num_tokens += other.num_tokens;
        self.min_max = match (self.min_max, other.min_max) {
            (a, None) => a,
            (None, b) => b,
            (Some((alo, ahi)), Some((blo, bhi))) => Some((alo.min(blo), ahi.max(bhi))),
        };
    }
}

/// Exact summary statistics of a corpus.
pub fn summary_stats(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    workers: usize,
) -> Result<(SummaryStats, RunReport)> {
    let (acc, report) = engine::run(corpus, || SummaryStatsAcc::new(tok.clone()), workers)?;
    Ok((acc.finish(), report))
}

/// Multi-label public suffixes ("co.uk") loaded from a plain text file, one
/// suffix per line. Without a match (or without a list) the suffix falls back
/// to the last dot-separated label of the host.
#[derive(Debug, Clone, Default)]
pub struct SuffixList {
    entries: std::collections::HashSet<String>,
}

impl SuffixList {
    pub fn from_lines(lines: &str) -> Self {
        let entries = lines
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with("//") && !l.starts_with('#'))
            .map(|l| l.trim_start_matches("*.").to_ascii_lowercase())
            .collect();
        SuffixList { entries }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Ok(Self::from_lines(&std::fs::read_to_string(path)?))
    }

    /// Longest matching suffix of `host`, or the last label as fallback.
    pub fn suffix_of<'h>(&self, host: &'h str) -> &'h str {
        let mut start = 0;
        loop {
            let candidate = &host[start..];
            if self.entries.contains(candidate) {
                return candidate;
            }
            match host[start..].find('.') {
                Some(dot) => start += dot + 1,
                None => return candidate, // last label fallback
            }
        }
    }
}

/// Scheme/domain/suffix counts extracted from document URLs. Domains are
/// counted twice: once per document and once per token of the document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlBreakdown {
    pub scheme_counts: BTreeMap<String, u64>,
    pub domain_doc_counts: BTreeMap<String, u64>,
    pub domain_token_counts: BTreeMap<String, u64>,
    pub suffix_counts: BTreeMap<String, u64>,
    /// Documents with no URL, or one that does not parse to a scheme + host.
    pub docs_without_url: u64,
    pub num_documents: u64,
}

pub struct UrlBreakdownAcc {
    tok: Arc<dyn Tokenizer>,
    suffixes: Arc<SuffixList>,
    out: UrlBreakdown,
}

impl UrlBreakdownAcc {
    pub fn new(tok: Arc<dyn Tokenizer>, suffixes: Arc<SuffixList>) -> Self {
        UrlBreakdownAcc {
            tok,
            suffixes,
            out: UrlBreakdown::default(),
        }
    }

    pub fn finish(self) -> UrlBreakdown {
        self.out
    }
}

impl Accumulator for UrlBreakdownAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        self.out.num_documents += 1;
        // The host as the URL spells it, lowercased with the port stripped;
        // "www." prefixes are kept as-is.
        let parsed = doc
            .url
            .as_deref()
            .and_then(|u| Url::parse(u).ok())
            .filter(|u| u.host_str().is_some());
        let Some(url) = parsed else {
            self.out.docs_without_url += 1;
            return;
        };
        let host = url.host_str().unwrap().to_string();
        let tokens = self.tok.count(&doc.text);
        *self
            .out
            .scheme_counts
            .entry(url.scheme().to_string())
            .or_default() += 1;
        *self.out.domain_doc_counts.entry(host.clone()).or_default() += 1;
        *self.out.domain_token_counts.entry(host.clone()).or_default() += tokens;
        *self
            .out
            .suffix_counts
            .entry(self.suffixes.suffix_of(&host).to_string())
            .or_default() += 1;
    }

    fn merge(&mut self, other: Self) {
        let o = other.out;
        self.out.num_documents += o.num_documents;
        self.out.docs_without_url += o.docs_without_url;
        for (map, omap) in [
            (&mut self.out.scheme_counts, o.scheme_counts),
            (&mut self.out.domain_doc_counts, o.domain_doc_counts),
            (&mut self.out.domain_token_counts, o.domain_token_counts),
            (&mut self.out.suffix_counts, o.suffix_counts),
        ] {
            for (k, v) in omap {
                *map.entry(k).or_default() += v;
            }
        }
    }
}

/// Scheme, domain and suffix distributions of a corpus with URL metadata.
pub fn url_breakdown(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    suffixes: Arc<SuffixList>,
    workers: usize,
) -> Result<(UrlBreakdown, RunReport)> {
    if !corpus.has_url_field() {
        return Err(CoreError::NoUrlField);
    }
    let (acc, report) = engine::run(
        corpus,
        || UrlBreakdownAcc::new(tok.clone(), suffixes.clone()),
        workers,
    )?;
    Ok((acc.finish(), report))
}

/// Token-count value at each requested percentile of the per-domain
/// token-count distribution, plus the number of unique domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainQuantiles {
    pub unique_domains: u64,
    /// (percentile, token count at that percentile), nearest-rank method.
    pub values: Vec<(f64, u64)>,
}

pub fn domain_quantiles(breakdown: &UrlBreakdown, percentiles: &[f64]) -> Result<DomainQuantiles> {
    if breakdown.domain_token_counts.is_empty() {
        return Err(CoreError::EmptyDomainMap);
    }
    let mut counts: Vec<u64> = breakdown.domain_token_counts.values().copied().collect();
    counts.sort_unstable();
    let n = counts.len();
    let mut values = Vec::with_capacity(percentiles.len());
    for &p in percentiles {
        if !(0.0..=100.0).contains(&p) || p.is_nan() {
            return Err(CoreError::InvalidPercentile(p));
        }
        let rank = ((p / 100.0 * n as f64).ceil() as usize).clamp(1, n);
        values.push((p, counts[rank - 1]));
    }
    Ok(DomainQuantiles {
        unique_domains: n as u64,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    /// Unicode scalar values, not bytes.
    Characters,
    Tokens,
}

/// Exact document-length histogram plus the nearest-rank median length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LengthHistogram {
    pub unit: LengthUnit,
    pub bins: BTreeMap<u64, u64>,
    pub num_documents: u64,
    pub median: u64,
}

pub struct LengthHistogramAcc {
    tok: Arc<dyn Tokenizer>,
    unit: LengthUnit,
    bins: BTreeMap<u64, u64>,
    num_documents: u64,
}

impl LengthHistogramAcc {
    pub fn new(tok: Arc<dyn Tokenizer>, unit: LengthUnit) -> Self {
        LengthHistogramAcc {
            tok,
            unit,
            bins: BTreeMap::new(),
            num_documents: 0,
        }
    }

    pub fn finish(self) -> LengthHistogram {
        let median = median_of_bins(&self.bins, self.num_documents);
        LengthHistogram {
            unit: self.unit,
            bins: self.bins,
            num_documents: self.num_documents,
            median,
        }
    }
}

fn median_of_bins(bins: &BTreeMap<u64, u64>, total: u64) -> u64 {
    if total == 0 {
        return 0;
    }
    let rank = total.div_ceil(2);
    let mut seen = 0;
    for (&len, &count) in bins {
        seen += count;
        if seen >= rank {
            return len;
        }
    }
    0
}

impl Accumulator for LengthHistogramAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let len = match self.unit {
            LengthUnit::Characters => doc.text.chars().count() as u64,
            LengthUnit::Tokens => self.tok.count(&doc.text),
        };
        *self.bins.entry(len).or_default() += 1;
        self.num_documents += 1;
    }

    fn merge(&mut self, other: Self) {
        self.num_documents += other.num_documents;
        for (len, count) in other.bins {
            *self.bins.entry(len).or_default() += count;
        }
    }
}

/// Exact per-length document counts in the chosen unit.
pub fn length_histogram(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    unit: LengthUnit,
    workers: usize,
) -> Result<(LengthHistogram, RunReport)> {
    let (acc, report) = engine::run(
        corpus,
        || LengthHistogramAcc::new(tok.clone(), unit),
        workers,
    )?;
    Ok((acc.finish(), report))
}
