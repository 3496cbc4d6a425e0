//! Lexicon-driven analyses: taxonomy term matching over documents and
//! demographic-term sentence extraction with a pluggable sentence scorer.
//!
//! Terms are lowercase unigrams or bigrams matched at word boundaries only
//! ("foo" never matches inside "barfoo"). No toxicity or sentiment model
//! ships here; the scorer is a hook.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::corpus::{Corpus, Document};
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::tokenize::Tokenizer;

/// A set of lowercase unigram/bigram terms with boundary matching.
#[derive(Debug, Clone, Default)]
pub struct TermSet {
    unigrams: HashSet<String>,
    bigrams: HashSet<(String, String)>,
}

impl TermSet {
    pub fn from_terms<'t>(terms: impl IntoIterator<Item = &'t str>) -> Result<Self> {
        let mut set = TermSet::default();
        for term in terms {
            let term = term.trim().to_lowercase();
            if term.is_empty() {
                continue;
            }
            let words: Vec<&str> = term.split_whitespace().collect();
            match words.as_slice() {
                [a] => {
                    set.unigrams.insert(a.to_string());
                }
                [a, b] => {
                    set.bigrams.insert((a.to_string(), b.to_string()));
                }
                _ => {
                    return Err(CoreError::Lexicon(format!(
                        "term {term:?} is neither a unigram nor a bigram"
                    )))
                }
            }
        }
        Ok(set)
    }

    pub fn is_empty(&self) -> bool {
        self.unigrams.is_empty() && self.bigrams.is_empty()
    }

    pub fn terms(&self) -> Vec<String> {
        let mut out: Vec<String> = self.unigrams.iter().cloned().collect();
        out.extend(self.bigrams.iter().map(|(a, b)| format!("{a} {b}")));
        out.sort();
        out
    }

    /// Counts term mentions in a folded token sequence. A bigram mention
    /// consumes two adjacent tokens; mentions may overlap between terms.
    fn mentions(&self, tokens: &[String]) -> BTreeMap<String, u64> {
        let mut out = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if self.unigrams.contains(t) {
                *out.entry(t.clone()).or_insert(0) += 1;
            }
            if i + 1 < tokens.len() {
                let pair = (t.clone(), tokens[i + 1].clone());
                if self.bigrams.contains(&pair) {
                    *out.entry(format!("{} {}", pair.0, pair.1)).or_insert(0) += 1;
                }
            }
        }
        out
    }
}

/// Plain-text term list: one term per line, `#` comments allowed.
pub fn load_terms(path: &Path) -> Result<TermSet> {
    let text = std::fs::read_to_string(path)?;
    TermSet::from_terms(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#')),
    )
}

/// Named term categories. Categories whose name starts with "harmless" or
/// "non" (case-insensitive) are treated as non-offensive when computing the
/// flagged-document ratio.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub categories: BTreeMap<String, TermSet>,
}

impl Lexicon {
    /// Parses the `[category]` header format, one term per line.
    pub fn from_text(text: &str) -> Result<Lexicon> {
        let mut categories: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim().to_string();
                if name.is_empty() {
                    return Err(CoreError::Lexicon(format!(
                        "line {}: empty category name",
                        lineno + 1
                    )));
                }
                categories.entry(name.clone()).or_default();
                current = Some(name);
                continue;
            }
            match &current {
                Some(cat) => categories.get_mut(cat).unwrap().push(line.to_string()),
                None => {
                    return Err(CoreError::Lexicon(format!(
                        "line {}: term {line:?} before any [category] header",
                        lineno + 1
                    )))
                }
            }
        }
        if categories.is_empty() {
            return Err(CoreError::Lexicon("no categories".into()));
        }
        let mut out = Lexicon::default();
        for (name, terms) in categories {
            out.categories.insert(
                name,
                TermSet::from_terms(terms.iter().map(String::as_str))?,
            );
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Lexicon> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn is_offensive_category(name: &str) -> bool {
        let lower = name.to_lowercase();
        !(lower.starts_with("harmless") || lower.starts_with("non"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub mentions: u64,
    /// mentions / num_tokens.
    pub per_token: f64,
    pub offensive: bool,
}

/// Corpus-wide taxonomy matching result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaxonomyReport {
    pub categories: BTreeMap<String, CategoryStats>,
    /// Fraction of documents with at least one mention in any offensive
    /// category.
    pub percent_documents_flagged: f64,
    pub num_documents: u64,
    pub num_tokens: u64,
}

struct TaxonomyAcc {
    tok: Arc<dyn Tokenizer>,
    lexicon: Arc<Lexicon>,
    mentions: BTreeMap<String, u64>,
    flagged_documents: u64,
    num_documents: u64,
    num_tokens: u64,
}

impl Accumulator for TaxonomyAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        self.num_documents += 1;
        let spans = self.tok.spans(&doc.text);
        self.num_tokens += spans.len() as u64;
        let tokens: Vec<String> = spans
            .iter()
            .map(|s| s.slice(&doc.text).to_lowercase())
            .collect();
        let mut flagged = false;
        for (name, terms) in &self.lexicon.categories {
            let count: u64 = terms.mentions(&tokens).values().sum();
            if count > 0 {
                *self.mentions.get_mut(name).unwrap() += count;
                if Lexicon::is_offensive_category(name) {
                    flagged = true;
                }
            }
        }
        if flagged {
            self.flagged_documents += 1;
        }
    }

    fn merge(&mut self, other: Self) {
        self.num_documents += other.num_documents;
        self.num_tokens += other.num_tokens;
        self.flagged_documents += other.flagged_documents;
        for (k, v) in other.mentions {
            *self.mentions.get_mut(&k).unwrap() += v;
        }
    }
}

/// Counts boundary-matched lexicon mentions per category across the corpus.
pub fn taxonomy_scan(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    lexicon: Arc<Lexicon>,
    workers: usize,
) -> Result<(TaxonomyReport, RunReport)> {
    if lexicon.categories.is_empty() {
        return Err(CoreError::Lexicon("empty lexicon".into()));
    }
    let (acc, report) = engine::run(
        corpus,
        || TaxonomyAcc {
            tok: tok.clone(),
            lexicon: lexicon.clone(),
            mentions: lexicon.categories.keys().map(|k| (k.clone(), 0)).collect(),
            flagged_documents: 0,
            num_documents: 0,
            num_tokens: 0,
        },
        workers,
    )?;
    let categories = acc
        .mentions
        .into_iter()
        .map(|(name, mentions)| {
            let per_token = if acc.num_tokens == 0 {
                0.0
            } else {
                mentions as f64 / acc.num_tokens as f64
            };
            let offensive = Lexicon::is_offensive_category(&name);
            (
                name,
                CategoryStats {
                    mentions,
                    per_token,
                    offensive,
                },
            )
        })
        .collect();
    Ok((
        TaxonomyReport {
            categories,
            percent_documents_flagged: if acc.num_documents == 0 {
                0.0
            } else {
                acc.flagged_documents as f64 / acc.num_documents as f64
            },
            num_documents: acc.num_documents,
            num_tokens: acc.num_tokens,
        },
        report,
    ))
}

/// Sentence polarity scorer in [-1, 1]. Implementations must be shareable
/// across workers.
pub trait SentenceScorer: Send + Sync {
    fn score(&self, sentence: &str) -> Result<f64>;
}

impl<F> SentenceScorer for F
where
    F: Fn(&str) -> f64 + Send + Sync,
{
    fn score(&self, sentence: &str) -> Result<f64> {
        Ok(self(sentence))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSentences {
    /// Sentences containing the term (boundary-matched).
    pub sentence_count: u64,
    /// Mean polarity over those sentences; present only when a scorer ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_polarity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemographicReport {
    pub terms: BTreeMap<String, TermSentences>,
    pub num_documents: u64,
    pub num_sentences: u64,
}

struct DemographicAcc {
    tok: Arc<dyn Tokenizer>,
    terms: Arc<TermSet>,
    scorer: Option<Arc<dyn SentenceScorer>>,
    counts: BTreeMap<String, (u64, f64)>,
    num_documents: u64,
    num_sentences: u64,
    error: Option<CoreError>,
}

impl Accumulator for DemographicAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        if self.error.is_some() {
            return;
        }
        self.num_documents += 1;
        for sentence in doc.text.unicode_sentences() {
            self.num_sentences += 1;
            let spans = self.tok.spans(sentence);
            let tokens: Vec<String> = spans
                .iter()
                .map(|s| s.slice(sentence).to_lowercase())
                .collect();
            let mentioned = self.terms.mentions(&tokens);
            if mentioned.is_empty() {
                continue;
            }
            let polarity = match &self.scorer {
                Some(scorer) => match scorer.score(sentence) {
                    Ok(p) if (-1.0..=1.0).contains(&p) => Some(p),
                    Ok(p) => {
                        self.error = Some(CoreError::InvalidPolarity(p));
                        return;
                    }
                    Err(e) => {
                        self.error = Some(e);
                        return;
                    }
                },
                None => None,
            };
            for term in mentioned.keys() {
                let entry = self.counts.entry(term.clone()).or_insert((0, 0.0));
                entry.0 += 1;
                if let Some(p) = polarity {
                    entry.1 += p;
                }
            }
        }
    }

    fn merge(&mut self, other: Self) {
        if self.error.is_none() {
            self.error = other.error;
        }
        self.num_documents += other.num_documents;
        self.num_sentences += other.num_sentences;
        for (term, (count, sum)) in other.counts {
            let entry = self.counts.entry(term).or_insert((0, 0.0));
            entry.0 += count;
            entry.1 += sum;
        }
    }
}

/// For every term, the number of sentences mentioning it; with a scorer,
/// also the mean polarity of those sentences. Sentences follow the Unicode
/// sentence-segmentation rules.
pub fn demographic_sentences(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    terms: Arc<TermSet>,
    scorer: Option<Arc<dyn SentenceScorer>>,
    workers: usize,
) -> Result<(DemographicReport, RunReport)> {
    if terms.is_empty() {
        return Err(CoreError::Lexicon("empty term set".into()));
    }
    let scored = scorer.is_some();
    let (acc, report) = engine::run(
        corpus,
        || DemographicAcc {
            tok: tok.clone(),
            terms: terms.clone(),
            scorer: scorer.clone(),
            counts: BTreeMap::new(),
            num_documents: 0,
            num_sentences: 0,
            error: None,
        },
        workers,
    )?;
    if let Some(err) = acc.error {
        return Err(err);
    }
    let mut out: BTreeMap<String, TermSentences> = terms
        .terms()
        .into_iter()
        .map(|t| {
            (
                t,
                TermSentences {
                    sentence_count: 0,
                    mean_polarity: None,
                },
            )
        })
        .collect();
    for (term, (count, sum)) in acc.counts {
        let mean = if scored && count > 0 {
            Some(sum / count as f64)
        } else {
            None
        };
        out.insert(
            term,
            TermSentences {
                sentence_count: count,
                mean_polarity: mean,
            },
        );
    }
    Ok((
        DemographicReport {
            terms: out,
            num_documents: acc.num_documents,
            num_sentences: acc.num_sentences,
        },
        report,
    ))
}
