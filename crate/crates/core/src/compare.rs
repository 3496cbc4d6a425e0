//! Cross-corpus unigram comparison: ranked vocabularies, Jensen-Shannon
//! distance over the intersection or union of two vocabularies, and
//! rank-pair extraction for scatter plots.

use std::collections::HashMap;
use std::io::BufRead;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::engine::RunReport;
use crate::error::{CoreError, Result};
use crate::sketch::{self, SketchParams, SlotCounter};
use crate::tokenize::Tokenizer;

/// Top-k unigrams of a corpus with their (sketch) counts, descending by
/// count with lexicographic ties.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedVocab {
    pub entries: Vec<(String, u64)>,
}

impl RankedVocab {
    pub fn new(entries: Vec<(String, u64)>) -> Self {
        RankedVocab { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// 1-based rank per unigram.
    fn ranks(&self) -> HashMap<&str, usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (g, _))| (g.as_str(), i + 1))
            .collect()
    }

    /// Reads the JSONL written by the n-gram CLI: one
    /// `{"rank":..,"ngram":..,"count":..}` object per line. A leading
    /// `{"header":...}` line is skipped.
    pub fn from_jsonl(reader: impl BufRead) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            ngram: String,
            count: u64,
        }
        let mut entries = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<Row>(&line) {
                Ok(row) => entries.push((row.ngram, row.count)),
                Err(e) => {
                    let is_header = serde_json::from_str::<serde_json::Value>(&line)
                        .ok()
                        .is_some_and(|v| v.get("header").is_some());
                    if !is_header {
                        return Err(CoreError::InvalidExample(format!("vocab line: {e}")));
                    }
                }
            }
        }
        if entries.is_empty() {
            return Err(CoreError::EmptyVocab);
        }
        entries.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
        Ok(RankedVocab { entries })
    }
}

/// The k most common unigrams via the top-k sketch (n = 1).
pub fn ranked_vocab<C: SlotCounter>(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    k: usize,
    table_bits: u32,
    seed: u64,
    workers: usize,
) -> Result<(RankedVocab, RunReport)> {
    let params = SketchParams {
        n: 1,
        table_bits,
        seed,
    };
    let (entries, report) = sketch::topk_ngrams::<C>(corpus, tok, params, k, workers)?;
    Ok((RankedVocab { entries }, report))
}

/// Which vocabulary the distance is computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VocabMode {
    /// Unigrams common to both vocabularies; both count vectors are
    /// renormalized after the restriction.
    Intersection,
    /// All unigrams of either vocabulary, zero-filling absences.
    Union,
}

/// Jensen-Shannon distance between the two count distributions, base-2 logs,
/// so the result lies in [0, 1]. The distance is the square root of the JS
/// divergence.
pub fn js_distance(a: &RankedVocab, b: &RankedVocab, mode: VocabMode) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(CoreError::EmptyVocab);
    }
    let counts_a: HashMap<&str, u64> =
        a.entries.iter().map(|(g, c)| (g.as_str(), *c)).collect();
    let counts_b: HashMap<&str, u64> =
        b.entries.iter().map(|(g, c)| (g.as_str(), *c)).collect();

    let vocab: Vec<&str> = match mode {
        VocabMode::Intersection => a
            .entries
            .iter()
            .map(|(g, _)| g.as_str())
            .filter(|g| counts_b.contains_key(g))
            .collect(),
        VocabMode::Union => {
            let mut v: Vec<&str> = a.entries.iter().map(|(g, _)| g.as_str()).collect();
            v.extend(
                b.entries
                    .iter()
                    .map(|(g, _)| g.as_str())
                    .filter(|g| !counts_a.contains_key(g)),
            );
            v
        }
    };
    if vocab.is_empty() {
        return Err(CoreError::EmptyIntersection);
    }

    let vec_of = |counts: &HashMap<&str, u64>| -> Vec<f64> {
        vocab
            .iter()
            .map(|g| counts.get(g).copied().unwrap_or(0) as f64)
            .collect()
    };
    let mut p = vec_of(&counts_a);
    let mut q = vec_of(&counts_b);
    normalize(&mut p);
    normalize(&mut q);

    let mut divergence = 0.0;
    for (pi, qi) in p.iter().zip(&q) {
        let m = 0.5 * (pi + qi);
        if *pi > 0.0 {
            divergence += 0.5 * pi * (pi / m).log2();
        }
        if *qi > 0.0 {
            divergence += 0.5 * qi * (qi / m).log2();
        }
    }
    // Guard against -0.0 / tiny negatives from rounding.
    Ok(divergence.max(0.0).sqrt().min(1.0))
}

fn normalize(v: &mut [f64]) {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
}

/// One unigram of A with its rank in A and (when present) in B; 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPair {
    pub ngram: String,
    pub rank_a: usize,
    /// Absent when the unigram is outside B's list.
    pub rank_b: Option<usize>,
}

/// Rank pairs for the `top` most common unigrams of A.
pub fn rank_pairs(a: &RankedVocab, b: &RankedVocab, top: usize) -> Vec<RankPair> {
    let b_ranks = b.ranks();
    a.entries
        .iter()
        .take(top)
        .enumerate()
        .map(|(i, (g, _))| RankPair {
            ngram: g.clone(),
            rank_a: i + 1,
            rank_b: b_ranks.get(g.as_str()).copied(),
        })
        .collect()
}

/// Both distances plus rank pairs, the full comparison the CLI emits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareResult {
    pub js_intersection: f64,
    pub js_union: f64,
    pub rank_pairs: Vec<RankPair>,
}

pub fn compare(a: &RankedVocab, b: &RankedVocab, pairs: usize) -> Result<CompareResult> {
    Ok(CompareResult {
        js_intersection: js_distance(a, b, VocabMode::Intersection)?,
        js_union: js_distance(a, b, VocabMode::Union)?,
        rank_pairs: rank_pairs(a, b, pairs),
    })
}
