//! Embedded inverted index with phrase verification, plus benchmark
//! contamination reporting on top of it.
//!
//! Documents are stored as their token sequence joined by single spaces
//! (original case); postings map case-folded tokens to strictly increasing
//! document-id lists with per-document term frequencies. A phrase matches a
//! document when its token sequence appears contiguously in the document's
//! token sequence, compared case-folded and single-space-normalized
//! (`strict` disables the case folding). Posting-list intersection only
//! narrows the candidates; the contiguous-phrase check is what decides, since
//! a bag-of-tokens AND would over-report matches.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::os::unix::fs::FileExt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::tokenize::Tokenizer;

const POSTINGS_MAGIC: &[u8; 8] = b"TPIX0001";
const DOCS_MAGIC: &[u8; 8] = b"TPDC0001";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexMeta {
    pub format_version: u32,
    pub corpus_name: String,
    pub document_count: u64,
    pub token_count: u64,
    pub distinct_tokens: u64,
}

#[derive(Debug, Clone, Copy)]
struct DocEntry {
    shard: u32,
    record: u64,
    offset: u64,
    len: u32,
}

/// Disk-backed inverted index. Postings live in memory after open; document
/// token sequences are fetched with positional reads, so queries take `&self`
/// and run concurrently.
pub struct InvertedIndex {
    meta: IndexMeta,
    postings: HashMap<String, Vec<(u32, u32)>>,
    docs: Vec<DocEntry>,
    docs_file: File,
    blob_base: u64,
}

struct DocCollectAcc {
    tok: Arc<dyn Tokenizer>,
    docs: Vec<(DocRef, String)>,
}

impl Accumulator for DocCollectAcc {
    fn absorb(&mut self, doc: &Document, at: DocRef) {
        let spans = self.tok.spans(&doc.text);
        let mut joined = String::with_capacity(doc.text.len());
        for (i, s) in spans.iter().enumerate() {
            if i > 0 {
                joined.push(' ');
            }
            joined.push_str(s.slice(&doc.text));
        }
        self.docs.push((at, joined));
    }

    fn merge(&mut self, other: Self) {
        self.docs.extend(other.docs);
    }
}

/// Builds the index files for `corpus` under `dir` and opens the result.
/// Document ids are assigned by (shard, record) order, so the index is
/// identical for any worker count.
pub fn build_index(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    dir: &Path,
    workers: usize,
) -> Result<(InvertedIndex, RunReport)> {
    let (mut acc, report) = engine::run(
        corpus,
        || DocCollectAcc {
            tok: tok.clone(),
            docs: Vec::new(),
        },
        workers,
    )?;
    acc.docs.sort_unstable_by_key(|(at, _)| *at);

    let mut postings: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
    let mut token_count = 0u64;
    let mut doc_tf: HashMap<String, u32> = HashMap::new();
    for (id, (_, joined)) in acc.docs.iter().enumerate() {
        doc_tf.clear();
        if !joined.is_empty() {
            for token in joined.split(' ') {
                token_count += 1;
                *doc_tf.entry(token.to_lowercase()).or_insert(0) += 1;
            }
        }
        // BTreeMap ordering is irrelevant here; ids increase monotonically.
        for (token, tf) in doc_tf.drain() {
            postings.entry(token).or_default().push((id as u32, tf));
        }
    }

    std::fs::create_dir_all(dir)?;
    let meta = IndexMeta {
        format_version: 1,
        corpus_name: corpus.name().to_string(),
        document_count: acc.docs.len() as u64,
        token_count,
        distinct_tokens: postings.len() as u64,
    };
    write_meta(dir, &meta)?;
    write_postings(dir, &postings)?;
    write_docs(dir, &acc.docs)?;
    Ok((InvertedIndex::open(dir)?, report))
}

fn write_meta(dir: &Path, meta: &IndexMeta) -> Result<()> {
    let mut f = BufWriter::new(File::create(dir.join("meta.json"))?);
    serde_json::to_writer_pretty(&mut f, meta)
        .map_err(|e| CoreError::IndexFormat(e.to_string()))?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(())
}

fn write_postings(dir: &Path, postings: &HashMap<String, Vec<(u32, u32)>>) -> Result<()> {
    let mut keys: Vec<&String> = postings.keys().collect();
    keys.sort_unstable();
    let mut w = BufWriter::with_capacity(1 << 16, File::create(dir.join("postings.bin"))?);
    w.write_all(POSTINGS_MAGIC)?;
    w.write_all(&(keys.len() as u64).to_le_bytes())?;
    for key in keys {
        let list = &postings[key];
        w.write_all(&(key.len() as u32).to_le_bytes())?;
        w.write_all(key.as_bytes())?;
        w.write_all(&(list.len() as u64).to_le_bytes())?;
        for (doc, tf) in list {
            w.write_all(&doc.to_le_bytes())?;
            w.write_all(&tf.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_docs(dir: &Path, docs: &[(DocRef, String)]) -> Result<()> {
    let mut w = BufWriter::with_capacity(1 << 16, File::create(dir.join("docs.bin"))?);
    w.write_all(DOCS_MAGIC)?;
    w.write_all(&(docs.len() as u64).to_le_bytes())?;
    let mut offset = 0u64;
    for (at, joined) in docs {
        w.write_all(&(at.shard as u32).to_le_bytes())?;
        w.write_all(&at.record.to_le_bytes())?;
        w.write_all(&offset.to_le_bytes())?;
        w.write_all(&(joined.len() as u32).to_le_bytes())?;
        offset += joined.len() as u64;
    }
    for (_, joined) in docs {
        w.write_all(joined.as_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

impl InvertedIndex {
    /// Opens a persisted index directory.
    pub fn open(dir: &Path) -> Result<InvertedIndex> {
        let meta: IndexMeta = serde_json::from_reader(BufReader::new(File::open(
            dir.join("meta.json"),
        )?))
        .map_err(|e| CoreError::IndexFormat(format!("meta.json: {e}")))?;
        if meta.format_version != 1 {
            return Err(CoreError::IndexFormat(format!(
                "unsupported format version {}",
                meta.format_version
            )));
        }

        let mut r = BufReader::with_capacity(1 << 16, File::open(dir.join("postings.bin"))?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != POSTINGS_MAGIC {
            return Err(CoreError::IndexFormat("bad postings magic".into()));
        }
        let n_tokens = read_u64(&mut r)?;
        let mut postings = HashMap::with_capacity(n_tokens as usize);
        for _ in 0..n_tokens {
            let len = read_u32(&mut r)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf)?;
            let token = String::from_utf8(buf)
                .map_err(|e| CoreError::IndexFormat(format!("token utf8: {e}")))?;
            let n = read_u64(&mut r)? as usize;
            let mut list = Vec::with_capacity(n);
            let mut prev: Option<u32> = None;
            for _ in 0..n {
                let doc = read_u32(&mut r)?;
                let tf = read_u32(&mut r)?;
                if let Some(p) = prev {
                    if doc <= p {
                        return Err(CoreError::IndexFormat(format!(
                            "posting list for {token:?} is not strictly increasing"
                        )));
                    }
                }
                prev = Some(doc);
                list.push((doc, tf));
            }
            postings.insert(token, list);
        }

        let docs_path = dir.join("docs.bin");
        let mut r = BufReader::with_capacity(1 << 16, File::open(&docs_path)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != DOCS_MAGIC {
            return Err(CoreError::IndexFormat("bad docs magic".into()));
        }
        let n_docs = read_u64(&mut r)?;
        let mut docs = Vec::with_capacity(n_docs as usize);
        for _ in 0..n_docs {
            let shard = read_u32(&mut r)?;
            let record = read_u64(&mut r)?;
            let offset = read_u64(&mut r)?;
            let len = read_u32(&mut r)?;
            docs.push(DocEntry {
                shard,
                record,
                offset,
                len,
            });
        }
        let blob_base = 8 + 8 + n_docs * (4 + 8 + 8 + 4);
        if docs.len() as u64 != meta.document_count {
            return Err(CoreError::IndexFormat(
                "doc table and meta disagree on document count".into(),
            ));
        }
        Ok(InvertedIndex {
            meta,
            postings,
            docs,
            docs_file: File::open(&docs_path)?,
            blob_base,
        })
    }

    pub fn meta(&self) -> &IndexMeta {
        &self.meta
    }

    pub fn document_count(&self) -> u64 {
        self.meta.document_count
    }

    /// (shard, record) location of a document for shard-level retrieval.
    pub fn location(&self, doc_id: u32) -> Option<(usize, u64)> {
        self.docs
            .get(doc_id as usize)
            .map(|d| (d.shard as usize, d.record))
    }

    /// Documents containing the case-folded token.
    pub fn postings(&self, token: &str) -> Option<&[(u32, u32)]> {
        self.postings.get(token).map(|v| v.as_slice())
    }

    /// The stored token sequence of a document, single-space joined,
    /// original case.
    pub fn doc_text(&self, doc_id: u32) -> Result<String> {
        let entry = self
            .docs
            .get(doc_id as usize)
            .ok_or_else(|| CoreError::IndexFormat(format!("doc id {doc_id} out of range")))?;
        let mut buf = vec![0u8; entry.len as usize];
        self.docs_file
            .read_exact_at(&mut buf, self.blob_base + entry.offset)?;
        String::from_utf8(buf).map_err(|e| CoreError::IndexFormat(format!("doc utf8: {e}")))
    }

    fn query_tokens(&self, query: &str, tok: &dyn Tokenizer) -> Vec<String> {
        tok.spans(query)
            .iter()
            .map(|s| s.slice(query).to_lowercase())
            .collect()
    }

    /// Candidate doc ids containing every (folded) token of the phrase.
    fn candidates(&self, folded_tokens: &[String]) -> Vec<u32> {
        let mut lists: Vec<&[(u32, u32)]> = Vec::with_capacity(folded_tokens.len());
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for t in folded_tokens {
            if !seen.insert(t) {
                continue;
            }
            match self.postings(t) {
                Some(l) => lists.push(l),
                None => return Vec::new(),
            }
        }
        lists.sort_unstable_by_key(|l| l.len());
        let (first, rest) = lists.split_first().expect("non-empty tokens");
        let mut out: Vec<u32> = first.iter().map(|(d, _)| *d).collect();
        for list in rest {
            let mut keep = Vec::with_capacity(out.len().min(list.len()));
            let mut i = 0;
            for &doc in &out {
                while i < list.len() && list[i].0 < doc {
                    i += 1;
                }
                if i < list.len() && list[i].0 == doc {
                    keep.push(doc);
                }
            }
            out = keep;
            if out.is_empty() {
                break;
            }
        }
        out
    }

    /// Counts token-aligned occurrences (overlaps allowed) of the phrase in
    /// one document. Comparison folds case unless `strict`.
    fn phrase_occurrences(&self, doc_id: u32, phrase: &str, strict: bool) -> Result<u64> {
        let stored = self.doc_text(doc_id)?;
        let haystack = if strict {
            format!(" {stored} ")
        } else {
            format!(" {} ", stored.to_lowercase())
        };
        let needle = format!(" {phrase} ");
        let mut count = 0u64;
        let mut from = 0;
        while let Some(pos) = haystack[from..].find(&needle) {
            count += 1;
            from += pos + 1;
        }
        Ok(count)
    }

    /// Document frequency and total occurrence count of a word or phrase.
    /// Unseen queries return (0, 0).
    pub fn count_occurrences(
        &self,
        query: &str,
        tok: &dyn Tokenizer,
        strict: bool,
    ) -> Result<(u64, u64)> {
        if query.trim().is_empty() {
            return Err(CoreError::EmptyQuery);
        }
        let tokens = self.query_tokens(query, tok);
        if tokens.is_empty() {
            return Ok((0, 0));
        }
        if tokens.len() == 1 && !strict {
            return Ok(match self.postings(&tokens[0]) {
                Some(list) => (
                    list.len() as u64,
                    list.iter().map(|(_, tf)| *tf as u64).sum(),
                ),
                None => (0, 0),
            });
        }
        let phrase = if strict {
            // Re-render the query with original case for strict comparison.
            let spans = tok.spans(query);
            spans
                .iter()
                .map(|s| s.slice(query))
                .collect::<Vec<_>>()
                .join(" ")
        } else {
            tokens.join(" ")
        };
        let mut df = 0u64;
        let mut total = 0u64;
        for doc in self.candidates(&tokens) {
            let n = self.phrase_occurrences(doc, &phrase, strict)?;
            if n > 0 {
                df += 1;
                total += n;
            }
        }
        Ok((df, total))
    }

    /// Ids of documents in which every field occurs as a verified phrase, in
    /// any order and with any separation.
    pub fn contains_all(
        &self,
        fields: &[String],
        tok: &dyn Tokenizer,
        strict: bool,
    ) -> Result<Vec<u32>> {
        if fields.is_empty() {
            return Err(CoreError::InvalidExample("no fields".into()));
        }
        let mut result: Option<Vec<u32>> = None;
        for field in fields {
            let tokens = self.query_tokens(field, tok);
            if tokens.is_empty() {
                return Err(CoreError::InvalidExample(format!(
                    "field {field:?} has no tokens"
                )));
            }
            let phrase = if strict {
                let spans = tok.spans(field);
                spans
                    .iter()
                    .map(|s| s.slice(field))
                    .collect::<Vec<_>>()
                    .join(" ")
            } else {
                tokens.join(" ")
            };
            let candidates = match &result {
                // Later fields only need checking inside the current result.
                Some(prev) => {
                    let narrowed = self.candidates(&tokens);
                    let prev_set: BTreeSet<u32> = prev.iter().copied().collect();
                    narrowed
                        .into_iter()
                        .filter(|d| prev_set.contains(d))
                        .collect()
                }
                None => self.candidates(&tokens),
            };
            let mut verified = Vec::with_capacity(candidates.len());
            for doc in candidates {
                if self.phrase_occurrences(doc, &phrase, strict)? > 0 {
                    verified.push(doc);
                }
            }
            if verified.is_empty() {
                return Ok(Vec::new());
            }
            result = Some(verified);
        }
        Ok(result.unwrap_or_default())
    }
}

// ---------------------------------------------------------------------------
// Benchmark contamination
// ---------------------------------------------------------------------------

/// One evaluation example: at least two input fields. Labels/targets are
/// never part of the check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalExample {
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    pub fields: Vec<String>,
}

impl EvalExample {
    /// Usable for contamination checking: >= 2 non-blank fields.
    pub fn is_valid(&self) -> bool {
        self.fields.len() >= 2 && self.fields.iter().all(|f| !f.trim().is_empty())
    }
}

/// Reads examples from JSONL: `{"dataset": ..., "fields": [...], "split"?}`.
pub fn load_examples(reader: impl BufRead) -> Result<Vec<EvalExample>> {
    let mut out = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let ex: EvalExample = serde_json::from_str(&line).map_err(|e| {
            CoreError::InvalidExample(format!("line {}: {e}", lineno + 1))
        })?;
        out.push(ex);
    }
    Ok(out)
}

/// Per-dataset contamination summary: the share of examples whose fields all
/// co-occur in at least one single document. An upper bound on exact-match
/// contamination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationReport {
    pub dataset: String,
    /// Valid examples tested.
    pub examined: u64,
    pub contaminated: u64,
    /// Examples rejected for having fewer than two usable fields.
    pub rejected: u64,
    /// 100 x contaminated / examined.
    pub percentage: f64,
    /// Sample of matching document ids, capped.
    pub witness_docs: Vec<u32>,
}

pub const WITNESS_LIMIT: usize = 10;

/// Checks every example against the index and reports per dataset
/// (alphabetical). Invalid examples are counted and skipped, not fatal.
pub fn contamination_reports(
    index: &InvertedIndex,
    examples: &[EvalExample],
    tok: &dyn Tokenizer,
    strict: bool,
) -> Result<Vec<ContaminationReport>> {
    #[derive(Default)]
    struct Tally {
        examined: u64,
        contaminated: u64,
        rejected: u64,
        witnesses: BTreeSet<u32>,
    }
    let mut per_dataset: BTreeMap<String, Tally> = BTreeMap::new();
    for ex in examples {
        let tally = per_dataset.entry(ex.dataset.clone()).or_default();
        if !ex.is_valid() {
            tally.rejected += 1;
            continue;
        }
        tally.examined += 1;
        let docs = index.contains_all(&ex.fields, tok, strict)?;
        if !docs.is_empty() {
            tally.contaminated += 1;
            if tally.witnesses.len() < WITNESS_LIMIT {
                tally.witnesses.insert(docs[0]);
            }
        }
    }
    Ok(per_dataset
        .into_iter()
        .map(|(dataset, t)| ContaminationReport {
            dataset,
            examined: t.examined,
            contaminated: t.contaminated,
            rejected: t.rejected,
            percentage: if t.examined == 0 {
                0.0
            } else {
                100.0 * t.contaminated as f64 / t.examined as f64
            },
            witness_docs: t.witnesses.into_iter().collect(),
        })
        .collect())
}
