//! Exact-duplicate detection and cross-corpus overlap.
//!
//! Documents are matched by a seeded 128-bit hash of their full text (or
//! verbatim URL). A cluster is a hash value with multiplicity >= 2. The
//! seeded hash exists so the whole analysis can be rerun with a second seed:
//! any difference between the two reports is collision evidence.

use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document};
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::hash::hash128;

/// What gets hashed per document.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DedupKey {
    /// Full document text, empty strings included.
    Text,
    /// Verbatim URL string; documents without a URL are excluded from both
    /// numerator and denominator.
    Url,
}

impl DedupKey {
    fn of<'d>(&self, doc: &'d Document) -> Option<&'d str> {
        match self {
            DedupKey::Text => Some(&doc.text),
            DedupKey::Url => doc.url.as_deref(),
        }
    }
}

/// One of the largest duplicate clusters, for display.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopCluster {
    /// Text (or URL) of the earliest document in the cluster, truncated to
    /// [`REPRESENTATIVE_MAX_CHARS`] characters.
    pub representative: String,
    pub size: u64,
}

pub const REPRESENTATIVE_MAX_CHARS: usize = 200;

/// Cluster counts and ratios for one corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicateReport {
    /// Documents that entered the analysis (all documents for text dedup,
    /// documents with a URL for URL dedup).
    pub documents_considered: u64,
    /// Distinct hash values observed.
    pub distinct_values: u64,
    /// Documents in clusters of size >= 2.
    pub duplicate_documents: u64,
    /// Clusters of size >= 2.
    pub duplicate_clusters: u64,
    /// duplicate_documents / documents_considered.
    pub ratio_documents: f64,
    /// duplicate_clusters / distinct_values.
    pub ratio_clusters: f64,
    /// Largest clusters, ranked by size with lexicographic ties on the
    /// representative.
    pub top_clusters: Vec<TopCluster>,
    /// Histogram of duplicate cluster sizes (size -> cluster count). Used by
    /// the seed-invariance collision check; sizes below 2 are not recorded.
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub cluster_sizes: BTreeMap<u64, u64>,
}

struct HashCountAcc {
    key: DedupKey,
    seed: u64,
    counts: HashMap<u128, u64>,
    considered: u64,
}

impl Accumulator for HashCountAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let Some(value) = self.key.of(doc) else {
            return;
        };
        self.considered += 1;
        *self
            .counts
            .entry(hash128(value.as_bytes(), self.seed))
            .or_insert(0) += 1;
    }

    fn merge(&mut self, other: Self) {
        self.considered += other.considered;
        for (h, c) in other.counts {
            *self.counts.entry(h).or_insert(0) += c;
        }
    }
}

/// Fetches the earliest-occurring document value for a bounded set of hashes.
struct RepresentativeAcc {
    key: DedupKey,
    seed: u64,
    wanted: Arc<HashMap<u128, u64>>,
    found: HashMap<u128, (DocRef, String)>,
}

impl Accumulator for RepresentativeAcc {
    fn absorb(&mut self, doc: &Document, at: DocRef) {
        let Some(value) = self.key.of(doc) else {
            return;
        };
        let h = hash128(value.as_bytes(), self.seed);
        if !self.wanted.contains_key(&h) {
            return;
        }
        match self.found.get(&h) {
            Some((seen, _)) if *seen <= at => {}
            _ => {
                self.found.insert(h, (at, truncate_chars(value)));
            }
        }
    }

    fn merge(&mut self, other: Self) {
        for (h, (at, repr)) in other.found {
            match self.found.get(&h) {
                Some((seen, _)) if *seen <= at => {}
                _ => {
                    self.found.insert(h, (at, repr));
                }
            }
        }
    }
}

fn truncate_chars(s: &str) -> String {
    if s.chars().count() <= REPRESENTATIVE_MAX_CHARS {
        return s.to_string();
    }
    let mut out: String = s.chars().take(REPRESENTATIVE_MAX_CHARS).collect();
    out.push('…');
    out
}

/// Exact-duplicate report over text or URL hashes. `top_n` caps the list of
/// largest clusters; 0 skips the representative lookup pass entirely.
pub fn duplicates(
    corpus: &Corpus,
    key: DedupKey,
    seed: u64,
    top_n: usize,
    workers: usize,
) -> Result<(DuplicateReport, RunReport)> {
    if key == DedupKey::Url && !corpus.has_url_field() {
        return Err(CoreError::NoUrlField);
    }
    let (acc, mut report) = engine::run(
        corpus,
        || HashCountAcc {
            key,
            seed,
            counts: HashMap::new(),
            considered: 0,
        },
        workers,
    )?;
    if key == DedupKey::Url && acc.considered == 0 {
        return Err(CoreError::NoUrls);
    }

    let mut duplicate_documents = 0u64;
    let mut duplicate_clusters = 0u64;
    let mut cluster_sizes: BTreeMap<u64, u64> = BTreeMap::new();
    for &c in acc.counts.values() {
        if c >= 2 {
            duplicate_documents += c;
            duplicate_clusters += 1;
            *cluster_sizes.entry(c).or_insert(0) += 1;
        }
    }
    let distinct_values = acc.counts.len() as u64;

    let top_clusters = if top_n > 0 && duplicate_clusters > 0 {
        // Every cluster at or above the size of the n-th largest is a
        // candidate, so lexicographic ties at the boundary resolve exactly.
        let mut sizes: Vec<u64> = acc.counts.values().copied().filter(|c| *c >= 2).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        let boundary = sizes[(top_n - 1).min(sizes.len() - 1)];
        let wanted: HashMap<u128, u64> = acc
            .counts
            .iter()
            .filter(|(_, c)| **c >= boundary.max(2))
            .map(|(h, c)| (*h, *c))
            .collect();
        let wanted = Arc::new(wanted);
        let (reps, rep_report) = engine::run(
            corpus,
            || RepresentativeAcc {
                key,
                seed,
                wanted: wanted.clone(),
                found: HashMap::new(),
            },
            workers,
        )?;
        report.wall_time += rep_report.wall_time;
        let mut clusters: Vec<TopCluster> = reps
            .found
            .into_iter()
            .map(|(h, (_, representative))| TopCluster {
                representative,
                size: wanted[&h],
            })
            .collect();
        clusters.sort_unstable_by(|a, b| {
            b.size
                .cmp(&a.size)
                .then_with(|| a.representative.cmp(&b.representative))
        });
        clusters.truncate(top_n);
        clusters
    } else {
        Vec::new()
    };

    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    Ok((
        DuplicateReport {
            documents_considered: acc.considered,
            distinct_values,
            duplicate_documents,
            duplicate_clusters,
            ratio_documents: ratio(duplicate_documents, acc.considered),
            ratio_clusters: ratio(duplicate_clusters, distinct_values),
            top_clusters,
            cluster_sizes,
        },
        report,
    ))
}

pub fn text_duplicates(
    corpus: &Corpus,
    seed: u64,
    top_n: usize,
    workers: usize,
) -> Result<(DuplicateReport, RunReport)> {
    duplicates(corpus, DedupKey::Text, seed, top_n, workers)
}

pub fn url_duplicates(
    corpus: &Corpus,
    seed: u64,
    top_n: usize,
    workers: usize,
) -> Result<(DuplicateReport, RunReport)> {
    duplicates(corpus, DedupKey::Url, seed, top_n, workers)
}

// ---------------------------------------------------------------------------
// Cross-corpus overlap
// ---------------------------------------------------------------------------

/// Default in-memory budget for one corpus's distinct-hash set before runs
/// spill to sorted temporary files.
pub const DEFAULT_HASH_BUDGET_BYTES: u64 = 256 << 20;

enum SortedRun {
    Mem(Vec<u128>),
    File { file: tempfile::NamedTempFile, count: u64 },
}

impl SortedRun {
    fn stream(&self) -> Result<RunStream<'_>> {
        Ok(match self {
            SortedRun::Mem(v) => RunStream::Mem(v.iter()),
            SortedRun::File { file, .. } => {
                let mut f = file.reopen()?;
                f.seek(SeekFrom::Start(0))?;
                RunStream::File(BufReader::with_capacity(1 << 16, f))
            }
        })
    }
}

enum RunStream<'r> {
    Mem(std::slice::Iter<'r, u128>),
    File(BufReader<std::fs::File>),
}

impl RunStream<'_> {
    fn next(&mut self) -> Result<Option<u128>> {
        match self {
            RunStream::Mem(it) => Ok(it.next().copied()),
            RunStream::File(r) => {
                let mut buf = [0u8; 16];
                match r.read_exact(&mut buf) {
                    Ok(()) => Ok(Some(u128::from_le_bytes(buf))),
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => Ok(None),
                    Err(e) => Err(e.into()),
                }
            }
        }
    }
}

fn write_run(values: &[u128]) -> Result<SortedRun> {
    let mut file = tempfile::NamedTempFile::new()?;
    {
        let mut w = BufWriter::with_capacity(1 << 16, file.as_file_mut());
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
    }
    Ok(SortedRun::File {
        file,
        count: values.len() as u64,
    })
}

/// The distinct text-hash set of one corpus, possibly file-backed. Built with
/// one seed; intersecting sets built with different seeds is an error.
pub struct CorpusHashes {
    name: String,
    seed: u64,
    distinct: u64,
    store: SortedRun,
}

impl CorpusHashes {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn distinct_count(&self) -> u64 {
        self.distinct
    }
}

struct DistinctAcc {
    key: DedupKey,
    seed: u64,
    budget: u64,
    buf: Vec<u128>,
    runs: Vec<SortedRun>,
}

impl DistinctAcc {
    fn flush(&mut self) {
        if self.buf.is_empty() {
            return;
        }
        self.buf.sort_unstable();
        self.buf.dedup();
        let run = write_run(&self.buf).expect("spill run write");
        self.runs.push(run);
        self.buf.clear();
    }
}

impl Accumulator for DistinctAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let Some(value) = self.key.of(doc) else {
            return;
        };
        self.buf.push(hash128(value.as_bytes(), self.seed));
        if self.buf.len() as u64 * 16 >= self.budget {
            self.flush();
        }
    }

    fn merge(&mut self, other: Self) {
        let mut other = other;
        self.runs.append(&mut other.runs);
        self.buf.extend(other.buf);
        if self.buf.len() as u64 * 16 >= self.budget {
            self.flush();
        }
    }
}

/// Builds the distinct-hash set of a corpus, spilling sorted runs to
/// temporary files whenever the in-memory buffer exceeds `budget_bytes`.
pub fn corpus_hashes(
    corpus: &Corpus,
    key: DedupKey,
    seed: u64,
    budget_bytes: u64,
    workers: usize,
) -> Result<(CorpusHashes, RunReport)> {
    let budget = budget_bytes.max(16);
    let (mut acc, report) = engine::run(
        corpus,
        || DistinctAcc {
            key,
            seed,
            budget,
            buf: Vec::new(),
            runs: Vec::new(),
        },
        workers,
    )?;

    acc.buf.sort_unstable();
    acc.buf.dedup();
    let store = if acc.runs.is_empty() {
        SortedRun::Mem(std::mem::take(&mut acc.buf))
    } else {
        if !acc.buf.is_empty() {
            let buf = std::mem::take(&mut acc.buf);
            acc.runs.push(SortedRun::Mem(buf));
        }
        merge_runs(&acc.runs)?
    };
    let distinct = match &store {
        SortedRun::Mem(v) => v.len() as u64,
        SortedRun::File { count, .. } => *count,
    };
    Ok((
        CorpusHashes {
            name: corpus.name().to_string(),
            seed,
            distinct,
            store,
        },
        report,
    ))
}

/// K-way merge of sorted runs into one deduplicated file-backed run.
fn merge_runs(runs: &[SortedRun]) -> Result<SortedRun> {
    let mut streams = Vec::with_capacity(runs.len());
    for r in runs {
        streams.push(r.stream()?);
    }
    let mut heap: BinaryHeap<std::cmp::Reverse<(u128, usize)>> = BinaryHeap::new();
    for (i, s) in streams.iter_mut().enumerate() {
        if let Some(v) = s.next()? {
            heap.push(std::cmp::Reverse((v, i)));
        }
    }
    let mut file = tempfile::NamedTempFile::new()?;
    let mut count = 0u64;
    {
        let mut w = BufWriter::with_capacity(1 << 16, file.as_file_mut());
        let mut last: Option<u128> = None;
        while let Some(std::cmp::Reverse((v, i))) = heap.pop() {
            if last != Some(v) {
                w.write_all(&v.to_le_bytes())?;
                last = Some(v);
                count += 1;
            }
            if let Some(next) = streams[i].next()? {
                heap.push(std::cmp::Reverse((next, i)));
            }
        }
        w.flush()?;
    }
    Ok(SortedRun::File { file, count })
}

/// Intersection cardinality of one subset of corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapEntry {
    pub corpora: Vec<String>,
    /// Distinct hashes present in every listed corpus.
    pub shared_clusters: u64,
    /// shared_clusters / distinct count, per corpus.
    pub ratios: Vec<(String, f64)>,
}

/// Intersection cardinalities for every subset of size >= 2 of the given
/// corpora, smallest subsets first. All sets must carry the same seed.
pub fn cross_overlap(sets: &[&CorpusHashes]) -> Result<Vec<OverlapEntry>> {
    if sets.len() < 2 {
        return Err(CoreError::TooFewCorpora);
    }
    for s in &sets[1..] {
        if s.seed != sets[0].seed {
            return Err(CoreError::SeedMismatch(sets[0].seed, s.seed));
        }
    }
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    for mask in 1u32..(1 << sets.len()) {
        if mask.count_ones() >= 2 {
            subsets.push((0..sets.len()).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    subsets.sort_by_key(|s| (s.len(), s.clone()));

    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        let members: Vec<&CorpusHashes> = subset.iter().map(|&i| sets[i]).collect();
        let shared = intersect_count(&members)?;
        out.push(OverlapEntry {
            corpora: members.iter().map(|m| m.name.clone()).collect(),
            shared_clusters: shared,
            ratios: members
                .iter()
                .map(|m| {
                    let r = if m.distinct == 0 {
                        0.0
                    } else {
                        shared as f64 / m.distinct as f64
                    };
                    (m.name.clone(), r)
                })
                .collect(),
        });
    }
    Ok(out)
}

/// Merge-join over sorted distinct streams: counts values present in all.
fn intersect_count(members: &[&CorpusHashes]) -> Result<u64> {
    let mut streams = Vec::with_capacity(members.len());
    for m in members {
        streams.push(m.store.stream()?);
    }
    let mut current: Vec<u128> = Vec::with_capacity(streams.len());
    for s in streams.iter_mut() {
        match s.next()? {
            Some(v) => current.push(v),
            None => return Ok(0),
        }
    }
    let mut shared = 0u64;
    'outer: loop {
        let target = *current.iter().max().unwrap();
        let mut all_equal = true;
        for (i, s) in streams.iter_mut().enumerate() {
            while current[i] < target {
                match s.next()? {
                    Some(v) => current[i] = v,
                    None => break 'outer,
                }
            }
            if current[i] != target {
                all_equal = false;
            }
        }
        if all_equal {
            shared += 1;
            for (i, s) in streams.iter_mut().enumerate() {
                match s.next()? {
                    Some(v) => current[i] = v,
                    None => break 'outer,
                }
            }
        }
    }
    Ok(shared)
}
