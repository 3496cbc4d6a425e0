//! Memory-bounded approximate n-gram counting.
//!
//! All three analyses share one trick: instead of keying counts by n-gram
//! strings, counts live in a fixed-size table indexed by a seeded hash of the
//! rendered n-gram. The table size (a power of two) trades memory for
//! accuracy; collisions inflate counts.
//!
//! - Top-k: one pass. Every n-gram increments its slot, and when the slot
//!   count reaches the current top-k threshold the n-gram is inserted,
//!   potentially evicting the minimum. Reported counts are upper bounds of
//!   the true counts.
//! - Bottom-k: two passes. The first pass only tallies the table; the second
//!   looks up each n-gram's final count and keeps the k smallest. Collisions
//!   cause false negatives here: a rare n-gram sharing a slot with a frequent
//!   one inherits the inflated count and may be missing from the result.
//! - Unique: a bit table. Every n-gram sets its slot bit and the popcount is
//!   the estimate, always a lower bound of the true distinct count.
//!
//! Workers share one atomic counter table per run; slot updates commute, so
//! the final table is identical for any worker count. Each worker keeps its
//! own bounded candidate collection, and candidates are re-validated against
//! the final table before ranking. Per-worker tables merged by slot addition
//! would produce the same table but can drop boundary candidates that only
//! rank highly globally, which breaks run-to-run determinism.
//!
//! Rerunning any of these with a second seed and comparing reports is the
//! collision check: disagreement is collision evidence.

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Arc;

use crate::corpus::{Corpus, Document};
use crate::dedup;
use crate::engine::{self, Accumulator, DocRef, RunReport};
use crate::error::{CoreError, Result};
use crate::hash::hash64;
use crate::tokenize::{ngrams, Tokenizer};

/// Widest table supported: 2^36 slots (256 GiB of u32 counters).
pub const MAX_TABLE_BITS: u32 = 36;

/// Counter slot width; 32-bit is the default, 64-bit exists for unigram runs
/// over corpora where per-slot counts could saturate 32 bits.
pub trait SlotCounter: Copy + Default + Send + Sync + 'static {
    const NAME: &'static str;
    type Atomic: Send + Sync;

    fn new_atomic() -> Self::Atomic;

    /// Saturating increment; returns the new value.
    fn atomic_inc(slot: &Self::Atomic) -> u64;

    fn atomic_get(slot: &Self::Atomic) -> u64;
}

impl SlotCounter for u32 {
    const NAME: &'static str = "u32";
    type Atomic = AtomicU32;

    fn new_atomic() -> AtomicU32 {
        AtomicU32::new(0)
    }

    #[inline]
    fn atomic_inc(slot: &AtomicU32) -> u64 {
        match slot.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |v| v.checked_add(1)) {
            Ok(prev) => prev as u64 + 1,
            Err(_) => u32::MAX as u64, // saturated
        }
    }

    #[inline]
    fn atomic_get(slot: &AtomicU32) -> u64 {
        slot.load(Ordering::Relaxed) as u64
    }
}

impl SlotCounter for u64 {
    const NAME: &'static str = "u64";
    type Atomic = AtomicU64;

    fn new_atomic() -> AtomicU64 {
        AtomicU64::new(0)
    }

    #[inline]
    fn atomic_inc(slot: &AtomicU64) -> u64 {
        match slot.fetch_update(Ordering::Relaxed, Ordering::Relaxed, |v| v.checked_add(1)) {
            Ok(prev) => prev + 1,
            Err(_) => u64::MAX, // saturated
        }
    }

    #[inline]
    fn atomic_get(slot: &AtomicU64) -> u64 {
        slot.load(Ordering::Relaxed)
    }
}

/// Fixed-size table of saturating counters indexed by a seeded 64-bit hash
/// masked to the table size. Same (string, seed, size) always hits the same
/// slot. One table is shared by all workers of a run.
pub struct CounterTable<C: SlotCounter> {
    slots: Vec<C::Atomic>,
    bits: u32,
    seed: u64,
}

impl<C: SlotCounter> CounterTable<C> {
    pub fn new(bits: u32, seed: u64) -> Result<Self> {
        if bits == 0 || bits > MAX_TABLE_BITS {
            return Err(CoreError::InvalidTableBits {
                bits,
                max: MAX_TABLE_BITS,
            });
        }
        Ok(CounterTable {
            slots: (0..1usize << bits).map(|_| C::new_atomic()).collect(),
            bits,
            seed,
        })
    }

    #[inline]
    pub fn index(&self, rendered: &str) -> usize {
        (hash64(rendered.as_bytes(), self.seed) & ((1u64 << self.bits) - 1)) as usize
    }

    /// Saturating increment of a slot; returns the new count.
    #[inline]
    pub fn increment(&self, idx: usize) -> u64 {
        C::atomic_inc(&self.slots[idx])
    }

    #[inline]
    pub fn get(&self, idx: usize) -> u64 {
        C::atomic_get(&self.slots[idx])
    }

    pub fn count_of(&self, rendered: &str) -> u64 {
        self.get(self.index(rendered))
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Bounded collection of the k largest-count n-grams seen so far. Ranking
/// order is (count desc, n-gram asc); the eviction victim is the worst-ranked
/// entry, i.e. minimum count with the lexicographically largest string.
#[derive(Debug, Clone, Default)]
pub struct TopK {
    k: usize,
    counts: HashMap<String, u64>,
    ordered: BTreeSet<(u64, Reverse<String>)>,
}

impl TopK {
    pub fn new(k: usize) -> Self {
        TopK {
            k,
            counts: HashMap::new(),
            ordered: BTreeSet::new(),
        }
    }

    /// Minimum count required for a new entry to be worth offering. Zero
    /// until the collection is full.
    #[inline]
    pub fn threshold(&self) -> u64 {
        if self.counts.len() < self.k {
            0
        } else {
            self.ordered.first().map(|(c, _)| *c).unwrap_or(0)
        }
    }

    pub fn offer(&mut self, ngram: &str, count: u64) {
        if let Some(old) = self.counts.get_mut(ngram) {
            if *old != count {
                self.ordered.remove(&(*old, Reverse(ngram.to_string())));
                self.ordered.insert((count, Reverse(ngram.to_string())));
                *old = count;
            }
            return;
        }
        self.counts.insert(ngram.to_string(), count);
        self.ordered.insert((count, Reverse(ngram.to_string())));
        while self.counts.len() > self.k {
            let (c, Reverse(victim)) = self.ordered.first().cloned().unwrap();
            self.ordered.remove(&(c, Reverse(victim.clone())));
            self.counts.remove(&victim);
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    fn into_candidates(self) -> HashMap<String, u64> {
        self.counts
    }

    /// Entries ranked by (count desc, n-gram asc).
    pub fn into_ranked(self) -> Vec<(String, u64)> {
        let mut out: Vec<(String, u64)> = self.counts.into_iter().collect();
        out.sort_unstable_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
        out
    }
}

/// Bounded collection of the k smallest-count n-grams; ranking order is
/// (count asc, n-gram asc).
#[derive(Debug, Clone, Default)]
struct BottomK {
    k: usize,
    counts: HashMap<String, u64>,
    ordered: BTreeSet<(u64, String)>,
}

impl BottomK {
    fn new(k: usize) -> Self {
        BottomK {
            k,
            counts: HashMap::new(),
            ordered: BTreeSet::new(),
        }
    }

    fn offer(&mut self, ngram: &str, count: u64) {
        if self.counts.contains_key(ngram) {
            return; // pass-2 counts are final, nothing to update
        }
        if self.counts.len() >= self.k {
            let (wc, wg) = self.ordered.last().unwrap();
            if (count, ngram) >= (*wc, wg.as_str()) {
                return;
            }
        }
        self.counts.insert(ngram.to_string(), count);
        self.ordered.insert((count, ngram.to_string()));
        while self.counts.len() > self.k {
            let worst = self.ordered.last().cloned().unwrap();
            self.ordered.remove(&worst);
            self.counts.remove(&worst.1);
        }
    }

    fn into_ranked(self) -> Vec<(String, u64)> {
        let mut out: Vec<(String, u64)> = self.counts.into_iter().collect();
        out.sort_unstable_by(|(ga, ca), (gb, cb)| ca.cmp(cb).then_with(|| ga.cmp(gb)));
        out
    }
}

/// Shared bit table for distinct-count estimation; a set bit stays set.
pub struct UniqueTable {
    blocks: Vec<AtomicU64>,
    bits: u32,
    seed: u64,
}

impl UniqueTable {
    pub fn new(bits: u32, seed: u64) -> Result<Self> {
        if bits == 0 || bits > MAX_TABLE_BITS {
            return Err(CoreError::InvalidTableBits {
                bits,
                max: MAX_TABLE_BITS,
            });
        }
        let slots = 1usize << bits;
        Ok(UniqueTable {
            blocks: (0..slots.div_ceil(64)).map(|_| AtomicU64::new(0)).collect(),
            bits,
            seed,
        })
    }

    #[inline]
    pub fn set(&self, rendered: &str) {
        let idx = (hash64(rendered.as_bytes(), self.seed) & ((1u64 << self.bits) - 1)) as usize;
        self.blocks[idx >> 6].fetch_or(1u64 << (idx & 63), Ordering::Relaxed);
    }

    pub fn popcount(&self) -> u64 {
        self.blocks
            .iter()
            .map(|b| b.load(Ordering::Relaxed).count_ones() as u64)
            .sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Shared knobs of the sketch analyses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchParams {
    pub n: usize,
    pub table_bits: u32,
    pub seed: u64,
}

impl SketchParams {
    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CoreError::InvalidNgramSize);
        }
        if self.table_bits == 0 || self.table_bits > MAX_TABLE_BITS {
            return Err(CoreError::InvalidTableBits {
                bits: self.table_bits,
                max: MAX_TABLE_BITS,
            });
        }
        Ok(())
    }
}

struct TopKAcc<C: SlotCounter> {
    tok: Arc<dyn Tokenizer>,
    table: Arc<CounterTable<C>>,
    topk: TopK,
    carried: HashSet<String>,
    n: usize,
    buf: String,
}

impl<C: SlotCounter> Accumulator for TopKAcc<C> {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let spans = self.tok.spans(&doc.text);
        let mut windows = ngrams(&doc.text, &spans, self.n).expect("n validated");
        while windows.render_next(&mut self.buf) {
            let idx = self.table.index(&self.buf);
            let count = self.table.increment(idx);
            if count >= self.topk.threshold() {
                self.topk.offer(&self.buf, count);
            }
        }
    }

    // All slot updates are complete before the engine merges, so candidates
    // only need to be pooled here; finish() re-validates every candidate
    // against the final table and ranks the k best.
    fn merge(&mut self, other: Self) {
        self.carried
            .extend(std::mem::take(&mut self.topk).into_candidates().into_keys());
        self.carried.extend(other.carried);
        self.carried.extend(other.topk.into_candidates().into_keys());
    }
}

impl<C: SlotCounter> TopKAcc<C> {
    fn finish(self, k: usize) -> Vec<(String, u64)> {
        let mut candidates = self.carried;
        candidates.extend(self.topk.into_candidates().into_keys());
        let table = &self.table;
        let mut rescored: Vec<(String, u64)> = candidates
            .into_iter()
            .map(|g| {
                let c = table.count_of(&g);
                (g, c)
            })
            .collect();
        rescored.sort_unstable_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
        rescored.truncate(k);
        rescored
    }
}

/// Tally-only accumulator; the table is shared, so merging is a no-op.
struct TableAcc<C: SlotCounter> {
    tok: Arc<dyn Tokenizer>,
    table: Arc<CounterTable<C>>,
    n: usize,
    buf: String,
}

impl<C: SlotCounter> Accumulator for TableAcc<C> {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let spans = self.tok.spans(&doc.text);
        let mut windows = ngrams(&doc.text, &spans, self.n).expect("n validated");
        while windows.render_next(&mut self.buf) {
            let idx = self.table.index(&self.buf);
            self.table.increment(idx);
        }
    }

    fn merge(&mut self, _other: Self) {}
}

struct BottomPassAcc<C: SlotCounter> {
    tok: Arc<dyn Tokenizer>,
    table: Arc<CounterTable<C>>,
    bottom: BottomK,
    n: usize,
    buf: String,
}

impl<C: SlotCounter> Accumulator for BottomPassAcc<C> {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let spans = self.tok.spans(&doc.text);
        let mut windows = ngrams(&doc.text, &spans, self.n).expect("n validated");
        while windows.render_next(&mut self.buf) {
            let count = self.table.count_of(&self.buf);
            self.bottom.offer(&self.buf, count);
        }
    }

    fn merge(&mut self, other: Self) {
        // Counts are final in pass 2; the union re-ranks deterministically.
        for (g, c) in other.bottom.counts {
            self.bottom.offer(&g, c);
        }
    }
}

struct UniqueAcc {
    tok: Arc<dyn Tokenizer>,
    table: Arc<UniqueTable>,
    n: usize,
    buf: String,
}

impl Accumulator for UniqueAcc {
    fn absorb(&mut self, doc: &Document, _at: DocRef) {
        let spans = self.tok.spans(&doc.text);
        let mut windows = ngrams(&doc.text, &spans, self.n).expect("n validated");
        while windows.render_next(&mut self.buf) {
            self.table.set(&self.buf);
        }
    }

    fn merge(&mut self, _other: Self) {}
}

/// Most common n-grams, ranked (count desc, n-gram asc). Counts are upper
/// bounds of the true counts; with a table comfortably larger than the
/// distinct n-gram count they are exact. Asking for more entries than there
/// are distinct n-grams returns them all.
pub fn topk_ngrams<C: SlotCounter>(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    params: SketchParams,
    k: usize,
    workers: usize,
) -> Result<(Vec<(String, u64)>, RunReport)> {
    params.validate()?;
    if k == 0 {
        return Err(CoreError::InvalidK);
    }
    let table = Arc::new(CounterTable::<C>::new(params.table_bits, params.seed)?);
    let (acc, report) = engine::run(
        corpus,
        || TopKAcc {
            tok: tok.clone(),
            table: table.clone(),
            topk: TopK::new(k),
            carried: HashSet::new(),
            n: params.n,
            buf: String::new(),
        },
        workers,
    )?;
    Ok((acc.finish(k), report))
}

/// Least common n-grams, ranked (count asc, n-gram asc). Two passes over the
/// corpus; errors if the corpus changes between them. Rare n-grams whose slot
/// collides with a frequent one inherit the inflated count and may be absent
/// from the result.
pub fn bottomk_ngrams<C: SlotCounter>(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    params: SketchParams,
    k: usize,
    workers: usize,
) -> Result<(Vec<(String, u64)>, RunReport)> {
    params.validate()?;
    if k == 0 {
        return Err(CoreError::InvalidK);
    }
    let table = Arc::new(CounterTable::<C>::new(params.table_bits, params.seed)?);
    let (_, pass1) = engine::run(
        corpus,
        || TableAcc {
            tok: tok.clone(),
            table: table.clone(),
            n: params.n,
            buf: String::new(),
        },
        workers,
    )?;
    let (acc, mut report) = engine::run(
        corpus,
        || BottomPassAcc {
            tok: tok.clone(),
            table: table.clone(),
            bottom: BottomK::new(k),
            n: params.n,
            buf: String::new(),
        },
        workers,
    )?;
    if pass1.documents_seen != report.documents_seen {
        return Err(CoreError::CorpusChanged {
            pass1: pass1.documents_seen,
            pass2: report.documents_seen,
        });
    }
    report.wall_time += pass1.wall_time;
    report.shard_errors.splice(0..0, pass1.shard_errors);
    Ok((acc.bottom.into_ranked(), report))
}

/// Estimated distinct n-gram count: the popcount of the bit table, always a
/// lower bound of the true number of unique n-grams.
pub fn unique_ngrams(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    params: SketchParams,
    workers: usize,
) -> Result<(u64, RunReport)> {
    params.validate()?;
    let table = Arc::new(UniqueTable::new(params.table_bits, params.seed)?);
    let (_, report) = engine::run(
        corpus,
        || UniqueAcc {
            tok: tok.clone(),
            table: table.clone(),
            n: params.n,
            buf: String::new(),
        },
        workers,
    )?;
    Ok((table.popcount(), report))
}

/// Which analysis a collision check reruns under two seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionAnalysis {
    TopK { n: usize, k: usize },
    BottomK { n: usize, k: usize },
    Unique { n: usize },
    TextDuplicates,
    UrlDuplicates,
}

/// Outcome of rerunning an analysis with two seeds. Any difference between
/// the reported counts is evidence of a hash collision in one of the runs.
#[derive(Debug, Clone)]
pub struct CollisionCheck {
    pub seed_a: u64,
    pub seed_b: u64,
    pub matches: bool,
    /// Human-readable disagreements, capped at a handful.
    pub differences: Vec<String>,
}

const MAX_DIFFERENCES: usize = 16;

/// Runs `analysis` twice with `seed_a` and `seed_b` and compares the
/// reported outputs.
pub fn collision_check(
    corpus: &Corpus,
    tok: Arc<dyn Tokenizer>,
    analysis: CollisionAnalysis,
    table_bits: u32,
    seed_a: u64,
    seed_b: u64,
    workers: usize,
) -> Result<CollisionCheck> {
    if seed_a == seed_b {
        return Err(CoreError::SeedsEqual);
    }
    let mut differences = Vec::new();
    match analysis {
        CollisionAnalysis::TopK { n, k } | CollisionAnalysis::BottomK { n, k } => {
            let run = |seed: u64| -> Result<Vec<(String, u64)>> {
                let params = SketchParams { n, table_bits, seed };
                let (ranked, _) = match analysis {
                    CollisionAnalysis::TopK { .. } => {
                        topk_ngrams::<u64>(corpus, tok.clone(), params, k, workers)?
                    }
                    _ => bottomk_ngrams::<u64>(corpus, tok.clone(), params, k, workers)?,
                };
                Ok(ranked)
            };
            let a = run(seed_a)?;
            let b = run(seed_b)?;
            if a.len() != b.len() {
                differences.push(format!("result sizes differ: {} vs {}", a.len(), b.len()));
            }
            for (i, (ea, eb)) in a.iter().zip(&b).enumerate() {
                if ea != eb && differences.len() < MAX_DIFFERENCES {
                    differences.push(format!(
                        "rank {}: {:?} ({}) vs {:?} ({})",
                        i + 1,
                        ea.0,
                        ea.1,
                        eb.0,
                        eb.1
                    ));
                }
            }
        }
        CollisionAnalysis::Unique { n } => {
            let mut estimates = [0u64; 2];
            for (i, seed) in [seed_a, seed_b].into_iter().enumerate() {
                let params = SketchParams { n, table_bits, seed };
                estimates[i] = unique_ngrams(corpus, tok.clone(), params, workers)?.0;
            }
            if estimates[0] != estimates[1] {
                differences.push(format!(
                    "unique estimates differ: {} vs {}",
                    estimates[0], estimates[1]
                ));
            }
        }
        CollisionAnalysis::TextDuplicates | CollisionAnalysis::UrlDuplicates => {
            let key = match analysis {
                CollisionAnalysis::TextDuplicates => dedup::DedupKey::Text,
                _ => dedup::DedupKey::Url,
            };
            let a = dedup::duplicates(corpus, key, seed_a, 0, workers)?.0;
            let b = dedup::duplicates(corpus, key, seed_b, 0, workers)?.0;
            if a.duplicate_documents != b.duplicate_documents {
                differences.push(format!(
                    "duplicate documents differ: {} vs {}",
                    a.duplicate_documents, b.duplicate_documents
                ));
            }
            if a.duplicate_clusters != b.duplicate_clusters {
                differences.push(format!(
                    "duplicate clusters differ: {} vs {}",
                    a.duplicate_clusters, b.duplicate_clusters
                ));
            }
            if a.cluster_sizes != b.cluster_sizes {
                differences.push("cluster size multisets differ".to_string());
            }
        }
    }
    Ok(CollisionCheck {
        seed_a,
        seed_b,
        matches: differences.is_empty(),
        differences,
    })
}
