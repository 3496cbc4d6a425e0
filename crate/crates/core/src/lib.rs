//! Count-and-search analyses for large sharded text corpora.
//!
//! The toolkit runs two kinds of machinery over newline-delimited JSON
//! shards (optionally gzipped):
//!
//! - **Counting**, exact or compressed. Exact counts (summary statistics,
//!   URL breakdowns, length histograms, duplicate clusters) run as mergeable
//!   accumulators over a shard-parallel engine. Compressed counts trade
//!   memory for accuracy through fixed-size seeded hash tables: top-k and
//!   bottom-k n-grams and unique-n-gram estimation, with documented
//!   upper/lower-bound semantics and a two-seed collision check.
//! - **Searching**: an embedded inverted index with phrase verification,
//!   document-frequency queries, multi-field co-occurrence, and benchmark
//!   contamination reports built on top.
//!
//! Everything analysis-visible is deterministic: a fixed seed and
//! configuration produce identical reports for any worker count.

pub mod compare;
pub mod corpus;
pub mod dedup;
pub mod engine;
pub mod error;
pub mod hash;
pub mod index;
pub mod lexicon;
pub mod pii;
pub mod report;
pub mod sketch;
pub mod stats;
pub mod tokenize;

pub use corpus::{Corpus, CorpusSpec, Document};
pub use engine::{Accumulator, DocRef, RunReport};
pub use error::{CoreError, Result};
pub use tokenize::{TokenSpan, Tokenizer, UnicodeWordTokenizer};
