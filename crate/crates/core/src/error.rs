use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the analysis library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("empty shard list")]
    EmptyShardList,

    #[error("empty field name: {0}")]
    EmptyFieldName(&'static str),

    #[error("missing shard path: {0}")]
    MissingShard(PathBuf),

    #[error("unsupported shard format (expected .json/.jsonl, optionally .gz): {0}")]
    UnsupportedShardFormat(PathBuf),

    #[error("shard index {0} out of range ({1} shards)")]
    ShardOutOfRange(usize, usize),

    #[error("n-gram size must be >= 1")]
    InvalidNgramSize,

    #[error("top/bottom k must be >= 1")]
    InvalidK,

    #[error("table bits must be in 1..={max}, got {bits}")]
    InvalidTableBits { bits: u32, max: u32 },

    #[error("counter tables are incompatible (size or seed mismatch)")]
    TableMismatch,

    #[error("corpus changed between passes: saw {pass1} documents, then {pass2}")]
    CorpusChanged { pass1: u64, pass2: u64 },

    #[error("collision check needs two distinct seeds")]
    SeedsEqual,

    #[error("hash sets were built with different seeds ({0} vs {1}); counts are incomparable")]
    SeedMismatch(u64, u64),

    #[error("cross-corpus overlap needs at least two corpora")]
    TooFewCorpora,

    #[error("no document in the corpus has a URL")]
    NoUrls,

    #[error("corpus has no url_field configured")]
    NoUrlField,

    #[error("domain map is empty")]
    EmptyDomainMap,

    #[error("percentile must be in 0..=100, got {0}")]
    InvalidPercentile(f64),

    #[error("precision must be in 0..=1, got {0}")]
    InvalidPrecision(f64),

    #[error("polarity {0} outside [-1, 1]")]
    InvalidPolarity(f64),

    #[error("query is empty")]
    EmptyQuery,

    #[error("vocabulary is empty")]
    EmptyVocab,

    #[error("the two vocabularies share no unigrams")]
    EmptyIntersection,

    #[error("invalid evaluation example: {0}")]
    InvalidExample(String),

    #[error("index format error: {0}")]
    IndexFormat(String),

    #[error("lexicon error: {0}")]
    Lexicon(String),

    #[error("sentence scorer failed: {0}")]
    Scorer(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CoreError>;
