//! Corpus data model and shard readers.
//!
//! A corpus is an ordered list of shard files, each holding newline-delimited
//! JSON records, optionally gzip-compressed (selected by file extension).
//! Records are decoded lazily while streaming; a shard is never materialized
//! in memory. Malformed lines are skipped and tallied per shard instead of
//! aborting the run, since large crawls always carry some noise.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use flate2::bufread::MultiGzDecoder;
use serde_json::Value;

use crate::error::{CoreError, Result};

/// One corpus record: text plus whatever metadata the shard carried.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    pub id: Option<String>,
    /// Document text; may be empty (several published corpora contain
    /// documents that are empty or whitespace-only).
    pub text: String,
    /// Source URL, stored verbatim. No normalization happens at ingest.
    pub url: Option<String>,
    /// Sub-corpus label, when the record carries one.
    pub source: Option<String>,
    /// Scrape or ingestion date, kept as the raw string from the record.
    pub added: Option<String>,
    /// Remaining top-level string fields of the record.
    pub metadata: BTreeMap<String, String>,
}

/// Declarative description of a corpus: a name, its shard files, and which
/// JSON fields hold the text and URL.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSpec {
    pub name: String,
    pub shards: Vec<PathBuf>,
    pub text_field: String,
    pub url_field: Option<String>,
}

impl CorpusSpec {
    pub fn new(name: impl Into<String>, shards: Vec<PathBuf>) -> Self {
        CorpusSpec {
            name: name.into(),
            shards,
            text_field: "text".to_string(),
            url_field: None,
        }
    }

    pub fn with_text_field(mut self, field: impl Into<String>) -> Self {
        self.text_field = field.into();
        self
    }

    pub fn with_url_field(mut self, field: impl Into<String>) -> Self {
        self.url_field = Some(field.into());
        self
    }

    fn validate(&self) -> Result<()> {
        if self.shards.is_empty() {
            return Err(CoreError::EmptyShardList);
        }
        if self.text_field.is_empty() {
            return Err(CoreError::EmptyFieldName("text_field"));
        }
        if matches!(self.url_field.as_deref(), Some("")) {
            return Err(CoreError::EmptyFieldName("url_field"));
        }
        for shard in &self.shards {
            if !shard.is_file() {
                return Err(CoreError::MissingShard(shard.clone()));
            }
            shard_format(shard)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ShardFormat {
    JsonLines,
    JsonLinesGz,
}

fn shard_format(path: &Path) -> Result<ShardFormat> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_ascii_lowercase();
    if name.ends_with(".json.gz") || name.ends_with(".jsonl.gz") {
        Ok(ShardFormat::JsonLinesGz)
    } else if name.ends_with(".json") || name.ends_with(".jsonl") {
        Ok(ShardFormat::JsonLines)
    } else {
        Err(CoreError::UnsupportedShardFormat(path.to_path_buf()))
    }
}

/// An opened corpus. The handle is cheap to share across workers; each call
/// to [`Corpus::read_shard`] yields an independent single-consumer reader.
#[derive(Debug, Clone)]
pub struct Corpus {
    spec: CorpusSpec,
}

impl Corpus {
    /// Validates the spec (shards exist, formats supported) and returns a
    /// handle. Documents are only read when a shard reader is iterated.
    pub fn open(spec: CorpusSpec) -> Result<Corpus> {
        spec.validate()?;
        Ok(Corpus { spec })
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn spec(&self) -> &CorpusSpec {
        &self.spec
    }

    pub fn shard_count(&self) -> usize {
        self.spec.shards.len()
    }

    pub fn has_url_field(&self) -> bool {
        self.spec.url_field.is_some()
    }

    /// Streaming reader over one shard.
    pub fn read_shard(&self, shard: usize) -> Result<ShardReader> {
        let path = self
            .spec
            .shards
            .get(shard)
            .ok_or(CoreError::ShardOutOfRange(shard, self.spec.shards.len()))?;
        let file = File::open(path)?;
        let buf = BufReader::with_capacity(1 << 16, file);
        let lines: Box<dyn BufRead + Send> = match shard_format(path)? {
            ShardFormat::JsonLinesGz => {
                Box::new(BufReader::with_capacity(1 << 16, MultiGzDecoder::new(buf)))
            }
            ShardFormat::JsonLines => Box::new(buf),
        };
        Ok(ShardReader {
            lines,
            text_field: self.spec.text_field.clone(),
            url_field: self.spec.url_field.clone(),
            skipped: 0,
            records: 0,
            line: String::new(),
        })
    }

    /// Serial iterator over every document of every shard, in shard order.
    pub fn documents(&self) -> DocumentIter<'_> {
        DocumentIter {
            corpus: self,
            shard: 0,
            reader: None,
        }
    }
}

/// Streaming document reader for a single shard. Malformed JSON lines and
/// records without a usable text field are skipped and counted in
/// [`ShardReader::skipped`].
pub struct ShardReader {
    lines: Box<dyn BufRead + Send>,
    text_field: String,
    url_field: Option<String>,
    skipped: u64,
    records: u64,
    line: String,
}

impl ShardReader {
    /// Records skipped so far because they failed to parse.
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    /// Documents yielded so far.
    pub fn records(&self) -> u64 {
        self.records
    }

    fn parse_line(&self, line: &str) -> Option<Document> {
        let value: Value = serde_json::from_str(line).ok()?;
        let obj = value.as_object()?;
        let text = obj.get(&self.text_field)?.as_str()?.to_string();
        let url = self
            .url_field
            .as_deref()
            .and_then(|f| obj.get(f))
            .and_then(Value::as_str)
            .map(str::to_string);
        let mut doc = Document {
            text,
            url,
            ..Document::default()
        };
        for (key, val) in obj {
            if key == &self.text_field || Some(key.as_str()) == self.url_field.as_deref() {
                continue;
            }
            let Some(s) = val.as_str() else { continue };
            match key.as_str() {
                "id" => doc.id = Some(s.to_string()),
                "source" => doc.source = Some(s.to_string()),
                "added" => doc.added = Some(s.to_string()),
                _ => {
                    doc.metadata.insert(key.clone(), s.to_string());
                }
            }
        }
        Some(doc)
    }
}

impl Iterator for ShardReader {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Result<Document>> {
        loop {
            self.line.clear();
            match self.lines.read_line(&mut self.line) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            let line = self.line.trim_end_matches(['\n', '\r']);
            if line.trim().is_empty() {
                continue;
            }
            match self.parse_line(line) {
                Some(doc) => {
                    self.records += 1;
                    return Some(Ok(doc));
                }
                None => {
                    self.skipped += 1;
                }
            }
        }
    }
}

/// Serial all-shards iterator; shard read errors end iteration with an `Err`.
pub struct DocumentIter<'c> {
    corpus: &'c Corpus,
    shard: usize,
    reader: Option<ShardReader>,
}

impl Iterator for DocumentIter<'_> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Result<Document>> {
        loop {
            if self.reader.is_none() {
                if self.shard >= self.corpus.shard_count() {
                    return None;
                }
                match self.corpus.read_shard(self.shard) {
                    Ok(r) => self.reader = Some(r),
                    Err(e) => {
                        self.shard = self.corpus.shard_count();
                        return Some(Err(e));
                    }
                }
                self.shard += 1;
            }
            match self.reader.as_mut().unwrap().next() {
                Some(item) => return Some(item),
                None => self.reader = None,
            }
        }
    }
}
