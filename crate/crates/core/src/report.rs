//! Canonical report rendering. Identical run configuration (including the
//! seed) yields byte-identical report files for any worker count, so the
//! header carries the deterministic facts of the run (tool, version, seed,
//! config hash) while timing goes to stderr with the run summary.

use serde::Serialize;

use crate::engine::RunReport;
use crate::error::Result;
use crate::hash::config_hash;

#[derive(Debug, Clone, Serialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    pub analysis: String,
    pub seed: u64,
    pub config_hash: String,
}

impl ReportHeader {
    /// `config` lists every parameter that shapes the output (analysis name,
    /// corpus spec, knobs). Worker count and output paths stay out of the
    /// hash since they never change results.
    pub fn new(tool: &str, version: &str, analysis: &str, seed: u64, config: &[&str]) -> Self {
        ReportHeader {
            tool: tool.to_string(),
            version: version.to_string(),
            analysis: analysis.to_string(),
            seed,
            config_hash: config_hash(config),
        }
    }
}

#[derive(Serialize)]
struct Envelope<'h, T: Serialize> {
    header: &'h ReportHeader,
    report: T,
}

/// Pretty JSON bytes with a trailing newline. Map-typed report fields are
/// ordered maps, so serialization order is stable.
pub fn render_json<T: Serialize>(header: &ReportHeader, body: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(&Envelope {
        header,
        report: body,
    })
    .expect("report serialization");
    bytes.push(b'\n');
    Ok(bytes)
}

/// One line per record plus trailing newline, for JSONL outputs.
pub fn render_jsonl<T: Serialize>(records: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    for record in records {
        bytes.extend_from_slice(&serde_json::to_vec(&record).expect("record serialization"));
        bytes.push(b'\n');
    }
    Ok(bytes)
}

/// Human summary printed to stderr after every run.
pub fn run_summary(report: &RunReport) -> String {
    let mut s = format!(
        "documents={} shards={} skipped_records={} wall_time={:.3}s",
        report.documents_seen,
        report.shards_processed,
        report.skipped_records,
        report.wall_time.as_secs_f64()
    );
    for err in &report.shard_errors {
        s.push_str("\nshard error: ");
        s.push_str(err);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn rendering_is_deterministic() {
        let header = ReportHeader::new("tp", "0.1.0", "stats", 42, &["corpus=x", "unit=chars"]);
        let body: BTreeMap<String, u64> = [("b".into(), 2), ("a".into(), 1)].into_iter().collect();
        let one = render_json(&header, &body).unwrap();
        let two = render_json(&header, &body).unwrap();
        assert_eq!(one, two);
        assert!(one.ends_with(b"\n"));
    }

    #[test]
    fn config_hash_depends_on_config() {
        let a = ReportHeader::new("tp", "0.1.0", "stats", 1, &["corpus=x"]);
        let b = ReportHeader::new("tp", "0.1.0", "stats", 1, &["corpus=y"]);
        assert_ne!(a.config_hash, b.config_hash);
    }
}
