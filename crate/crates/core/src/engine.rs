//! Data-parallel execution of analyses as mergeable per-shard accumulators.
//!
//! The unit of parallelism is the shard: workers pull shard paths from a
//! shared queue (load-balancing uneven shard sizes), fold every document of
//! a shard into a worker-local accumulator, and the per-worker states are
//! merged once all shards are drained. Merge is associative and commutative
//! up to reported outputs, so any worker count produces the same result;
//! ranked outputs break count ties lexicographically to keep parallel runs
//! reproducible.

use std::collections::VecDeque;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::corpus::{Corpus, Document};
use crate::error::Result;

/// Position of a document: shard index and record index within the shard.
/// Gives every document a stable identity independent of worker scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct DocRef {
    pub shard: usize,
    pub record: u64,
}

/// Mergeable per-shard analysis state. A fresh value from the factory is the
/// identity; `absorb` folds one document; `merge` combines two states.
pub trait Accumulator: Send {
    fn absorb(&mut self, doc: &Document, at: DocRef);

    fn merge(&mut self, other: Self)
    where
        Self: Sized;
}

/// What a run did: document/shard totals, skipped records, and wall time.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub documents_seen: u64,
    pub shards_processed: u64,
    pub skipped_records: u64,
    pub wall_time: Duration,
    /// Read failures, one message per skipped shard.
    pub shard_errors: Vec<String>,
}

impl RunReport {
    fn absorb(&mut self, other: RunReport) {
        self.documents_seen += other.documents_seen;
        self.shards_processed += other.shards_processed;
        self.skipped_records += other.skipped_records;
        self.shard_errors.extend(other.shard_errors);
    }
}

/// Runs `make()` accumulators over every shard of `corpus` with `workers`
/// threads and merges them into one. Every document is absorbed exactly once;
/// unreadable shards are skipped and recorded in the report.
pub fn run<A, F>(corpus: &Corpus, make: F, workers: usize) -> Result<(A, RunReport)>
where
    A: Accumulator,
    F: Fn() -> A + Sync,
{
    let workers = workers.max(1);
    let started = Instant::now();
    let queue: Mutex<VecDeque<usize>> = Mutex::new((0..corpus.shard_count()).collect());

    let mut slots: Vec<Option<(A, RunReport)>> = Vec::new();
    slots.resize_with(workers, || None);
    let slots = Mutex::new(&mut slots);

    std::thread::scope(|scope| {
        for worker_id in 0..workers {
            let queue = &queue;
            let slots = &slots;
            let make = &make;
            scope.spawn(move || {
                let mut acc = make();
                let mut report = RunReport::default();
                loop {
                    let shard = { queue.lock().unwrap().pop_front() };
                    let Some(shard) = shard else { break };
                    match process_shard(corpus, shard, &mut acc) {
                        Ok((records, skipped)) => {
                            report.documents_seen += records;
                            report.skipped_records += skipped;
                            report.shards_processed += 1;
                        }
                        Err(e) => {
                            report.shard_errors.push(format!("shard {shard}: {e}"));
                        }
                    }
                }
                slots.lock().unwrap()[worker_id] = Some((acc, report));
            });
        }
    });

    // Merge in worker-id order; shard assignment varies between runs, so
    // correctness relies on merge commutativity over reported outputs.
    let mut merged: Option<(A, RunReport)> = None;
    for slot in slots.into_inner().unwrap().iter_mut() {
        let Some((acc, report)) = slot.take() else {
            continue;
        };
        match &mut merged {
            None => merged = Some((acc, report)),
            Some((macc, mreport)) => {
                macc.merge(acc);
                mreport.absorb(report);
            }
        }
    }
    let (acc, mut report) = merged.expect("at least one worker ran");
    report.wall_time = started.elapsed().max(Duration::from_nanos(1));
    Ok((acc, report))
}

fn process_shard<A: Accumulator>(
    corpus: &Corpus,
    shard: usize,
    acc: &mut A,
) -> Result<(u64, u64)> {
    let mut reader = corpus.read_shard(shard)?;
    for (record, doc) in reader.by_ref().enumerate() {
        let doc = doc?;
        acc.absorb(
            &doc,
            DocRef {
                shard,
                record: record as u64,
            },
        );
    }
    Ok((reader.records(), reader.skipped()))
}
