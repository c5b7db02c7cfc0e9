//! Run transcript: an ordered list of flat records, one per event.
//!
//! Record 0 is always `RunStart` and carries the config snapshot, the task,
//! the strategy and (for the full engine) the style inventory. Each
//! completion event carries the exact request that was sent. The `cothinker`
//! crate writes records as one JSON object per line.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::gateway::{ChatRequest, Completion};
use crate::moderator::{GraphStats, ReferenceSet};
use crate::styles::StyleInventory;
use crate::types::{FinalAnswer, Task};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventType {
    RunStart,
    Orchestrate,
    InitialGen,
    RefSelect,
    Refine,
    TmsUpdate,
    Synthesize,
    Baseline,
    Final,
    Abort,
}

/// Which procedure produced a transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[serde(rename = "cothinker")]
    CoThinker,
    Io,
    Cot,
    SelfRefine,
    Mad,
    Dmad,
}

impl Strategy {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name.to_ascii_lowercase().replace('_', "-").as_str() {
            "cothinker" => Strategy::CoThinker,
            "io" => Strategy::Io,
            "cot" => Strategy::Cot,
            "self-refine" | "selfrefine" | "sr" => Strategy::SelfRefine,
            "mad" => Strategy::Mad,
            "dmad" => Strategy::Dmad,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::CoThinker => "cothinker",
            Strategy::Io => "io",
            Strategy::Cot => "cot",
            Strategy::SelfRefine => "self-refine",
            Strategy::Mad => "mad",
            Strategy::Dmad => "dmad",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStart {
    pub run_id: String,
    pub strategy: Strategy,
    pub task: Task,
    pub config: EngineConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory: Option<StyleInventory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptRecord {
    pub seq: usize,
    pub event: EventType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_start: Option<RunStart>,
    /// Phase label for baseline steps (`initial`, `critique`, `revise`, ...).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_profile: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<ChatRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion_text: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refsets: Option<Vec<ReferenceSet>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph_stats: Option<GraphStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_answer: Option<FinalAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub started_ms: u64,
    pub finished_ms: u64,
}

impl TranscriptRecord {
    pub fn new(event: EventType) -> Self {
        TranscriptRecord {
            seq: 0,
            event,
            round: None,
            agent_id: None,
            run_start: None,
            phase: None,
            base_profile: None,
            request: None,
            completion_text: None,
            backend_id: None,
            latency_ms: None,
            retry_count: None,
            embedding: None,
            refsets: None,
            edges: None,
            graph_stats: None,
            memory: None,
            final_answer: None,
            error: None,
            started_ms: 0,
            finished_ms: 0,
        }
    }

    pub(crate) fn with_completion(mut self, req: &ChatRequest, c: &Completion) -> Self {
        self.request = Some(req.clone());
        self.completion_text = Some(c.text.clone());
        self.backend_id = Some(c.backend_id.clone());
        self.latency_ms = Some(c.latency.as_millis() as u64);
        self.retry_count = Some(c.retry_count);
        self
    }

    pub fn is_completion(&self) -> bool {
        self.completion_text.is_some()
    }

    /// Copy with timing and transport details cleared, for replay comparison.
    pub fn normalized(&self) -> Self {
        let mut r = self.clone();
        r.started_ms = 0;
        r.finished_ms = 0;
        r.latency_ms = r.latency_ms.map(|_| 0);
        r.retry_count = r.retry_count.map(|_| 0);
        r.backend_id = r.backend_id.map(|_| String::new());
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTranscript {
    pub run_id: String,
    pub records: Vec<TranscriptRecord>,
}

impl RunTranscript {
    /// Rebuilds a transcript from its records (e.g. read back from disk).
    pub fn from_records(records: Vec<TranscriptRecord>) -> Result<Self> {
        let start = records
            .first()
            .and_then(|r| r.run_start.as_ref())
            .ok_or_else(|| Error::MalformedTranscript("record 0 is not a RunStart record".into()))?;
        for (i, r) in records.iter().enumerate() {
            if r.seq != i {
                return Err(Error::MalformedTranscript(alloc::format!("record {i} has seq {}", r.seq)));
            }
        }
        Ok(RunTranscript { run_id: start.run_id.clone(), records })
    }

    pub fn run_start(&self) -> Option<&RunStart> {
        self.records.first().and_then(|r| r.run_start.as_ref())
    }

    pub fn completion_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_completion()).count()
    }

    pub fn events(&self, event: EventType) -> impl Iterator<Item = &TranscriptRecord> {
        self.records.iter().filter(move |r| r.event == event)
    }

    pub fn count(&self, event: EventType) -> usize {
        self.events(event).count()
    }

    pub fn final_answer(&self) -> Option<&FinalAnswer> {
        self.records.iter().rev().find_map(|r| r.final_answer.as_ref())
    }
}

/// Receives records as they are produced; a file sink should persist each
/// one before returning so an aborted run leaves a usable prefix.
pub trait TranscriptSink {
    fn append(&mut self, record: &TranscriptRecord) -> Result<()>;
}

/// Sink that discards records (the engine keeps its own copy).
#[derive(Debug, Default)]
pub struct NullSink;

impl TranscriptSink for NullSink {
    fn append(&mut self, _: &TranscriptRecord) -> Result<()> {
        Ok(())
    }
}

impl TranscriptSink for Vec<TranscriptRecord> {
    fn append(&mut self, record: &TranscriptRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Millisecond timestamps for transcript records.
pub trait Clock {
    fn now_ms(&self) -> u64;
}

/// Always reports 0; keeps mock transcripts byte-stable.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroClock;

impl Clock for ZeroClock {
    fn now_ms(&self) -> u64 {
        0
    }
}

/// Numbers, timestamps and forwards records to a sink while keeping a copy.
pub(crate) struct Recorder<'s> {
    records: Vec<TranscriptRecord>,
    sink: &'s mut dyn TranscriptSink,
    clock: &'s dyn Clock,
}

impl<'s> Recorder<'s> {
    pub(crate) fn new(sink: &'s mut dyn TranscriptSink, clock: &'s dyn Clock) -> Self {
        Recorder { records: Vec::new(), sink, clock }
    }

    pub(crate) fn now(&self) -> u64 {
        self.clock.now_ms()
    }

    pub(crate) fn push(&mut self, mut record: TranscriptRecord, started_ms: u64) -> Result<()> {
        record.seq = self.records.len();
        record.started_ms = started_ms;
        record.finished_ms = self.clock.now_ms();
        self.sink.append(&record)?;
        self.records.push(record);
        Ok(())
    }

    /// Best-effort `Abort` record; a failing sink is ignored since the run
    /// is already failing with `err`.
    pub(crate) fn abort(&mut self, err: &Error) {
        let mut record = TranscriptRecord::new(EventType::Abort);
        record.error = Some(alloc::format!("{err}"));
        let now = self.now();
        let _ = self.push(record, now);
    }

    pub(crate) fn finish(self, run_id: String) -> RunTranscript {
        RunTranscript { run_id, records: self.records }
    }
}
