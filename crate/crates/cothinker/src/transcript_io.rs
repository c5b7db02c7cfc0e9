//! Transcript files: one JSON object per line, record 0 first.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cothinker_core::transcript::{RunTranscript, TranscriptRecord, TranscriptSink};
use cothinker_core::Error;

use crate::AppError;

/// Writes each record as a line and flushes it before returning, so an
/// aborted run leaves every record produced so far on disk.
pub struct JsonlSink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl JsonlSink {
    pub fn create(path: impl AsRef<Path>) -> Result<Self, AppError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
        }
        let file = File::create(&path).map_err(|e| AppError::io(&path, e))?;
        Ok(JsonlSink { path, out: BufWriter::new(file) })
    }
}

impl TranscriptSink for JsonlSink {
    fn append(&mut self, record: &TranscriptRecord) -> cothinker_core::Result<()> {
        let fail = |e: &dyn std::fmt::Display| Error::Sink(format!("{}: {e}", self.path.display()));
        serde_json::to_writer(&mut self.out, record).map_err(|e| fail(&e))?;
        self.out.write_all(b"\n").map_err(|e| fail(&e))?;
        self.out.flush().map_err(|e| fail(&e))
    }
}

pub fn to_jsonl(transcript: &RunTranscript) -> String {
    let mut s = String::new();
    for r in &transcript.records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

pub fn write_transcript(path: impl AsRef<Path>, transcript: &RunTranscript) -> Result<(), AppError> {
    let path = path.as_ref();
    std::fs::write(path, to_jsonl(transcript)).map_err(|e| AppError::io(path, e))
}

pub fn parse_jsonl(text: &str) -> cothinker_core::Result<RunTranscript> {
    let mut records = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: TranscriptRecord = serde_json::from_str(line)
            .map_err(|e| Error::MalformedTranscript(format!("line {}: {e}", n + 1)))?;
        records.push(record);
    }
    RunTranscript::from_records(records)
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<RunTranscript, AppError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| AppError::io(path, e))?);
        text.push('\n');
    }
    Ok(parse_jsonl(&text)?)
}
