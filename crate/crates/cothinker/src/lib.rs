//! Std companion to `cothinker-core`: OpenAI-compatible HTTP backends,
//! JSONL transcript files, config loading and the `cothinker` CLI.

pub mod cli;
pub mod config_io;
mod error;
pub mod http;
pub mod threaded;
pub mod transcript_io;

pub use cothinker_core;
pub use error::AppError;

use std::time::{SystemTime, UNIX_EPOCH};

use cothinker_core::transcript::Clock;

/// Wall-clock milliseconds since the Unix epoch.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
    }
}
