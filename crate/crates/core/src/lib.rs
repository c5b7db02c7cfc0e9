//! Multi-agent LLM collaboration engine.
//!
//! Agents receive task-adapted thinking styles, produce parallel drafts, and
//! refine them over several rounds. Each round, every agent reads a fixed
//! number of peer outputs chosen by a communication moderator (nearest peers
//! by embedding distance, with per-edge random rewiring) together with a
//! shared transactive memory maintained by an auxiliary model call. A final
//! synthesis step consolidates the last round.
//!
//! The crate is `no_std` + `alloc`. Backends, clocks and transcript sinks
//! are traits; the `cothinker` crate supplies HTTP backends, file IO and the
//! CLI. A deterministic [`gateway::MockChat`] / [`gateway::MockEmbedder`]
//! pair makes every run reproducible offline.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agent;
pub mod baselines;
pub mod config;
pub mod distance;
pub mod engine;
mod error;
pub mod gateway;
pub mod hash;
pub mod memory;
pub mod moderator;
pub mod netstats;
pub mod styles;
pub mod synth;
pub mod transcript;
pub mod types;

pub use config::{validate_config, BackendDescriptor, EngineConfig, LeaderSelection, RawConfig, SynthMode};
pub use engine::{replay, Engine};
pub use error::{Error, Result};
pub use gateway::{ChatBackend, ChatRequest, Completion, Embedder, MockChat, MockEmbedder, RequestTag};
pub use types::{AgentOutput, FinalAnswer, Task};
