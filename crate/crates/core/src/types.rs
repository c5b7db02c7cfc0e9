use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use crate::distance::Embedding;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub id: String,
    pub description: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl Task {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Result<Self> {
        let task = Task { id: id.into(), description: description.into(), metadata: BTreeMap::new() };
        task.validate()?;
        Ok(task)
    }

    pub fn validate(&self) -> Result<()> {
        if self.description.trim().is_empty() {
            return Err(Error::InvalidTask("description is empty"));
        }
        Ok(())
    }
}

/// One agent's text for one round, with its embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentOutput {
    pub agent_id: usize,
    pub round: usize,
    pub text: String,
    pub embedding: Embedding,
}

/// Where the final answer came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalSource {
    /// Dedicated synthesizer call outside the team.
    External,
    /// Synthesizer call made in the voice of one team member.
    InGroup,
    /// Single-agent baseline output.
    SingleAgent,
    /// Output of the agent nominated at the end of a debate baseline.
    Debate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub text: String,
    pub source_mode: FinalSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_id: Option<usize>,
}
