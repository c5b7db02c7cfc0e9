//! Transactive memory: a team-level record of who knows what, what the team
//! agrees on, and what is still open, rewritten by one model call per round.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::gateway::{complete, ChatBackend, ChatRequest, RequestTag};
use crate::styles::ThinkingStyle;
use crate::types::AgentOutput;

pub const EXPERTISE_HEADER: &str = "EXPERTISE DIRECTORY:";
pub const SHARED_HEADER: &str = "SHARED KNOWLEDGE:";
pub const UNRESOLVED_HEADER: &str = "UNRESOLVED ISSUES:";
pub const FIRST_ROUND_MARKER: &str = "none — first round";
pub const SUMMARY_HEADING: &str = "Collective Summary from Previous Round";

const SECTIONS: [(&str, &str); 3] = [
    ("EXPERTISE DIRECTORY", EXPERTISE_HEADER),
    ("SHARED KNOWLEDGE", SHARED_HEADER),
    ("UNRESOLVED ISSUES", UNRESOLVED_HEADER),
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactiveMemory {
    /// Round of the latest outputs folded into this memory.
    pub round: usize,
    pub expertise_directory: String,
    pub shared_knowledge: String,
    pub unresolved_issues: String,
    pub raw_text: String,
}

pub(crate) fn check_same_round(outputs: &[AgentOutput]) -> Result<usize> {
    let round = outputs.first().map_or(0, |o| o.round);
    if outputs.iter().any(|o| o.round != round) {
        return Err(Error::MixedRounds);
    }
    Ok(round)
}

pub(crate) fn style_of(styles: &[ThinkingStyle], agent_id: usize) -> &str {
    styles.iter().find(|s| s.agent_id == agent_id).map_or("", |s| s.adapted_text.as_str())
}

pub fn build_tms_prompt(
    prev: Option<&TransactiveMemory>,
    outputs: &[AgentOutput],
    styles: &[ThinkingStyle],
    cfg: &EngineConfig,
) -> Result<ChatRequest> {
    let round = check_same_round(outputs)?;
    let mut text = format!(
        "You are the TMS Manager for a team of {} agents. Maintain the team's transactive memory by filling in \
         the TMS Template from the previous memory and the agents' latest outputs.\n\n",
        outputs.len()
    );
    text.push_str("Previous Transactive Memory:\n");
    match prev {
        Some(m) => {
            let _ = writeln!(text, "\"{}\"", m.raw_text);
        }
        None => {
            let _ = writeln!(text, "{FIRST_ROUND_MARKER}");
        }
    }
    let _ = writeln!(text, "\nAgent Outputs from Round {round}:");
    for o in outputs {
        let _ = writeln!(
            text,
            "Agent {} (thinking style: \"{}\"):\n\"{}\"",
            o.agent_id + 1,
            style_of(styles, o.agent_id),
            o.text
        );
    }
    let _ = write!(
        text,
        "\nTMS Template. Respond with exactly these three sections, each starting with its header on its own line:\n\
         {EXPERTISE_HEADER}\n\
         Who knows what: the key contributions of each agent this round, linked to its thinking style.\n\
         {SHARED_HEADER}\n\
         Points of consensus, established facts and partial solutions the team has built.\n\
         {UNRESOLVED_HEADER}\n\
         Discrepancies between agents, open questions, conflicting perspectives and unaddressed aspects of the task."
    );
    Ok(ChatRequest {
        tag: RequestTag::TmsUpdate,
        system_text: None,
        user_text: text,
        temperature: cfg.refinement_temperature,
        frequency_penalty: cfg.refinement_frequency_penalty,
        max_tokens: cfg.max_output_tokens,
    })
}

/// Splits a memory completion on its three headers, matched
/// case-insensitively and by name, so their order does not matter.
pub fn parse_tms_response(text: &str) -> Result<TransactiveMemory> {
    let lower = text.to_ascii_lowercase();
    let mut found: Vec<(usize, usize, usize)> = Vec::with_capacity(3);
    for (idx, (name, header)) in SECTIONS.iter().enumerate() {
        let needle = header.to_ascii_lowercase();
        let start = lower.find(&needle).ok_or(Error::MissingSection(name))?;
        found.push((start, start + needle.len(), idx));
    }
    let mut ordered = found.clone();
    ordered.sort();
    let mut sections: [String; 3] = Default::default();
    for (pos, &(_, body_start, idx)) in ordered.iter().enumerate() {
        let body_end = ordered.get(pos + 1).map_or(text.len(), |next| next.0);
        let body = text.get(body_start..body_end.max(body_start)).unwrap_or("").trim();
        if body.is_empty() {
            return Err(Error::EmptySection(SECTIONS[idx].0));
        }
        sections[idx] = body.to_string();
    }
    let [expertise_directory, shared_knowledge, unresolved_issues] = sections;
    Ok(TransactiveMemory { round: 0, expertise_directory, shared_knowledge, unresolved_issues, raw_text: text.to_string() })
}

/// One `TmsUpdate` completion folding `outputs` into `prev`.
pub fn update_memory(
    prev: Option<&TransactiveMemory>,
    outputs: &[AgentOutput],
    styles: &[ThinkingStyle],
    backend: &dyn ChatBackend,
    cfg: &EngineConfig,
) -> Result<TransactiveMemory> {
    let req = build_tms_prompt(prev, outputs, styles, cfg)?;
    let completion = complete(backend, &req)?;
    let mut memory = parse_tms_response(&completion.text)?;
    memory.round = check_same_round(outputs)?;
    Ok(memory)
}

/// The memory block as inserted into agent prompts.
pub fn render_memory(memory: &TransactiveMemory) -> String {
    format!("{SUMMARY_HEADING} (reflecting the team's shared understanding):\n\"{}\"", memory.raw_text)
}
