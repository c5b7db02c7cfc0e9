//! Final consolidation of the last round's outputs and memory.

use alloc::format;
use core::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::display_number;
use crate::config::{EngineConfig, LeaderSelection, SynthMode};
use crate::distance::{distance_matrix, DistanceMatrix};
use crate::error::{Error, Result};
use crate::gateway::{complete, ChatBackend, ChatRequest, RequestTag};
use crate::hash::labeled_seed;
use crate::memory::{check_same_round, TransactiveMemory};
use crate::styles::ThinkingStyle;
use crate::types::{AgentOutput, FinalAnswer, FinalSource, Task};

pub const SYNTH_INSTRUCTION: &str = "Based on all this information, please generate a comprehensive, high-quality, \
                                     and coherent final solution to the original task.";

/// Who writes the final answer.
#[derive(Debug, Clone, Copy)]
pub enum Synthesizer<'a> {
    External,
    InGroup(&'a ThinkingStyle),
}

pub fn build_synth_prompt(
    task: &Task,
    outputs: &[AgentOutput],
    memory: &TransactiveMemory,
    who: Synthesizer<'_>,
    cfg: &EngineConfig,
) -> Result<ChatRequest> {
    check_same_round(outputs)?;
    let mut text = alloc::string::String::new();
    if let Synthesizer::InGroup(style) = who {
        let _ = write!(
            text,
            "You are Agent {}, a member of the team below, now asked to write the team's final answer. \
             Your assigned thinking style for this task is: \"{}\". Draw on your own understanding, your peers' \
             final outputs and the collective memory.\n\n",
            display_number(style.agent_id),
            style.adapted_text
        );
    }
    let _ = writeln!(text, "Original Task: \"{}\"", task.description);
    let _ = writeln!(text, "After collaborative thinking, the final individual perspectives from M={} agents are:", outputs.len());
    for o in outputs {
        let _ = writeln!(text, "Agent {}: \"{}\"", display_number(o.agent_id), o.text);
    }
    let _ = writeln!(text, "The final collective understanding synthesized during their collaboration is:");
    let _ = writeln!(text, "\"{}\"", memory.raw_text);
    text.push_str(SYNTH_INSTRUCTION);
    Ok(ChatRequest {
        tag: RequestTag::Synthesize,
        system_text: None,
        user_text: text,
        temperature: cfg.refinement_temperature,
        frequency_penalty: cfg.refinement_frequency_penalty,
        max_tokens: cfg.max_output_tokens,
    })
}

/// Picks one agent: the distance centroid (lowest id on ties) or a uniform
/// draw from a stream keyed by `label`. Returns a row index of `dm`.
pub fn choose_leader(dm: &DistanceMatrix, selection: LeaderSelection, seed: u64, label: &str) -> usize {
    match selection {
        LeaderSelection::Centroid => dm.centroid(),
        LeaderSelection::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(labeled_seed(seed, label));
            rng.random_range(0..dm.size().max(1))
        }
    }
}

pub(crate) fn synth_request(
    task: &Task,
    outputs: &[AgentOutput],
    memory: &TransactiveMemory,
    styles: &[ThinkingStyle],
    cfg: &EngineConfig,
) -> Result<(ChatRequest, Option<usize>)> {
    match cfg.synthesizer_mode {
        SynthMode::External => Ok((build_synth_prompt(task, outputs, memory, Synthesizer::External, cfg)?, None)),
        SynthMode::InGroup => {
            let idx = choose_leader(&distance_matrix(outputs)?, cfg.leader_selection, cfg.rng_seed, "synthesizer");
            let agent_id = outputs[idx].agent_id;
            let style = styles
                .iter()
                .find(|s| s.agent_id == agent_id)
                .ok_or(Error::MalformedTranscript(format!("no style for agent {agent_id}")))?;
            Ok((build_synth_prompt(task, outputs, memory, Synthesizer::InGroup(style), cfg)?, Some(agent_id)))
        }
    }
}

/// One `Synthesize` completion in the configured mode.
pub fn synthesize(
    task: &Task,
    outputs: &[AgentOutput],
    memory: &TransactiveMemory,
    styles: &[ThinkingStyle],
    backend: &dyn ChatBackend,
    cfg: &EngineConfig,
) -> Result<FinalAnswer> {
    let (req, agent_id) = synth_request(task, outputs, memory, styles, cfg)?;
    let c = complete(backend, &req)?;
    Ok(FinalAnswer {
        text: c.text,
        source_mode: if agent_id.is_some() { FinalSource::InGroup } else { FinalSource::External },
        agent_id,
    })
}
