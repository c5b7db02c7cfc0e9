//! Agent prompts for the initial draft and for each refinement round.

use alloc::format;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::gateway::{complete, embed, ChatBackend, ChatRequest, Completion, Embedder, RequestTag};
use crate::memory::{render_memory, TransactiveMemory};
use crate::styles::ThinkingStyle;
use crate::types::{AgentOutput, Task};

pub const REFINE_INSTRUCTION: &str = "Based on all the above, and keeping your thinking style in mind, provide your \
                                      refined thoughts/contribution for the current round:";

/// Prompts show agents 1-based; ids elsewhere are 0-based.
pub fn display_number(agent_id: usize) -> usize {
    agent_id + 1
}

pub fn build_initial_prompt(task: &Task, style: &ThinkingStyle, cfg: &EngineConfig) -> ChatRequest {
    let user_text = format!(
        "You are Agent {}. Your assigned thinking style for this task is: \"{}\".\n\
         The overall task is: \"{}\".\n\n\
         Keeping your assigned thinking style in mind, please provide your thoughts/solution:",
        display_number(style.agent_id),
        style.adapted_text,
        task.description
    );
    ChatRequest {
        tag: RequestTag::InitialGen,
        system_text: None,
        user_text,
        temperature: cfg.initial_temperature,
        frequency_penalty: 0.0,
        max_tokens: cfg.max_output_tokens,
    }
}

/// Wraps a completion as an output of `agent_id` at `round`, embedding it.
pub fn output_from_completion(
    agent_id: usize,
    round: usize,
    completion: &Completion,
    embedder: &dyn Embedder,
) -> Result<AgentOutput> {
    Ok(AgentOutput { agent_id, round, text: completion.text.clone(), embedding: embed(embedder, &completion.text)? })
}

pub fn initial_generation(
    task: &Task,
    style: &ThinkingStyle,
    backend: &dyn ChatBackend,
    embedder: &dyn Embedder,
    cfg: &EngineConfig,
) -> Result<AgentOutput> {
    let c = complete(backend, &build_initial_prompt(task, style, cfg))?;
    output_from_completion(style.agent_id, 0, &c, embedder)
}

/// Prompt layout, in order: style, task, rendered memory, own previous
/// output, one block per reference (slot order), instruction.
pub fn assemble_refinement_prompt(
    task: &Task,
    style: &ThinkingStyle,
    memory: &TransactiveMemory,
    own_prev: &AgentOutput,
    refs: &[&AgentOutput],
    cfg: &EngineConfig,
) -> Result<ChatRequest> {
    if own_prev.agent_id != style.agent_id {
        return Err(Error::ForeignOutput { expected: style.agent_id, actual: own_prev.agent_id });
    }
    if refs.len() != cfg.reference_count {
        return Err(Error::RefCountMismatch { expected: cfg.reference_count, actual: refs.len() });
    }
    if refs.iter().any(|r| r.agent_id == style.agent_id) {
        return Err(Error::SelfReference(style.agent_id));
    }

    let mut text = format!(
        "You are Agent {}.\n\
         [Agent's assigned thinking style: {}]\n\
         [Overall Task: {}]\n\n\
         {}\n\n\
         Your Previous Output:\n\"{}\"\n\n\
         Reference Outputs from Peers:\n",
        display_number(style.agent_id),
        style.adapted_text,
        task.description,
        render_memory(memory),
        own_prev.text
    );
    for (slot, r) in refs.iter().enumerate() {
        let _ = writeln!(text, "Reference {} (from Agent {}): \"{}\"", slot + 1, display_number(r.agent_id), r.text);
    }
    text.push('\n');
    text.push_str(REFINE_INSTRUCTION);

    Ok(ChatRequest {
        tag: RequestTag::Refine,
        system_text: None,
        user_text: text,
        temperature: cfg.refinement_temperature,
        frequency_penalty: cfg.refinement_frequency_penalty,
        max_tokens: cfg.max_output_tokens,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn refine(
    task: &Task,
    style: &ThinkingStyle,
    memory: &TransactiveMemory,
    own_prev: &AgentOutput,
    refs: &[&AgentOutput],
    backend: &dyn ChatBackend,
    embedder: &dyn Embedder,
    cfg: &EngineConfig,
) -> Result<AgentOutput> {
    let req = assemble_refinement_prompt(task, style, memory, own_prev, refs, cfg)?;
    let c = complete(backend, &req)?;
    output_from_completion(style.agent_id, own_prev.round + 1, &c, embedder)
}

/// Count of `Reference k (from Agent j)` blocks in a refinement prompt.
pub fn count_reference_blocks(prompt: &str) -> usize {
    prompt
        .lines()
        .filter(|l| {
            l.strip_prefix("Reference ")
                .and_then(|rest| rest.split_once(' '))
                .is_some_and(|(n, tail)| n.parse::<usize>().is_ok() && tail.starts_with("(from Agent "))
        })
        .count()
}

pub(crate) fn collect_refs<'a>(outputs: &'a [AgentOutput], ids: &[usize]) -> Vec<&'a AgentOutput> {
    ids.iter().map(|&id| &outputs[id]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{MockChat, MockEmbedder};
    use crate::memory::{parse_tms_response, SUMMARY_HEADING};
    use crate::styles::{orchestrate_styles, StyleInventory};

    struct Fixture {
        task: Task,
        styles: Vec<ThinkingStyle>,
        outputs: Vec<AgentOutput>,
        memory: TransactiveMemory,
        cfg: EngineConfig,
    }

    fn fixture() -> Fixture {
        let cfg = EngineConfig::mock();
        let task = Task::new("t", "Design a fair tournament schedule").unwrap();
        let backend = MockChat::new(3);
        let styles = orchestrate_styles(&task, &StyleInventory::default(), 6, &backend, &cfg).unwrap();
        let outputs: Vec<AgentOutput> =
            styles.iter().map(|s| initial_generation(&task, s, &backend, &MockEmbedder, &cfg).unwrap()).collect();
        let memory = parse_tms_response("EXPERTISE DIRECTORY: a\nSHARED KNOWLEDGE: b\nUNRESOLVED ISSUES: c").unwrap();
        Fixture { task, styles, outputs, memory, cfg }
    }

    #[test]
    fn initial_output_postconditions() {
        let f = fixture();
        let o = &f.outputs[0];
        assert!(!o.text.is_empty());
        assert_eq!(o.round, 0);
        let norm: f64 = o.embedding.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-6);
        assert_eq!(build_initial_prompt(&f.task, &f.styles[0], &f.cfg).temperature, 0.25);
        assert_ne!(f.outputs[0].text, f.outputs[1].text);
    }

    #[test]
    fn refinement_prompt_layout() {
        let f = fixture();
        let refs = collect_refs(&f.outputs, &[2, 4, 1]);
        let req = assemble_refinement_prompt(&f.task, &f.styles[0], &f.memory, &f.outputs[0], &refs, &f.cfg).unwrap();
        let p = &req.user_text;
        assert_eq!(count_reference_blocks(p), 3);
        let order = [
            p.find(&f.styles[0].adapted_text).unwrap(),
            p.find(&f.task.description).unwrap(),
            p.find(SUMMARY_HEADING).unwrap(),
            p.find(&f.outputs[0].text).unwrap(),
            p.find(&f.outputs[2].text).unwrap(),
            p.find(&f.outputs[4].text).unwrap(),
            p.find(&f.outputs[1].text).unwrap(),
            p.find(REFINE_INSTRUCTION).unwrap(),
        ];
        assert!(order.windows(2).all(|w| w[0] < w[1]), "{order:?}");
        assert!(!p.contains(&f.outputs[3].text) && !p.contains(&f.outputs[5].text));
        assert_eq!(req.temperature, 0.0);
        assert_eq!(req.frequency_penalty, 0.5);
    }

    #[test]
    fn self_reference_and_count_checked() {
        let f = fixture();
        let refs = collect_refs(&f.outputs, &[0, 1, 2]);
        assert_eq!(
            assemble_refinement_prompt(&f.task, &f.styles[0], &f.memory, &f.outputs[0], &refs, &f.cfg),
            Err(Error::SelfReference(0))
        );
        let refs = collect_refs(&f.outputs, &[1, 2]);
        assert_eq!(
            assemble_refinement_prompt(&f.task, &f.styles[0], &f.memory, &f.outputs[0], &refs, &f.cfg),
            Err(Error::RefCountMismatch { expected: 3, actual: 2 })
        );
    }

    #[test]
    fn refine_advances_round_deterministically() {
        let f = fixture();
        let refs = collect_refs(&f.outputs, &[1, 2, 3]);
        let run = || refine(&f.task, &f.styles[0], &f.memory, &f.outputs[0], &refs, &MockChat::new(3), &MockEmbedder, &f.cfg).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a, b);
        assert_eq!(a.round, 1);
    }
}
