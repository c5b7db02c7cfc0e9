//! Thinking-style inventory and the orchestrator that adapts a base
//! profile to the task for each agent.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::EngineConfig;
use crate::error::{Error, Result};
use crate::gateway::{complete_all, ChatBackend, ChatRequest, Completion, RequestTag};
use crate::types::Task;

pub const STYLE_CUE: &str = "Task-Specific Style for an agent:";

const FUNCTIONS: [&str; 3] = ["Legislative", "Executive", "Judicial"];
const FORMS: [&str; 4] = ["Monarchic", "Hierarchic", "Oligarchic", "Anarchic"];
const LEVELS: [&str; 2] = ["Global", "Local"];
const SCOPES: [&str; 2] = ["Internal", "External"];
const LEANINGS: [&str; 2] = ["Liberal", "Conservative"];

/// A base style profile: a label and the sentence handed to the orchestrator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleProfile {
    pub label: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StyleInventory {
    pub profiles: Vec<StyleProfile>,
}

impl StyleInventory {
    pub fn new(profiles: Vec<StyleProfile>) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::EmptyInventory);
        }
        Ok(StyleInventory { profiles })
    }

    /// 24 combinations over the five mental self-government dimensions.
    ///
    /// Profile `k` uses function `k % 3`, form `k % 4`, level `(k / 3) % 2`,
    /// scope `(k / 2) % 2` and leaning `k / 12`, so consecutive agents vary
    /// along several dimensions at once. Function and form fix `k % 12` and the
    /// leaning fixes `k / 12`, so no two entries coincide.
    pub fn sternberg_default() -> Self {
        let profiles = (0..24)
            .map(|k| {
                let (f, fo, l, s, le) =
                    (FUNCTIONS[k % 3], FORMS[k % 4], LEVELS[(k / 3) % 2], SCOPES[(k / 2) % 2], LEANINGS[k / 12]);
                StyleProfile {
                    label: format!("{f}-{fo}-{l}-{s}-{le}"),
                    description: format!(
                        "{f} function with a {fo} form, a {l} level preference, an {s} scope and a {le} leaning"
                    ),
                }
            })
            .collect();
        StyleInventory { profiles }
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// Round-robin assignment.
    pub fn profile_for(&self, agent_id: usize) -> &StyleProfile {
        &self.profiles[agent_id % self.profiles.len()]
    }
}

impl Default for StyleInventory {
    fn default() -> Self {
        Self::sternberg_default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThinkingStyle {
    pub agent_id: usize,
    pub base_profile: StyleProfile,
    pub adapted_text: String,
}

pub fn build_orchestrator_prompt(task: &Task, profile: &StyleProfile, cfg: &EngineConfig) -> ChatRequest {
    build_orchestrator_prompt_variant(task, profile, 0, cfg)
}

/// `variant` counts earlier agents holding the same base profile; when it is
/// non-zero the prompt asks for an adaptation distinct from theirs.
pub fn build_orchestrator_prompt_variant(
    task: &Task,
    profile: &StyleProfile,
    variant: usize,
    cfg: &EngineConfig,
) -> ChatRequest {
    let variant_line = if variant == 0 {
        String::new()
    } else {
        format!(
            "This base profile is already held by {variant} other agent(s); make this adaptation (variant {}) \
             clearly different from theirs.\n",
            variant + 1
        )
    };
    let user_text = format!(
        "Given the primary task: \"{task}\"\n\
         And the base thinking style profile (from Sternberg's Theory of Mental Self-Government): \"{label}: {desc}\"\n\
         \n\
         Generate a concise (1-2 sentences) task-specific adaptation of this thinking style profile that would be \
         most beneficial for an agent contributing to this primary task. The agent should focus its reasoning and \
         output according to this adapted style.\n\
         {variant_line}{STYLE_CUE}",
        task = task.description,
        label = profile.label,
        desc = profile.description,
    );
    ChatRequest {
        tag: RequestTag::Orchestrate,
        system_text: None,
        user_text,
        temperature: cfg.initial_temperature,
        frequency_penalty: 0.0,
        max_tokens: cfg.max_output_tokens,
    }
}

/// Keeps at most `max` sentences. A sentence ends at `.`, `!` or `?`
/// followed by whitespace or the end of the text.
pub fn truncate_sentences(text: &str, max: usize) -> &str {
    let bytes = text.as_bytes();
    let mut seen = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if matches!(b, b'.' | b'!' | b'?') && bytes.get(i + 1).is_none_or(|c| c.is_ascii_whitespace()) {
            seen += 1;
            if seen == max {
                return &text[..=i];
            }
        }
    }
    text
}

/// Turns an orchestrator completion into a style, rejecting blank text.
pub fn style_from_completion(agent_id: usize, profile: &StyleProfile, completion: &Completion) -> Result<ThinkingStyle> {
    let trimmed = completion.text.trim();
    if trimmed.is_empty() {
        return Err(Error::EmptyStyle { agent_id });
    }
    Ok(ThinkingStyle {
        agent_id,
        base_profile: profile.clone(),
        adapted_text: truncate_sentences(trimmed, 3).trim_end().to_string(),
    })
}

/// One orchestrator call per agent; profiles assigned round-robin.
pub fn orchestrate_styles(
    task: &Task,
    inventory: &StyleInventory,
    m: usize,
    backend: &dyn ChatBackend,
    cfg: &EngineConfig,
) -> Result<Vec<ThinkingStyle>> {
    let (_, completions) = orchestrate_calls(task, inventory, m, backend, cfg)?;
    completions.iter().enumerate().map(|(i, c)| style_from_completion(i, inventory.profile_for(i), c)).collect()
}

pub(crate) fn orchestrate_calls(
    task: &Task,
    inventory: &StyleInventory,
    m: usize,
    backend: &dyn ChatBackend,
    cfg: &EngineConfig,
) -> Result<(Vec<ChatRequest>, Vec<Completion>)> {
    if inventory.is_empty() {
        return Err(Error::EmptyInventory);
    }
    task.validate()?;
    let requests: Vec<ChatRequest> =
        (0..m).map(|i| build_orchestrator_prompt_variant(task, inventory.profile_for(i), i / inventory.len(), cfg)).collect();
    let completions = complete_all(backend, &requests)?;
    Ok((requests, completions))
}
