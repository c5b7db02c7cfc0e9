//! Run configuration and its validation.
//!
//! A [`RawConfig`] mirrors the JSON config file: every field optional,
//! unknown keys rejected. [`validate_config`] fills defaults and checks the
//! invariants, producing an immutable [`EngineConfig`].

use alloc::format;
use alloc::string::{String, ToString};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_AGENT_COUNT: usize = 6;
pub const DEFAULT_REFERENCE_COUNT: usize = 3;
pub const DEFAULT_EXPLORATION_RATE: f64 = 0.3;
pub const DEFAULT_ROUND_COUNT: usize = 3;
pub const DEFAULT_INITIAL_TEMPERATURE: f64 = 0.25;
pub const DEFAULT_REFINEMENT_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_REFINEMENT_FREQUENCY_PENALTY: f64 = 0.5;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 2048;
pub const DEFAULT_MAX_RETRIES: u32 = 2;
pub const DEFAULT_RETRY_BASE_DELAY_MS: u64 = 500;
pub const DEFAULT_REQUEST_TIMEOUT_SECS: u64 = 300;
pub const DEFAULT_EMBEDDING_MODEL: &str = "text-embedding-3-small";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMode {
    #[default]
    External,
    #[serde(alias = "in-group", alias = "in_group")]
    InGroup,
}

/// How a single agent is picked when the team must nominate one
/// (in-group synthesis, debate baselines).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LeaderSelection {
    /// Agent whose output has the least mean cognitive distance to its peers.
    #[default]
    Centroid,
    /// Uniformly random agent from a stream derived from the run seed.
    Random,
}

/// Where chat completions or embeddings come from.
///
/// `OpenAi` fields left unset are resolved from the environment when the
/// backend is constructed (`COTHINKER_API_BASE`, `COTHINKER_MODEL`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendDescriptor {
    Mock,
    #[serde(rename = "openai")]
    OpenAi {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        api_base: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<String>,
    },
}

impl BackendDescriptor {
    pub fn is_mock(&self) -> bool {
        matches!(self, BackendDescriptor::Mock)
    }
}

/// Config record as read from disk or the command line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploration_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_temperature: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refinement_frequency_penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesizer_mode: Option<SynthMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leader_selection: Option<LeaderSelection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chat_backend: Option<BackendDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding_backend: Option<BackendDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_retries: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retry_base_delay_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_timeout_secs: Option<u64>,
}

/// Validated, immutable run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    /// Number of agents, `M`.
    pub agent_count: usize,
    /// Peer outputs each agent reads per round, `N`.
    pub reference_count: usize,
    /// Per-edge rewiring probability, `beta`.
    pub exploration_rate: f64,
    /// Generation rounds including the initial one, `T`.
    pub round_count: usize,
    pub initial_temperature: f64,
    pub refinement_temperature: f64,
    pub refinement_frequency_penalty: f64,
    pub synthesizer_mode: SynthMode,
    pub leader_selection: LeaderSelection,
    pub rng_seed: u64,
    pub max_output_tokens: u32,
    pub chat_backend: BackendDescriptor,
    pub embedding_backend: BackendDescriptor,
    pub max_retries: u32,
    pub retry_base_delay_ms: u64,
    pub request_timeout_secs: u64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        validate_config(&RawConfig::default()).expect("defaults are valid")
    }
}

impl EngineConfig {
    /// Default config with both backends switched to the offline mock.
    pub fn mock() -> Self {
        EngineConfig { chat_backend: BackendDescriptor::Mock, embedding_backend: BackendDescriptor::Mock, ..Default::default() }
    }
}

impl From<&EngineConfig> for RawConfig {
    fn from(c: &EngineConfig) -> Self {
        RawConfig {
            agent_count: Some(c.agent_count),
            reference_count: Some(c.reference_count),
            exploration_rate: Some(c.exploration_rate),
            round_count: Some(c.round_count),
            initial_temperature: Some(c.initial_temperature),
            refinement_temperature: Some(c.refinement_temperature),
            refinement_frequency_penalty: Some(c.refinement_frequency_penalty),
            synthesizer_mode: Some(c.synthesizer_mode),
            leader_selection: Some(c.leader_selection),
            rng_seed: Some(c.rng_seed),
            max_output_tokens: Some(c.max_output_tokens),
            chat_backend: Some(c.chat_backend.clone()),
            embedding_backend: Some(c.embedding_backend.clone()),
            max_retries: Some(c.max_retries),
            retry_base_delay_ms: Some(c.retry_base_delay_ms),
            request_timeout_secs: Some(c.request_timeout_secs),
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> Error {
    Error::InvalidConfig { field, message: message.into() }
}

fn non_negative(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be a finite value >= 0, got {v}")))
    }
}

pub fn validate_config(raw: &RawConfig) -> Result<EngineConfig> {
    let agent_count = raw.agent_count.unwrap_or(DEFAULT_AGENT_COUNT);
    if agent_count < 2 {
        return Err(invalid("agent_count", format!("must be at least 2, got {agent_count}")));
    }
    let reference_count = raw.reference_count.unwrap_or(DEFAULT_REFERENCE_COUNT);
    if reference_count == 0 {
        return Err(invalid("reference_count", "must be positive"));
    }
    if reference_count > agent_count - 1 {
        return Err(invalid(
            "reference_count",
            format!("must be at most agent_count - 1 = {}, got {reference_count}", agent_count - 1),
        ));
    }
    let exploration_rate = raw.exploration_rate.unwrap_or(DEFAULT_EXPLORATION_RATE);
    if !(0.0..=1.0).contains(&exploration_rate) {
        return Err(invalid("exploration_rate", format!("must lie in [0, 1], got {exploration_rate}")));
    }
    let round_count = raw.round_count.unwrap_or(DEFAULT_ROUND_COUNT);
    if round_count == 0 {
        return Err(invalid("round_count", "must be at least 1"));
    }
    let initial_temperature =
        non_negative("initial_temperature", raw.initial_temperature.unwrap_or(DEFAULT_INITIAL_TEMPERATURE))?;
    let refinement_temperature =
        non_negative("refinement_temperature", raw.refinement_temperature.unwrap_or(DEFAULT_REFINEMENT_TEMPERATURE))?;
    let refinement_frequency_penalty =
        raw.refinement_frequency_penalty.unwrap_or(DEFAULT_REFINEMENT_FREQUENCY_PENALTY);
    if !refinement_frequency_penalty.is_finite() {
        return Err(invalid("refinement_frequency_penalty", "must be finite"));
    }
    let max_output_tokens = raw.max_output_tokens.unwrap_or(DEFAULT_MAX_OUTPUT_TOKENS);
    if max_output_tokens == 0 {
        return Err(invalid("max_output_tokens", "must be positive"));
    }
    let chat_backend = raw.chat_backend.clone().unwrap_or(BackendDescriptor::OpenAi { api_base: None, model: None });
    let embedding_backend = match raw.embedding_backend.clone() {
        None => BackendDescriptor::OpenAi { api_base: None, model: Some(DEFAULT_EMBEDDING_MODEL.to_string()) },
        Some(BackendDescriptor::OpenAi { api_base, model: None }) => {
            BackendDescriptor::OpenAi { api_base, model: Some(DEFAULT_EMBEDDING_MODEL.to_string()) }
        }
        Some(other) => other,
    };
    let request_timeout_secs = raw.request_timeout_secs.unwrap_or(DEFAULT_REQUEST_TIMEOUT_SECS);
    if request_timeout_secs == 0 {
        return Err(invalid("request_timeout_secs", "must be positive"));
    }

    Ok(EngineConfig {
        agent_count,
        reference_count,
        exploration_rate,
        round_count,
        initial_temperature,
        refinement_temperature,
        refinement_frequency_penalty,
        synthesizer_mode: raw.synthesizer_mode.unwrap_or_default(),
        leader_selection: raw.leader_selection.unwrap_or_default(),
        rng_seed: raw.rng_seed.unwrap_or(0),
        max_output_tokens,
        chat_backend,
        embedding_backend,
        max_retries: raw.max_retries.unwrap_or(DEFAULT_MAX_RETRIES),
        retry_base_delay_ms: raw.retry_base_delay_ms.unwrap_or(DEFAULT_RETRY_BASE_DELAY_MS),
        request_timeout_secs,
    })
}
