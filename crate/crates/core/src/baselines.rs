//! Comparison strategies: single-agent prompting (IO, CoT, Self-Refine) and
//! multi-agent debate (MAD, DMAD). They share the gateway, the transcript
//! format and the temperature settings of the main engine.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::agent::display_number;
use crate::config::EngineConfig;
use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::gateway::{complete, complete_all, embed_all, ChatBackend, ChatRequest, Embedder, RequestTag};
use crate::synth::choose_leader;
use crate::transcript::{EventType, Recorder, Strategy, TranscriptRecord};
use crate::types::{FinalAnswer, FinalSource, Task};

pub const ANSWER_FOOTER: &str = "\n\nEnd your response with your final answer on its own line, prefixed by \"Final Answer:\".";
pub const STEP_BY_STEP: &str = "Let's think step by step.";

/// Initial prompting strategies handed out by DMAD, agent `i` getting
/// entry `i % 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialStrategy {
    Direct,
    ChainOfThought,
    StepBack,
}

impl InitialStrategy {
    pub const ALL: [InitialStrategy; 3] =
        [InitialStrategy::Direct, InitialStrategy::ChainOfThought, InitialStrategy::StepBack];

    pub fn for_agent(agent_id: usize) -> Self {
        Self::ALL[agent_id % 3]
    }

    pub fn name(self) -> &'static str {
        match self {
            InitialStrategy::Direct => "direct",
            InitialStrategy::ChainOfThought => "chain-of-thought",
            InitialStrategy::StepBack => "step-back",
        }
    }

    fn instruction(self) -> &'static str {
        match self {
            InitialStrategy::Direct => "Answer the task directly.",
            InitialStrategy::ChainOfThought => STEP_BY_STEP,
            InitialStrategy::StepBack => {
                "Before answering, take a step back: state the general principles or concepts this task depends \
                 on, then use them to solve it."
            }
        }
    }
}

fn request(user_text: String, temperature: f64, frequency_penalty: f64, cfg: &EngineConfig) -> ChatRequest {
    ChatRequest {
        tag: RequestTag::Baseline,
        system_text: None,
        user_text,
        temperature,
        frequency_penalty,
        max_tokens: cfg.max_output_tokens,
    }
}

fn initial(user_text: String, cfg: &EngineConfig) -> ChatRequest {
    request(user_text, cfg.initial_temperature, 0.0, cfg)
}

fn later(user_text: String, cfg: &EngineConfig) -> ChatRequest {
    request(user_text, cfg.refinement_temperature, cfg.refinement_frequency_penalty, cfg)
}

pub fn io_prompt(task: &Task, cfg: &EngineConfig) -> ChatRequest {
    initial(format!("{}{ANSWER_FOOTER}", task.description), cfg)
}

pub fn cot_prompt(task: &Task, cfg: &EngineConfig) -> ChatRequest {
    initial(format!("{}\n\n{STEP_BY_STEP}{ANSWER_FOOTER}", task.description), cfg)
}

/// Single-agent strategies keep the initial temperature on every call.
pub fn critique_prompt(task: &Task, previous: &str, cfg: &EngineConfig) -> ChatRequest {
    initial(
        format!(
            "Task: \"{}\"\n\nYour previous answer:\n\"{previous}\"\n\n\
             Critique your previous answer. List its errors, omissions and weaknesses with respect to the task. \
             Do not write a new answer yet.",
            task.description
        ),
        cfg,
    )
}

pub fn revise_prompt(task: &Task, previous: &str, critique: &str, cfg: &EngineConfig) -> ChatRequest {
    initial(
        format!(
            "Task: \"{}\"\n\nYour previous answer:\n\"{previous}\"\n\nCritique of that answer:\n\"{critique}\"\n\n\
             Using this critique, write an improved answer to the task.{ANSWER_FOOTER}",
            task.description
        ),
        cfg,
    )
}

pub fn debate_initial_prompt(task: &Task, agent_id: usize, m: usize, strategy: Option<InitialStrategy>, cfg: &EngineConfig) -> ChatRequest {
    let mut text = format!("You are Agent {} of {m} in a debate.\n\nTask: \"{}\"", display_number(agent_id), task.description);
    if let Some(s) = strategy {
        let _ = write!(text, "\n\n{}", s.instruction());
    }
    text.push_str(ANSWER_FOOTER);
    initial(text, cfg)
}

/// Refinement prompt with one block per other agent, in id order.
pub fn debate_refine_prompt(task: &Task, agent_id: usize, previous: &[String], cfg: &EngineConfig) -> ChatRequest {
    let m = previous.len();
    let mut text = format!(
        "You are Agent {} of {m} in a debate.\n\nTask: \"{}\"\n\nYour previous solution:\n\"{}\"\n\n\
         Solutions from the other agents:\n",
        display_number(agent_id),
        task.description,
        previous[agent_id]
    );
    for (j, s) in previous.iter().enumerate().filter(|(j, _)| *j != agent_id) {
        let _ = writeln!(text, "Solution from Agent {}: \"{s}\"", display_number(j));
    }
    text.push_str(
        "\nUsing the other agents' solutions as additional information, examine your own solution and give an \
         updated answer.",
    );
    text.push_str(ANSWER_FOOTER);
    later(text, cfg)
}

/// Count of `Solution from Agent k` blocks in a debate prompt.
pub fn count_solution_blocks(prompt: &str) -> usize {
    prompt.lines().filter(|l| l.starts_with("Solution from Agent ")).count()
}

fn record(
    rec: &mut Recorder<'_>,
    phase: &str,
    round: usize,
    agent_id: Option<usize>,
    req: &ChatRequest,
    c: &crate::gateway::Completion,
    embedding: Option<Vec<f64>>,
    started: u64,
) -> Result<()> {
    let mut r = TranscriptRecord::new(EventType::Baseline).with_completion(req, c);
    r.phase = Some(phase.into());
    r.round = Some(round);
    r.agent_id = agent_id;
    r.embedding = embedding;
    rec.push(r, started)
}

fn single(rec: &mut Recorder<'_>, chat: &dyn ChatBackend, phase: &str, round: usize, req: &ChatRequest) -> Result<String> {
    let t0 = rec.now();
    let c = complete(chat, req)?;
    record(rec, phase, round, None, req, &c, None, t0)?;
    Ok(c.text)
}

pub(crate) fn run(
    strategy: Strategy,
    chat: &dyn ChatBackend,
    embedder: &dyn Embedder,
    task: &Task,
    cfg: &EngineConfig,
    rec: &mut Recorder<'_>,
) -> Result<FinalAnswer> {
    let single_agent = |text: String| FinalAnswer { text, source_mode: FinalSource::SingleAgent, agent_id: None };
    match strategy {
        Strategy::Io => Ok(single_agent(single(rec, chat, "initial", 0, &io_prompt(task, cfg))?)),
        Strategy::Cot => Ok(single_agent(single(rec, chat, "initial", 0, &cot_prompt(task, cfg))?)),
        Strategy::SelfRefine => {
            let mut answer = single(rec, chat, "initial", 0, &io_prompt(task, cfg))?;
            for round in 1..cfg.round_count {
                let critique = single(rec, chat, "critique", round, &critique_prompt(task, &answer, cfg))?;
                answer = single(rec, chat, "revise", round, &revise_prompt(task, &answer, &critique, cfg))?;
            }
            Ok(single_agent(answer))
        }
        Strategy::Mad => debate(chat, embedder, task, cfg, rec, false),
        Strategy::Dmad => debate(chat, embedder, task, cfg, rec, true),
        Strategy::CoThinker => Err(Error::InvalidRequest("the full engine is not a baseline")),
    }
}

fn debate_round(
    chat: &dyn ChatBackend,
    embedder: &dyn Embedder,
    rec: &mut Recorder<'_>,
    requests: &[ChatRequest],
    phases: &[String],
    round: usize,
) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let t0 = rec.now();
    let completions = complete_all(chat, requests)?;
    let texts: Vec<&str> = completions.iter().map(|c| c.text.as_str()).collect();
    let embeddings = embed_all(embedder, &texts)?;
    let mut vectors = Vec::with_capacity(requests.len());
    for (i, ((req, c), e)) in requests.iter().zip(&completions).zip(embeddings).enumerate() {
        let v = e.values().to_vec();
        record(rec, &phases[i], round, Some(i), req, c, Some(v.clone()), t0)?;
        vectors.push(v);
    }
    Ok((completions.into_iter().map(|c| c.text).collect(), vectors))
}

fn debate(
    chat: &dyn ChatBackend,
    embedder: &dyn Embedder,
    task: &Task,
    cfg: &EngineConfig,
    rec: &mut Recorder<'_>,
    diverse: bool,
) -> Result<FinalAnswer> {
    let m = cfg.agent_count;
    let strategies: Vec<Option<InitialStrategy>> =
        (0..m).map(|i| diverse.then(|| InitialStrategy::for_agent(i))).collect();
    let requests: Vec<ChatRequest> =
        (0..m).map(|i| debate_initial_prompt(task, i, m, strategies[i], cfg)).collect();
    let phases: Vec<String> = strategies
        .iter()
        .map(|s| match s {
            Some(s) => format!("initial:{}", s.name()),
            None => "initial".into(),
        })
        .collect();
    let (mut texts, mut vectors) = debate_round(chat, embedder, rec, &requests, &phases, 0)?;

    let debate_phases: Vec<String> = (0..m).map(|_| "debate".into()).collect();
    for round in 1..cfg.round_count {
        let requests: Vec<ChatRequest> = (0..m).map(|i| debate_refine_prompt(task, i, &texts, cfg)).collect();
        (texts, vectors) = debate_round(chat, embedder, rec, &requests, &debate_phases, round)?;
    }

    let embeddings = vectors
        .into_iter()
        .map(crate::distance::Embedding::try_from)
        .collect::<Result<Vec<_>>>()?;
    let leader = choose_leader(&DistanceMatrix::from_embeddings(&embeddings)?, cfg.leader_selection, cfg.rng_seed, "debate");
    Ok(FinalAnswer { text: texts.swap_remove(leader), source_mode: FinalSource::Debate, agent_id: Some(leader) })
}
