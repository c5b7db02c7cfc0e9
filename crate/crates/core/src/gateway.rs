//! Backend-neutral chat and embedding access, plus the deterministic mock.
//!
//! Concrete HTTP backends live in the `cothinker` crate; everything here is
//! pure. [`ChatBackend::complete_batch`] is the engine's fan-out point: the
//! default runs requests one after another, and implementations may run
//! them concurrently as long as results come back in request order.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distance::Embedding;
use crate::error::{Error, Result};
use crate::hash::fnv1a64;

/// Mock embedding dimension.
pub const MOCK_EMBEDDING_DIM: usize = 32;

const UNIT_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequestTag {
    Orchestrate,
    InitialGen,
    Refine,
    TmsUpdate,
    Synthesize,
    Baseline,
}

impl RequestTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RequestTag::Orchestrate => "Orchestrate",
            RequestTag::InitialGen => "InitialGen",
            RequestTag::Refine => "Refine",
            RequestTag::TmsUpdate => "TmsUpdate",
            RequestTag::Synthesize => "Synthesize",
            RequestTag::Baseline => "Baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChatRequest {
    pub tag: RequestTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_text: Option<String>,
    pub user_text: String,
    pub temperature: f64,
    pub frequency_penalty: f64,
    pub max_tokens: u32,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<()> {
        if self.user_text.is_empty() {
            return Err(Error::InvalidRequest("user_text is empty"));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(Error::InvalidRequest("temperature must be finite and >= 0"));
        }
        if !self.frequency_penalty.is_finite() {
            return Err(Error::InvalidRequest("frequency_penalty must be finite"));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidRequest("max_tokens must be positive"));
        }
        Ok(())
    }

    /// Hashing basis for the mock: tag, system text, user text, temperature
    /// and penalty in decimal, joined by 0x1F.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.user_text.len() + 64);
        out.extend_from_slice(self.tag.as_str().as_bytes());
        out.push(UNIT_SEPARATOR);
        out.extend_from_slice(self.system_text.as_deref().unwrap_or("").as_bytes());
        out.push(UNIT_SEPARATOR);
        out.extend_from_slice(self.user_text.as_bytes());
        out.push(UNIT_SEPARATOR);
        out.extend_from_slice(format!("{}", self.temperature).as_bytes());
        out.push(UNIT_SEPARATOR);
        out.extend_from_slice(format!("{}", self.frequency_penalty).as_bytes());
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub backend_id: String,
    pub latency: Duration,
    pub retry_count: u32,
}

pub trait ChatBackend {
    fn backend_id(&self) -> String;

    fn complete(&self, req: &ChatRequest) -> Result<Completion>;

    /// Results must be in request order.
    fn complete_batch(&self, reqs: &[ChatRequest]) -> Vec<Result<Completion>> {
        reqs.iter().map(|r| self.complete(r)).collect()
    }
}

pub trait Embedder {
    /// Returns the provider's vector; callers normalize via [`Embedding::new`].
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>>;

    fn embed_raw_batch(&self, texts: &[&str]) -> Vec<Result<Vec<f64>>> {
        texts.iter().map(|t| self.embed_raw(t)).collect()
    }
}

impl<T: ChatBackend + ?Sized> ChatBackend for &T {
    fn backend_id(&self) -> String {
        (**self).backend_id()
    }
    fn complete(&self, req: &ChatRequest) -> Result<Completion> {
        (**self).complete(req)
    }
    fn complete_batch(&self, reqs: &[ChatRequest]) -> Vec<Result<Completion>> {
        (**self).complete_batch(reqs)
    }
}

impl<T: Embedder + ?Sized> Embedder for &T {
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>> {
        (**self).embed_raw(text)
    }
    fn embed_raw_batch(&self, texts: &[&str]) -> Vec<Result<Vec<f64>>> {
        (**self).embed_raw_batch(texts)
    }
}

fn check_completion(backend: &dyn ChatBackend, c: Completion) -> Result<Completion> {
    if c.text.is_empty() {
        return Err(Error::MalformedResponse { backend: backend.backend_id(), reason: "empty completion text".into() });
    }
    Ok(c)
}

/// Validates the request, calls the backend, and rejects empty completions.
pub fn complete(backend: &dyn ChatBackend, req: &ChatRequest) -> Result<Completion> {
    req.validate()?;
    let c = backend.complete(req)?;
    check_completion(backend, c)
}

/// Batch form of [`complete`]; the first error (in request order) wins.
pub fn complete_all(backend: &dyn ChatBackend, reqs: &[ChatRequest]) -> Result<Vec<Completion>> {
    for r in reqs {
        r.validate()?;
    }
    let results = backend.complete_batch(reqs);
    if results.len() != reqs.len() {
        return Err(Error::MalformedResponse {
            backend: backend.backend_id(),
            reason: format!("batch returned {} results for {} requests", results.len(), reqs.len()),
        });
    }
    results.into_iter().map(|r| r.and_then(|c| check_completion(backend, c))).collect()
}

// ---------------------------------------------------------------------------
// Mock

const ADJECTIVES: &[&str] = &[
    "systematic", "divergent", "skeptical", "holistic", "granular", "pragmatic", "formal", "exploratory",
    "conservative", "liberal", "hierarchical", "comparative", "critical", "constructive", "abstract", "concrete",
];
const NOUNS: &[&str] = &[
    "constraint", "hypothesis", "invariant", "edge case", "trade-off", "assumption", "structure", "pattern",
    "counterexample", "objective", "dependency", "estimate", "requirement", "principle", "sub-problem", "outcome",
];
const VERBS: &[&str] = &[
    "clarifies", "tests", "decomposes", "ranks", "reconciles", "bounds", "challenges", "extends",
    "verifies", "reframes", "prioritizes", "connects", "simplifies", "quantifies", "isolates", "integrates",
];

struct Phrase<'a> {
    rng: &'a mut ChaCha8Rng,
}

impl Phrase<'_> {
    fn pick(&mut self, words: &'static [&'static str]) -> &'static str {
        words[self.rng.random_range(0..words.len())]
    }

    fn sentence(&mut self) -> String {
        let (a, n, v, n2) = (self.pick(ADJECTIVES), self.pick(NOUNS), self.pick(VERBS), self.pick(NOUNS));
        format!("The {a} {n} {v} the {n2}.")
    }
}

/// Deterministic completion: a per-tag template filled from a stream seeded
/// by `FNV-1a-64(canonical bytes) ^ seed`, stamped with the 16-hex-digit digest.
pub fn mock_complete(req: &ChatRequest, seed: u64) -> Completion {
    let digest = fnv1a64(&req.canonical_bytes());
    let mut rng = ChaCha8Rng::seed_from_u64(digest ^ seed);
    let mut p = Phrase { rng: &mut rng };
    let mut text = String::new();
    match req.tag {
        RequestTag::Orchestrate => {
            let (a, n, v) = (p.pick(ADJECTIVES), p.pick(NOUNS), p.pick(VERBS));
            let _ = write!(text, "Adopt a {a} lens that {v} every {n} of the task before committing (style {digest:016x}).");
        }
        RequestTag::TmsUpdate => {
            let _ = write!(
                text,
                "EXPERTISE DIRECTORY:\n- Contributions {digest:016x}: {}\nSHARED KNOWLEDGE:\n- {}\nUNRESOLVED ISSUES:\n- {}",
                p.sentence(),
                p.sentence(),
                p.sentence()
            );
        }
        tag => {
            let prefix = match tag {
                RequestTag::InitialGen => "Draft",
                RequestTag::Refine => "Revision",
                RequestTag::Synthesize => "Final solution",
                _ => "Answer",
            };
            let _ = write!(text, "{prefix} {digest:016x}: {} {} {}", p.sentence(), p.sentence(), p.sentence());
        }
    }
    Completion { text, backend_id: "mock".to_string(), latency: Duration::ZERO, retry_count: 0 }
}

/// Offline chat backend; a pure function of (request, seed).
#[derive(Debug, Clone, Copy, Default)]
pub struct MockChat {
    pub seed: u64,
}

impl MockChat {
    pub fn new(seed: u64) -> Self {
        MockChat { seed }
    }
}

impl ChatBackend for MockChat {
    fn backend_id(&self) -> String {
        "mock".to_string()
    }

    fn complete(&self, req: &ChatRequest) -> Result<Completion> {
        Ok(mock_complete(req, self.seed))
    }
}

/// Offline embedder: 32 standard-normal draws from a stream seeded by
/// `FNV-1a-64(text)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockEmbedder;

pub fn mock_embed(text: &str) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(fnv1a64(text.as_bytes()));
    (0..MOCK_EMBEDDING_DIM).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

impl Embedder for MockEmbedder {
    fn embed_raw(&self, text: &str) -> Result<Vec<f64>> {
        if text.is_empty() {
            return Err(Error::EmptyText);
        }
        Ok(mock_embed(text))
    }
}

/// Embeds `text` through `provider` and normalizes the result.
pub fn embed(provider: &dyn Embedder, text: &str) -> Result<Embedding> {
    if text.is_empty() {
        return Err(Error::EmptyText);
    }
    Embedding::new(provider.embed_raw(crate::distance::embedding_input(text))?)
}

pub fn embed_all(provider: &dyn Embedder, texts: &[&str]) -> Result<Vec<Embedding>> {
    if texts.iter().any(|t| t.is_empty()) {
        return Err(Error::EmptyText);
    }
    let inputs: Vec<&str> = texts.iter().map(|t| crate::distance::embedding_input(t)).collect();
    provider.embed_raw_batch(&inputs).into_iter().map(|r| r.and_then(Embedding::new)).collect()
}
