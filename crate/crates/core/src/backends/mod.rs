//! Handles for every external evaluator: LLM judges, the embedding model, the
//! difficulty verifier and NER. Each comes in three flavours: a live HTTP
//! client, a fixture-file replay keyed by request digest, and (for tests and
//! offline runs) a scripted closure or a built-in deterministic model.
//!
//! Judge and embedding responses go through a content-addressed on-disk cache
//! so that reruns are byte-identical and free.

mod cache;
mod embed;
mod fixture;
mod http;
mod judge;
mod ner;
mod parse;
mod templates;
mod verifier;

use serde::{Deserialize, Serialize};

pub use cache::{CacheKey, DiskCache};
pub use embed::{cosine, Embedder, EmbeddingBackend, FixtureEmbedder, FnEmbedder, HashingEmbedder, HttpEmbedder};
pub use fixture::{sha256_hex, verifier_request_text, FixtureSet};
pub use http::HttpClient;
pub use judge::{judge_generate, FixtureJudge, FnJudge, HttpJudge, Judge, JudgeBackend};
pub use ner::{FixtureNer, HttpNer};
pub use parse::{
    parse_atomicity, parse_binary_answer, parse_question_list, parse_verdict, Atomicity, ParseError, ThreeWayVerdict,
};
pub use templates::{render_prompt, PromptTemplate, TemplateError, TemplateId};
pub use verifier::{
    difficulty_score, CachedVerifier, DifficultyError, FixtureVerifier, FnVerifier, HttpVerifier, Verifier,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BackendError {
    /// The backend could not be reached (or answered with a server error).
    #[error("transport: {0}")]
    Transport(String),
    /// The backend answered but the body violates the wire contract.
    #[error("protocol: {0}")]
    Protocol(String),
    /// A fixture-mode backend has no canned response for this request.
    #[error("no fixture for digest {0}")]
    FixtureMiss(String),
    #[error("cache: {0}")]
    Cache(String),
}

/// Decoding settings sent with every judge request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub temperature: f64,
    pub seed: u64,
    pub max_tokens: u32,
}

impl Default for DecodingParams {
    fn default() -> Self {
        Self {
            temperature: 0.0,
            seed: 42,
            max_tokens: 4096,
        }
    }
}
