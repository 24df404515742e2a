use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};

use super::http::field;
use super::{BackendError, CacheKey, DecodingParams, DiskCache, FixtureSet, HttpClient, TemplateId};

/// A text-generation service answering single-turn prompts.
pub trait JudgeBackend: Send + Sync {
    /// Stable identifier; part of every cache key.
    fn id(&self) -> &str;
    fn generate(&self, prompt: &str, params: &DecodingParams) -> Result<String, BackendError>;
}

/// Cache-fronted generation: a hit never reaches the backend; a miss calls it
/// once and stores the reply (first writer wins).
pub fn judge_generate(
    backend: &dyn JudgeBackend,
    template: Option<TemplateId>,
    prompt: &str,
    params: &DecodingParams,
    cache: Option<&DiskCache>,
) -> Result<String, BackendError> {
    let key = CacheKey::for_judge(template, prompt, backend.id(), params);
    if let Some(cache) = cache {
        if let Some(v) = cache.get(&key)? {
            return as_text(v);
        }
    }
    let text = backend.generate(prompt, params)?;
    match cache {
        Some(cache) => {
            let meta = json!({
                "template": template.map(|t| t.as_str()),
                "backend": backend.id(),
                "params": params,
                "prompt": prompt,
            });
            as_text(cache.put(&key, meta, Value::String(text))?)
        }
        None => Ok(text),
    }
}

fn as_text(v: Value) -> Result<String, BackendError> {
    match v {
        Value::String(s) => Ok(s),
        other => Err(BackendError::Cache(format!("cached judge reply is not text: {other}"))),
    }
}

/// A judge backend plus its cache and decoding settings.
pub struct Judge {
    backend: Arc<dyn JudgeBackend>,
    cache: Option<DiskCache>,
    params: DecodingParams,
    max_tokens: BTreeMap<TemplateId, u32>,
    memo: Mutex<HashMap<CacheKey, String>>,
}

impl Judge {
    pub fn new(backend: Arc<dyn JudgeBackend>) -> Self {
        Self {
            backend,
            cache: None,
            params: DecodingParams::default(),
            max_tokens: BTreeMap::new(),
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_params(mut self, params: DecodingParams) -> Self {
        self.params = params;
        self
    }

    /// Per-template generation budget override.
    pub fn with_max_tokens(mut self, template: TemplateId, max_tokens: u32) -> Self {
        self.max_tokens.insert(template, max_tokens);
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    pub fn params_for(&self, template: TemplateId) -> DecodingParams {
        DecodingParams {
            max_tokens: self
                .max_tokens
                .get(&template)
                .copied()
                .unwrap_or(self.params.max_tokens),
            ..self.params
        }
    }

    pub fn generate(&self, template: TemplateId, prompt: &str) -> Result<String, BackendError> {
        let params = self.params_for(template);
        let key = CacheKey::for_judge(Some(template), prompt, self.backend.id(), &params);
        if let Some(hit) = self.memo.lock().unwrap().get(&key) {
            return Ok(hit.clone());
        }
        let text = judge_generate(
            self.backend.as_ref(),
            Some(template),
            prompt,
            &params,
            self.cache.as_ref(),
        )?;
        self.memo.lock().unwrap().entry(key).or_insert_with(|| text.clone());
        Ok(text)
    }
}

/// `POST url {prompt, temperature, seed, max_tokens}` → `{text}`.
pub struct HttpJudge {
    id: String,
    url: String,
    client: HttpClient,
}

impl HttpJudge {
    pub fn new(id: impl Into<String>, url: impl Into<String>, client: HttpClient) -> Self {
        Self {
            id: id.into(),
            url: url.into(),
            client,
        }
    }
}

impl JudgeBackend for HttpJudge {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, params: &DecodingParams) -> Result<String, BackendError> {
        let body = json!({
            "prompt": prompt,
            "temperature": params.temperature,
            "seed": params.seed,
            "max_tokens": params.max_tokens,
        });
        let reply = self.client.post_json(&self.url, &body)?;
        field(&reply, "text")?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("\"text\" is not a string".into()))
    }
}

/// Replays canned replies keyed by the prompt's SHA-256.
pub struct FixtureJudge {
    id: String,
    fixtures: FixtureSet,
}

impl FixtureJudge {
    pub fn new(id: impl Into<String>, fixtures: FixtureSet) -> Self {
        Self {
            id: id.into(),
            fixtures,
        }
    }
}

impl JudgeBackend for FixtureJudge {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, _: &DecodingParams) -> Result<String, BackendError> {
        self.fixtures
            .lookup(prompt)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::Protocol("fixture response is not text".into()))
    }
}

type ScriptFn = dyn Fn(&str) -> Result<String, BackendError> + Send + Sync;

/// Scripted judge driven by a closure over the prompt.
pub struct FnJudge {
    id: String,
    f: Box<ScriptFn>,
}

impl FnJudge {
    pub fn new(
        id: impl Into<String>,
        f: impl Fn(&str) -> Result<String, BackendError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            f: Box::new(f),
        }
    }
}

impl JudgeBackend for FnJudge {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, prompt: &str, _: &DecodingParams) -> Result<String, BackendError> {
        (self.f)(prompt)
    }
}
