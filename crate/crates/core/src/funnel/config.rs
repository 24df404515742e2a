//! Funnel configuration and backend wiring.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::backends::{
    CachedVerifier, DiskCache, Embedder, FixtureEmbedder, FixtureJudge, FixtureNer, FixtureSet, FixtureVerifier,
    HashingEmbedder, HttpClient, HttpEmbedder, HttpJudge, HttpNer, HttpVerifier, Judge, Verifier,
};
use crate::corpus::{CapitalizedSpanNer, EntityCounter, Label, LabelMap};

use super::rules::Thresholds;
use super::select::Selector;
use super::FunnelError;

/// Where one backend's answers come from. Exactly one of `fixtures`, `url`
/// and `builtin` must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixtures: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Backend id used in cache keys; defaults per kind.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    /// Output dimension of the built-in hashing embedder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

/// A resolved [`BackendSpec`].
#[derive(Debug, Clone, PartialEq)]
pub enum BackendSource {
    Fixtures(PathBuf),
    Url(String),
    Builtin(String),
}

impl BackendSpec {
    pub fn fixtures(path: impl Into<PathBuf>) -> Self {
        Self {
            fixtures: Some(path.into()),
            ..Self::default()
        }
    }

    pub fn url(url: impl Into<String>) -> Self {
        Self {
            url: Some(url.into()),
            ..Self::default()
        }
    }

    pub fn builtin(name: impl Into<String>) -> Self {
        Self {
            builtin: Some(name.into()),
            ..Self::default()
        }
    }

    pub fn source(&self, kind: &str) -> Result<BackendSource, FunnelError> {
        match (&self.fixtures, &self.url, &self.builtin) {
            (Some(p), None, None) => Ok(BackendSource::Fixtures(p.clone())),
            (None, Some(u), None) => Ok(BackendSource::Url(u.clone())),
            (None, None, Some(b)) => Ok(BackendSource::Builtin(b.clone())),
            (None, None, None) => Err(FunnelError::Config(format!("backend {kind}: no source configured"))),
            _ => Err(FunnelError::Config(format!(
                "backend {kind}: fixtures, url and builtin are mutually exclusive"
            ))),
        }
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let Some(p) = &self.fixtures {
            self.fixtures = Some(resolve(base, p));
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendsConfig {
    #[serde(default)]
    pub judge: BackendSpec,
    #[serde(default)]
    pub embedding: BackendSpec,
    #[serde(default)]
    pub verifier: BackendSpec,
    #[serde(default)]
    pub ner: BackendSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunnelConfig {
    pub inputs: Vec<PathBuf>,
    #[serde(default)]
    pub holdouts: Vec<PathBuf>,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub budget: usize,
    #[serde(default)]
    pub seed: u64,
    pub backends: BackendsConfig,
    #[serde(default)]
    pub selector: Selector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Extra native label strings on top of the built-in map.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, Label>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl FunnelConfig {
    /// Parses a config; relative paths are taken against `base`.
    pub fn from_json(text: &str, base: &Path) -> Result<Self, FunnelError> {
        let mut c: FunnelConfig = serde_json::from_str(text).map_err(|e| FunnelError::Config(e.to_string()))?;
        c.resolve_paths(base);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, FunnelError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| FunnelError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in self.inputs.iter_mut().chain(self.holdouts.iter_mut()) {
            *p = resolve(base, p);
        }
        for p in [&mut self.cache_dir, &mut self.output_dir].into_iter().flatten() {
            *p = resolve(base, p);
        }
        for b in [
            &mut self.backends.judge,
            &mut self.backends.embedding,
            &mut self.backends.verifier,
            &mut self.backends.ner,
        ] {
            b.resolve_paths(base);
        }
    }

    pub fn validate(&self) -> Result<(), FunnelError> {
        if self.inputs.is_empty() {
            return Err(FunnelError::Config("no input files".into()));
        }
        if self.budget < 2 {
            return Err(FunnelError::Config(format!(
                "budget must be at least 2, got {}",
                self.budget
            )));
        }
        let t = &self.thresholds;
        if !(0.0..=1.0).contains(&t.difficulty_low)
            || !(0.0..=1.0).contains(&t.difficulty_high)
            || t.difficulty_low > t.difficulty_high
        {
            return Err(FunnelError::Config(
                "difficulty band must satisfy 0 <= low <= high <= 1".into(),
            ));
        }
        if t.min_evidence_tokens > t.max_evidence_tokens {
            return Err(FunnelError::Config(
                "min_evidence_tokens exceeds max_evidence_tokens".into(),
            ));
        }
        self.backends.judge.source("judge")?;
        self.backends.embedding.source("embedding")?;
        self.backends.verifier.source("verifier")?;
        self.backends.ner.source("ner")?;
        Ok(())
    }

    pub fn label_map(&self) -> LabelMap {
        let mut m = LabelMap::default();
        for (k, v) in &self.labels {
            m.insert(k, *v);
        }
        m
    }
}

/// Constructed evaluator handles.
pub struct Backends {
    pub judge: Judge,
    pub embedder: Embedder,
    pub verifier: Box<dyn Verifier>,
    pub ner: Box<dyn EntityCounter>,
}

fn load_fixtures(kind: &str, path: &Path) -> Result<FixtureSet, FunnelError> {
    FixtureSet::load(path).map_err(|e| FunnelError::Config(format!("backend {kind}: {e}")))
}

fn unknown_builtin(kind: &str, name: &str) -> FunnelError {
    FunnelError::Config(format!("backend {kind}: unknown builtin {name:?}"))
}

pub fn build_judge(spec: &BackendSpec, cache: Option<&DiskCache>) -> Result<Judge, FunnelError> {
    let id = |d: &str| spec.id.clone().unwrap_or_else(|| d.to_string());
    let judge = match spec.source("judge")? {
        BackendSource::Fixtures(p) => Judge::new(Arc::new(FixtureJudge::new(
            id("fixture-judge"),
            load_fixtures("judge", &p)?,
        ))),
        BackendSource::Url(u) => Judge::new(Arc::new(HttpJudge::new(id("http-judge"), u, HttpClient::default()))),
        BackendSource::Builtin(b) => return Err(unknown_builtin("judge", &b)),
    };
    Ok(match cache {
        Some(c) => judge.with_cache(c.clone()),
        None => judge,
    })
}

pub fn build_embedder(spec: &BackendSpec, cache: Option<&DiskCache>) -> Result<Embedder, FunnelError> {
    let id = |d: &str| spec.id.clone().unwrap_or_else(|| d.to_string());
    let embedder = match spec.source("embedding")? {
        BackendSource::Fixtures(p) => Embedder::new(Arc::new(FixtureEmbedder::new(
            id("fixture-embedding"),
            load_fixtures("embedding", &p)?,
        ))),
        BackendSource::Url(u) => Embedder::new(Arc::new(HttpEmbedder::new(
            id("http-embedding"),
            u,
            HttpClient::default(),
        ))),
        BackendSource::Builtin(b) if b == "hashing" => {
            // Deterministic and cheap; not worth caching.
            return Ok(Embedder::new(Arc::new(HashingEmbedder::new(spec.dim.unwrap_or(256)))));
        }
        BackendSource::Builtin(b) => return Err(unknown_builtin("embedding", &b)),
    };
    Ok(match cache {
        Some(c) => embedder.with_cache(c.clone()),
        None => embedder,
    })
}

pub fn build_verifier(spec: &BackendSpec, cache: Option<&DiskCache>) -> Result<Box<dyn Verifier>, FunnelError> {
    let id = |d: &str| spec.id.clone().unwrap_or_else(|| d.to_string());
    let inner: Box<dyn Verifier> = match spec.source("verifier")? {
        BackendSource::Fixtures(p) => Box::new(FixtureVerifier::new(
            id("fixture-verifier"),
            load_fixtures("verifier", &p)?,
        )),
        BackendSource::Url(u) => Box::new(HttpVerifier::new(id("http-verifier"), u, HttpClient::default())),
        BackendSource::Builtin(b) => return Err(unknown_builtin("verifier", &b)),
    };
    Ok(match cache {
        Some(c) => Box::new(CachedVerifier::new(inner, c.clone())),
        None => inner,
    })
}

pub fn build_ner(spec: &BackendSpec) -> Result<Box<dyn EntityCounter>, FunnelError> {
    let id = |d: &str| spec.id.clone().unwrap_or_else(|| d.to_string());
    Ok(match spec.source("ner")? {
        BackendSource::Fixtures(p) => Box::new(FixtureNer::new(id("fixture-ner"), load_fixtures("ner", &p)?)),
        BackendSource::Url(u) => Box::new(HttpNer::new(id("http-ner"), u, HttpClient::default())),
        BackendSource::Builtin(b) if b == "capitalized" => Box::new(CapitalizedSpanNer),
        BackendSource::Builtin(b) => return Err(unknown_builtin("ner", &b)),
    })
}

impl Backends {
    pub fn build(cfg: &BackendsConfig, cache_dir: Option<&Path>) -> Result<Self, FunnelError> {
        let cache = cache_dir.map(DiskCache::new);
        Ok(Self {
            judge: build_judge(&cfg.judge, cache.as_ref())?,
            embedder: build_embedder(&cfg.embedding, cache.as_ref())?,
            verifier: build_verifier(&cfg.verifier, cache.as_ref())?,
            ner: build_ner(&cfg.ner)?,
        })
    }
}
