use serde_json::{json, Value};

use super::http::field;
use super::{verifier_request_text, BackendError, CacheKey, DiskCache, FixtureSet, HttpClient};
use crate::corpus::{ClaimRecord, Label};

/// A strong claim verifier reporting P(Supported | claim, document).
pub trait Verifier: Send + Sync {
    fn id(&self) -> &str;
    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError>;
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DifficultyError {
    #[error("record {0} has no gold label")]
    Unlabeled(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

/// Probability the verifier assigns to the record's gold label.
pub fn difficulty_score(record: &ClaimRecord, verifier: &dyn Verifier) -> Result<f64, DifficultyError> {
    let gold = record
        .label
        .ok_or_else(|| DifficultyError::Unlabeled(record.id.clone()))?;
    let p = verifier.prob_supported(&record.claim, &record.document())?;
    Ok(match gold {
        Label::Supported => p,
        Label::Refuted => 1.0 - p,
    })
}

fn check_prob(v: &Value) -> Result<f64, BackendError> {
    let p = match v {
        Value::Object(_) => field(v, "p_supported")?.as_f64(),
        other => other.as_f64(),
    }
    .ok_or_else(|| BackendError::Protocol("p_supported is not a number".into()))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(BackendError::Protocol(format!("p_supported {p} outside [0, 1]")))
    }
}

/// `POST url {claim, evidence}` → `{p_supported}`.
pub struct HttpVerifier {
    id: String,
    url: String,
    client: HttpClient,
}

impl HttpVerifier {
    pub fn new(id: impl Into<String>, url: impl Into<String>, client: HttpClient) -> Self {
        Self {
            id: id.into(),
            url: url.into(),
            client,
        }
    }
}

impl Verifier for HttpVerifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError> {
        let reply = self
            .client
            .post_json(&self.url, &json!({"claim": claim, "evidence": document}))?;
        check_prob(&reply)
    }
}

/// Replays probabilities keyed by the digest of `claim + "\n\n" + document`.
/// Responses may be a bare number or `{"p_supported": x}`.
pub struct FixtureVerifier {
    id: String,
    fixtures: FixtureSet,
}

impl FixtureVerifier {
    pub fn new(id: impl Into<String>, fixtures: FixtureSet) -> Self {
        Self {
            id: id.into(),
            fixtures,
        }
    }
}

impl Verifier for FixtureVerifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError> {
        check_prob(self.fixtures.lookup(&verifier_request_text(claim, document))?)
    }
}

type ProbFn = dyn Fn(&str, &str) -> Result<f64, BackendError> + Send + Sync;

pub struct FnVerifier {
    id: String,
    f: Box<ProbFn>,
}

impl FnVerifier {
    pub fn new(
        id: impl Into<String>,
        f: impl Fn(&str, &str) -> Result<f64, BackendError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            f: Box::new(f),
        }
    }
}

impl Verifier for FnVerifier {
    fn id(&self) -> &str {
        &self.id
    }

    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError> {
        (self.f)(claim, document)
    }
}

impl<V: Verifier + ?Sized> Verifier for Box<V> {
    fn id(&self) -> &str {
        (**self).id()
    }

    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError> {
        (**self).prob_supported(claim, document)
    }
}

/// Disk-cached wrapper around another verifier.
pub struct CachedVerifier<V> {
    inner: V,
    cache: DiskCache,
}

impl<V: Verifier> CachedVerifier<V> {
    pub fn new(inner: V, cache: DiskCache) -> Self {
        Self { inner, cache }
    }
}

impl<V: Verifier> Verifier for CachedVerifier<V> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn prob_supported(&self, claim: &str, document: &str) -> Result<f64, BackendError> {
        let request = verifier_request_text(claim, document);
        let key = CacheKey::from_parts("verifier", &[self.inner.id().as_bytes(), request.as_bytes()]);
        if let Some(v) = self.cache.get(&key)? {
            return check_prob(&v);
        }
        let p = self.inner.prob_supported(claim, document)?;
        let stored = self
            .cache
            .put(&key, json!({"backend": self.inner.id(), "claim": claim}), json!(p))?;
        check_prob(&stored)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(label: Option<Label>) -> ClaimRecord {
        ClaimRecord {
            id: "c1".into(),
            claim: "claim".into(),
            evidence: vec!["doc".into()],
            label,
            source: "s".into(),
            meta: Default::default(),
            silver_question_count: None,
        }
    }

    fn fixed(p: f64) -> FnVerifier {
        FnVerifier::new("fixed", move |_, _| Ok(p))
    }

    #[test]
    fn label_aligned_probability() {
        let p = difficulty_score(&record(Some(Label::Supported)), &fixed(0.9)).unwrap();
        assert_eq!(p, 0.9);
        let q = difficulty_score(&record(Some(Label::Refuted)), &fixed(0.9)).unwrap();
        assert!((q - 0.1).abs() < 1e-12);
    }

    #[test]
    fn unlabeled_is_error() {
        assert_eq!(
            difficulty_score(&record(None), &fixed(0.5)),
            Err(DifficultyError::Unlabeled("c1".into()))
        );
    }

    #[test]
    fn offline_is_transport_error() {
        let v = FnVerifier::new("down", |_, _| Err(BackendError::Transport("refused".into())));
        assert!(matches!(
            difficulty_score(&record(Some(Label::Supported)), &v),
            Err(DifficultyError::Backend(BackendError::Transport(_)))
        ));
    }

    #[test]
    fn fixture_accepts_both_shapes() {
        let mut f = FixtureSet::default();
        f.insert_text(&verifier_request_text("a", "d"), json!(0.25));
        f.insert_text(&verifier_request_text("b", "d"), json!({"p_supported": 0.75}));
        f.insert_text(&verifier_request_text("c", "d"), json!(1.5));
        let v = FixtureVerifier::new("fx", f);
        assert_eq!(v.prob_supported("a", "d").unwrap(), 0.25);
        assert_eq!(v.prob_supported("b", "d").unwrap(), 0.75);
        assert!(matches!(v.prob_supported("c", "d"), Err(BackendError::Protocol(_))));
    }

    #[test]
    fn cached_verifier_replays() {
        let dir = tempfile::tempdir().unwrap();
        let v = CachedVerifier::new(fixed(0.4), DiskCache::new(dir.path()));
        assert_eq!(v.prob_supported("x", "y").unwrap(), 0.4);
        let offline = CachedVerifier::new(
            FnVerifier::new("fixed", |_, _| Err(BackendError::Transport("down".into()))),
            DiskCache::new(dir.path()),
        );
        assert_eq!(offline.prob_supported("x", "y").unwrap(), 0.4);
    }
}
