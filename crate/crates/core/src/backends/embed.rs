use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde_json::{json, Value};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use super::http::field;
use super::{BackendError, CacheKey, DiskCache, FixtureSet, HttpClient};
use crate::corpus::tokens;

/// A service mapping texts to dense vectors (not necessarily normalized).
pub trait EmbeddingBackend: Send + Sync {
    fn id(&self) -> &str;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError>;
}

/// Dot product of two unit vectors, clamped to [-1, 1].
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    dot.clamp(-1.0, 1.0)
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, BackendError> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(BackendError::Protocol("embedding has zero or non-finite norm".into()));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Unit-norm embeddings with in-memory and optional on-disk caching.
/// Repeated texts within and across batches reach the backend once.
pub struct Embedder {
    backend: Arc<dyn EmbeddingBackend>,
    cache: Option<DiskCache>,
    batch_size: usize,
    memo: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl Embedder {
    pub fn new(backend: Arc<dyn EmbeddingBackend>) -> Self {
        Self {
            backend,
            cache: None,
            batch_size: 256,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_batch_size(mut self, n: usize) -> Self {
        self.batch_size = n.max(1);
        self
    }

    pub fn backend_id(&self) -> &str {
        self.backend.id()
    }

    fn key(&self, text: &str) -> CacheKey {
        CacheKey::from_parts("embedding", &[self.backend.id().as_bytes(), text.as_bytes()])
    }

    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Arc<Vec<f64>>>, BackendError> {
        let mut missing: BTreeMap<&str, ()> = BTreeMap::new();
        {
            let memo = self.memo.lock().unwrap();
            for t in texts {
                if !memo.contains_key(t.as_ref()) {
                    missing.insert(t.as_ref(), ());
                }
            }
        }
        let mut to_fetch = Vec::new();
        for text in missing.into_keys() {
            match self
                .cache
                .as_ref()
                .map(|c| c.get(&self.key(text)))
                .transpose()?
                .flatten()
            {
                Some(v) => {
                    let v: Vec<f64> =
                        serde_json::from_value(v).map_err(|e| BackendError::Cache(format!("cached embedding: {e}")))?;
                    self.memo.lock().unwrap().insert(text.to_string(), Arc::new(v));
                }
                None => to_fetch.push(text),
            }
        }
        for chunk in to_fetch.chunks(self.batch_size) {
            let raw = self.backend.embed_batch(chunk)?;
            if raw.len() != chunk.len() {
                return Err(BackendError::Protocol(format!(
                    "asked for {} embeddings, got {}",
                    chunk.len(),
                    raw.len()
                )));
            }
            for (text, v) in chunk.iter().zip(raw) {
                let mut v = normalize(v)?;
                if let Some(cache) = &self.cache {
                    let meta = json!({"backend": self.backend.id(), "text": text});
                    let stored = cache.put(&self.key(text), meta, json!(v))?;
                    v = serde_json::from_value(stored)
                        .map_err(|e| BackendError::Cache(format!("cached embedding: {e}")))?;
                }
                self.memo.lock().unwrap().insert(text.to_string(), Arc::new(v));
            }
        }
        let memo = self.memo.lock().unwrap();
        let out: Vec<Arc<Vec<f64>>> = texts.iter().map(|t| memo[t.as_ref()].clone()).collect();
        if let Some(first) = out.first() {
            if let Some(bad) = out.iter().find(|v| v.len() != first.len()) {
                return Err(BackendError::Protocol(format!(
                    "embedding dimension mismatch: {} vs {}",
                    first.len(),
                    bad.len()
                )));
            }
        }
        Ok(out)
    }
}

/// `POST url {texts}` → `{vectors}`.
pub struct HttpEmbedder {
    id: String,
    url: String,
    client: HttpClient,
}

impl HttpEmbedder {
    pub fn new(id: impl Into<String>, url: impl Into<String>, client: HttpClient) -> Self {
        Self {
            id: id.into(),
            url: url.into(),
            client,
        }
    }
}

fn parse_vector(v: &Value) -> Result<Vec<f64>, BackendError> {
    v.as_array()
        .ok_or_else(|| BackendError::Protocol("vector is not an array".into()))?
        .iter()
        .map(|x| {
            x.as_f64()
                .ok_or_else(|| BackendError::Protocol("vector entry is not a number".into()))
        })
        .collect()
}

impl EmbeddingBackend for HttpEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        let reply = self.client.post_json(&self.url, &json!({ "texts": texts }))?;
        field(&reply, "vectors")?
            .as_array()
            .ok_or_else(|| BackendError::Protocol("\"vectors\" is not an array".into()))?
            .iter()
            .map(parse_vector)
            .collect()
    }
}

/// Replays vectors keyed by the SHA-256 of each text.
pub struct FixtureEmbedder {
    id: String,
    fixtures: FixtureSet,
}

impl FixtureEmbedder {
    pub fn new(id: impl Into<String>, fixtures: FixtureSet) -> Self {
        Self {
            id: id.into(),
            fixtures,
        }
    }
}

impl EmbeddingBackend for FixtureEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        texts.iter().map(|t| parse_vector(self.fixtures.lookup(t)?)).collect()
    }
}

/// Bag-of-words feature hashing: lowercased tokens are hashed into `dim`
/// signed buckets, plus a constant bias so no vector is zero. Near-duplicate
/// texts land close together, which is all the offline pipeline needs.
#[derive(Debug, Clone)]
pub struct HashingEmbedder {
    id: String,
    dim: usize,
    bias: f64,
}

impl HashingEmbedder {
    pub fn new(dim: usize) -> Self {
        Self {
            id: format!("hashing-{dim}"),
            dim: dim.max(2),
            bias: 0.5,
        }
    }

    pub fn embed_one(&self, text: &str) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        v[0] = self.bias;
        for tok in tokens(text) {
            let h = xxh3_64_with_seed(tok.to_lowercase().as_bytes(), 0x9e37_79b9);
            let slot = 1 + (h % (self.dim as u64 - 1)) as usize;
            v[slot] += if (h >> 63) == 0 { 1.0 } else { -1.0 };
        }
        v
    }
}

impl Default for HashingEmbedder {
    fn default() -> Self {
        Self::new(256)
    }
}

impl EmbeddingBackend for HashingEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

type EmbedFn = dyn Fn(&str) -> Result<Vec<f64>, BackendError> + Send + Sync;

/// Scripted embedder driven by a closure.
pub struct FnEmbedder {
    id: String,
    f: Box<EmbedFn>,
}

impl FnEmbedder {
    pub fn new(
        id: impl Into<String>,
        f: impl Fn(&str) -> Result<Vec<f64>, BackendError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            f: Box::new(f),
        }
    }

    /// Looks texts up in a fixed table; unknown texts are a fixture miss.
    pub fn table(id: impl Into<String>, table: HashMap<String, Vec<f64>>) -> Self {
        Self::new(id, move |t| {
            table
                .get(t)
                .cloned()
                .ok_or_else(|| BackendError::FixtureMiss(t.to_string()))
        })
    }
}

impl EmbeddingBackend for FnEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
        texts.iter().map(|t| (self.f)(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting {
        calls: AtomicUsize,
        texts: AtomicUsize,
    }

    impl EmbeddingBackend for Counting {
        fn id(&self) -> &str {
            "counting"
        }
        fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, BackendError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.texts.fetch_add(texts.len(), Ordering::SeqCst);
            Ok(texts.iter().map(|t| vec![t.len() as f64, 1.0, 2.0]).collect())
        }
    }

    #[test]
    fn self_cosine_is_one() {
        let e = Embedder::new(Arc::new(HashingEmbedder::default()));
        for v in e.embed(&["alpha beta", "", "Gamma delta epsilon"]).unwrap() {
            assert!((cosine(&v, &v) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orthogonal_fixture_vectors() {
        let mut f = FixtureSet::default();
        f.insert_text("x", json!([1.0, 0.0]));
        f.insert_text("y", json!([0.0, 3.0]));
        let e = Embedder::new(Arc::new(FixtureEmbedder::new("fx", f)));
        let v = e.embed(&["x", "y"]).unwrap();
        assert_eq!(cosine(&v[0], &v[1]), 0.0);
        assert_eq!(v[1].as_slice(), &[0.0, 1.0]);
    }

    #[test]
    fn repeated_text_coalesced() {
        let b = Arc::new(Counting {
            calls: AtomicUsize::new(0),
            texts: AtomicUsize::new(0),
        });
        let e = Embedder::new(b.clone());
        let v = e.embed(&["same", "same", "other", "same"]).unwrap();
        assert_eq!(b.calls.load(Ordering::SeqCst), 1);
        assert_eq!(b.texts.load(Ordering::SeqCst), 2);
        assert_eq!(v[0], v[1]);
        assert_eq!(v[0], v[3]);
        e.embed(&["same"]).unwrap();
        assert_eq!(b.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn disk_cache_serves_second_embedder() {
        let dir = tempfile::tempdir().unwrap();
        let b = Arc::new(Counting {
            calls: AtomicUsize::new(0),
            texts: AtomicUsize::new(0),
        });
        let e1 = Embedder::new(b.clone()).with_cache(DiskCache::new(dir.path()));
        let a = e1.embed(&["t1", "t2"]).unwrap();
        let e2 = Embedder::new(b.clone()).with_cache(DiskCache::new(dir.path()));
        let c = e2.embed(&["t2", "t1"]).unwrap();
        assert_eq!(a[0], c[1]);
        assert_eq!(b.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let e = Embedder::new(Arc::new(FnEmbedder::new("f", |t| {
            Ok(if t == "a" { vec![1.0, 0.0] } else { vec![1.0, 0.0, 0.0] })
        })));
        assert!(matches!(e.embed(&["a", "b"]), Err(BackendError::Protocol(_))));
    }

    #[test]
    fn zero_vector_rejected() {
        let e = Embedder::new(Arc::new(FnEmbedder::new("f", |_| Ok(vec![0.0, 0.0]))));
        assert!(e.embed(&["a"]).is_err());
    }

    #[test]
    fn hashing_embedder_similarity_tracks_overlap() {
        let e = Embedder::new(Arc::new(HashingEmbedder::default()));
        let v = e
            .embed(&[
                "The Eiffel Tower is located in Paris France",
                "The Eiffel Tower is located in Paris",
                "Photosynthesis converts light into chemical energy",
            ])
            .unwrap();
        assert!(cosine(&v[0], &v[1]) > 0.9);
        assert!(cosine(&v[0], &v[2]) < 0.5);
    }
}
