use serde_json::{json, Value};

use super::http::field;
use super::{BackendError, FixtureSet, HttpClient};
use crate::corpus::EntityCounter;

fn parse_entities(v: &Value) -> Result<Vec<String>, BackendError> {
    let list = match v {
        Value::Object(_) => field(v, "entities")?,
        other => other,
    };
    list.as_array()
        .ok_or_else(|| BackendError::Protocol("entities is not an array".into()))?
        .iter()
        .map(|e| {
            e.as_str()
                .map(str::to_string)
                .ok_or_else(|| BackendError::Protocol("entity is not a string".into()))
        })
        .collect()
}

/// `POST url {text}` → `{entities: [str]}`.
pub struct HttpNer {
    id: String,
    url: String,
    client: HttpClient,
}

impl HttpNer {
    pub fn new(id: impl Into<String>, url: impl Into<String>, client: HttpClient) -> Self {
        Self {
            id: id.into(),
            url: url.into(),
            client,
        }
    }
}

impl EntityCounter for HttpNer {
    fn name(&self) -> &str {
        &self.id
    }

    fn entities(&self, text: &str) -> Result<Vec<String>, BackendError> {
        parse_entities(&self.client.post_json(&self.url, &json!({ "text": text }))?)
    }
}

/// Replays entity lists keyed by the digest of the text.
pub struct FixtureNer {
    id: String,
    fixtures: FixtureSet,
}

impl FixtureNer {
    pub fn new(id: impl Into<String>, fixtures: FixtureSet) -> Self {
        Self {
            id: id.into(),
            fixtures,
        }
    }
}

impl EntityCounter for FixtureNer {
    fn name(&self) -> &str {
        &self.id
    }

    fn entities(&self, text: &str) -> Result<Vec<String>, BackendError> {
        parse_entities(self.fixtures.lookup(text)?)
    }
}
