use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::Value;

use super::BackendError;

/// Blocking JSON-over-HTTP client with bounded retries and a cap on
/// concurrent in-flight requests.
pub struct HttpClient {
    agent: ureq::Agent,
    retries: u32,
    limit: usize,
    in_flight: Mutex<usize>,
    freed: Condvar,
}

impl HttpClient {
    pub fn new(timeout: Duration, retries: u32, max_in_flight: usize) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            retries,
            limit: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
        }
    }

    pub fn post_json(&self, url: &str, body: &Value) -> Result<Value, BackendError> {
        {
            let mut n = self.in_flight.lock().unwrap();
            while *n >= self.limit {
                n = self.freed.wait(n).unwrap();
            }
            *n += 1;
        }
        let result = self.post_with_retries(url, body);
        *self.in_flight.lock().unwrap() -= 1;
        self.freed.notify_one();
        result
    }

    fn post_with_retries(&self, url: &str, body: &Value) -> Result<Value, BackendError> {
        let mut attempt = 0;
        loop {
            match self.agent.post(url).send_json(body) {
                Ok(resp) => {
                    let text = resp
                        .into_string()
                        .map_err(|e| BackendError::Transport(format!("{url}: reading body: {e}")))?;
                    return serde_json::from_str(&text)
                        .map_err(|e| BackendError::Protocol(format!("{url}: non-JSON reply: {e}")));
                }
                Err(ureq::Error::Status(code, resp)) if code < 500 => {
                    let text = resp.into_string().unwrap_or_default();
                    return Err(BackendError::Protocol(format!("{url}: HTTP {code}: {text}")));
                }
                Err(e) => {
                    if attempt >= self.retries {
                        return Err(BackendError::Transport(e.to_string()));
                    }
                    attempt += 1;
                    std::thread::sleep(Duration::from_millis(100 * u64::from(attempt)));
                }
            }
        }
    }
}

impl Default for HttpClient {
    fn default() -> Self {
        Self::new(Duration::from_secs(300), 2, 16)
    }
}

/// Pulls a required field out of a reply object.
pub(crate) fn field<'a>(reply: &'a Value, name: &str) -> Result<&'a Value, BackendError> {
    reply
        .get(name)
        .ok_or_else(|| BackendError::Protocol(format!("reply missing {name:?}")))
}
