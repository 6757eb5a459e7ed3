//! Completion backends: a chat-completions HTTP client, a replay store keyed
//! by prompt hash, and a recorder that fills such a store from live calls.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::Message;

pub const API_KEY_ENV: &str = "TOXTRIG_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChatRequest {
    pub model: String,
    pub messages: Vec<Message>,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub response_schema: Value,
}

impl ChatRequest {
    /// SHA-256 of the rendered message sequence, hex encoded. Any change to
    /// the prompt changes the key.
    pub fn prompt_hash(&self) -> String {
        let canonical = serde_json::to_string(&self.messages).expect("messages serialize");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    /// Chat-completions request body with a JSON-schema response format.
    pub fn to_body(&self) -> Value {
        json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "top_p": self.top_p,
            "max_tokens": self.max_tokens,
            "response_format": {
                "type": "json_schema",
                "json_schema": {
                    "name": "toxic_habit_triggers",
                    "strict": true,
                    "schema": self.response_schema,
                }
            }
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("HTTP {status} after {attempts} attempt(s): {body}")]
    Status { status: u16, attempts: u32, body: String },

    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },

    #[error("unexpected response body: {0}")]
    Malformed(String),

    #[error("no recorded response for prompt hash {hash}")]
    ReplayMiss { hash: String },

    #[error("{path}: {message}")]
    Store { path: PathBuf, message: String },
}

/// Anything that can answer a chat request with the raw message content.
///
/// Implementations are shared across worker threads. Closures of the right
/// shape implement the trait, which is handy for scripted backends.
pub trait CompletionClient: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError>;
}

impl<F> CompletionClient for F
where
    F: Fn(&ChatRequest) -> Result<String, ClientError> + Send + Sync,
{
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        self(request)
    }
}

/// Blocking chat-completions client with bounded retries.
///
/// Status 429, 5xx and transport failures are retried up to `max_retries`
/// times with exponential backoff; other statuses fail immediately.
#[derive(Debug)]
pub struct HttpClient {
    agent: ureq::Agent,
    url: String,
    api_key: Option<String>,
    max_retries: u32,
    backoff: Duration,
}

impl HttpClient {
    pub fn new(url: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            url: url.into(),
            api_key,
            max_retries: 2,
            backoff: Duration::from_millis(1000),
        }
    }

    /// Reads the bearer token from `TOXTRIG_API_KEY`, if set.
    pub fn from_env(url: impl Into<String>, timeout: Duration) -> Self {
        Self::new(url, std::env::var(API_KEY_ENV).ok(), timeout)
    }

    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    fn attempt(&self, body: &Value) -> Result<(u16, String), String> {
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(body).map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
        Ok((status, text))
    }
}

fn first_choice_content(body: &str) -> Result<String, ClientError> {
    let value: Value = serde_json::from_str(body).map_err(|e| ClientError::Malformed(format!("{e}: {body}")))?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| ClientError::Malformed(format!("no choices[0].message.content in {body}")))
}

impl CompletionClient for HttpClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let body = request.to_body();
        let mut attempts = 0;
        loop {
            attempts += 1;
            let retryable = match self.attempt(&body) {
                Ok((200..=299, text)) => return first_choice_content(&text),
                Ok((status, text)) if status == 429 || status >= 500 => ClientError::Status {
                    status,
                    attempts,
                    body: text,
                },
                Ok((status, text)) => {
                    return Err(ClientError::Status {
                        status,
                        attempts,
                        body: text,
                    })
                }
                Err(message) => ClientError::Transport { attempts, message },
            };
            if attempts > self.max_retries {
                return Err(retryable);
            }
            log::info!("retrying after: {retryable}");
            thread::sleep(self.backoff * 2u32.pow(attempts - 1));
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ReplayRecord {
    hash: String,
    payload: String,
}

/// Reads a replay file: one JSON object `{"hash": ..., "payload": ...}` per
/// line. Later lines win on duplicate hashes.
pub fn load_replay_file(path: &Path) -> Result<HashMap<String, String>, ClientError> {
    let store_err = |message: String| ClientError::Store {
        path: path.to_owned(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| store_err(e.to_string()))?;
    let mut map = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ReplayRecord = serde_json::from_str(line).map_err(|e| store_err(format!("line {}: {e}", i + 1)))?;
        map.insert(rec.hash, rec.payload);
    }
    Ok(map)
}

/// Writes records sorted by hash, one per line.
pub fn write_replay_file(path: &Path, records: &BTreeMap<String, String>) -> Result<(), ClientError> {
    let mut out = String::new();
    for (hash, payload) in records {
        let rec = ReplayRecord {
            hash: hash.clone(),
            payload: payload.clone(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("record serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| ClientError::Store {
        path: path.to_owned(),
        message: e.to_string(),
    })
}

/// Serves recorded payloads by prompt hash; never touches the network.
#[derive(Debug, Clone, Default)]
pub struct ReplayClient {
    records: HashMap<String, String>,
}

impl ReplayClient {
    pub fn open(path: &Path) -> Result<Self, ClientError> {
        Ok(Self {
            records: load_replay_file(path)?,
        })
    }

    pub fn from_records(records: HashMap<String, String>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl CompletionClient for ReplayClient {
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let hash = request.prompt_hash();
        self.records.get(&hash).cloned().ok_or(ClientError::ReplayMiss { hash })
    }
}

/// Forwards to another client and keeps every successful payload so it can
/// be written out as a replay file.
pub struct RecordingClient<C> {
    inner: C,
    records: Mutex<BTreeMap<String, String>>,
}

impl<C: CompletionClient> RecordingClient<C> {
    pub fn new(inner: C) -> Self {
        Self {
            inner,
            records: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn records(&self) -> BTreeMap<String, String> {
        self.records.lock().expect("recorder lock").clone()
    }

    pub fn save(&self, path: &Path) -> Result<(), ClientError> {
        write_replay_file(path, &self.records())
    }
}

impl<C: CompletionClient> CompletionClient for RecordingClient<C> {
    fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let payload = self.inner.complete(request)?;
        self.records
            .lock()
            .expect("recorder lock")
            .insert(request.prompt_hash(), payload.clone());
        Ok(payload)
    }
}
