//! Chat-completion gateway: send prompts to an endpoint (or a deterministic
//! replay store) and persist raw responses.
//!
//! The wire shape is chat-completion style: POST
//! `{model, messages: [{role: "user", content}], temperature, max_tokens}`;
//! the first choice's message content is the raw text. Bearer tokens are read
//! from the endpoint's named environment variable and never stored in files.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prompt::PromptRecord;
use crate::util::{read_jsonl, sha256_hex, write_jsonl};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("auth variable {0} is not set")]
    AuthMissing(String),
    #[error("all {attempts} attempts failed; last error: {last_error}")]
    Exhausted { attempts: u32, last_error: String },
    #[error("malformed endpoint response: {0}")]
    MalformedResponse(String),
    #[error("generation references unknown prompt id {0}")]
    DanglingPromptId(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A chat-completion endpoint definition, as it appears in the run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEndpoint {
    pub base_url: String,
    pub model_name: String,
    pub auth_env_var: String,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    #[serde(default = "default_max_tokens")]
    pub max_output_tokens: u32,
    #[serde(default = "default_timeout")]
    pub request_timeout_s: u64,
}

fn default_temperature() -> f64 {
    0.2
}
fn default_max_tokens() -> u32 {
    4096
}
fn default_timeout() -> u64 {
    120
}

/// Why the model stopped emitting tokens. `length` is preserved so the
/// extractor can report truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

/// One raw model response bound to its prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub prompt_id: String,
    pub raw_text: String,
    pub model_name: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
    pub attempt: u32,
}

/// Retry on transient failures with linear-multiple backoff:
/// `backoff_base_ms * attempt` after the attempt'th failure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub backoff_base_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            backoff_base_ms: 2000,
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, attempt: u32) -> Duration {
        Duration::from_millis(self.backoff_base_ms * attempt as u64)
    }
}

/// Raw response from a backend, with the latency the backend observed.
/// Replay backends report zero latency so replays are byte-deterministic.
#[derive(Debug, Clone)]
pub struct BackendResponse {
    pub text: String,
    pub finish_reason: FinishReason,
    pub latency_ms: u64,
}

#[derive(Debug, Clone)]
pub struct BackendError {
    pub message: String,
    pub retryable: bool,
}

impl std::fmt::Display for BackendError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// Anything that can answer a prompt: a remote endpoint or a replay store.
pub trait CompletionBackend: Sync {
    fn model_name(&self) -> &str;
    fn send(&self, prompt_text: &str) -> Result<BackendResponse, BackendError>;
}

/// Fixtures keyed by a stable digest of the exact prompt text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FixtureStore {
    entries: std::collections::BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct FixtureLine {
    digest: String,
    text: String,
}

impl FixtureStore {
    pub fn digest_of(prompt_text: &str) -> String {
        sha256_hex(prompt_text.as_bytes())
    }

    pub fn insert(&mut self, prompt_text: &str, raw_text: String) {
        self.entries.insert(Self::digest_of(prompt_text), raw_text);
    }

    pub fn get(&self, prompt_text: &str) -> Option<&str> {
        self.entries
            .get(&Self::digest_of(prompt_text))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        let lines: Vec<FixtureLine> = self
            .entries
            .iter()
            .map(|(digest, text)| FixtureLine {
                digest: digest.clone(),
                text: text.clone(),
            })
            .collect();
        write_jsonl(path, &lines)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let lines: Vec<FixtureLine> = read_jsonl(path)?;
        Ok(Self {
            entries: lines.into_iter().map(|l| (l.digest, l.text)).collect(),
        })
    }
}

/// Backend that replays recorded responses. Missing fixtures are reported as
/// retryable failures so the retry path is exercised identically to a flaky
/// remote endpoint.
pub struct ReplayBackend {
    store: FixtureStore,
    model_name: String,
}

impl ReplayBackend {
    pub fn new(store: FixtureStore, model_name: impl Into<String>) -> Self {
        Self {
            store,
            model_name: model_name.into(),
        }
    }
}

impl CompletionBackend for ReplayBackend {
    fn model_name(&self) -> &str {
        &self.model_name
    }

    fn send(&self, prompt_text: &str) -> Result<BackendResponse, BackendError> {
        match self.store.get(prompt_text) {
            Some(text) => Ok(BackendResponse {
                text: text.to_string(),
                finish_reason: FinishReason::Stop,
                latency_ms: 0,
            }),
            None => Err(BackendError {
                message: format!(
                    "no fixture for prompt digest {}",
                    FixtureStore::digest_of(prompt_text)
                ),
                retryable: true,
            }),
        }
    }
}

/// Backend for a live chat-completion endpoint.
pub struct HttpBackend {
    endpoint: ModelEndpoint,
    token: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    /// Fails with `AuthMissing` before any network activity when the token
    /// variable is unset.
    pub fn new(endpoint: ModelEndpoint) -> Result<Self, GatewayError> {
        let token = std::env::var(&endpoint.auth_env_var)
            .map_err(|_| GatewayError::AuthMissing(endpoint.auth_env_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.request_timeout_s))
            .build()
            .map_err(|e| GatewayError::MalformedResponse(e.to_string()))?;
        Ok(Self {
            endpoint,
            token,
            client,
        })
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatChoiceMessage,
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct ChatChoiceMessage {
    content: Option<String>,
}

impl CompletionBackend for HttpBackend {
    fn model_name(&self) -> &str {
        &self.endpoint.model_name
    }

    fn send(&self, prompt_text: &str) -> Result<BackendResponse, BackendError> {
        let started = Instant::now();
        let response = self
            .client
            .post(&self.endpoint.base_url)
            .bearer_auth(&self.token)
            .json(&ChatRequest {
                model: &self.endpoint.model_name,
                messages: [ChatMessage {
                    role: "user",
                    content: prompt_text,
                }],
                temperature: self.endpoint.temperature,
                max_tokens: self.endpoint.max_output_tokens,
            })
            .send()
            .map_err(|e| BackendError {
                message: format!("transport error: {e}"),
                retryable: true,
            })?;

        let status = response.status();
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err(BackendError {
                message: format!("endpoint returned {status}"),
                retryable,
            });
        }

        let parsed: ChatResponse = response.json().map_err(|e| BackendError {
            message: format!("undecodable response body: {e}"),
            retryable: false,
        })?;
        let choice = parsed.choices.into_iter().next().ok_or(BackendError {
            message: "response carries no choices".to_string(),
            retryable: false,
        })?;
        let text = choice.message.content.ok_or(BackendError {
            message: "first choice carries no content".to_string(),
            retryable: false,
        })?;
        let finish_reason = match choice.finish_reason.as_deref() {
            Some("length") => FinishReason::Length,
            _ => FinishReason::Stop,
        };
        Ok(BackendResponse {
            text,
            finish_reason,
            latency_ms: started.elapsed().as_millis() as u64,
        })
    }
}

/// Send one prompt, retrying transient failures up to `retry.max_attempts`.
pub fn complete(
    prompt: &PromptRecord,
    backend: &dyn CompletionBackend,
    retry: &RetryPolicy,
) -> Result<GenerationRecord, GatewayError> {
    let mut last_error = String::new();
    for attempt in 1..=retry.max_attempts.max(1) {
        match backend.send(&prompt.text) {
            Ok(response) => {
                return Ok(GenerationRecord {
                    prompt_id: prompt.id.clone(),
                    raw_text: response.text,
                    model_name: backend.model_name().to_string(),
                    finish_reason: response.finish_reason,
                    latency_ms: response.latency_ms,
                    attempt,
                });
            }
            Err(err) => {
                log::warn!(
                    "prompt {} attempt {attempt}/{}: {err}",
                    prompt.id,
                    retry.max_attempts
                );
                last_error = err.message.clone();
                if !err.retryable || attempt == retry.max_attempts {
                    break;
                }
                std::thread::sleep(retry.backoff(attempt));
            }
        }
    }
    Err(GatewayError::Exhausted {
        attempts: retry.max_attempts,
        last_error,
    })
}

/// Generate one record per prompt, in input order. Per-prompt failures are
/// embedded as records with `finish_reason: error` instead of aborting the
/// batch. Output order does not depend on `parallelism`.
pub fn batch_generate(
    prompts: &[PromptRecord],
    backend: &dyn CompletionBackend,
    retry: &RetryPolicy,
    parallelism: usize,
) -> Vec<GenerationRecord> {
    let workers = parallelism.max(1).min(prompts.len().max(1));
    let slots: Vec<Mutex<Option<GenerationRecord>>> =
        (0..prompts.len()).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);

    let run_one = |i: usize| -> GenerationRecord {
        match complete(&prompts[i], backend, retry) {
            Ok(record) => record,
            Err(err) => {
                log::warn!("prompt {} failed: {err}", prompts[i].id);
                GenerationRecord {
                    prompt_id: prompts[i].id.clone(),
                    raw_text: String::new(),
                    model_name: backend.model_name().to_string(),
                    finish_reason: FinishReason::Error,
                    latency_ms: 0,
                    attempt: retry.max_attempts,
                }
            }
        }
    };

    if workers <= 1 {
        for (i, slot) in slots.iter().enumerate() {
            *slot.lock().unwrap() = Some(run_one(i));
        }
    } else {
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= prompts.len() {
                        break;
                    }
                    let record = run_one(i);
                    *slots[i].lock().unwrap() = Some(record);
                });
            }
        });
    }

    slots
        .into_iter()
        .map(|slot| slot.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Build a replay store from completed generations. Error records are not
/// stored, so replaying reproduces the original failure behavior.
pub fn record_fixtures(
    records: &[GenerationRecord],
    prompts: &[PromptRecord],
) -> Result<FixtureStore, GatewayError> {
    let by_id: std::collections::HashMap<&str, &PromptRecord> =
        prompts.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut store = FixtureStore::default();
    for record in records {
        let prompt = by_id
            .get(record.prompt_id.as_str())
            .ok_or_else(|| GatewayError::DanglingPromptId(record.prompt_id.clone()))?;
        if record.finish_reason != FinishReason::Error {
            store.insert(&prompt.text, record.raw_text.clone());
        }
    }
    Ok(store)
}
