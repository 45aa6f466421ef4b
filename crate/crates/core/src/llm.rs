//! Language-model backends.
//!
//! A backend maps a [`ChatRequest`] to the next emission. Two kinds ship:
//! [`ScriptedBackend`], a pure lookup from `(purpose, key, turn)` into a
//! replay file, and [`RemoteBackend`], an OpenAI-compatible chat-completion
//! endpoint.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    /// Intent routing before the first step.
    Route,
    /// Next agent action (tool call or final answer).
    Step,
    /// Summary of one tool observation in step-by-step evaluation.
    StepSummary,
    /// Answer composition when the loop ended without a final answer.
    Synthesize,
    /// The `summarize` tool.
    Summarize,
    /// Keyword candidates for a seed topic.
    Expand,
    /// Follow-up query after an off-domain retrieval round.
    Refine,
    /// Atomic fact induction from a chunk.
    Facts,
    /// Text QA synthesis.
    Qa,
    /// Forecasting and reasoning QA over a chart.
    VisualQa,
}

impl Purpose {
    pub fn as_str(&self) -> &'static str {
        match self {
            Purpose::Route => "route",
            Purpose::Step => "step",
            Purpose::StepSummary => "step_summary",
            Purpose::Synthesize => "synthesize",
            Purpose::Summarize => "summarize",
            Purpose::Expand => "expand",
            Purpose::Refine => "refine",
            Purpose::Facts => "facts",
            Purpose::Qa => "qa",
            Purpose::VisualQa => "visual_qa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
    pub fn assistant(content: impl Into<String>) -> Self {
        Self { role: Role::Assistant, content: content.into() }
    }
}

/// One request to a backend. `key` identifies the conversation (an instance
/// id, a chunk id, ...) and `turn` its position, so scripted replies are a
/// pure function of the conversation state.
#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub purpose: Purpose,
    pub key: String,
    pub turn: usize,
    pub messages: Vec<ChatMessage>,
}

impl ChatRequest {
    pub fn new(purpose: Purpose, key: impl Into<String>, turn: usize, messages: Vec<ChatMessage>) -> Self {
        Self { purpose, key: key.into(), turn, messages }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("no scripted emission for {purpose}/{key} turn {turn}")]
    NoScript { purpose: &'static str, key: String, turn: usize },
    #[error("http error: {0}")]
    Http(String),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("backend config: {0}")]
    Config(String),
}

pub trait LlmBackend: Send + Sync {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptEntry {
    pub purpose: Purpose,
    /// Conversation key, or `*` to match any key.
    pub key: String,
    pub emissions: Vec<String>,
    /// Keep answering with the last emission once the list is exhausted.
    #[serde(default)]
    pub repeat_last: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayFile {
    pub version: u32,
    pub entries: Vec<ScriptEntry>,
}

pub const REPLAY_VERSION: u32 = 1;

/// Deterministic backend replaying a script. Exact keys win over `*`.
#[derive(Debug, Clone, Default)]
pub struct ScriptedBackend {
    entries: BTreeMap<(Purpose, String), ScriptEntry>,
}

impl ScriptedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, purpose: Purpose, key: &str, emissions: Vec<String>) -> Self {
        self.insert(ScriptEntry { purpose, key: key.to_string(), emissions, repeat_last: false });
        self
    }

    pub fn with_repeat(mut self, purpose: Purpose, key: &str, emissions: Vec<String>) -> Self {
        self.insert(ScriptEntry { purpose, key: key.to_string(), emissions, repeat_last: true });
        self
    }

    pub fn insert(&mut self, entry: ScriptEntry) {
        self.entries.insert((entry.purpose, entry.key.clone()), entry);
    }

    pub fn from_replay(replay: ReplayFile) -> Result<Self, BackendError> {
        if replay.version != REPLAY_VERSION {
            return Err(BackendError::Config(format!(
                "unsupported replay version {} (expected {REPLAY_VERSION})",
                replay.version
            )));
        }
        let mut backend = Self::new();
        for entry in replay.entries {
            backend.insert(entry);
        }
        Ok(backend)
    }

    pub fn from_json(text: &str) -> Result<Self, BackendError> {
        let replay: ReplayFile = serde_json::from_str(text).map_err(|e| BackendError::Config(e.to_string()))?;
        Self::from_replay(replay)
    }

    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BackendError::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_replay(&self) -> ReplayFile {
        ReplayFile { version: REPLAY_VERSION, entries: self.entries.values().cloned().collect() }
    }
}

impl LlmBackend for ScriptedBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let entry = self
            .entries
            .get(&(request.purpose, request.key.clone()))
            .or_else(|| self.entries.get(&(request.purpose, "*".to_string())));
        let missing = || BackendError::NoScript {
            purpose: request.purpose.as_str(),
            key: request.key.clone(),
            turn: request.turn,
        };
        let entry = entry.ok_or_else(missing)?;
        match entry.emissions.get(request.turn) {
            Some(e) => Ok(e.clone()),
            None if entry.repeat_last => entry.emissions.last().cloned().ok_or_else(missing),
            None => Err(missing()),
        }
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

/// OpenAI-compatible `chat/completions` client.
pub struct RemoteBackend {
    endpoint: String,
    model: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct CompletionBody<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f64,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

impl RemoteBackend {
    /// `endpoint` is the full completion URL; the key is read from `api_key_env` when set.
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key_env: Option<&str>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let api_key = match api_key_env {
            Some(var) => Some(
                std::env::var(var)
                    .map_err(|_| BackendError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Config(e.to_string()))?;
        Ok(Self { endpoint: endpoint.into(), model: model.into(), api_key, client })
    }

    pub fn parse_response(body: &str) -> Result<String, BackendError> {
        let parsed: CompletionResponse =
            serde_json::from_str(body).map_err(|e| BackendError::BadResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| BackendError::BadResponse("no choices".into()))
    }
}

impl LlmBackend for RemoteBackend {
    fn complete(&self, request: &ChatRequest) -> Result<String, BackendError> {
        let body = CompletionBody { model: &self.model, messages: &request.messages, temperature: 0.0 };
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Http(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::Http(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Http(format!("status {status}: {text}")));
        }
        Self::parse_response(&text)
    }

    fn name(&self) -> &str {
        &self.model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_key_beats_wildcard() {
        let b = ScriptedBackend::new().with(Purpose::Step, "*", vec!["any".into()]).with(
            Purpose::Step,
            "inst-1",
            vec!["first".into(), "second".into()],
        );
        let req = |key: &str, turn| ChatRequest::new(Purpose::Step, key, turn, vec![]);
        assert_eq!(b.complete(&req("inst-1", 1)).unwrap(), "second");
        assert_eq!(b.complete(&req("other", 0)).unwrap(), "any");
        assert!(matches!(b.complete(&req("inst-1", 2)), Err(BackendError::NoScript { .. })));
    }

    #[test]
    fn repeat_last_extends_script() {
        let b = ScriptedBackend::new().with_repeat(Purpose::Step, "*", vec!["a".into()]);
        let req = ChatRequest::new(Purpose::Step, "k", 9, vec![]);
        assert_eq!(b.complete(&req).unwrap(), "a");
    }

    #[test]
    fn replay_json_round_trip() {
        let b = ScriptedBackend::new().with(Purpose::Route, "*", vec!["numerical".into()]);
        let text = serde_json::to_string(&b.to_replay()).unwrap();
        let back = ScriptedBackend::from_json(&text).unwrap();
        let req = ChatRequest::new(Purpose::Route, "x", 0, vec![]);
        assert_eq!(back.complete(&req).unwrap(), "numerical");
        assert!(ScriptedBackend::from_json(r#"{"version":9,"entries":[]}"#).is_err());
    }

    #[test]
    fn parses_completion_response() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"hello"}}]}"#;
        assert_eq!(RemoteBackend::parse_response(body).unwrap(), "hello");
        assert!(RemoteBackend::parse_response(r#"{"choices":[]}"#).is_err());
    }
}
