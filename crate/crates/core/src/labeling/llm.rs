use std::time::Duration;

use async_trait::async_trait;
use chrono::{DateTime, Utc};
use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use super::{LabelError, LabelRecord};
use crate::augment::{DesignPair, Label, LabelProvenance};
use crate::kb::{abstract_primitives, ChartSpec};
use crate::training::Orientation;

pub const API_KEY_ENV: &str = "VIZKB_LLM_API_KEY";
pub const PROMPT_VERSION: &str = "v1";

const SYSTEM_PROMPT: &str = "You are a visualization design expert. You will see two chart designs for the same \
data. Each chart lists its design primitives (mark, encoding channels, field types, scales, aggregation, \
binning, faceting and coordinates) and the anonymous data properties behind each channel. Decide which chart better supports \
value tasks: reading and comparing individual data values accurately. Reply with JSON only: \
{\"preferred\": 1} if chart 1 is better, {\"preferred\": 2} if chart 2 is better, or \
{\"preferred\": \"equal\"} if neither is better.";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LlmError {
    #[error("environment variable {0} is not set")]
    MissingApiKey(&'static str),
    #[error("request failed: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected response shape: {0}")]
    Response(String),
    #[error("could not parse model answer: {0}")]
    Answer(String),
}

impl LlmError {
    /// Transport and protocol failures are retried; an unusable answer is not.
    pub fn is_retryable(&self) -> bool {
        !matches!(self, LlmError::Answer(_) | LlmError::MissingApiKey(_))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: &str, content: impl Into<String>) -> Self {
        Self {
            role: role.to_string(),
            content: content.into(),
        }
    }
}

/// A chat-completion style endpoint.
#[async_trait]
pub trait ChatBackend: Send + Sync {
    async fn chat(&self, messages: &[ChatMessage]) -> Result<String, LlmError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: usize,
    pub concurrency: usize,
    pub timeout_secs: u64,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            temperature: 0.0,
            max_retries: 3,
            concurrency: 4,
            timeout_secs: 60,
        }
    }
}

pub struct HttpChatBackend {
    client: reqwest::Client,
    endpoint: String,
    model: String,
    temperature: f64,
    api_key: String,
}

impl HttpChatBackend {
    pub fn new(config: &LlmConfig, api_key: impl Into<String>) -> Result<Self, LlmError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            temperature: config.temperature,
            api_key: api_key.into(),
        })
    }

    /// Reads the key from `VIZKB_LLM_API_KEY`.
    pub fn from_env(config: &LlmConfig) -> Result<Self, LlmError> {
        let key = std::env::var(API_KEY_ENV).map_err(|_| LlmError::MissingApiKey(API_KEY_ENV))?;
        Self::new(config, key)
    }
}

#[async_trait]
impl ChatBackend for HttpChatBackend {
    async fn chat(&self, messages: &[ChatMessage]) -> Result<String, LlmError> {
        let body = json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": messages,
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .await
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().await.map_err(|e| LlmError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(LlmError::Status {
                status: status.as_u16(),
                body: text,
            });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| LlmError::Response(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| LlmError::Response("missing choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    First,
    Second,
    Equal,
}

fn field_json(spec: &ChartSpec, name: &str) -> Value {
    match spec.dataset.field(name) {
        Some(f) => json!({
            "type": f.dtype,
            "cardinality": f.cardinality,
            "entropy": f.entropy,
            "extent": f.extent.map(|e| [e.min, e.max]),
            "interesting": f.interesting,
        }),
        None => json!("count"),
    }
}

/// Primitive tokens plus an anonymous description of the data behind each
/// channel. Field names are left out; without the descriptors two designs
/// over different fields would read the same.
fn chart_json(spec: &ChartSpec) -> Result<Value, LabelError> {
    let tokens: Vec<String> = abstract_primitives(spec)?
        .to_vec()
        .into_iter()
        .map(|t| t.as_str().to_string())
        .collect();
    let mut channels = Vec::new();
    for m in &spec.marks {
        for e in &m.encodings {
            channels.push(json!({"channel": e.channel.as_str(), "field": field_json(spec, e.field.name())}));
        }
    }
    if let Some(f) = &spec.facet {
        channels.push(json!({"channel": f.direction.as_str(), "field": field_json(spec, &f.field)}));
    }
    Ok(json!({
        "primitives": tokens,
        "data": {"rows": spec.dataset.row_count(), "channels": channels},
    }))
}

/// System instruction plus both charts as identifier-free primitive lists.
pub fn build_prompt(first: &ChartSpec, second: &ChartSpec) -> Result<Vec<ChatMessage>, LabelError> {
    let charts = json!({
        "chart_1": chart_json(first)?,
        "chart_2": chart_json(second)?,
    });
    let user = format!(
        "{}\n\nWhich chart is better for value tasks?",
        serde_json::to_string_pretty(&charts).expect("json value serializes")
    );
    Ok(vec![ChatMessage::new("system", SYSTEM_PROMPT), ChatMessage::new("user", user)])
}

/// Accepts the first JSON object carrying `preferred`, tolerating code
/// fences and surrounding prose.
pub fn parse_choice(answer: &str) -> Result<Choice, LlmError> {
    let start = answer.find('{');
    let end = answer.rfind('}');
    let (Some(s), Some(e)) = (start, end) else {
        return Err(LlmError::Answer(answer.to_string()));
    };
    let v: Value = serde_json::from_str(&answer[s..=e]).map_err(|_| LlmError::Answer(answer.to_string()))?;
    match v.get("preferred") {
        Some(Value::Number(n)) if n.as_i64() == Some(1) => Ok(Choice::First),
        Some(Value::Number(n)) if n.as_i64() == Some(2) => Ok(Choice::Second),
        Some(Value::String(s)) => match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(Choice::First),
            "2" => Ok(Choice::Second),
            "equal" => Ok(Choice::Equal),
            _ => Err(LlmError::Answer(answer.to_string())),
        },
        _ => Err(LlmError::Answer(answer.to_string())),
    }
}

/// Full request and response of one query attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub pair_id: String,
    pub orientation: Orientation,
    pub attempt: usize,
    pub prompt_version: String,
    pub request: Vec<ChatMessage>,
    pub response: Option<String>,
    pub error: Option<String>,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmOutcome {
    pub pair_id: String,
    pub record: Option<LabelRecord>,
    pub error: Option<String>,
    pub transcripts: Vec<Transcript>,
}

async fn ask(
    pair_id: &str,
    orientation: Orientation,
    messages: Vec<ChatMessage>,
    backend: &dyn ChatBackend,
    config: &LlmConfig,
    transcripts: &mut Vec<Transcript>,
) -> Result<Choice, LlmError> {
    let attempts = config.max_retries.max(1);
    let mut last = LlmError::Transport("no attempt made".into());
    for attempt in 1..=attempts {
        let result = backend.chat(&messages).await;
        let mut t = Transcript {
            pair_id: pair_id.to_string(),
            orientation,
            attempt,
            prompt_version: PROMPT_VERSION.to_string(),
            request: messages.clone(),
            response: None,
            error: None,
            timestamp: Utc::now(),
        };
        match result {
            Ok(text) => {
                let parsed = parse_choice(&text);
                t.response = Some(text);
                if let Err(e) = &parsed {
                    t.error = Some(e.to_string());
                }
                transcripts.push(t);
                return parsed;
            }
            Err(e) => {
                tracing::warn!(pair_id, attempt, error = %e, "llm query failed");
                t.error = Some(e.to_string());
                transcripts.push(t);
                if !e.is_retryable() {
                    return Err(e);
                }
                last = e;
            }
        }
    }
    Err(last)
}

/// Queries both orientations. Agreement gives the label; disagreement
/// gives 0 flagged `contradictory`; failures give an error outcome.
pub async fn llm_label(
    pair: &DesignPair,
    backend: &dyn ChatBackend,
    config: &LlmConfig,
) -> Result<LlmOutcome, LabelError> {
    let mut transcripts = Vec::new();
    let forward = build_prompt(&pair.left, &pair.right)?;
    let backward = build_prompt(&pair.right, &pair.left)?;
    let a = ask(&pair.id, Orientation::Original, forward, backend, config, &mut transcripts).await;
    let b = match &a {
        Ok(_) => ask(&pair.id, Orientation::Rotated, backward, backend, config, &mut transcripts).await,
        Err(e) => Err(e.clone()),
    };
    let (a, b) = match (a, b) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => {
            return Ok(LlmOutcome {
                pair_id: pair.id.clone(),
                record: None,
                error: Some(e.to_string()),
                transcripts,
            })
        }
    };
    let la = match a {
        Choice::First => Label::Left,
        Choice::Second => Label::Right,
        Choice::Equal => Label::Equal,
    };
    // chart 1 is the right design in the swapped query
    let lb = match b {
        Choice::First => Label::Right,
        Choice::Second => Label::Left,
        Choice::Equal => Label::Equal,
    };
    let record = if la == lb {
        LabelRecord::new(&pair.id, la, LabelProvenance::Llm, 1.0)
    } else {
        LabelRecord {
            flag: Some("contradictory".into()),
            ..LabelRecord::new(&pair.id, Label::Equal, LabelProvenance::Llm, 0.5)
        }
    };
    Ok(LlmOutcome {
        pair_id: pair.id.clone(),
        record: Some(record),
        error: None,
        transcripts,
    })
}

/// Labels every pair with at most `config.concurrency` pairs in flight.
/// Outcomes come back in input order.
pub async fn llm_label_all(
    pairs: &[DesignPair],
    backend: &dyn ChatBackend,
    config: &LlmConfig,
) -> Result<Vec<LlmOutcome>, LabelError> {
    // futures are built up front: a mapping closure inside the stream would
    // make the returned future fail to be Send for every lifetime
    let pending: Vec<_> = pairs.iter().map(|p| llm_label(p, backend, config)).collect();
    stream::iter(pending)
        .buffered(config.concurrency.max(1))
        .collect::<Vec<_>>()
        .await
        .into_iter()
        .collect()
}
