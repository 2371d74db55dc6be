use std::time::Duration;

use async_trait::async_trait;
use base64::Engine;
use serde_json::{json, Value};
use thiserror::Error;

use crate::ModelSpec;

/// One chat-completions call: optional system text, user text, one PNG image.
#[derive(Debug, Clone)]
pub struct ChatRequest {
    pub model: String,
    pub system: Option<String>,
    pub user: String,
    pub image_png: std::sync::Arc<Vec<u8>>,
    pub temperature: Option<f64>,
}

impl ChatRequest {
    /// Wire body in the chat-completions shape, image as a base64 data URL.
    pub fn body(&self) -> Value {
        let image = base64::engine::general_purpose::STANDARD.encode(self.image_png.as_slice());
        let mut messages = Vec::new();
        if let Some(system) = &self.system {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({
            "role": "user",
            "content": [
                {"type": "text", "text": self.user},
                {"type": "image_url", "image_url": {"url": format!("data:image/png;base64,{image}")}},
            ],
        }));
        let mut body = json!({"model": self.model, "messages": messages});
        if let Some(t) = self.temperature {
            body["temperature"] = json!(t);
        }
        body
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TransportError {
    #[error("authentication rejected (HTTP {0})")]
    Auth(u16),
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("request timed out")]
    Timeout,
    #[error("server error (HTTP {0})")]
    Server(u16),
    #[error("network error: {0}")]
    Network(String),
    #[error("request rejected (HTTP {status}): {body}")]
    Rejected { status: u16, body: String },
    #[error("unreadable response: {0}")]
    Protocol(String),
}

impl TransportError {
    pub fn is_retryable(&self) -> bool {
        matches!(
            self,
            TransportError::RateLimited { .. }
                | TransportError::Timeout
                | TransportError::Server(_)
                | TransportError::Network(_)
        )
    }
}

#[async_trait]
pub trait Transport: Send + Sync {
    /// Returns the assistant text of one completion.
    async fn complete(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

/// Extracts the assistant text from a chat-completions response.
pub fn response_text(body: &Value) -> Result<String, TransportError> {
    let content = &body["choices"][0]["message"]["content"];
    match content {
        Value::String(s) => Ok(s.clone()),
        Value::Array(parts) => Ok(parts
            .iter()
            .filter_map(|p| p["text"].as_str())
            .collect::<Vec<_>>()
            .join("")),
        _ => Err(TransportError::Protocol("no choices[0].message.content".into())),
    }
}

pub struct HttpTransport {
    client: reqwest::Client,
    url: String,
    api_key: Option<String>,
}

impl HttpTransport {
    pub fn new(spec: &ModelSpec, api_key: Option<String>) -> Result<Self, TransportError> {
        let client = reqwest::Client::builder()
            .timeout(Duration::from_secs(spec.timeout_secs))
            .build()
            .map_err(|e| TransportError::Network(e.to_string()))?;
        Ok(HttpTransport {
            client,
            url: format!("{}/chat/completions", spec.endpoint.trim_end_matches('/')),
            api_key,
        })
    }
}

#[async_trait]
impl Transport for HttpTransport {
    async fn complete(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let mut req = self.client.post(&self.url).json(&request.body());
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().await.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Network(e.to_string())
            }
        })?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = resp.text().await.map_err(|e| {
            if e.is_timeout() {
                TransportError::Timeout
            } else {
                TransportError::Network(e.to_string())
            }
        })?;
        match status {
            200..=299 => {
                let body: Value = serde_json::from_str(&text).map_err(|e| TransportError::Protocol(e.to_string()))?;
                response_text(&body)
            }
            401 | 403 => Err(TransportError::Auth(status)),
            408 => Err(TransportError::Timeout),
            429 => Err(TransportError::RateLimited { retry_after }),
            500..=599 => Err(TransportError::Server(status)),
            _ => Err(TransportError::Rejected {
                status,
                body: text.chars().take(300).collect(),
            }),
        }
    }
}
