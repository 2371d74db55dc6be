//! A local chat-completions provider with scripted answering policies.
//!
//! The mock recognizes items by the SHA-256 of the decoded image and the
//! question line, so it needs the manifest it is serving. Different cases can
//! render identical images; the question tells them apart.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use base64::Engine;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tokio::sync::oneshot;
use vi_probe_core::answer::compliant_reply;
use vi_probe_core::catalog::{case, GroundTruth, VariantKind};
use vi_probe_core::dataset::{sha256_hex, Manifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum MockPolicy {
    /// Recites the classic answer whenever inducers are present; perceives
    /// inducer-free controls correctly.
    Template,
    /// Always gives the ground-truth answer.
    Oracle,
    /// Sees a change iff `|alpha| + noise * z > threshold`, z standard normal
    /// drawn per item; otherwise answers as if nothing changed.
    NoisyPerceiver { threshold: f64, noise: f64, seed: u64 },
    /// Replies without an `<answer>` block.
    Garbage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockConfig {
    #[serde(flatten)]
    pub policy: MockPolicy,
    /// Bearer token required on every request, when set.
    #[serde(default)]
    pub api_key: Option<String>,
    /// Answer 503 to the first `fail_first` attempts of each distinct request.
    #[serde(default)]
    pub fail_first: u32,
}

impl MockConfig {
    pub fn new(policy: MockPolicy) -> Self {
        MockConfig {
            policy,
            api_key: None,
            fail_first: 0,
        }
    }
}

#[derive(Debug, Clone)]
struct ItemInfo {
    item_id: String,
    case_id: u8,
    kind: VariantKind,
    alpha: f64,
    truth: GroundTruth,
    forward: String,
    reverse: String,
}

struct Shared {
    config: MockConfig,
    items: HashMap<String, Vec<ItemInfo>>,
    attempts: Mutex<HashMap<String, u32>>,
    requests: AtomicUsize,
}

/// A running mock provider. Shuts down on drop.
pub struct MockProvider {
    addr: SocketAddr,
    shared: Arc<Shared>,
    shutdown: Option<oneshot::Sender<()>>,
}

impl MockProvider {
    /// Binds to an ephemeral localhost port and serves on the current runtime.
    pub async fn start(
        manifest: &Manifest,
        dataset_root: &std::path::Path,
        config: MockConfig,
    ) -> std::io::Result<Self> {
        let mut items = HashMap::new();
        for item in &manifest.items {
            let sha = match &item.image_sha256 {
                Some(s) => s.clone(),
                None => sha256_hex(&std::fs::read(dataset_root.join(&item.image_path))?),
            };
            items.entry(sha).or_insert_with(Vec::new).push(ItemInfo {
                item_id: item.item_id.clone(),
                case_id: item.case_id,
                kind: item.variant_kind,
                alpha: item.alpha,
                truth: item.ground_truth,
                forward: item.question_forward.clone(),
                reverse: item.question_reverse.clone(),
            });
        }
        let shared = Arc::new(Shared {
            config,
            items,
            attempts: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        });
        let app = Router::new()
            .route("/chat/completions", post(complete))
            .route("/v1/chat/completions", post(complete))
            .with_state(shared.clone());
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        tokio::spawn(async move {
            let _ = axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = rx.await;
                })
                .await;
        });
        Ok(MockProvider {
            addr,
            shared,
            shutdown: Some(tx),
        })
    }

    /// Base URL for `ModelSpec::endpoint`.
    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// HTTP requests received so far, including rejected ones.
    pub fn request_count(&self) -> usize {
        self.shared.requests.load(Ordering::SeqCst)
    }
}

impl Drop for MockProvider {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
    }
}

fn error(status: StatusCode, message: &str) -> Response {
    (status, Json(json!({"error": {"message": message}}))).into_response()
}

async fn complete(State(shared): State<Arc<Shared>>, headers: HeaderMap, Json(body): Json<Value>) -> Response {
    shared.requests.fetch_add(1, Ordering::SeqCst);
    if let Some(key) = &shared.config.api_key {
        let expected = format!("Bearer {key}");
        if headers.get("authorization").and_then(|v| v.to_str().ok()) != Some(expected.as_str()) {
            return error(StatusCode::UNAUTHORIZED, "invalid api key");
        }
    }
    if shared.config.fail_first > 0 {
        let key = hex::encode(Sha256::digest(body.to_string().as_bytes()));
        let mut attempts = shared.attempts.lock().expect("attempt table");
        let n = attempts.entry(key).or_insert(0);
        *n += 1;
        if *n <= shared.config.fail_first {
            return error(StatusCode::SERVICE_UNAVAILABLE, "scripted failure");
        }
    }
    let Some((text, image)) = user_parts(&body) else {
        return error(StatusCode::BAD_REQUEST, "expected one text part and one image part");
    };
    let Some(candidates) = shared.items.get(&sha256_hex(&image)) else {
        return error(StatusCode::BAD_REQUEST, "unknown image");
    };
    let question = text.lines().next().unwrap_or("").trim();
    let matched = candidates.iter().find_map(|item| {
        if question == item.reverse {
            Some((item, true))
        } else if question == item.forward {
            Some((item, false))
        } else {
            None
        }
    });
    let Some((item, reverse)) = matched else {
        return error(StatusCode::BAD_REQUEST, "unknown question");
    };
    let content = match answer(&shared.config.policy, item, reverse) {
        Some(bit) => compliant_reply("mock reasoning", bit),
        None => "I cannot tell.".to_string(),
    };
    Json(json!({
        "id": format!("mock-{}", item.item_id),
        "object": "chat.completion",
        "model": body["model"],
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    }))
    .into_response()
}

fn user_parts(body: &Value) -> Option<(String, Vec<u8>)> {
    let user = body["messages"]
        .as_array()?
        .iter()
        .rev()
        .find(|m| m["role"] == "user")?;
    let parts = user["content"].as_array()?;
    let text = parts.iter().find_map(|p| p["text"].as_str())?.to_string();
    let url = parts.iter().find_map(|p| p["image_url"]["url"].as_str())?;
    let data = url.split_once("base64,")?.1;
    let image = base64::engine::general_purpose::STANDARD.decode(data).ok()?;
    Some((text, image))
}

fn answer(policy: &MockPolicy, item: &ItemInfo, reverse: bool) -> Option<u8> {
    let classic = case(item.case_id).ok()?.classic_forward_label;
    let flip = |forward: u8| if reverse { 1 - forward } else { forward };
    match policy {
        MockPolicy::Template if item.kind.is_control() => Some(flip(item.truth.y_forward)),
        MockPolicy::Template => Some(flip(classic)),
        MockPolicy::Oracle => Some(flip(item.truth.y_forward)),
        MockPolicy::NoisyPerceiver { threshold, noise, seed } => {
            // Same draw for both polarities of an item.
            let item_seed = u64::from_str_radix(&item.item_id[..16.min(item.item_id.len())], 16).unwrap_or(0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ item_seed);
            let z: f64 = StandardNormal.sample(&mut rng);
            let sees_change = item.alpha.abs() + noise * z > *threshold;
            Some(flip(if sees_change { item.truth.y_forward } else { classic }))
        }
        MockPolicy::Garbage => None,
    }
}
