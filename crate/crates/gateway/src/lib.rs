//! Probing vision-language model endpoints with the dataset's images and prompts.
//!
//! Every (item, prompt variant) becomes one chat-completions request. Requests
//! are content-addressed; a response already stored under the same hash is
//! never requested again, so interrupted runs resume where they stopped.

pub mod limiter;
pub mod mock;
pub mod store;
pub mod transport;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tokio::sync::{Mutex, Semaphore};
use tokio::task::JoinSet;
use vi_probe_core::answer::{RawResponse, TransportStatus};
use vi_probe_core::dataset::{sha256_hex, Manifest};
use vi_probe_core::prompt::{prompt_for, PromptError, PromptPlan, PromptText, PromptVariant};

pub use limiter::RateLimiter;
pub use store::ResponseStore;
pub use transport::{ChatRequest, HttpTransport, Transport, TransportError};
pub use vi_probe_core::answer::{parse_answer, Answer, ParsedAnswer};

pub const STORE_FILE: &str = "responses.jsonl";
pub const LOG_FILE: &str = "log.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    /// Adapter name; only the chat-completions wire format is built in.
    #[serde(default = "default_provider")]
    pub provider: String,
    pub model: String,
    /// Base URL; `/chat/completions` is appended.
    pub endpoint: String,
    /// Environment variable holding the API key.
    #[serde(default)]
    pub auth_env: Option<String>,
    /// Left unset for models without temperature control.
    #[serde(default)]
    pub temperature: Option<f64>,
    #[serde(default = "default_concurrency")]
    pub max_concurrency: usize,
    #[serde(default)]
    pub rate_limit_per_min: Option<u32>,
    #[serde(default = "default_attempts")]
    pub max_attempts: u32,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
}

fn default_provider() -> String {
    "chat-completions".into()
}
fn default_concurrency() -> usize {
    4
}
fn default_attempts() -> u32 {
    5
}
fn default_timeout() -> u64 {
    120
}
fn default_backoff() -> u64 {
    500
}

impl ModelSpec {
    pub fn new(model: &str, endpoint: &str) -> Self {
        ModelSpec {
            provider: default_provider(),
            model: model.into(),
            endpoint: endpoint.into(),
            auth_env: None,
            temperature: None,
            max_concurrency: default_concurrency(),
            rate_limit_per_min: None,
            max_attempts: default_attempts(),
            timeout_secs: default_timeout(),
            backoff_base_ms: default_backoff(),
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: &str| Err(ProbeError::Config(format!("model {}: {m}", self.model)));
        if self.max_concurrency < 1 {
            return bad("max_concurrency must be at least 1");
        }
        if self.max_attempts < 1 {
            return bad("max_attempts must be at least 1");
        }
        if self.rate_limit_per_min == Some(0) {
            return bad("rate_limit_per_min must be positive");
        }
        if self.provider != "chat-completions" {
            return bad("unknown provider adapter");
        }
        Ok(())
    }

    /// Resolves the API key from the environment.
    pub fn api_key(&self) -> Result<Option<String>, ProbeError> {
        match &self.auth_env {
            None => Ok(None),
            Some(var) => std::env::var(var)
                .map(Some)
                .map_err(|_| ProbeError::Credentials(var.clone())),
        }
    }

    /// Filesystem-safe model name.
    pub fn slug(&self) -> String {
        self.model
            .chars()
            .map(|c| {
                if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
                    c
                } else {
                    '_'
                }
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe config: {0}")]
    Config(String),
    #[error("environment variable {0} is not set")]
    Credentials(String),
    #[error("authentication failed for model {model}: {source}")]
    Auth { model: String, source: TransportError },
    #[error("item {item}: {reason}")]
    Item { item: String, reason: String },
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// Cache key over everything that determines a response.
pub fn request_hash(model: &str, image_sha256: &str, prompt: &PromptText, temperature: Option<f64>) -> String {
    let key = serde_json::json!({
        "model": model,
        "image": image_sha256,
        "prompt": prompt.fingerprint(),
        "params": {"temperature": temperature},
    });
    hex::encode(Sha256::digest(key.to_string().as_bytes()))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub planned: usize,
    pub cached: usize,
    pub requested: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub log_rows: usize,
}

struct Job {
    item_id: String,
    variant: PromptVariant,
    request: ChatRequest,
    hash: String,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

fn backoff(spec: &ModelSpec, attempt: u32, err: &TransportError) -> Duration {
    let exp = spec
        .backoff_base_ms
        .saturating_mul(1u64 << (attempt - 1).min(16))
        .min(30_000);
    let jittered = (exp as f64 * rand::rng().random_range(0.5..=1.0)) as u64;
    let base = Duration::from_millis(jittered);
    match err {
        TransportError::RateLimited { retry_after: Some(d) } => base.max(*d),
        _ => base,
    }
}

/// Sends one job with retries. `Err` only for authentication failures.
async fn run_job(
    job: &Job,
    spec: &ModelSpec,
    transport: &dyn Transport,
    limiter: Option<&RateLimiter>,
) -> Result<RawResponse, TransportError> {
    let started = Instant::now();
    let mut attempts = 0;
    let outcome = loop {
        attempts += 1;
        if let Some(l) = limiter {
            l.acquire().await;
        }
        match transport.complete(&job.request).await {
            Ok(text) => break Ok(text),
            Err(e @ TransportError::Auth(_)) => return Err(e),
            Err(e) if e.is_retryable() && attempts < spec.max_attempts => {
                tokio::time::sleep(backoff(spec, attempts, &e)).await;
            }
            Err(e) => break Err(e),
        }
    };
    let (raw_text, status) = match outcome {
        Ok(text) => (text, TransportStatus::Ok),
        Err(e) => (String::new(), TransportStatus::Failed { error: e.to_string() }),
    };
    Ok(RawResponse {
        item_id: job.item_id.clone(),
        prompt_variant: job.variant,
        model_id: spec.model.clone(),
        request_hash: job.hash.clone(),
        raw_text,
        latency_ms: started.elapsed().as_millis() as u64,
        timestamp: now_ms(),
        status,
        attempts,
    })
}

fn build_jobs(
    manifest: &Manifest,
    dataset_root: &Path,
    spec: &ModelSpec,
    plan: &PromptPlan,
) -> Result<Vec<Job>, ProbeError> {
    let mut jobs = Vec::new();
    for item in &manifest.items {
        let path = dataset_root.join(&item.image_path);
        let bytes = std::fs::read(&path).map_err(|source| ProbeError::Io {
            path: path.clone(),
            source,
        })?;
        let sha = sha256_hex(&bytes);
        if item.image_sha256.as_deref().is_some_and(|s| s != sha) {
            return Err(ProbeError::Item {
                item: item.item_id.clone(),
                reason: "image bytes do not match the manifest hash".into(),
            });
        }
        let image = Arc::new(bytes);
        for variant in plan.normalized() {
            let prompt = prompt_for(item.case_id, variant)?;
            jobs.push(Job {
                item_id: item.item_id.clone(),
                variant,
                hash: request_hash(&spec.model, &sha, &prompt, spec.temperature),
                request: ChatRequest {
                    model: spec.model.clone(),
                    system: prompt.system,
                    user: prompt.user,
                    image_png: image.clone(),
                    temperature: spec.temperature,
                },
            });
        }
    }
    Ok(jobs)
}

/// Probes every manifest item under every plan variant, skipping cached
/// requests, then writes the sorted log next to the store in `out_dir`.
pub async fn probe(
    manifest: &Manifest,
    dataset_root: &Path,
    spec: &ModelSpec,
    plan: &PromptPlan,
    out_dir: &Path,
    transport: Arc<dyn Transport>,
) -> Result<ProbeSummary, ProbeError> {
    spec.validate()?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ProbeError::Io { path, source }
    };
    let store_path = out_dir.join(STORE_FILE);
    let existing = store::read_rows(&store_path).map_err(io(&store_path))?;
    let cache = store::cached(&existing);
    let jobs = build_jobs(manifest, dataset_root, spec, plan)?;
    let mut summary = ProbeSummary {
        planned: jobs.len(),
        ..ProbeSummary::default()
    };
    let (hits, pending): (Vec<Job>, Vec<Job>) = jobs.into_iter().partition(|j| cache.contains_key(&j.hash));
    summary.cached = hits.len();

    let mut store = ResponseStore::open(&store_path).map_err(io(&store_path))?;
    // Identical image and prompt under another item id: reuse the stored answer.
    let own: BTreeSet<(&str, PromptVariant, &str)> = existing
        .iter()
        .filter(|r| r.is_ok())
        .map(|r| (r.item_id.as_str(), r.prompt_variant, r.request_hash.as_str()))
        .collect();
    for job in &hits {
        if !own.contains(&(job.item_id.as_str(), job.variant, job.hash.as_str())) {
            let mut row = cache[&job.hash].clone();
            row.item_id = job.item_id.clone();
            row.prompt_variant = job.variant;
            row.attempts = 0;
            row.latency_ms = 0;
            store.append(&row).map_err(io(&store_path))?;
        }
    }

    let store = Arc::new(Mutex::new(store));
    let semaphore = Arc::new(Semaphore::new(spec.max_concurrency));
    let limiter = spec.rate_limit_per_min.map(|r| Arc::new(RateLimiter::per_minute(r)));
    let abort = Arc::new(AtomicBool::new(false));
    let spec_arc = Arc::new(spec.clone());
    let mut set = JoinSet::new();
    for job in pending {
        let (store, semaphore, limiter, abort, spec, transport) = (
            store.clone(),
            semaphore.clone(),
            limiter.clone(),
            abort.clone(),
            spec_arc.clone(),
            transport.clone(),
        );
        set.spawn(async move {
            let _permit = semaphore.acquire_owned().await.expect("semaphore open");
            if abort.load(Ordering::SeqCst) {
                return Ok(None);
            }
            match run_job(&job, &spec, transport.as_ref(), limiter.as_deref()).await {
                Ok(row) => {
                    store.lock().await.append(&row).map_err(|source| ProbeError::Io {
                        path: PathBuf::from(STORE_FILE),
                        source,
                    })?;
                    Ok(Some(row.is_ok()))
                }
                Err(e) => {
                    abort.store(true, Ordering::SeqCst);
                    Err(ProbeError::Auth {
                        model: spec.model.clone(),
                        source: e,
                    })
                }
            }
        });
    }
    let mut first_error = None;
    while let Some(joined) = set.join_next().await {
        match joined.expect("probe task panicked") {
            Ok(Some(ok)) => {
                summary.requested += 1;
                if ok {
                    summary.succeeded += 1;
                } else {
                    summary.failed += 1;
                }
            }
            Ok(None) => {}
            Err(e) => {
                set.abort_all();
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    let rows = store::read_rows(&store_path).map_err(io(&store_path))?;
    let log = store::finalize(&rows);
    let log_path = out_dir.join(LOG_FILE);
    store::write_log(&log_path, &log).map_err(io(&log_path))?;
    summary.log_rows = log.len();
    Ok(summary)
}

/// Builds the transport for a model spec.
pub fn http_transport(spec: &ModelSpec) -> Result<Arc<dyn Transport>, ProbeError> {
    Ok(Arc::new(HttpTransport::new(spec, spec.api_key()?)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_hash_depends_on_every_input() {
        let p = PromptText {
            system: None,
            user: "q".into(),
        };
        let base = request_hash("m", "abc", &p, None);
        assert_eq!(base, request_hash("m", "abc", &p, None));
        assert_ne!(base, request_hash("m2", "abc", &p, None));
        assert_ne!(base, request_hash("m", "abd", &p, None));
        assert_ne!(base, request_hash("m", "abc", &p, Some(0.0)));
        let s = PromptText {
            system: Some("s".into()),
            user: "q".into(),
        };
        assert_ne!(base, request_hash("m", "abc", &s, None));
    }

    #[test]
    fn spec_validation() {
        let mut s = ModelSpec::new("a/b:c", "http://x");
        s.validate().unwrap();
        assert_eq!(s.slug(), "a_b_c");
        s.max_concurrency = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn backoff_grows_and_respects_retry_after() {
        let mut s = ModelSpec::new("m", "http://x");
        s.backoff_base_ms = 100;
        let d1 = backoff(&s, 1, &TransportError::Timeout);
        let d3 = backoff(&s, 3, &TransportError::Timeout);
        assert!(d1 <= Duration::from_millis(100) && d1 >= Duration::from_millis(50));
        assert!(d3 >= Duration::from_millis(200));
        let r = backoff(
            &s,
            1,
            &TransportError::RateLimited {
                retry_after: Some(Duration::from_secs(2)),
            },
        );
        assert!(r >= Duration::from_secs(2));
    }
}
