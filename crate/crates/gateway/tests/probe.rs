use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use async_trait::async_trait;
use vi_probe_core::answer::{compliant_reply, Answer};
use vi_probe_core::catalog::VariantKind;
use vi_probe_core::dataset::{build_dataset, DatasetConfig, Manifest};
use vi_probe_core::prompt::PromptPlan;
use vi_probe_gateway::mock::{MockConfig, MockPolicy, MockProvider};
use vi_probe_gateway::store::read_log;
use vi_probe_gateway::{
    http_transport, probe, ChatRequest, ModelSpec, ProbeError, Transport, TransportError, LOG_FILE,
};

fn small_dataset(dir: &Path, n: usize) -> Manifest {
    let mut config = DatasetConfig::new(dir);
    config.cases = vec![1, 9, 20];
    config.kinds = vec![VariantKind::O, VariantKind::P, VariantKind::OC];
    config.alpha_grid = vec![-0.6, 0.6];
    config.image_size = 128;
    let mut manifest = build_dataset(&config).unwrap();
    manifest.items.truncate(n);
    manifest
}

fn spec(endpoint: &str) -> ModelSpec {
    let mut s = ModelSpec::new("mock-vlm", endpoint);
    s.backoff_base_ms = 1;
    s
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn oracle_run_and_cached_rerun() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 10);
    let mock = MockProvider::start(&manifest, data.path(), MockConfig::new(MockPolicy::Oracle))
        .await
        .unwrap();
    let s = spec(&mock.endpoint());
    let summary = probe(
        &manifest,
        data.path(),
        &s,
        &PromptPlan::default(),
        out.path(),
        http_transport(&s).unwrap(),
    )
    .await
    .unwrap();
    assert_eq!(
        (summary.planned, summary.requested, summary.succeeded, summary.log_rows),
        (20, 20, 20, 20)
    );

    let log = read_log(&out.path().join(LOG_FILE)).unwrap();
    assert_eq!(log.len(), 20);
    for row in &log {
        let item = manifest.get(&row.item_id).unwrap();
        assert_eq!(
            row.answer(),
            Answer::from_bit(row.prompt_variant.expected_answer(&item.ground_truth))
        );
        assert_eq!(row.attempts, 1);
    }

    let before = mock.request_count();
    let again = probe(
        &manifest,
        data.path(),
        &s,
        &PromptPlan::default(),
        out.path(),
        http_transport(&s).unwrap(),
    )
    .await
    .unwrap();
    assert_eq!((again.cached, again.requested), (20, 0));
    assert_eq!(mock.request_count(), before);
    assert_eq!(read_log(&out.path().join(LOG_FILE)).unwrap(), log);
}

#[tokio::test]
async fn transient_failures_are_retried() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 2);
    let mut config = MockConfig::new(MockPolicy::Template);
    config.fail_first = 2;
    let mock = MockProvider::start(&manifest, data.path(), config).await.unwrap();
    let s = spec(&mock.endpoint());
    let summary = probe(
        &manifest,
        data.path(),
        &s,
        &PromptPlan::default(),
        out.path(),
        http_transport(&s).unwrap(),
    )
    .await
    .unwrap();
    assert_eq!(summary.succeeded, 4);
    let log = read_log(&out.path().join(LOG_FILE)).unwrap();
    assert!(log.iter().all(|r| r.is_ok() && r.attempts == 3));
    assert_eq!(mock.request_count(), 12);
}

#[tokio::test]
async fn exhausted_retries_are_logged_as_failures() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 1);
    let mut config = MockConfig::new(MockPolicy::Template);
    config.fail_first = 10;
    let mock = MockProvider::start(&manifest, data.path(), config).await.unwrap();
    let mut s = spec(&mock.endpoint());
    s.max_attempts = 3;
    let summary = probe(
        &manifest,
        data.path(),
        &s,
        &PromptPlan::default(),
        out.path(),
        http_transport(&s).unwrap(),
    )
    .await
    .unwrap();
    assert_eq!((summary.failed, summary.log_rows), (2, 2));
    let log = read_log(&out.path().join(LOG_FILE)).unwrap();
    assert!(log
        .iter()
        .all(|r| !r.is_ok() && r.attempts == 3 && r.answer() == Answer::Invalid));
}

#[tokio::test]
async fn bad_credentials_abort_the_run() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 4);
    let mut config = MockConfig::new(MockPolicy::Oracle);
    config.api_key = Some("right".into());
    let mock = MockProvider::start(&manifest, data.path(), config).await.unwrap();
    let mut s = spec(&mock.endpoint());
    s.max_concurrency = 1;
    let transport = Arc::new(vi_probe_gateway::HttpTransport::new(&s, Some("wrong".into())).unwrap());
    let err = probe(
        &manifest,
        data.path(),
        &s,
        &PromptPlan::default(),
        out.path(),
        transport,
    )
    .await
    .unwrap_err();
    assert!(matches!(err, ProbeError::Auth { .. }), "{err}");
    assert_eq!(mock.request_count(), 1);

    let good = Arc::new(vi_probe_gateway::HttpTransport::new(&s, Some("right".into())).unwrap());
    let ok = probe(&manifest, data.path(), &s, &PromptPlan::default(), out.path(), good)
        .await
        .unwrap();
    assert_eq!(ok.succeeded, 8);
}

struct Gauge {
    current: AtomicUsize,
    peak: AtomicUsize,
}

#[async_trait]
impl Transport for Gauge {
    async fn complete(&self, _request: &ChatRequest) -> Result<String, TransportError> {
        let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(now, Ordering::SeqCst);
        tokio::time::sleep(Duration::from_millis(15)).await;
        self.current.fetch_sub(1, Ordering::SeqCst);
        Ok(compliant_reply("", 1))
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn concurrency_is_bounded() {
    let data = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 12);
    for limit in [1, 3] {
        let out = tempfile::tempdir().unwrap();
        let gauge = Arc::new(Gauge {
            current: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let mut s = spec("http://unused");
        s.max_concurrency = limit;
        let summary = probe(
            &manifest,
            data.path(),
            &s,
            &PromptPlan::default(),
            out.path(),
            gauge.clone(),
        )
        .await
        .unwrap();
        assert_eq!(summary.succeeded, 24);
        assert_eq!(gauge.peak.load(Ordering::SeqCst), limit);
    }
}

#[tokio::test]
async fn instructional_plan_adds_system_prompt_rows() {
    let data = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let manifest = small_dataset(data.path(), 3);
    let mock = MockProvider::start(&manifest, data.path(), MockConfig::new(MockPolicy::Garbage))
        .await
        .unwrap();
    let s = spec(&mock.endpoint());
    let plan = PromptPlan {
        variants: vi_probe_core::prompt::PromptVariant::ALL.to_vec(),
    };
    let summary = probe(
        &manifest,
        data.path(),
        &s,
        &plan,
        out.path(),
        http_transport(&s).unwrap(),
    )
    .await
    .unwrap();
    assert_eq!(summary.log_rows, 12);
    let log = read_log(&out.path().join(LOG_FILE)).unwrap();
    assert!(log.iter().all(|r| r.is_ok() && r.answer() == Answer::Invalid));
}
