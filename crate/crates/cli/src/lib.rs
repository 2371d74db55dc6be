//! Pipeline orchestration behind the `vi-probe` binary.
//!
//! Every subcommand reads one config file and writes under its output
//! directory:
//!
//! ```text
//! <out>/dataset/            manifest.jsonl, images/, scenes/, prompts.json
//! <out>/responses/<model>/  responses.jsonl (append-only), log.jsonl
//! <out>/scores/             <model>.json, table2.csv, table2.json, human.json
//! <out>/report/             table2.*, table3.*, dose_response.svg, pfc_decomposition.svg
//! <out>/study/journal.jsonl
//! ```

pub mod config;
pub mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::RwLock;
use vi_probe_core::catalog::{Category, VariantKind};
use vi_probe_core::dataset::{build_dataset, validate_manifest, Manifest, MANIFEST_FILE};
use vi_probe_core::metrics::{
    condition_accuracy, crossing_magnitude, dose_response, human_threshold, intervention_effect, pair_counts,
    pair_responses, susceptibility_gap, ConditionSlice, DetectionRate, DoseResponse, MetricReport, PairCounts,
    PairingIssue, ResponsePair,
};
use vi_probe_gateway::mock::MockProvider;
use vi_probe_gateway::store::read_log;
use vi_probe_gateway::{http_transport, probe, ModelSpec, ProbeError, ProbeSummary, LOG_FILE};
use vi_probe_study::journal::{read_entries, Entry};
use vi_probe_study::{detection_rates, Study, StudyOptions};

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Transport(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Transport(_) => 2,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_error(path, e))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_error(path, e))
}

pub fn load_manifest(config: &RunConfig) -> Result<Manifest, CliError> {
    let path = config.dataset_dir().join(MANIFEST_FILE);
    if !path.exists() {
        return Err(CliError::Validation(format!(
            "{} not found; run `vi-probe gen` first",
            path.display()
        )));
    }
    Manifest::load(&path).map_err(|e| CliError::Validation(e.to_string()))
}

/// Builds and validates the dataset. Returns the manifest path.
pub fn cmd_gen(config: &RunConfig) -> Result<PathBuf, CliError> {
    let manifest = build_dataset(&config.dataset).map_err(|e| CliError::Validation(e.to_string()))?;
    let report = validate_manifest(&manifest, &config.dataset_dir());
    if !report.is_empty() {
        let lines: Vec<String> = report
            .violations
            .iter()
            .take(20)
            .map(|v| format!("  {:?} {}: {}", v.kind, v.item_id.as_deref().unwrap_or("-"), v.detail))
            .collect();
        return Err(CliError::Validation(format!(
            "{} manifest violations:\n{}",
            report.violations.len(),
            lines.join("\n")
        )));
    }
    Ok(config.dataset_dir().join(MANIFEST_FILE))
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelRun {
    pub model: String,
    pub log: PathBuf,
    pub summary: ProbeSummary,
}

fn probe_error(e: ProbeError) -> CliError {
    match e {
        ProbeError::Auth { .. } | ProbeError::Transport(_) => CliError::Transport(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

/// Probes every configured model (and mock) over the dataset.
pub async fn cmd_probe(config: &RunConfig) -> Result<Vec<ModelRun>, CliError> {
    let manifest = load_manifest(config)?;
    if manifest.items.iter().any(|i| i.image_sha256.is_none()) {
        return Err(CliError::Validation(
            "the dataset was planned with dry_run; render it before probing".into(),
        ));
    }
    if config.probe.models.is_empty() && config.probe.mocks.is_empty() {
        return Err(CliError::Validation("no models configured under [probe]".into()));
    }
    let root = config.dataset_dir();
    let mut runs = Vec::new();
    let mut failed = 0;
    for spec in &config.probe.models {
        let transport = http_transport(spec).map_err(probe_error)?;
        let out = config.responses_dir().join(spec.slug());
        let summary = probe(&manifest, &root, spec, &config.probe.plan, &out, transport)
            .await
            .map_err(probe_error)?;
        failed += summary.failed;
        runs.push(ModelRun {
            model: spec.model.clone(),
            log: out.join(LOG_FILE),
            summary,
        });
    }
    for mock in &config.probe.mocks {
        let provider = MockProvider::start(&manifest, &root, mock.config.clone())
            .await
            .map_err(|e| CliError::Transport(format!("mock provider: {e}")))?;
        let mut spec = ModelSpec::new(&mock.model, &provider.endpoint());
        spec.max_concurrency = mock.max_concurrency;
        spec.backoff_base_ms = 10;
        let out = config.responses_dir().join(spec.slug());
        let transport = vi_probe_gateway::HttpTransport::new(&spec, mock.config.api_key.clone())
            .map_err(|e| CliError::Transport(e.to_string()))?;
        let summary = probe(&manifest, &root, &spec, &config.probe.plan, &out, Arc::new(transport))
            .await
            .map_err(probe_error)?;
        failed += summary.failed;
        runs.push(ModelRun {
            model: spec.model.clone(),
            log: out.join(LOG_FILE),
            summary,
        });
    }
    if failed > 0 {
        return Err(CliError::Transport(format!(
            "{failed} requests still failing after retries; rerun `vi-probe probe` to retry them"
        )));
    }
    Ok(runs)
}

/// Accuracy change from an intervention, per condition.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Interventions {
    pub categories: Vec<Category>,
    pub hint_o: Option<f64>,
    pub hint_p: Option<f64>,
    pub prompt_o: Option<f64>,
    pub prompt_p: Option<f64>,
    pub prompt_oc: Option<f64>,
    pub prompt_pc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelScore {
    pub model_id: String,
    /// Absent when one of the four main conditions has no pairs.
    pub report: Option<MetricReport>,
    pub counts: PairCounts,
    pub dose_response: Vec<DoseResponse>,
    /// Smallest |alpha| at which perturbed accuracy reaches 50%.
    pub p_crossing_50: Option<f64>,
    pub susceptibility_gap: BTreeMap<Category, f64>,
    pub interventions: Interventions,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanBaseline {
    pub judgments: usize,
    pub rates: Vec<DetectionRate>,
    pub alpha_star: Option<f64>,
    pub note: Option<String>,
}

fn describe_issue(issue: &PairingIssue) -> String {
    match issue {
        PairingIssue::MissingPolarity {
            item_id,
            instructional,
            missing,
        } => format!(
            "item {item_id}: no {missing:?} answer{}; pair skipped",
            if *instructional { " (instructional)" } else { "" }
        ),
        PairingIssue::DuplicateRows {
            item_id,
            prompt_variant,
            rows,
        } => format!("item {item_id}: {rows} rows for {}; newest kept", prompt_variant.code()),
        PairingIssue::UnknownItem { item_id } => format!("item {item_id}: not in the manifest; ignored"),
    }
}

fn effect(pairs: &[ResponsePair], with: ConditionSlice, without: ConditionSlice) -> Option<f64> {
    let w = condition_accuracy(pairs, &with).ok()?;
    let wo = condition_accuracy(pairs, &without).ok()?;
    intervention_effect(&w, &wo).ok()
}

/// Scores one model's log against the manifest.
pub fn score_model(
    model_id: &str,
    log: &[vi_probe_core::answer::RawResponse],
    manifest: &Manifest,
    config: &RunConfig,
) -> ModelScore {
    let pairing = pair_responses(log, &manifest.items);
    let pairs = pairing.pairs;
    let mut warnings: Vec<String> = pairing.issues.iter().map(describe_issue).collect();
    let report = match MetricReport::compute(model_id, &pairs, &config.score.metric_config()) {
        Ok(r) => Some(r),
        Err(e) => {
            warnings.push(format!("no Table-2 row: {e}"));
            None
        }
    };
    let grid = config.alpha_grid();
    let dose: Vec<DoseResponse> = [VariantKind::P, VariantKind::PC, VariantKind::PH]
        .into_iter()
        .map(|k| dose_response(&pairs, k, &grid, false))
        .filter(|d| !d.points.is_empty())
        .collect();
    let p_crossing_50 = dose
        .iter()
        .find(|d| d.condition == VariantKind::P)
        .and_then(|d| crossing_magnitude(d, 0.5));
    let cats = &config.score.intervention_categories;
    let slice = |k| ConditionSlice::of(k).with_categories(cats);
    let interventions = Interventions {
        categories: cats.clone(),
        hint_o: effect(&pairs, slice(VariantKind::OH), slice(VariantKind::O)),
        hint_p: effect(&pairs, slice(VariantKind::PH), slice(VariantKind::P)),
        prompt_o: effect(&pairs, slice(VariantKind::O).instructional(true), slice(VariantKind::O)),
        prompt_p: effect(&pairs, slice(VariantKind::P).instructional(true), slice(VariantKind::P)),
        prompt_oc: effect(
            &pairs,
            slice(VariantKind::OC).instructional(true),
            slice(VariantKind::OC),
        ),
        prompt_pc: effect(
            &pairs,
            slice(VariantKind::PC).instructional(true),
            slice(VariantKind::PC),
        ),
    };
    ModelScore {
        model_id: model_id.to_string(),
        report,
        counts: pair_counts(&pairs),
        dose_response: dose,
        p_crossing_50,
        susceptibility_gap: susceptibility_gap(&pairs),
        interventions,
        warnings,
    }
}

/// Human detection rates from the study journal, if one exists.
pub fn human_baseline(config: &RunConfig) -> Result<Option<HumanBaseline>, CliError> {
    let path = config.journal_path();
    if !path.exists() {
        return Ok(None);
    }
    let entries = read_entries(&path).map_err(|e| io_error(&path, e))?;
    let records: Vec<_> = entries
        .into_iter()
        .filter_map(|e| match e {
            Entry::Judgment(j) => Some(j),
            Entry::Session(_) => None,
        })
        .collect();
    let rates = detection_rates(&records);
    let (alpha_star, note) = match human_threshold(&rates) {
        Ok(a) => (a, None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(Some(HumanBaseline {
        judgments: records.len(),
        rates,
        alpha_star,
        note,
    }))
}

/// Scores every probed model. Returns the per-model scores in model order.
pub fn cmd_score(config: &RunConfig) -> Result<Vec<ModelScore>, CliError> {
    let manifest = load_manifest(config)?;
    let dir = config.responses_dir();
    let mut logs: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok())
            .map(|e| e.path().join(LOG_FILE))
            .filter(|p| p.exists())
            .collect(),
        Err(_) => Vec::new(),
    };
    if logs.is_empty() {
        return Err(CliError::Validation(format!(
            "no response logs under {}; run `vi-probe probe` first",
            dir.display()
        )));
    }
    logs.sort();
    let mut scores = Vec::new();
    for path in logs {
        let log = read_log(&path).map_err(|e| io_error(&path, e))?;
        let model_id = log.first().map(|r| r.model_id.clone()).unwrap_or_else(|| {
            path.parent()
                .and_then(|p| p.file_name())
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
        });
        let score = score_model(&model_id, &log, &manifest, config);
        let slug = path
            .parent()
            .and_then(|p| p.file_name())
            .expect("log in a model directory");
        write_json(
            &config.scores_dir().join(format!("{}.json", slug.to_string_lossy())),
            &score,
        )?;
        scores.push(score);
    }
    let rows: Vec<&MetricReport> = scores.iter().filter_map(|s| s.report.as_ref()).collect();
    write_file(
        &config.scores_dir().join("table2.csv"),
        report::table2_csv(&rows).as_bytes(),
    )?;
    write_json(&config.scores_dir().join("table2.json"), &rows)?;
    if let Some(human) = human_baseline(config)? {
        write_json(&config.scores_dir().join("human.json"), &human)?;
    }
    Ok(scores)
}

pub fn load_scores(config: &RunConfig) -> Result<(Vec<ModelScore>, Option<HumanBaseline>), CliError> {
    let dir = config.scores_dir();
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && !matches!(p.file_stem().and_then(|s| s.to_str()), Some("table2" | "human"))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no scores under {}; run `vi-probe score` first",
            dir.display()
        )));
    }
    paths.sort();
    let scores = paths
        .iter()
        .map(|p| read_json(p))
        .collect::<Result<Vec<ModelScore>, _>>()?;
    let human_path = dir.join("human.json");
    let human = if human_path.exists() {
        Some(read_json(&human_path)?)
    } else {
        None
    };
    Ok((scores, human))
}

/// Writes tables and plots. Returns the files written.
pub fn cmd_report(config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let (scores, human) = load_scores(config)?;
    report::write_report(&config.report_dir(), &scores, human.as_ref())
}

/// Serves the study until the process is stopped.
pub async fn cmd_study(config: &RunConfig) -> Result<(), CliError> {
    let manifest = load_manifest(config)?;
    let options = StudyOptions {
        reverse_questions: config.study.reverse_questions,
    };
    let study = Study::open(&manifest, &config.dataset_dir(), &config.journal_path(), options)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    println!("study service listening on http://{}", config.study.addr);
    vi_probe_study::serve(
        Arc::new(RwLock::new(study)),
        config.study.addr,
        config.study.ui_dir.as_deref(),
    )
    .await
    .map_err(|e| CliError::Transport(format!("{}: {e}", config.study.addr)))
}
