use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use vi_probe_core::catalog::{Alpha, Category};
use vi_probe_core::dataset::DatasetConfig;
use vi_probe_core::metrics::MetricConfig;
use vi_probe_core::prompt::PromptPlan;
use vi_probe_gateway::mock::MockConfig;
use vi_probe_gateway::ModelSpec;

use crate::CliError;

/// One experiment, declared in a single TOML file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub dataset: DatasetConfig,
    pub probe: ProbeSection,
    pub score: ScoreSection,
    pub study: StudySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_out")]
    out_dir: PathBuf,
    #[serde(default)]
    dataset: toml::Table,
    #[serde(default)]
    probe: ProbeSection,
    #[serde(default)]
    score: ScoreSection,
    #[serde(default)]
    study: StudySection,
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    #[serde(default)]
    pub plan: PromptPlan,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    /// Models served by the built-in mock provider.
    #[serde(default)]
    pub mocks: Vec<MockModel>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MockModel {
    pub model: String,
    #[serde(default = "default_mock_concurrency")]
    pub max_concurrency: usize,
    #[serde(flatten)]
    pub config: MockConfig,
}

fn default_mock_concurrency() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Categories the hint and system-prompt interventions are measured on.
    #[serde(default = "default_intervention_categories")]
    pub intervention_categories: Vec<Category>,
}

fn default_epsilon() -> f64 {
    MetricConfig::default().epsilon
}

fn default_intervention_categories() -> Vec<Category> {
    vec![Category::Size]
}

impl Default for ScoreSection {
    fn default() -> Self {
        ScoreSection {
            epsilon: default_epsilon(),
            intervention_categories: default_intervention_categories(),
        }
    }
}

impl ScoreSection {
    pub fn metric_config(&self) -> MetricConfig {
        MetricConfig { epsilon: self.epsilon }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_addr")]
    pub addr: SocketAddr,
    /// Built UI bundle served under `/`.
    #[serde(default)]
    pub ui_dir: Option<PathBuf>,
    #[serde(default)]
    pub reverse_questions: bool,
}

fn default_addr() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

impl Default for StudySection {
    fn default() -> Self {
        StudySection {
            addr: default_addr(),
            ui_dir: None,
            reverse_questions: false,
        }
    }
}

impl RunConfig {
    /// Parses and validates a config file. Relative paths resolve against the
    /// file's directory; `out` overrides `out_dir`.
    pub fn load(path: &Path, out: Option<&Path>) -> Result<RunConfig, CliError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, out).map_err(|e| match e {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path, out: Option<&Path>) -> Result<RunConfig, CliError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        let out_dir = match out {
            Some(o) => o.to_path_buf(),
            None => base.join(&raw.out_dir),
        };
        let mut dataset_table = raw.dataset;
        if dataset_table.contains_key("output_dir") {
            return Err(CliError::Validation(
                "dataset.output_dir is derived from out_dir and cannot be set".into(),
            ));
        }
        let dataset_dir = out_dir.join("dataset");
        dataset_table.insert(
            "output_dir".into(),
            toml::Value::String(dataset_dir.to_string_lossy().into_owned()),
        );
        let dataset: DatasetConfig = dataset_table
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("[dataset]: {e}")))?;
        dataset.validate().map_err(|e| CliError::Validation(e.to_string()))?;

        let mut study = raw.study;
        study.ui_dir = study.ui_dir.map(|d| base.join(d));
        let config = RunConfig {
            out_dir,
            dataset,
            probe: raw.probe,
            score: raw.score,
            study,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let v = |m: String| Err(CliError::Validation(m));
        self.score
            .metric_config()
            .validate()
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if self.probe.plan.normalized().is_empty() {
            return v("probe.plan selects no prompt variants".into());
        }
        for m in &self.probe.models {
            m.validate().map_err(|e| CliError::Validation(e.to_string()))?;
        }
        let mut names: Vec<&str> = self
            .probe
            .models
            .iter()
            .map(|m| m.model.as_str())
            .chain(self.probe.mocks.iter().map(|m| m.model.as_str()))
            .collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return v(format!("model {} is declared twice", w[0]));
        }
        if self.probe.mocks.iter().any(|m| m.max_concurrency == 0) {
            return v("mock max_concurrency must be at least 1".into());
        }
        Ok(())
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.dataset.output_dir.clone()
    }

    pub fn responses_dir(&self) -> PathBuf {
        self.out_dir.join("responses")
    }

    pub fn scores_dir(&self) -> PathBuf {
        self.out_dir.join("scores")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("report")
    }

    pub fn journal_path(&self) -> PathBuf {
        self.out_dir.join("study").join("journal.jsonl")
    }

    pub fn alpha_grid(&self) -> Vec<Alpha> {
        self.dataset
            .alpha_grid
            .iter()
            .filter_map(|a| Alpha::new(*a).ok())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse("", Path::new("/x"), None).unwrap();
        assert_eq!(c.out_dir, PathBuf::from("/x/runs"));
        assert_eq!(c.dataset.output_dir, PathBuf::from("/x/runs/dataset"));
        assert_eq!(c.score.epsilon, 0.001);
        assert_eq!(c.alpha_grid().len(), 10);
    }

    #[test]
    fn mock_models_parse() {
        let text = r#"
            [[probe.mocks]]
            model = "noisy"
            policy = "noisy_perceiver"
            threshold = 0.5
            noise = 0.1
            seed = 3
        "#;
        let c = RunConfig::parse(text, Path::new("."), Some(Path::new("/o"))).unwrap();
        assert_eq!(c.out_dir, PathBuf::from("/o"));
        assert_eq!(c.probe.mocks[0].model, "noisy");
    }

    #[test]
    fn bad_configs_are_rejected() {
        for text in [
            "bogus = 1",
            "[dataset]\noutput_dir = \"x\"",
            "[dataset]\ncases = [99]",
            "[score]\nepsilon = 0.0",
            "[[probe.models]]\nmodel = \"a\"\nendpoint = \"http://x\"\nmax_concurrency = 0",
        ] {
            assert!(
                matches!(
                    RunConfig::parse(text, Path::new("."), None),
                    Err(CliError::Validation(_))
                ),
                "{text}"
            );
        }
    }
}
