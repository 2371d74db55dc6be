//! Expands the catalog into images plus a JSON Lines manifest, and validates
//! built datasets.
//!
//! Layout under the output directory:
//! `manifest.jsonl`, `prompts.json`, `images/<item_id>.png`,
//! `scenes/<item_id>.json` and, optionally, `vectors/<item_id>.svg`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::catalog::{
    case, enumerate_style_variants, generate_variant, ground_truth, list_cases, map_alpha, measured_settings, Alpha,
    CatalogError, Category, GroundTruth, StyleParams, VariantKind,
};
use crate::prompt::{prompts_document, question_pair, PromptError, PromptPlan};
use crate::scene::{emit_vector, rasterize, CanvasConfig, Role, Scene, SceneError};

pub const GENERATOR_VERSION: &str = "vi-probe-gen/1";
pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const PROMPTS_FILE: &str = "prompts.json";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("invalid dataset config: {0}")]
    Config(String),
    #[error("io error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("item {item}: {source}")]
    Generation { item: String, source: CatalogError },
    #[error("item {item}: {source}")]
    Render { item: String, source: SceneError },
    #[error("manifest line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Case ids to build; empty means all.
    #[serde(default)]
    pub cases: Vec<u8>,
    #[serde(default = "one")]
    pub originals_per_case: u64,
    /// Per-case overrides of `originals_per_case`.
    #[serde(default, deserialize_with = "case_keyed")]
    pub per_case_originals: BTreeMap<u8, u64>,
    #[serde(default = "default_grid")]
    pub alpha_grid: Vec<f64>,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<VariantKind>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub master_seed: u64,
    /// Plan the manifest without rendering or writing images.
    #[serde(default)]
    pub dry_run: bool,
    #[serde(default)]
    pub emit_vectors: bool,
    /// Output image edge in pixels; the scene is scaled uniformly.
    #[serde(default = "default_image_size")]
    pub image_size: u32,
}

// TOML table keys are always strings.
fn case_keyed<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<u8, u64>, D::Error> {
    BTreeMap::<String, u64>::deserialize(d)?
        .into_iter()
        .map(|(k, v)| {
            k.parse()
                .map(|id| (id, v))
                .map_err(|_| serde::de::Error::custom(format!("bad case id {k:?}")))
        })
        .collect()
}

fn one() -> u64 {
    1
}

fn default_grid() -> Vec<f64> {
    Alpha::canonical_grid().into_iter().map(Alpha::value).collect()
}

fn default_kinds() -> Vec<VariantKind> {
    VariantKind::ALL.to_vec()
}

fn default_image_size() -> u32 {
    crate::scene::DEFAULT_CANVAS
}

impl DatasetConfig {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        DatasetConfig {
            cases: Vec::new(),
            originals_per_case: 1,
            per_case_originals: BTreeMap::new(),
            alpha_grid: default_grid(),
            kinds: default_kinds(),
            output_dir: output_dir.into(),
            master_seed: 0,
            dry_run: false,
            emit_vectors: false,
            image_size: default_image_size(),
        }
    }

    pub fn case_ids(&self) -> Vec<u8> {
        if self.cases.is_empty() {
            list_cases().iter().map(|c| c.case_id).collect()
        } else {
            let mut ids = self.cases.clone();
            ids.sort_unstable();
            ids.dedup();
            ids
        }
    }

    pub fn originals_for(&self, case_id: u8) -> u64 {
        self.per_case_originals
            .get(&case_id)
            .copied()
            .unwrap_or(self.originals_per_case)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: String| Err(DatasetError::Config(m));
        for id in self.case_ids() {
            case(id)?;
            if self.originals_for(id) < 1 {
                return bad(format!("case {id} needs at least one original"));
            }
        }
        for id in self.per_case_originals.keys() {
            if !self.case_ids().contains(id) {
                return bad(format!("override for case {id}, which is not selected"));
            }
        }
        let mut seen = BTreeSet::new();
        for &a in &self.alpha_grid {
            Alpha::new(a).map_err(|_| DatasetError::Config(format!("alpha {a} outside [-1, 1]")))?;
            if a == 0.0 {
                return bad("alpha grid must not contain 0".into());
            }
            if !seen.insert(alpha_text(a)) {
                return bad(format!("alpha {a} listed twice"));
            }
        }
        if self.kinds.iter().any(|k| k.is_perturbed()) && self.alpha_grid.is_empty() {
            return bad("perturbed kinds need a non-empty alpha grid".into());
        }
        if self.image_size == 0 {
            return bad("image_size must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub item_id: String,
    pub case_id: u8,
    pub case_name: String,
    pub category: Category,
    pub variant_kind: VariantKind,
    pub alpha: f64,
    pub style_seed: u64,
    /// Relative to the dataset root.
    pub image_path: String,
    /// Hex SHA-256 of the PNG bytes; absent for dry runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_sha256: Option<String>,
    pub scene_path: String,
    pub ground_truth: GroundTruth,
    pub question_forward: String,
    pub question_reverse: String,
    pub generator_version: String,
}

fn alpha_text(alpha: f64) -> String {
    // Normalizes -0.0 and keeps full precision.
    serde_json::to_string(&(alpha + 0.0)).expect("finite alpha")
}

/// Content-derived identifier of an item.
pub fn item_id(case_id: u8, kind: VariantKind, alpha: f64, style_seed: u64, version: &str) -> String {
    let key = format!("{case_id}|{}|{}|{style_seed}|{version}", kind.code(), alpha_text(alpha));
    hex::encode(Sha256::digest(key.as_bytes()))[..16].to_string()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub items: Vec<ManifestItem>,
}

impl Manifest {
    pub fn sort(&mut self) {
        self.items.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            out.push_str(&serde_json::to_string(item).expect("manifest item serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Manifest, DatasetError> {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| serde_json::from_str(l).map_err(|source| DatasetError::Parse { line: i + 1, source }))
            .collect::<Result<_, _>>()?;
        Ok(Manifest { items })
    }

    pub fn load(path: &Path) -> Result<Manifest, DatasetError> {
        Manifest::from_jsonl(&fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_jsonl()).map_err(io_err(path))
    }

    pub fn get(&self, item_id: &str) -> Option<&ManifestItem> {
        self.items
            .binary_search_by(|i| i.item_id.as_str().cmp(item_id))
            .ok()
            .map(|i| &self.items[i])
    }

    pub fn count_kind(&self, kind: VariantKind) -> usize {
        self.items.iter().filter(|i| i.variant_kind == kind).count()
    }

    /// Digest over the serialized manifest.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_jsonl().as_bytes())
    }
}

#[derive(Debug, Clone)]
struct PlannedItem {
    case_id: u8,
    kind: VariantKind,
    alpha: f64,
    style: StyleParams,
}

fn plan(config: &DatasetConfig) -> Result<Vec<PlannedItem>, DatasetError> {
    let mut kinds = config.kinds.clone();
    kinds.sort();
    kinds.dedup();
    let mut out = Vec::new();
    for case_id in config.case_ids() {
        for style in enumerate_style_variants(case_id, config.originals_for(case_id), config.master_seed)? {
            for &kind in &kinds {
                let alphas: Vec<f64> = if kind.is_perturbed() {
                    config.alpha_grid.clone()
                } else {
                    vec![0.0]
                };
                for alpha in alphas {
                    out.push(PlannedItem {
                        case_id,
                        kind,
                        alpha,
                        style,
                    });
                }
            }
        }
    }
    Ok(out)
}

fn manifest_item(p: &PlannedItem, truth: GroundTruth) -> Result<ManifestItem, DatasetError> {
    let desc = case(p.case_id)?;
    let q = question_pair(p.case_id)?;
    let id = item_id(p.case_id, p.kind, p.alpha, p.style.seed, GENERATOR_VERSION);
    Ok(ManifestItem {
        image_path: format!("images/{id}.png"),
        scene_path: format!("scenes/{id}.json"),
        item_id: id,
        case_id: p.case_id,
        case_name: desc.name.clone(),
        category: desc.category,
        variant_kind: p.kind,
        alpha: p.alpha + 0.0,
        style_seed: p.style.seed,
        image_sha256: None,
        ground_truth: truth,
        question_forward: q.forward,
        question_reverse: q.reverse,
        generator_version: GENERATOR_VERSION.to_string(),
    })
}

fn render_item(p: &PlannedItem, config: &DatasetConfig) -> Result<ManifestItem, DatasetError> {
    let label = || format!("case {} {} alpha {} seed {}", p.case_id, p.kind, p.alpha, p.style.seed);
    if config.dry_run {
        let truth = ground_truth(p.case_id, p.kind, p.alpha)
            .map_err(|source| DatasetError::Generation { item: label(), source })?;
        return manifest_item(p, truth);
    }
    let (scene, truth) = generate_variant(p.case_id, p.kind, p.alpha, &p.style)
        .map_err(|source| DatasetError::Generation { item: label(), source })?;
    let mut item = manifest_item(p, truth)?;
    let png = render_png(&scene, config.image_size).map_err(|source| DatasetError::Render {
        item: item.item_id.clone(),
        source,
    })?;
    let root = &config.output_dir;
    write_file(&root.join(&item.image_path), &png)?;
    write_file(&root.join(&item.scene_path), scene.to_canonical_json().as_bytes())?;
    if config.emit_vectors {
        let svg = emit_vector(&scene).map_err(|source| DatasetError::Render {
            item: item.item_id.clone(),
            source,
        })?;
        write_file(
            &root.join(format!("vectors/{}.svg", item.item_id)),
            svg.as_str().as_bytes(),
        )?;
    }
    item.image_sha256 = Some(sha256_hex(&png));
    Ok(item)
}

/// PNG bytes of a scene at `size` x `size` pixels.
pub fn render_png(scene: &Scene, size: u32) -> Result<Vec<u8>, SceneError> {
    let config = CanvasConfig {
        width: size,
        height: size,
        background: scene.canvas.background,
    };
    rasterize(scene, &config)?.to_png()
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Generates every planned item (in parallel), then writes the sorted manifest
/// and the prompt audit file.
pub fn build_dataset(config: &DatasetConfig) -> Result<Manifest, DatasetError> {
    config.validate()?;
    let planned = plan(config)?;
    fs::create_dir_all(&config.output_dir).map_err(io_err(&config.output_dir))?;
    let items = planned
        .par_iter()
        .map(|p| render_item(p, config))
        .collect::<Result<Vec<_>, _>>()?;
    let mut manifest = Manifest { items };
    manifest.sort();
    manifest.write(&config.output_dir.join(MANIFEST_FILE))?;
    let prompts = prompts_document(&config.case_ids(), &PromptPlan::default())?;
    write_file(&config.output_dir.join(PROMPTS_FILE), prompts.as_bytes())?;
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    DuplicateItem,
    Provenance,
    LabelAlgebra,
    Question,
    ControlPurity,
    InducerOnly,
    HintNeutrality,
    FactorSetting,
    CountArithmetic,
    HashMismatch,
    Unreadable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub item_id: Option<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn count(&self, kind: ViolationKind) -> usize {
        self.violations.iter().filter(|v| v.kind == kind).count()
    }

    fn push(&mut self, kind: ViolationKind, item: Option<&ManifestItem>, detail: impl Into<String>) {
        self.violations.push(Violation {
            kind,
            item_id: item.map(|i| i.item_id.clone()),
            detail: detail.into(),
        });
    }
}

/// Checks a manifest against the catalog and, for rendered items, the files
/// under `root`. Problems are collected, never raised.
pub fn validate_manifest(manifest: &Manifest, root: &Path) -> ValidationReport {
    let mut report = ValidationReport::default();
    let mut seen = BTreeSet::new();
    for item in &manifest.items {
        if !seen.insert(item.item_id.as_str()) {
            report.push(
                ViolationKind::DuplicateItem,
                Some(item),
                "item id appears more than once",
            );
        }
        check_item(item, root, &mut report);
    }
    check_counts(manifest, &mut report);
    report
}

fn check_item(item: &ManifestItem, root: &Path, report: &mut ValidationReport) {
    use ViolationKind::*;
    let expected_id = item_id(
        item.case_id,
        item.variant_kind,
        item.alpha,
        item.style_seed,
        &item.generator_version,
    );
    if expected_id != item.item_id {
        report.push(Provenance, Some(item), format!("item id should be {expected_id}"));
    }
    let consistent = item.ground_truth.is_consistent();
    if !consistent {
        report.push(
            LabelAlgebra,
            Some(item),
            format!("labels {:?} break the polarity algebra", item.ground_truth),
        );
    }
    match ground_truth(item.case_id, item.variant_kind, item.alpha) {
        Ok(gt) if consistent && gt != item.ground_truth => {
            report.push(LabelAlgebra, Some(item), format!("catalog labels are {gt:?}"));
        }
        Ok(_) => {}
        Err(e) => {
            report.push(Provenance, Some(item), e.to_string());
            return;
        }
    }
    if let Ok(q) = question_pair(item.case_id) {
        if q.forward != item.question_forward || q.reverse != item.question_reverse {
            report.push(Question, Some(item), "questions differ from the catalog");
        }
    }
    let Some(stored_hash) = &item.image_sha256 else {
        return;
    };
    match fs::read(root.join(&item.image_path)) {
        Ok(bytes) if &sha256_hex(&bytes) != stored_hash => {
            report.push(HashMismatch, Some(item), "image bytes do not match the stored hash");
        }
        Ok(_) => {}
        Err(e) => report.push(Unreadable, Some(item), format!("{}: {e}", item.image_path)),
    }
    let scene = match fs::read_to_string(root.join(&item.scene_path)).map(|t| Scene::from_json(&t)) {
        Ok(Ok(scene)) => scene,
        Ok(Err(e)) => return report.push(Unreadable, Some(item), format!("{}: {e}", item.scene_path)),
        Err(e) => return report.push(Unreadable, Some(item), format!("{}: {e}", item.scene_path)),
    };
    check_scene(item, &scene, report);
}

fn check_scene(item: &ManifestItem, scene: &Scene, report: &mut ValidationReport) {
    use ViolationKind::*;
    let kind = item.variant_kind;
    if kind.is_control() && scene.count_role(Role::Inducer) > 0 {
        report.push(
            ControlPurity,
            Some(item),
            format!("{} inducer elements in a control", scene.count_role(Role::Inducer)),
        );
    }
    if kind == VariantKind::IND && scene.count_role(Role::Target) > 0 {
        report.push(InducerOnly, Some(item), "target elements in an inducer-only scene");
    }
    if kind.is_hinted() {
        let style = StyleParams::from_seed(item.style_seed);
        match generate_variant(item.case_id, kind.unhinted(), item.alpha, &style) {
            Ok((twin, _)) => {
                let keep = [Role::Target, Role::Inducer];
                if twin.restricted_to(&keep) != scene.restricted_to(&keep) {
                    report.push(
                        HintNeutrality,
                        Some(item),
                        "targets or inducers differ from the unhinted twin",
                    );
                }
            }
            Err(e) => report.push(Provenance, Some(item), e.to_string()),
        }
    }
    if kind != VariantKind::IND {
        let expected = map_alpha(item.case_id, item.alpha);
        match (measured_settings(item.case_id, scene), expected) {
            (Ok(measured), Ok(expected)) => {
                if let Some(m) = measured.iter().find(|m| !m.approx_eq(&expected)) {
                    report.push(
                        FactorSetting,
                        Some(item),
                        format!("measured {m:?}, expected {expected:?}"),
                    );
                }
            }
            (Err(e), _) | (_, Err(e)) => report.push(FactorSetting, Some(item), e.to_string()),
        }
    }
}

/// Per (case, style): one O, one P per grid level, OC + PC and OH + PH over
/// the grid plus zero. The grid is inferred from the P items.
fn check_counts(manifest: &Manifest, report: &mut ValidationReport) {
    let mut groups: BTreeMap<(u8, u64), BTreeMap<VariantKind, BTreeSet<String>>> = BTreeMap::new();
    for item in &manifest.items {
        groups
            .entry((item.case_id, item.style_seed))
            .or_default()
            .entry(item.variant_kind)
            .or_default()
            .insert(alpha_text(item.alpha));
    }
    let grids: BTreeSet<Vec<String>> = groups
        .values()
        .filter_map(|g| g.get(&VariantKind::P).map(|s| s.iter().cloned().collect()))
        .collect();
    if grids.len() > 1 {
        report.push(
            ViolationKind::CountArithmetic,
            None,
            "perturbed alpha grids differ between groups",
        );
    }
    let kinds_present: BTreeSet<VariantKind> = manifest.items.iter().map(|i| i.variant_kind).collect();
    for ((case_id, seed), g) in &groups {
        let count = |k: VariantKind| g.get(&k).map_or(0, BTreeSet::len);
        let grid = count(VariantKind::P)
            .max(count(VariantKind::PC))
            .max(count(VariantKind::PH));
        for (pair, ok) in [
            (
                "O",
                !kinds_present.contains(&VariantKind::O) || count(VariantKind::O) == 1,
            ),
            (
                "OC+PC",
                !kinds_present.contains(&VariantKind::OC)
                    || count(VariantKind::OC) + count(VariantKind::PC) == grid + 1,
            ),
            (
                "OH+PH",
                !kinds_present.contains(&VariantKind::OH)
                    || count(VariantKind::OH) + count(VariantKind::PH) == grid + 1,
            ),
            (
                "P",
                !kinds_present.contains(&VariantKind::P) || count(VariantKind::P) == grid,
            ),
        ] {
            if !ok {
                report.push(
                    ViolationKind::CountArithmetic,
                    None,
                    format!("case {case_id} seed {seed}: {pair} count does not match the grid of {grid}"),
                );
            }
        }
    }
}

/// Totals in the layout of the dataset summary table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSummary {
    pub originals: usize,
    pub perturbed: usize,
    pub controls: usize,
    pub hints: usize,
    pub inducer_only: usize,
}

pub fn count_summary(manifest: &Manifest) -> CountSummary {
    let c = |k| manifest.count_kind(k);
    CountSummary {
        originals: c(VariantKind::O),
        perturbed: c(VariantKind::P),
        controls: c(VariantKind::OC) + c(VariantKind::PC),
        hints: c(VariantKind::OH) + c(VariantKind::PH),
        inducer_only: c(VariantKind::IND),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn item_ids_are_stable_and_distinct() {
        let a = item_id(1, VariantKind::P, 0.2, 0, GENERATOR_VERSION);
        assert_eq!(a, item_id(1, VariantKind::P, 0.2, 0, GENERATOR_VERSION));
        assert_eq!(a.len(), 16);
        assert_ne!(a, item_id(1, VariantKind::P, -0.2, 0, GENERATOR_VERSION));
        assert_ne!(a, item_id(1, VariantKind::PH, 0.2, 0, GENERATOR_VERSION));
        assert_eq!(
            item_id(1, VariantKind::O, -0.0, 0, "v"),
            item_id(1, VariantKind::O, 0.0, 0, "v")
        );
    }

    #[test]
    fn config_validation() {
        let mut c = DatasetConfig::new("/tmp/x");
        c.validate().unwrap();
        c.alpha_grid.push(0.0);
        assert!(c.validate().is_err());
        let mut c = DatasetConfig::new("/tmp/x");
        c.originals_per_case = 0;
        assert!(c.validate().is_err());
        let mut c = DatasetConfig::new("/tmp/x");
        c.cases = vec![40];
        assert!(c.validate().is_err());
    }

    #[test]
    fn tiny_plan_counts() {
        let mut c = DatasetConfig::new("/tmp/x");
        c.cases = vec![3];
        c.alpha_grid = vec![-1.0, 1.0];
        c.kinds = vec![VariantKind::O, VariantKind::P];
        assert_eq!(plan(&c).unwrap().len(), 3);
    }
}
