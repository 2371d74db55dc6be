//! Paired-polarity metrics, both-correct condition accuracy, the illusion
//! multiplier and dose-response curves.
//!
//! Fractions are computed as `count as f64 / n as f64` so they are bit-stable
//! and comparable with exact enumeration.

mod threshold;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::answer::{Answer, RawResponse};
use crate::catalog::{Alpha, Category, GroundTruth, VariantKind};
use crate::dataset::ManifestItem;
use crate::prompt::{Polarity, PromptVariant};

pub use threshold::{fold_magnitudes, human_threshold, DetectionRate, DETECTION_LEVEL};

pub const DEFAULT_EPSILON: f64 = 0.001;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("no response pairs to score")]
    Empty,
    #[error("slice {0} selects no pairs")]
    EmptySlice(String),
    #[error("PFA {pfa} exceeds PFC {pfc}")]
    PfaExceedsPfc { pfc: f64, pfa: f64 },
    #[error("value {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("epsilon must be positive, got {0}")]
    Epsilon(f64),
    #[error("slices differ beyond the intervention: {0}")]
    MismatchedSlices(String),
    #[error("need detection rates for at least 3 magnitudes, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub epsilon: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<(), MetricError> {
        if self.epsilon > 0.0 && self.epsilon.is_finite() {
            Ok(())
        } else {
            Err(MetricError::Epsilon(self.epsilon))
        }
    }
}

/// Forward and reverse answers of one model on one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponsePair {
    pub item_id: String,
    pub case_id: u8,
    pub category: Category,
    pub variant_kind: VariantKind,
    pub alpha: f64,
    /// Whether both prompts carried the visual-comparison instruction.
    pub instructional: bool,
    pub a_forward: Answer,
    pub a_reverse: Answer,
    pub ground_truth: GroundTruth,
}

impl ResponsePair {
    pub fn has_invalid(&self) -> bool {
        !(self.a_forward.is_valid() && self.a_reverse.is_valid())
    }

    pub fn complementary(&self) -> bool {
        match (self.a_forward.bit(), self.a_reverse.bit()) {
            (Some(f), Some(r)) => f + r == 1,
            _ => false,
        }
    }

    pub fn fixated(&self) -> bool {
        match (self.a_forward.bit(), self.a_reverse.bit()) {
            (Some(f), Some(r)) => f == r,
            _ => false,
        }
    }

    pub fn forward_correct(&self) -> bool {
        self.a_forward.bit() == Some(self.ground_truth.y_forward)
    }

    pub fn reverse_correct(&self) -> bool {
        self.a_reverse.bit() == Some(self.ground_truth.y_reverse)
    }

    pub fn both_correct(&self) -> bool {
        self.forward_correct() && self.reverse_correct()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum PairingIssue {
    MissingPolarity {
        item_id: String,
        instructional: bool,
        missing: Polarity,
    },
    DuplicateRows {
        item_id: String,
        prompt_variant: PromptVariant,
        rows: usize,
    },
    UnknownItem {
        item_id: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Pairing {
    pub pairs: Vec<ResponsePair>,
    pub issues: Vec<PairingIssue>,
}

/// Joins a response log with its manifest into forward/reverse pairs. Plain and
/// instructional prompts pair separately. Duplicate rows resolve to the newest.
pub fn pair_responses(log: &[RawResponse], manifest: &[ManifestItem]) -> Pairing {
    let items: BTreeMap<&str, &ManifestItem> = manifest.iter().map(|m| (m.item_id.as_str(), m)).collect();
    let mut latest: BTreeMap<(&str, PromptVariant), (&RawResponse, usize)> = BTreeMap::new();
    let mut issues = Vec::new();
    let mut unknown = BTreeSet::new();
    for row in log {
        if !items.contains_key(row.item_id.as_str()) {
            unknown.insert(row.item_id.clone());
            continue;
        }
        latest
            .entry((row.item_id.as_str(), row.prompt_variant))
            .and_modify(|(best, n)| {
                *n += 1;
                if row.timestamp >= best.timestamp {
                    *best = row;
                }
            })
            .or_insert((row, 1));
    }
    for ((item_id, variant), (_, n)) in &latest {
        if *n > 1 {
            issues.push(PairingIssue::DuplicateRows {
                item_id: item_id.to_string(),
                prompt_variant: *variant,
                rows: *n,
            });
        }
    }
    let mut pairs = Vec::new();
    for (item_id, item) in &items {
        for (fwd, rev, instructional) in [
            (PromptVariant::Forward, PromptVariant::Reverse, false),
            (PromptVariant::Instructional, PromptVariant::InstructionalReverse, true),
        ] {
            let f = latest.get(&(*item_id, fwd)).map(|(r, _)| *r);
            let r = latest.get(&(*item_id, rev)).map(|(r, _)| *r);
            match (f, r) {
                (Some(f), Some(r)) => pairs.push(ResponsePair {
                    item_id: item_id.to_string(),
                    case_id: item.case_id,
                    category: item.category,
                    variant_kind: item.variant_kind,
                    alpha: item.alpha,
                    instructional,
                    a_forward: f.answer(),
                    a_reverse: r.answer(),
                    ground_truth: item.ground_truth,
                }),
                (Some(_), None) => issues.push(PairingIssue::MissingPolarity {
                    item_id: item_id.to_string(),
                    instructional,
                    missing: Polarity::Reverse,
                }),
                (None, Some(_)) => issues.push(PairingIssue::MissingPolarity {
                    item_id: item_id.to_string(),
                    instructional,
                    missing: Polarity::Forward,
                }),
                (None, None) => {}
            }
        }
    }
    issues.extend(unknown.into_iter().map(|item_id| PairingIssue::UnknownItem { item_id }));
    Pairing { pairs, issues }
}

/// Raw tallies behind the paired metrics. `complementary + fixated + invalid == n` always.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub n: usize,
    pub complementary: usize,
    pub fixated: usize,
    pub both_correct: usize,
    pub invalid: usize,
}

pub fn pair_counts(pairs: &[ResponsePair]) -> PairCounts {
    let mut c = PairCounts {
        n: pairs.len(),
        ..PairCounts::default()
    };
    for p in pairs {
        c.complementary += usize::from(p.complementary());
        c.fixated += usize::from(p.fixated());
        c.both_correct += usize::from(p.both_correct());
        c.invalid += usize::from(p.has_invalid());
    }
    c
}

fn fraction(pairs: &[ResponsePair], pred: impl Fn(&ResponsePair) -> bool) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(pairs.iter().filter(|p| pred(p)).count() as f64 / pairs.len() as f64)
}

/// Polarity-flip consistency: answers are complements. Pairs with an invalid answer count as failures.
pub fn pfc(pairs: &[ResponsePair]) -> Result<f64, MetricError> {
    fraction(pairs, ResponsePair::complementary)
}

/// Polarity-flip accuracy: both answers correct.
pub fn pfa(pairs: &[ResponsePair]) -> Result<f64, MetricError> {
    fraction(pairs, ResponsePair::both_correct)
}

/// Template fixation: both answers share the same value.
pub fn tfi(pairs: &[ResponsePair]) -> Result<f64, MetricError> {
    fraction(pairs, ResponsePair::fixated)
}

pub fn invalid_rate(pairs: &[ResponsePair]) -> Result<f64, MetricError> {
    fraction(pairs, ResponsePair::has_invalid)
}

/// Coherent but wrong.
pub fn cbw(pfc_value: f64, pfa_value: f64) -> Result<f64, MetricError> {
    for v in [pfc_value, pfa_value] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricError::OutOfRange(v));
        }
    }
    if pfa_value > pfc_value {
        return Err(MetricError::PfaExceedsPfc {
            pfc: pfc_value,
            pfa: pfa_value,
        });
    }
    Ok(pfc_value - pfa_value)
}

/// Selects pairs by condition and optional filters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSlice {
    pub condition: VariantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<Category>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cases: Option<Vec<u8>>,
    #[serde(default)]
    pub instructional: bool,
}

impl ConditionSlice {
    pub fn of(condition: VariantKind) -> Self {
        ConditionSlice {
            condition,
            alphas: None,
            categories: None,
            cases: None,
            instructional: false,
        }
    }

    pub fn with_categories(mut self, categories: &[Category]) -> Self {
        self.categories = Some(categories.to_vec());
        self
    }

    pub fn with_alphas(mut self, alphas: &[f64]) -> Self {
        self.alphas = Some(alphas.to_vec());
        self
    }

    pub fn instructional(mut self, on: bool) -> Self {
        self.instructional = on;
        self
    }

    pub fn matches(&self, p: &ResponsePair) -> bool {
        p.variant_kind == self.condition
            && p.instructional == self.instructional
            && self
                .alphas
                .as_ref()
                .is_none_or(|a| a.iter().any(|x| same_alpha(*x, p.alpha)))
            && self.categories.as_ref().is_none_or(|c| c.contains(&p.category))
            && self.cases.as_ref().is_none_or(|c| c.contains(&p.case_id))
    }

    pub fn select<'a>(&self, pairs: &'a [ResponsePair]) -> Vec<&'a ResponsePair> {
        pairs.iter().filter(|p| self.matches(p)).collect()
    }

    pub fn describe(&self) -> String {
        serde_json::to_string(self).expect("slice serializes")
    }
}

fn same_alpha(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

fn count_fraction(hits: usize, n: usize) -> f64 {
    hits as f64 / n as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceAccuracy {
    pub slice: ConditionSlice,
    pub accuracy: f64,
    pub n: usize,
}

/// Both-correct accuracy within a slice.
pub fn condition_accuracy(pairs: &[ResponsePair], slice: &ConditionSlice) -> Result<SliceAccuracy, MetricError> {
    let selected = slice.select(pairs);
    if selected.is_empty() {
        return Err(MetricError::EmptySlice(slice.describe()));
    }
    let hits = selected.iter().filter(|p| p.both_correct()).count();
    Ok(SliceAccuracy {
        slice: slice.clone(),
        accuracy: count_fraction(hits, selected.len()),
        n: selected.len(),
    })
}

/// Accuracies on the four image types, as fractions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionAccuracies {
    pub o: f64,
    pub p: f64,
    pub oc: f64,
    pub pc: f64,
}

impl ConditionAccuracies {
    pub fn from_percent(o: f64, p: f64, oc: f64, pc: f64) -> Self {
        ConditionAccuracies {
            o: o / 100.0,
            p: p / 100.0,
            oc: oc / 100.0,
            pc: pc / 100.0,
        }
    }
}

/// `|accO - accP| / (|accOC - accPC| + eps)` on fractions.
pub fn illusion_multiplier(acc: ConditionAccuracies, config: &MetricConfig) -> Result<f64, MetricError> {
    config.validate()?;
    for v in [acc.o, acc.p, acc.oc, acc.pc] {
        if !(0.0..=1.0).contains(&v) {
            return Err(MetricError::OutOfRange(v));
        }
    }
    Ok((acc.o - acc.p).abs() / ((acc.oc - acc.pc).abs() + config.epsilon))
}

/// Mean of per-case multipliers. Not the canonical R; reported for comparison only.
pub fn illusion_multiplier_per_case(pairs: &[ResponsePair], config: &MetricConfig) -> Result<Option<f64>, MetricError> {
    let cases: BTreeSet<u8> = pairs.iter().map(|p| p.case_id).collect();
    let mut rs = Vec::new();
    for c in cases {
        let sub: Vec<ResponsePair> = pairs
            .iter()
            .filter(|p| p.case_id == c && !p.instructional)
            .cloned()
            .collect();
        if let Ok(acc) = condition_accuracies(&sub) {
            rs.push(illusion_multiplier(acc, config)?);
        }
    }
    Ok((!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64))
}

/// Both-correct accuracies on O, P, OC, PC (plain prompts).
pub fn condition_accuracies(pairs: &[ResponsePair]) -> Result<ConditionAccuracies, MetricError> {
    let acc = |k| condition_accuracy(pairs, &ConditionSlice::of(k)).map(|s| s.accuracy);
    Ok(ConditionAccuracies {
        o: acc(VariantKind::O)?,
        p: acc(VariantKind::P)?,
        oc: acc(VariantKind::OC)?,
        pc: acc(VariantKind::PC)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosePoint {
    pub alpha: f64,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseResponse {
    pub condition: VariantKind,
    pub points: Vec<DosePoint>,
    /// Grid levels with no pairs.
    pub missing: Vec<f64>,
}

/// Both-correct accuracy per signed alpha, ascending.
pub fn dose_response(
    pairs: &[ResponsePair],
    condition: VariantKind,
    grid: &[Alpha],
    instructional: bool,
) -> DoseResponse {
    let mut by_alpha: BTreeMap<i64, (f64, usize, usize)> = BTreeMap::new();
    for p in pairs
        .iter()
        .filter(|p| p.variant_kind == condition && p.instructional == instructional)
    {
        let e = by_alpha.entry(alpha_bucket(p.alpha)).or_insert((p.alpha, 0, 0));
        e.1 += usize::from(p.both_correct());
        e.2 += 1;
    }
    let missing = grid
        .iter()
        .map(|a| a.value())
        .filter(|a| !by_alpha.contains_key(&alpha_bucket(*a)))
        .collect();
    DoseResponse {
        condition,
        points: by_alpha
            .into_values()
            .map(|(alpha, hits, n)| DosePoint {
                alpha,
                accuracy: count_fraction(hits, n),
                n,
            })
            .collect(),
        missing,
    }
}

fn alpha_bucket(a: f64) -> i64 {
    (a * 1e6).round() as i64
}

/// Smallest |alpha| where the magnitude-folded curve reaches `level`, linearly
/// interpolated between neighbouring magnitudes. `None` if never reached.
pub fn crossing_magnitude(curve: &DoseResponse, level: f64) -> Option<f64> {
    let rates: Vec<DetectionRate> = curve
        .points
        .iter()
        .map(|p| DetectionRate {
            alpha: p.alpha,
            rate: p.accuracy,
            n: p.n,
        })
        .collect();
    let folded = fold_magnitudes(&rates);
    threshold::first_crossing(&folded, level)
}

/// Control minus illusion accuracy, per category.
pub fn susceptibility_gap(pairs: &[ResponsePair]) -> BTreeMap<Category, f64> {
    let mut out = BTreeMap::new();
    for cat in [Category::Size, Category::Color, Category::Orientation] {
        let in_cat = |kinds: &[VariantKind]| {
            let sel: Vec<&ResponsePair> = pairs
                .iter()
                .filter(|p| p.category == cat && !p.instructional && kinds.contains(&p.variant_kind))
                .collect();
            (!sel.is_empty()).then(|| count_fraction(sel.iter().filter(|p| p.both_correct()).count(), sel.len()))
        };
        if let (Some(control), Some(illusion)) = (
            in_cat(&[VariantKind::OC, VariantKind::PC]),
            in_cat(&[VariantKind::O, VariantKind::P]),
        ) {
            out.insert(cat, control - illusion);
        }
    }
    out
}

/// Accuracy with an intervention minus without. The slices may differ only in
/// hinting or in the system instruction.
pub fn intervention_effect(with: &SliceAccuracy, without: &SliceAccuracy) -> Result<f64, MetricError> {
    let (a, b) = (&with.slice, &without.slice);
    let hint_swap = a.condition.unhinted() == b.condition.unhinted();
    let same_filters = a.alphas == b.alphas && a.categories == b.categories && a.cases == b.cases;
    let one_change = (a.condition != b.condition) ^ (a.instructional != b.instructional);
    if !(hint_swap && same_filters && one_change) {
        return Err(MetricError::MismatchedSlices(format!(
            "{} vs {}",
            a.describe(),
            b.describe()
        )));
    }
    Ok(with.accuracy - without.accuracy)
}

/// One model's row in the Table-2 layout plus paired-prompt metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub model_id: String,
    pub pairs: usize,
    pub pfc: f64,
    pub pfa: f64,
    pub tfi: f64,
    pub cbw: f64,
    pub invalid_rate: f64,
    pub acc_o: f64,
    pub acc_p: f64,
    pub ave_illusion: f64,
    pub acc_oc: f64,
    pub acc_pc: f64,
    pub ave_control: f64,
    /// O minus OC.
    pub delta_o: f64,
    /// P minus PC.
    pub delta_p: f64,
    /// Control average minus illusion average.
    pub delta_ave: f64,
    pub r: f64,
    pub r_per_case: Option<f64>,
}

impl MetricReport {
    pub fn from_accuracies(
        model_id: &str,
        pairs: usize,
        consistency: (f64, f64, f64, f64),
        acc: ConditionAccuracies,
        config: &MetricConfig,
    ) -> Result<Self, MetricError> {
        let (pfc, pfa, tfi, invalid_rate) = consistency;
        let ave_illusion = (acc.o + acc.p) / 2.0;
        let ave_control = (acc.oc + acc.pc) / 2.0;
        Ok(MetricReport {
            model_id: model_id.to_string(),
            pairs,
            pfc,
            pfa,
            tfi,
            cbw: cbw(pfc, pfa)?,
            invalid_rate,
            acc_o: acc.o,
            acc_p: acc.p,
            ave_illusion,
            acc_oc: acc.oc,
            acc_pc: acc.pc,
            ave_control,
            delta_o: acc.o - acc.oc,
            delta_p: acc.p - acc.pc,
            delta_ave: ave_control - ave_illusion,
            r: illusion_multiplier(acc, config)?,
            r_per_case: None,
        })
    }

    /// Consistency metrics over the plain-prompt pairs of the four main conditions.
    pub fn compute(model_id: &str, pairs: &[ResponsePair], config: &MetricConfig) -> Result<Self, MetricError> {
        let main: Vec<ResponsePair> = pairs
            .iter()
            .filter(|p| {
                !p.instructional
                    && matches!(
                        p.variant_kind,
                        VariantKind::O | VariantKind::P | VariantKind::OC | VariantKind::PC
                    )
            })
            .cloned()
            .collect();
        let consistency = (pfc(&main)?, pfa(&main)?, tfi(&main)?, invalid_rate(&main)?);
        let acc = condition_accuracies(&main)?;
        let mut report = Self::from_accuracies(model_id, main.len(), consistency, acc, config)?;
        report.r_per_case = illusion_multiplier_per_case(&main, config)?;
        Ok(report)
    }

    pub const CSV_HEADER: [&'static str; 12] = [
        "Model", "PFC", "O", "P", "Ave", "OC", "PC", "Ave", "ΔO", "ΔP", "ΔAve", "R",
    ];

    /// Percentages with two decimals; R with two decimals.
    pub fn csv_row(&self) -> Vec<String> {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        vec![
            self.model_id.clone(),
            pct(self.pfc),
            pct(self.acc_o),
            pct(self.acc_p),
            pct(self.ave_illusion),
            pct(self.acc_oc),
            pct(self.acc_pc),
            pct(self.ave_control),
            pct(self.delta_o),
            pct(self.delta_p),
            pct(self.delta_ave),
            format!("{:.2}", self.r),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(f: Answer, r: Answer, y: u8) -> ResponsePair {
        ResponsePair {
            item_id: "x".into(),
            case_id: 1,
            category: Category::Size,
            variant_kind: VariantKind::O,
            alpha: 0.0,
            instructional: false,
            a_forward: f,
            a_reverse: r,
            ground_truth: GroundTruth::from_forward(y),
        }
    }

    use Answer::{Invalid, One, Zero};

    #[test]
    fn pfc_examples() {
        assert_eq!(pfc(&[pair(One, Zero, 1), pair(Zero, One, 1)]).unwrap(), 1.0);
        assert_eq!(pfc(&[pair(One, One, 1), pair(Zero, Zero, 1)]).unwrap(), 0.0);
        let mixed = [
            pair(One, Zero, 1),
            pair(One, One, 1),
            pair(Zero, One, 1),
            pair(Zero, Zero, 1),
        ];
        assert_eq!(pfc(&mixed).unwrap(), 0.5);
        assert_eq!(pfc(&[]), Err(MetricError::Empty));
    }

    #[test]
    fn coherent_but_wrong_extreme() {
        let pairs = [pair(Zero, One, 1), pair(One, Zero, 0)];
        assert_eq!(pfc(&pairs).unwrap(), 1.0);
        assert_eq!(pfa(&pairs).unwrap(), 0.0);
        assert_eq!(cbw(1.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn invalid_answers_fail_every_predicate() {
        let pairs = [pair(Invalid, Zero, 1), pair(One, Zero, 1)];
        assert_eq!(pfc(&pairs).unwrap(), 0.5);
        assert_eq!(tfi(&pairs).unwrap(), 0.0);
        assert_eq!(pfa(&pairs).unwrap(), 0.5);
        assert_eq!(invalid_rate(&pairs).unwrap(), 0.5);
    }

    #[test]
    fn cbw_rejects_inverted_inputs() {
        assert!(matches!(cbw(0.4, 0.5), Err(MetricError::PfaExceedsPfc { .. })));
        assert!(matches!(cbw(1.2, 0.5), Err(MetricError::OutOfRange(_))));
    }

    #[test]
    fn multiplier_zero_drops() {
        let r = illusion_multiplier(
            ConditionAccuracies {
                o: 0.3,
                p: 0.3,
                oc: 0.8,
                pc: 0.8,
            },
            &MetricConfig::default(),
        );
        assert_eq!(r.unwrap(), 0.0);
        assert!(illusion_multiplier(
            ConditionAccuracies {
                o: 0.3,
                p: 0.3,
                oc: 0.8,
                pc: 0.8
            },
            &MetricConfig { epsilon: 0.0 }
        )
        .is_err());
    }

    #[test]
    fn multiplier_scale_invariance() {
        let (o, p, oc, pc) = (91.72, 4.45, 96.55, 52.24);
        let frac = illusion_multiplier(
            ConditionAccuracies::from_percent(o, p, oc, pc),
            &MetricConfig::default(),
        )
        .unwrap();
        // Same formula on percents with epsilon scaled by 100.
        let pct: f64 = (o - p).abs() / ((oc - pc).abs() + 0.1);
        assert!((frac - pct).abs() < 1e-9);
    }

    #[test]
    fn intervention_slices_must_match() {
        let acc = |slice: ConditionSlice, a| SliceAccuracy {
            slice,
            accuracy: a,
            n: 1,
        };
        let with = acc(
            ConditionSlice::of(VariantKind::O)
                .with_categories(&[Category::Size])
                .instructional(true),
            0.1405,
        );
        let without = acc(
            ConditionSlice::of(VariantKind::O).with_categories(&[Category::Size]),
            0.9835,
        );
        assert!((intervention_effect(&with, &without).unwrap() + 0.8430).abs() < 1e-12);
        let hinted = acc(
            ConditionSlice::of(VariantKind::OH).with_categories(&[Category::Size]),
            0.5,
        );
        assert!(intervention_effect(&hinted, &without).is_ok());
        let other = acc(
            ConditionSlice::of(VariantKind::P).with_categories(&[Category::Size]),
            0.5,
        );
        assert!(intervention_effect(&other, &without).is_err());
    }
}
