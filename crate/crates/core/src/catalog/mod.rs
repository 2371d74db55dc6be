//! The 27 parametric illusion cases.
//!
//! Each case has a generator that lays out target and inducer elements and
//! applies a signed perturbation strength `alpha` to one physical factor.
//!
//! Sign convention: `alpha > 0` changes the designated target ("target-a") in
//! the direction of the classic illusory percept: it becomes longer or larger,
//! brighter, or bends or shifts the way the illusion makes it look.
//! `alpha < 0` moves it the opposite way. `alpha = 0` gives the classic,
//! physically unaltered stimulus.

mod cases;
mod hints;
mod style;

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::scene::{Role, Scene, SceneError};

pub use cases::measured_settings;
pub use style::{enumerate_style_variants, Palette, StyleParams, STYLE_SPACE};

const CATALOG_JSON: &str = include_str!("catalog.json");

/// Scene-space tolerance used when comparing measured factors to their settings.
pub const FACTOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("unknown case {0}")]
    UnknownCase(u8),
    #[error("alpha {0} outside [-1, 1]")]
    AlphaOutOfRange(f64),
    #[error("variant {kind} cannot use alpha {alpha}")]
    InvalidCombination { kind: VariantKind, alpha: f64 },
    #[error("invalid style: {0}")]
    InvalidStyle(String),
    #[error("case {case_id}: generated factor {measured:?} differs from requested {expected:?}")]
    FactorMismatch {
        case_id: u8,
        expected: FactorSetting,
        measured: FactorSetting,
    },
    #[error("scene was not produced by case {0}")]
    ForeignScene(u8),
    #[error("catalog file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Size,
    Color,
    Orientation,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Size => "size",
            Category::Color => "color",
            Category::Orientation => "orientation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllingFactor {
    SizeRatio,
    LineLength,
    LocalContrast,
    CurvatureOffset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDescriptor {
    pub case_id: u8,
    pub name: String,
    pub category: Category,
    pub forward_question: String,
    pub reverse_question: String,
    pub classic_forward_label: u8,
    /// Label authored for the inducer-only image; matching it signals recall.
    pub inducer_only_label: u8,
    pub controlling_factor: ControllingFactor,
    /// Factor change at `|alpha| = 1`: ratio delta, luma gap, or deviation in scene units.
    pub max_delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Catalog {
    pub version: String,
    pub cases: Vec<CaseDescriptor>,
}

impl Catalog {
    pub fn from_json(text: &str) -> Result<Catalog, CatalogError> {
        Ok(serde_json::from_str(text)?)
    }

    /// The catalog shipped with the crate.
    pub fn builtin() -> &'static Catalog {
        static CATALOG: OnceLock<Catalog> = OnceLock::new();
        CATALOG.get_or_init(|| Catalog::from_json(CATALOG_JSON).expect("bundled catalog parses"))
    }

    pub fn case(&self, case_id: u8) -> Result<&CaseDescriptor, CatalogError> {
        self.cases
            .iter()
            .find(|c| c.case_id == case_id)
            .ok_or(CatalogError::UnknownCase(case_id))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serializes")
    }
}

/// All case descriptors, ordered by id.
pub fn list_cases() -> &'static [CaseDescriptor] {
    &Catalog::builtin().cases
}

pub fn case(case_id: u8) -> Result<&'static CaseDescriptor, CatalogError> {
    Catalog::builtin().case(case_id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantKind {
    O,
    P,
    OC,
    PC,
    OH,
    PH,
    IND,
}

impl VariantKind {
    pub const ALL: [VariantKind; 7] = [
        VariantKind::O,
        VariantKind::P,
        VariantKind::OC,
        VariantKind::PC,
        VariantKind::OH,
        VariantKind::PH,
        VariantKind::IND,
    ];

    pub fn is_perturbed(self) -> bool {
        matches!(self, VariantKind::P | VariantKind::PC | VariantKind::PH)
    }

    pub fn is_control(self) -> bool {
        matches!(self, VariantKind::OC | VariantKind::PC)
    }

    pub fn is_hinted(self) -> bool {
        matches!(self, VariantKind::OH | VariantKind::PH)
    }

    /// The variant with the same inducers and no hints or removals.
    pub fn unhinted(self) -> VariantKind {
        match self {
            VariantKind::OH => VariantKind::O,
            VariantKind::PH => VariantKind::P,
            other => other,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            VariantKind::O => "O",
            VariantKind::P => "P",
            VariantKind::OC => "OC",
            VariantKind::PC => "PC",
            VariantKind::OH => "OH",
            VariantKind::PH => "PH",
            VariantKind::IND => "IND",
        }
    }

    pub fn parse(code: &str) -> Option<VariantKind> {
        VariantKind::ALL.into_iter().find(|k| k.code() == code)
    }

    pub fn check_alpha(self, alpha: Alpha) -> Result<(), CatalogError> {
        if self.is_perturbed() == (alpha.value() != 0.0) {
            Ok(())
        } else {
            Err(CatalogError::InvalidCombination {
                kind: self,
                alpha: alpha.value(),
            })
        }
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// Signed perturbation strength in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Alpha(f64);

impl Alpha {
    pub const ZERO: Alpha = Alpha(0.0);

    pub fn new(value: f64) -> Result<Alpha, CatalogError> {
        if value.is_finite() && (-1.0..=1.0).contains(&value) {
            // Normalize -0.0 so keys and hashes agree.
            Ok(Alpha(if value == 0.0 { 0.0 } else { value }))
        } else {
            Err(CatalogError::AlphaOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn magnitude(self) -> f64 {
        self.0.abs()
    }

    /// Fixed-width label such as `+0.20`, used in ids and file names.
    pub fn key(self) -> String {
        format!("{:+.2}", self.0)
    }

    /// The ten signed levels ±0.2, ±0.4, ..., ±1.0, in ascending order.
    pub fn canonical_grid() -> Vec<Alpha> {
        let mut grid: Vec<Alpha> = (1..=5)
            .flat_map(|k| {
                let v = k as f64 / 5.0;
                [Alpha(-v), Alpha(v)]
            })
            .collect();
        grid.sort_by(|a, b| a.0.total_cmp(&b.0));
        grid
    }
}

impl TryFrom<f64> for Alpha {
    type Error = CatalogError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Alpha::new(value)
    }
}

impl From<Alpha> for f64 {
    fn from(a: Alpha) -> f64 {
        a.0
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Physical setting of a case's controlled factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "factor", content = "value", rename_all = "snake_case")]
pub enum FactorSetting {
    /// target-a size over target-b size.
    SizeRatio(f64),
    /// Luma of target-a minus luma of target-b.
    LuminanceGap(f64),
    /// Curvature, offset, or lean in scene units.
    Deviation(f64),
}

impl FactorSetting {
    pub fn value(self) -> f64 {
        match self {
            FactorSetting::SizeRatio(v) | FactorSetting::LuminanceGap(v) | FactorSetting::Deviation(v) => v,
        }
    }

    /// True when the setting describes physically equal / straight / aligned targets.
    pub fn is_neutral(self) -> bool {
        self.approx_eq(&self.neutral())
    }

    fn neutral(self) -> FactorSetting {
        match self {
            FactorSetting::SizeRatio(_) => FactorSetting::SizeRatio(1.0),
            FactorSetting::LuminanceGap(_) => FactorSetting::LuminanceGap(0.0),
            FactorSetting::Deviation(_) => FactorSetting::Deviation(0.0),
        }
    }

    pub fn approx_eq(&self, other: &FactorSetting) -> bool {
        let same_kind = std::mem::discriminant(self) == std::mem::discriminant(other);
        let (a, b) = (self.value(), other.value());
        same_kind && (a - b).abs() <= FACTOR_TOLERANCE * a.abs().max(b.abs()).max(1.0)
    }
}

/// Maps a signed strength to the physical factor setting of a case.
pub fn map_alpha(case_id: u8, alpha: f64) -> Result<FactorSetting, CatalogError> {
    let desc = case(case_id)?;
    let alpha = Alpha::new(alpha)?;
    Ok(setting_for(desc, alpha))
}

fn setting_for(desc: &CaseDescriptor, alpha: Alpha) -> FactorSetting {
    let a = alpha.value();
    match desc.category {
        Category::Size => FactorSetting::SizeRatio(1.0 + a * desc.max_delta),
        Category::Color => FactorSetting::LuminanceGap(a * desc.max_delta),
        Category::Orientation => FactorSetting::Deviation(a * desc.max_delta),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroundTruth {
    pub y_forward: u8,
    pub y_reverse: u8,
    pub y_instructional: u8,
}

impl GroundTruth {
    pub fn from_forward(y_forward: u8) -> Self {
        Self {
            y_forward,
            y_reverse: 1 - y_forward,
            y_instructional: y_forward,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.y_forward <= 1 && self.y_reverse == 1 - self.y_forward && self.y_instructional == self.y_forward
    }
}

pub fn ground_truth(case_id: u8, kind: VariantKind, alpha: f64) -> Result<GroundTruth, CatalogError> {
    let desc = case(case_id)?;
    let alpha = Alpha::new(alpha)?;
    kind.check_alpha(alpha)?;
    Ok(ground_truth_for(desc, kind))
}

fn ground_truth_for(desc: &CaseDescriptor, kind: VariantKind) -> GroundTruth {
    let y = match kind {
        VariantKind::O | VariantKind::OC | VariantKind::OH => desc.classic_forward_label,
        VariantKind::P | VariantKind::PC | VariantKind::PH => 1 - desc.classic_forward_label,
        VariantKind::IND => desc.inducer_only_label,
    };
    GroundTruth::from_forward(y)
}

/// Builds one stimulus variant and its labels. Pure in its arguments.
pub fn generate_variant(
    case_id: u8,
    kind: VariantKind,
    alpha: f64,
    style: &StyleParams,
) -> Result<(Scene, GroundTruth), CatalogError> {
    let desc = case(case_id)?;
    let alpha = Alpha::new(alpha)?;
    kind.check_alpha(alpha)?;
    style.validate()?;
    let setting = setting_for(desc, alpha);
    let mut scene = cases::compose(desc, setting, style);
    match kind {
        VariantKind::OC | VariantKind::PC => scene.elements.retain(|e| e.role != Role::Inducer),
        VariantKind::IND => scene.elements.retain(|e| e.role == Role::Inducer),
        _ => {}
    }
    if kind.is_hinted() {
        hints::add_hints(desc, &mut scene);
    }
    scene.validate()?;
    if kind != VariantKind::IND {
        for measured in measured_settings(case_id, &scene)? {
            if !measured.approx_eq(&setting) {
                return Err(CatalogError::FactorMismatch {
                    case_id,
                    expected: setting,
                    measured,
                });
            }
        }
    }
    Ok((scene, ground_truth_for(desc, kind)))
}

pub(crate) fn id_prefix(case_id: u8) -> String {
    format!("c{case_id:02}.")
}

/// Ids of the inducer-role elements of a scene generated for `case_id`.
pub fn inducer_ids(case_id: u8, scene: &Scene) -> Result<Vec<String>, CatalogError> {
    case(case_id)?;
    let prefix = id_prefix(case_id);
    if scene.elements.iter().any(|e| !e.id.starts_with(&prefix)) {
        return Err(CatalogError::ForeignScene(case_id));
    }
    Ok(scene.ids_with_role(Role::Inducer))
}
