//! Resolution-independent 2D scenes.
//!
//! Geometry lives in abstract scene units. The scene's own [`CanvasConfig`]
//! defines the unit extent; [`rasterize`] maps units to pixels with a single
//! uniform scale factor, so measurements taken with [`measure`] never depend
//! on output resolution.

mod measure;
mod raster;
mod svg;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use measure::{measure, measure_pair, GeometryMeasure, MeasureKind, PairKind};
pub use raster::{rasterize, RasterImage};
pub use svg::{emit_vector, VectorDocument};

/// Default canvas edge length, in pixels and scene units.
pub const DEFAULT_CANVAS: u32 = 768;

const BOUNDS_SLACK: f64 = 1e-6;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error("degenerate canvas {width}x{height}")]
    DegenerateCanvas { width: u32, height: u32 },
    #[error("duplicate element id `{0}`")]
    DuplicateId(String),
    #[error("element `{id}`: {reason}")]
    InvalidElement { id: String, reason: String },
    #[error("unknown element id `{0}`")]
    UnknownElement(String),
    #[error("measure {kind:?} is not applicable to element `{id}`")]
    InapplicableMeasure { id: String, kind: String },
    #[error("unsupported shape on element `{0}`")]
    UnsupportedShape(String),
    #[error("png encoding failed: {0}")]
    Encode(String),
}

/// sRGB color with components in `[0, 1]`; quantized to 8 bits only at output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Color {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl Color {
    pub const BLACK: Color = Color::gray(0.0);
    pub const WHITE: Color = Color::gray(1.0);

    pub const fn rgb(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: f64) -> Self {
        Self { r: v, g: v, b: v }
    }

    /// Rec. 709 luma of the (gamma-encoded) components.
    pub fn luma(&self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }

    pub fn lerp(&self, other: &Color, t: f64) -> Color {
        Color {
            r: self.r + (other.r - self.r) * t,
            g: self.g + (other.g - self.g) * t,
            b: self.b + (other.b - self.b) * t,
        }
    }

    pub fn to_rgb8(&self) -> [u8; 3] {
        [quantize(self.r), quantize(self.g), quantize(self.b)]
    }

    pub fn hex(&self) -> String {
        let [r, g, b] = self.to_rgb8();
        format!("#{r:02x}{g:02x}{b:02x}")
    }

    fn is_valid(&self) -> bool {
        [self.r, self.g, self.b]
            .iter()
            .all(|c| c.is_finite() && (0.0..=1.0).contains(c))
    }
}

pub(crate) fn quantize(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn offset(&self, dx: f64, dy: f64) -> Point {
        Point::new(self.x + dx, self.y + dy)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Target,
    Inducer,
    Hint,
    Decoration,
}

/// Two-stop linear gradient in scene units; the color is clamped past either stop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearGradient {
    pub start: Point,
    pub end: Point,
    pub from: Color,
    pub to: Color,
}

impl LinearGradient {
    /// Interpolation parameter of `p`, clamped to `[0, 1]`.
    pub fn param(&self, p: Point) -> f64 {
        let dx = self.end.x - self.start.x;
        let dy = self.end.y - self.start.y;
        let len2 = dx * dx + dy * dy;
        (((p.x - self.start.x) * dx + (p.y - self.start.y) * dy) / len2).clamp(0.0, 1.0)
    }

    pub fn color_at(&self, p: Point) -> Color {
        self.from.lerp(&self.to, self.param(p))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Paint {
    Solid { color: Color },
    Linear { gradient: LinearGradient },
}

impl Paint {
    pub fn solid(color: Color) -> Self {
        Paint::Solid { color }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stroke {
    pub width: f64,
    pub color: Color,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Line { from: Point, to: Point },
    Polyline { points: Vec<Point> },
    Circle { center: Point, radius: f64 },
    Polygon { points: Vec<Point> },
    Rect { x: f64, y: f64, width: f64, height: f64 },
}

impl Shape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Line { .. } => "line",
            Shape::Polyline { .. } => "polyline",
            Shape::Circle { .. } => "circle",
            Shape::Polygon { .. } => "polygon",
            Shape::Rect { .. } => "rect",
        }
    }

    /// Axis-aligned bounds of the geometry, ignoring stroke width.
    pub fn bounds(&self) -> (Point, Point) {
        match self {
            Shape::Line { from, to } => bounds_of([*from, *to].iter()),
            Shape::Polyline { points } | Shape::Polygon { points } => bounds_of(points.iter()),
            Shape::Circle { center, radius } => (center.offset(-radius, -radius), center.offset(*radius, *radius)),
            Shape::Rect { x, y, width, height } => (Point::new(*x, *y), Point::new(x + width, y + height)),
        }
    }

    /// Representative point used by pairwise distance measures.
    pub fn anchor(&self) -> Point {
        match self {
            Shape::Line { from, to } => Point::new((from.x + to.x) / 2.0, (from.y + to.y) / 2.0),
            Shape::Circle { center, .. } => *center,
            Shape::Rect { x, y, width, height } => Point::new(x + width / 2.0, y + height / 2.0),
            Shape::Polyline { points } | Shape::Polygon { points } => {
                let n = points.len() as f64;
                let (sx, sy) = points.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
                Point::new(sx / n, sy / n)
            }
        }
    }

    fn points(&self) -> Vec<Point> {
        match self {
            Shape::Line { from, to } => vec![*from, *to],
            Shape::Polyline { points } | Shape::Polygon { points } => points.clone(),
            Shape::Circle { center, .. } => vec![*center],
            Shape::Rect { x, y, .. } => vec![Point::new(*x, *y)],
        }
    }

    /// Rigid translation of the geometry.
    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        let mv = |p: &Point| p.offset(dx, dy);
        match self {
            Shape::Line { from, to } => Shape::Line {
                from: mv(from),
                to: mv(to),
            },
            Shape::Polyline { points } => Shape::Polyline {
                points: points.iter().map(mv).collect(),
            },
            Shape::Polygon { points } => Shape::Polygon {
                points: points.iter().map(mv).collect(),
            },
            Shape::Circle { center, radius } => Shape::Circle {
                center: mv(center),
                radius: *radius,
            },
            Shape::Rect { x, y, width, height } => Shape::Rect {
                x: x + dx,
                y: y + dy,
                width: *width,
                height: *height,
            },
        }
    }
}

fn bounds_of<'a>(points: impl Iterator<Item = &'a Point>) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub id: String,
    pub role: Role,
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fill: Option<Paint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stroke: Option<Stroke>,
}

impl Element {
    pub fn stroked(id: impl Into<String>, role: Role, shape: Shape, width: f64, color: Color) -> Self {
        Self {
            id: id.into(),
            role,
            shape,
            fill: None,
            stroke: Some(Stroke { width, color }),
        }
    }

    pub fn filled(id: impl Into<String>, role: Role, shape: Shape, paint: Paint) -> Self {
        Self {
            id: id.into(),
            role,
            shape,
            fill: Some(paint),
            stroke: None,
        }
    }

    pub fn with_stroke(mut self, width: f64, color: Color) -> Self {
        self.stroke = Some(Stroke { width, color });
        self
    }

    fn validate(&self, canvas: &CanvasConfig) -> Result<(), SceneError> {
        let bad = |reason: &str| SceneError::InvalidElement {
            id: self.id.clone(),
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(bad("empty id"));
        }
        if !self.shape.points().iter().all(Point::is_finite) {
            return Err(bad("non-finite geometry"));
        }
        match &self.shape {
            Shape::Line { from, to } if from == to => return Err(bad("zero-length line")),
            Shape::Polyline { points } if points.len() < 2 => return Err(bad("polyline needs at least two points")),
            Shape::Polygon { points } if points.len() < 3 => return Err(bad("polygon needs at least three points")),
            Shape::Circle { radius, .. } if !(radius.is_finite() && *radius > 0.0) => {
                return Err(bad("radius must be positive"))
            }
            Shape::Rect { width, height, .. }
                if !(width.is_finite() && height.is_finite() && *width > 0.0 && *height > 0.0) =>
            {
                return Err(bad("rect extent must be positive"))
            }
            _ => {}
        }
        let open = matches!(self.shape, Shape::Line { .. } | Shape::Polyline { .. });
        if open && self.fill.is_some() {
            return Err(bad("open shapes cannot be filled"));
        }
        if self.fill.is_none() && self.stroke.is_none() {
            return Err(bad("element paints nothing"));
        }
        if let Some(stroke) = &self.stroke {
            if !(stroke.width.is_finite() && stroke.width > 0.0) || !stroke.color.is_valid() {
                return Err(bad("invalid stroke"));
            }
        }
        match &self.fill {
            Some(Paint::Solid { color }) if !color.is_valid() => return Err(bad("invalid fill color")),
            Some(Paint::Linear { gradient }) => {
                if !gradient.start.is_finite()
                    || !gradient.end.is_finite()
                    || gradient.start == gradient.end
                    || !gradient.from.is_valid()
                    || !gradient.to.is_valid()
                {
                    return Err(bad("invalid gradient"));
                }
            }
            _ => {}
        }
        let (lo, hi) = self.shape.bounds();
        let (w, h) = (canvas.width as f64, canvas.height as f64);
        if lo.x < -BOUNDS_SLACK || lo.y < -BOUNDS_SLACK || hi.x > w + BOUNDS_SLACK || hi.y > h + BOUNDS_SLACK {
            return Err(bad("geometry outside canvas"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanvasConfig {
    pub width: u32,
    pub height: u32,
    pub background: Color,
}

impl Default for CanvasConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_CANVAS,
            height: DEFAULT_CANVAS,
            background: Color::WHITE,
        }
    }
}

impl CanvasConfig {
    pub fn square(size: u32, background: Color) -> Self {
        Self {
            width: size,
            height: size,
            background,
        }
    }

    fn check(&self) -> Result<(), SceneError> {
        if self.width == 0 || self.height == 0 {
            return Err(SceneError::DegenerateCanvas {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// Ordered list of elements; later elements paint over earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub canvas: CanvasConfig,
    pub elements: Vec<Element>,
}

impl Scene {
    pub fn new(canvas: CanvasConfig) -> Self {
        Self {
            canvas,
            elements: Vec::new(),
        }
    }

    pub fn push(&mut self, element: Element) {
        self.elements.push(element);
    }

    pub fn get(&self, id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.id == id)
    }

    pub fn ids_with_role(&self, role: Role) -> Vec<String> {
        self.elements
            .iter()
            .filter(|e| e.role == role)
            .map(|e| e.id.clone())
            .collect()
    }

    pub fn count_role(&self, role: Role) -> usize {
        self.elements.iter().filter(|e| e.role == role).count()
    }

    /// Sub-scene restricted to the given roles, preserving order.
    pub fn restricted_to(&self, roles: &[Role]) -> Scene {
        Scene {
            canvas: self.canvas,
            elements: self
                .elements
                .iter()
                .filter(|e| roles.contains(&e.role))
                .cloned()
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.canvas.check()?;
        let mut seen = BTreeSet::new();
        for e in &self.elements {
            if !seen.insert(e.id.as_str()) {
                return Err(SceneError::DuplicateId(e.id.clone()));
            }
            e.validate(&self.canvas)?;
        }
        Ok(())
    }

    /// Canonical JSON: object keys sorted, shortest round-trip floats.
    pub fn to_canonical_json(&self) -> String {
        // serde_json::Value keeps object keys in a BTreeMap.
        let value = serde_json::to_value(self).expect("scene serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn from_json(text: &str) -> Result<Scene, serde_json::Error> {
        serde_json::from_str(text)
    }
}
