//! Exact scene-space measurements. Nothing here touches pixels.

use serde::{Deserialize, Serialize};

use super::{Element, LinearGradient, Paint, Point, Scene, SceneError, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Length,
    Diameter,
    Area,
    /// Signed deviation of a polyline from its chord at the vertex farthest
    /// from it; positive to the left of the chord direction (y axis down).
    CurvatureMax,
    /// Largest distance of any vertex from the line through the first two.
    AlignmentOffset,
    MeanLuminance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    /// Distance between the anchor points of two elements.
    Distance,
    /// Signed perpendicular distance from the start of `b` to the infinite line through `a`.
    AlignmentOffset,
    /// How far the far end of `b` leans off a parallel to `a` through the start of `b`.
    Skew,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryMeasure {
    pub element_id: String,
    pub kind: MeasureKind,
    pub value: f64,
}

fn element<'a>(scene: &'a Scene, id: &str) -> Result<&'a Element, SceneError> {
    scene.get(id).ok_or_else(|| SceneError::UnknownElement(id.to_string()))
}

fn inapplicable(id: &str, kind: impl std::fmt::Debug) -> SceneError {
    SceneError::InapplicableMeasure {
        id: id.to_string(),
        kind: format!("{kind:?}"),
    }
}

fn cross(o: Point, a: Point, p: Point) -> f64 {
    (a.x - o.x) * (p.y - o.y) - (a.y - o.y) * (p.x - o.x)
}

/// Signed distance of `p` from the directed line `a -> b`; positive on the left.
fn line_distance(a: Point, b: Point, p: Point) -> f64 {
    // With y pointing down, "left" of the direction has negative cross product.
    -cross(a, b, p) / a.distance(&b)
}

fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

fn gradient_mean(gradient: &LinearGradient, x: f64, y: f64, width: f64, height: f64) -> Option<f64> {
    // Antiderivative of clamp(u, 0, 1).
    fn ramp_integral(u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else if u < 1.0 {
            u * u / 2.0
        } else {
            u - 0.5
        }
    }
    let (s, e) = (gradient.start, gradient.end);
    let (a, b, lo, hi) = if s.y == e.y {
        (s.x, e.x, x, x + width)
    } else if s.x == e.x {
        (s.y, e.y, y, y + height)
    } else {
        return None;
    };
    let u = |v: f64| (v - a) / (b - a);
    let mean_t = (b - a) * (ramp_integral(u(hi)) - ramp_integral(u(lo))) / (hi - lo);
    let (l0, l1) = (gradient.from.luma(), gradient.to.luma());
    Some(l0 + (l1 - l0) * mean_t)
}

/// Measures one element of the scene in scene units.
pub fn measure(scene: &Scene, element_id: &str, kind: MeasureKind) -> Result<GeometryMeasure, SceneError> {
    let e = element(scene, element_id)?;
    let fail = || inapplicable(element_id, kind);
    let value = match (kind, &e.shape) {
        (MeasureKind::Length, Shape::Line { from, to }) => from.distance(to),
        (MeasureKind::Length, Shape::Polyline { points }) => polyline_length(points),
        (MeasureKind::Diameter, Shape::Circle { radius, .. }) => 2.0 * radius,
        (MeasureKind::Diameter, Shape::Rect { width, height, .. }) => width.hypot(*height),
        (MeasureKind::Diameter, Shape::Polygon { points }) => points
            .iter()
            .flat_map(|a| points.iter().map(move |b| a.distance(b)))
            .fold(0.0, f64::max),
        (MeasureKind::Area, Shape::Circle { radius, .. }) => std::f64::consts::PI * radius * radius,
        (MeasureKind::Area, Shape::Rect { width, height, .. }) => width * height,
        (MeasureKind::Area, Shape::Polygon { points }) => {
            let n = points.len();
            ((0..n)
                .map(|i| {
                    let (a, b) = (points[i], points[(i + 1) % n]);
                    a.x * b.y - b.x * a.y
                })
                .sum::<f64>()
                / 2.0)
                .abs()
        }
        (MeasureKind::CurvatureMax, Shape::Line { .. }) => 0.0,
        (MeasureKind::CurvatureMax, Shape::Polyline { points }) => {
            let (a, b) = (points[0], points[points.len() - 1]);
            points
                .iter()
                .map(|p| line_distance(a, b, *p))
                .fold(0.0, |best: f64, d| if d.abs() > best.abs() { d } else { best })
        }
        (MeasureKind::AlignmentOffset, Shape::Line { .. }) => 0.0,
        (MeasureKind::AlignmentOffset, Shape::Polyline { points }) => {
            let (a, b) = (points[0], points[1]);
            points.iter().map(|p| line_distance(a, b, *p).abs()).fold(0.0, f64::max)
        }
        (MeasureKind::MeanLuminance, shape) => match (&e.fill, &e.stroke, shape) {
            (Some(Paint::Solid { color }), _, _) => color.luma(),
            (Some(Paint::Linear { gradient }), _, Shape::Rect { x, y, width, height }) => {
                gradient_mean(gradient, *x, *y, *width, *height).ok_or_else(fail)?
            }
            (None, Some(stroke), _) => stroke.color.luma(),
            _ => return Err(fail()),
        },
        _ => return Err(fail()),
    };
    Ok(GeometryMeasure {
        element_id: element_id.to_string(),
        kind,
        value,
    })
}

/// Relational measure between two elements.
pub fn measure_pair(scene: &Scene, a: &str, b: &str, kind: PairKind) -> Result<f64, SceneError> {
    let ea = element(scene, a)?;
    let eb = element(scene, b)?;
    match kind {
        PairKind::Distance => Ok(ea.shape.anchor().distance(&eb.shape.anchor())),
        PairKind::AlignmentOffset | PairKind::Skew => {
            let (a0, a1) = match &ea.shape {
                Shape::Line { from, to } => (*from, *to),
                _ => return Err(inapplicable(a, kind)),
            };
            let (b0, b1) = match &eb.shape {
                Shape::Line { from, to } => (*from, *to),
                _ => return Err(inapplicable(b, kind)),
            };
            Ok(match kind {
                PairKind::AlignmentOffset => line_distance(a0, a1, b0),
                _ => {
                    let shifted = b0.offset(a1.x - a0.x, a1.y - a0.y);
                    line_distance(b0, shifted, b1)
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{CanvasConfig, Color, Role};

    fn scene_with(elements: Vec<Element>) -> Scene {
        Scene {
            canvas: CanvasConfig::default(),
            elements,
        }
    }

    fn line(id: &str, a: (f64, f64), b: (f64, f64)) -> Element {
        Element::stroked(
            id,
            Role::Target,
            Shape::Line {
                from: Point::new(a.0, a.1),
                to: Point::new(b.0, b.1),
            },
            1.0,
            Color::BLACK,
        )
    }

    #[test]
    fn pythagorean_length() {
        let s = scene_with(vec![line("l", (0.0, 0.0), (3.0, 4.0))]);
        assert_eq!(measure(&s, "l", MeasureKind::Length).unwrap().value, 5.0);
    }

    #[test]
    fn circle_diameter() {
        let s = scene_with(vec![Element::filled(
            "c",
            Role::Target,
            Shape::Circle {
                center: Point::new(100.0, 100.0),
                radius: 7.0,
            },
            Paint::solid(Color::BLACK),
        )]);
        assert_eq!(measure(&s, "c", MeasureKind::Diameter).unwrap().value, 14.0);
        assert!(matches!(
            measure(&s, "c", MeasureKind::AlignmentOffset),
            Err(SceneError::InapplicableMeasure { .. })
        ));
        assert!(matches!(
            measure(&s, "nope", MeasureKind::Diameter),
            Err(SceneError::UnknownElement(_))
        ));
    }

    #[test]
    fn sampled_arc_curvature_equals_analytic_sagitta() {
        // Circular arc of radius 200 spanning 60 degrees, sampled with the
        // apex included; sagitta is R(1 - cos(theta/2)).
        let radius = 200.0_f64;
        let half = 30f64.to_radians();
        let center = Point::new(384.0, 500.0);
        let points: Vec<Point> = (0..=40)
            .map(|i| {
                let t = -half + 2.0 * half * i as f64 / 40.0;
                Point::new(center.x + radius * t.sin(), center.y - radius * t.cos())
            })
            .collect();
        let s = scene_with(vec![Element::stroked(
            "arc",
            Role::Target,
            Shape::Polyline { points },
            1.0,
            Color::BLACK,
        )]);
        let expected = radius * (1.0 - half.cos());
        let got = measure(&s, "arc", MeasureKind::CurvatureMax).unwrap().value;
        // Bulges upward (negative y), which is left of the left-to-right chord.
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn gradient_rect_mean_luminance() {
        let gradient = LinearGradient {
            start: Point::new(10.0, 0.0),
            end: Point::new(30.0, 0.0),
            from: Color::gray(0.2),
            to: Color::gray(0.6),
        };
        let s = scene_with(vec![Element::filled(
            "g",
            Role::Inducer,
            Shape::Rect {
                x: 0.0,
                y: 0.0,
                width: 40.0,
                height: 5.0,
            },
            Paint::Linear { gradient },
        )]);
        // 10 units at 0.2, 20 units ramp (mean 0.4), 10 units at 0.6.
        let expected = (10.0 * 0.2 + 20.0 * 0.4 + 10.0 * 0.6) / 40.0;
        let got = measure(&s, "g", MeasureKind::MeanLuminance).unwrap().value;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn pair_measures() {
        let s = scene_with(vec![
            line("a", (0.0, 0.0), (10.0, 10.0)),
            line("b", (20.0, 20.0), (30.0, 30.0)),
            line("c", (20.0, 22.0), (30.0, 32.0)),
            line("v1", (100.0, 0.0), (100.0, 100.0)),
            line("v2", (120.0, 0.0), (125.0, 100.0)),
        ]);
        assert!(measure_pair(&s, "a", "b", PairKind::AlignmentOffset).unwrap().abs() < 1e-12);
        let off = measure_pair(&s, "a", "c", PairKind::AlignmentOffset).unwrap();
        assert!((off.abs() - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(measure_pair(&s, "a", "b", PairKind::Skew).unwrap().abs() < 1e-12);
        assert!((measure_pair(&s, "v1", "v2", PairKind::Skew).unwrap().abs() - 5.0).abs() < 1e-12);
        assert_eq!(measure_pair(&s, "v1", "v2", PairKind::Distance).unwrap(), 22.5);
    }
}
