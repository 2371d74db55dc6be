//! Hint overlays. Hints are only ever appended; targets and inducers are untouched.

use super::{id_prefix, CaseDescriptor, Category};
use crate::scene::{Color, Element, LinearGradient, Paint, Point, Role, Scene, Shape, Stroke};

const HINT_INK: Color = Color::rgb(0.45, 0.62, 0.95);
const GRID_STEP: f64 = 64.0;

pub(super) fn add_hints(desc: &CaseDescriptor, scene: &mut Scene) {
    let prefix = format!("{}hint.", id_prefix(desc.case_id));
    let hints = match desc.category {
        Category::Size => measurement_ticks(scene),
        Category::Orientation => reference_grid(scene),
        Category::Color => connecting_band(desc, scene),
    };
    for (name, shape, fill, stroke) in hints {
        scene.push(Element {
            id: format!("{prefix}{name}"),
            role: Role::Hint,
            shape,
            fill,
            stroke,
        });
    }
}

type Hint = (String, Shape, Option<Paint>, Option<Stroke>);

fn ink(width: f64) -> Option<Stroke> {
    Some(Stroke { width, color: HINT_INK })
}

/// A ruler under all targets with ticks at every target's horizontal extremes.
fn measurement_ticks(scene: &Scene) -> Vec<Hint> {
    let bounds: Vec<(Point, Point)> = scene
        .elements
        .iter()
        .filter(|e| e.role == Role::Target)
        .map(|e| e.shape.bounds())
        .collect();
    if bounds.is_empty() {
        return Vec::new();
    }
    let lowest = bounds.iter().map(|b| b.1.y).fold(f64::NEG_INFINITY, f64::max);
    let highest = bounds.iter().map(|b| b.0.y).fold(f64::INFINITY, f64::min);
    let y = if lowest + 32.0 < scene.canvas.height as f64 {
        lowest + 24.0
    } else {
        highest - 24.0
    };
    let mut xs: Vec<f64> = bounds.iter().flat_map(|b| [b.0.x, b.1.x]).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let mut out = Vec::new();
    let (left, right) = (xs[0], xs[xs.len() - 1]);
    if right - left > 1e-9 {
        out.push((
            "ruler".to_string(),
            Shape::Line {
                from: Point::new(left, y),
                to: Point::new(right, y),
            },
            None,
            ink(1.5),
        ));
    }
    for (k, x) in xs.into_iter().enumerate() {
        out.push((
            format!("tick-{k}"),
            Shape::Line {
                from: Point::new(x, y - 7.0),
                to: Point::new(x, y + 7.0),
            },
            None,
            ink(1.5),
        ));
    }
    out
}

fn reference_grid(scene: &Scene) -> Vec<Hint> {
    let (w, h) = (scene.canvas.width as f64, scene.canvas.height as f64);
    let mut out = Vec::new();
    let mut k = 1;
    while GRID_STEP * k as f64 <= w - GRID_STEP {
        let x = GRID_STEP * k as f64;
        out.push((
            format!("grid-v-{k}"),
            Shape::Line {
                from: Point::new(x, GRID_STEP / 2.0),
                to: Point::new(x, h - GRID_STEP / 2.0),
            },
            None,
            ink(1.0),
        ));
        k += 1;
    }
    let mut k = 1;
    while GRID_STEP * k as f64 <= h - GRID_STEP {
        let y = GRID_STEP * k as f64;
        out.push((
            format!("grid-h-{k}"),
            Shape::Line {
                from: Point::new(GRID_STEP / 2.0, y),
                to: Point::new(w - GRID_STEP / 2.0, y),
            },
            None,
            ink(1.0),
        ));
        k += 1;
    }
    out
}

fn solid_fill(e: &Element) -> Option<Color> {
    match e.fill {
        Some(Paint::Solid { color }) => Some(color),
        _ => None,
    }
}

/// A band from target-a to target-b, graded between their two fill colors.
fn connecting_band(desc: &CaseDescriptor, scene: &Scene) -> Vec<Hint> {
    let prefix = id_prefix(desc.case_id);
    let a = scene.get(&format!("{prefix}target.target-a"));
    let b = scene.get(&format!("{prefix}target.target-b"));
    let (Some(a), Some(b)) = (a, b) else {
        return Vec::new();
    };
    let (Some(ca), Some(cb)) = (solid_fill(a), solid_fill(b)) else {
        return Vec::new();
    };
    let (pa, pb) = (a.shape.anchor(), b.shape.anchor());
    let len = pa.distance(&pb);
    let half = 6.0;
    let (nx, ny) = (-(pb.y - pa.y) / len * half, (pb.x - pa.x) / len * half);
    let quad = Shape::Polygon {
        points: vec![
            pa.offset(nx, ny),
            pb.offset(nx, ny),
            pb.offset(-nx, -ny),
            pa.offset(-nx, -ny),
        ],
    };
    let gradient = LinearGradient {
        start: pa,
        end: pb,
        from: ca,
        to: cb,
    };
    vec![(
        "band".to_string(),
        quad,
        Some(Paint::Linear { gradient }),
        Some(Stroke {
            width: 1.0,
            color: HINT_INK,
        }),
    )]
}
