//! Deterministic scanline rasterizer.
//!
//! Every shape is flattened to closed polygons and filled with the nonzero
//! rule on a fixed 16x16 sub-sample grid per pixel. Compositing is integer
//! source-over in 8-bit sRGB, so output bytes depend only on the inputs.

use std::f64::consts::PI;
use std::io::Cursor;

use super::{CanvasConfig, Color, Element, LinearGradient, Paint, Point, Scene, SceneError, Shape};

const SUBSAMPLES: usize = 16;
const FULL: u32 = (SUBSAMPLES * SUBSAMPLES) as u32;

/// 8-bit RGB pixel buffer, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RasterImage {
    fn filled(width: u32, height: u32, color: Color) -> Self {
        let px = color.to_rgb8();
        let mut data = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..(width as usize * height as usize) {
            data.extend_from_slice(&px);
        }
        Self { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Rec. 709 luma per pixel on the 0..=255 scale.
    pub fn luma_plane(&self) -> Vec<f64> {
        self.data
            .chunks_exact(3)
            .map(|p| 0.2126 * p[0] as f64 + 0.7152 * p[1] as f64 + 0.0722 * p[2] as f64)
            .collect()
    }

    pub fn to_png(&self) -> Result<Vec<u8>, SceneError> {
        let mut out = Vec::new();
        {
            let mut encoder = png::Encoder::new(Cursor::new(&mut out), self.width, self.height);
            encoder.set_color(png::ColorType::Rgb);
            encoder.set_depth(png::BitDepth::Eight);
            encoder.set_compression(png::Compression::Balanced);
            encoder.set_filter(png::Filter::Adaptive);
            let mut writer = encoder.write_header().map_err(|e| SceneError::Encode(e.to_string()))?;
            writer
                .write_image_data(&self.data)
                .map_err(|e| SceneError::Encode(e.to_string()))?;
        }
        Ok(out)
    }
}

/// Maps scene units to pixel space: uniform scale, centered.
#[derive(Debug, Clone, Copy)]
struct Transform {
    scale: f64,
    dx: f64,
    dy: f64,
}

impl Transform {
    fn new(scene: &CanvasConfig, target: &CanvasConfig) -> Self {
        let sx = target.width as f64 / scene.width as f64;
        let sy = target.height as f64 / scene.height as f64;
        let scale = sx.min(sy);
        Self {
            scale,
            dx: (target.width as f64 - scene.width as f64 * scale) / 2.0,
            dy: (target.height as f64 - scene.height as f64 * scale) / 2.0,
        }
    }

    fn apply(&self, p: Point) -> Point {
        Point::new(p.x * self.scale + self.dx, p.y * self.scale + self.dy)
    }

    fn invert(&self, p: Point) -> Point {
        Point::new((p.x - self.dx) / self.scale, (p.y - self.dy) / self.scale)
    }
}

/// Renders `scene` at the resolution and background of `config`.
pub fn rasterize(scene: &Scene, config: &CanvasConfig) -> Result<RasterImage, SceneError> {
    config.check()?;
    scene.validate()?;
    let tf = Transform::new(&scene.canvas, config);
    let mut image = RasterImage::filled(config.width, config.height, config.background);
    for element in &scene.elements {
        draw_element(&mut image, element, &tf);
    }
    Ok(image)
}

fn draw_element(image: &mut RasterImage, element: &Element, tf: &Transform) {
    if let Some(paint) = &element.fill {
        let contours: Vec<Vec<Point>> = fill_contours(&element.shape, tf.scale)
            .into_iter()
            .map(|c| c.into_iter().map(|p| tf.apply(p)).collect())
            .collect();
        let mask = Coverage::of(&contours, image.width, image.height);
        composite(image, &mask, paint, tf);
    }
    if let Some(stroke) = &element.stroke {
        let px: Vec<Vec<Point>> = stroke_contours(&element.shape, stroke.width, tf.scale)
            .into_iter()
            .map(|c| c.into_iter().map(|p| tf.apply(p)).collect())
            .collect();
        let mask = Coverage::of(&px, image.width, image.height);
        composite(image, &mask, &Paint::solid(stroke.color), tf);
    }
}

fn circle_segments(radius_px: f64) -> usize {
    // Sagitta of each chord stays below 1/(8r) px.
    ((2.0 * PI * radius_px).ceil() as usize).max(32)
}

fn circle_contour(center: Point, radius: f64, scale: f64, ccw: bool) -> Vec<Point> {
    let n = circle_segments(radius * scale);
    (0..n)
        .map(|i| {
            let k = if ccw { i } else { n - i };
            let t = 2.0 * PI * k as f64 / n as f64;
            Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
        })
        .collect()
}

fn rect_contour(x: f64, y: f64, w: f64, h: f64) -> Vec<Point> {
    vec![
        Point::new(x, y),
        Point::new(x + w, y),
        Point::new(x + w, y + h),
        Point::new(x, y + h),
    ]
}

fn fill_contours(shape: &Shape, scale: f64) -> Vec<Vec<Point>> {
    match shape {
        Shape::Circle { center, radius } => vec![circle_contour(*center, *radius, scale, true)],
        Shape::Polygon { points } => vec![points.clone()],
        Shape::Rect { x, y, width, height } => vec![rect_contour(*x, *y, *width, *height)],
        Shape::Line { .. } | Shape::Polyline { .. } => Vec::new(),
    }
}

fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let a = points[i];
            let b = points[(i + 1) % n];
            a.x * b.y - b.x * a.y
        })
        .sum::<f64>()
        / 2.0
}

fn oriented(mut contour: Vec<Point>) -> Vec<Point> {
    if signed_area(&contour) < 0.0 {
        contour.reverse();
    }
    contour
}

fn segment_quad(a: Point, b: Point, half: f64) -> Option<Vec<Point>> {
    let len = a.distance(&b);
    if len == 0.0 {
        return None;
    }
    let nx = -(b.y - a.y) / len * half;
    let ny = (b.x - a.x) / len * half;
    Some(oriented(vec![
        a.offset(nx, ny),
        b.offset(nx, ny),
        b.offset(-nx, -ny),
        a.offset(-nx, -ny),
    ]))
}

/// Stroke outline as a union of same-orientation contours (butt caps, round joins).
fn stroke_contours(shape: &Shape, width: f64, scale: f64) -> Vec<Vec<Point>> {
    let half = width / 2.0;
    let path = |points: &[Point], closed: bool| -> Vec<Vec<Point>> {
        let n = points.len();
        let seg_count = if closed { n } else { n - 1 };
        let mut out: Vec<Vec<Point>> = (0..seg_count)
            .filter_map(|i| segment_quad(points[i], points[(i + 1) % n], half))
            .collect();
        let joins: Box<dyn Iterator<Item = usize>> = if closed {
            Box::new(0..n)
        } else {
            Box::new(1..n.saturating_sub(1))
        };
        for j in joins {
            out.push(circle_contour(points[j], half, scale, true));
        }
        out
    };
    match shape {
        Shape::Line { from, to } => path(&[*from, *to], false),
        Shape::Polyline { points } => path(points, false),
        Shape::Polygon { points } => path(points, true),
        Shape::Rect {
            x,
            y,
            width: w,
            height: h,
        } => path(&rect_contour(*x, *y, *w, *h), true),
        Shape::Circle { center, radius } => {
            let mut outer = circle_contour(*center, radius + half, scale, true);
            outer = oriented(outer);
            let mut contours = vec![outer];
            if radius - half > 0.0 {
                let inner = oriented(circle_contour(*center, radius - half, scale, true));
                contours.push(inner.into_iter().rev().collect());
            }
            contours
        }
    }
}

/// Per-pixel sub-sample counts over a bounding window.
struct Coverage {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
    counts: Vec<u32>,
}

struct Edge {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    dir: i32,
}

impl Coverage {
    fn of(contours: &[Vec<Point>], width: u32, height: u32) -> Coverage {
        let mut edges = Vec::new();
        let (mut lo_x, mut lo_y) = (f64::INFINITY, f64::INFINITY);
        let (mut hi_x, mut hi_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for c in contours {
            let n = c.len();
            for i in 0..n {
                let a = c[i];
                let b = c[(i + 1) % n];
                lo_x = lo_x.min(a.x);
                lo_y = lo_y.min(a.y);
                hi_x = hi_x.max(a.x);
                hi_y = hi_y.max(a.y);
                if a.y == b.y {
                    continue;
                }
                let (dir, p, q) = if a.y < b.y { (1, a, b) } else { (-1, b, a) };
                edges.push(Edge {
                    x0: p.x,
                    y0: p.y,
                    x1: q.x,
                    y1: q.y,
                    dir,
                });
            }
        }
        let clamp = |v: f64, max: u32| -> usize { v.max(0.0).min(max as f64) as usize };
        let x0 = clamp(lo_x.floor(), width);
        let y0 = clamp(lo_y.floor(), height);
        let x1 = clamp(hi_x.ceil() + 1.0, width);
        let y1 = clamp(hi_y.ceil() + 1.0, height);
        let (w, h) = (x1.saturating_sub(x0), y1.saturating_sub(y0));
        let mut cov = Coverage {
            x0,
            y0,
            w,
            h,
            counts: vec![0; w * h],
        };
        if w == 0 || h == 0 {
            return cov;
        }
        edges.sort_by(|a, b| a.y0.total_cmp(&b.y0));
        let ss = SUBSAMPLES as f64;
        let mut crossings: Vec<(f64, i32)> = Vec::new();
        let mut active: Vec<usize> = Vec::new();
        let mut next = 0;
        for row in 0..h {
            let py = (y0 + row) as f64;
            for sub in 0..SUBSAMPLES {
                let y = py + (sub as f64 + 0.5) / ss;
                while next < edges.len() && edges[next].y0 <= y {
                    active.push(next);
                    next += 1;
                }
                active.retain(|&i| y < edges[i].y1);
                crossings.clear();
                for &i in &active {
                    let e = &edges[i];
                    if e.y0 <= y {
                        let t = (y - e.y0) / (e.y1 - e.y0);
                        crossings.push((e.x0 + (e.x1 - e.x0) * t, e.dir));
                    }
                }
                if crossings.is_empty() {
                    continue;
                }
                crossings.sort_by(|a, b| a.0.total_cmp(&b.0));
                let mut winding = 0;
                for pair in crossings.windows(2) {
                    winding += pair[0].1;
                    if winding != 0 {
                        cov.add_span(row, pair[0].0, pair[1].0);
                    }
                }
            }
        }
        cov
    }

    /// Counts sub-sample columns with centers inside `[xa, xb)`.
    fn add_span(&mut self, row: usize, xa: f64, xb: f64) {
        let ss = SUBSAMPLES as f64;
        let lo_col = (self.x0 * SUBSAMPLES) as i64;
        let hi_col = ((self.x0 + self.w) * SUBSAMPLES) as i64;
        let j0 = ((xa * ss - 0.5).ceil() as i64).clamp(lo_col, hi_col);
        let j1 = ((xb * ss - 0.5).ceil() as i64).clamp(lo_col, hi_col);
        if j1 <= j0 {
            return;
        }
        let s = SUBSAMPLES as i64;
        let p0 = j0 / s;
        let p1 = (j1 - 1) / s;
        let base = row * self.w;
        let idx = |p: i64| base + (p as usize - self.x0);
        if p0 == p1 {
            self.counts[idx(p0)] += (j1 - j0) as u32;
            return;
        }
        self.counts[idx(p0)] += (s * (p0 + 1) - j0) as u32;
        for p in (p0 + 1)..p1 {
            self.counts[idx(p)] += SUBSAMPLES as u32;
        }
        self.counts[idx(p1)] += (j1 - s * p1) as u32;
    }
}

fn composite(image: &mut RasterImage, mask: &Coverage, paint: &Paint, tf: &Transform) {
    let solid = match paint {
        Paint::Solid { color } => Some(color.to_rgb8()),
        Paint::Linear { .. } => None,
    };
    let width = image.width as usize;
    for row in 0..mask.h {
        let py = mask.y0 + row;
        for col in 0..mask.w {
            let cov = mask.counts[row * mask.w + col].min(FULL);
            if cov == 0 {
                continue;
            }
            let px = mask.x0 + col;
            let src = match (&solid, paint) {
                (Some(rgb), _) => *rgb,
                (None, Paint::Linear { gradient }) => gradient_pixel(gradient, tf, px, py),
                (None, Paint::Solid { .. }) => unreachable!(),
            };
            let i = (py * width + px) * 3;
            for c in 0..3 {
                let dst = image.data[i + c] as u32;
                image.data[i + c] = ((dst * (FULL - cov) + src[c] as u32 * cov + FULL / 2) / FULL) as u8;
            }
        }
    }
}

fn gradient_pixel(gradient: &LinearGradient, tf: &Transform, px: usize, py: usize) -> [u8; 3] {
    let p = tf.invert(Point::new(px as f64 + 0.5, py as f64 + 0.5));
    gradient.color_at(p).to_rgb8()
}
