//! Layouts for the 27 cases.
//!
//! Generators work in a local frame centered on the canvas (x right, y down)
//! whose unit is scaled by the style. Factor settings are applied in absolute
//! scene terms: ratios are unitless, luma gaps are absolute, and deviations
//! are in scene units, so the style scale never changes them.
//!
//! Every case names its compared elements `target-a` / `target-b` where there
//! are two, or `<group>-<n>` where there are more.

use std::f64::consts::PI;

use super::{id_prefix, CaseDescriptor, CatalogError, FactorSetting, StyleParams};
use crate::scene::{
    measure, measure_pair, CanvasConfig, Color, Element, LinearGradient, MeasureKind, Paint, PairKind, Point, Role,
    Scene, Shape, DEFAULT_CANVAS,
};

const ORANGE: Color = Color::rgb(1.0, 0.55, 0.0);
const RED: Color = Color::rgb(0.85, 0.1, 0.1);
const LIGHT_BG: Color = Color::gray(0.85);
/// Base luma of color-case targets.
const BASE_LUMA: f64 = 0.5;
const BOW_SEGMENTS: usize = 32;

struct Builder {
    prefix: String,
    origin: Point,
    unit: f64,
    style: StyleParams,
    background: Color,
    elements: Vec<Element>,
}

impl Builder {
    fn new(desc: &CaseDescriptor, style: &StyleParams) -> Self {
        let c = DEFAULT_CANVAS as f64 / 2.0;
        Self {
            prefix: id_prefix(desc.case_id),
            origin: Point::new(c + style.jitter_x, c + style.jitter_y),
            unit: style.scale,
            style: *style,
            background: Color::WHITE,
            elements: Vec::new(),
        }
    }

    fn pt(&self, x: f64, y: f64) -> Point {
        Point::new(self.origin.x + x * self.unit, self.origin.y + y * self.unit)
    }

    fn id(&self, role: Role, name: &str) -> String {
        let role = match role {
            Role::Target => "target",
            Role::Inducer => "inducer",
            Role::Hint => "hint",
            Role::Decoration => "decoration",
        };
        format!("{}{role}.{name}", self.prefix)
    }

    fn inducer_color(&self) -> Color {
        self.style.palette.inducer
    }

    fn push(&mut self, role: Role, name: &str, shape: Shape, fill: Option<Paint>, stroke: Option<(f64, Color)>) {
        let unit = self.unit;
        self.elements.push(Element {
            id: self.id(role, name),
            role,
            shape,
            fill,
            stroke: stroke.map(|(w, color)| crate::scene::Stroke { width: w * unit, color }),
        });
    }

    fn line(&mut self, role: Role, name: &str, a: (f64, f64), b: (f64, f64), width: f64, color: Color) {
        let shape = Shape::Line {
            from: self.pt(a.0, a.1),
            to: self.pt(b.0, b.1),
        };
        self.push(role, name, shape, None, Some((width, color)));
    }

    fn polyline(&mut self, role: Role, name: &str, pts: &[(f64, f64)], width: f64, color: Color) {
        let shape = Shape::Polyline {
            points: pts.iter().map(|&(x, y)| self.pt(x, y)).collect(),
        };
        self.push(role, name, shape, None, Some((width, color)));
    }

    fn circle(
        &mut self,
        role: Role,
        name: &str,
        c: (f64, f64),
        r: f64,
        fill: Option<Color>,
        stroke: Option<(f64, Color)>,
    ) {
        let shape = Shape::Circle {
            center: self.pt(c.0, c.1),
            radius: r * self.unit,
        };
        self.push(role, name, shape, fill.map(Paint::solid), stroke);
    }

    fn rect(&mut self, role: Role, name: &str, x: f64, y: f64, w: f64, h: f64, fill: Paint) {
        let o = self.pt(x, y);
        let shape = Shape::Rect {
            x: o.x,
            y: o.y,
            width: w * self.unit,
            height: h * self.unit,
        };
        self.push(role, name, shape, Some(fill), None);
    }

    /// Square of side `side` centered at `c` (local units).
    fn square(&mut self, role: Role, name: &str, c: (f64, f64), side: f64, color: Color) {
        self.rect(
            role,
            name,
            c.0 - side / 2.0,
            c.1 - side / 2.0,
            side,
            side,
            Paint::solid(color),
        );
    }

    /// Horizontal gradient over a rect, from `from` at local x0 to `to` at local x1.
    fn gradient(&self, x0: f64, x1: f64, y0: f64, y1: f64, from: f64, to: f64) -> Paint {
        Paint::Linear {
            gradient: LinearGradient {
                start: self.pt(x0, y0),
                end: self.pt(x1, y1),
                from: Color::gray(from),
                to: Color::gray(to),
            },
        }
    }

    /// Polyline from `a` to `b` bowed by `deviation` scene units to the left
    /// of the travel direction (y down), peaking exactly at the midpoint.
    fn bowed(
        &mut self,
        role: Role,
        name: &str,
        a: (f64, f64),
        b: (f64, f64),
        deviation: f64,
        width: f64,
        color: Color,
    ) {
        let pa = self.pt(a.0, a.1);
        let pb = self.pt(b.0, b.1);
        let len = pa.distance(&pb);
        let (dx, dy) = ((pb.x - pa.x) / len, (pb.y - pa.y) / len);
        let (nx, ny) = (dy, -dx);
        let points = (0..=BOW_SEGMENTS)
            .map(|i| {
                let t = i as f64 / BOW_SEGMENTS as f64;
                let off = deviation * (PI * t).sin();
                Point::new(pa.x + (pb.x - pa.x) * t + nx * off, pa.y + (pb.y - pa.y) * t + ny * off)
            })
            .collect();
        self.push(role, name, Shape::Polyline { points }, None, Some((width, color)));
    }

    fn finish(self) -> Scene {
        Scene {
            canvas: CanvasConfig::square(DEFAULT_CANVAS, self.background),
            elements: self.elements,
        }
    }
}

fn ratio(setting: FactorSetting) -> f64 {
    match setting {
        FactorSetting::SizeRatio(r) => r,
        _ => 1.0,
    }
}

fn gap(setting: FactorSetting) -> f64 {
    match setting {
        FactorSetting::LuminanceGap(g) => g,
        _ => 0.0,
    }
}

fn deviation(setting: FactorSetting) -> f64 {
    match setting {
        FactorSetting::Deviation(d) => d,
        _ => 0.0,
    }
}

/// Luma of target-a and target-b for a gap.
fn luma_pair(setting: FactorSetting) -> (Color, Color) {
    let g = gap(setting);
    (Color::gray(BASE_LUMA + g / 2.0), Color::gray(BASE_LUMA - g / 2.0))
}

/// Full scene for a case, before variant-specific removal or hints.
pub(super) fn compose(desc: &CaseDescriptor, setting: FactorSetting, style: &StyleParams) -> Scene {
    let mut b = Builder::new(desc, style);
    match desc.case_id {
        1 => muller_lyer(&mut b, setting, false),
        2 => muller_lyer(&mut b, setting, true),
        3 => ponzo(&mut b, setting, false),
        4 => ponzo(&mut b, setting, true),
        5 => ebbinghaus(&mut b, setting, false),
        6 => ebbinghaus(&mut b, setting, true),
        7 => delboeuf(&mut b, setting),
        8 => oppel_kundt(&mut b, setting),
        9 => irradiation(&mut b, setting, false),
        10 => irradiation(&mut b, setting, true),
        11 => circle_ponzo(&mut b, setting),
        12 => cornsweet_circles(&mut b, setting),
        13 => simultaneous_contrast(&mut b, setting),
        14 => munker_white(&mut b, setting),
        15 => mach_bands(&mut b, setting, false),
        16 => mach_bands(&mut b, setting, true),
        17 => chubb(&mut b, setting),
        18 => cornsweet_bands(&mut b, setting),
        19 => hering(&mut b, setting, false),
        20 => hering(&mut b, setting, true),
        21 => zollner(&mut b, setting, false),
        22 => zollner(&mut b, setting, true),
        23 => twisted_cord(&mut b, setting, false),
        24 => twisted_cord(&mut b, setting, true),
        25 => poggendorff(&mut b, setting, false),
        26 => poggendorff(&mut b, setting, true),
        27 => ehrenstein(&mut b, setting),
        other => unreachable!("catalog has no generator for case {other}"),
    }
    b.finish()
}

// ---------------------------------------------------------------- size

fn muller_lyer(b: &mut Builder, s: FactorSetting, circles: bool) {
    let base = 220.0;
    let (la, lb) = (base * ratio(s), base);
    let (ya, yb) = (-90.0, 90.0);
    b.line(
        Role::Target,
        "target-a",
        (-la / 2.0, ya),
        (la / 2.0, ya),
        4.0,
        Color::BLACK,
    );
    b.line(
        Role::Target,
        "target-b",
        (-lb / 2.0, yb),
        (lb / 2.0, yb),
        4.0,
        Color::BLACK,
    );
    let ink = b.inducer_color();
    if circles {
        let r = 20.0;
        b.circle(
            Role::Inducer,
            "end-a-left",
            (-la / 2.0 - r, ya),
            r,
            None,
            Some((3.0, ink)),
        );
        b.circle(
            Role::Inducer,
            "end-a-right",
            (la / 2.0 + r, ya),
            r,
            None,
            Some((3.0, ink)),
        );
        b.circle(
            Role::Inducer,
            "end-b-left",
            (-lb / 2.0 + r, yb),
            r,
            None,
            Some((3.0, ink)),
        );
        b.circle(
            Role::Inducer,
            "end-b-right",
            (lb / 2.0 - r, yb),
            r,
            None,
            Some((3.0, ink)),
        );
        return;
    }
    let fin = 40.0;
    let (fc, fs) = (fin * 35f64.to_radians().cos(), fin * 35f64.to_radians().sin());
    // Fins pointing outward on target-a, inward on target-b.
    for (name, x, y, dir) in [
        ("fin-a-left", -la / 2.0, ya, -1.0),
        ("fin-a-right", la / 2.0, ya, 1.0),
        ("fin-b-left", -lb / 2.0, yb, 1.0),
        ("fin-b-right", lb / 2.0, yb, -1.0),
    ] {
        b.polyline(
            Role::Inducer,
            name,
            &[(x + dir * fc, y - fs), (x, y), (x + dir * fc, y + fs)],
            4.0,
            ink,
        );
    }
}

fn rails(b: &mut Builder) {
    let ink = b.inducer_color();
    b.line(Role::Inducer, "rail-left", (-210.0, 250.0), (-50.0, -250.0), 4.0, ink);
    b.line(Role::Inducer, "rail-right", (210.0, 250.0), (50.0, -250.0), 4.0, ink);
}

fn ponzo(b: &mut Builder, s: FactorSetting, trapezoid: bool) {
    let base = if trapezoid { 120.0 } else { 110.0 };
    let (la, lb) = (base * ratio(s), base);
    if trapezoid {
        let ink = b.inducer_color();
        let pts = [(-90.0, -220.0), (90.0, -220.0), (230.0, 220.0), (-230.0, 220.0)];
        let shape = Shape::Polygon {
            points: pts.iter().map(|&(x, y)| b.pt(x, y)).collect(),
        };
        b.push(Role::Inducer, "trapezoid", shape, None, Some((4.0, ink)));
    } else {
        rails(b);
    }
    let (ya, yb) = (-110.0, if trapezoid { 120.0 } else { 110.0 });
    b.line(
        Role::Target,
        "target-a",
        (-la / 2.0, ya),
        (la / 2.0, ya),
        4.0,
        Color::BLACK,
    );
    b.line(
        Role::Target,
        "target-b",
        (-lb / 2.0, yb),
        (lb / 2.0, yb),
        4.0,
        Color::BLACK,
    );
}

fn ebbinghaus(b: &mut Builder, s: FactorSetting, squares: bool) {
    let r0 = 30.0;
    let (ca, cb) = ((-170.0, 0.0), (170.0, 0.0));
    let ink = b.inducer_color();
    let ring = |b: &mut Builder, tag: &str, c: (f64, f64), count: usize, dist: f64, size: f64| {
        for k in 0..count {
            let t = 2.0 * PI * (k as f64 + b.style.phase) / count as f64;
            let p = (c.0 + dist * t.cos(), c.1 + dist * t.sin());
            let name = format!("surround-{tag}-{k}");
            if squares {
                b.square(Role::Inducer, &name, p, 2.0 * size, ink);
            } else {
                b.circle(Role::Inducer, &name, p, size, Some(ink), None);
            }
        }
    };
    ring(b, "a", ca, 8, 64.0, 10.0);
    ring(b, "b", cb, 6, 112.0, 34.0);
    b.circle(Role::Target, "target-a", ca, r0 * ratio(s), Some(ORANGE), None);
    b.circle(Role::Target, "target-b", cb, r0, Some(ORANGE), None);
}

fn delboeuf(b: &mut Builder, s: FactorSetting) {
    let r0 = 36.0;
    let (ca, cb) = ((-160.0, 0.0), (160.0, 0.0));
    let ink = b.inducer_color();
    b.circle(Role::Inducer, "ring-a", ca, 66.0, None, Some((3.0, ink)));
    b.circle(Role::Inducer, "ring-b", cb, 120.0, None, Some((3.0, ink)));
    b.circle(Role::Target, "target-a", ca, r0 * ratio(s), Some(Color::BLACK), None);
    b.circle(Role::Target, "target-b", cb, r0, Some(Color::BLACK), None);
}

fn glyph(letter: char) -> Vec<Vec<(f64, f64)>> {
    match letter {
        'A' => vec![
            vec![(0.0, 28.0), (10.0, 0.0), (20.0, 28.0)],
            vec![(4.0, 17.0), (16.0, 17.0)],
        ],
        'B' => vec![vec![
            (0.0, 14.0),
            (13.0, 14.0),
            (18.0, 18.0),
            (18.0, 24.0),
            (13.0, 28.0),
            (0.0, 28.0),
            (0.0, 0.0),
            (12.0, 0.0),
            (16.0, 4.0),
            (16.0, 10.0),
            (12.0, 14.0),
        ]],
        _ => vec![vec![
            (20.0, 3.0),
            (16.0, 0.0),
            (4.0, 0.0),
            (0.0, 4.0),
            (0.0, 24.0),
            (4.0, 28.0),
            (16.0, 28.0),
            (20.0, 25.0),
        ]],
    }
}

fn label(b: &mut Builder, letter: char, cx: f64, top: f64) {
    for (k, stroke) in glyph(letter).into_iter().enumerate() {
        let pts: Vec<(f64, f64)> = stroke.iter().map(|&(x, y)| (cx - 10.0 + x, top + y)).collect();
        b.polyline(
            Role::Decoration,
            &format!("label-{letter}-{k}"),
            &pts,
            3.0,
            Color::BLACK,
        );
    }
}

fn oppel_kundt(b: &mut Builder, s: FactorSetting) {
    let base = 170.0;
    let (d_ab, d_bc) = (base * ratio(s), base);
    let xb = (d_ab - d_bc) / 2.0;
    let (xa, xc) = (xb - d_ab, xb + d_bc);
    let ink = b.inducer_color();
    for k in 1..10 {
        let x = xa + d_ab * k as f64 / 10.0;
        b.line(Role::Inducer, &format!("fill-{k}"), (x, -25.0), (x, 25.0), 3.0, ink);
    }
    // The two compared intervals share marker B.
    b.line(Role::Target, "marker-a", (xa, -50.0), (xa, 50.0), 4.0, Color::BLACK);
    b.line(Role::Target, "marker-b", (xb, -50.0), (xb, 50.0), 4.0, Color::BLACK);
    b.line(Role::Target, "marker-c", (xc, -50.0), (xc, 50.0), 4.0, Color::BLACK);
    for (letter, x) in [('A', xa), ('B', xb), ('C', xc)] {
        label(b, letter, x, -95.0);
    }
}

fn pentagon(b: &Builder, c: (f64, f64), r: f64) -> Shape {
    Shape::Polygon {
        points: (0..5)
            .map(|k| {
                let t = -PI / 2.0 + 2.0 * PI * k as f64 / 5.0;
                b.pt(c.0 + r * t.cos(), c.1 + r * t.sin())
            })
            .collect(),
    }
}

fn irradiation(b: &mut Builder, s: FactorSetting, pentagons: bool) {
    b.background = Color::gray(0.5);
    b.rect(
        Role::Inducer,
        "panel-left",
        -320.0,
        -170.0,
        310.0,
        340.0,
        Paint::solid(Color::BLACK),
    );
    b.rect(
        Role::Inducer,
        "panel-right",
        10.0,
        -170.0,
        310.0,
        340.0,
        Paint::solid(Color::WHITE),
    );
    let (ca, cb) = ((-165.0, 0.0), (165.0, 0.0));
    if pentagons {
        let (ra, rb) = (62.0 * ratio(s), 62.0);
        let pa = pentagon(b, ca, ra);
        let pb = pentagon(b, cb, rb);
        b.push(Role::Target, "target-a", pa, Some(Paint::solid(Color::WHITE)), None);
        b.push(Role::Target, "target-b", pb, Some(Paint::solid(Color::BLACK)), None);
    } else {
        b.square(Role::Target, "target-a", ca, 110.0 * ratio(s), Color::WHITE);
        b.square(Role::Target, "target-b", cb, 110.0, Color::BLACK);
    }
}

fn circle_ponzo(b: &mut Builder, s: FactorSetting) {
    rails(b);
    let fill = Some(Color::gray(0.25));
    b.circle(Role::Target, "target-a", (0.0, -120.0), 32.0 * ratio(s), fill, None);
    b.circle(Role::Target, "target-b", (0.0, 120.0), 32.0, fill, None);
}

// ---------------------------------------------------------------- color

fn cornsweet_circles(b: &mut Builder, s: FactorSetting) {
    b.background = Color::gray(BASE_LUMA);
    let g = b.gradient(-70.0, 0.0, 0.0, 0.0, BASE_LUMA, BASE_LUMA + 0.2);
    b.rect(Role::Inducer, "edge-light", -70.0, -160.0, 70.0, 320.0, g);
    let g = b.gradient(0.0, 70.0, 0.0, 0.0, BASE_LUMA - 0.2, BASE_LUMA);
    b.rect(Role::Inducer, "edge-dark", 0.0, -160.0, 70.0, 320.0, g);
    let (la, lb) = luma_pair(s);
    let outline = Some((2.0, Color::gray(0.15)));
    b.circle(Role::Target, "target-a", (-140.0, 0.0), 65.0, Some(la), outline);
    b.circle(Role::Target, "target-b", (140.0, 0.0), 65.0, Some(lb), outline);
}

fn simultaneous_contrast(b: &mut Builder, s: FactorSetting) {
    b.background = LIGHT_BG;
    b.rect(
        Role::Inducer,
        "panel-dark",
        -320.0,
        -150.0,
        310.0,
        300.0,
        Paint::solid(Color::BLACK),
    );
    b.rect(
        Role::Inducer,
        "panel-light",
        10.0,
        -150.0,
        310.0,
        300.0,
        Paint::solid(Color::WHITE),
    );
    let (la, lb) = luma_pair(s);
    b.square(Role::Target, "target-a", (-165.0, 0.0), 80.0, la);
    b.square(Role::Target, "target-b", (165.0, 0.0), 80.0, lb);
}

fn munker_white(b: &mut Builder, s: FactorSetting) {
    b.background = LIGHT_BG;
    for k in 0..12 {
        let color = if k % 2 == 0 { Color::BLACK } else { Color::WHITE };
        let y = -180.0 + 30.0 * k as f64;
        b.rect(
            Role::Inducer,
            &format!("stripe-{k}"),
            -300.0,
            y,
            600.0,
            30.0,
            Paint::solid(color),
        );
    }
    let (la, lb) = luma_pair(s);
    // target-a replaces part of a dark stripe, target-b part of a light one.
    b.rect(Role::Target, "target-a", -220.0, 0.0, 140.0, 30.0, Paint::solid(la));
    b.rect(Role::Target, "target-b", 80.0, -30.0, 140.0, 30.0, Paint::solid(lb));
}

fn mach_bands(b: &mut Builder, s: FactorSetting, stacked: bool) {
    b.background = LIGHT_BG;
    let (la, lb) = luma_pair(s);
    // Staircase; the two middle steps are the compared regions.
    let steps = [
        ("step-0", Some(0.2)),
        ("step-1", Some(0.35)),
        ("target-b", None),
        ("target-a", None),
        ("step-4", Some(0.65)),
        ("step-5", Some(0.8)),
    ];
    for (k, (name, luma)) in steps.into_iter().enumerate() {
        let (role, color) = match (name, luma) {
            (_, Some(v)) => (Role::Inducer, Color::gray(v)),
            ("target-a", None) => (Role::Target, la),
            _ => (Role::Target, lb),
        };
        let offset = -270.0 + 90.0 * k as f64;
        if stacked {
            b.rect(role, name, -160.0, offset, 320.0, 90.0, Paint::solid(color));
        } else {
            b.rect(role, name, offset, -150.0, 90.0, 300.0, Paint::solid(color));
        }
    }
}

fn chubb(b: &mut Builder, s: FactorSetting) {
    b.background = LIGHT_BG;
    let (cl, cr) = ((-170.0, 0.0), (170.0, 0.0));
    let cell = 20.0;
    let half = 130.0;
    b.rect(
        Role::Inducer,
        "texture-base",
        cl.0 - half,
        cl.1 - half,
        2.0 * half,
        2.0 * half,
        Paint::solid(Color::WHITE),
    );
    for i in 0..13 {
        for j in 0..13 {
            if (i + j) % 2 == 0 {
                let x = cl.0 - half + cell * i as f64;
                let y = cl.1 - half + cell * j as f64;
                b.rect(
                    Role::Inducer,
                    &format!("texture-{i}-{j}"),
                    x,
                    y,
                    cell,
                    cell,
                    Paint::solid(Color::BLACK),
                );
            }
        }
    }
    b.rect(
        Role::Inducer,
        "surround-plain",
        cr.0 - half,
        cr.1 - half,
        2.0 * half,
        2.0 * half,
        Paint::solid(Color::gray(BASE_LUMA)),
    );
    let (la, lb) = luma_pair(s);
    b.circle(Role::Target, "target-a", cl, 70.0, Some(la), None);
    b.circle(Role::Target, "target-b", cr, 70.0, Some(lb), None);
}

fn cornsweet_bands(b: &mut Builder, s: FactorSetting) {
    b.background = LIGHT_BG;
    let (la, lb) = luma_pair(s);
    b.rect(Role::Target, "target-a", -220.0, -150.0, 180.0, 300.0, Paint::solid(la));
    b.rect(Role::Target, "target-b", 40.0, -150.0, 180.0, 300.0, Paint::solid(lb));
    let g = b.gradient(-40.0, 0.0, 0.0, 0.0, BASE_LUMA, BASE_LUMA + 0.2);
    b.rect(Role::Inducer, "edge-light", -40.0, -150.0, 40.0, 300.0, g);
    let g = b.gradient(0.0, 40.0, 0.0, 0.0, BASE_LUMA - 0.2, BASE_LUMA);
    b.rect(Role::Inducer, "edge-dark", 0.0, -150.0, 40.0, 300.0, g);
}

// ---------------------------------------------------------- orientation

fn hering(b: &mut Builder, s: FactorSetting, vertical: bool) {
    let ink = b.inducer_color();
    let n = 20;
    for k in 0..n {
        let t = PI * k as f64 / n as f64;
        let (dx, dy) = (300.0 * t.cos(), 300.0 * t.sin());
        b.line(Role::Inducer, &format!("ray-{k}"), (-dx, -dy), (dx, dy), 2.0, ink);
    }
    let c = deviation(s);
    // Positive deviation bows both lines away from the center.
    if vertical {
        b.bowed(Role::Target, "target-a", (-90.0, -240.0), (-90.0, 240.0), -c, 4.0, RED);
        b.bowed(Role::Target, "target-b", (90.0, -240.0), (90.0, 240.0), c, 4.0, RED);
    } else {
        b.bowed(Role::Target, "target-a", (-240.0, -90.0), (240.0, -90.0), c, 4.0, RED);
        b.bowed(Role::Target, "target-b", (-240.0, 90.0), (240.0, 90.0), -c, 4.0, RED);
    }
}

fn zollner(b: &mut Builder, s: FactorSetting, vertical: bool) {
    let ink = b.inducer_color();
    let c = deviation(s);
    let swap = |p: (f64, f64)| if vertical { (p.1, p.0) } else { p };
    for i in 0..4 {
        let offset = -150.0 + 100.0 * i as f64;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..13 {
            let along = -240.0 + 40.0 * k as f64;
            let h = 13.0 * sign;
            let a = swap((along - 13.0, offset + h));
            let z = swap((along + 13.0, offset - h));
            b.line(Role::Inducer, &format!("hatch-{i}-{k}"), a, z, 3.0, ink);
        }
        let (from, to) = (swap((-260.0, offset)), swap((260.0, offset)));
        b.bowed(Role::Target, &format!("line-{i}"), from, to, sign * c, 5.0, RED);
    }
}

fn twisted_cord(b: &mut Builder, s: FactorSetting, light: bool) {
    let (bg, dark, bright) = if light {
        (Color::gray(0.92), Color::gray(0.55), Color::WHITE)
    } else {
        (Color::gray(0.6), Color::BLACK, Color::WHITE)
    };
    b.background = bg;
    let c = deviation(s);
    for i in 0..4 {
        let x = -180.0 + 120.0 * i as f64;
        let tilt = if i % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..14 {
            let y = -234.0 + 36.0 * k as f64;
            let color = if k % 2 == 0 { dark } else { bright };
            b.line(
                Role::Inducer,
                &format!("cord-{i}-{k}"),
                (x - 9.0, y - 14.0 * tilt),
                (x + 9.0, y + 14.0 * tilt),
                6.0,
                color,
            );
        }
        // Odd columns lean: their lower end is shifted sideways by the deviation.
        let lean = if i % 2 == 1 { c } else { 0.0 };
        let top = b.pt(x, -250.0);
        let bottom = b.pt(x, 250.0).offset(lean, 0.0);
        let shape = Shape::Line { from: top, to: bottom };
        b.push(Role::Target, &format!("column-{i}"), shape, None, Some((3.0, dark)));
    }
}

fn poggendorff(b: &mut Builder, s: FactorSetting, horizontal_bar: bool) {
    let c = deviation(s);
    let swap = |p: (f64, f64)| if horizontal_bar { (p.1, p.0) } else { p };
    let at = |b: &Builder, p: (f64, f64)| {
        let p = swap(p);
        b.pt(p.0, p.1)
    };
    let red = (at(b, (-250.0, 150.0)), at(b, (-45.0, 47.5)));
    let (dx, dy) = (red.1.x - red.0.x, red.1.y - red.0.y);
    let len = dx.hypot(dy);
    let (nx, ny) = (dy / len * c, -dx / len * c);
    // The black piece starts on the red line's extension, shifted along its left normal.
    let black = (at(b, (45.0, 2.5)).offset(nx, ny), at(b, (250.0, -100.0)).offset(nx, ny));
    b.push(
        Role::Target,
        "target-a",
        Shape::Line { from: red.0, to: red.1 },
        None,
        Some((4.0, RED)),
    );
    b.push(
        Role::Target,
        "target-b",
        Shape::Line {
            from: black.0,
            to: black.1,
        },
        None,
        Some((4.0, Color::BLACK)),
    );
    let (x, y, w, h) = if horizontal_bar {
        (-230.0, -45.0, 460.0, 90.0)
    } else {
        (-45.0, -230.0, 90.0, 460.0)
    };
    b.rect(Role::Inducer, "occluder", x, y, w, h, Paint::solid(Color::gray(0.7)));
}

fn ehrenstein(b: &mut Builder, s: FactorSetting) {
    let ink = b.inducer_color();
    let c = deviation(s);
    for (side, cx) in [("l", -170.0), ("r", 170.0)] {
        for k in 1..=7 {
            b.circle(
                Role::Inducer,
                &format!("ring-{side}-{k}"),
                (cx, 0.0),
                20.0 * k as f64,
                None,
                Some((2.0, ink)),
            );
        }
        let h = 60.0;
        let corners = [(cx - h, -h), (cx + h, -h), (cx + h, h), (cx - h, h)];
        // Clockwise edges, so "left of travel" points outward; positive deviation bows inward.
        for (e, name) in ["top", "right", "bottom", "left"].iter().enumerate() {
            let (a, z) = (corners[e], corners[(e + 1) % 4]);
            b.bowed(Role::Target, &format!("square-{side}-{name}"), a, z, -c, 4.0, RED);
        }
    }
}

// ---------------------------------------------------------- verification

fn full_id(case_id: u8, name: &str) -> String {
    format!("{}target.{name}", id_prefix(case_id))
}

/// Recomputes the case's factor setting from scene-space measurements of its
/// targets. Cases with several realizations (e.g. four Zöllner lines) return
/// one setting per realization.
pub fn measured_settings(case_id: u8, scene: &Scene) -> Result<Vec<FactorSetting>, CatalogError> {
    let desc = super::case(case_id)?;
    let t = |name: &str| full_id(case_id, name);
    let m = |name: &str, kind: MeasureKind| -> Result<f64, CatalogError> { Ok(measure(scene, &t(name), kind)?.value) };
    let settings = match case_id {
        1..=4 => vec![FactorSetting::SizeRatio(
            m("target-a", MeasureKind::Length)? / m("target-b", MeasureKind::Length)?,
        )],
        5..=7 | 9..=11 => vec![FactorSetting::SizeRatio(
            m("target-a", MeasureKind::Diameter)? / m("target-b", MeasureKind::Diameter)?,
        )],
        8 => {
            let ab = measure_pair(scene, &t("marker-a"), &t("marker-b"), PairKind::Distance)?;
            let bc = measure_pair(scene, &t("marker-b"), &t("marker-c"), PairKind::Distance)?;
            vec![FactorSetting::SizeRatio(ab / bc)]
        }
        12..=18 => vec![FactorSetting::LuminanceGap(
            m("target-a", MeasureKind::MeanLuminance)? - m("target-b", MeasureKind::MeanLuminance)?,
        )],
        19 => vec![
            FactorSetting::Deviation(m("target-a", MeasureKind::CurvatureMax)?),
            FactorSetting::Deviation(-m("target-b", MeasureKind::CurvatureMax)?),
        ],
        20 => vec![
            FactorSetting::Deviation(-m("target-a", MeasureKind::CurvatureMax)?),
            FactorSetting::Deviation(m("target-b", MeasureKind::CurvatureMax)?),
        ],
        21 | 22 => (0..4)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                Ok(FactorSetting::Deviation(
                    sign * m(&format!("line-{i}"), MeasureKind::CurvatureMax)?,
                ))
            })
            .collect::<Result<_, CatalogError>>()?,
        23 | 24 => {
            let skew = |a: usize, b: usize| {
                measure_pair(
                    scene,
                    &t(&format!("column-{a}")),
                    &t(&format!("column-{b}")),
                    PairKind::Skew,
                )
            };
            vec![
                FactorSetting::Deviation(skew(0, 1)?),
                FactorSetting::Deviation(skew(2, 3)?),
                FactorSetting::Deviation(skew(0, 3)?),
            ]
        }
        25 | 26 => vec![FactorSetting::Deviation(measure_pair(
            scene,
            &t("target-a"),
            &t("target-b"),
            PairKind::AlignmentOffset,
        )?)],
        27 => ["l", "r"]
            .iter()
            .flat_map(|side| ["top", "right", "bottom", "left"].map(move |e| format!("square-{side}-{e}")))
            .map(|name| Ok(FactorSetting::Deviation(-m(&name, MeasureKind::CurvatureMax)?)))
            .collect::<Result<_, CatalogError>>()?,
        _ => return Err(CatalogError::UnknownCase(desc.case_id)),
    };
    Ok(settings)
}
