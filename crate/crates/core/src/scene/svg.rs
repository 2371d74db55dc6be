use std::fmt::Write;

use super::{Element, Paint, Point, Role, Scene, SceneError, Shape};

/// SVG markup of a scene.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorDocument {
    pub markup: String,
}

impl VectorDocument {
    pub fn as_str(&self) -> &str {
        &self.markup
    }
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::Target => "target",
        Role::Inducer => "inducer",
        Role::Hint => "hint",
        Role::Decoration => "decoration",
    }
}

fn escape(id: &str) -> String {
    id.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn path_data(points: &[Point], closed: bool) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        if i > 0 {
            d.push(' ');
        }
        let _ = write!(d, "{cmd}{} {}", p.x, p.y);
    }
    if closed {
        d.push_str(" Z");
    }
    d
}

/// Emits the scene as SVG. Element order and attribute order are fixed, so
/// equal scenes produce byte-identical documents.
pub fn emit_vector(scene: &Scene) -> Result<VectorDocument, SceneError> {
    scene.validate()?;
    let (w, h) = (scene.canvas.width, scene.canvas.height);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" shape-rendering=\"geometricPrecision\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"{}\"/>",
        scene.canvas.background.hex()
    );
    for (index, element) in scene.elements.iter().enumerate() {
        write_element(&mut out, index, element)?;
    }
    out.push_str("</svg>\n");
    Ok(VectorDocument { markup: out })
}

fn write_element(out: &mut String, index: usize, element: &Element) -> Result<(), SceneError> {
    let fill = match &element.fill {
        None => "none".to_string(),
        Some(Paint::Solid { color }) => color.hex(),
        Some(Paint::Linear { gradient }) => {
            let gid = format!("grad{index}");
            let _ = writeln!(
                out,
                "<linearGradient id=\"{gid}\" gradientUnits=\"userSpaceOnUse\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\"><stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"1\" stop-color=\"{}\"/></linearGradient>",
                gradient.start.x,
                gradient.start.y,
                gradient.end.x,
                gradient.end.y,
                gradient.from.hex(),
                gradient.to.hex()
            );
            format!("url(#{gid})")
        }
    };
    let stroke = match &element.stroke {
        None => "stroke=\"none\"".to_string(),
        Some(s) => format!(
            "stroke=\"{}\" stroke-width=\"{}\" stroke-linecap=\"butt\" stroke-linejoin=\"round\"",
            s.color.hex(),
            s.width
        ),
    };
    let head = format!(
        "id=\"{}\" data-role=\"{}\"",
        escape(&element.id),
        role_name(element.role)
    );
    let body = match &element.shape {
        Shape::Line { from, to } => format!("<path {head} d=\"{}\"", path_data(&[*from, *to], false)),
        Shape::Polyline { points } => format!("<path {head} d=\"{}\"", path_data(points, false)),
        Shape::Polygon { points } => format!("<path {head} d=\"{}\"", path_data(points, true)),
        Shape::Circle { center, radius } => {
            format!(
                "<circle {head} cx=\"{}\" cy=\"{}\" r=\"{}\"",
                center.x, center.y, radius
            )
        }
        Shape::Rect { x, y, width, height } => {
            format!("<rect {head} x=\"{x}\" y=\"{y}\" width=\"{width}\" height=\"{height}\"")
        }
    };
    let _ = writeln!(out, "{body} fill=\"{fill}\" {stroke}/>");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{CanvasConfig, Color};

    #[test]
    fn empty_scene_has_background_only() {
        let doc = emit_vector(&Scene::new(CanvasConfig::square(100, Color::WHITE))).unwrap();
        assert_eq!(doc.markup.matches("<rect").count(), 1);
        assert!(doc.markup.contains("fill=\"#ffffff\""));
        assert!(!doc.markup.contains("<path"));
    }

    #[test]
    fn line_emits_exact_endpoints() {
        let mut scene = Scene::new(CanvasConfig::default());
        scene.push(Element::stroked(
            "shaft",
            Role::Target,
            Shape::Line {
                from: Point::new(12.5, 40.0),
                to: Point::new(300.25, 40.0),
            },
            3.0,
            Color::BLACK,
        ));
        let doc = emit_vector(&scene).unwrap();
        assert_eq!(doc.markup.matches("<path").count(), 1);
        assert!(doc.markup.contains("d=\"M12.5 40 L300.25 40\""));
        assert_eq!(doc, emit_vector(&scene).unwrap());
    }
}
