use resvg::{tiny_skia, usvg};
use vi_probe_core::catalog::{generate_variant, list_cases, StyleParams, VariantKind};
use vi_probe_core::scene::{emit_vector, rasterize, CanvasConfig, Color, Element, Paint, Point, Role, Scene, Shape};

fn gray(px: [u8; 3]) -> f64 {
    0.2126 * px[0] as f64 + 0.7152 * px[1] as f64 + 0.0722 * px[2] as f64
}

/// resvg only samples four sub-scanlines per pixel, so it renders at `k`x and is box-filtered down.
const REFERENCE_SUPERSAMPLING: u32 = 4;

fn reference_raster(markup: &str, width: u32, height: u32) -> Vec<[u8; 3]> {
    let k = REFERENCE_SUPERSAMPLING;
    let tree = usvg::Tree::from_str(markup, &usvg::Options::default()).unwrap();
    let mut pixmap = tiny_skia::Pixmap::new(width * k, height * k).unwrap();
    resvg::render(
        &tree,
        tiny_skia::Transform::from_scale(k as f32, k as f32),
        &mut pixmap.as_mut(),
    );
    let big = pixmap.data();
    let mut out = Vec::with_capacity((width * height) as usize);
    for y in 0..height {
        for x in 0..width {
            let mut sum = [0u32; 3];
            for dy in 0..k {
                for dx in 0..k {
                    let i = (((y * k + dy) * width * k + x * k + dx) * 4) as usize;
                    for c in 0..3 {
                        sum[c] += big[i + c] as u32;
                    }
                }
            }
            out.push(sum.map(|s| (s as f64 / (k * k) as f64).round() as u8));
        }
    }
    out
}

/// Fraction of pixels whose gray level differs by more than one step from the external rendering.
fn disagreement(scene: &Scene) -> f64 {
    let ours = rasterize(scene, &scene.canvas).unwrap();
    let doc = emit_vector(scene).unwrap();
    let theirs = reference_raster(doc.as_str(), ours.width, ours.height);
    let mut bad = 0usize;
    for y in 0..ours.height {
        for x in 0..ours.width {
            let t = theirs[(y * ours.width + x) as usize];
            if (gray(ours.pixel(x, y)) - gray(t)).abs() > 1.0 {
                bad += 1;
            }
        }
    }
    bad as f64 / (ours.width * ours.height) as f64
}

#[test]
fn filled_circle_covers_its_analytic_area() {
    let mut scene = Scene::new(CanvasConfig::square(100, Color::WHITE));
    scene.push(Element::filled(
        "c",
        Role::Target,
        Shape::Circle {
            center: Point::new(50.0, 50.0),
            radius: 20.0,
        },
        Paint::solid(Color::BLACK),
    ));
    let img = rasterize(&scene, &scene.canvas).unwrap();
    // Count coverage, so edge pixels contribute their partial darkness.
    let covered: f64 = img.luma_plane().iter().map(|l| (255.0 - l) / 255.0).sum();
    let expected = std::f64::consts::PI * 400.0;
    assert!((covered - expected).abs() / expected < 0.02, "{covered} vs {expected}");
    let black = (0..100)
        .flat_map(|y| (0..100).map(move |x| (x, y)))
        .filter(|&(x, y)| img.pixel(x, y)[0] < 128)
        .count();
    assert!(
        (black as f64 - expected).abs() / expected < 0.02,
        "{black} vs {expected}"
    );
}

#[test]
fn vector_twin_matches_raster_on_catalog_corpus() {
    let style = StyleParams::from_seed(31);
    let mut worst = (0.0, 0u8, VariantKind::O);
    for desc in list_cases() {
        for (kind, alpha) in [(VariantKind::O, 0.0), (VariantKind::PH, -0.6)] {
            let (scene, _) = generate_variant(desc.case_id, kind, alpha, &style).unwrap();
            let d = disagreement(&scene);
            if d > worst.0 {
                worst = (d, desc.case_id, kind);
            }
        }
    }
    assert!(
        worst.0 <= 0.02,
        "case {} {} disagrees on {:.3}% of pixels",
        worst.1,
        worst.2,
        worst.0 * 100.0
    );
}
