//! Publication tables and static SVG plots. Output is a pure function of the
//! scores, so repeated runs are byte-identical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vi_probe_core::catalog::VariantKind;
use vi_probe_core::metrics::MetricReport;

use crate::{write_file, write_json, CliError, HumanBaseline, ModelScore};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

pub fn table2_csv(rows: &[&MetricReport]) -> String {
    csv(
        &MetricReport::CSV_HEADER,
        &rows.iter().map(|r| r.csv_row()).collect::<Vec<_>>(),
    )
}

pub const TABLE3_HEADER: [&str; 7] = ["Model", "Hints O", "Hints P", "SP O", "SP P", "SP OC", "SP PC"];

#[derive(Debug, Clone, Serialize)]
pub struct Table3Row {
    pub model_id: String,
    pub hint_o: Option<f64>,
    pub hint_p: Option<f64>,
    pub prompt_o: Option<f64>,
    pub prompt_p: Option<f64>,
    pub prompt_oc: Option<f64>,
    pub prompt_pc: Option<f64>,
}

pub fn table3_rows(scores: &[ModelScore]) -> Vec<Table3Row> {
    scores
        .iter()
        .map(|s| {
            let i = &s.interventions;
            Table3Row {
                model_id: s.model_id.clone(),
                hint_o: i.hint_o,
                hint_p: i.hint_p,
                prompt_o: i.prompt_o,
                prompt_p: i.prompt_p,
                prompt_oc: i.prompt_oc,
                prompt_pc: i.prompt_pc,
            }
        })
        .collect()
}

fn signed_pct(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{:+.2}", v * 100.0))
}

pub fn table3_csv(rows: &[Table3Row]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.model_id.clone(),
                signed_pct(r.hint_o),
                signed_pct(r.hint_p),
                signed_pct(r.prompt_o),
                signed_pct(r.prompt_p),
                signed_pct(r.prompt_oc),
                signed_pct(r.prompt_pc),
            ]
        })
        .collect();
    csv(&TABLE3_HEADER, &body)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    width: f64,
    height: f64,
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl Frame {
    fn x(&self, t: f64) -> f64 {
        self.left + t * (self.width - self.left - self.right)
    }
    fn y(&self, t: f64) -> f64 {
        self.height - self.bottom - t * (self.height - self.top - self.bottom)
    }
}

fn svg_open(f: &Frame, title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#,
        w = f.width,
        h = f.height
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(
        s,
        r#"<text x="{:.1}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        f.width / 2.0,
        xml_escape(title)
    )
    .unwrap();
    s
}

fn y_axis(s: &mut String, f: &Frame, label: &str) {
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let y = f.y(t);
        writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#ddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}%</text>"##,
            f.x(0.0),
            f.x(1.0),
            f.x(0.0) - 6.0,
            y + 4.0,
            k * 25
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text transform="translate(16 {:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        f.y(0.5),
        xml_escape(label)
    )
    .unwrap();
}

fn dashed_h(s: &mut String, f: &Frame, t: f64) {
    writeln!(
        s,
        r##"<line x1="{:.1}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#555" stroke-dasharray="6 4"/>"##,
        f.x(0.0),
        f.x(1.0),
        y = f.y(t)
    )
    .unwrap();
}

/// Perturbed-image accuracy against signed alpha, one line per model.
pub fn dose_response_svg(scores: &[ModelScore], human: Option<&HumanBaseline>) -> String {
    let f = Frame {
        width: 720.0,
        height: 440.0,
        left: 60.0,
        right: 170.0,
        top: 36.0,
        bottom: 48.0,
    };
    let xt = |a: f64| (a + 1.0) / 2.0;
    let mut s = svg_open(&f, "Accuracy vs. perturbation strength (Perturbed)");
    y_axis(&mut s, &f, "both-correct accuracy");
    for k in -5..=5 {
        let a = k as f64 / 5.0;
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{:.1}</text>"#,
            f.x(xt(a)),
            f.y(0.0) + 18.0,
            a
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">alpha</text>"#,
        f.x(0.5),
        f.height - 8.0
    )
    .unwrap();
    dashed_h(&mut s, &f, 0.5);
    if let Some(a) = human.and_then(|h| h.alpha_star) {
        for signed in [-a, a] {
            let x = f.x(xt(signed));
            writeln!(
                s,
                r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000" stroke-dasharray="2 3"/>"##,
                f.y(0.0),
                f.y(1.0)
            )
            .unwrap();
        }
    }
    let mut legend = 0;
    for (i, score) in scores.iter().enumerate() {
        let Some(curve) = score.dose_response.iter().find(|d| d.condition == VariantKind::P) else {
            continue;
        };
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = curve
            .points
            .iter()
            .map(|p| format!("{:.1},{:.1}", f.x(xt(p.alpha)), f.y(p.accuracy)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            points.join(" ")
        )
        .unwrap();
        for p in &points {
            let (x, y) = p.split_once(',').unwrap();
            writeln!(s, r#"<circle cx="{x}" cy="{y}" r="3" fill="{color}"/>"#).unwrap();
        }
        let ly = f.top + 10.0 + 18.0 * legend as f64;
        writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="12" height="12" fill="{color}"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            f.width - f.right + 14.0,
            ly - 10.0,
            f.width - f.right + 32.0,
            ly,
            xml_escape(&score.model_id)
        )
        .unwrap();
        legend += 1;
    }
    if human.and_then(|h| h.alpha_star).is_some() {
        let ly = f.top + 10.0 + 18.0 * legend as f64;
        writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#000" stroke-dasharray="2 3"/><text x="{:.1}" y="{ly:.1}">human 95% threshold</text>"##,
            f.width - f.right + 14.0,
            ly - 4.0,
            f.width - f.right + 26.0,
            ly - 4.0,
            f.width - f.right + 32.0,
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Stacked bars PFA / CbW / TFI / invalid per model, ordered by PFC.
pub fn pfc_decomposition_svg(scores: &[ModelScore]) -> String {
    let mut rows: Vec<&MetricReport> = scores.iter().filter_map(|s| s.report.as_ref()).collect();
    rows.sort_by(|a, b| b.pfc.total_cmp(&a.pfc).then_with(|| a.model_id.cmp(&b.model_id)));
    let f = Frame {
        width: (140.0 + 70.0 * rows.len() as f64).max(420.0) + 120.0,
        height: 420.0,
        left: 60.0,
        right: 140.0,
        top: 36.0,
        bottom: 70.0,
    };
    let mut s = svg_open(&f, "Polarity-flip consistency decomposition");
    y_axis(&mut s, &f, "share of pairs");
    let segments = [
        ("PFA", "#2ca02c"),
        ("CbW", "#ff7f0e"),
        ("TFI", "#d62728"),
        ("invalid", "#999999"),
    ];
    let slot = 1.0 / rows.len().max(1) as f64;
    for (i, r) in rows.iter().enumerate() {
        let values = [r.pfa, r.cbw, r.tfi, r.invalid_rate];
        let x0 = f.x(slot * (i as f64 + 0.2));
        let bw = f.x(slot * (i as f64 + 0.8)) - x0;
        let mut acc = 0.0;
        for (v, (_, color)) in values.iter().zip(segments) {
            let (ya, yb) = (f.y(acc), f.y(acc + v));
            writeln!(
                s,
                r#"<rect x="{x0:.1}" y="{yb:.1}" width="{bw:.1}" height="{:.1}" fill="{color}"/>"#,
                ya - yb
            )
            .unwrap();
            acc += v;
        }
        writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end" transform="rotate(-30 {:.1} {:.1})">{}</text>"#,
            x0 + bw / 2.0,
            f.y(0.0) + 16.0,
            x0 + bw / 2.0,
            f.y(0.0) + 16.0,
            xml_escape(&r.model_id)
        )
        .unwrap();
    }
    dashed_h(&mut s, &f, 0.5);
    for (k, (name, color)) in segments.iter().enumerate() {
        let ly = f.top + 10.0 + 18.0 * k as f64;
        writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="12" height="12" fill="{color}"/><text x="{:.1}" y="{ly:.1}">{name}</text>"#,
            f.width - f.right + 14.0,
            ly - 10.0,
            f.width - f.right + 32.0,
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

fn summary_md(scores: &[ModelScore], human: Option<&HumanBaseline>) -> String {
    let mut s = String::from("# vi-probe report\n\n| Model | Pairs | PFC | PFA | CbW | TFI | R | P crosses 50% at |alpha| | Warnings |\n|---|---|---|---|---|---|---|---|---|\n");
    for sc in scores {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        match &sc.report {
            Some(r) => writeln!(
                s,
                "| {} | {} | {} | {} | {} | {} | {:.2} | {} | {} |",
                sc.model_id,
                r.pairs,
                pct(r.pfc),
                pct(r.pfa),
                pct(r.cbw),
                pct(r.tfi),
                r.r,
                sc.p_crossing_50.map_or("never".into(), |a| format!("{a:.3}")),
                sc.warnings.len()
            ),
            None => writeln!(
                s,
                "| {} | {} | | | | | | | {} |",
                sc.model_id,
                sc.counts.n,
                sc.warnings.len()
            ),
        }
        .unwrap();
    }
    if let Some(h) = human {
        let star = h.alpha_star.map_or_else(|| "absent".to_string(), |a| format!("{a:.3}"));
        write!(
            s,
            "\nHuman 95% detection threshold: {star} ({} judgments)\n",
            h.judgments
        )
        .unwrap();
    }
    s
}

pub fn write_report(
    dir: &Path,
    scores: &[ModelScore],
    human: Option<&HumanBaseline>,
) -> Result<Vec<PathBuf>, CliError> {
    let rows: Vec<&MetricReport> = scores.iter().filter_map(|s| s.report.as_ref()).collect();
    let t3 = table3_rows(scores);
    let files: Vec<(&str, Vec<u8>)> = vec![
        ("table2.csv", table2_csv(&rows).into_bytes()),
        ("table3.csv", table3_csv(&t3).into_bytes()),
        ("dose_response.svg", dose_response_svg(scores, human).into_bytes()),
        ("pfc_decomposition.svg", pfc_decomposition_svg(scores).into_bytes()),
        ("summary.md", summary_md(scores, human).into_bytes()),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_file(&p, &bytes)?;
        written.push(p);
    }
    for (name, value) in [
        ("table2.json", serde_json::to_value(&rows).expect("serializable")),
        ("table3.json", serde_json::to_value(&t3).expect("serializable")),
    ] {
        let p = dir.join(name);
        write_json(&p, &value)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_when_needed() {
        assert_eq!(csv_field("gpt-5"), "gpt-5");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn table2_header_matches_layout() {
        let text = table2_csv(&[]);
        assert_eq!(text, "Model,PFC,O,P,Ave,OC,PC,Ave,ΔO,ΔP,ΔAve,R\n");
    }
}
