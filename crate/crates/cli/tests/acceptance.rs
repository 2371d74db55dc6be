//! One line per acceptance criterion. Exits non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use vi_probe_cli::{cmd_gen, cmd_probe, cmd_score, ModelScore, RunConfig};
use vi_probe_core::answer::{parse_answer, Answer};
use vi_probe_core::catalog::{
    generate_variant, list_cases, map_alpha, measured_settings, Category, GroundTruth, StyleParams, VariantKind,
};
use vi_probe_core::dataset::{build_dataset, count_summary, DatasetConfig, MANIFEST_FILE};
use vi_probe_core::metrics::{
    cbw, condition_accuracy, human_threshold, illusion_multiplier, pfa, pfc, tfi, ConditionAccuracies, ConditionSlice,
    DetectionRate, MetricConfig, ResponsePair,
};
use vi_probe_core::scene::Role;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn r_reproduction() -> Outcome {
    let rows = [
        ("GPT-5", (91.72, 4.45, 96.55, 52.24), 1.97),
        ("GPT-5-Mini", (87.24, 8.97, 93.45, 30.38), 1.24),
        ("Qwen2.5-VL-3B", (22.41, 14.07, 74.48, 10.72), 0.13),
    ];
    let mut got = Vec::new();
    for (name, (o, p, oc, pc), printed) in rows {
        let r = illusion_multiplier(
            ConditionAccuracies::from_percent(o, p, oc, pc),
            &MetricConfig::default(),
        )
        .map_err(|e| e.to_string())?;
        if (r - printed).abs() > 0.01 {
            return Err(format!("{name}: R = {r:.4}, printed {printed}"));
        }
        got.push(format!("{name} {r:.4}"));
    }
    Ok(got.join(", "))
}

fn cbw_identity() -> Outcome {
    let v = cbw(0.9232, 0.6124).map_err(|e| e.to_string())? * 100.0;
    let text = format!("{v:.2}");
    check(
        text == "31.08" && (v - 31.08).abs() < 1e-9,
        format!("CbW = {text}%"),
        format!("CbW = {v}"),
    )
}

/// Truth table over (forward, reverse, y_forward): (complementary, fixated, both correct).
fn truth_table() -> Vec<((Option<u8>, Option<u8>, u8), (bool, bool, bool))> {
    let answers = [None, Some(0), Some(1)];
    let mut table = Vec::new();
    for f in answers {
        for r in answers {
            for y in [0u8, 1] {
                let (comp, fix) = match (f, r) {
                    (Some(a), Some(b)) => (a != b, a == b),
                    _ => (false, false),
                };
                let both = f == Some(y) && r == Some(1 - y);
                table.push(((f, r, y), (comp, fix, both)));
            }
        }
    }
    table
}

fn to_answer(a: Option<u8>) -> Answer {
    a.map_or(Answer::Invalid, Answer::from_bit)
}

fn oracle_equivalence() -> Outcome {
    let table = truth_table();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let answers = [None, Some(0u8), Some(1u8)];
    let mut checked = 0;
    for set in 0..1000 {
        let n = rng.random_range(1..=12);
        let mut pairs = Vec::with_capacity(n);
        let mut raw = Vec::with_capacity(n);
        for i in 0..n {
            let f = answers[rng.random_range(0..3)];
            let r = answers[rng.random_range(0..3)];
            let y: u8 = rng.random_range(0..2);
            raw.push((f, r, y));
            pairs.push(ResponsePair {
                item_id: format!("{set}-{i}"),
                case_id: 1,
                category: Category::Size,
                variant_kind: VariantKind::O,
                alpha: 0.0,
                instructional: false,
                a_forward: to_answer(f),
                a_reverse: to_answer(r),
                ground_truth: GroundTruth::from_forward(y),
            });
        }
        let (mut comp, mut fix, mut both) = (0usize, 0usize, 0usize);
        for key in &raw {
            let (_, (c, x, b)) = table.iter().find(|(k, _)| k == key).unwrap();
            comp += usize::from(*c);
            fix += usize::from(*x);
            both += usize::from(*b);
        }
        let nf = n as f64;
        let (e_pfc, e_pfa, e_tfi) = (comp as f64 / nf, both as f64 / nf, fix as f64 / nf);
        let got_pfc = pfc(&pairs).map_err(|e| e.to_string())?;
        let got_pfa = pfa(&pairs).map_err(|e| e.to_string())?;
        let got_tfi = tfi(&pairs).map_err(|e| e.to_string())?;
        let got_cbw = cbw(got_pfc, got_pfa).map_err(|e| e.to_string())?;
        let acc = condition_accuracy(&pairs, &ConditionSlice::of(VariantKind::O)).map_err(|e| e.to_string())?;
        if got_pfc != e_pfc || got_pfa != e_pfa || got_tfi != e_tfi || got_cbw != e_pfc - e_pfa || acc.accuracy != e_pfa
        {
            return Err(format!("set {set} disagrees: {raw:?}"));
        }
        checked += n;
    }
    Ok(format!("1000 sets, {checked} pairs, all five quantities equal"))
}

fn geometric_ground_truth() -> Outcome {
    let mut scenes = 0;
    for desc in list_cases() {
        for seed in [3u64, 31, 314, 2718, 4242] {
            let style = StyleParams::from_seed(seed);
            for kind in VariantKind::ALL {
                let alphas: &[f64] = if kind.is_perturbed() {
                    &[-1.0, -0.2, 0.2, 1.0]
                } else {
                    &[0.0]
                };
                for &alpha in alphas {
                    let id = desc.case_id;
                    let (scene, gt) =
                        generate_variant(id, kind, alpha, &style).map_err(|e| format!("case {id} {kind:?}: {e}"))?;
                    let at = || format!("case {id} {kind:?} alpha {alpha} seed {seed}");
                    if !gt.is_consistent() {
                        return Err(format!("{}: inconsistent labels", at()));
                    }
                    if kind == VariantKind::IND {
                        if scene.count_role(Role::Target) != 0 {
                            return Err(format!("{}: targets present", at()));
                        }
                    } else {
                        let expected = map_alpha(id, alpha).map_err(|e| e.to_string())?;
                        if !kind.is_perturbed() && !expected.is_neutral() {
                            return Err(format!("{}: classic setting not neutral", at()));
                        }
                        for m in measured_settings(id, &scene).map_err(|e| e.to_string())? {
                            if !m.approx_eq(&expected) {
                                return Err(format!("{}: measured {m:?}, expected {expected:?}", at()));
                            }
                        }
                    }
                    if kind.is_control() && scene.count_role(Role::Inducer) != 0 {
                        return Err(format!("{}: inducers in control", at()));
                    }
                    if kind.is_hinted() {
                        let (twin, _) =
                            generate_variant(id, kind.unhinted(), alpha, &style).map_err(|e| e.to_string())?;
                        let keep = [Role::Target, Role::Inducer];
                        if scene.restricted_to(&keep) != twin.restricted_to(&keep) {
                            return Err(format!("{}: hint changed targets or inducers", at()));
                        }
                    }
                    scenes += 1;
                }
            }
        }
    }
    Ok(format!("{scenes} scenes verified"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let mut c = DatasetConfig::new(dir.path().join(name));
        c.cases = vec![1, 20];
        c.master_seed = 7;
        build_dataset(&c).map_err(|e| e.to_string())?;
        let mut files = vec![(
            MANIFEST_FILE.to_string(),
            std::fs::read(c.output_dir.join(MANIFEST_FILE)).map_err(|e| e.to_string())?,
        )];
        let mut pngs: Vec<_> = std::fs::read_dir(c.output_dir.join("images"))
            .map_err(|e| e.to_string())?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .collect();
        pngs.sort();
        for p in pngs {
            files.push((
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).map_err(|e| e.to_string())?,
            ));
        }
        Ok(files)
    };
    let a = run("a")?;
    let b = run("b")?;
    check(
        a == b && a.len() > 1,
        format!("manifest and {} PNGs byte-identical", a.len() - 1),
        "runs differ".into(),
    )
}

fn full_scale_counts() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut c = DatasetConfig::new(dir.path());
    c.dry_run = true;
    c.originals_per_case = 32;
    c.per_case_originals = (1..=6).map(|id| (id, 33)).collect();
    let m = build_dataset(&c).map_err(|e| e.to_string())?;
    let s = count_summary(&m);
    let got = (s.originals, s.perturbed, s.controls, s.hints);
    check(
        got == (870, 8700, 9570, 9570),
        format!("O {} / P {} / control {} / hint {}", got.0, got.1, got.2, got.3),
        format!("counts {got:?}"),
    )
}

fn mock_end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let text = r#"
        [dataset]
        cases = [1, 2, 13, 14, 19, 20]
        originals_per_case = 2
        image_size = 256

        [[probe.mocks]]
        model = "template"
        policy = "template"

        [[probe.mocks]]
        model = "oracle"
        policy = "oracle"

        [[probe.mocks]]
        model = "noisy"
        policy = "noisy_perceiver"
        threshold = 0.5
        noise = 0.1
        seed = 11
    "#;
    let config = RunConfig::parse(text, dir.path(), Some(&dir.path().join("run"))).map_err(|e| e.to_string())?;
    cmd_gen(&config).map_err(|e| e.to_string())?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    rt.block_on(cmd_probe(&config)).map_err(|e| e.to_string())?;
    let scores = cmd_score(&config).map_err(|e| e.to_string())?;
    let get = |m: &str| {
        scores
            .iter()
            .find(|s| s.model_id == m)
            .ok_or(format!("no score for {m}"))
    };
    let p_curve = |s: &ModelScore| s.dose_response.iter().find(|d| d.condition == VariantKind::P).cloned();

    let t = get("template")?;
    let tr = t.report.as_ref().ok_or("template: no report")?;
    let tflat = p_curve(t).is_some_and(|c| c.points.len() == 10 && c.points.iter().all(|p| p.accuracy == 0.0));
    if !(tr.acc_o == 1.0 && tr.acc_p == 0.0 && tflat && tr.r > 100.0) {
        return Err(format!(
            "template: O {} P {} R {} flat {tflat}",
            tr.acc_o, tr.acc_p, tr.r
        ));
    }

    let o = get("oracle")?;
    let or = o.report.as_ref().ok_or("oracle: no report")?;
    let all_one = [or.acc_o, or.acc_p, or.acc_oc, or.acc_pc, or.pfc, or.pfa]
        .iter()
        .all(|v| *v == 1.0)
        && o.dose_response
            .iter()
            .all(|d| d.points.iter().all(|p| p.accuracy == 1.0));
    if !(all_one && or.r == 0.0) {
        return Err(format!("oracle: {or:?}"));
    }

    let n = get("noisy")?;
    let crossing = n.p_crossing_50.ok_or("noisy: curve never reaches 50%")?;
    if (crossing - 0.5).abs() > 0.2 + 1e-9 {
        return Err(format!("noisy: crosses 50% at {crossing}"));
    }
    Ok(format!(
        "template O {:.0}% P {:.0}% R {:.1}; oracle 100% R 0; noisy crosses 50% at |alpha| {crossing:.3} (t = 0.5)",
        tr.acc_o * 100.0,
        tr.acc_p * 100.0,
        tr.r
    ))
}

#[derive(Deserialize)]
struct CorpusEntry {
    kind: String,
    text: String,
    expected: String,
}

fn parser_corpus() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/parser_corpus.json");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let corpus: Vec<CorpusEntry> = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    let mut agree = 0;
    for e in &corpus {
        let parsed =
            std::panic::catch_unwind(|| parse_answer(&e.text)).map_err(|_| format!("panic on {:?}", e.text))?;
        if parsed.value.to_string() == e.expected {
            agree += 1;
        } else {
            return Err(format!(
                "{} {:?}: got {}, expected {}",
                e.kind, e.text, parsed.value, e.expected
            ));
        }
    }
    check(
        corpus.len() == 50,
        format!("{agree}/{} agree, no panics", corpus.len()),
        format!("fixture has {} entries", corpus.len()),
    )
}

fn threshold_estimator() -> Outcome {
    let rates = |pairs: &[(f64, f64)]| -> Vec<DetectionRate> {
        pairs
            .iter()
            .map(|&(alpha, rate)| DetectionRate { alpha, rate, n: 20 })
            .collect()
    };
    let worked = human_threshold(&rates(&[(0.2, 0.5), (0.4, 0.8), (0.6, 0.9), (0.8, 0.96), (1.0, 1.0)]))
        .map_err(|e| e.to_string())?
        .ok_or("worked fixture: absent")?;
    if (worked - 0.767).abs() > 0.001 {
        return Err(format!("worked fixture gives {worked}"));
    }
    for sub in [
        vec![(0.2, 0.5), (0.4, 0.6), (0.6, 0.7), (0.8, 0.8), (1.0, 0.9)],
        vec![(0.2, 0.94), (0.6, 0.9), (1.0, 0.94)],
        vec![(-1.0, 0.3), (-0.5, 0.2), (0.5, 0.4), (1.0, 0.5), (0.8, 0.1)],
    ] {
        if let Some(a) = human_threshold(&rates(&sub)).map_err(|e| e.to_string())? {
            return Err(format!("sub-threshold fixture gives {a}"));
        }
    }
    Ok(format!("alpha* = {worked:.4}; sub-threshold fixtures absent"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("R reproduction from published accuracies", r_reproduction),
        ("CbW identity from published text", cbw_identity),
        ("metric oracle equivalence", oracle_equivalence),
        ("geometric ground truth", geometric_ground_truth),
        ("generation determinism", determinism),
        ("count arithmetic at full scale", full_scale_counts),
        ("mock end-to-end", mock_end_to_end),
        ("parser corpus", parser_corpus),
        ("threshold estimator", threshold_estimator),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail} ({secs:.1}s)"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {}/{} passed", 9 - failed, 9);
    if failed > 0 {
        std::process::exit(1);
    }
}
