use std::path::Path;
use std::process::{Command, Output};

const MINI: &str = r#"
[dataset]
cases = [1, 19]
alpha_grid = [-1.0, -0.6, -0.2, 0.2, 0.6, 1.0]
image_size = 128

[probe]
plan = { variants = ["forward", "reverse", "instructional", "instructional-reverse"] }

[[probe.mocks]]
model = "mock-template"
policy = "template"

[[probe.mocks]]
model = "mock-oracle"
policy = "oracle"
"#;

fn vi_probe(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vi-probe"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(o: &Output) {
    assert!(
        o.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn mini_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(&config, MINI).unwrap();
    let out = dir.path().join("run");
    for cmd in ["gen", "probe", "score", "report"] {
        ok(&vi_probe(&[cmd], &config, &out));
    }
    let report = out.join("report");
    for f in [
        "table2.csv",
        "table2.json",
        "table3.csv",
        "table3.json",
        "dose_response.svg",
        "pfc_decomposition.svg",
        "summary.md",
    ] {
        assert!(report.join(f).exists(), "{f}");
    }
    let table2 = std::fs::read_to_string(report.join("table2.csv")).unwrap();
    assert!(table2.starts_with("Model,PFC,O,P,Ave,OC,PC,Ave,ΔO,ΔP,ΔAve,R\n"));
    assert!(
        table2.contains("mock-oracle,100.00,100.00,100.00,100.00,100.00,100.00,100.00,0.00,0.00,0.00,0.00"),
        "{table2}"
    );
    assert!(
        table2.contains("mock-template,100.00,100.00,0.00,50.00,100.00,100.00,100.00,0.00,-100.00,50.00,1000.00"),
        "{table2}"
    );
    let svg = std::fs::read_to_string(report.join("dose_response.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("polyline"));

    let snapshot: Vec<Vec<u8>> = ["table2.csv", "table3.csv", "dose_response.svg", "pfc_decomposition.svg"]
        .iter()
        .map(|f| std::fs::read(report.join(f)).unwrap())
        .collect();
    let again = vi_probe(&["probe"], &config, &out);
    ok(&again);
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 requested"));
    ok(&vi_probe(&["score"], &config, &out));
    ok(&vi_probe(&["report"], &config, &out));
    for (f, before) in ["table2.csv", "table3.csv", "dose_response.svg", "pfc_decomposition.svg"]
        .iter()
        .zip(snapshot)
    {
        assert_eq!(std::fs::read(report.join(f)).unwrap(), before, "{f} changed");
    }
}

#[test]
fn unpaired_item_yields_one_warning() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mini.toml");
    std::fs::write(
        &config,
        MINI.replace("\"instructional\", \"instructional-reverse\"", ""),
    )
    .unwrap();
    let out = dir.path().join("run");
    for cmd in ["gen", "probe"] {
        ok(&vi_probe(&[cmd], &config, &out));
    }
    let log = out.join("responses/mock-oracle/log.jsonl");
    let text = std::fs::read_to_string(&log).unwrap();
    let kept: Vec<&str> = text.lines().skip(1).collect();
    std::fs::write(&log, kept.join("\n") + "\n").unwrap();
    let o = vi_probe(&["score"], &config, &out);
    ok(&o);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(
        stdout
            .lines()
            .any(|l| l.starts_with("mock-oracle") && l.ends_with(", 1 warnings")),
        "{stdout}"
    );
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(
        stderr.lines().filter(|l| l.starts_with("warning: mock-oracle")).count(),
        1
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[dataset]\ncases = [42]\n").unwrap();
    assert_eq!(vi_probe(&["gen"], &bad, &out).status.code(), Some(1));
    let missing = dir.path().join("missing.toml");
    assert_eq!(vi_probe(&["gen"], &missing, &out).status.code(), Some(1));

    let cfg = dir.path().join("unreachable.toml");
    std::fs::write(
        &cfg,
        r#"
[dataset]
cases = [1]
alpha_grid = [0.6]
kinds = ["O"]
image_size = 64

[[probe.models]]
model = "nowhere"
endpoint = "http://127.0.0.1:9"
max_attempts = 1
timeout_secs = 2
"#,
    )
    .unwrap();
    ok(&vi_probe(&["gen"], &cfg, &out));
    assert_eq!(vi_probe(&["score"], &cfg, &out).status.code(), Some(1));
    assert_eq!(vi_probe(&["probe"], &cfg, &out).status.code(), Some(2));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["mini.toml", "full.toml"] {
        let c = vi_probe_cli::RunConfig::load(&dir.join(name), None).unwrap();
        assert!(!c.probe.models.is_empty() || !c.probe.mocks.is_empty(), "{name}");
    }
}
