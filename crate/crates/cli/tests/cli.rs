use std::path::PathBuf;
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn gulfclim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gulfclim")).args(args).output().expect("binary runs")
}

fn config(name: &str) -> String {
    fixtures().join("configs").join(name).display().to_string()
}

const QUESTION: &str = "How much rain fell in Doha on 2023-04-15?";

#[test]
fn ask_is_reproducible_and_grounded() {
    let tmp = tempfile::tempdir().unwrap();
    let mut trajectories = Vec::new();
    for i in 0..3 {
        let out = tmp.path().join(format!("run{i}"));
        let o = gulfclim(&["ask", "-c", &config("doha_rain.toml"), "-o", out.to_str().unwrap(), QUESTION]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(String::from_utf8_lossy(&o.stdout).contains("12.0 mm"));
        trajectories.push(std::fs::read_to_string(out.join("trajectory.json")).unwrap());
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    }
    assert!(trajectories[0].contains("12.0 mm"));
    assert!(trajectories.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn ungrounded_answer_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = gulfclim(&["ask", "-c", &config("ungrounded_probe.toml"), "-o", tmp.path().to_str().unwrap(), QUESTION]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("99.9"));
    let answer: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("answer.json")).unwrap()).unwrap();
    assert_eq!(answer["ungrounded_numbers"], serde_json::json!(["99.9"]));
}

#[test]
fn config_errors_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[backend]\nkind = \"carrier_pigeon\"\n").unwrap();
    assert_eq!(gulfclim(&["ask", "-c", bad.to_str().unwrap(), "q"]).status.code(), Some(1));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(gulfclim(&["tools", "list", "-c", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn bench_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let suite = fixtures().join("bench/suite.jsonl");
    let o = gulfclim(&[
        "bench",
        "-c",
        &config("bench_gold.toml"),
        "-o",
        tmp.path().to_str().unwrap(),
        "--suite",
        suite.to_str().unwrap(),
        "--images",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("report.csv")).unwrap();
    assert!(csv.starts_with("id,step,inst,tool,arg,summ,error,ans,ans_i\n"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["tool_acc"], 100.0);
    assert_eq!(report["ans_acc_i"], 100.0);
}

#[test]
fn tools_list_and_call() {
    let o = gulfclim(&["tools", "list", "-c", &config("doha_rain.toml")]);
    assert_eq!(o.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&o.stdout);
    assert_eq!(listing.lines().filter(|l| l.starts_with("- ")).count(), 22);

    let cfg = config("doha_rain.toml");
    let o = gulfclim(&["tools", "call", "-c", &cfg, "aqi_inquiry", "lat=25.2854", "lon=51.531", "date=2023-04-15"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("\"value\": 87.0"));
    let o = gulfclim(&["tools", "call", "-c", &cfg, "aqi_inquiry", "lat=25.2854"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lon"));
    let o = gulfclim(&["tools", "call", "-c", &cfg, "aqi_inquiry", "lat=25.2854", "lon=51.531", "date=2001-01-01"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn unknown_subcommand_exits_one() {
    assert_eq!(gulfclim(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(gulfclim(&["--help"]).status.code(), Some(0));
}

#[test]
fn forge_commands_run_offline() {
    let tmp = tempfile::tempdir().unwrap();
    for (kind, cfg) in [("text", "forge_text.toml"), ("visual", "forge_visual.toml")] {
        let out = tmp.path().join(kind);
        let o = gulfclim(&["forge", kind, "-c", &config(cfg), "-o", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let dataset = std::fs::read_to_string(out.join("dataset.jsonl")).unwrap();
        assert!(dataset.lines().count() > 0);
        for line in dataset.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(!v["provenance"].as_array().unwrap().is_empty());
        }
    }
    let golden = std::fs::read_to_string(fixtures().join("golden/doha_temperature_w000.svg")).unwrap();
    let made = std::fs::read_to_string(tmp.path().join("visual/charts/doha_temperature_w000.svg")).unwrap();
    assert_eq!(made, golden);
}
