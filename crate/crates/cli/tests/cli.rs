use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn regintel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regintel"))
        .args(args)
        .env_remove("REGINTEL_API_KEY")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = regintel(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn scripted_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let corpus = d.join("corpus.jsonl");
    let bench = d.join("bench.jsonl");
    let fixtures = d.join("fixtures.jsonl");

    ok(&["corpus", "gen", "--seed", "3", "--filers", "6", "--records-per-table", "3", "--out", p(&corpus)]);
    let stats = ok(&[
        "bench", "gen", "--corpus", p(&corpus), "--bench-seed", "1", "--per-template", "3",
        "--variations", "1", "--perfect-fixtures", p(&fixtures), "--out", p(&bench),
    ]);
    assert!(stats.contains("E0") && stats.contains("H3"), "{stats}");
    let lines = std::fs::read_to_string(&bench).unwrap().lines().count();
    assert_eq!(lines, 11 * 3 * 2);

    let scripted = ["--corpus", p(&corpus), "--provider", "scripted", "--fixtures", p(&fixtures)];
    let routing = d.join("routing.json");
    let agentic = d.join("agentic.json");
    let mut args = vec!["route", "run"];
    args.extend(scripted);
    args.extend(["--bench", p(&bench), "--strategy", "gen", "--strategy", "swarm", "--out", p(&routing)]);
    ok(&args);
    let mut args = vec!["agentic", "run"];
    args.extend(scripted);
    args.extend(["--bench", p(&bench), "--out", p(&agentic)]);
    ok(&args);

    let json: Value = serde_json::from_str(&std::fs::read_to_string(&agentic).unwrap()).unwrap();
    let overall = &json["agentic"]["overall"]["both"];
    assert_eq!(overall["successes"], overall["count"], "{overall}");
    let json: Value = serde_json::from_str(&std::fs::read_to_string(&routing).unwrap()).unwrap();
    for row in json["routing"]["rows"].as_array().unwrap() {
        assert_eq!(row["acc_overall"].as_f64().unwrap(), 1.0, "{row}");
    }

    let merged = |name: &str| {
        let out = d.join(name);
        ok(&["report", "--from", p(&routing), "--from", p(&agentic), "--out", p(&out)]);
        out
    };
    let (a, b) = (merged("a"), merged("b"));
    for f in ["report.json", "report.md"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let md = std::fs::read_to_string(a.join("report.md")).unwrap();
    assert!(md.contains("## Routing accuracy (%)") && md.contains("## Agentic success (%)"));
}

#[test]
fn full_report_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let report = |name: &str| {
        let out = dir.path().join(name);
        ok(&["report", "--seed", "2", "--dim", "32", "--out", p(&out)]);
        std::fs::read(out.join("report.json")).unwrap()
    };
    assert_eq!(report("x"), report("y"));
}

fn small_bench(dir: &Path) -> String {
    let bench = dir.join("bench.jsonl");
    ok(&["bench", "gen", "--seed", "1", "--per-template", "1", "--variations", "0", "--out", p(&bench)]);
    p(&bench).to_string()
}

#[test]
fn missing_fixtures_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bench = small_bench(dir.path());
    let out = regintel(&[
        "agentic", "run", "--bench", &bench, "--provider", "scripted", "--fixtures",
        p(&dir.path().join("nope.jsonl")), "--out", p(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn remote_provider_without_key_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bench = small_bench(dir.path());
    let out = regintel(&["route", "run", "--bench", &bench, "--provider", "remote", "--strategy", "gen", "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("REGINTEL_API_KEY"));
}
