use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn host() -> PathBuf {
    root().join("fixtures/hosts/cs_amp.sp")
}

fn scratch(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn amscheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amscheck")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn lint_exit_codes() {
    assert_eq!(code(&amscheck(&["lint", s(&host())])), 0);
    let bug = root().join("fixtures/bugs/missing-end-statement.sp");
    let o = amscheck(&["lint", s(&bug)]);
    assert_eq!(code(&o), 1);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["findings"][0]["rule_id"], "missing-end-statement");
    assert_eq!(code(&amscheck(&["lint"])), 2);
    assert_eq!(code(&amscheck(&["lint", "/no/such/file.sp"])), 2);
    assert_eq!(code(&amscheck(&["frobnicate"])), 2);
    assert_eq!(code(&amscheck(&["--help"])), 0);
}

#[test]
fn fix_writes_clean_netlist() {
    let d = scratch("fix");
    let fixed = d.join("fixed.sp");
    let bug = root().join("fixtures/bugs/incorrect-print-statement.sp");
    let summary = d.join("fix.json");
    // Exit status reflects what is left after fixing.
    assert_eq!(code(&amscheck(&["fix", s(&bug), "--write", s(&fixed), "--out", s(&summary)])), 0);
    let v = json(&summary);
    assert_eq!(v["report"]["findings"].as_array().unwrap().len(), 1);
    assert!(v["remaining"].as_array().unwrap().is_empty());
    assert_eq!(code(&amscheck(&["lint", s(&fixed)])), 0);
}

#[test]
fn inject_lint_score() {
    let d = scratch("bugs");
    let (net, truth, report) = (d.join("b.sp"), d.join("truth.json"), d.join("report.json"));
    let o = amscheck(&[
        "inject-bugs", s(&host()), "--easy", "1", "--medium", "1", "--seed", "4", "--write", s(&net), "--out", s(&truth),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&truth)["bug_truth"].as_array().unwrap().len(), 2);
    assert_eq!(code(&amscheck(&["lint", s(&net), "--out", s(&report)])), 1);
    let scored = d.join("score.json");
    assert_eq!(code(&amscheck(&["score", "--truth", s(&truth), "--report", s(&report), "--out", s(&scored)])), 0);
    assert_eq!(json(&scored)["bug_coverage_pct"], 100.0);
}

#[test]
fn trojan_detect_end_to_end() {
    let d = scratch("trojan");
    let (net, truth, log, report) = (d.join("t.sp"), d.join("t.json"), d.join("t.log"), d.join("r.json"));
    let o = amscheck(&[
        "inject-trojan", s(&host()), "--payload", "outb", "--trigger", "nb", "--seed", "2", "--scramble",
        "--write", s(&net), "--out", s(&truth),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&truth)["label"], "cs_amp_troj_outb");
    let o = amscheck(&["gen-log", "--netlist", s(&net), "--truth", s(&truth), "--out", s(&log)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = amscheck(&["detect", "--netlist", s(&net), "--log", s(&log), "--spec", "0.6:1.2", "--out", s(&report)]);
    assert_eq!(code(&o), 1);
    assert_eq!(json(&report)["trojan_detected"], true);
    let scored = d.join("score.json");
    assert_eq!(code(&amscheck(&["score", "--truth", s(&truth), "--report", s(&report), "--out", s(&scored)])), 0);
    let m = json(&scored);
    assert_eq!(m["trojan_identified"], true);
    assert_eq!(m["recall_pct"], 100.0);

    let clean = d.join("clean.log");
    assert_eq!(code(&amscheck(&["gen-log", "--netlist", s(&net), "--out", s(&clean)])), 0);
    assert_eq!(code(&amscheck(&["detect", "--netlist", s(&net), "--log", s(&clean), "--spec", "0.6:1.2"])), 0);
    assert_eq!(code(&amscheck(&["detect", "--netlist", s(&net), "--log", s(&clean), "--spec", "1.2:0.6"])), 2);
}

#[test]
fn bench_is_deterministic() {
    let d = scratch("bench");
    let cfg = root().join("fixtures/bench/bench.toml");
    let (a, b) = (d.join("a"), d.join("b"));
    assert_eq!(code(&amscheck(&["bench", "--config", s(&cfg), "--out", s(&a)])), 0);
    assert_eq!(code(&amscheck(&["bench", "--config", s(&cfg), "--out", s(&b)])), 0);
    let csv = fs::read_to_string(a.join("bench.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(b.join("bench.csv")).unwrap());
    assert_eq!(csv.lines().count(), 1 + 30 + 1);
    assert!(csv.lines().last().unwrap().starts_with("Average,yes,"));
}

#[test]
fn bench_rejects_empty_corpus() {
    let d = scratch("bench_empty");
    let cfg = d.join("bench.toml");
    fs::write(&cfg, "corpus_dir = \".\"\n").unwrap();
    assert_eq!(code(&amscheck(&["bench", "--config", s(&cfg)])), 2);
}

#[test]
fn refine_silences_reviewed_findings() {
    let d = scratch("refine");
    let fp = root().join("fixtures/fp_suite/fp02_divider.sp");
    let rules = d.join("rules.toml");
    assert_eq!(code(&amscheck(&["lint", s(&fp)])), 1);
    assert_eq!(code(&amscheck(&["refine", s(&fp), "--out", s(&rules)])), 0);
    assert_eq!(code(&amscheck(&["lint", s(&fp), "--rules", s(&rules)])), 0);
    let other = root().join("fixtures/bugs/missing-end-statement.sp");
    assert_eq!(code(&amscheck(&["lint", s(&other), "--rules", s(&rules)])), 1);
}

#[test]
fn llm_prompt_only_and_saved_response() {
    let d = scratch("llm");
    let o = amscheck(&["llm", "lint", s(&host()), "--prompt-only"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("## Syntax rules"));
    let answer = d.join("answer.txt");
    fs::write(&answer, "Line 9: incorrect-resistor-value-format: R1 uses 10K; fix: R1 vdd out 10k\n").unwrap();
    let out = d.join("parsed.json");
    let o = amscheck(&["llm", "lint", s(&host()), "--response", s(&answer), "--out", s(&out)]);
    assert_eq!(code(&o), 1, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&out).unwrap().contains("incorrect-resistor-value-format"));
}
