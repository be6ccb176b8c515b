use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wristfuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wristfuse")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = wristfuse(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn fail(args: &[&str]) -> String {
    let out = wristfuse(args);
    assert!(!out.status.success(), "{args:?} unexpectedly succeeded");
    String::from_utf8(out.stderr).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL_SPEC: &str = r#"version = 1

[corpus]
seed = 1
subjects = 4

[corpus.counts]
slow_pace = 2
comfortable_pace = 2
fast_pace = 2
bag_right_hand = 2
phone_two_hands = 2
no_arm_swing = 2
no_right_shoe = 2
cane_right_hand = 2

[tuning]
folds = 2

[grids.union]
smooth_single = [0.05]
min_peak_amp = [0.3, 0.25]
min_peak_gap = [0.3, 0.35]
fuse_min_dist = [0.2]
"#;

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn full_session_is_byte_identical_across_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let run = |tag: &str| {
        let corpus = tmp.path().join(format!("corpus_{tag}"));
        let res = tmp.path().join(format!("res_{tag}"));
        ok(&["simulate", "--spec", s(&spec), "--seed", "9", "--out", s(&corpus)]);
        ok(&["tune", "--corpus", s(&corpus), "--out", s(&res), "--alg", "union,left", "--config", s(&spec)]);
        let params = res.join("params.json");
        ok(&["detect", "--corpus", s(&corpus), "--out", s(&res), "--params", s(&params)]);
        ok(&["evaluate", "--corpus", s(&corpus), "--results", s(&res), "--outlier-frac", "0.05"]);
        let table = ok(&["report", "--results", s(&res)]);
        (files(&corpus), files(&res), table)
    };
    let (c1, r1, t1) = run("a");
    let (c2, r2, t2) = run("b");
    assert_eq!(c1.len(), 16 * 3 + 1);
    assert!(r1.iter().any(|(n, _)| n == "cv_union.json"));
    assert!(r1.iter().any(|(n, _)| n == "detections_left.csv"));
    assert!(r1.iter().any(|(n, _)| n == "errors_long.csv"));
    assert!(c1 == c2, "corpus files differ between runs");
    assert!(r1 == r2, "result files differ between runs");
    assert_eq!(t1, t2);
    for task in ["slow_pace", "cane_right_hand", "phone_two_hands"] {
        assert!(t1.lines().any(|l| l.starts_with(task)), "{t1}");
    }
}

#[test]
fn detect_twice_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let corpus = tmp.path().join("corpus");
    ok(&["simulate", "--spec", s(&spec), "--out", s(&corpus)]);
    let params = tmp.path().join("tuned.json");
    fs::write(
        &params,
        r#"{"union": {"smooth_single": 0.05, "min_peak_amp": 0.3, "min_peak_gap": 0.3, "fuse_min_dist": 0.2}}"#,
    )
    .unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        ok(&["detect", "--alg", "union", "--params", s(&params), "--corpus", s(&corpus), "--out", s(out)]);
    }
    assert_eq!(files(&a), files(&b));
    assert_eq!(files(&a).len(), 1);
}

#[test]
fn default_spec_writes_full_corpus() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("corpus");
    ok(&["simulate", "--spec", "default", "--seed", "42", "--out", s(&out)]);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert_eq!(manifest.matches("\"sidecar\"").count(), 203);
    assert_eq!(fs::read_dir(&out).unwrap().count(), 203 * 3 + 1);
}

#[test]
fn errors_are_actionable() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = tmp.path().join("spec.toml");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let corpus = tmp.path().join("corpus");
    let res = tmp.path().join("res");

    let err = fail(&["detect", "--corpus", s(&corpus), "--out", s(&res), "--config", s(&spec)]);
    assert!(err.contains("--params"), "{err}");

    let err = fail(&["tune", "--corpus", s(&corpus), "--out", s(&res)]);
    assert!(err.contains("manifest.json") && err.contains("simulate"), "{err}");

    ok(&["simulate", "--spec", s(&spec), "--out", s(&corpus)]);
    let err = fail(&["evaluate", "--corpus", s(&corpus), "--results", s(&res)]);
    assert!(err.contains("wristfuse detect"), "{err}");

    let err = fail(&["report", "--results", s(&res)]);
    assert!(err.contains("evaluate"), "{err}");

    let err = fail(&["simulate", "--out", s(&corpus), "--bogus"]);
    assert!(err.contains("--bogus"), "{err}");

    let err = fail(&["detect", "--alg", "both", "--corpus", s(&corpus), "--out", s(&res)]);
    assert!(err.contains("both"), "{err}");

    let manifest = corpus.join("manifest.json");
    let text = fs::read_to_string(&manifest).unwrap();
    fs::write(&manifest, text.replacen("\"format_version\": 1", "\"format_version\": 7", 1)).unwrap();
    let err = fail(&["tune", "--corpus", s(&corpus), "--out", s(&res), "--alg", "left"]);
    assert!(err.contains("version 7"), "{err}");

    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, SMALL_SPEC.replace("subjects = 4", "subject = 4")).unwrap();
    let err = fail(&["simulate", "--spec", s(&bad), "--out", s(&tmp.path().join("x"))]);
    assert!(err.contains("bad.toml") && err.contains("subject"), "{err}");
}
