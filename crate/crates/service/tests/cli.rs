use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn duet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duet"))
        .args(args)
        .output()
        .unwrap()
}

fn sample(file: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/sample")
        .join(file)
        .to_string_lossy()
        .into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let data = sample("loans.csv");
    let meta = sample("meta.json");
    let out_dir = dir.to_string_lossy().into_owned();
    let mut args = vec![
        "run",
        "--data",
        &data,
        "--meta",
        &meta,
        "--out-dir",
        &out_dir,
    ];
    args.extend_from_slice(extra);
    duet(&args)
}

#[test]
fn heuristic_run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_into(dir.path(), &["--backend", "heuristic", "--iterations", "2"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in [
        "transformed.csv",
        "sequences.fts",
        "transcript.jsonl",
        "iterations.json",
        "timing.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let fts = std::fs::read_to_string(dir.path().join("sequences.fts")).unwrap();
    assert_eq!(fts.lines().count(), 2);
    let transcript = std::fs::read_to_string(dir.path().join("transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), 4);
    let csv = std::fs::read_to_string(dir.path().join("transformed.csv")).unwrap();
    assert!(csv.lines().next().unwrap().ends_with(",default"));

    let fts_path = dir
        .path()
        .join("sequences.fts")
        .to_string_lossy()
        .into_owned();
    let out = duet(&["parse", &fts_path]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), fts);
}

#[test]
fn replay_runs_are_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let transcript = sample("transcript.jsonl");
    for dir in [&a, &b] {
        let out = run_into(
            dir.path(),
            &["--backend", "replay", "--strict", "--record", &transcript],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["transformed.csv", "sequences.fts"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn record_then_replay_matches_live_run() {
    let live = tempfile::tempdir().unwrap();
    let replayed = tempfile::tempdir().unwrap();
    let record = live.path().join("t.jsonl").to_string_lossy().into_owned();
    assert_eq!(code(&run_into(live.path(), &["--record", &record])), 0);
    assert_eq!(
        code(&run_into(
            replayed.path(),
            &["--backend", "replay", "--record", &record]
        )),
        0
    );
    assert_eq!(
        std::fs::read(live.path().join("transformed.csv")).unwrap(),
        std::fs::read(replayed.path().join("transformed.csv")).unwrap()
    );
}

#[test]
fn parse_reports_position_and_grammar() {
    let out = duet(&["parse", "--expr", "f1**f2"]);
    assert_eq!(code(&out), 1);
    let err = stderr(&out);
    assert!(err.contains("offset 3"), "{err}");
    assert!(err.contains("f1**f2\n   ^"), "{err}");
    assert!(err.contains("factor   :="), "{err}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.fts");
    std::fs::write(&path, "f1*f2\nlog(f3\n").unwrap();
    let out = duet(&["parse", &path.to_string_lossy()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains(":2: error"), "{}", stderr(&out));

    let out = duet(&["parse", "-e", "(f2*f1),log(f3)"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "f1*f2,log(f3)\n");
}

#[test]
fn eval_prints_table() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_into(dir.path(), &["--iterations", "1"])), 0);
    let transformed = dir
        .path()
        .join("transformed.csv")
        .to_string_lossy()
        .into_owned();
    let report = dir
        .path()
        .join("report.json")
        .to_string_lossy()
        .into_owned();
    let original = sample("loans.csv");
    let out = duet(&[
        "eval",
        "--original",
        &original,
        "--transformed",
        &transformed,
        "--target",
        "default",
        "--models",
        "dt,knn",
        "--seeds",
        "0,1",
        "--report",
        &report,
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("DT") && text.contains("KNN") && !text.contains("RF"),
        "{text}"
    );
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["cells"].as_array().unwrap().len(), 4);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&duet(&["--help"])), 0);
    assert_eq!(code(&duet(&[])), 1);
    assert_eq!(code(&duet(&["frobnicate"])), 1);
    assert_eq!(code(&duet(&["run", "--data", "x.csv"])), 1);
    assert_eq!(
        code(&duet(&[
            "run",
            "--data",
            "x",
            "--meta",
            "y",
            "--backend",
            "replay"
        ])),
        1
    );
    assert_eq!(
        code(&duet(&["eval", "--original", "a", "--transformed", "b"])),
        1
    );
    assert_eq!(
        code(&duet(&[
            "eval",
            "--original",
            "a",
            "--transformed",
            "b",
            "--models",
            "svm",
            "--target",
            "y"
        ])),
        1
    );

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.csv").to_string_lossy().into_owned();
    let meta = sample("meta.json");
    assert_eq!(
        code(&duet(&["run", "--data", &missing, "--meta", &meta])),
        2
    );
    assert_eq!(code(&duet(&["parse", &missing])), 2);
    let out = duet(&[
        "run",
        "--data",
        &sample("loans.csv"),
        "--meta",
        &meta,
        "--iterations",
        "0",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn remote_without_key_fails_before_work() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_duet"))
        .env_remove("DUET_API_KEY")
        .args([
            "run",
            "--data",
            &sample("loans.csv"),
            "--meta",
            &sample("meta.json"),
            "--backend",
            "remote",
        ])
        .arg("--out-dir")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("DUET_API_KEY"), "{}", stderr(&out));
    assert!(!dir.path().join("transformed.csv").exists());
}

#[test]
fn mismatched_rows_fail_eval() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.csv");
    let text = std::fs::read_to_string(sample("loans.csv")).unwrap();
    let head: Vec<&str> = text.lines().take(50).collect();
    std::fs::write(&short, head.join("\n")).unwrap();
    let out = duet(&[
        "eval",
        "--original",
        &sample("loans.csv"),
        "--transformed",
        &short.to_string_lossy(),
        "--meta",
        &sample("meta.json"),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}
