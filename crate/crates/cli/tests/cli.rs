use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn vrtouch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vrtouch")).args(args).output().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TRANSFER_CONFIG: &str = "seed = 3\ntechnique = \"gaze_touch\"\n\n[layout]\nscreen_count = 4\ncolumns = 2\nrows = 2\n\n[task]\nkind = \"transfer\"\nscreens = 4\n";

#[test]
fn replay_matches_checked_in_output() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, TRANSFER_CONFIG).unwrap();
    let out = dir.path().join("out.ndjson");
    let o = vrtouch(&[
        "replay",
        "--config",
        config.to_str().unwrap(),
        "--trace",
        golden("transfer_four.ndjson").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&out).unwrap(), fs::read_to_string(golden("transfer_four.out.ndjson")).unwrap());

    let csv = vrtouch(&["export", "--metrics", out.to_str().unwrap(), "--format", "csv"]);
    assert!(csv.status.success());
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("trial_id,condition,tct_s,distance_cm,errors"));
    assert_eq!(lines.count(), 32);

    let records = vrtouch(&["export", "--metrics", out.to_str().unwrap(), "--format", "records"]);
    assert_eq!(stdout(&records).lines().count(), 32);
}

#[test]
fn simulate_then_replay_round_trips() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("c.toml");
    fs::write(&config, "[layout]\nscreen_count = 1\ncolumns = 1\nrows = 1\n\n[task]\nkind = \"puzzle\"\nlayers = 4\npuzzles = 2\n").unwrap();
    let trace = dir.path().join("t.ndjson");
    let o = vrtouch(&["simulate", "--config", config.to_str().unwrap(), "--out", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = vrtouch(&["replay", "--config", config.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.contains("\"type\":\"metrics\"")).count(), 2);
    assert!(text.lines().last().unwrap().contains("\"type\":\"snapshot\""));
}

#[test]
fn gen_task_is_deterministic() {
    let a = vrtouch(&["gen-task", "transfer", "--screens", "15", "--seed", "7"]);
    let b = vrtouch(&["gen-task", "transfer", "--screens", "15", "--seed", "7"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 33);

    let dir = TempDir::new().unwrap();
    let out = dir.path().join("p.ndjson");
    let p = vrtouch(&["gen-task", "puzzle", "--layers", "10", "--seed", "1", "--out", out.to_str().unwrap()]);
    assert!(p.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 10 * 11);

    assert!(!vrtouch(&["gen-task", "transfer", "--screens", "6", "--seed", "1"]).status.success());
}

#[test]
fn latin_square_prints_rows() {
    let o = vrtouch(&["latin-square", "--n", "4"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "0 1 3 2\n1 2 0 3\n2 3 1 0\n3 0 2 1\n");
    assert_eq!(vrtouch(&["latin-square", "--n", "5"]).status.code(), Some(2));
}

#[test]
fn exit_codes_distinguish_config_and_trace_errors() {
    let dir = TempDir::new().unwrap();
    let bad_config = dir.path().join("bad.toml");
    fs::write(&bad_config, "[layout]\nscreen_count = 4\ncolumns = 3\nrows = 3\n").unwrap();
    let trace = golden("gaze_switch_basic.ndjson");
    let o = vrtouch(&["replay", "--config", bad_config.to_str().unwrap(), "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad_trace = dir.path().join("bad.ndjson");
    let mut text = fs::read_to_string(&trace).unwrap();
    text.push_str("{\"type\":\"contact\",\"t\":0.1,\"id\":9,\"phase\":\"up\",\"x\":0,\"y\":0}\n");
    fs::write(&bad_trace, text).unwrap();
    let o = vrtouch(&["replay", "--trace", bad_trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 10"));

    let o = vrtouch(&["replay", "--trace", dir.path().join("missing").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn serve_reports_address_and_refuses_taken_port() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_vrtouch"))
        .args(["serve", "--port", "0"])
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    assert!(line.starts_with("listening on ws://127.0.0.1:"), "{line}");
    let port = line.trim().rsplit(':').next().unwrap().split('/').next().unwrap().to_string();
    let (mut ws, _) = tungstenite::connect(format!("ws://127.0.0.1:{port}/session?version=1")).unwrap();
    let first = ws.read().unwrap().into_text().unwrap();
    assert!(first.contains("\"revision\":1"));

    let o = vrtouch(&["serve", "--port", &port]);
    assert_eq!(o.status.code(), Some(4));
    child.kill().unwrap();
    child.wait().unwrap();
}
