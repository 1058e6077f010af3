use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn orbx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbx")).args(args).output().expect("spawn orbx")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_pgm(dir: &Path, name: &str, w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> PathBuf {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for y in 0..h {
        for x in 0..w {
            bytes.push(f(x, y));
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

fn checkers(dir: &Path, name: &str, w: usize, h: usize) -> String {
    write_pgm(dir, name, w, h, |x, y| if (x / 9 + y / 7) % 2 == 0 { 25 } else { 230 })
        .to_string_lossy()
        .into_owned()
}

#[test]
fn extract_json_defaults() {
    let dir = TempDir::new().unwrap();
    let img = checkers(dir.path(), "c.pgm", 120, 96);
    let v: Value = serde_json::from_str(&stdout(&orbx(&["extract", &img]))).unwrap();
    assert_eq!(v["metadata"]["wordlen"], 8);
    assert_eq!(v["metadata"]["pairs"], 256);
    let features = v["features"].as_array().unwrap();
    assert!(!features.is_empty());
    for f in features {
        assert_eq!(f["descriptor"].as_str().unwrap().len(), 64);
    }

    let full: Value = serde_json::from_str(&stdout(&orbx(&["extract", &img, "--wordlen", "full"]))).unwrap();
    assert_eq!(full["metadata"]["wordlen"], "full");
}

#[test]
fn stream_and_batch_records_agree() {
    let dir = TempDir::new().unwrap();
    let img = checkers(dir.path(), "c.pgm", 110, 90);
    let batch: Value = serde_json::from_str(&stdout(&orbx(&["extract", &img, "--mode", "batch"]))).unwrap();
    let stream: Value = serde_json::from_str(&stdout(&orbx(&["extract", &img, "--mode", "stream"]))).unwrap();
    assert_eq!(batch["features"], stream["features"]);
    assert!(stream["metadata"]["stream"]["stall_cycles"].as_u64().unwrap() > 0);
}

#[test]
fn constant_image_has_no_features() {
    let dir = TempDir::new().unwrap();
    let img = write_pgm(dir.path(), "flat.pgm", 64, 64, |_, _| 90);
    let out = orbx(&["extract", img.to_str().unwrap(), "--format", "csv"]);
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1, "{text}");
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let img = checkers(dir.path(), "c.pgm", 64, 64);
    assert_eq!(orbx(&["extract", &img, "--wordlen", "0"]).status.code(), Some(1));
    assert_eq!(orbx(&["extract", &img, "--pairs", "0"]).status.code(), Some(1));
    assert_eq!(orbx(&["extract", &img, "--bogus"]).status.code(), Some(1));
    assert_eq!(orbx(&["extract", &img, "--trace", "t.csv"]).status.code(), Some(1));
    assert_eq!(orbx(&["bench", &img, "--iterations", "3"]).status.code(), Some(1));
    let missing = dir.path().join("missing.pgm");
    assert_eq!(orbx(&["extract", missing.to_str().unwrap()]).status.code(), Some(2));
    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P2\n1 1\n255\n0").unwrap();
    assert_eq!(orbx(&["extract", junk.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(orbx(&["--help"]).status.code(), Some(0));
}

fn sweep_rows(args: &[&str]) -> Vec<Vec<String>> {
    let mut full = vec!["sweep", "--samples", "500"];
    full.extend_from_slice(args);
    let text = stdout(&orbx(&full));
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,max_error,mean_error,argmax_dx,argmax_dy");
    lines.map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn sweep_error_decreases_with_word_length() {
    let rows = sweep_rows(&["--wordlens", "4,8,12,16,20"]);
    assert_eq!(rows.len(), 5);
    let max: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(max.windows(2).all(|p| p[0] > p[1]), "{max:?}");

    let full = sweep_rows(&["--wordlens", "20"]);
    assert!(full[0][1].parse::<f64>().unwrap() < 0.05);
}

#[test]
fn sweep_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        stdout(&orbx(&["sweep", "--wordlens", "3,9", "--samples", "300", "-o", p.to_str().unwrap()]));
    }
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn memreport_values() {
    let v: Value =
        serde_json::from_str(&stdout(&orbx(&["memreport", "--dims", "640x480", "--format", "json"]))).unwrap();
    assert!(v["baseline_bytes"].as_u64().unwrap() >= 520_400);
    assert!(v["savings_bytes"].as_i64().unwrap() > 0);
    assert_eq!(v["paper_reference_bytes"], 588_800);

    let small: Value =
        serde_json::from_str(&stdout(&orbx(&["memreport", "--dims", "38x38", "--format", "json"]))).unwrap();
    assert!(small["savings_bytes"].as_i64().unwrap() <= 0);

    let text = stdout(&orbx(&["memreport", "--dims", "640x480"]));
    assert!(text.contains("575K"), "{text}");
    assert_eq!(orbx(&["memreport", "--dims", "640by480"]).status.code(), Some(1));
}

#[test]
fn bench_reports_json_lines() {
    let dir = TempDir::new().unwrap();
    let small = checkers(dir.path(), "small.pgm", 64, 64);
    let large = checkers(dir.path(), "large.pgm", 640, 480);
    let run = || -> Vec<Value> {
        stdout(&orbx(&["bench", &small, &large, "--iterations", "10", "--warmup", "1"]))
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect()
    };
    let first = run();
    assert_eq!(first.len(), 2);
    for r in &first {
        for key in ["frames", "mean_ms", "fps", "features"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
        assert_eq!(r["frames"], 10);
    }
    assert!(first[0]["mean_ms"].as_f64().unwrap() < first[1]["mean_ms"].as_f64().unwrap());
    let second = run();
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a["features"], b["features"]);
    }
}

#[test]
fn trace_file_has_header_and_events() {
    let dir = TempDir::new().unwrap();
    let img = checkers(dir.path(), "c.pgm", 96, 80);
    let trace = dir.path().join("trace.csv");
    stdout(&orbx(&["extract", &img, "--mode", "stream", "--trace", trace.to_str().unwrap()]));
    let text = std::fs::read_to_string(trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "cycle,event,x,y,level");
    assert!(lines.any(|l| l.contains(",descriptor_emitted,")));
}
