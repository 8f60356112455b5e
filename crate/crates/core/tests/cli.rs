use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use hdrcnn::io::{read_hdr_file, write_hdr_file};
use hdrcnn::pipeline::{synth_scene, Manifest, Split};
use hdrcnn::tmo::SCORE_CSV_HEADER;

fn hdrcnn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdrcnn")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_version_succeed() {
    assert_eq!(hdrcnn(&["--help"]).status.code(), Some(0));
    assert_eq!(hdrcnn(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let o = hdrcnn(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:usage:"), "{}", stderr(&o));
}

#[test]
fn missing_input_exits_with_io_code() {
    let o = hdrcnn(&["expose", "--input", "/nonexistent/scene.hdr", "--out", "/tmp"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error:io:"), "{}", stderr(&o));
}

#[test]
fn malformed_hdr_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.hdr");
    fs::write(&bad, b"not radiance\n").unwrap();
    let o = hdrcnn(&["expose", "--input", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:format:"), "{}", stderr(&o));
}

#[test]
fn expose_fixed_writes_five_shots_with_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("scene.hdr");
    write_hdr_file(&src, &synth_scene(24, 16, 4)).unwrap();
    let out = dir.path().join("stack");
    let o = hdrcnn(&["expose", "--input", s(&src), "--out", s(&out), "--mode", "fixed"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: Vec<String> = String::from_utf8_lossy(&o.stdout).lines().map(str::to_owned).collect();
    assert_eq!(printed, ["1", "8", "64", "512", "4096"]);
    for (i, dt) in ["1", "8", "64", "512", "4096"].iter().enumerate() {
        assert!(out.join(format!("exp_{i}.ppm")).is_file());
        assert_eq!(fs::read_to_string(out.join(format!("exp_{i}.exposure"))).unwrap().trim(), *dt);
    }
}

#[test]
fn synth_then_merge_recovers_the_scene() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = hdrcnn(&["synth", "--out", s(&data), "--count", "3", "--val", "1", "--width", "32", "--height", "24"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = Manifest::load(data.join("manifest.json")).unwrap();
    assert_eq!(manifest.scenes.len(), 3);
    assert_eq!(manifest.scenes_in(Split::Val).count(), 1);

    let stacks = dir.path().join("stacks");
    let o = hdrcnn(&["expose", "--input", s(&data.join("manifest.json")), "--out", s(&stacks)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let merged = dir.path().join("merged");
    let o = hdrcnn(&[
        "merge",
        "--stack",
        s(&stacks.join("scene_000")),
        "--crf",
        s(&data.join("crf.txt")),
        "--out",
        s(&merged),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let truth = read_hdr_file(data.join("scene_000.hdr")).unwrap();
    let back = read_hdr_file(merged.join("merged.hdr")).unwrap();
    assert_eq!((back.width(), back.height()), (32, 24));
    let mean_rel = truth.data().iter().zip(back.data()).map(|(t, b)| ((t - b) / t).abs() as f64).sum::<f64>()
        / truth.data().len() as f64;
    assert!(mean_rel < 0.05, "{mean_rel}");
}

#[test]
fn tmqi_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("scene.hdr");
    write_hdr_file(&src, &synth_scene(32, 32, 9)).unwrap();
    let o = hdrcnn(&["tmo", "--input", s(&src), "--operator", "drago", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tm = dir.path().join("scene_drago.pfm");
    let o = hdrcnn(&["tmqi", "--hdr", s(&src), "--tonemap", s(&tm)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(SCORE_CSV_HEADER));
    let values: Vec<f64> = lines.next().unwrap().split(',').skip(2).map(|v| v.parse().unwrap()).collect();
    assert_eq!(values.len(), 3);
    assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
}

#[test]
fn gradcheck_passes_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = hdrcnn(&["gradcheck", "--arch", "ldr2hdr", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("gradcheck.txt")).unwrap();
    assert!(report.trim_end().ends_with("(tolerance 1.0e-4)"), "{report}");
    assert!(report.contains("PASS"));
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"learning_rate": 0.1}"#).unwrap();
    let o = hdrcnn(&["train-ldr2hdr", "--manifest", s(&cfg), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
}
