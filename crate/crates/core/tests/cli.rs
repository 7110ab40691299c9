use std::path::Path;
use std::process::{Command, Output};

use gkdcv::synthetic::bundled_dir;
use gkdcv::PipelineConfig;

fn gkdcv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdcv"))
        .args(args)
        .env("GKDCV_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn train_predict_eval_round() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = bundled_dir().join("manifest.csv");
    let model = dir.path().join("faces.kdcv");

    let out = gkdcv(&["train", path(&manifest), "--out", path(&model)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "M=24 C=8 d=1872 r=23 p=7");

    let probe = bundled_dir().join("s03/05.pgm");
    let out = gkdcv(&["predict", "--model", path(&model), "--measure", "l2", path(&probe)]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("path,predicted_class,score\n"));
    assert_eq!(csv.lines().count(), 2);

    let report = dir.path().join("report");
    let out = gkdcv(&["eval", "--model", path(&model), path(&manifest), "--mode", "closed", "--out", path(&report)]);
    assert!(out.status.success());
    let cmc = std::fs::read_to_string(report.join("cmc.csv")).unwrap();
    assert!(cmc.trim_end().ends_with("8,100.000"));
}

#[test]
fn config_file_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    PipelineConfig { height: 28, width: 35, support: 7, ..Default::default() }.save(&cfg).unwrap();
    let out = gkdcv(&["train", path(&bundled_dir().join("manifest.csv")), "--config", path(&cfg), "--out", path(&dir.path().join("m"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("d=180"));
}

#[test]
fn failures_print_one_categorized_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = gkdcv(&["train", path(&dir.path().join("missing.csv")), "--out", path(&dir.path().join("m"))]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().count(), 1);
    assert!(stderr.starts_with("error[io]: "), "{stderr}");

    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "block.omega=7\nblock.size=3\n").unwrap();
    let out = gkdcv(&["gabor-dump", path(&bundled_dir().join("s01/01.pgm")), "--config", path(&bad), "--out", path(dir.path())]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error[parse]: ") && stderr.contains(":2:"), "{stderr}");
}

#[test]
fn invalid_thread_count_is_rejected() {
    let out = Command::new(env!("CARGO_BIN_EXE_gkdcv"))
        .args(["split", "nowhere", "--out", "x.csv"])
        .env("GKDCV_THREADS", "zero")
        .output()
        .unwrap();
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[parameter]: "));
}
