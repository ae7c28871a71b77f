use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use phc_core::read_pcbd;
use serde_json::Value;

fn phc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phc"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("PHC_WORKERS")
        .output()
        .expect("spawn phc")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = phc(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gen_cells_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-cells", "--n", "5", "--m", "8", "--seed", "3", "--out", "a.txt"]);
    ok(dir.path(), &["gen-cells", "--n", "5", "--m", "8", "--seed", "3", "--out", "b.txt"]);
    ok(dir.path(), &["gen-cells", "--n", "5", "--m", "8", "--seed", "4", "--out", "c.txt"]);
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.txt")).unwrap());
    assert_ne!(a, fs::read(dir.path().join("c.txt")).unwrap());
    let snap = json(&dir.path().join("a.txt.config.json"));
    assert_eq!(snap["command"], "gen-cells");
    assert_eq!(snap["config"]["seed"], 3);
}

#[test]
fn solve_bands_shape() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gen-cells", "--n", "4", "--m", "16", "--out", "cells.txt"]);
    ok(
        dir.path(),
        &["solve-bands", "--cells", "cells.txt", "--m-kgrid", "16", "--bands", "10", "--out", "bands.pcbd"],
    );
    let (meta, records) = read_pcbd(&dir.path().join("bands.pcbd")).unwrap();
    assert_eq!(meta.resolutions, vec![16]);
    assert_eq!(records.len(), 4);
    for r in &records {
        let s = &r.surfaces[0];
        assert_eq!((s.bands, s.m, s.omega.len()), (10, 16, 10 * 16 * 16));
    }
    let progress = fs::read_to_string(dir.path().join("bands.pcbd.progress.jsonl")).unwrap();
    assert_eq!(progress.lines().count(), 4);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let missing = phc(dir.path(), &["solve-bands", "--cells", "nope.txt", "--m-kgrid", "4", "--out", "x.pcbd"]);
    assert_eq!(missing.status.code(), Some(4));
    let err: Value = serde_json::from_slice(&missing.stderr[missing.stderr.iter().position(|&b| b == b'{').unwrap()..])
        .unwrap();
    assert_eq!(err["exit_code"], 4);

    ok(dir.path(), &["gen-cells", "--n", "2", "--m", "8", "--out", "cells.txt"]);
    let bad_tol = phc(
        dir.path(),
        &["solve-bands", "--cells", "cells.txt", "--m-kgrid", "4", "--tol", "-1", "--out", "x.pcbd"],
    );
    assert_eq!(bad_tol.status.code(), Some(2));
    let odd = phc(dir.path(), &["gen-cells", "--n", "2", "--m", "7", "--out", "odd.txt"]);
    assert_eq!(odd.status.code(), Some(2));
    assert_eq!(phc(dir.path(), &["no-such-command"]).status.code(), Some(2));
    assert_eq!(phc(dir.path(), &["--help"]).status.code(), Some(0));
}

fn full_pipeline(dir: &Path, workers: &str) {
    ok(dir, &["gen-cells", "--n", "10", "--m", "8", "--seed", "11", "--out", "cells.txt"]);
    ok(
        dir,
        &[
            "solve-bands", "--cells", "cells.txt", "--m-kgrid", "4", "--m-kgrid", "16", "--bands", "4", "--workers",
            workers, "--out", "bands.pcbd",
        ],
    );
    ok(
        dir,
        &["make-dataset", "--bands-files", "bands.pcbd", "--task", "f2", "--split-seed", "2", "--out", "f2.pcbd"],
    );
    ok(
        dir,
        &[
            "baseline-sr", "--dataset", "f2.pcbd", "--split-manifest", "f2.pcbd.split.json", "--split", "test",
            "--report", "baseline.json", "--pred-out", "pred.pcbd",
        ],
    );
    ok(
        dir,
        &[
            "metrics", "--pred", "pred.pcbd", "--truth", "f2.pcbd", "--resolution", "16", "--split-manifest",
            "f2.pcbd.split.json", "--split", "test", "--report", "metrics.json",
        ],
    );
}

#[test]
fn pipeline_is_reproducible_and_consistent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    full_pipeline(a.path(), "1");
    full_pipeline(b.path(), "2");
    for name in ["cells.txt", "bands.pcbd", "f2.pcbd", "f2.pcbd.split.json", "pred.pcbd", "baseline.json"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name} differs"
        );
    }

    let split = json(&a.path().join("f2.pcbd.split.json"));
    let test_ids = split["test"].as_array().unwrap().len();
    assert!(test_ids >= 1);
    let baseline = json(&a.path().join("baseline.json"));
    let metrics = json(&a.path().join("metrics.json"));
    assert_eq!(baseline["aggregate"], metrics["aggregate"]);
    assert_eq!(baseline["per_band"], metrics["per_band"]);
    assert!(baseline["aggregate"].as_f64().unwrap() > 0.0);
    let csv = fs::read_to_string(a.path().join("baseline.csv")).unwrap();
    assert!(csv.starts_with("Band number,"));
}

#[test]
fn figures_are_written() {
    let dir = tempfile::tempdir().unwrap();
    full_pipeline(dir.path(), "1");
    ok(
        dir.path(),
        &["export-figures", "--dataset", "f2.pcbd", "--report", "baseline.json", "--cells", "2", "--out-dir", "fig"],
    );
    let pngs = fs::read_dir(dir.path().join("fig"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert!(pngs >= 2);
    assert!(dir.path().join("fig/mre_table.csv").exists());
}
