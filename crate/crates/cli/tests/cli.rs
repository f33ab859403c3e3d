use std::fs;
use std::process::{Command, Output};

fn crossview(args: &[&str], cwd: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crossview"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .env_remove("CROSSVIEW_THREADS")
        .output()
        .unwrap()
}

fn single_error_line(out: &Output) -> String {
    let err = String::from_utf8(out.stderr.clone()).unwrap();
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {err}");
    assert!(lines[0].starts_with("error: "), "stderr: {err}");
    lines[0].to_string()
}

#[test]
fn unknown_flag_is_a_validation_error() {
    let d = tempfile::tempdir().unwrap();
    let out = crossview(&["extract", "--bogus"], d.path());
    assert_eq!(out.status.code(), Some(1));
    single_error_line(&out);
}

#[test]
fn missing_input_is_an_io_error() {
    let d = tempfile::tempdir().unwrap();
    let out = crossview(&["extract", "--grid", "nope.cvgx", "--out", "x"], d.path());
    assert_eq!(out.status.code(), Some(2));
    single_error_line(&out);
}

#[test]
fn malformed_files_are_validation_errors() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("bad.cvgx"), b"CVGX garbage").unwrap();
    let out = crossview(&["extract", "--grid", "bad.cvgx", "--out", "x"], d.path());
    assert_eq!(out.status.code(), Some(1));
    single_error_line(&out);

    fs::write(d.path().join("c.json"), "{\"render\": {\"colour\": 1}}").unwrap();
    let out = crossview(&["--config", "c.json", "config"], d.path());
    assert_eq!(out.status.code(), Some(1));
    single_error_line(&out);

    let out = crossview(&["--set", "trajectory.frames=14", "config"], d.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(single_error_line(&out).contains("frames"));
}

#[test]
fn resolved_config_reloads_to_itself() {
    let d = tempfile::tempdir().unwrap();
    let first = crossview(&["--set", "knn.k=7", "--set", "seed=3", "config"], d.path());
    assert!(first.status.success());
    fs::write(d.path().join("resolved.json"), &first.stdout).unwrap();
    let second = crossview(&["--config", "resolved.json", "config"], d.path());
    assert!(second.status.success());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn flags_override_the_config_file() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), "{\"knn\": {\"k\": 5}, \"seed\": 9}").unwrap();
    let out = crossview(&["--config", "c.json", "--set", "knn.k=6", "config"], d.path());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["knn"]["k"], 6);
    assert_eq!(v["seed"], 9);
}

#[test]
fn identical_directories_score_the_cap() {
    let d = tempfile::tempdir().unwrap();
    let small = ["--set", "render.height=16", "--set", "render.width=32"];
    let mut args = small.to_vec();
    args.extend(["extract", "--out", "e"]);
    assert!(crossview(&args, d.path()).status.success());
    let mut args = small.to_vec();
    args.extend(["render", "--extract", "e", "--out", "r"]);
    assert!(crossview(&args, d.path()).status.success());
    let out = crossview(&["metrics", "r", "r", "--out", "m.json"], d.path());
    assert!(out.status.success());
    let table = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert!(r.contains("100.0000"), "{r}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(report["mean"]["psnr"], 100.0);
}

#[test]
fn uturn_sixty_frames_gives_thirty_pairs() {
    let d = tempfile::tempdir().unwrap();
    let out = crossview(
        &["--set", "render.height=16", "--set", "render.width=32", "uturn", "--frames", "60", "--out", "u.json"],
        d.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.path().join("u.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 30);
    assert_eq!(report["mean"]["mse"], 0.0);
}

#[test]
fn sample_directory_drives_the_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let small = ["--set", "render.height=16", "--set", "render.width=32"];
    let mut args = small.to_vec();
    args.extend(["sample", "--out", "s"]);
    assert!(crossview(&args, d.path()).status.success());
    for f in ["elevation.pfm", "semantics.png", "satellite.png", "registry.json", "config.json", "center_rgb.png"] {
        assert!(d.path().join("s").join(f).is_file(), "{f}");
    }
    let mut args = vec!["--config", "s/config.json"];
    args.extend(small);
    args.extend(["extract", "--out", "e"]);
    let out = crossview(&args, d.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.path().join("e/map.cvpm").is_file());
}
