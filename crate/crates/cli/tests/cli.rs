use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evequiv")).args(args).output().unwrap()
}

fn run_config(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    v.sort();
    v
}

#[test]
fn curve_outputs_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = configs().join("curve_methods.json");
    for dir in [a.path(), b.path()] {
        let o = run_config("curve", &cfg, dir, &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let files = listing(a.path());
    assert_eq!(files.len(), 8, "{files:?}");
    assert_eq!(files, listing(b.path()));
    for f in &files {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn empty_margin_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(
        &cfg,
        r#"{ "family": {"kind": "z_test", "sigma": 1.0, "n": 10}, "statistic": 0.0,
             "margins": {"grid": []}, "levels": {"grid": [0.05]}, "methods": [{"kind": "log_optimal"}] }"#,
    )
    .unwrap();
    let o = run_config("curve", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn malformed_json_reports_its_position() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\n  \"kernel\": {\"kind\": \"counterexample\"},\n  \"orders\": [2, \n}\n").unwrap();
    let o = run_config("stp-check", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn missing_config_file_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("curve", &dir.path().join("nope.json"), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{ "kernel": {"kind": "counterexample"}, "orders": [2], "colour": 1 }"#).unwrap();
    let o = run_config("stp-check", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn single_replication_campaign_is_fast() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("campaign_tost_mu0.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["replications"] = 1.into();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, v.to_string()).unwrap();
    let start = Instant::now();
    let o = run_config("campaign", &cfg, dir.path(), &[]);
    assert!(start.elapsed().as_secs_f64() < 1.0);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("campaign.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 75);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["replications"], 1);
}

#[test]
fn campaign_seed_override_changes_output() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("campaign_tost_mu0.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["replications"] = 20.into();
    v["horizon"] = 10.into();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, v.to_string()).unwrap();
    let read = |seed: &str| {
        let out = dir.path().join(seed);
        let o = run_config("campaign", &cfg, &out, &["--seed", seed, "--threads", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("campaign.csv")).unwrap()
    };
    assert_eq!(read("5"), read("5"));
    assert_ne!(read("5"), read("6"));
}

#[test]
fn stp_check_reports_the_order_three_witness() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("stp-check", &configs().join("counterexample_stp.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("stp.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[1].starts_with("2,strict_pass"), "{csv}");
    assert!(lines[2].starts_with("3,fail"), "{csv}");

    let o = run_config("stp-check", &configs().join("counterexample_stp.json"), dir.path(), &["--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("stp.json")).unwrap()).unwrap();
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
}

#[test]
fn calibrate_and_validity_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("calibrate", &configs().join("calibrate_symmetric_z.json"), dir.path(), &["--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.json")).unwrap()).unwrap();
    assert!((v["c"].as_f64().unwrap() - 0.5).abs() < 1e-6, "{v}");

    let o = run_config("validity", &configs().join("counterexample_validity.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("validity.csv")).unwrap();
    let last = csv.lines().last().unwrap();
    let e: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!(last.starts_with("4,") && e > 1.0, "{csv}");
}

#[test]
fn merge_and_decide_read_curve_outputs() {
    let root = tempfile::tempdir().unwrap();
    let cfgs = root.path().join("configs");
    fs::create_dir_all(&cfgs).unwrap();
    for f in ["curve_methods.json", "merge.json", "decide.json"] {
        fs::copy(configs().join(f), cfgs.join(f)).unwrap();
    }
    let curves_dir = root.path().join("out/curve_methods");
    assert!(run_config("curve", &cfgs.join("curve_methods.json"), &curves_dir, &[]).status.success());
    let out = root.path().join("out/rest");
    let o = run_config("merge", &cfgs.join("merge.json"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run_config("decide", &cfgs.join("decide.json"), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names = listing(&out);
    for f in ["decision.csv", "spectrum.csv"] {
        assert!(names.iter().any(|n| n == f), "{names:?}");
    }
}

#[test]
fn zero_threads_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_config("stp-check", &configs().join("counterexample_stp.json"), dir.path(), &["--threads", "0"]);
    assert_eq!(o.status.code(), Some(2));
}
