use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use qcontrol::cli::read_csv;

fn qcontrol(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcontrol"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn data_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().filter(|l| !l.starts_with('#')).map(str::to_owned).collect()
}

#[test]
fn version_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcontrol(dir.path(), &["--version"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn bad_field_type_exits_one_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{ "system": { "omega": "fast" } }"#);
    let out = qcontrol(dir.path(), &["simulate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.omega"));
}

#[test]
fn unknown_field_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{ "paths": 10, "pathz": 3 }"#);
    let out = qcontrol(dir.path(), &["montecarlo", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pathz"));
}

#[test]
fn invalid_value_exits_one_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{ "r0": [1.0, 1.0, 0.0] }"#);
    let out = qcontrol(dir.path(), &["filter", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("r0"));
    assert!(!dir.path().join("out").join("filter.csv").exists());
}

#[test]
fn non_convergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "short.json", r#"{ "solver": { "max_sweeps": 3 }, "rollout": null }"#);
    let out = qcontrol(dir.path(), &["hjb", "time-optimal", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn outputs_carry_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcontrol(dir.path(), &["simulate", "--seed", "9"]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("out/simulate.csv")).unwrap();
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(&format!("# qcontrol {} command=simulate config_sha256=", env!("CARGO_PKG_VERSION"))));
    assert!(first.ends_with("seed=9"));
    let row = text.lines().nth(2).unwrap();
    // 17 significant digits in scientific notation
    assert_eq!(row.split(',').next().unwrap(), "0.0000000000000000e0");

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/simulate.json")).unwrap()).unwrap();
    assert_eq!(json["header"]["seed"], 9);
    assert_eq!(json["header"]["config_sha256"].as_str().unwrap().len(), 64);
    let last = &json["last_post_impulse"]["state"];
    assert!((last["y"].as_f64().unwrap() - 0.5168).abs() <= 5e-4);
    assert!((last["z"].as_f64().unwrap() - 0.3135).abs() <= 5e-4);
}

#[test]
fn replayed_record_reproduces_the_filter() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    fs::create_dir_all(&first).unwrap();
    let out = qcontrol(&first, &["filter", "--seed", "3", "--config", &write_config(dir.path(), "a.json", r#"{ "t_final": 0.5 }"#)]);
    assert!(out.status.success());
    let original = first.join("out/filter.csv");

    let body = format!(r#"{{ "t_final": 0.5, "record": {} }}"#, serde_json::to_string(&original).unwrap());
    let second = dir.path().join("second");
    fs::create_dir_all(&second).unwrap();
    let out = qcontrol(&second, &["filter", "--config", &write_config(dir.path(), "b.json", &body)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(data_lines(&original), data_lines(&second.join("out/filter.csv")));
}

#[test]
fn default_series_network_merges_the_channels() {
    let dir = tempfile::tempdir().unwrap();
    let out = qcontrol(dir.path(), &["network", "series"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/network.json")).unwrap()).unwrap();
    let l = &json["result"]["couplings"][0];
    // (√1 + √0.25)σ− has its single entry in the lower-left corner
    assert_eq!(l[1][0][0].as_f64().unwrap(), 1.5);
    assert_eq!(l[0][1][0].as_f64().unwrap(), 0.0);
}

#[test]
fn consistency_mode_writes_halving_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{ "mode": "consistency", "scheme": "milstein", "t_final": 1.0 }"#);
    let out = qcontrol(dir.path(), &["filter", "--config", &cfg]);
    assert!(out.status.success());
    let (columns, rows) = read_csv(&dir.path().join("out/consistency.csv")).unwrap();
    assert_eq!(columns, ["dt", "sup_gap", "ratio"]);
    assert_eq!(rows.len(), 4);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn overrides_change_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let hash = |args: &[&str]| {
        let out = qcontrol(dir.path(), args);
        assert!(out.status.success());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("out/montecarlo.json")).unwrap()).unwrap();
        json["header"]["config_sha256"].as_str().unwrap().to_owned()
    };
    let a = hash(&["montecarlo", "--paths", "50"]);
    let b = hash(&["montecarlo", "--paths", "60"]);
    let c = hash(&["montecarlo", "--paths", "50"]);
    assert_ne!(a, b);
    assert_eq!(a, c);
}
