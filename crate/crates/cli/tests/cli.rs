use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn homctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homctl"))
        .args(args)
        .output()
        .expect("spawn homctl")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.json");
    fs::write(&path, body).unwrap();
    path
}

fn run_config(cmd: &str, config: &Path, out: &Path) -> Output {
    homctl(&[
        "--quiet",
        "--out-dir",
        out.to_str().unwrap(),
        cmd,
        "--config",
        config.to_str().unwrap(),
    ])
}

const SMALL: &str = r#"{
  "mesh": { "dim": 1, "nodes": [17] },
  "time": { "T": 0.5, "M": 8 },
  "problem": {
    "forcing": { "kind": "sine", "amplitude": 2.0 },
    "target": { "kind": "constant", "value": 0.3 },
    "control": { "kind": "constant", "value": 0.5 },
    "omega": { "lo": [0.2], "hi": [0.8] },
    "N": 0.05
  },
  "output": { "formats": ["csv"] },
  "seed": 3
}"#;

#[test]
fn constants_prints_critical_values() {
    let out = homctl(&["constants", "--n", "3"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let pi = std::f64::consts::PI;
    assert_eq!(v["gamma"], 3.0);
    assert!((v["A"].as_f64().unwrap() - 4.0 * pi).abs() < 1e-14);
    assert!((v["B"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert!((v["omega_n"].as_f64().unwrap() - 4.0 * pi).abs() < 1e-14);
}

#[test]
fn constants_follow_c0() {
    let out = homctl(&["constants", "--n", "4", "--c0", "0.5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["B"].as_f64().unwrap() - 4.0).abs() < 1e-14);
    assert_eq!(v["gamma"], 2.0);
}

#[test]
fn subcritical_dimension_is_a_config_error() {
    let out = homctl(&["constants", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace("\"seed\": 3", "\"seed\": 3, \"sead\": 4");
    let cfg = write_config(dir.path(), &body);
    let out = run_config("cost", &cfg, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sead"), "{msg}");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_config("cost", &dir.path().join("nope.json"), dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn cell_verify_passes_and_fails_the_band() {
    let ok = homctl(&["cell-verify", "--n", "3", "--eps-list", "0.1,0.05,0.025"]);
    assert!(ok.status.success());
    let table = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(table.lines().count(), 4);
    // eps = 0.1 alone is 4% off
    let bad = homctl(&["cell-verify", "--n", "3", "--eps-list", "0.1"]);
    assert_eq!(bad.status.code(), Some(3));
}

#[test]
fn summaries_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for cmd in ["optimize", "gradcheck"] {
        let a = dir.path().join(format!("{cmd}_a"));
        let b = dir.path().join(format!("{cmd}_b"));
        assert!(run_config(cmd, &cfg, &a).status.success(), "{cmd}");
        assert!(run_config(cmd, &cfg, &b).status.success(), "{cmd}");
        let sa = fs::read(a.join("summary.json")).unwrap();
        let sb = fs::read(b.join("summary.json")).unwrap();
        assert_eq!(sa, sb, "{cmd}");
    }
}

#[test]
fn seed_flag_changes_the_gradcheck_direction() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run_config("gradcheck", &cfg, &a).status.success());
    let out = homctl(&[
        "--quiet",
        "--seed",
        "99",
        "--out-dir",
        b.to_str().unwrap(),
        "gradcheck",
        "--config",
        cfg.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let sb = fs::read_to_string(b.join("summary.json")).unwrap();
    assert!(sb.contains("\"seed\": 99"));
    assert_ne!(
        fs::read_to_string(a.join("gradcheck.csv")).unwrap(),
        fs::read_to_string(b.join("gradcheck.csv")).unwrap()
    );
}

fn csv_values(text: &str, skip_cols: usize) -> Vec<f64> {
    text.lines()
        .skip(1)
        .flat_map(|l| {
            l.split(',')
                .skip(skip_cols)
                .map(|x| x.parse::<f64>().unwrap())
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn zero_data_gives_zero_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = run_config("optimize", &config_path("zero.json"), &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["results"]["cost"]["total"], 0.0);
    assert_eq!(summary["results"]["control_norm"], 0.0);
    assert_eq!(summary["results"]["converged"], true);

    let mut fields = 0;
    for entry in fs::read_dir(&out_dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_string_lossy().into_owned();
        if name.starts_with("field_") && name.ends_with(".csv") {
            let text = fs::read_to_string(&path).unwrap();
            let header = text.lines().next().unwrap();
            let idx_cols = header.split(',').count() - 1;
            let vals: Vec<f64> = text
                .lines()
                .skip(1)
                .map(|l| l.split(',').nth(idx_cols).unwrap().parse().unwrap())
                .collect();
            assert!(vals.iter().all(|&x| x == 0.0), "{name}");
            fields += 1;
        }
    }
    // v, u, p at 11 time levels
    assert_eq!(fields, 33);

    let iters = fs::read_to_string(out_dir.join("iterations.csv")).unwrap();
    let vals = csv_values(&iters, 1);
    assert!(vals.iter().all(|&x| x == 0.0 || x.is_nan()), "{iters}");
}

#[test]
fn fixed_point_reports_nonconvergence() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL.replace(
        "\"output\"",
        "\"solver\": { \"linear_tol\": 1e-12, \"max_linear_iter\": 2000, \"relaxation\": 0.5, \"fixed_point_tol\": 1e-14, \"optimizer_tol\": 1e-8, \"max_iter\": 2 },\n  \"output\"",
    );
    let cfg = write_config(dir.path(), &body);
    let out_dir = dir.path().join("out");
    let out = run_config("fixed-point", &cfg, &out_dir);
    assert_eq!(out.status.code(), Some(4));
    // outputs are still written
    assert!(out_dir.join("summary.json").exists());
}

#[test]
fn kappa_sweep_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = run_config("kappa-sweep", &cfg, &out_dir);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(out_dir.join("kappa_sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn shipped_smoke_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["solve-state", "solve-adjoint", "cost", "fixed-point"] {
        let out = run_config(cmd, &config_path("smoke.json"), &dir.path().join(cmd));
        assert!(
            out.status.success(),
            "{cmd}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let meta = fs::read_to_string(dir.path().join("solve-state/field_u.meta.json")).unwrap();
    assert!(meta.contains("little"));
}
