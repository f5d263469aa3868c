use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_conical-fronts"));
    c.env("RUST_LOG", "warn");
    c
}

fn bundled(name: &str) -> PathBuf {
    [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect()
}

const TINY: &str = r#"{
  "name": "tiny",
  "problem": {"theta": 0.3, "flow": {"period": 1.0, "profile": {"family": "zero"}}, "alphas": ["pi/2"]},
  "grids": {"strip": {"nx": 64, "y_max": 16, "ny": 256},
            "plane": {"x_max": 2, "y_max": 16, "nx": 32, "ny": 128}},
  "tolerances": {"evolve": {"dt": 0.5, "steady_tol": 1e-7, "speed_tol": 1e-8, "min_time": 20, "max_time": 400, "gain": 0.2}},
  "outputs": {"snapshot_stride": 10}
}"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bundled_configs_validate() {
    for name in ["planar_reduction.json", "speed_formula_sweep.json"] {
        let o = bin().arg("validate").arg("--config").arg(bundled(name)).output().unwrap();
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_eq!(v["nonlinearity"]["lipschitz"], true);
    }
}

#[test]
fn zero_angle_is_rejected_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &TINY.replace("\"pi/2\"", "0.0"));
    let out = dir.path().join("out");
    let o = bin().args(["run-all", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha"));
    assert!(!out.exists());
}

#[test]
fn overrides_reach_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let o = bin().args(["validate", "--config"]).arg(&cfg).args(["--set", "grids.strip.nx=8"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nx"));
    let o = bin().args(["validate", "--config"]).arg(&cfg).args(["--set", "problem.alphas=[1]"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn planar_speed() {
    let o = bin().args(["solve-planar", "--config"]).arg(bundled("planar_reduction.json")).output().unwrap();
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((v["c0"].as_f64().unwrap() - 0.495_370_207_27).abs() < 1e-8);
}

#[test]
fn tiny_run_writes_a_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = bin().args(["run-all", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    let text = stdout(&o);
    // the barrier checks are red with the prescribed barrier parameter
    assert_eq!(o.status.code(), Some(1), "{text}\n{}", String::from_utf8_lossy(&o.stderr));
    assert!(text.contains("PASS speed_formula"), "{text}");
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    for key in ["name", "version", "grid_scale", "config", "stages", "oracle", "cases", "checks", "complete", "pass"] {
        assert!(m.get(key).is_some(), "missing {key}");
    }
    assert_eq!(m["complete"], true);
    for c in m["checks"].as_array().unwrap() {
        assert!(c.get("tolerance").is_some() && c.get("grid").is_some());
    }
    let tag = "alpha_1.570796";
    for suffix in ["_h.csv", "_profile_A.csv", "_profile_A.dat", "_speed_A.json", "_barrier.csv", "_steady_sub.csv", "_trace.csv"] {
        assert!(out.join(format!("{tag}{suffix}")).exists(), "missing {suffix}");
    }
    let header = std::fs::read_to_string(out.join(format!("{tag}_barrier.csv"))).unwrap();
    assert!(header.starts_with("x,y,sub,super,region\n"));
}

#[test]
fn failed_stage_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = bin()
        .args(["build-barriers", "--json-only", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["--set", "tolerances.pulsating.max_time=0.5"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["complete"], false);
    let failed: Vec<&Value> = m["stages"].as_array().unwrap().iter().filter(|s| s["ok"] == false).collect();
    assert!(!failed.is_empty());
    assert!(failed[0]["stage"].as_str().unwrap().starts_with("pulsating"));
    assert!(failed[0]["error"].is_string());
    // the oracle survives the failure
    assert!(m["oracle"]["c0"].is_f64());
    assert_eq!(std::fs::read_dir(&out).unwrap().count(), 1);
}
