use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn jjtunnel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jjtunnel"))
        .args(args)
        .env("RUST_LOG", "info")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let out = jjtunnel(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in ["ground-state", "calibrate-beta", "ramp", "constant-bias", "sweep", "compare-cl"] {
        assert!(text.contains(cmd), "missing {cmd}");
    }
}

#[test]
fn out_of_range_bias_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "mode = \"ramp\"\n[bias]\nI0 = 1.2\n");
    let out = jjtunnel(&["ramp", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("I0 ∈ (0,1)"));
}

#[test]
fn unknown_key_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "bad.toml", "mode = \"ramp\"\n[bias]\nI1 = 0.9\n");
    let out = jjtunnel(&["ramp", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("I1"));
}

#[test]
fn mode_must_match_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "ramp.toml", "mode = \"ramp\"\n");
    let out = jjtunnel(&["sweep", "--config", &config]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ground_state_writes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "gs.toml", "mode = \"ground_state\"\n[bias]\nI0 = 0.9\n");
    let out_dir = dir.path().join("out");
    let out = jjtunnel(&["ground-state", "--config", &config, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("ħω_p"));
    let root = out_dir.join("ground_state");
    let csv = fs::read_to_string(root.join("I0=0.9/ground_state.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "phi,re,im,density");
    assert_eq!(csv.lines().count(), 4097);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["mode"], "ground_state");
    assert!(root.join("config.toml").exists());
    let echoed = String::from_utf8_lossy(&out.stderr).into_owned();
    assert!(echoed.contains("omega0"), "resolved configuration is logged");
}
