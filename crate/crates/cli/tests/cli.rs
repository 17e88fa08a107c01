use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const CONFIG: &str = r#"
levels = [2, 3]
horizon = 0.05
eps = [0.5]
delta = 0.1
replicas = 100
seed = 11

[tower]
family = "integer-lattice"
dim = 1
base = 2
"#;

fn sepcov(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sepcov"));
    cmd.args(args).env("RUST_LOG", "warn");
    match env_dir {
        Some(d) => cmd.env("SEPCOV_OUTPUT_DIR", d),
        None => cmd.env_remove("SEPCOV_OUTPUT_DIR"),
    };
    cmd.output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn superexp_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), CONFIG);
    let mut csvs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = sepcov(&["superexp", "-c", &config, "-o", out.to_str().unwrap()], None);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        csvs.push(fs::read(out.join("superexp.csv")).unwrap());
        assert!(out.join("superexp.json").exists());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &CONFIG.replace("replicas = 100", "replicas = 0"));
    let out = sepcov(&["two-blocks", "-c", &config, "-o", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("o").exists());
    let missing = sepcov(&["path-lemma", "-c", "/nonexistent/run.toml"], None);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn invalid_rate_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("jump_rate = \"edge-sum\"\n{CONFIG}"));
    let out = sepcov(&["superexp", "-c", &config, "-o", dir.path().join("o").to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &format!("output_dir = \"from-config\"\n{CONFIG}"));
    let env_dir = dir.path().join("from-env");
    let flag_dir = dir.path().join("from-flag");
    assert!(sepcov(&["build-tower", "-c", &config, "-o", flag_dir.to_str().unwrap()], Some(&env_dir)).status.success());
    assert!(flag_dir.join("tower.csv").exists());
    assert!(!env_dir.exists());
    assert!(sepcov(&["build-tower", "-c", &config], Some(&env_dir)).status.success());
    assert!(env_dir.join("tower.csv").exists());
    assert!(sepcov(&["build-tower", "-c", &config], None).status.success());
    assert!(dir.path().join("from-config").join("tower.csv").exists());
    assert!(dir.path().join("from-config").join("edges_m3.txt").exists());
}
