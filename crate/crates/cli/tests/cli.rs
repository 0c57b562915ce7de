use std::io::Write;
use std::process::{Command, Output};

fn dioph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dioph")).args(args).output().unwrap()
}

fn config(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn config_file_drives_a_solve() {
    let cfg = config("equation = \"x - 2\"\ncutoffs = [6]\nt_ladder = [20]\n");
    let o = dioph(&["solve", "--config", cfg.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["config"]["equation"], "x - 2");
    assert_eq!(v["result"]["verdict"]["status"], "solution");
    assert_eq!(v["result"]["verdict"]["witness"], serde_json::json!([2]));
}

#[test]
fn flags_override_the_config_file() {
    let cfg = config("equation = \"x - 2\"\ncutoffs = [6]\n");
    let o = dioph(&["oracle", "--config", cfg.path().to_str().unwrap(), "-e", "x - 4", "--box", "5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["equation"], "x - 4");
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let args = ["oracle", "-e", "x^2 + y^2 - 25", "--box", "6,6"];
    let to_stdout = dioph(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["-o", path.to_str().unwrap()]);
    let o = dioph(&with_out);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&path).unwrap(), to_stdout.stdout);
}

#[test]
fn unknown_config_keys_are_rejected() {
    let cfg = config("equation = \"x\"\nbogus = 1\n");
    let o = dioph(&["solve", "--config", cfg.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn exit_codes_follow_the_error_class() {
    // malformed equation
    assert_eq!(dioph(&["oracle", "-e", "x^^2"]).status.code(), Some(2));
    // step far beyond the stable range
    let o = dioph(&["solve", "-e", "x^2 - 2*y^2", "--cutoffs", "8", "--t", "10", "--step-scale", "5"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).starts_with("error [adiabatic]"));
    // enumeration larger than the budget
    let o = dioph(&["oracle", "-e", "x + y + z - 1000", "--box", "200,200,200", "--budget", "100"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}
