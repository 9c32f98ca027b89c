use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_minkowski-dual"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = write(
        dir.path(),
        "ok.json",
        r#"{"n":2,"resolution":[8,16],"curvature":{"family":"hk","k":1},"f":{"kind":"constant","c":2.0}}"#,
    );
    let out = dir.path().join("run");
    let s = bin()
        .args(["solve", "--quiet", "--config"])
        .arg(&ok)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(0));
    assert!(out.join("report.json").is_file());

    let slow = write(
        dir.path(),
        "slow.json",
        r#"{"n":2,"resolution":[8,16],"curvature":{"family":"hk","k":1},"f":{"kind":"constant","c":2.0},"flow":{"max_steps":3}}"#,
    );
    let s = bin()
        .args(["solve", "--quiet", "--config"])
        .arg(&slow)
        .status()
        .unwrap();
    assert_eq!(s.code(), Some(2));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"n":2,"resolution":[8,16],"typo":1}"#,
    );
    let o = bin()
        .args(["solve", "--config"])
        .arg(&bad)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("invalid config"));
}

#[test]
fn flow_and_dualize_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"n":1,"resolution":[16],"curvature":{"family":"gauss_k"},"f":{"kind":"constant","c":3.0}}"#,
    );
    let o = bin()
        .args(["flow", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["converged"].as_bool().unwrap());

    let d = write(
        dir.path(),
        "d.json",
        &format!(
            r#"{{"n":1,"resolution":[16],"ambient":"de_sitter","graph":{:?}}}"#,
            dir.path().join("dual_u.csv")
        ),
    );
    let o = bin()
        .args(["dualize", "--config"])
        .arg(&d)
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["dual_ambient"], "hyperbolic");
    let k = v["dual_kappa"][0].as_f64().unwrap();
    assert!((k - 3.0).abs() < 1e-5);
}

#[test]
fn slice_oracle_prints_closed_form() {
    let o = bin().args(["slice-oracle", "--c", "2"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["rho_star"].as_f64().unwrap() - 3f64.ln() / 2.0).abs() < 1e-15);
    let o = bin().args(["slice-oracle", "--c", "0.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_flip_mode_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.json",
        r#"{"ladder":[16,32],"kstar_samples":500,"flip_orientation":true}"#,
    );
    let o = bin()
        .args(["check", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let duality = v["suites"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["name"] == "duality")
        .unwrap();
    assert_eq!(duality["pass"], false);
}
