use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_elastobridge"))
}

fn stdout_json(args: &[&str]) -> serde_json::Value {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn resistance_and_oracle_agree() {
    let closed = stdout_json(&["resistance", "--c", "0.5,0.5,0,0.5,0.5"]);
    let oracle = stdout_json(&["resistance", "--c", "0.5,0.5,0,0.5,0.5", "--oracle"]);
    assert!((closed["R"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((oracle["R"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((closed["G"].as_f64().unwrap() - 0.5).abs() < 1e-12);

    let open = stdout_json(&["resistance", "--c", "0,0,1,1,1"]);
    assert!(open["R"].is_null());
    assert_eq!(open["G"].as_f64(), Some(0.0));
}

#[test]
fn admissible_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(&path, "[[1,0,1,0,1],[0,0,1,-1,1],[1,-1,1,0,0]]").unwrap();
    let from_file = stdout_json(&["admissible", "--matrix-file", path.to_str().unwrap()]);
    let builtin = stdout_json(&["admissible", "--benchmark"]);
    assert_eq!(from_file, builtin);
    assert_eq!(builtin.as_array().unwrap().len(), 4);
}

#[test]
fn bad_input_is_rejected() {
    let out = bin().args(["resistance", "--c", "1,2,3"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().args(["resistance", "--c", "1,-1,1,1,1"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin()
        .args(["report", "--in", "/nonexistent/report.json", "--csv", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let status = bin()
        .args(["sweep", "--study", "b", "--grid", "0.5:0.6:0.1", "--seed", "3", "--out"])
        .arg(&json)
        .status()
        .unwrap();
    assert!(status.success());

    let rows: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    for key in ["k1", "k2", "domain", "c", "F", "R", "G", "C", "value", "label", "cluster"] {
        assert!(rows[0].get(key).is_some(), "missing {key}");
    }
    assert_eq!(rows[0]["c"].as_array().unwrap().len(), 5);
    let mirror = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
    assert_eq!(mirror.lines().count(), 9);

    let svg = dir.path().join("out.svg");
    let csv = dir.path().join("out.csv");
    let status = bin()
        .args(["report", "--in"])
        .arg(&json)
        .arg("--svg")
        .arg(&svg)
        .arg("--csv")
        .arg(&csv)
        .status()
        .unwrap();
    assert!(status.success());
    let picture = std::fs::read_to_string(&svg).unwrap();
    assert!(picture.starts_with("<svg") && picture.trim_end().ends_with("</svg>"));
    assert_eq!(picture.matches("<circle").count(), 4);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), mirror);
    assert!(dir.path().join("out.md").exists());
}
