use std::process::Command;

fn antsel(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_antsel")).args(args).output().unwrap();
    (out.status.success(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

#[test]
fn fabric_table() {
    let (ok, stdout, _) = antsel(&["fabric", "--n", "128", "--m", "76", "--architecture", "partial"]);
    assert!(ok);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc[0]["architecture"], "PARTIAL");
    assert_eq!(doc[0]["loss_db"], 0.5);
}

#[test]
fn probs_exact() {
    let (ok, stdout, _) = antsel(&["probs", "--n", "5", "--m", "2"]);
    assert!(ok);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["exact_probs"], serde_json::json!(["3/5", "3/10", "1/10"]));
}

#[test]
fn sweep_csv_from_flags() {
    let (ok, stdout, _) = antsel(&["sweep", "--n", "8", "--m", "2,4", "--k", "2", "--trials", "20", "--selection-mode", "power_ff"]);
    assert!(ok);
    let lines: Vec<&str> = stdout.lines().collect();
    assert!(lines[0].starts_with("# antsel scenario_id=sweep"));
    assert_eq!(lines.len(), 4);
}

#[test]
fn infeasible_point_fails_run() {
    let (ok, stdout, stderr) =
        antsel(&["sweep", "--n", "128", "--m", "8", "--k", "16", "--trials", "2", "--selection-mode", "csi_ff", "--overhead", "true"]);
    assert!(!ok);
    assert!(stdout.contains("sum_rate"));
    assert!(stderr.contains("rows failed"));
}

#[test]
fn unknown_preset_is_an_error() {
    let (ok, _, stderr) = antsel(&["sweep", "--preset", "nope"]);
    assert!(!ok);
    assert!(stderr.starts_with("error:"));
}
