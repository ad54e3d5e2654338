//! CLI acceptance: determinism of output files plus the documented error
//! paths and the verification suite's exit behavior.

use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ydistill"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("ydistill-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn criterion_10_byte_identical_outputs() {
    // Identical config and seed must give byte-identical files on
    // consecutive runs, for every command that writes data.
    let cases: Vec<(&str, Vec<String>)> = vec![
        (
            "distill",
            vec![
                "distill".into(),
                "--k".into(),
                "4".into(),
                "--target-eps".into(),
                "1e-8".into(),
                "--format".into(),
                "csv".into(),
            ],
        ),
        (
            "synthesize",
            vec![
                "synthesize".into(),
                "--theta".into(),
                "0.07".into(),
                "--eps-rel".into(),
                "1e-4".into(),
                "--execute".into(),
                "--seed".into(),
                "99".into(),
            ],
        ),
        (
            "overhead",
            vec![
                "overhead".into(),
                "--delta".into(),
                "1e-6".into(),
                "--delta".into(),
                "1e-8".into(),
                "--mode".into(),
                "family".into(),
                "--format".into(),
                "csv".into(),
                "--jobs".into(),
                "2".into(),
            ],
        ),
    ];
    for (name, args) in cases {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = tmp(&format!("{name}-{run}"));
            let status = bin()
                .args(&args)
                .arg("--out")
                .arg(&path)
                .status()
                .expect("spawn ydistill");
            assert!(status.success(), "{name} run {run} failed");
            outputs.push(fs::read(&path).expect("read output"));
            let _ = fs::remove_file(&path);
        }
        let identical = outputs[0] == outputs[1];
        println!(
            "criterion 10 [{}]: {name} outputs byte-identical across runs ({} bytes)",
            if identical { "PASS" } else { "FAIL" },
            outputs[0].len()
        );
        assert!(identical, "{name} output differs between runs");
    }
}

#[test]
fn invalid_k_is_a_usage_error() {
    let out = bin()
        .args(["distill", "--k", "2", "--target-eps", "1e-4"])
        .output()
        .expect("spawn");
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("3..=89"), "diagnostic names the range: {msg}");
}

#[test]
fn unreachable_target_reports_diagnostic() {
    let out = bin()
        .args(["distill", "--k", "3", "--target-eps", "1e-300"])
        .output()
        .expect("spawn");
    assert!(!out.status.success());
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("unreachable"), "diagnostic: {msg}");
}

#[test]
fn malformed_delta_rejected() {
    let out = bin()
        .args(["overhead", "--delta", "0.5", "--mode", "family"])
        .output()
        .expect("spawn");
    assert!(!out.status.success());
}

#[test]
fn base_state_satisfies_loose_target_for_free() {
    // k = 9 at 1e-4: the |0⟩ substitute already qualifies at zero cost.
    let path = tmp("k9");
    let status = bin()
        .args([
            "distill",
            "--k",
            "9",
            "--target-eps",
            "1e-4",
            "--format",
            "csv",
        ])
        .arg("--out")
        .arg(&path)
        .status()
        .expect("spawn");
    assert!(status.success());
    let text = fs::read_to_string(&path).unwrap();
    let _ = fs::remove_file(&path);
    let row = text.lines().nth(1).expect("one entry");
    assert!(row.starts_with("9,"));
    assert!(row.ends_with(",0.00000000000000000e0"), "row: {row}");
}

#[test]
fn verify_passes_and_fault_injection_names_the_check() {
    let out = bin().arg("verify").output().expect("spawn");
    assert!(out.status.success(), "fresh verify must pass");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 8);

    let out = bin()
        .args(["verify", "--inject-fault", "wk_identity"])
        .output()
        .expect("spawn");
    assert!(!out.status.success(), "perturbed check must fail");
    let text = String::from_utf8_lossy(&out.stdout);
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("FAIL")).collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].contains("wk_identity"));
}

#[test]
fn synthesize_json_has_the_documented_shape() {
    let out = bin()
        .args([
            "synthesize",
            "--theta",
            "0.1",
            "--eps-rel",
            "1e-3",
            "--execute",
        ])
        .output()
        .expect("spawn");
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).expect("json output");
    assert!(doc["target"]["axis"].is_array());
    assert!(doc["target"]["theta"].is_number());
    assert!(doc["eps_rel"].is_number());
    assert_eq!(doc["euler"].as_array().unwrap().len(), 3);
    let per_angle = doc["per_angle"].as_array().unwrap();
    assert_eq!(per_angle.len(), 3);
    assert!(per_angle[1]["h"].is_number());
    assert!(per_angle[1]["transcript"]["noncliffords"].is_number());
    assert!(doc["expected_noncliffords"].is_number());
}
