//! End-to-end runs of the `egpf` binary.

use std::path::PathBuf;
use std::process::Command;

fn egpf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_egpf"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn first_line(path: &std::path::Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn verify_paper_passes() {
    let out = egpf().arg("verify-paper").output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn perturbed_game_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(scenario("launch_game.json")).unwrap()).unwrap();
    doc["u_P"][1][0][1] = serde_json::json!(0.1);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    let out = egpf().args(["verify-paper", "--game"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_and_malformed_scenarios_exit_2() {
    let out = egpf().args(["run", "/nonexistent/scenario.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scenario not found"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"name\": \"x\",\n  \"horizon\": \n}").unwrap();
    let out = egpf().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn worked_example_replay() {
    let dir = tempfile::tempdir().unwrap();
    let out = egpf().arg("run").arg(scenario("worked_example.json")).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let actions = &summary["strategies"][0]["first_actions"];
    assert_eq!(actions, &serde_json::json!(["kol_webinar", "clinical_deep_dive"]));
    assert!(first_line(&dir.path().join("steps.csv")).starts_with("replication,t,"));
}

#[test]
fn seed_from_environment_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = egpf()
            .arg("run")
            .arg(scenario("launch_convergence.json"))
            .args(["--replications", "4", "--out"])
            .arg(dir.path())
            .env("EGPF_SEED", "7")
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["steps.csv", "summary.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analysis_subcommands_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cap = dir.path().join("capacity.csv");
    let rd = dir.path().join("rd.csv");
    let traj = dir.path().join("trajectory.csv");
    assert_eq!(egpf().args(["capacity", "--out"]).arg(&cap).status().unwrap().code(), Some(0));
    assert_eq!(
        egpf().args(["rd-curve", "--slopes", "0,1,2,4,8,16", "--out"]).arg(&rd).status().unwrap().code(),
        Some(0)
    );
    assert_eq!(egpf().args(["replicator", "--out"]).arg(&traj).status().unwrap().code(), Some(0));
    assert_eq!(first_line(&cap), "type,capacity_bits,iterations,converged,best_action");
    assert_eq!(first_line(&rd), "lambda,rate_bits,distortion");
    assert_eq!(first_line(&traj), "t,x1,x2,x3,event");
    assert_eq!(std::fs::read_to_string(&rd).unwrap().lines().count(), 7);
}
