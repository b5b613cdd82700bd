use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("syncgames-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_syncgames"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn graph_parameters_print_bare_numbers() {
    let out = run(&["graph", "alpha", "--graph", &fx("k5.json")]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "1");
    let out = run(&["graph", "chi", "--graph", &fx("c5.json")]);
    assert_eq!(stdout(&out).trim(), "3");
    let out = run(&["graph", "omega", "--graph", &fx("c5.json")]);
    assert_eq!(stdout(&out).trim(), "2");
}

#[test]
fn magic_square_demo_passes_and_writes_objects() {
    let dir = scratch("demo");
    let out = run(&["demo", "magic-square", "--out-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["system.json", "pauli_rep.json", "strategy.json", "independence_cert.json"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn magic_square_fixtures_verify() {
    let sys = fx("magic_square/system.json");
    let out = run(&["group", "verify", "--system", &sys, "--rep", &fx("magic_square/pauli_rep.json")]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "game",
        "check-strategy",
        "--game",
        &fx("magic_square/game.json"),
        "--strategy",
        &fx("magic_square/strategy.json"),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&["graph", "certify", "--cert", &fx("magic_square/independence_cert.json")]);
    assert_eq!(code(&out), 0);
    let out = run(&["game", "solve-classical", "--game", &fx("magic_square/game.json")]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("none"));
}

#[test]
fn failed_check_exits_3() {
    // the Pauli rep is not a rep of the homogeneous group with J = -I
    let dir = scratch("fail");
    let homog = dir.join("homog.json");
    std::fs::write(
        &homog,
        r#"{"m":6,"n":9,"rows":[[1,2,3],[4,5,6],[7,8,9],[1,4,7],[2,5,8],[3,6,9]],"b":[0,0,0,0,0,0]}"#,
    )
    .unwrap();
    let out = run(&[
        "group",
        "verify",
        "--system",
        homog.to_str().unwrap(),
        "--rep",
        &fx("magic_square/pauli_rep.json"),
    ]);
    assert_eq!(code(&out), 3);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn invalid_input_exits_2() {
    let dir = scratch("invalid");
    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{"m":1,"n":2,"rows":[[3]],"b":[1]}"#).unwrap();
    let out = run(&["system", "solve", "--system", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let out = run(&["system", "solve"]);
    assert_eq!(code(&out), 2);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn solver_cap_exits_4() {
    let dir = scratch("budget");
    let path = dir.join("big.json");
    let n = 30;
    let edges: Vec<[usize; 2]> = (0..n).map(|v| [v, (v + 1) % n]).collect();
    std::fs::write(&path, serde_json::json!({"n": n, "edges": edges}).to_string()).unwrap();
    let out = run(&["graph", "chi", "--graph", path.to_str().unwrap()]);
    assert_eq!(code(&out), 4);
    let out = run(&["graph", "chi", "--graph", path.to_str().unwrap(), "--max-vertices", "40"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "2");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn rounding_and_report() {
    let dir = scratch("round");
    let q = dir.join("q.json");
    let report = dir.join("report.json");
    let out = run(&[
        "round",
        "--in",
        &fx("near_pvm.json"),
        "--sum-one",
        "--out",
        q.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(rep["verdict"], "pass");
    assert!(rep["inputs"].as_object().map_or(false, |m| !m.is_empty()));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn presentation_lists_relators() {
    let out = run(&["group", "present", "--system", &fx("magic_square/system.json")]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("generators:"));
    assert_eq!(text.lines().count(), 1 + 43);
}
