use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bilevel-vi"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("bilevel-vi-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn solve_writes_trace_and_summary() {
    let config = scratch("interval.toml");
    std::fs::write(
        &config,
        r#"
algorithm = "alg3"
[problem]
kind = "explicit"
epsilon = 0.01
set = { kind = "box", lower = [0.0], upper = [1.0] }
operator = { kind = "affine", matrix = [[1.0]], offset = [-0.5] }
objective = { kind = "quadratic", q = [[1.0]], center = [1.0] }
lipschitz = 1.0
"#,
    )
    .unwrap();
    let out = scratch("trace.csv");
    let run = bin().args(["solve", config.to_str().unwrap(), "--alg", "1", "--seed", "4", "--out"]).arg(&out).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let trace = std::fs::read_to_string(&out).unwrap();
    assert!(trace.starts_with("k,f,psi_B,psi_S,rho,rho_increments,cuts,cut_value,elapsed_sec\n"));
    let summary: serde_json::Value = serde_json::from_slice(&run.stderr).unwrap();
    assert_eq!(summary["algorithm"], "alg1");
    assert_eq!(summary["termination"], "converged");
}

#[test]
fn region_to_stdout() {
    let run = bin().args(["region", "--op", "gab", "--a", "2", "--b", "1", "--eps", "0.05", "--grid", "10"]).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,psi_S,psi_M_oracle,label"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn rejects_bad_input() {
    assert!(!bin().args(["region", "--grid", "3"]).output().unwrap().status.success());
    assert!(!bin().args(["bench", "table1", "--alg", "4"]).output().unwrap().status.success());
    assert!(!bin().args(["bench", "cournot", "--alg", "2", "--instances", "1"]).output().unwrap().status.success());
    assert!(!bin().args(["solve", "/nonexistent/config.toml"]).output().unwrap().status.success());
}
