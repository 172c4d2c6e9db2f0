//! Black-box runs of the `negdep` binary: exit codes and output shapes.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn negdep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_negdep"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_family(dir: &Path, name: &str, spec: &str) -> String {
    let path = dir.join(name);
    let out = negdep(&["family", "--spec", spec, "-o", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    path.to_str().unwrap().to_string()
}

#[test]
fn nand3_has_negative_regression() {
    let out = negdep(&[
        "check",
        "--family",
        "nand:3",
        "--notions",
        "nr",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["reports"][0]["verdict"], "Holds");
}

#[test]
fn pos_pair_file_fails_pairwise_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_family(dir.path(), "pos.json", "pos");
    let out = negdep(&[
        "check",
        "--file",
        &file,
        "--notions",
        "nc",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    let cert = &json(&out)["reports"][0]["certificate"];
    assert_eq!(cert["kind"], "covariance");
    assert_eq!(cert["covariance"], "1/4");
}

#[test]
fn nand3_fails_stochastic_covering() {
    let out = negdep(&[
        "check",
        "--family",
        "nand:3",
        "--notions",
        "sc",
        "--format",
        "json",
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["reports"][0]["certificate"]["kind"], "covering");
}

#[test]
fn generated_conditioned_sum_roundtrips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_family(dir.path(), "m.json", "condsum:0.5,0.5,0.5:1:2");
    let out = negdep(&["check", "--file", &file, "--notions", "nr"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(&file).unwrap();
    assert_eq!(serde_json::from_str::<Value>(&text).unwrap()["n"], 3);
}

#[test]
fn nand3_tail_rows_pass() {
    let out = negdep(&[
        "tail", "--family", "nand:3", "--f", "sum", "--grid", "0:0.25:2", "--format", "csv",
    ]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,upper_exact,lower_exact,bound,monotone_bound,pass"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
    assert!(rows[1].starts_with("1/4,3/4,1/4,"));
}

#[test]
fn coupling_of_point_masses() {
    let dir = tempfile::tempdir().unwrap();
    let ones = dir.path().join("ones.json");
    let zeros = dir.path().join("zeros.json");
    std::fs::write(&ones, r#"{"n": 2, "atoms": [{"x": "11", "p": "1"}]}"#).unwrap();
    std::fs::write(&zeros, r#"{"n": 2, "atoms": [{"x": "00", "p": "1"}]}"#).unwrap();
    let (ones, zeros) = (ones.to_str().unwrap(), zeros.to_str().unwrap());

    let out = negdep(&[
        "coupling", "--lower", ones, "--upper", zeros, "--format", "json",
    ]);
    assert_eq!(code(&out), 1);
    let failure = &json(&out)["failure"];
    assert_eq!(failure["kind"], "not_dominated");
    assert_eq!(failure["down_set"], serde_json::json!(["00"]));

    let out = negdep(&[
        "coupling", "--lower", zeros, "--upper", ones, "--format", "json",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["displacement"], "2");

    let out = negdep(&["coupling", "--lower", zeros, "--upper", ones, "--covering"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn counterexample_range_and_separation() {
    assert_eq!(code(&negdep(&["counterexample", "2"])), 2);
    assert_eq!(code(&negdep(&["counterexample", "13"])), 2);

    let out = negdep(&["counterexample", "10", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["fixed_max_step"], "1793/512");
    assert_eq!(v["separated"], true);

    let out = negdep(&["counterexample", "3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["fixed_first_step"], "1/4");
    assert_eq!(v["separated"], false);
}

#[test]
fn martingale_exports() {
    let out = negdep(&["martingale", "--family", "nand:3", "--format", "json"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["root"]["pick"], 2);
    assert_eq!(v["root"]["y"], "7/4");

    let out = negdep(&[
        "martingale",
        "--family",
        "nand:4",
        "--order",
        "identity",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout)
        .unwrap()
        .starts_with("id,depth,node,pick,"));

    let out = negdep(&["martingale", "--family", "pos", "--format", "json"]);
    assert_eq!(code(&out), 1);
    assert_eq!(json(&out)["violation"]["bound"], "1");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&negdep(&["check"])), 2);
    assert_eq!(
        code(&negdep(&[
            "check", "--family", "nand:3", "--file", "x.json"
        ])),
        2
    );
    assert_eq!(code(&negdep(&["check", "--family", "zeta:3"])), 2);
    assert_eq!(
        code(&negdep(&["check", "--file", "/nonexistent/m.json"])),
        2
    );
    assert_eq!(
        code(&negdep(&["check", "--family", "nand:3", "--notions", "xx"])),
        2
    );
    assert_eq!(
        code(&negdep(&["check", "--family", "nand:3", "--format", "csv"])),
        2
    );
    assert_eq!(
        code(&negdep(&[
            "tail",
            "--family",
            "nand:3",
            "--f",
            "linear:2,0,0"
        ])),
        2
    );
    assert_eq!(
        code(&negdep(&["check", "--family", "nand:9", "--notions", "na"])),
        2
    );
}

#[test]
fn outputs_are_deterministic() {
    let args = ["check", "--family", "hadamard:4", "--format", "json"];
    assert_eq!(negdep(&args).stdout, negdep(&args).stdout);
}
