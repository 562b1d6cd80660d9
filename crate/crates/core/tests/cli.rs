//! End-to-end runs of the `logcanon` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_logcanon")).args(args).output().expect("binary runs")
}

fn specs(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "specs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn scratch(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("logcanon-{}-{name}", std::process::id()))
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn verify_passing_case_exits_zero() {
    let o = run(&["verify", "--case", "sep-g2", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn detected_negative_control_exits_zero() {
    let o = run(&["verify", "--case", "neg-mismatched-lambda", "--samples", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("negative control detected"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["verify", "--case", "no-such-case"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["validate", "--graph", &specs("missing.spec")]).status.code(), Some(2));
}

#[test]
fn parse_error_reports_position() {
    let bad = scratch("bad.spec");
    std::fs::write(&bad, "[parameters]\nz shear\n\n[edges]\ne = S(y)\n").unwrap();
    let o = run(&["validate", "--graph", bad.to_str().unwrap()]);
    std::fs::remove_file(&bad).ok();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.spec:5:7"), "{err}");
    assert!(err.contains("unknown parameter `y`"), "{err}");
}

#[test]
fn omega_csv_is_the_separating_constant_form() {
    let o = run(&["omega", "--graph", &specs("g2sep.spec"), "--point", &specs("g2sep.point.json"), "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let want = "\
,z_t_2,z_t_3,z_h_2,z_h_3,l_c,beta_c
z_t_2,0,2,0,0,-1,0
z_t_3,-2,0,0,0,-1,0
z_h_2,0,0,0,2,-1,0
z_h_3,0,0,-2,0,-1,0
l_c,1,1,1,1,0,-1
beta_c,0,0,0,0,1,0
";
    assert_eq!(stdout(&o), want);
}

#[test]
fn inconsistent_point_is_rejected() {
    let p = scratch("point.json");
    std::fs::write(&p, r#"{"z_t_1": [1.0, 0.0], "z_t_2": [1.0, 0.0], "z_t_3": [1.0, 0.0], "l_c": [2.0, 0.0]}"#).unwrap();
    let o = run(&["omega", "--graph", &specs("g2sep.spec"), "--point", p.to_str().unwrap()]);
    std::fs::remove_file(&p).ok();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn boundary_loop_traces_match_the_length() {
    let o = run(&["monodromy", "--graph", &specs("g2sep.spec"), "--point", &specs("g2sep.point.json")]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 2);
    // λ = 2.5 + 0.7i gives tr = −(λ + 1/λ).
    for line in out.lines() {
        assert!(line.contains("tr -2.87091988130"), "{line}");
    }
}

#[test]
fn committed_specs_match_their_decompositions() {
    for name in ["g2sep", "g2nonsep", "g2theta"] {
        let emitted = scratch(&format!("{name}.spec"));
        let o = run(&["validate", "--graph", &specs(&format!("{name}.dec")), "--output", emitted.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}");
        let got = std::fs::read_to_string(&emitted).unwrap();
        std::fs::remove_file(&emitted).ok();
        assert_eq!(got, std::fs::read_to_string(specs(&format!("{name}.spec"))).unwrap(), "{name}");
    }
}

#[test]
fn validate_output_round_trips() {
    let first = scratch("first.spec");
    let second = scratch("second.spec");
    let a = run(&["validate", "--graph", &specs("g2nonsep.spec"), "--output", first.to_str().unwrap()]);
    let b = run(&["validate", "--graph", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
    let (x, y) = (std::fs::read_to_string(&first).unwrap(), std::fs::read_to_string(&second).unwrap());
    std::fs::remove_file(&first).ok();
    std::fs::remove_file(&second).ok();
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    assert!(stdout(&b).contains("valid"));
    assert_eq!(x, y);
}

#[test]
fn list_json_marks_negative_controls() {
    let o = run(&["list", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let items = v.as_array().unwrap();
    assert!(items.iter().any(|s| s["name"] == "sep-g2" && s["negative"] == false));
    assert!(items.iter().any(|s| s["name"] == "neg-broken-admissibility" && s["negative"] == true));
}
