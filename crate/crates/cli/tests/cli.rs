use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cotci(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cotci")).args(args).output().expect("binary runs")
}

fn schema() -> jsonschema::JSONSchema {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../report.schema.json");
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::options().with_draft(jsonschema::Draft::Draft7).compile(&value).unwrap()
}

fn report(args: &[&str], code: i32) -> Value {
    let out = cotci(args);
    assert_eq!(out.status.code(), Some(code), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let schema = schema();
    if let Err(errors) = schema.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{args:?} report violates the schema: {msgs:?}");
    }
    v
}

fn without_wall_time(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("wall_time");
    v
}

#[test]
fn curve_reports_the_genus_and_descent() {
    let v = report(&["curve", "--e", "4", "--P", "Z0"], 0);
    assert_eq!(v["command"], "curve");
    assert_eq!(v["result"]["h0_dim"], 3);
    assert_eq!(v["result"]["all_verified"], true);
    assert_eq!(v["result"]["descent"]["chart0"][0]["differential"], "dz2");
}

#[test]
fn numerator_can_come_from_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.txt");
    std::fs::write(&path, "Z0\n").unwrap();
    let from_file = report(&["curve", "--e", "4", "--P", path.to_str().unwrap()], 0);
    let inline = report(&["curve", "--e", "4", "--P", "Z0"], 0);
    assert_eq!(from_file["result"], inline["result"]);
}

#[test]
fn every_command_emits_a_valid_report() {
    let runs: [&[&str]; 8] = [
        &["cohomology", "--N", "3", "--degrees", "2,3", "--kind", "structure", "--basis"],
        &["cohomology", "--N", "2", "--e", "5"],
        &["witness"],
        &["jump", "--e", "5", "--trials", "2", "--seed", "1"],
        &["jump", "--alpha", "0,0", "--beta", "0,0"],
        &["fermat-verify", "--N", "3", "--c", "2", "--epsilon", "1"],
        &["baselocus", "--N", "3", "--c", "2", "--prime", "13"],
        &["probes", "--trials", "50"],
    ];
    for args in runs {
        let v = report(args, 0);
        assert_eq!(v["status"], "ok");
        assert_eq!(v["command"], args[0]);
    }
}

#[test]
fn jump_at_the_origin_and_at_random_points() {
    let v = report(&["jump", "--e", "5", "--trials", "5", "--seed", "42"], 0);
    assert!(v["result"]["dim_at_origin"].as_u64().unwrap() >= 1);
    for p in v["result"]["dims_at_random_parameters"].as_array().unwrap() {
        assert_eq!(p["dim"], 0);
    }
}

#[test]
fn usage_errors_exit_with_one() {
    for args in [
        &["cohomology", "--N", "4", "--c", "2", "--e", "5", "--sigma", "(N=4; e=5,5; L0=; L1=; L2=9,9)"][..],
        &["baselocus", "--prime", "7"],
        &["curve", "--e", "4", "--P", "Z0^2"],
        &["jump", "--alpha", "1,2"],
        &["no-such-command"],
    ] {
        let out = cotci(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(out.stdout.is_empty());
        assert!(!out.stderr.is_empty());
    }
    let out = cotci(&["cohomology", "--N", "4", "--c", "2", "--e", "5", "--sigma", "(N=4; e=5,5; L0=; L1=; L2=9,9)"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative"));
}

#[test]
fn failed_verification_exits_with_two_and_still_reports() {
    let v = report(&["fermat-verify", "--N", "3", "--c", "2", "--P", "0"], 2);
    assert_eq!(v["status"], "assertion_failed");
    assert_eq!(v["message"], "the class is zero");
    assert_eq!(v["result"]["membership"]["in_kernel"], true);
}

#[test]
fn reports_are_deterministic_apart_from_wall_time() {
    for args in [&["baselocus", "--N", "3", "--c", "2", "--seed", "9"][..], &["jump", "--trials", "3", "--seed", "5"], &["probes", "--trials", "40", "--seed", "3"]] {
        let a = without_wall_time(report(args, 0));
        let b = without_wall_time(report(args, 0));
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn out_flag_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = cotci(&["probes", "--trials", "10", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(schema().is_valid(&v));
}
