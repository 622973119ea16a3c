use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fibercirc"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> (i32, Value, Output) {
    let out = bin().args(args).output().expect("spawn");
    let code = out.status.code().expect("exit code");
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json, out)
}

#[test]
fn verify_default_suite_passes() {
    let (code, report, _) = run(&["verify"]);
    assert_eq!(code, 0);
    assert_eq!(report["pass"], true);
    assert_eq!(report["cocycle"], "lr-");
    assert!(report["checks"].as_array().unwrap().len() >= 6);
}

#[test]
fn wrong_cocycle_exits_one() {
    let (code, report, _) = run(&["verify", "--cocycle", "lr+", "--check", "zeta-primitive"]);
    assert_eq!(code, 1);
    assert_eq!(report["checks"][0]["pass"], false);
}

#[test]
fn empty_word_is_trivially_consistent() {
    let (code, report, _) = run(&["verify", "--word", ""]);
    assert_eq!(code, 0);
    assert_eq!(report["word"], "1");
}

#[test]
fn bad_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"verify": {"bogus": 1}}"#).unwrap();
    let (code, _, out) = run(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let (code, _, out) = run(&["word", "a1 b1^"]);
    assert_eq!(code, 2);
    assert!(!out.stderr.is_empty());

    let (code, _, _) = run(&["verify", "--check", "no-such-check"]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&["holonomy"]);
    assert_eq!(code, 2);

    let (code, _, _) = run(&["periods", "--family", "Sp"]);
    assert_eq!(code, 2);
}

#[test]
fn periods_snap_to_expected_integers() {
    let (code, report, _) = run(&["periods"]);
    assert_eq!(code, 0);
    assert_eq!(report["period"]["snap"]["int"], 1);
    assert_eq!(report["expected"], 1.0);

    let doubled = (2.0 / (4.0 * std::f64::consts::PI.powi(2))).to_string();
    let (code, report, _) = run(&["periods", "--metric-scale", &doubled]);
    assert_eq!(code, 0);
    assert_eq!(report["period"]["snap"]["int"], 2);

    let (code, report, _) = run(&["periods", "--family", "U1"]);
    assert_eq!(code, 0);
    assert_eq!(report["period"]["value"], 0.0);
}

#[test]
fn constant_fixture_has_trivial_holonomy() {
    let f = fixture("constant.json");
    let (code, report, _) = run(&["holonomy", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    let h = &report["homotopies"][0];
    assert_eq!(h["circle"], serde_json::json!([1.0, 0.0]));
    assert_eq!(h["value"], 0.0);
}

#[test]
fn reversal_conjugates_the_holonomy() {
    let f = fixture("genus1-a.json");
    let (_, fwd, _) = run(&["holonomy", f.to_str().unwrap()]);
    let (_, rev, _) = run(&["holonomy", "--reverse", f.to_str().unwrap()]);
    let a = fwd["homotopies"][0]["value"].as_f64().unwrap();
    let b = rev["homotopies"][0]["value"].as_f64().unwrap();
    assert!(a.abs() > 1e-4);
    assert!((a + b).abs() < 1e-12, "{a} {b}");
    let cf = &fwd["homotopies"][0]["circle"];
    let cr = &rev["homotopies"][0]["circle"];
    assert!((cf[0].as_f64().unwrap() - cr[0].as_f64().unwrap()).abs() < 1e-12);
    assert!((cf[1].as_f64().unwrap() + cr[1].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn fixture_pair_differs_by_an_integer() {
    let a = fixture("genus1-a.json");
    let b = fixture("genus1-b.json");
    let (code, report, _) = run(&["holonomy", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(report["difference"]["pass"], true);
    assert_eq!(report["difference"]["int"], 0);
}

#[test]
fn exported_scenarios_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, built, _) = run(&["holonomy", "--scenario", "genus1-a", "--n", "8", "--export", d]);
    assert_eq!(code, 0);
    let f = dir.path().join("genus1-a.json");
    let (code, loaded, _) = run(&["holonomy", f.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(built["homotopies"][0]["value"], loaded["homotopies"][0]["value"]);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for k in 0..2 {
        let p = dir.path().join(format!("r{k}.json"));
        let (code, _, _) = run(&["verify", "--seed", "7", "--json", p.to_str().unwrap()]);
        assert_eq!(code, 0);
        bytes.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(bytes[0], bytes[1]);

    let p = dir.path().join("other.json");
    run(&["verify", "--seed", "8", "--json", p.to_str().unwrap()]);
    assert_ne!(bytes[0], std::fs::read(&p).unwrap());
}

#[test]
fn csv_has_one_row_per_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("checks.csv");
    let (code, report, _) = run(&["verify", "--csv", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&p).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    assert!(headers.iter().any(|h| h == "name"));
    assert_eq!(reader.records().count(), report["checks"].as_array().unwrap().len());
}

#[test]
fn word_evaluates_on_a_given_point() {
    let p = fixture("point.json");
    let (code, report, _) = run(&["word", "[a1,b1]", "--point", p.to_str().unwrap(), "--check"]);
    assert_eq!(code, 0);
    assert_eq!(report["degree_vector"], serde_json::json!([0, 0]));
    assert_eq!(report["check"]["pass"], true);
}

#[test]
fn moment_defect_ladder_converges() {
    let p = fixture("point.json");
    let (code, report, _) = run(&["moment", "--point", p.to_str().unwrap()]);
    assert_eq!(code, 0);
    let orders = report["orders"].as_array().unwrap();
    assert!(orders.iter().all(|o| o.as_f64().unwrap() > 1.5));
    assert_eq!(report["point_momentum"].as_array().unwrap().len(), 3);
}

#[test]
fn probe_separates_flat_tuples() {
    let t = fixture("tuples.json");
    let (code, report, _) = run(&["probe", "--tuples", t.to_str().unwrap()]);
    assert_eq!(code, 0);
    let flags: Vec<bool> = report["probes"].as_array().unwrap().iter().map(|p| p["pass"].as_bool().unwrap()).collect();
    assert_eq!(flags, [true, true, false]);

    let (code, _, _) = run(&["probe", "--tuples", t.to_str().unwrap(), "--expect-flat"]);
    assert_eq!(code, 1);

    let (code, report, _) = run(&["probe"]);
    assert_eq!(code, 0);
    let probes = report["probes"].as_array().unwrap();
    assert!(probes.iter().filter(|p| p["kind"] == "commuting").all(|p| p["pass"] == true));
    assert!(probes.iter().filter(|p| p["kind"] == "random").all(|p| p["pass"] == false));
}
