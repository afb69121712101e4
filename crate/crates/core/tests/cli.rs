use std::fs;
use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdsim"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn simulate_vacuum_writes_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.csv");
    let st = bin().args(["simulate"]).arg(scenario("vacuum_half.json")).arg("--out").arg(&out).status().unwrap();
    assert!(st.success());
    let text = fs::read_to_string(&out).unwrap();
    for v in column(&text, "psd_t_b_plus").into_iter().chain(column(&text, "psd_t_theta")) {
        assert!((v - 2.0).abs() < 1e-10);
    }
    for v in column(&text, "re_t_theta") {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn output_is_byte_stable() {
    let run = || bin().args(["simulate"]).arg(scenario("demo_budget.json")).output().unwrap().stdout;
    let a = run();
    assert!(!a.is_empty());
    assert_eq!(a, run());
    let run = || bin().args(["gw-budget"]).arg(scenario("demo_budget.json")).output().unwrap().stdout;
    assert_eq!(run(), run());
}

#[test]
fn budget_policy_reaches_sql() {
    let o = bin().args(["gw-budget"]).arg(scenario("kimble_k2.json")).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("omega,theta,s_hn,readout_penalty,s_total,re_h_est,im_h_est\n"));
    for v in column(&text, "s_total") {
        assert!((v - 1.0).abs() < 1e-12);
    }
    let o = bin()
        .args(["gw-budget"])
        .arg(scenario("kimble_k2.json"))
        .args(["--theta", "1.5707963267948966", "--format", "json"])
        .output()
        .unwrap();
    let rows: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for r in rows.as_array().unwrap() {
        assert!((r["s_total"].as_f64().unwrap() - 1.5).abs() < 1e-12);
    }
}

#[test]
fn single_point_grid() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("one.json");
    let text = fs::read_to_string(scenario("kimble_k2.json")).unwrap().replace("\"points\": 4", "\"points\": 1");
    fs::write(&p, text).unwrap();
    let o = bin().args(["gw-budget"]).arg(&p).output().unwrap();
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 2);
}

#[test]
fn malformed_input_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, "{\"schema_version\": 1,").unwrap();
    let out = dir.path().join("out.csv");
    let st = bin().args(["simulate"]).arg(&p).arg("--out").arg(&out).status().unwrap();
    assert_eq!(st.code(), Some(2));
    assert!(!out.exists());
    let st = bin().args(["simulate"]).arg(scenario("vacuum_half.json")).args(["--eta", "1.0"]).status().unwrap();
    assert_eq!(st.code(), Some(2));
}

#[test]
fn numerical_guard_exit_code() {
    let st = bin().args(["gw-budget"]).arg(scenario("kimble_k2.json")).args(["--theta", "0"]).status().unwrap();
    assert_eq!(st.code(), Some(3));
}

#[test]
fn feasibility_report() {
    let o = bin().args(["feasibility", "b1", "b1dag", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], true);
    assert_eq!(v["minus_phase_offset"], 0.0);
    let o = bin().args(["feasibility", "b1", "b2"]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("feasible: false"));
    assert_eq!(bin().args(["feasibility", "b1", "b3"]).status().unwrap().code(), Some(2));
}

#[test]
fn verify_quick() {
    let o = bin().args(["verify", "--level", "quick"]).output().unwrap();
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 9);
    assert!(o.status.success(), "{text}");
}
