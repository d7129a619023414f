use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::{Command, Output};

use bcsif::cli::{fmt_f64, parse_config, RunConfig, PHASE_HEADER};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bcsif"));
    c.env_remove("BCSIF_CONFIG");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("bcsif-{}-{name}", std::process::id()))
}

#[test]
fn config_parsing_handles_comments_and_aliases() {
    let m = parse_config("# header\nbeta = 2.5  # inline\n\nquad_nodes=512\nU=-1\n").unwrap();
    assert_eq!(m["beta"], "2.5");
    assert_eq!(m["quad-nodes"], "512");
    assert_eq!(m["U"], "-1");
    assert!(parse_config("nonsense = 1").is_err());
    assert!(parse_config("beta").is_err());
}

#[test]
fn grids_and_defaults_resolve() {
    let map: BTreeMap<String, String> = [("beta", "1"), ("U", "-1"), ("theta-grid", "0:1:5"), ("U-grid", "-1,-2")]
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect();
    let cfg = RunConfig::from_map(&map).unwrap();
    assert_eq!(cfg.theta_grid, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    assert_eq!(cfg.u_grid, vec![-1.0, -2.0]);
    assert_eq!(cfg.l_list, vec![8, 16, 32, 64]);
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let x = 0.1 + 0.2;
    let s = fmt_f64(x);
    assert_eq!(s.parse::<f64>().unwrap(), x);
    let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17);
    assert_eq!(fmt_f64(-0.0), fmt_f64(0.0));
}

#[test]
fn gap_emits_json_and_exits_zero() {
    let out = run(&["gap", "--beta", "2", "--theta", "2.5", "--U", "-2", "--mu", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["solvable"], true);
    let (delta, ssb, odlro) = (v["delta"].as_f64().unwrap(), v["ssb"].as_f64().unwrap(), v["odlro"].as_f64().unwrap());
    assert!(delta > 0.0 && (ssb + delta / 2.0).abs() < 1e-15 && (odlro - ssb * ssb).abs() < 1e-15);
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(run(&["gap", "--U", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["gap", "--beta", "1", "--U", "1"]).status.code(), Some(2));
    assert_eq!(run(&["gap", "--beta", "1", "--U", "-1", "--theta", "7"]).status.code(), Some(2));
    assert_eq!(run(&["gap", "--beta", "x", "--U", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["gap", "--beta", "1", "--U", "-1", "--format", "xml"]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn unreachable_tolerance_exits_three() {
    let out = run(&["gap", "--beta", "1", "--theta", "6.281185307179586", "--U", "-0.03", "--tol", "1e-14"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let path = temp_path("cfg");
    std::fs::write(&path, "# defaults\nbeta = 2\nU = -2\nmu=0.3\ntheta=2.5\n").unwrap();
    let from_file = bin().env("BCSIF_CONFIG", &path).args(["gap"]).output().unwrap();
    let overridden = bin().env("BCSIF_CONFIG", &path).args(["gap", "--theta", "0"]).output().unwrap();
    std::fs::remove_file(&path).ok();
    let a: serde_json::Value = serde_json::from_slice(&from_file.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&overridden.stdout).unwrap();
    assert_eq!(a["params"]["theta"], 2.5);
    assert_eq!(b["params"]["theta"], 0.0);
    assert_eq!(a["params"]["beta"], 2.0);
    let missing = bin().env("BCSIF_CONFIG", "/nonexistent/bcsif.cfg").args(["gap"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn phase_writes_rfc4180_csv_in_grid_order() {
    let path = temp_path("phase.csv");
    let out = run(&[
        "phase",
        "--beta",
        "1",
        "--U",
        "-1",
        "--theta-grid",
        "0,3,6",
        "--U-grid",
        "-2,-0.5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, PHASE_HEADER.to_vec());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    std::fs::remove_file(&path).ok();
    assert_eq!(rows.len(), 6);
    let cells: Vec<(f64, f64)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
    assert_eq!(cells, vec![(0.0, -2.0), (0.0, -0.5), (3.0, -2.0), (3.0, -0.5), (6.0, -2.0), (6.0, -0.5)]);
}

#[test]
fn phase_json_format() {
    let out = run(&["phase", "--beta", "1", "--U", "-1", "--theta-grid", "0,6", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert!(v[1]["delta"].as_f64().unwrap() > 0.0);
    assert_eq!(v[0]["in_window"], false);
}

#[test]
fn potential_table_has_small_hessian_residual() {
    let out = run(&[
        "potential",
        "--beta",
        "1",
        "--theta",
        "6.08",
        "--U",
        "-1",
        "--gamma",
        "0.3",
        "--L-list",
        "16,64",
        "--x-points",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 10);
    for r in &rows {
        assert!(r[9].parse::<f64>().unwrap().abs() < 1e-6);
        assert_eq!(r[2], r[3]);
    }
}

#[test]
fn covariance_dump_covers_the_grid() {
    let out = run(&["covariance", "--beta", "1", "--U", "-1", "--L", "2", "--h", "2", "--phi-re", "0.3"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rdr.headers().unwrap().len(), 7);
    assert_eq!(rdr.records().count(), 4 * 2 * 2 * 2);
    assert_eq!(run(&["covariance", "--beta", "1", "--U", "-1", "--h", "3"]).status.code(), Some(2));
}

#[test]
fn verify_suite_reports_and_passes() {
    for suite in ["traces", "covariance", "grassmann", "detbound", "potential"] {
        let out = run(&["verify", "--beta", "1", "--U", "-1", "--suite", suite, "--fuzz-trials", "100"]);
        assert_eq!(out.status.code(), Some(0), "{suite}");
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        let checks = v["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        for c in checks {
            for key in ["check", "lhs", "rhs", "abs_err", "rel_err", "tol", "pass"] {
                assert!(c.get(key).is_some(), "{key}");
            }
        }
    }
}
