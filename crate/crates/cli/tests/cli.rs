//! End-to-end tests of the binary: exit-code contract, determinism under a
//! fixed seed, and CSV/report round-trips.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_multires"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("multires-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

const THERMO_CONFIG: &str = r#"{
  "label": "thermo-qubit",
  "builtin": {
    "kind": "thermo",
    "charges": [{"matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "H"}]
  },
  "solver": {"tol": 1e-8, "grid": 201, "seed": 0, "samples": 400}
}"#;

const LOCAL_CONTROL_CONFIG: &str = r#"{
  "label": "local-control",
  "builtin": {"kind": "local-control", "e0": 0.0, "e1": 1.0},
  "solver": {"grid": 201, "samples": 400}
}"#;

const NONCONVEX_CONFIG: &str = r#"{
  "label": "nonconvex-demo",
  "custom": {
    "monotones": [
      {"kind": "avg-observable", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "M_A"},
      {"kind": "avg-observable", "matrix": [[[0.5,0],[-0.5,0]],[[-0.5,0],[0.5,0]]], "label": "M_B"}
    ],
    "state_family": {"kind": "mixture-path", "states": [
      {"matrix": [[[1,0],[0,0]],[[0,0],[0,0]]]},
      {"matrix": [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]]},
      {"matrix": [[[0,0],[0,0]],[[0,0],[1,0]]]}
    ]}
  }
}"#;

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn grab(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("missing key {key} in:\n{text}"))
        .trim()
        .parse()
        .unwrap()
}

#[test]
fn diagram_emits_deterministic_csv_and_svg() {
    let dir = scratch("diagram");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let out1 = dir.join("a");
    let out2 = dir.join("b");
    for out in [&out1, &out2] {
        let res = run(&[
            "diagram",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let csv1 = std::fs::read(out1.join("diagram.csv")).unwrap();
    let csv2 = std::fs::read(out2.join("diagram.csv")).unwrap();
    assert_eq!(csv1, csv2, "diagram CSV must be byte-identical per seed");
    let svg1 = std::fs::read(out1.join("diagram.svg")).unwrap();
    let svg2 = std::fs::read(out2.join("diagram.svg")).unwrap();
    assert_eq!(svg1, svg2);

    // Header carries the monotone labels; row count comes from the config.
    let text = String::from_utf8(csv1).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "M_H,E_FS");
    assert_eq!(lines.count(), 400);
}

#[test]
fn diagram_report_summary_round_trips_with_the_csv() {
    let dir = scratch("roundtrip");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let out = dir.join("out");
    let res = run(&[
        "diagram",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let report = stdout(&res);
    let summary_first = report
        .lines()
        .find(|l| l.contains("diagram.csv"))
        .and_then(|l| l.split("first=(").nth(1))
        .and_then(|s| s.split(')').next())
        .expect("inline summary with first row");
    let csv = std::fs::read_to_string(out.join("diagram.csv")).unwrap();
    let first_row = csv.lines().nth(1).unwrap();
    for (a, b) in summary_first.split(',').zip(first_row.split(',')) {
        let (x, y): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((x - y).abs() < 1e-12, "summary {x} vs csv {y}");
    }
}

#[test]
fn diagram_rejects_config_without_state_family() {
    let dir = scratch("nofamily");
    let cfg = write(
        &dir,
        "bare.json",
        r#"{
          "label": "bare",
          "custom": {"monotones": [
            {"kind": "avg-observable", "matrix": [[[0,0],[0,0]],[[0,0],[1,0]]], "label": "M"}
          ]}
        }"#,
    );
    let res = run(&["diagram", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn unparseable_config_exits_2_with_position() {
    let dir = scratch("badjson");
    let cfg = write(&dir, "bad.json", "{\"label\": }");
    let res = run(&["diagram", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("line"), "diagnostics should carry a position: {err}");
}

#[test]
fn bank_rate_matches_log_odds_for_local_control() {
    let dir = scratch("bankrate");
    let cfg = write(&dir, "lc.json", LOCAL_CONTROL_CONFIG);
    let out = dir.join("out");
    let res = run(&[
        "bank",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--anchor",
        "0.9",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = stdout(&res);
    let rate = grab(&text, "rate");
    let expected = -1.0 / (0.9f64 / 0.1).log2();
    assert!(
        (rate - expected).abs() < 1e-5,
        "rate {rate} vs expected {expected}"
    );
    assert!(out.join("curve.csv").exists() && out.join("curve.svg").exists());
}

#[test]
fn bank_rate_is_negative_inverse_temperature_for_thermo() {
    let dir = scratch("bankthermo");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let res = run(&[
        "bank",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--anchor",
        "100",
    ]);
    assert!(res.status.success());
    let text = stdout(&res);
    let alpha = grab(&text, "alpha");
    let rate = grab(&text, "rate");
    assert!(alpha > 0.0);
    assert!((rate + 1.0 / alpha).abs() < 1e-9, "rate must be -T = -1/alpha");
}

#[test]
fn bank_endpoint_anchor_exits_3() {
    let dir = scratch("endpoint");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let res = run(&[
        "bank",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--anchor",
        "0",
    ]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn bank_nonconvex_custom_curve_exits_3() {
    let dir = scratch("nonconvex");
    let cfg = write(&dir, "nc.json", NONCONVEX_CONFIG);
    let res = run(&[
        "bank",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("E2") || err.contains("convex"), "{err}");
}

#[test]
fn firstlaw_accepts_consistent_and_rejects_perturbed_inputs() {
    let dir = scratch("firstlaw");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let rho = write(
        &dir,
        "rho.json",
        r#"{"matrix": [[[0.7,0],[0.1,0.05]],[[0.1,-0.05],[0.3,0]]]}"#,
    );
    let sigma = write(&dir, "sigma.json", r#"{"matrix": [[[0.4,0],[0,0]],[[0,0],[0.6,0]]]}"#);
    let base = [
        "firstlaw",
        "--config",
        cfg.to_str().unwrap(),
        "--anchor",
        "100",
        "--rho",
        rho.to_str().unwrap(),
        "--sigma",
        sigma.to_str().unwrap(),
    ];
    let ok = run(&base);
    assert!(ok.status.success());
    let text = stdout(&ok);
    assert!(grab(&text, "residual").abs() <= 1e-8);
    // The thermodynamic decomposition is printed alongside.
    assert!(text.contains("dU = Q - W"));

    let mut perturbed = base.to_vec();
    perturbed.extend_from_slice(&["--dw1", "0.5"]);
    let bad = run(&perturbed);
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn protocol_single_run_and_zero_exchange() {
    let dir = scratch("protocol");
    let out = dir.join("out");
    let res = run(&[
        "protocol",
        "--n",
        "1000",
        "--p0",
        "0.9",
        "--r",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = stdout(&res);
    let rate = grab(&text, "rate");
    let asym = grab(&text, "asymptotic_rate");
    assert!((rate - asym).abs() / asym.abs() < 0.05, "rate {rate} vs {asym}");
    assert!(out.join("trace.txt").exists());

    let zero = run(&[
        "protocol",
        "--n",
        "1000",
        "--p0",
        "0.9",
        "--r",
        "0",
        "--out",
        dir.join("zero").to_str().unwrap(),
    ]);
    assert!(zero.status.success());
    let text = stdout(&zero);
    assert_eq!(grab(&text, "dW_E"), 0.0);
    assert_eq!(grab(&text, "dW_W"), 0.0);
    assert_eq!(grab(&text, "delta_n"), 0.0);
}

#[test]
fn protocol_scaling_emits_csv_with_slopes() {
    let dir = scratch("scaling");
    let out = dir.join("out");
    let res = run(&[
        "protocol",
        "--n-list",
        "100,1000,10000",
        "--p0",
        "0.9",
        "--r",
        "10",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let slope = grab(&stdout(&res), "delta_n_slope");
    assert!((-1.3..=-0.7).contains(&slope), "slope {slope}");
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    assert!(csv.starts_with("n,dW_W,dW_E,delta_n,rate_error"));
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn check_passes_for_builtins_and_is_deterministic() {
    let dir = scratch("check");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let args = [
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "120",
        "--seed",
        "5",
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(stdout(&a), stdout(&b), "verdicts must be deterministic per seed");
}

#[test]
fn broken_demo_suite_exits_5_naming_m4() {
    let dir = scratch("broken");
    let cfg = write(&dir, "thermo.json", THERMO_CONFIG);
    let res = run(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--suite",
        "broken-demo",
        "--samples",
        "100",
    ]);
    assert_eq!(res.status.code(), Some(5));
    let all = format!("{}{}", stdout(&res), String::from_utf8_lossy(&res.stderr));
    assert!(all.contains("M4"), "failure must name M4: {all}");
}

#[test]
fn check_local_control_all_suites() {
    let dir = scratch("checklc");
    let cfg = write(&dir, "lc.json", LOCAL_CONTROL_CONFIG);
    let res = run(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "100",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = stdout(&res);
    assert!(text.contains("bank-vs-relent pass"));
    assert!(text.contains("bank-tangency pass"));
}
