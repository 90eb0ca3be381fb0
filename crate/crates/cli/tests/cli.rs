use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pseudoherm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

fn csv_rows(out: &Output) -> (String, Vec<Vec<String>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (header, rows)
}

#[test]
fn example_spectrum_is_the_oscillator_ladder() {
    let out = run(&["spectrum", "--model", "paper-example", "--omega", "1", "--grid", "10:400", "--count", "8"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["schema"], 1);
    let eig = v["eigenvalues"].as_array().unwrap();
    assert_eq!(eig.len(), 8);
    for (n, e) in eig.iter().enumerate() {
        let expected = 2.0 * n as f64 + 1.0;
        assert!((f(&e["re"]) - expected).abs() <= 1e-2 * expected, "{e}");
        assert_eq!(e["real_flag"], true);
    }
    assert_eq!(v["realness_summary"]["count_real"], 8);
}

#[test]
fn bender_below_zero_has_complex_pairs() {
    let out = run(&["spectrum", "--model", "bender", "--nu", "-0.5", "--basis", "200", "--count", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(v["realness_summary"]["count_complex"].as_u64().unwrap() >= 2);
}

#[test]
fn small_oscillator_basis_is_exact() {
    let out = run(&["spectrum", "--expr", "p^2 + x^2", "--basis", "4"]);
    assert!(out.status.success());
    let v = json_of(&out);
    let re: Vec<f64> = v["eigenvalues"].as_array().unwrap().iter().map(|e| f(&e["re"])).collect();
    assert_eq!(re, vec![1.0, 3.0, 5.0, 7.0]);
}

#[test]
fn spectrum_csv_layout() {
    let out = run(&["spectrum", "--expr", "p^2 + x^2", "--basis", "4", "--format", "csv", "--digits", "3"]);
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, "index,re,im,real_flag,residual");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[2][1], "5.0");
}

#[test]
fn verify_algebraic_route_matches_pattern() {
    let out = run(&[
        "verify", "--model", "paper-example", "--omega", "1", "--grid", "10:400", "--transform", "1/x", "--assembly",
        "algebraic",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert_eq!(v["pattern_matches"], true);
    let rows = v["table1"]["rows"].as_array().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["operator"].as_str().unwrap()).collect();
    assert_eq!(labels, ["H", "x", "p", "Hhat", "xc", "pc"]);
    assert!(f(&v["pseudo_hermiticity_residual"]) <= 1e-12);
    assert!(f(&v["canonical_form_residual"]) <= 1e-12);
    assert!(f(&v["commutator_residual"]) <= 1e-2);
    assert!(f(&v["orthonormality_defect"]) <= 1e-2);
}

#[test]
fn verify_identity_map_on_oscillator() {
    let out = run(&["verify", "--model", "harmonic", "--transform", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    for row in v["table1"]["rows"].as_array().unwrap() {
        assert_eq!(row["verdict"]["L2"], "Hermitian", "{row}");
        assert_eq!(row["verdict"]["H"], "Hermitian", "{row}");
    }
}

#[test]
fn verify_stencil_route_reports_residuals() {
    // the stencil residual of H in the weighted product exceeds the grid threshold,
    // so the report is written and the exit code flags the mismatch
    let coarse = run(&["verify", "--model", "paper-example", "--assembly", "stencil", "--grid", "10:400"]);
    let fine = run(&["verify", "--model", "paper-example", "--assembly", "stencil", "--grid", "10:800"]);
    for out in [&coarse, &fine] {
        assert_eq!(out.status.code(), Some(4));
        assert!(json_of(out)["mismatches"].as_array().unwrap().len() >= 1);
    }
    let r = |o: &Output| f(&json_of(o)["pseudo_hermiticity_residual"]);
    assert!(r(&fine) < r(&coarse));
}

#[test]
fn sweep_crosses_into_complex_region() {
    let out = run(&["sweep", "--model", "bender", "--nu", "-1:1:0.25", "--basis", "200", "--count", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, "nu,index,re,im,real_flag");
    let mut complex_below = false;
    for row in &rows {
        let nu: f64 = row[0].parse().unwrap();
        if nu >= 0.0 {
            assert_eq!(row[4], "true", "{row:?}");
        } else if row[4] == "false" {
            complex_below = true;
        }
    }
    assert!(complex_below);
    for nu in ["0.0", "0.5", "1.0"] {
        assert_eq!(rows.iter().filter(|r| r[0] == nu).count(), 6, "nu = {nu}");
    }
}

#[test]
fn sweep_single_point_oscillator() {
    let out = run(&["sweep", "--model", "bender", "--nu", "0:0:1", "--basis", "200"]);
    let (_, rows) = csv_rows(&out);
    let re: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(rows.len(), 6);
    for (n, e) in re.iter().enumerate() {
        assert!((e - (2 * n + 1) as f64).abs() < 1e-6);
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    for args in [
        vec!["sweep", "--model", "bender", "--nu", "1:-1:0.25"],
        vec!["spectrum", "--model", "harmonic", "--expr", "p^2"],
        vec!["spectrum", "--model", "nosuch"],
        vec!["spectrum", "--expr", "p^2 + x y"],
        vec!["spectrum", "--model", "paper-example", "--basis", "20"],
        vec!["spectrum", "--model", "harmonic", "--format", "xml"],
        vec!["spectrum", "--model", "harmonic", "--config", "/nonexistent/run.ini"],
        vec!["evolve", "--model", "harmonic", "--steps", "0"],
        vec!["spectrum", "--bogus"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn evolve_example_conserves_metric_norm() {
    let dir = tempfile::tempdir().unwrap();
    let summary = dir.path().join("summary.json");
    let out = run(&[
        "evolve", "--model", "paper-example", "--grid", "10:400", "--tmax", "10", "--steps", "200", "--metric", "auto",
        "--summary", summary.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv_rows(&out);
    assert_eq!(header, "t,l2_norm,h_norm");
    assert_eq!(rows.len(), 201);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(summary).unwrap()).unwrap();
    assert!(f(&s["h_norm"]["relative_drift"]) <= 1e-8);
    assert!(f(&s["l2_norm"]["relative_range"]) >= 1e-3);
    assert_eq!(s["complex_spectrum"], false);
}

#[test]
fn evolve_flat_oscillator_is_unitary() {
    let out = run(&["evolve", "--model", "harmonic", "--metric", "flat", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json_of(&out);
    assert!(f(&v["l2_norm"]["relative_range"]) <= 1e-10);
    assert!(f(&v["h_norm"]["relative_range"]) <= 1e-10);
    assert_eq!(v["series"]["t"].as_array().unwrap().len(), 201);
}

#[test]
fn evolve_flags_complex_spectrum() {
    let out = run(&["evolve", "--model", "bender", "--nu", "-0.5", "--metric", "auto", "--format", "json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json_of(&out)["complex_spectrum"], true);
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    let target = dir.path().join("out.csv");
    std::fs::write(
        &ini,
        format!(
            "[model]\nexpr = p^2 + x^2\n\n[representation]\nbasis = 6\n\n[task]\ncount = 3\n\n[output]\nformat = csv\ndigits = 5\npath = {}\n",
            target.display()
        ),
    )
    .unwrap();
    let out = run(&["spectrum", "--config", ini.to_str().unwrap(), "--count", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(target).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.starts_with("index,re,im,real_flag,residual\n0,1.0,"));
}

#[test]
fn digits_control_printed_precision() {
    let out = run(&["spectrum", "--model", "bender", "--nu", "1", "--basis", "60", "--count", "1", "--digits", "4"]);
    let v = json_of(&out);
    assert_eq!(f(&v["eigenvalues"][0]["re"]), 1.156);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let commands: [&[&str]; 4] = [
        &["spectrum", "--model", "bender", "--nu", "0.5", "--basis", "40", "--count", "6"],
        &["verify", "--model", "harmonic", "--transform", "1", "--grid", "6:60"],
        &["sweep", "--model", "bender", "--nu", "-0.5:0.5:0.5", "--basis", "40", "--count", "4"],
        &["evolve", "--model", "paper-example", "--grid", "8:100", "--steps", "20"],
    ];
    for args in commands {
        let a = run(args);
        let b = run(args);
        assert!(a.status.success(), "{args:?}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(a.stderr, b.stderr, "{args:?}");
    }
}
