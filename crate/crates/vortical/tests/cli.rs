//! End-to-end tests of the `vortical` binary: the exit-code contract
//! (0 success / 2 violated / 3 no orbit / 4 config error / 5 integration
//! failure), output formats, and byte-level determinism across runs and
//! worker counts.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vortical"))
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process terminated by signal")
}

const HARMONIC: &str = r#"{
  "version": 1,
  "system": {"name": "harmonic", "u": "0.5*(x^2+y^2)", "psi": "0"}
}"#;

const RESONANT: &str = r#"{
  "version": 1,
  "system": {"name": "resonant-1-2", "u": "(2*x^2+3*y^2)/2", "psi": "x*y"}
}"#;

const QUASI: &str = r#"{
  "version": 1,
  "system": {"name": "quasi-sqrt3", "u": "x^2+y^2", "psi": "x*y"}
}"#;

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_exit_codes_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("harmonic.json");
    write(&cfg, HARMONIC);

    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--state", "1,0,0,1", "--t-end"])
        .arg(format!("{}", 2.0 * PI))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x,y,p,r,H,power");
    let last: Vec<f64> = lines.last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((last[0] - 2.0 * PI).abs() < 1e-9, "final time {}", last[0]);
    assert!((last[1] - 1.0).abs() < 1e-7, "final x {}", last[1]);

    let summary = json(&dir.path().join("simulate_summary.json"));
    assert!(summary["energy_balance_residual"].as_f64().unwrap().abs() < 1e-9);
}

#[test]
fn simulate_singular_system_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("singular.json");
    write(
        &cfg,
        r#"{"version": 1, "system": {"name": "singular", "u": "1/x", "psi": "0"}}"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--state=-1,0,0,0", "--t-end", "10", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 5);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("step size underflow"), "stderr: {stderr}");
}

#[test]
fn malformed_expression_exits_4_with_offset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    write(
        &cfg,
        r#"{"version": 1, "system": {"name": "bad", "u": "x +", "psi": "0"}}"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--state", "1,0,0,1", "--t-end", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("byte 3"), "stderr: {stderr}");
}

#[test]
fn classify_labels_the_three_demo_systems() {
    let dir = tempfile::tempdir().unwrap();
    let horizon = format!("{}", 64.0 * 2.0 * PI);

    for (name, cfg_text, expect_kind) in [
        ("resonant", RESONANT, "periodic"),
        ("quasi", QUASI, "quasi_periodic"),
        ("harmonic", HARMONIC, "periodic"),
    ] {
        let cfg = dir.path().join(format!("{name}.json"));
        write(&cfg, cfg_text);
        let out_dir = dir.path().join(name);
        let out = bin()
            .args(["classify", "--config"])
            .arg(&cfg)
            .args(["--state", "1,0,0,2", "--t-end", &horizon, "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let doc = json(&out_dir.join("classification.json"));
        assert_eq!(doc["label"]["kind"], expect_kind, "{name}: {doc}");
        if name == "resonant" {
            let period = doc["label"]["period"].as_f64().unwrap();
            assert!((period - 2.0 * PI).abs() < 1e-3, "T = {period}");
            assert_eq!(doc["label"]["m"], 2);
            assert_eq!(doc["label"]["n"], 1);
        }
        if name == "harmonic" {
            assert_eq!(doc["label"]["m"], 1);
            assert_eq!(doc["label"]["n"], 1);
        }
    }
}

#[test]
fn find_orbit_writes_the_orbit_document() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("resonant.json");
    write(&cfg, RESONANT);
    let out = bin()
        .args(["find-orbit", "--config"])
        .arg(&cfg)
        .args(["--state", "1,0,0,2", "--seed-period", "6.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("orbit.json"));
    assert!((doc["period"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-8);
    let curve_csv = fs::read_to_string(dir.path().join("orbit_curve.csv")).unwrap();
    assert!(curve_csv.starts_with("x,y\n"));
    assert_eq!(curve_csv.lines().count(), 1 + doc["curve"].as_array().unwrap().len());
    assert!(doc["closure_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(doc["self_intersecting"], true);
    assert_eq!(doc["label"]["kind"], "periodic");
    let curve = doc["curve"].as_array().unwrap();
    assert!(curve.len() >= 1024);
    let first = curve.first().unwrap();
    let last = curve.last().unwrap();
    assert_eq!(first, last, "stored polyline closes exactly");
}

#[test]
fn verify_exit_0_when_the_invariant_holds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("resonant.json");
    write(&cfg, RESONANT);
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--state", "1,0,0,2", "--seed-period", "6.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("verify.json"));
    assert_eq!(doc["report"]["holds"], true);
    let i_time = doc["report"]["time_integral"].as_f64().unwrap();
    let n_time = doc["report"]["time_normalizer"].as_f64().unwrap();
    assert!(i_time.abs() <= 1e-6 * n_time.max(1e-12));
}

#[test]
fn verify_exit_3_for_a_quasi_periodic_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quasi.json");
    write(&cfg, QUASI);
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--state", "1,0,0,1", "--seed-period", "6.3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 3, "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn verify_exit_2_when_a_sloppy_orbit_breaks_the_invariant() {
    // Loosened tolerances accept an orbit with closure ~1e-2; on such a
    // pseudo-orbit the time form no longer vanishes and the verdict flips.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sloppy.json");
    write(
        &cfg,
        r#"{
  "version": 1,
  "system": {"name": "sloppy-resonant", "u": "(2*x^2+3*y^2)/2", "psi": "x*y"},
  "integrator": {"rtol": 5e-3, "atol": 1e-4},
  "orbit_tolerance": 1e-2
}"#,
    );
    let out = bin()
        .args(["verify", "--config"])
        .arg(&cfg)
        .args(["--state", "1.05,0,0.1,1.9", "--seed-period", "6.2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&dir.path().join("verify.json"));
    assert_eq!(doc["report"]["holds"], false);
    let i_time = doc["report"]["time_integral"].as_f64().unwrap();
    assert!(i_time != 0.0, "violated report carries the nonzero time form");
}

#[test]
fn scan_is_deterministic_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "version": 1,
  "system": {{"name": "family", "u": "(a*x^2+b*y^2)/2", "psi": "g*x*y",
              "params": {{"a": 2.0, "b": 3.0, "g": 1.0}}}},
  "scan": {{
    "state": [1.0, 0.0, 0.0, 2.0],
    "horizon": {},
    "axes": [{{"target": "param:g", "min": 0.5, "max": 1.5, "count": 11}}]
  }}
}}"#,
            64.0 * 2.0 * PI
        ),
    );

    let run = |workers: &str, out_name: &str| -> Vec<u8> {
        let out_dir = dir.path().join(out_name);
        let out = bin()
            .args(["scan", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out_dir)
            .env("VORTICAL_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
        fs::read(out_dir.join("scan.csv")).unwrap()
    };

    let serial = run("1", "serial");
    let parallel = run("4", "parallel");
    let again = run("4", "again");
    assert_eq!(serial, parallel, "scan output depends on the worker count");
    assert_eq!(parallel, again, "scan output differs between identical runs");

    let text = String::from_utf8(serial).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 12, "header + 11 rows");
    assert!(lines[0].starts_with("param_g,status,label,m,n,period,"));
    // g = 1 is the 1:2 resonant member; frequencies sqrt(2-g), sqrt(3+g).
    let resonant_row: Vec<&str> = lines[6].split(',').collect();
    assert_eq!(resonant_row[1], "ok");
    assert_eq!(resonant_row[2], "periodic");
    assert_eq!((resonant_row[3], resonant_row[4]), ("2", "1"));
    assert_eq!(*resonant_row.last().unwrap(), "holds");
    let period: f64 = resonant_row[5].parse().unwrap();
    assert!((period - 2.0 * PI).abs() < 1e-3);
    // Neighbouring cells have irrational frequency ratios.
    let quasi_row: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(quasi_row[2], "quasi_periodic");
    assert_eq!(*quasi_row.last().unwrap(), "");
}

#[test]
fn scan_records_singular_cells_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    write(
        &cfg,
        r#"{
  "version": 1,
  "system": {"name": "scaled", "u": "(x^2+y^2)/(2*g)", "psi": "0", "params": {"g": 1.0}},
  "scan": {
    "state": [1.0, 0.0, 0.0, 1.0],
    "horizon": 150.0,
    "axes": [{"target": "param:g", "min": 0.0, "max": 1.0, "count": 2}]
  }
}"#,
    );
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["scan", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].contains("error:"), "singular cell row: {}", lines[1]);
    let good: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(good[1], "ok", "healthy cell intact: {}", lines[2]);
}

#[test]
fn single_cell_scan_produces_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    write(
        &cfg,
        &format!(
            r#"{{
  "version": 1,
  "system": {{"name": "harmonic", "u": "0.5*(x^2+y^2)", "psi": "0"}},
  "scan": {{
    "state": [1.0, 0.0, 0.0, 1.0],
    "horizon": {},
    "axes": [{{"target": "state:x", "min": 1.0, "max": 1.0, "count": 1}}]
  }}
}}"#,
            64.0 * 2.0 * PI
        ),
    );
    let out_dir = dir.path().join("out");
    let out = bin().args(["scan", "--config"]).arg(&cfg).arg("--out").arg(&out_dir).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("scan.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn decompose_round_trip_and_error_paths() {
    use vortical::expr::ScalarField;
    use vortical::helmholtz::{compose, write_field_csv, GridGeometry};

    let dir = tempfile::tempdir().unwrap();
    let g = GridGeometry {
        x_min: 0.0,
        x_max: 2.0 * PI,
        y_min: 0.0,
        y_max: 2.0 * PI,
        nx: 64,
        ny: 64,
        periodic: true,
    };
    let u = ScalarField::parse_simple("sin(x)*sin(y)").unwrap();
    let psi = ScalarField::parse_simple("cos(x)+cos(y)").unwrap();
    let field = compose(&u, &psi, g).unwrap();
    let grid_path = dir.path().join("field.csv");
    {
        let mut buf = Vec::new();
        write_field_csv(&field, &mut buf).unwrap();
        fs::write(&grid_path, buf).unwrap();
    }

    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["decompose", "--input"])
        .arg(&grid_path)
        .args(["--mode", "periodic", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let doc = json(&out_dir.join("decomposition.json"));
    assert!(doc["recomposition_residual"].as_f64().unwrap() <= 1e-6);
    assert!(out_dir.join("u_grid.csv").exists());
    assert!(out_dir.join("psi_grid.csv").exists());

    // Zero field: zero outputs.
    let zero_path = dir.path().join("zero.csv");
    {
        let zero = vortical::helmholtz::GridField::new(g, vec![0.0; g.len()], vec![0.0; g.len()])
            .unwrap();
        let mut buf = Vec::new();
        write_field_csv(&zero, &mut buf).unwrap();
        fs::write(&zero_path, buf).unwrap();
    }
    let zero_out = dir.path().join("zero_out");
    let out = bin()
        .args(["decompose", "--input"])
        .arg(&zero_path)
        .args(["--mode", "periodic", "--out"])
        .arg(&zero_out)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let doc = json(&zero_out.join("decomposition.json"));
    assert_eq!(doc["recomposition_residual"].as_f64().unwrap(), 0.0);

    // Ragged CSV: exit 4.
    let ragged = dir.path().join("ragged.csv");
    let mut text = fs::read_to_string(&grid_path).unwrap();
    text.push_str("1.0,2.0,3.0,4.0\n");
    fs::write(&ragged, text).unwrap();
    let out = bin()
        .args(["decompose", "--input"])
        .arg(&ragged)
        .args(["--mode", "periodic", "--out"])
        .arg(dir.path().join("ragged_out"))
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
}

#[test]
fn verify_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("resonant.json");
    write(&cfg, RESONANT);
    let run = |name: &str| -> Vec<u8> {
        let out_dir = dir.path().join(name);
        let out = bin()
            .args(["verify", "--config"])
            .arg(&cfg)
            .args(["--state", "1,0,0,2", "--seed-period", "6.2", "--out"])
            .arg(&out_dir)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
        fs::read(out_dir.join("verify.json")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn demo_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().arg("demo").arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for f in [
        "demo_harmonic.json",
        "demo_resonant.json",
        "demo_quasiperiodic.json",
        "verify.json",
    ] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("invariant holds"), "stdout: {stdout}");
}

#[test]
fn unknown_config_keys_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.json");
    write(
        &cfg,
        r#"{"version": 1, "system": {"name": "d", "u": "x", "psi": "0"}, "integartor": {}}"#,
    );
    let out = bin()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .args(["--state", "0,0,0,0", "--t-end", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 4);
}

#[test]
fn usage_errors_exit_4_and_help_exits_0() {
    let out = bin().args(["simulate", "--state", "oops"]).output().unwrap();
    assert_eq!(code(&out), 4);
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("simulate"));
}
