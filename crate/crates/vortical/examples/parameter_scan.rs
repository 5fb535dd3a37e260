//! Sweep a coupling parameter through a resonance: the family
//! U = (a x^2 + b y^2)/2, psi = g x y decouples into oscillators with
//! frequencies sqrt(a - g) and sqrt(b + g), so g = 1 (with a = 2, b = 3)
//! hits the 1:2 resonance exactly.
//!
//! Run with `cargo run --example parameter_scan`.

use std::f64::consts::PI;

use vortical::config::ScanConfig;

fn main() {
    let config_text = format!(
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
    );
    let scan: ScanConfig = serde_json::from_str(&config_text).unwrap();
    scan.validate().unwrap();

    let dir = std::env::temp_dir().join("vortical_scan_example");
    let path = vortical::commands::cmd_scan(&scan, &dir, vortical::commands::worker_count())
        .unwrap();
    println!("scan written to {}\n", path.display());

    let text = std::fs::read_to_string(&path).unwrap();
    for line in text.lines() {
        let cells: Vec<&str> = line.split(',').collect();
        // g, status, label, m, n, period, closure, time, line, area, verdict
        if cells[0] == "param_g" {
            println!("{:>8}  {:<14} {:>4} {:>10}  verdict", "g", "label", "m:n", "period");
            continue;
        }
        let g: f64 = cells[0].parse().unwrap();
        let label = cells[2];
        let mn = if cells[3].is_empty() {
            "-".to_string()
        } else {
            format!("{}:{}", cells[4], cells[3])
        };
        let period = if cells[5].is_empty() {
            "-".to_string()
        } else {
            format!("{:.6}", cells[5].parse::<f64>().unwrap())
        };
        println!("{g:>8.2}  {label:<14} {mn:>4} {period:>10}  {}", cells[10]);
    }
}
