use std::path::{Path, PathBuf};
use std::process::Command;

use tempfile::TempDir;

const EXAMPLE1: &str = "model.tail.kind = coulomb\nmodel.tail.strength = 1.0\n";

fn brink(command: &str, config: &str, dir: &Path, extra: &[&str]) -> (i32, PathBuf) {
    let cfg = dir.join("run.conf");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_brink"))
        .args([
            command,
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .args(extra)
        .env_remove("BRINK_WORKERS")
        .output()
        .unwrap();
    (status.status.code().unwrap(), out)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn solve_writes_results() {
    let dir = TempDir::new().unwrap();
    let (code, out) = brink(
        "solve",
        &format!("model.well_depth = 1.0\n{EXAMPLE1}"),
        dir.path(),
        &[],
    );
    assert_eq!(code, 0);
    let eigen = json(&out.join("eigen.json"));
    assert!(eigen["energy"].as_f64().unwrap() < 0.0);
    assert_eq!(eigen["nodes"], 0);
    let csv = std::fs::read_to_string(out.join("wavefunction.csv")).unwrap();
    assert!(csv.starts_with("r,u,psi,V\n"));
    let rows = csv.lines().count() - 1;
    assert_eq!(rows as u64, eigen["grid"]["n"].as_u64().unwrap());
}

#[test]
fn solve_exit_codes() {
    let dir = TempDir::new().unwrap();
    let (code, _) = brink(
        "solve",
        &format!("model.well_depth = 0.5\n{EXAMPLE1}"),
        dir.path(),
        &[],
    );
    assert_eq!(code, 3);
    let bad = format!("model.well_depth = 1.0\nmodel.well_radius = -1\n{EXAMPLE1}");
    assert_eq!(brink("solve", &bad, dir.path(), &[]).0, 2);
    let cfg = "model.well_depth = 1\nmodel.tail.kind = barrier\nmodel.tail.strength = 2.78\n\
               model.tail.outer_radius = 2\ngrid.r_max = 10\n";
    assert_eq!(brink("solve", cfg, dir.path(), &[]).0, 7);
    let missing = Command::new(env!("CARGO_BIN_EXE_brink"))
        .args([
            "solve",
            "--config",
            dir.path().join("absent.conf").to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(missing.code(), Some(1));
}

#[test]
fn critical_both_writes_discrepancy() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "model.well_depth = 1.0\n{EXAMPLE1}critical.method = both\ncritical.bracket = [0.3, 1.0]\n\
         grid.r_max = 400\ngrid.h = 2e-3\n"
    );
    let (code, out) = brink("critical", &cfg, dir.path(), &[]);
    assert_eq!(code, 0);
    let m = json(&out.join("critical_matching.json"));
    assert_eq!(m["method"], "matching");
    assert!((m["value"].as_f64().unwrap() - 0.634366).abs() < 5e-6);
    assert!(m["bracket_lo"].as_f64().unwrap() < m["bracket_hi"].as_f64().unwrap());
    assert_eq!(
        json(&out.join("critical_bisection.json"))["method"],
        "bisection"
    );
    let d = json(&out.join("critical_discrepancy.json"));
    assert!(d["discrepancy"].as_f64().unwrap() <= 1e-3);
    assert_eq!(json(&out.join("critical.json")), m);
}

#[test]
fn critical_without_transition_exits_4() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("model.well_depth = 1.0\n{EXAMPLE1}critical.bracket = [0.7, 1.0]\n");
    assert_eq!(brink("critical", &cfg, dir.path(), &[]).0, 4);
    let cfg = format!(
        "model.well_depth = 1.0\n{EXAMPLE1}critical.bracket = [0.7, 1.0]\ncritical.method = bisection\n\
         grid.r_max = 200\ngrid.h = 1e-2\n"
    );
    assert_eq!(brink("critical", &cfg, dir.path(), &[]).0, 4);
}

fn envelope_config(b: f64) -> String {
    format!(
        "model.well_depth = 1.0\n{EXAMPLE1}grid.r_max = 400\ngrid.h = 2e-3\n\
         envelope.kind = sqrt\nenvelope.b = {b}\nenvelope.state = critical\n"
    )
}

#[test]
fn envelope_exit_codes_and_outputs() {
    let dir = TempDir::new().unwrap();
    let (code, out) = brink("envelope", &envelope_config(0.9), dir.path(), &[]);
    assert_eq!(code, 0);
    let report = json(&out.join("envelope_report.json"));
    for key in ["spec", "margin", "C_fit", "window_ratios"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    let curve = std::fs::read_to_string(out.join("envelope_curve.csv")).unwrap();
    assert!(curve.starts_with("r,envelope,psi,ratio\n"));

    assert_eq!(
        brink("envelope", &envelope_config(1.2), dir.path(), &[]).0,
        6
    );

    // A state that decays as exp(-sqrt(r)) breaks the b = 0.9 envelope.
    let input = dir.path().join("slow.csv");
    let mut text = String::from("r,u,psi,V\n");
    for i in 0..=4000 {
        let r = i as f64 * 0.1;
        text.push_str(&format!("{r},{u},{u},0\n", u = (-r.sqrt()).exp()));
    }
    std::fs::write(&input, text).unwrap();
    let cfg = format!(
        "model.well_depth = 1.0\n{EXAMPLE1}envelope.kind = sqrt\nenvelope.b = 0.9\n\
         envelope.state = input\nenvelope.input = \"{}\"\n",
        input.display()
    );
    assert_eq!(brink("envelope", &cfg, dir.path(), &[]).0, 5);
}

#[test]
fn ingested_state_gives_the_same_report() {
    let dir = TempDir::new().unwrap();
    let (code, out) = brink("envelope", &envelope_config(0.9), dir.path(), &[]);
    assert_eq!(code, 0);
    let inline = json(&out.join("envelope_report.json"));

    // Export the same critical state through `solve`-style CSV and re-ingest it.
    let solve_dir = TempDir::new().unwrap();
    let cfg = format!("model.well_depth = 1.0\n{EXAMPLE1}grid.r_max = 400\ngrid.h = 2e-3\n");
    let (code, solved) = brink("solve", &cfg, solve_dir.path(), &[]);
    assert_eq!(code, 0);
    let cfg = format!(
        "model.well_depth = 1.0\n{EXAMPLE1}envelope.kind = ab\nenvelope.b = 0.9\n\
         envelope.state = input\nenvelope.input = \"{}\"\nenvelope.binding_energy = {}\n",
        solved.join("wavefunction.csv").display(),
        json(&solved.join("eigen.json"))["binding"]
    );
    let ingest_dir = TempDir::new().unwrap();
    let (code, ingested) = brink("envelope", &cfg, ingest_dir.path(), &[]);
    assert_eq!(code, 0);
    let from_csv = json(&ingested.join("envelope_report.json"));
    let solve_cfg = format!(
        "model.well_depth = 1.0\n{EXAMPLE1}grid.r_max = 400\ngrid.h = 2e-3\n\
         envelope.kind = ab\nenvelope.b = 0.9\nenvelope.state = solve\n"
    );
    let inline_dir = TempDir::new().unwrap();
    let (code, inline_solve) = brink("envelope", &solve_cfg, inline_dir.path(), &[]);
    assert_eq!(code, 0);
    let inline_solved = json(&inline_solve.join("envelope_report.json"));
    assert_eq!(from_csv["window_ratios"], inline_solved["window_ratios"]);
    assert_eq!(from_csv["C_fit"], inline_solved["C_fit"]);
    assert!(inline["verified"].as_bool().unwrap());
}

const SWEEP: &str =
    "model.well_depth = 1.0\nmodel.tail.kind = barrier\nmodel.tail.strength = 2.0\n\
                     model.tail.outer_radius = 2.0\nsweep.parameter = tail_strength\n\
                     sweep.values = [2.0, 2.5, 2.7, 3.0]\ngrid.h = 2e-3\n";

#[test]
fn sweep_is_deterministic_across_worker_counts() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (code_a, out_a) = brink("sweep", SWEEP, a.path(), &["--workers", "1"]);
    let (code_b, out_b) = brink("sweep", SWEEP, b.path(), &["--workers", "4"]);
    assert_eq!((code_a, code_b), (0, 0));
    let mut names: Vec<_> = std::fs::read_dir(&out_a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(names.len() > 3);
    for name in names {
        let x = std::fs::read(out_a.join(&name)).unwrap();
        let y = std::fs::read(out_b.join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
    let table = std::fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("param,E,mean_radius,fit_A,fit_p,status"));
    let statuses: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    // c = 3 lies past the critical barrier height.
    assert_eq!(statuses, ["ok", "ok", "ok", "no_bound_state"]);
    assert!(out_a.join("scaled_0.csv").exists());
    assert!(!out_a.join("scaled_3.csv").exists());
}

#[test]
fn sweep_with_no_success_reports_the_failure() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("model.well_depth = 1.0\n{EXAMPLE1}sweep.parameter = well_depth\nsweep.values = [0.3, 0.5]\n");
    assert_eq!(brink("sweep", &cfg, dir.path(), &["--workers", "2"]).0, 3);
    let bad = format!("model.well_depth = 1.0\n{EXAMPLE1}sweep.parameter = well_depth\nsweep.values = [0.9, 0.8]\n");
    assert_eq!(brink("sweep", &bad, dir.path(), &[]).0, 2);
}

#[test]
fn worker_budget_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, SWEEP).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_brink"))
        .args([
            "sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("o").to_str().unwrap(),
        ])
        .env("BRINK_WORKERS", "0")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}
