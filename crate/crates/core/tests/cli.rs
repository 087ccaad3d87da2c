use std::path::Path;
use std::process::Command;

use nlsist::experiment::{read_bound_rows, CompareReport, ExperimentConfig};
use nlsist::{ComplexField, Grid1D};

fn nlsist(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nlsist")).args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_sech(path: &Path, amp: f64, min: f64, max: f64, n: usize) {
    let g = Grid1D::from_range(min, max, n).unwrap();
    ComplexField::from_real_fn(g, |x| amp / x.cosh()).unwrap().write_csv(path).unwrap();
}

#[test]
fn scatter_then_reconstruct_recovers_the_potential() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.csv");
    let r = dir.path().join("r.csv");
    let out = dir.path().join("q_back.csv");
    write_sech(&q, 0.5, -30.0, 30.0, 2048);
    let s = nlsist(&["scatter", "--input", p(&q), "--zmin", "-10", "--zmax", "10", "--nz", "512", "--out", p(&r)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let s = nlsist(&["reconstruct", "--r", p(&r), "--t", "0", "--xmin", "-3", "--xmax", "3", "--nx", "13", "--out", p(&out)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let back = ComplexField::read_csv(&out).unwrap();
    for (x, v) in back.grid().nodes().zip(back.values()) {
        assert!((v - 0.5 / x.cosh()).norm() < 1e-4, "x = {x}: {v}");
    }
    let residuals = std::fs::read_to_string(dir.path().join("q_back.residuals.csv")).unwrap();
    let mut lines = residuals.lines();
    assert_eq!(lines.next(), Some("x,residual,iterations"));
    assert_eq!(lines.count(), 13);
}

#[test]
fn evolve_and_asymptote_write_fields() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    let g = Grid1D::from_range(-5.0, 5.0, 512).unwrap();
    ComplexField::from_real_fn(g, |z| 0.5 * (-z * z).exp()).unwrap().write_csv(&r).unwrap();
    let rt = dir.path().join("rt.csv");
    assert!(nlsist(&["evolve", "--r", p(&r), "--t", "2", "--out", p(&rt)]).status.success());
    let evolved = ComplexField::read_csv(&rt).unwrap();
    assert_eq!(evolved.len(), 512);
    let qas = dir.path().join("qas.csv");
    let s = nlsist(&["asymptote", "--r", p(&r), "--t", "100", "--xmin", "-40", "--xmax", "40", "--nx", "33", "--out", p(&qas)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let q = ComplexField::read_csv(&qas).unwrap();
    assert_eq!(q.len(), 33);
    assert!(q.sup_norm() > 0.0 && q.sup_norm() < 0.1);
    // Below t_min the profile is undefined.
    let s = nlsist(&["asymptote", "--r", p(&r), "--t", "0.5", "--out", p(&qas)]);
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn pde_writes_state_and_mass_trace() {
    let dir = tempfile::tempdir().unwrap();
    let q = dir.path().join("q.csv");
    write_sech(&q, 0.5, -40.0, 40.0 - 80.0 / 512.0, 512);
    let out = dir.path().join("qT.csv");
    let mass = dir.path().join("mass.csv");
    let s = nlsist(&["pde", "--q0", p(&q), "--T", "1", "--dt", "0.01", "--out", p(&out), "--mass-trace", p(&mass)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let trace = std::fs::read_to_string(&mass).unwrap();
    let masses: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(masses.len(), 101);
    assert!(masses.iter().all(|m| (m - masses[0]).abs() < 1e-12));
    assert!(s.status.success());
    // Too large a step is rejected, not silently clipped.
    let s = nlsist(&["pde", "--q0", p(&q), "--T", "1", "--dt", "5", "--out", p(&out)]);
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn perturb_writes_snapshots_and_norms() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r.csv");
    let g = Grid1D::from_range(-8.0, 8.0, 128).unwrap();
    ComplexField::from_real_fn(g, |z| 0.3 * (-z * z / 2.0).exp()).unwrap().write_csv(&r).unwrap();
    let traj = dir.path().join("traj");
    let s = nlsist(&["perturb", "--r0", p(&r), "--epsilon", "0.01", "--T", "0.5", "--steps", "2", "--out", p(&traj)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    for k in 0..=2 {
        assert!(traj.join(format!("r_{k:05}.csv")).exists());
    }
    let norms = std::fs::read_to_string(traj.join("norms.csv")).unwrap();
    let mut lines = norms.lines();
    assert_eq!(lines.next(), Some("t,h11,sup,f_h11"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn compare_echoes_config_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "initial": {"kind": "sech", "amplitude": 0.0},
            "x": {"min": -5, "max": 5, "count": 16},
            "z": {"min": -5, "max": 5, "count": 64},
            "pde_x": {"min": -10, "max": 10, "count": 64},
            "times": [1, 2, 4]
        }"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let s = nlsist(&["compare", "--config", p(&cfg_path), "--out", p(&out)]);
    assert!(s.status.success(), "{}", String::from_utf8_lossy(&s.stderr));
    let echoed = ExperimentConfig::load(out.join("config.json")).unwrap();
    assert_eq!(echoed.times, vec![1.0, 2.0, 4.0]);
    assert_eq!(echoed.pde_dt, ExperimentConfig::default().pde_dt);
    let rows = CompareReport::read_csv(out.join("compare.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.asymptotic_error == 0.0 && r.pde_error == 0.0));
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(&cfg_path, r#"{"rhp": {"tol": -1}}"#).unwrap();
    let s = nlsist(&["compare", "--config", p(&cfg_path)]);
    assert_eq!(s.status.code(), Some(1));
    let s = nlsist(&["scatter", "--input", "/no/such.csv", "--out", p(&dir.path().join("r.csv"))]);
    assert_eq!(s.status.code(), Some(1));
    let s = nlsist(&["verify-bounds", "--suite", "nonsense", "--out", "x.csv"]);
    assert_eq!(s.status.code(), Some(1));
}

#[test]
fn verify_bounds_minf_suite_reports_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "initial": {"kind": "gaussian_reflection", "amplitude": 0.5, "drift": 0.2},
            "z": {"min": -6, "max": 6, "count": 512},
            "times": [1, 2, 4]
        }"#,
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let s = nlsist(&["--threads", "2", "verify-bounds", "--suite", "minf", "--config", p(&cfg_path), "--out", p(&out)]);
    assert_eq!(s.status.code(), Some(0), "{}", String::from_utf8_lossy(&s.stderr));
    let rows = read_bound_rows(&out).unwrap();
    assert_eq!(rows.iter().map(|r| r.t).collect::<Vec<_>>(), vec![1.0, 2.0, 4.0]);
    assert!(rows.iter().all(|r| r.quantity == "M_inf" && r.pass && r.value >= 1.0));
    assert!(dir.path().join("config.json").exists());
}
