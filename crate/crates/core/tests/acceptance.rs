//! Acceptance suite: one pass/fail line per criterion, then a single assertion.
//!
//! Runtime budgets are part of each criterion and are checked against wall time.

use std::io::Write;
use std::time::{Duration, Instant};

use num_complex::Complex64;

use nlsist::asymptotics::{asymptotic_on_grid, evolve_linear};
use nlsist::estimates::{dyadic_times, fit_decay, m_infinity_probe, resolvent_suite, LgProbe, Quantity};
use nlsist::experiment::{EXPONENT_WINDOW, MEDIAN_FACTOR, MIN_ERROR_EXPONENT, M_INFINITY_SLOPE};
use nlsist::pde;
use nlsist::perturbation::{evolve_perturbed, r_infinity, EvolveOptions, PerturbationSpec, Profile, TrajectoryRecord};
use nlsist::rhp::{reconstruct_on_grid, RhpConfig};
use nlsist::scattering::{direct_scattering, scattering_map};
use nlsist::{ComplexField, Grid1D, ReflectionData, Result};

struct Verdict {
    pass: bool,
    detail: String,
}

fn sech(amp: f64, grid: Grid1D) -> ComplexField {
    ComplexField::from_real_fn(grid, |x| amp / x.cosh()).unwrap()
}

fn gaussian_spec(epsilon: f64, l: f64) -> PerturbationSpec {
    PerturbationSpec::new(epsilon, l, Profile::Gaussian { scale: 1.0 }).unwrap()
}

fn perturbed_r0() -> ReflectionData {
    let xg = Grid1D::from_range(-30.0, 30.0, 4096).unwrap();
    let zg = Grid1D::from_range(-10.0, 10.0, 1024).unwrap();
    direct_scattering(&sech(0.3, xg), &zg).unwrap()
}

fn perturbed_trajectory(l: f64) -> Result<TrajectoryRecord> {
    evolve_perturbed(&perturbed_r0(), &gaussian_spec(1e-3, l), 8.0, 64, &EvolveOptions::default())
}

fn unitarity() -> Result<Verdict> {
    let q0 = sech(0.5, Grid1D::from_range(-30.0, 30.0, 4096)?);
    let entries = scattering_map(&q0, &Grid1D::from_range(-8.0, 8.0, 1024)?)?;
    let defect = entries.unitarity_defect();
    Ok(Verdict { pass: defect <= 1e-8, detail: format!("max ||a|²-|b|²-1| = {defect:.2e}") })
}

fn roundtrip() -> Result<Verdict> {
    let xg = Grid1D::from_range(-30.0, 30.0, 4096)?;
    let q0 = sech(0.5, xg);
    let r = direct_scattering(&q0, &Grid1D::from_range(-8.0, 8.0, 1024)?)?;
    let q = reconstruct_on_grid(&r, 0.0, &xg, RhpConfig::default())?.q;
    let rel = q.sub(&q0)?.l2_norm() / q0.l2_norm();
    Ok(Verdict { pass: rel <= 1e-4, detail: format!("relative L² error {rel:.2e}") })
}

fn integrable_cross_validation() -> Result<Verdict> {
    let pg = Grid1D::periodic(-128.0, 128.0, 4096)?;
    let q0 = sech(0.5, pg);
    let r = direct_scattering(&sech(0.5, Grid1D::from_range(-30.0, 30.0, 4096)?), &Grid1D::from_range(-12.0, 12.0, 1536)?)?;
    let spec = gaussian_spec(0.0, 4.0);
    // Compare on oracle nodes with |x| <= 20.
    let lo = pg.nearest_index(-20.0).unwrap();
    let hi = pg.nearest_index(20.0).unwrap();
    let xg = Grid1D::new(pg.node(lo), pg.spacing(), hi - lo + 1)?;
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    for t in [1.0, 5.0] {
        let q_ist = reconstruct_on_grid(&evolve_linear(&r, t), 0.0, &xg, RhpConfig::default())?.q;
        let q_pde = pde::run(&q0, &spec, t, 1e-3)?.state.q;
        let err = q_ist.values().iter().zip(&q_pde.values()[lo..=hi]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(err);
        parts.push(format!("t={t}: {err:.2e}"));
    }
    Ok(Verdict { pass: worst <= 1e-3, detail: format!("sup |q_ist - q_pde| {}", parts.join(", ")) })
}

fn asymptotic_rate() -> Result<Verdict> {
    let zg = Grid1D::from_range(-5.0, 5.0, 16384)?;
    let r = ReflectionData::new(ComplexField::from_fn(zg, |z| Complex64::from_polar(0.5 * (-z * z).exp(), 0.4 * z))?)?;
    let times = [50.0, 100.0, 200.0, 400.0];
    let mut errs = Vec::new();
    for &t in &times {
        let xg = Grid1D::from_range(-2.0 * t, 2.0 * t, 41)?;
        let q = reconstruct_on_grid(&r, t, &xg, RhpConfig::default())?.q;
        let qas = asymptotic_on_grid(&r, t, &xg)?;
        errs.push(q.sub(&qas)?.sup_norm());
    }
    let scaled: Vec<f64> = times.iter().zip(&errs).map(|(t, e)| t.powf(0.75) * e).collect();
    let mut sorted = scaled.clone();
    sorted.sort_by(f64::total_cmp);
    let median = 0.5 * (sorted[1] + sorted[2]);
    let banded = scaled.iter().all(|s| *s <= MEDIAN_FACTOR * median && s * MEDIAN_FACTOR >= median);
    let exponent = fit_decay(&times, &errs)?.exponent;
    Ok(Verdict {
        pass: banded && exponent >= MIN_ERROR_EXPONENT,
        detail: format!(
            "t^(3/4)·err = [{}], median {median:.3e}, fitted exponent {exponent:.3}",
            scaled.iter().map(|s| format!("{s:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    })
}

fn perturbed_bounds(traj: &TrajectoryRecord) -> Verdict {
    let r0 = &traj.snapshots[0];
    let (rho, eta) = (r0.rho(), r0.eta());
    let sup = traj.sup_norms.iter().copied().fold(0.0, f64::max);
    let h11 = traj.h11_norms.iter().copied().fold(0.0, f64::max);
    Verdict {
        pass: traj.times.len() == 65 && sup < 0.5 * (1.0 + rho) && h11 < 2.0 * eta,
        detail: format!(
            "{} steps, max sup {sup:.6} < {:.6}, max H11 {h11:.6} < {:.6}",
            traj.times.len() - 1,
            0.5 * (1.0 + rho),
            2.0 * eta
        ),
    }
}

fn cauchy_rate(l: f64, traj: &TrajectoryRecord) -> Result<(bool, String)> {
    let rinf = r_infinity(traj)?;
    let target = l / 2.0 - 1.5;
    let rate = rinf.rate().unwrap_or(f64::NAN);
    let diffs: Vec<String> = rinf.differences.iter().map(|(t, d)| format!("{t}:{d:.3e}")).collect();
    Ok((
        (rate - target).abs() <= EXPONENT_WINDOW,
        format!("l={l}: slope {rate:.3} vs {target} [{}]", diffs.join(" ")),
    ))
}

fn pde_consistency() -> Result<Verdict> {
    let pg = Grid1D::periodic(-64.0, 64.0, 4096)?;
    let q0 = sech(0.3, pg);
    let zg = Grid1D::from_range(-10.0, 10.0, 512)?;
    let spec = gaussian_spec(1e-3, 4.0);
    let r0 = direct_scattering(&q0, &zg)?;
    let traj = evolve_perturbed(&r0, &spec, 1.0, 8, &EvolveOptions::default())?;
    let q1 = pde::run(&q0, &spec, 1.0, 1e-3)?.state.q;
    let r_pde = evolve_linear(&direct_scattering(&q1, &zg)?, -1.0);
    let err = r_pde.r().sub(traj.last().r())?.l2_norm();
    Ok(Verdict { pass: err <= 1e-3, detail: format!("L² distance {err:.2e}") })
}

fn lg_decay() -> Result<Verdict> {
    let pg = Grid1D::periodic(-1024.0, 1024.0, 16384)?;
    let probe = LgProbe { q0: sech(0.3, pg), spec: gaussian_spec(1e-3, 4.0), times: dyadic_times(1.0, 64.0), dt: 0.01 };
    let data = probe.measure()?;
    let ts: Vec<f64> = data.iter().map(|d| d.0).collect();
    let l2 = fit_decay(&ts, &data.iter().map(|d| d.1).collect::<Vec<_>>())?.exponent;
    let l1 = fit_decay(&ts, &data.iter().map(|d| d.2).collect::<Vec<_>>())?.exponent;
    let target = Quantity::LgL2.target_exponent(4.0);
    Ok(Verdict {
        pass: (l2 - target).abs() <= EXPONENT_WINDOW && (l1 - target).abs() <= EXPONENT_WINDOW,
        detail: format!("L² exponent {l2:.3}, L¹ exponent {l1:.3}, target {target}"),
    })
}

fn m_infinity() -> Result<Verdict> {
    let r = direct_scattering(&sech(0.3, Grid1D::from_range(-30.0, 30.0, 4096)?), &Grid1D::from_range(-10.0, 10.0, 16384)?)?;
    let probe = m_infinity_probe(&r, &[1.0, 4.0, 16.0, 64.0], &[0.0, 2.0, 4.0], RhpConfig::default())?;
    let per: Vec<String> = probe.per_time.iter().map(|(t, m)| format!("{t}:{m:.6}")).collect();
    Ok(Verdict {
        pass: probe.slope <= M_INFINITY_SLOPE,
        detail: format!("slope {:.4}, M∞ {:.6} [{}]", probe.slope, probe.m_infinity, per.join(" ")),
    })
}

fn resolvent() -> Result<Verdict> {
    let cases = resolvent_suite()?;
    let failing: Vec<String> = cases
        .iter()
        .filter(|c| !c.within_bound())
        .map(|c| format!("{} at (x={}, t={}): {:.4} vs {:.4}", c.label, c.x, c.t, c.estimate.norm, c.estimate.bound))
        .collect();
    let worst = cases.iter().map(|c| c.estimate.norm / c.estimate.bound).fold(0.0, f64::max);
    Ok(Verdict {
        pass: failing.is_empty(),
        detail: format!("{} cases, largest norm/bound {worst:.4}{}", cases.len(), if failing.is_empty() { String::new() } else { format!("; failing: {}", failing.join("; ")) }),
    })
}

fn mass_conservation() -> Result<Verdict> {
    let pg = Grid1D::periodic(-128.0, 128.0, 2048)?;
    let q0 = sech(0.5, pg);
    let mut worst: f64 = 0.0;
    for eps in [0.0, 1e-3] {
        worst = worst.max(pde::run(&q0, &gaussian_spec(eps, 4.0), 10.0, 0.01)?.mass_drift());
    }
    Ok(Verdict { pass: worst <= 1e-8, detail: format!("max mass drift {worst:.2e}") })
}

/// Written to the raw stderr handle so the lines show without `--nocapture`.
fn report(line: String) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{line}");
}

struct Line {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
    budget: Duration,
}

fn record(lines: &mut Vec<Line>, id: usize, name: &'static str, budget_s: u64, f: impl FnOnce() -> Result<Verdict>) {
    let start = Instant::now();
    let (pass, detail) = match f() {
        Ok(v) => (v.pass, v.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    push(lines, id, name, budget_s, pass, detail, start.elapsed());
}

fn push(lines: &mut Vec<Line>, id: usize, name: &'static str, budget_s: u64, pass: bool, detail: String, elapsed: Duration) {
    let budget = Duration::from_secs(budget_s);
    let line = Line { id, name, pass: pass && elapsed <= budget, detail, elapsed, budget };
    report(format!(
        "criterion {:>2} {:<34} {} | {} | {:.1}s of {}s",
        line.id,
        line.name,
        if line.pass { "PASS" } else { "FAIL" },
        line.detail,
        line.elapsed.as_secs_f64(),
        line.budget.as_secs()
    ));
    lines.push(line);
}

#[test]
fn acceptance_criteria() {
    let mut lines = Vec::new();
    record(&mut lines, 1, "unitarity", 60, unitarity);
    record(&mut lines, 2, "roundtrip", 300, roundtrip);
    record(&mut lines, 3, "integrable cross-validation", 600, integrable_cross_validation);
    record(&mut lines, 4, "asymptotic rate", 1200, asymptotic_rate);

    // Criteria 5 and 6 (l = 4) share the l = 4 trajectory; its cost is charged to both.
    let start = Instant::now();
    let traj4 = perturbed_trajectory(4.0);
    let t4 = start.elapsed();
    match &traj4 {
        Ok(traj) => {
            let v = perturbed_bounds(traj);
            push(&mut lines, 5, "perturbed bounds", 1800, v.pass, v.detail, t4);
        }
        Err(e) => push(&mut lines, 5, "perturbed bounds", 1800, false, format!("error: {e}"), t4),
    }
    let start = Instant::now();
    let traj5 = perturbed_trajectory(5.0);
    let t5 = start.elapsed();
    let mut pass6 = true;
    let mut details = Vec::new();
    for (l, traj) in [(4.0, &traj4), (5.0, &traj5)] {
        match traj.as_ref().map_err(|e| e.to_string()).and_then(|t| cauchy_rate(l, t).map_err(|e| e.to_string())) {
            Ok((p, d)) => {
                pass6 &= p;
                details.push(d);
            }
            Err(e) => {
                pass6 = false;
                details.push(format!("l={l}: error: {e}"));
            }
        }
    }
    // Budget is per l; charge the slower of the two runs.
    push(&mut lines, 6, "Cauchy rate", 2700, pass6, details.join("; "), t4.max(t5));

    record(&mut lines, 7, "PDE consistency of perturbed flow", 1800, pde_consistency);
    record(&mut lines, 8, "L̃G decay", 900, lg_decay);
    record(&mut lines, 9, "uniform M∞", 900, m_infinity);
    record(&mut lines, 10, "resolvent bound", 600, resolvent);
    record(&mut lines, 11, "oracle mass conservation", 120, mass_conservation);

    let failed: Vec<usize> = lines.iter().filter(|l| !l.pass).map(|l| l.id).collect();
    report(format!("{} of {} criteria pass", lines.len() - failed.len(), lines.len()));
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
