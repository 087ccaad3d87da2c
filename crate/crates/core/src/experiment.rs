//! Experiment configuration and the orchestration behind the `compare` and
//! `verify-bounds` commands.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::asymptotic_on_grid;
use crate::error::{Error, Result};
use crate::estimates::{
    fit_decay, m_infinity_probe, resolvent_suite, FProbe, LgProbe, Quantity,
};
use crate::grid::{ComplexField, Grid1D};
use crate::pde;
use crate::perturbation::{PerturbationSpec, Profile};
use crate::reflection::ReflectionData;
use crate::rhp::{reconstruct_on_grid, RhpConfig};
use crate::scattering::direct_scattering;

/// Half-width of the acceptance window around a target exponent.
pub const EXPONENT_WINDOW: f64 = 0.3;
/// Largest admissible log-log growth slope of M∞.
pub const M_INFINITY_SLOPE: f64 = 0.05;
/// Scaled asymptotic errors must stay within this factor of their median.
pub const MEDIAN_FACTOR: f64 = 3.0;
/// Smallest acceptable fitted exponent of the asymptotic error.
pub const MIN_ERROR_EXPONENT: f64 = 0.70;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn grid(&self) -> Result<Grid1D> {
        Grid1D::from_range(self.min, self.max, self.count)
    }

    pub fn periodic(&self) -> Result<Grid1D> {
        Grid1D::periodic(self.min, self.max, self.count)
    }
}

/// Where the data of an experiment comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `q0 = amplitude·sech(x)`.
    Sech { amplitude: f64 },
    /// `r(z) = amplitude·e^{-z²}·e^{i·drift·z}`.
    GaussianReflection { amplitude: f64, drift: f64 },
    PotentialFile { path: PathBuf },
    ReflectionFile { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub initial: InitialData,
    /// Physical grid for scattering and reconstruction.
    pub x: GridSpec,
    pub z: GridSpec,
    /// Periodic grid of the split-step oracle.
    pub pde_x: GridSpec,
    pub pde_dt: f64,
    /// Run the split-step oracle in `compare`.
    pub pde: bool,
    /// Compare on `x = 2t·z0` for these stationary points instead of on `x`.
    pub stationary: Option<GridSpec>,
    pub times: Vec<f64>,
    pub epsilon: f64,
    pub l: f64,
    /// `gaussian:s` or `sech2:s`.
    pub profile: String,
    pub rhp: RhpConfig,
    /// Relative perturbation of `q0` for Δ quantities.
    pub delta: f64,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            initial: InitialData::Sech { amplitude: 0.3 },
            x: GridSpec { min: -30.0, max: 30.0, count: 4096 },
            z: GridSpec { min: -10.0, max: 10.0, count: 1024 },
            pde_x: GridSpec { min: -1024.0, max: 1024.0, count: 16384 },
            pde_dt: 0.01,
            pde: true,
            stationary: None,
            times: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0],
            epsilon: 0.0,
            l: 4.0,
            profile: "gaussian:1.0".into(),
            rhp: RhpConfig::default(),
            delta: 0.05,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Pretty JSON with every default filled in.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Writes the effective config to `dir/config.json`.
    pub fn echo(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        fs::create_dir_all(&dir)?;
        let path = dir.as_ref().join("config.json");
        fs::write(&path, self.to_json()?)?;
        Ok(path)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("x", &self.x), ("z", &self.z), ("pde_x", &self.pde_x)] {
            g.grid().map_err(|e| Error::Config(format!("{name} grid: {e}")))?;
        }
        if let Some(s) = &self.stationary {
            s.grid().map_err(|e| Error::Config(format!("stationary grid: {e}")))?;
        }
        let positive = [
            ("pde_dt", self.pde_dt),
            ("rhp.tol", self.rhp.tol),
            ("delta", self.delta),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::Config("times must be finite and non-negative".into()));
        }
        self.spec()?;
        match &self.initial {
            InitialData::Sech { amplitude } if !amplitude.is_finite() => {
                return Err(Error::Config("sech amplitude must be finite".into()))
            }
            InitialData::GaussianReflection { amplitude, .. } if !(amplitude.abs() < 1.0) => {
                return Err(Error::Domain(format!(
                    "reflection amplitude {amplitude} violates sup |r| < 1"
                )))
            }
            InitialData::PotentialFile { path } | InitialData::ReflectionFile { path } if !path.exists() => {
                return Err(Error::Config(format!("input file {} does not exist", path.display())))
            }
            InitialData::ReflectionFile { path } => {
                ReflectionData::new(ComplexField::read_csv(path)?)?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<PerturbationSpec> {
        PerturbationSpec::new(self.epsilon, self.l, self.profile.parse::<Profile>()?)
    }

    /// `q0` on `grid`, if the data is given as a potential.
    pub fn potential_on(&self, grid: Grid1D) -> Result<Option<ComplexField>> {
        match &self.initial {
            InitialData::Sech { amplitude } => {
                let a = *amplitude;
                Ok(Some(ComplexField::from_real_fn(grid, |x| a / x.cosh())?))
            }
            InitialData::PotentialFile { path } => {
                let q = ComplexField::read_csv(path)?;
                if *q.grid() == grid {
                    Ok(Some(q))
                } else {
                    let it = crate::quadrature::Interpolant::new(&q);
                    let (lo, hi) = (q.grid().origin(), q.grid().last());
                    Ok(Some(ComplexField::from_fn(grid, |x| {
                        if x < lo || x > hi {
                            Complex64::new(0.0, 0.0)
                        } else {
                            it.eval(x)
                        }
                    })?))
                }
            }
            _ => Ok(None),
        }
    }

    /// `r0` on the z-grid.
    pub fn reflection(&self) -> Result<ReflectionData> {
        let zgrid = self.z.grid()?;
        match &self.initial {
            InitialData::GaussianReflection { amplitude, drift } => {
                let (a, d) = (*amplitude, *drift);
                ReflectionData::new(ComplexField::from_fn(zgrid, |z| {
                    Complex64::from_polar(a * (-z * z).exp(), d * z)
                })?)
            }
            InitialData::ReflectionFile { path } => ReflectionData::new(ComplexField::read_csv(path)?),
            _ => {
                let q0 = self.potential_on(self.x.grid()?)?.expect("potential data");
                direct_scattering(&q0, &zgrid)
            }
        }
    }
}

/// One row of the `compare` report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    /// `sup_x |q_ist - q_as|`.
    pub asymptotic_error: f64,
    /// `t^{3/4}·asymptotic_error`.
    pub scaled_error: f64,
    /// `sup_x |q_ist - q_pde|`, NaN when the oracle is off.
    pub pde_error: f64,
}

/// Column order of the compare CSV.
pub const COMPARE_COLUMNS: [&str; 4] = ["t", "asymptotic_error", "scaled_error", "pde_error"];

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// `(t, message)` for every time whose pipeline failed.
    pub failures: Vec<(f64, String)>,
}

impl CompareReport {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CompareRow>> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().ne(COMPARE_COLUMNS) {
            return Err(Error::Parse(format!("unexpected compare columns {headers:?}")));
        }
        r.deserialize().map(|row| row.map_err(Error::from)).collect()
    }

    /// Median of the scaled errors.
    pub fn median_scaled(&self) -> Option<f64> {
        let mut v: Vec<f64> = self.rows.iter().map(|r| r.scaled_error).filter(|v| v.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
    }

    /// Fitted decay exponent of the unscaled error.
    pub fn error_exponent(&self) -> Result<f64> {
        let (ts, es): (Vec<f64>, Vec<f64>) = self.rows.iter().map(|r| (r.t, r.asymptotic_error)).unzip();
        Ok(fit_decay(&ts, &es)?.exponent)
    }

    /// Scaled errors within `MEDIAN_FACTOR` of their median and error exponent
    /// at least `MIN_ERROR_EXPONENT`. `None` when there is nothing to judge.
    pub fn passes(&self) -> Option<bool> {
        if !self.failures.is_empty() {
            return Some(false);
        }
        if self.rows.iter().all(|r| r.asymptotic_error == 0.0) {
            return if self.rows.is_empty() { None } else { Some(true) };
        }
        let median = self.median_scaled()?;
        let banded = self
            .rows
            .iter()
            .all(|r| r.scaled_error <= MEDIAN_FACTOR * median && r.scaled_error * MEDIAN_FACTOR >= median);
        let exponent = self.error_exponent().ok()?;
        Some(banded && exponent >= MIN_ERROR_EXPONENT)
    }
}

fn sup_diff(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    Ok(a.sub(b)?.sup_norm())
}

/// IST reconstruction, asymptotic profile and (optionally) the split-step
/// oracle on the shared t-sweep. A failing time is reported, not fatal.
pub fn compare(cfg: &ExperimentConfig) -> Result<CompareReport> {
    let r0 = cfg.reflection()?;
    let spec = cfg.spec()?;
    let pde_grid = cfg.pde_x.periodic()?;
    let q_pde0 = if cfg.pde { cfg.potential_on(pde_grid)? } else { None };
    let results: Vec<(f64, Result<CompareRow>)> = cfg
        .times
        .par_iter()
        .map(|&t| {
            let row = (|| {
                let xgrid = match &cfg.stationary {
                    Some(s) => Grid1D::from_range(2.0 * t * s.min, 2.0 * t * s.max, s.count)?,
                    None => cfg.x.grid()?,
                };
                let q = reconstruct_on_grid(&r0, t, &xgrid, cfg.rhp)?.q;
                let asymptotic_error = if t > 0.0 {
                    sup_diff(&q, &asymptotic_on_grid(&r0, t, &xgrid)?)?
                } else {
                    f64::NAN
                };
                let pde_error = match &q_pde0 {
                    Some(q0) => {
                        let qt = pde::run(q0, &spec, t, cfg.pde_dt)?.state.q;
                        let it = crate::quadrature::Interpolant::new(&qt);
                        let on_x = ComplexField::from_fn(xgrid, |x| it.eval(x))?;
                        sup_diff(&q, &on_x)?
                    }
                    None => f64::NAN,
                };
                Ok(CompareRow { t, asymptotic_error, scaled_error: t.powf(0.75) * asymptotic_error, pde_error })
            })();
            (t, row)
        })
        .collect();
    let mut report = CompareReport { rows: Vec::new(), failures: Vec::new() };
    for (t, row) in results {
        match row {
            Ok(row) => report.rows.push(row),
            Err(e) => {
                log::error!("compare failed at t = {t}: {e}");
                report.failures.push((t, e.to_string()));
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Ltg,
    Minf,
    Fdecay,
    Resolvent,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ltg" => Ok(Suite::Ltg),
            "minf" => Ok(Suite::Minf),
            "fdecay" => Ok(Suite::Fdecay),
            "resolvent" => Ok(Suite::Resolvent),
            _ => Err(Error::Parse(format!("unknown suite {s:?}"))),
        }
    }
}

/// One row of a `verify-bounds` report.
///
/// For decay quantities `fitted_exponent`/`target_exponent` are the fitted
/// and claimed exponents, repeated on every row of the quantity. For the
/// resolvent suite `value` is the measured norm and `target_exponent` holds
/// the upper bound; `fitted_exponent` is NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub quantity: String,
    pub t: f64,
    pub value: f64,
    pub fitted_exponent: f64,
    pub target_exponent: f64,
    pub pass: bool,
}

pub const BOUND_COLUMNS: [&str; 6] = ["quantity", "t", "value", "fitted_exponent", "target_exponent", "pass"];

pub fn write_bound_rows(rows: &[BoundRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_bound_rows(path: impl AsRef<Path>) -> Result<Vec<BoundRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().ne(BOUND_COLUMNS) {
        return Err(Error::Parse(format!("unexpected report columns {headers:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

fn decay_rows(quantity: Quantity, l: f64, data: &[(f64, f64)]) -> Result<Vec<BoundRow>> {
    let (ts, vs): (Vec<f64>, Vec<f64>) = data.iter().copied().unzip();
    let fit = fit_decay(&ts, &vs)?;
    let target = quantity.target_exponent(l);
    let pass = (fit.exponent - target).abs() <= EXPONENT_WINDOW;
    Ok(data
        .iter()
        .map(|&(t, value)| BoundRow {
            quantity: quantity.name().into(),
            t,
            value,
            fitted_exponent: fit.exponent,
            target_exponent: target,
            pass,
        })
        .collect())
}

fn positive_times(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.times.iter().copied().filter(|&t| t > 0.0).collect()
}

/// Runs one suite of empirical bound checks.
pub fn verify_bounds(suite: Suite, cfg: &ExperimentConfig) -> Result<Vec<BoundRow>> {
    let spec = cfg.spec()?;
    let need_potential = || -> Result<ComplexField> {
        cfg.potential_on(cfg.pde_x.periodic()?)?
            .ok_or_else(|| Error::Config("this suite needs the data as a potential".into()))
    };
    match suite {
        Suite::Ltg => {
            let probe = LgProbe { q0: need_potential()?, spec: spec.clone(), times: positive_times(cfg), dt: cfg.pde_dt };
            let data = probe.measure()?;
            let l2: Vec<(f64, f64)> = data.iter().map(|d| (d.0, d.1)).collect();
            let l1: Vec<(f64, f64)> = data.iter().map(|d| (d.0, d.2)).collect();
            let mut rows = decay_rows(Quantity::LgL2, spec.l, &l2)?;
            rows.extend(decay_rows(Quantity::LgL1, spec.l, &l1)?);
            Ok(rows)
        }
        Suite::Fdecay => {
            let times = positive_times(cfg);
            let mut probe = match cfg.potential_on(cfg.x.grid()?)? {
                Some(q0) => FProbe::from_potential(&q0, &cfg.z.grid()?, cfg.delta, &spec, times)?,
                None => {
                    let r = cfg.reflection()?;
                    let alt = ReflectionData::new(r.r().scale(Complex64::new(1.0 + cfg.delta, 0.0)))?;
                    FProbe { r, r_alt: Some(alt), ygrid: spec.default_ygrid(), spec: spec.clone(), times, rhp: cfg.rhp }
                }
            };
            probe.rhp = cfg.rhp;
            let mut rows = decay_rows(Quantity::FH11, spec.l, &probe.measure(Quantity::FH11)?)?;
            rows.extend(decay_rows(Quantity::DeltaFH11, spec.l, &probe.measure(Quantity::DeltaFH11)?)?);
            Ok(rows)
        }
        Suite::Minf => {
            let r = cfg.reflection()?;
            let probe = m_infinity_probe(&r, &positive_times(cfg), &[0.0, 2.0, 4.0], cfg.rhp)?;
            let pass = probe.slope <= M_INFINITY_SLOPE;
            Ok(probe
                .per_time
                .iter()
                .map(|&(t, value)| BoundRow {
                    quantity: "M_inf".into(),
                    t,
                    value,
                    fitted_exponent: probe.slope,
                    target_exponent: 0.0,
                    pass,
                })
                .collect())
        }
        Suite::Resolvent => Ok(resolvent_suite()?
            .into_iter()
            .map(|c| BoundRow {
                quantity: format!("resolvent[{}; x={}]", c.label, c.x),
                t: c.t,
                value: c.estimate.norm,
                fitted_exponent: f64::NAN,
                target_exponent: c.estimate.bound,
                pass: c.within_bound(),
            })
            .collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_roundtrip_and_validation() {
        let cfg = ExperimentConfig::default();
        let back = ExperimentConfig::from_json(&cfg.to_json().unwrap()).unwrap();
        assert_eq!(back, cfg);
        let partial = ExperimentConfig::from_json(r#"{"epsilon": 0.001, "times": [1, 2]}"#).unwrap();
        assert_eq!(partial.epsilon, 1e-3);
        assert_eq!(partial.z, cfg.z);
        assert!(ExperimentConfig::from_json(r#"{"pde_dt": 0}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"l": 2}"#).is_err());
        assert!(matches!(
            ExperimentConfig::from_json(r#"{"initial": {"kind": "gaussian_reflection", "amplitude": 1.2, "drift": 0}}"#),
            Err(Error::Domain(_))
        ));
        assert!(ExperimentConfig::from_json(r#"{"initial": {"kind": "potential_file", "path": "/no/such/file.csv"}}"#)
            .is_err());
    }

    #[test]
    fn trivial_compare_has_zero_errors() {
        let cfg = ExperimentConfig {
            initial: InitialData::Sech { amplitude: 0.0 },
            x: GridSpec { min: -10.0, max: 10.0, count: 64 },
            z: GridSpec { min: -8.0, max: 8.0, count: 128 },
            pde_x: GridSpec { min: -20.0, max: 20.0, count: 128 },
            times: vec![1.0, 2.0],
            ..Default::default()
        };
        let report = compare(&cfg).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(report.rows.len(), 2);
        for row in &report.rows {
            assert_eq!(row.asymptotic_error, 0.0);
            assert_eq!(row.scaled_error, 0.0);
            assert_eq!(row.pde_error, 0.0);
        }
        assert_eq!(report.passes(), Some(true));
    }

    #[test]
    fn compare_report_csv_is_bit_identical() {
        let rows = vec![
            CompareRow { t: 50.0, asymptotic_error: 2.7e-4, scaled_error: 0.1 + 0.2, pde_error: f64::NAN },
            CompareRow { t: 100.0, asymptotic_error: 1.0 / 3.0, scaled_error: 5e-324, pde_error: 1e300 },
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("compare.csv");
        CompareReport { rows: rows.clone(), failures: vec![] }.write_csv(&path).unwrap();
        let back = CompareReport::read_csv(&path).unwrap();
        let bits = |r: &CompareRow| [r.t, r.asymptotic_error, r.scaled_error, r.pde_error].map(f64::to_bits);
        assert_eq!(back.iter().map(bits).collect::<Vec<_>>(), rows.iter().map(bits).collect::<Vec<_>>());
    }

    #[test]
    fn bound_rows_roundtrip() {
        let rows = vec![BoundRow {
            quantity: "LG_l2".into(),
            t: 4.0,
            value: 0.123456789,
            fitted_exponent: 1.41,
            target_exponent: 1.5,
            pass: true,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        write_bound_rows(&rows, &path).unwrap();
        assert_eq!(read_bound_rows(&path).unwrap(), rows);
    }

    #[test]
    fn acceptance_rule_on_synthetic_rows() {
        let mk = |c: f64| CompareReport {
            rows: [50.0, 100.0, 200.0, 400.0]
                .iter()
                .map(|&t: &f64| {
                    let e = c * t.powf(-0.75);
                    CompareRow { t, asymptotic_error: e, scaled_error: t.powf(0.75) * e, pde_error: f64::NAN }
                })
                .collect(),
            failures: vec![],
        };
        assert_eq!(mk(1e-3).passes(), Some(true));
        let mut bad = mk(1e-3);
        bad.rows[3].asymptotic_error *= 10.0;
        bad.rows[3].scaled_error *= 10.0;
        assert_eq!(bad.passes(), Some(false));
        let mut failed = mk(1e-3);
        failed.failures.push((400.0, "solver failure".into()));
        assert_eq!(failed.passes(), Some(false));
    }
}
