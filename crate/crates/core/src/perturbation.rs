//! The localized perturbation `ε a(x)|q|^l q`, the functional `F` driving the
//! reflection coefficient, and time integration of `dr/dt = ε F(t, r)`.
//!
//! `F(z, t) = ∫ e^{-i(yz - tz²)} [m₋⁻¹ G m₋]₁₂(z; y, t) dy` with
//! `G = -i a|q|^l offdiag(q, -q̄)`. Writing `m₋ = [[A, B], [C, D]]` (unit
//! determinant) the integrand is `G₁₂ D² - G₂₁ B²`.

use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimates::{fit_decay, DecayFit};
use crate::grid::{h_norms, ComplexField, Grid1D};
use crate::matrix::{Mat2, Matrix2Field};
use crate::quadrature::Interpolant;
use crate::reflection::ReflectionData;
use crate::rhp::{phase, RhpConfig, RhpSolver};

/// Profile samples must be below this at the edges of their grid.
pub const PROFILE_EDGE_TOLERANCE: f64 = 1e-10;
/// `a(x)` is treated as zero below this level when choosing the y-grid.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;
pub const DEFAULT_Y_NODES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `e^{-(x/s)²}`
    Gaussian { scale: f64 },
    /// `sech²(x/s)`
    Sech2 { scale: f64 },
    /// Real samples, interpolated locally and zero off their grid.
    Custom(ComplexField),
}

impl Profile {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Gaussian { scale } => (-(x / scale).powi(2)).exp(),
            Profile::Sech2 { scale } => (x / scale).cosh().recip().powi(2),
            Profile::Custom(f) => Interpolant::new(f).eval(x).re,
        }
    }

    pub fn samples(&self, grid: &Grid1D) -> Vec<f64> {
        match self {
            Profile::Custom(f) => {
                let it = Interpolant::new(f);
                grid.nodes().map(|x| it.eval(x).re).collect()
            }
            _ => grid.nodes().map(|x| self.eval(x)).collect(),
        }
    }

    /// Interval outside which `a < SUPPORT_THRESHOLD`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Profile::Gaussian { scale } => {
                let w = scale * (1.0 / SUPPORT_THRESHOLD).ln().sqrt();
                (-w, w)
            }
            Profile::Sech2 { scale } => {
                // sech²(u) < τ once cosh(u) > τ^{-1/2}.
                let w = scale * (1.0 / SUPPORT_THRESHOLD).sqrt().acosh();
                (-w, w)
            }
            Profile::Custom(f) => {
                let vals = f.values();
                let g = f.grid();
                let first = vals.iter().position(|v| v.norm() >= SUPPORT_THRESHOLD);
                let last = vals.iter().rposition(|v| v.norm() >= SUPPORT_THRESHOLD);
                match (first, last) {
                    (Some(i), Some(j)) => {
                        (g.node(i.saturating_sub(1)), g.node((j + 1).min(g.count() - 1)))
                    }
                    _ => (g.origin(), g.last()),
                }
            }
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// `gaussian`, `gaussian:2.0`, `sech2:1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, scale) = match s.split_once(':') {
            Some((n, v)) => {
                let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad profile scale in {s:?}")))?;
                (n.trim(), v)
            }
            None => (s.trim(), 1.0),
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Config(format!("profile scale must be positive, got {scale}")));
        }
        match name {
            "gaussian" => Ok(Profile::Gaussian { scale }),
            "sech2" => Ok(Profile::Sech2 { scale }),
            _ => Err(Error::Parse(format!("unknown profile {name:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub epsilon: f64,
    pub l: f64,
    pub profile: Profile,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec { epsilon: 1e-3, l: 4.0, profile: Profile::Gaussian { scale: 1.0 } }
    }
}

impl PerturbationSpec {
    pub fn new(epsilon: f64, l: f64, profile: Profile) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be finite and non-negative, got {epsilon}")));
        }
        if !(l > 3.0 && l.is_finite()) {
            return Err(Error::Config(format!("l must exceed 3, got {l}")));
        }
        if let Profile::Custom(f) = &profile {
            if f.values().iter().any(|v| v.im != 0.0) {
                return Err(Error::InvalidField("profile samples must be real".into()));
            }
            let edge = f.edge_magnitude();
            if edge > PROFILE_EDGE_TOLERANCE {
                return Err(Error::Truncation { edge, threshold: PROFILE_EDGE_TOLERANCE });
            }
        }
        Ok(PerturbationSpec { epsilon, l, profile })
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        PerturbationSpec { epsilon, ..self.clone() }
    }

    pub fn a(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// `DEFAULT_Y_NODES` nodes across the support of `a`.
    pub fn default_ygrid(&self) -> Grid1D {
        let (lo, hi) = self.profile.support();
        Grid1D::from_range(lo, hi, DEFAULT_Y_NODES).expect("support is a proper interval")
    }

    /// `-i a|q|^l q` and `i a|q|^l q̄` at one point.
    fn g_entries(&self, a: f64, q: Complex64) -> (Complex64, Complex64) {
        let s = a * q.norm().powf(self.l);
        (Complex64::new(0.0, -s) * q, Complex64::new(0.0, s) * q.conj())
    }
}

/// `G(x) = -i a(x)|q|^l offdiag(q, -q̄)`.
pub fn g_term(q: &ComplexField, spec: &PerturbationSpec) -> Matrix2Field {
    let a = spec.profile.samples(q.grid());
    let vals = q.values();
    Matrix2Field::from_fn(*q.grid(), |i, _| {
        let (g12, g21) = spec.g_entries(a[i], vals[i]);
        Mat2::offdiag(g12, g21)
    })
    .expect("finite input gives finite G")
}

#[derive(Debug, Clone)]
pub struct FValue {
    /// `F(·, t)` on the z-grid.
    pub f: ComplexField,
    /// `q(·, t)` on the y-grid, reconstructed from the same solves.
    pub q: ComplexField,
}

/// Evaluates `F` for a fixed z-grid, y-grid and perturbation shape.
#[derive(Debug)]
pub struct FEvaluator {
    solver: RhpSolver,
    ygrid: Grid1D,
    a: Vec<f64>,
    spec: PerturbationSpec,
}

impl FEvaluator {
    pub fn new(zgrid: Grid1D, spec: &PerturbationSpec, ygrid: Grid1D, cfg: RhpConfig) -> Self {
        FEvaluator {
            solver: RhpSolver::new(zgrid, cfg),
            a: spec.profile.samples(&ygrid),
            ygrid,
            spec: spec.clone(),
        }
    }

    pub fn ygrid(&self) -> &Grid1D {
        &self.ygrid
    }

    pub fn zgrid(&self) -> &Grid1D {
        self.solver.grid()
    }

    pub fn eval(&self, t: f64, r: &ReflectionData) -> Result<FValue> {
        let zgrid = *self.solver.grid();
        let nz = zgrid.count();
        let ys: Vec<(usize, f64)> = self.ygrid.nodes().enumerate().collect();
        let hy = self.ygrid.spacing();
        let ny = ys.len();
        let zs: Vec<f64> = zgrid.nodes().collect();

        let parts: Vec<(Vec<Complex64>, Vec<Complex64>)> = ys
            .par_chunks(8)
            .map(|chunk| -> Result<(Vec<Complex64>, Vec<Complex64>)> {
                let mut acc = vec![Complex64::new(0.0, 0.0); nz];
                let mut qs = Vec::with_capacity(chunk.len());
                let mut guess: Option<Vec<Complex64>> = None;
                for &(k, y) in chunk {
                    let sol = self
                        .solver
                        .solve_with_guess(r, y, t, guess.as_deref())
                        .map_err(|e| Error::FEvaluation { t, y, source: Box::new(e) })?;
                    let q = self.solver.reconstruct(&sol);
                    qs.push(q);
                    let (g12, g21) = self.spec.g_entries(self.a[k], q);
                    let w = if k == 0 || k == ny - 1 { 0.5 * hy } else { hy };
                    if g12.norm() > 0.0 {
                        let rho = sol.jump.upper();
                        let m11 = sol.mu.m11.values();
                        let m12 = sol.mu.m12.values();
                        for j in 0..nz {
                            let b = m12[j] - m11[j] * rho[j];
                            let d = m11[j].conj() - m12[j].conj() * rho[j];
                            let e = Complex64::from_polar(w, -phase(zs[j], y, t));
                            acc[j] += e * (g12 * d * d - g21 * b * b);
                        }
                    }
                    guess = Some(sol.unknowns().to_vec());
                }
                Ok((acc, qs))
            })
            .collect::<Result<_>>()?;

        let mut f = vec![Complex64::new(0.0, 0.0); nz];
        let mut q = Vec::with_capacity(ny);
        for (acc, qs) in parts {
            for (fj, aj) in f.iter_mut().zip(acc) {
                *fj += aj;
            }
            q.extend(qs);
        }
        Ok(FValue { f: ComplexField::new(zgrid, f)?, q: ComplexField::new(self.ygrid, q)? })
    }
}

/// `F(·, t)` on the grid of `r`, using default solver settings.
pub fn f_functional(
    t: f64,
    r: &ReflectionData,
    spec: &PerturbationSpec,
    ygrid: &Grid1D,
) -> Result<ComplexField> {
    Ok(FEvaluator::new(*r.grid(), spec, *ygrid, RhpConfig::default()).eval(t, r)?.f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeStepper {
    Rk4,
    /// Fixed-point iteration of `r(t) = r₀ + ε ∫₀ᵗ F(s, r(s)) ds` with the
    /// trapezoid rule in time, until successive sweeps differ by at most `tol`.
    Picard { tol: f64, max_sweeps: usize },
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub stepper: TimeStepper,
    pub ygrid: Option<Grid1D>,
    pub rhp: RhpConfig,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions { stepper: TimeStepper::Rk4, ygrid: None, rhp: RhpConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub snapshots: Vec<ReflectionData>,
    pub h11_norms: Vec<f64>,
    pub sup_norms: Vec<f64>,
    /// `‖F(t_k, r(t_k))‖_{H^{1,1}}`; NaN where F was not evaluated (ε = 0).
    pub f_norms: Vec<f64>,
}

impl TrajectoryRecord {
    fn start(r0: &ReflectionData) -> Self {
        TrajectoryRecord {
            times: vec![0.0],
            snapshots: vec![r0.clone()],
            h11_norms: vec![r0.eta()],
            sup_norms: vec![r0.rho()],
            f_norms: Vec::new(),
        }
    }

    fn push(&mut self, t: f64, r: ReflectionData) {
        self.times.push(t);
        self.h11_norms.push(r.eta());
        self.sup_norms.push(r.rho());
        self.snapshots.push(r);
    }

    pub fn last(&self) -> &ReflectionData {
        self.snapshots.last().expect("trajectory holds r0")
    }

    /// Snapshot recorded at time `t`, if any.
    pub fn at(&self, t: f64) -> Option<&ReflectionData> {
        let tol = 1e-9 * self.times.last().copied().unwrap_or(1.0).max(1.0);
        self.times.iter().position(|s| (s - t).abs() <= tol).map(|i| &self.snapshots[i])
    }
}

fn axpy(r: &ReflectionData, alpha: f64, f: &ComplexField) -> Result<ReflectionData> {
    let vals: Vec<Complex64> = r.values().iter().zip(f.values()).map(|(a, b)| a + b * alpha).collect();
    ReflectionData::new(ComplexField::new(*r.grid(), vals)?)
}

struct Monitor {
    sup_bound: f64,
    h11_bound: f64,
}

impl Monitor {
    fn new(r0: &ReflectionData) -> Self {
        Monitor { sup_bound: 0.5 * (1.0 + r0.rho()), h11_bound: 2.0 * r0.eta() }
    }

    fn violation(&self, r: &ReflectionData) -> Option<String> {
        if r.rho() >= self.sup_bound && r.rho() > 0.0 {
            Some(format!("sup |r| = {} reached the bound {}", r.rho(), self.sup_bound))
        } else if r.eta() >= self.h11_bound && r.eta() > 0.0 {
            Some(format!("H^(1,1) norm {} reached the bound {}", r.eta(), self.h11_bound))
        } else {
            None
        }
    }
}

fn instability(t: f64, reason: String, traj: &TrajectoryRecord) -> Error {
    Error::Instability {
        t,
        reason,
        completed_steps: traj.times.len() - 1,
        trajectory: Some(Box::new(traj.clone())),
    }
}

/// Integrate `dr/dt = ε F(t, r)` from `r0` up to `t_final` in `steps` equal steps.
pub fn evolve_perturbed(
    r0: &ReflectionData,
    spec: &PerturbationSpec,
    t_final: f64,
    steps: usize,
    opts: &EvolveOptions,
) -> Result<TrajectoryRecord> {
    if steps == 0 || !(t_final >= 0.0) {
        return Err(Error::Config(format!("need steps ≥ 1 and T ≥ 0, got {steps}, {t_final}")));
    }
    let dt = t_final / steps as f64;
    let mut traj = TrajectoryRecord::start(r0);
    if spec.epsilon == 0.0 {
        for k in 1..=steps {
            traj.push(k as f64 * dt, r0.clone());
        }
        traj.f_norms = vec![f64::NAN; steps + 1];
        return Ok(traj);
    }
    let ygrid = opts.ygrid.unwrap_or_else(|| spec.default_ygrid());
    let eval = FEvaluator::new(*r0.grid(), spec, ygrid, opts.rhp);
    let monitor = Monitor::new(r0);
    let eps = spec.epsilon;
    let stage = |t: f64, r: &ReflectionData, traj: &TrajectoryRecord| -> Result<ComplexField> {
        eval.eval(t, r).map(|v| v.f).map_err(|e| match e {
            Error::Domain(reason) => instability(t, reason, traj),
            other => other,
        })
    };
    let shifted = |r: &ReflectionData, a: f64, f: &ComplexField, t: f64, traj: &TrajectoryRecord| {
        axpy(r, a, f).map_err(|e| match e {
            Error::Domain(reason) => instability(t, reason, traj),
            other => other,
        })
    };

    match opts.stepper {
        TimeStepper::Rk4 => {
            let mut r = r0.clone();
            for k in 0..steps {
                let t = k as f64 * dt;
                let k1 = stage(t, &r, &traj)?;
                traj.f_norms.push(h_norms(&k1)?.h11);
                let r2 = shifted(&r, 0.5 * eps * dt, &k1, t, &traj)?;
                let k2 = stage(t + 0.5 * dt, &r2, &traj)?;
                let r3 = shifted(&r, 0.5 * eps * dt, &k2, t, &traj)?;
                let k3 = stage(t + 0.5 * dt, &r3, &traj)?;
                let r4 = shifted(&r, eps * dt, &k3, t, &traj)?;
                let k4 = stage(t + dt, &r4, &traj)?;
                let incr: Vec<Complex64> = (0..r.values().len())
                    .map(|j| (k1.values()[j] + 2.0 * k2.values()[j] + 2.0 * k3.values()[j] + k4.values()[j]) / 6.0)
                    .collect();
                let incr = ComplexField::new(*r.grid(), incr)?;
                r = shifted(&r, eps * dt, &incr, t + dt, &traj)?;
                if let Some(reason) = monitor.violation(&r) {
                    return Err(instability(t + dt, reason, &traj));
                }
                traj.push(t + dt, r.clone());
            }
            let fin = stage(t_final, &r, &traj)?;
            traj.f_norms.push(h_norms(&fin)?.h11);
        }
        TimeStepper::Picard { tol, max_sweeps } => {
            let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
            let mut path: Vec<ReflectionData> = vec![r0.clone(); steps + 1];
            let mut fs: Vec<ComplexField> = Vec::new();
            let mut converged = false;
            for _ in 0..max_sweeps.max(1) {
                fs = times
                    .iter()
                    .zip(&path)
                    .map(|(&t, r)| stage(t, r, &traj))
                    .collect::<Result<_>>()?;
                let mut next = Vec::with_capacity(steps + 1);
                next.push(r0.clone());
                let mut integral = vec![Complex64::new(0.0, 0.0); r0.values().len()];
                let mut change: f64 = 0.0;
                for k in 1..=steps {
                    for (acc, (a, b)) in integral.iter_mut().zip(fs[k - 1].values().iter().zip(fs[k].values())) {
                        *acc += (a + b) * (0.5 * dt);
                    }
                    let rk = shifted(r0, eps, &ComplexField::new(*r0.grid(), integral.clone())?, times[k], &traj)?;
                    change = change.max(rk.r().sub(path[k].r())?.sup_norm());
                    next.push(rk);
                }
                path = next;
                if change <= tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                log::warn!("Picard iteration stopped before reaching tolerance {tol}");
            }
            for (k, r) in path.into_iter().enumerate().skip(1) {
                if let Some(reason) = monitor.violation(&r) {
                    return Err(instability(times[k], reason, &traj));
                }
                traj.push(times[k], r);
            }
            traj.f_norms = fs.iter().map(|f| h_norms(f).map(|n| n.h11)).collect::<Result<_>>()?;
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct RInfinity {
    pub rinf: ReflectionData,
    /// Pairs `(t, ‖r(2t) - r(t)‖_{H^{1,1}})` over the recorded dyadic times.
    pub differences: Vec<(f64, f64)>,
    pub fit: Option<DecayFit>,
    /// All differences vanish, so no rate is defined.
    pub degenerate: bool,
}

impl RInfinity {
    pub fn rate(&self) -> Option<f64> {
        self.fit.as_ref().map(|f| f.exponent)
    }
}

/// First dyadic time used by [`r_infinity`].
pub const DYADIC_START: f64 = 1.0;

/// Last snapshot and the decay rate of Cauchy differences at `t = 1, 2, 4, …`.
/// Horizons shorter than 2 start from the first recorded positive time.
pub fn r_infinity(traj: &TrajectoryRecord) -> Result<RInfinity> {
    let horizon = traj.times.last().copied().unwrap_or(0.0);
    let t0 = if horizon >= 2.0 * DYADIC_START {
        DYADIC_START
    } else {
        traj.times.iter().copied().find(|&t| t > 0.0).unwrap_or(DYADIC_START)
    };
    r_infinity_from(traj, t0)
}

/// As [`r_infinity`] with differences at `t0, 2t0, 4t0, …`.
pub fn r_infinity_from(traj: &TrajectoryRecord, t0: f64) -> Result<RInfinity> {
    if !(t0 > 0.0) {
        return Err(Error::Config(format!("dyadic start must be positive, got {t0}")));
    }
    let mut differences = Vec::new();
    let mut t = t0;
    while let (Some(r1), Some(r2)) = (traj.at(t), traj.at(2.0 * t)) {
        let d = h_norms(&r2.r().sub(r1.r())?)?.h11;
        differences.push((t, d));
        t *= 2.0;
    }
    let degenerate = differences.iter().all(|&(_, d)| d == 0.0);
    let fit = if degenerate || differences.len() < 2 {
        None
    } else {
        if differences.windows(2).any(|w| w[1].1 > w[0].1) {
            log::warn!("Cauchy differences are not monotone; the fitted rate is unreliable");
        }
        let (ts, ds): (Vec<f64>, Vec<f64>) = differences.iter().copied().unzip();
        Some(fit_decay(&ts, &ds)?)
    };
    Ok(RInfinity { rinf: traj.last().clone(), differences, fit, degenerate })
}
