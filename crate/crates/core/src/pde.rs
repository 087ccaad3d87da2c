//! Strang split-step Fourier integrator for
//! `i q_t + q_xx - 2|q|²q - ε a(x)|q|^l q = 0` on a periodic domain.
//!
//! The nonlinear substep is an exact pointwise phase rotation, the linear one
//! an exact multiplier `e^{-ik²dt}`, so both conserve the discrete mass.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fourier::fft_wavenumbers;
use crate::grid::{trapezoid_real, ComplexField, Grid1D};
use crate::perturbation::PerturbationSpec;

/// Fraction of the domain at each end watched for wraparound.
pub const EDGE_FRACTION: f64 = 0.05;
/// Edge mass (relative to total) above which wraparound is flagged.
pub const EDGE_MASS_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub q: ComplexField,
    pub t: f64,
    pub mass: f64,
}

pub fn mass_of(q: &ComplexField) -> f64 {
    let sq: Vec<f64> = q.values().iter().map(|v| v.norm_sqr()).collect();
    trapezoid_real(&sq, q.grid().spacing())
}

impl PdeState {
    pub fn new(q: ComplexField, t: f64) -> Self {
        let mass = mass_of(&q);
        PdeState { q, t, mass }
    }

    /// Mass in the outer `EDGE_FRACTION` of the domain relative to the total.
    pub fn edge_mass_ratio(&self) -> f64 {
        let n = self.q.len();
        let k = ((n as f64 * EDGE_FRACTION).ceil() as usize).max(1);
        let edge: f64 = self.q.values()[..k]
            .iter()
            .chain(&self.q.values()[n - k..])
            .map(|v| v.norm_sqr())
            .sum::<f64>()
            * self.q.grid().spacing();
        if self.mass > 0.0 {
            edge / self.mass
        } else {
            0.0
        }
    }
}

/// Largest admissible step for the current state.
pub fn max_step(q: &ComplexField, spec: &PerturbationSpec, a_max: f64) -> f64 {
    let qmax = q.sup_norm();
    let rate = qmax * qmax + spec.epsilon * a_max * qmax.powf(spec.l);
    if rate > 0.0 {
        0.1 / rate
    } else {
        f64::INFINITY
    }
}

/// Precomputed plans and profile samples for one grid.
pub struct SplitStep {
    grid: Grid1D,
    spec: PerturbationSpec,
    a: Vec<f64>,
    a_max: f64,
    k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SplitStep {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitStep").field("grid", &self.grid).field("spec", &self.spec).finish()
    }
}

impl SplitStep {
    pub fn new(grid: Grid1D, spec: &PerturbationSpec) -> Self {
        let n = grid.count();
        let mut planner = FftPlanner::new();
        let a = spec.profile.samples(&grid);
        let a_max = a.iter().copied().fold(0.0, f64::max);
        let k2 = fft_wavenumbers(n, grid.spacing()).into_iter().map(|k| k * k).collect();
        SplitStep {
            grid,
            spec: spec.clone(),
            a,
            a_max,
            k2,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn nonlinear(&self, q: &mut [Complex64], tau: f64) {
        let eps = self.spec.epsilon;
        let l = self.spec.l;
        for (v, a) in q.iter_mut().zip(&self.a) {
            let m = v.norm();
            let mut rate = 2.0 * m * m;
            if eps != 0.0 && *a != 0.0 {
                rate += eps * a * m.powf(l);
            }
            *v *= Complex64::from_polar(1.0, -tau * rate);
        }
    }

    fn linear(&self, q: &mut [Complex64], tau: f64) {
        self.forward.process(q);
        let n = q.len() as f64;
        for (v, k2) in q.iter_mut().zip(&self.k2) {
            *v *= Complex64::from_polar(1.0 / n, -k2 * tau);
        }
        self.inverse.process(q);
    }

    pub fn step(&self, state: &PdeState, dt: f64) -> Result<PdeState> {
        if !(dt > 0.0) {
            return Err(Error::StepSize { dt, bound: 0.0 });
        }
        if *state.q.grid() != self.grid {
            return Err(Error::InvalidGrid("state is not on the integrator grid".into()));
        }
        let bound = max_step(&state.q, &self.spec, self.a_max);
        if dt > bound {
            return Err(Error::StepSize { dt, bound });
        }
        let mut q = state.q.values().to_vec();
        self.nonlinear(&mut q, 0.5 * dt);
        self.linear(&mut q, dt);
        self.nonlinear(&mut q, 0.5 * dt);
        Ok(PdeState::new(ComplexField::new(self.grid, q)?, state.t + dt))
    }
}

/// One Strang step.
pub fn step(state: &PdeState, dt: f64, spec: &PerturbationSpec) -> Result<PdeState> {
    SplitStep::new(*state.q.grid(), spec).step(state, dt)
}

#[derive(Debug, Clone)]
pub struct PdeRun {
    pub state: PdeState,
    /// `(t, mass)` after every step, starting with the initial state.
    pub mass_trace: Vec<(f64, f64)>,
    pub max_edge_ratio: f64,
    pub wraparound: bool,
}

impl PdeRun {
    /// `max |mass(t) - mass(0)|`.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.mass_trace[0].1;
        self.mass_trace.iter().map(|&(_, m)| (m - m0).abs()).fold(0.0, f64::max)
    }
}

/// Integrate to `t_final` with equal steps no longer than `dt`.
pub fn run(q0: &ComplexField, spec: &PerturbationSpec, t_final: f64, dt: f64) -> Result<PdeRun> {
    run_with(q0, spec, t_final, dt, |_| {})
}

/// As [`run`], calling `observe` after every step.
pub fn run_with(
    q0: &ComplexField,
    spec: &PerturbationSpec,
    t_final: f64,
    dt: f64,
    mut observe: impl FnMut(&PdeState),
) -> Result<PdeRun> {
    if !(t_final >= 0.0) {
        return Err(Error::Config(format!("final time must be non-negative, got {t_final}")));
    }
    let integrator = SplitStep::new(*q0.grid(), spec);
    let mut state = PdeState::new(q0.clone(), 0.0);
    let mut mass_trace = vec![(0.0, state.mass)];
    let mut max_edge_ratio = state.edge_mass_ratio();
    if t_final > 0.0 {
        if !(dt > 0.0) {
            return Err(Error::StepSize { dt, bound: 0.0 });
        }
        let steps = (t_final / dt).ceil() as usize;
        let h = t_final / steps as f64;
        for k in 1..=steps {
            state = integrator.step(&state, h)?;
            state.t = k as f64 * h;
            mass_trace.push((state.t, state.mass));
            max_edge_ratio = max_edge_ratio.max(state.edge_mass_ratio());
            observe(&state);
        }
    }
    let wraparound = max_edge_ratio > EDGE_MASS_THRESHOLD;
    if wraparound {
        log::warn!("edge mass ratio {max_edge_ratio:.2e} suggests periodic wraparound");
    }
    Ok(PdeRun { state, mass_trace, max_edge_ratio, wraparound })
}
