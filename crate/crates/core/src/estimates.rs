//! Empirical probes of decay rates and uniform bounds, and log-log fitting.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fourier::spectral_derivative;
use crate::grid::{h_norms, trapezoid_real, ComplexField, Grid1D};
use crate::matrix::{Mat2, Matrix2Field};
use crate::pde;
use crate::perturbation::{FEvaluator, PerturbationSpec, Profile};
use crate::reflection::ReflectionData;
use crate::rhp::{RhpConfig, RhpSolver, ResolventEstimate};
use crate::scattering::direct_scattering;

/// Power-law fit `value ≈ C t^{-exponent}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub exponent: f64,
    pub r2: f64,
}

/// Least-squares line through `(log t, log value)`; `exponent` is minus the slope.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least two (t, value) pairs, got {} and {}",
            times.len(),
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::DegenerateFit(format!("non-positive measured value {v}")));
    }
    if times.iter().any(|t| !(*t > 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::DegenerateFit("times must be positive and increasing".into()));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (slope * sxy / syy).clamp(0.0, 1.0) };
    Ok(DecayFit { times: times.to_vec(), values: values.to_vec(), exponent: -slope, r2 })
}

/// `{t0, 2t0, 4t0, …}` up to and including `t_max`.
pub fn dyadic_times(t0: f64, t_max: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut t = t0;
    while t <= t_max * (1.0 + 1e-12) {
        ts.push(t);
        t *= 2.0;
    }
    ts
}

fn profile_derivative(profile: &Profile, grid: &Grid1D) -> Vec<f64> {
    match profile {
        Profile::Gaussian { scale } => grid
            .nodes()
            .map(|x| -2.0 * x / (scale * scale) * (-(x / scale).powi(2)).exp())
            .collect(),
        Profile::Sech2 { scale } => grid
            .nodes()
            .map(|x| {
                let u = x / scale;
                -2.0 / scale * u.cosh().recip().powi(2) * u.tanh()
            })
            .collect(),
        Profile::Custom(_) => {
            let a: Vec<Complex64> =
                profile.samples(grid).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            spectral_derivative(&a, grid.spacing()).into_iter().map(|v| v.re).collect()
        }
    }
}

/// `L̃G = -i offdiag(β, -β̄)` with `L̃ = ix adσ - 2t∂ₓ` applied to `G`:
/// `β = a|q|^l (ix - 2t∂ₓ)q + l a|q|^{l-2} q Re(q̄ (ix - 2t∂ₓ)q) - 2t |q|^l q ∂ₓa`.
pub fn ltilde_g(
    q: &ComplexField,
    q_x: &ComplexField,
    spec: &PerturbationSpec,
    t: f64,
) -> Result<Matrix2Field> {
    q.check_same_grid(q_x)?;
    let grid = *q.grid();
    let a = spec.profile.samples(&grid);
    let da = profile_derivative(&spec.profile, &grid);
    let l = spec.l;
    let i = Complex64::new(0.0, 1.0);
    let mats: Vec<Mat2> = grid
        .nodes()
        .enumerate()
        .map(|(k, x)| {
            let (qv, qx) = (q.values()[k], q_x.values()[k]);
            let m = qv.norm();
            let lq = i * x * qv - 2.0 * t * qx;
            let ml = m.powf(l);
            let ml2 = if m > 0.0 { m.powf(l - 2.0) } else { 0.0 };
            let beta = a[k] * ml * lq + l * a[k] * ml2 * qv * (qv.conj() * lq).re - 2.0 * t * ml * qv * da[k];
            Mat2::offdiag(-i * beta, -i * (-beta.conj()))
        })
        .collect();
    Matrix2Field::from_mats(grid, &mats)
}

/// L² and L¹ norms over x of the Frobenius norm of a matrix field.
pub fn matrix_norms(m: &Matrix2Field) -> (f64, f64) {
    let h = m.grid().spacing();
    let fro: Vec<f64> = (0..m.len())
        .map(|i| {
            let e = m.at(i);
            e.0.iter().flatten().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
        })
        .collect();
    let sq: Vec<f64> = fro.iter().map(|v| v * v).collect();
    (trapezoid_real(&sq, h).sqrt(), trapezoid_real(&fro, h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Quantity {
    #[serde(rename = "LG_l2")]
    LgL2,
    #[serde(rename = "LG_l1")]
    LgL1,
    #[serde(rename = "F_h11")]
    FH11,
    #[serde(rename = "DeltaF_h11")]
    DeltaFH11,
}

impl Quantity {
    pub fn name(&self) -> &'static str {
        match self {
            Quantity::LgL2 => "LG_l2",
            Quantity::LgL1 => "LG_l1",
            Quantity::FH11 => "F_h11",
            Quantity::DeltaFH11 => "DeltaF_h11",
        }
    }

    /// Decay exponent claimed for this quantity, with `p = 2` for ΔF.
    pub fn target_exponent(&self, l: f64) -> f64 {
        match self {
            Quantity::LgL2 | Quantity::LgL1 => (l - 1.0) / 2.0,
            Quantity::FH11 => l / 2.0 - 0.5,
            Quantity::DeltaFH11 => l / 2.0 + 1.0 / (2.0 * 2.0) - 0.75,
        }
    }
}

/// L̃G probes along the split-step flow of `q0`.
#[derive(Debug, Clone)]
pub struct LgProbe {
    pub q0: ComplexField,
    pub spec: PerturbationSpec,
    pub times: Vec<f64>,
    pub dt: f64,
}

impl LgProbe {
    /// `(t, ‖L̃G‖_{L²}, ‖L̃G‖_{L¹})` at each probe time.
    pub fn measure(&self) -> Result<Vec<(f64, f64, f64)>> {
        let h = self.q0.grid().spacing();
        let mut out = Vec::with_capacity(self.times.len());
        let mut q = self.q0.clone();
        let mut t_prev = 0.0;
        for &t in &self.times {
            if t > t_prev {
                q = pde::run(&q, &self.spec, t - t_prev, self.dt)?.state.q;
                t_prev = t;
            }
            let qx = ComplexField::new(*q.grid(), spectral_derivative(q.values(), h))?;
            let (l2, l1) = matrix_norms(&ltilde_g(&q, &qx, &self.spec, t)?);
            out.push((t, l2, l1));
        }
        Ok(out)
    }

    pub fn fit(&self, quantity: Quantity) -> Result<DecayFit> {
        let data = self.measure()?;
        let (ts, vs): (Vec<f64>, Vec<f64>) = data
            .into_iter()
            .filter(|d| d.0 > 0.0)
            .map(|(t, l2, l1)| (t, if quantity == Quantity::LgL1 { l1 } else { l2 }))
            .unzip();
        fit_decay(&ts, &vs)
    }
}

/// F probes along the integrable flow: `r` fixed, `t` swept.
#[derive(Debug)]
pub struct FProbe {
    pub r: ReflectionData,
    /// Second reflection coefficient for Δ quantities.
    pub r_alt: Option<ReflectionData>,
    pub spec: PerturbationSpec,
    pub times: Vec<f64>,
    pub ygrid: Grid1D,
    pub rhp: RhpConfig,
}

impl FProbe {
    /// `r = ℛ(q0)` and, for Δ probes, `r_alt = ℛ((1 + δ) q0)`.
    pub fn from_potential(
        q0: &ComplexField,
        zgrid: &Grid1D,
        delta: f64,
        spec: &PerturbationSpec,
        times: Vec<f64>,
    ) -> Result<Self> {
        let r = direct_scattering(q0, zgrid)?;
        let r_alt = direct_scattering(&q0.scale(Complex64::new(1.0 + delta, 0.0)), zgrid)?;
        Ok(FProbe {
            r,
            r_alt: Some(r_alt),
            ygrid: spec.default_ygrid(),
            spec: spec.clone(),
            times,
            rhp: RhpConfig::default(),
        })
    }

    pub fn measure(&self, quantity: Quantity) -> Result<Vec<(f64, f64)>> {
        let eval = FEvaluator::new(*self.r.grid(), &self.spec, self.ygrid, self.rhp);
        self.times
            .iter()
            .map(|&t| {
                let f = eval.eval(t, &self.r)?.f;
                let v = match quantity {
                    Quantity::FH11 => h_norms(&f)?.h11,
                    Quantity::DeltaFH11 => {
                        let alt = self.r_alt.as_ref().ok_or_else(|| {
                            Error::Config("ΔF probe needs a second reflection coefficient".into())
                        })?;
                        let g = eval.eval(t, alt)?.f;
                        h_norms(&f.sub(&g)?)?.h11
                    }
                    _ => return Err(Error::Config(format!("{} is not an F quantity", quantity.name()))),
                };
                Ok((t, v))
            })
            .collect()
    }

    pub fn fit(&self, quantity: Quantity) -> Result<DecayFit> {
        let (ts, vs): (Vec<f64>, Vec<f64>) = self.measure(quantity)?.into_iter().unzip();
        fit_decay(&ts, &vs)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MInfinityProbe {
    /// `(t, max over x of sup_z |m₊|)`.
    pub per_time: Vec<(f64, f64)>,
    pub m_infinity: f64,
    /// Log-log slope of the per-time maxima; growth shows as a positive value.
    pub slope: f64,
}

/// `max sup_z |m₊(z; x, t)|` over `x = c·t` for each `c` in `x_over_t`.
pub fn m_infinity_probe(
    r: &ReflectionData,
    times: &[f64],
    x_over_t: &[f64],
    cfg: RhpConfig,
) -> Result<MInfinityProbe> {
    let solver = RhpSolver::new(*r.grid(), cfg);
    let cells: Vec<(f64, f64)> =
        times.iter().flat_map(|&t| x_over_t.iter().map(move |&c| (t, c * t))).collect();
    let sups = cells
        .par_iter()
        .map(|&(t, x)| {
            let sol = solver.solve(r, x, t)?;
            Ok(solver.boundary_values(&sol)?.mplus.sup_norm())
        })
        .collect::<Result<Vec<f64>>>()?;
    let per_time: Vec<(f64, f64)> = times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let m = sups[k * x_over_t.len()..(k + 1) * x_over_t.len()].iter().copied().fold(0.0, f64::max);
            (t, m)
        })
        .collect();
    let m_infinity = per_time.iter().map(|p| p.1).fold(0.0, f64::max);
    let slope = if per_time.len() >= 2 {
        let (ts, ms): (Vec<f64>, Vec<f64>) = per_time.iter().copied().unzip();
        -fit_decay(&ts, &ms)?.exponent
    } else {
        0.0
    };
    Ok(MInfinityProbe { per_time, m_infinity, slope })
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventCase {
    pub label: String,
    pub x: f64,
    pub t: f64,
    pub estimate: ResolventEstimate,
}

impl ResolventCase {
    pub fn within_bound(&self) -> bool {
        self.estimate.norm >= 1.0 - 1e-12 && self.estimate.norm <= self.estimate.bound
    }
}

/// Reflection coefficients of the standard resolvent test set, on a 512-node grid.
pub fn standard_reflection_set() -> Result<Vec<(String, ReflectionData)>> {
    let zgrid = Grid1D::from_range(-8.0, 8.0, 512)?;
    let xgrid = Grid1D::from_range(-30.0, 30.0, 4096)?;
    let mut set = Vec::new();
    for amp in [0.3, 0.5] {
        let q = ComplexField::from_real_fn(xgrid, |x| amp / x.cosh())?;
        set.push((format!("{amp} sech"), direct_scattering(&q, &zgrid)?));
    }
    for amp in [0.6, 0.9] {
        let r = ComplexField::from_fn(zgrid, |z| Complex64::from_polar(amp * (-z * z / 2.0).exp(), 0.5 * z))?;
        set.push((format!("{amp} gaussian r"), ReflectionData::new(r)?));
    }
    let r = ComplexField::from_fn(zgrid, |z| {
        Complex64::new(0.4 * (-(z - 1.0).powi(2)).exp(), 0.3 * (-(z + 1.5).powi(2) * 2.0).exp())
    })?;
    set.push(("two-bump r".into(), ReflectionData::new(r)?));
    Ok(set)
}

/// `(x, t)` cells of the standard set; `t` is small enough for the 512-node grid.
pub const STANDARD_CELLS: [(f64, f64); 5] = [(0.0, 0.0), (1.0, 0.5), (-2.0, 1.0), (3.0, 1.5), (0.5, 2.0)];

pub fn resolvent_suite() -> Result<Vec<ResolventCase>> {
    let set = standard_reflection_set()?;
    let mut cases = Vec::new();
    for (label, r) in &set {
        let solver = RhpSolver::new(*r.grid(), RhpConfig::default());
        for &(x, t) in &STANDARD_CELLS {
            let estimate = solver.resolvent_norm(r, x, t)?;
            cases.push(ResolventCase { label: label.clone(), x, t, estimate });
        }
    }
    Ok(cases)
}
