//! Integrable evolution of `r`, the scalar conjugator δ, and the explicit
//! `t^{-1/2}` long-time profile.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};
use crate::quadrature::{cauchy_integral_fn, pv_integral_fn, CompositeRule, Interpolant};
use crate::reflection::ReflectionData;
use crate::rhp::stationary_point;

pub const DEFAULT_T_MIN: f64 = 1.0;

/// `r(z) e^{-itz²}`.
pub fn evolve_linear(r0: &ReflectionData, t: f64) -> ReflectionData {
    let r = r0
        .r()
        .map(|z, v| v * Complex64::from_polar(1.0, -t * z * z))
        .expect("unimodular rotation keeps samples finite");
    ReflectionData::new(r).expect("rotation preserves sup |r|")
}

/// `arg Γ(iν)` on the branch continuous in ν with limit `-π/2` at `0⁺`.
///
/// Odd in ν, so negative arguments give `arg Γ(-i|ν|) = -arg Γ(i|ν|)`.
pub fn log_gamma_arg(nu: f64) -> f64 {
    if nu == 0.0 {
        return -PI / 2.0;
    }
    if nu < 0.0 {
        return -log_gamma_arg(-nu);
    }
    // Im lnΓ(iν) = Im lnΓ(iν + N) - Σ_{k<N} arg(iν + k), Stirling for the shifted value.
    const SHIFT: usize = 20;
    let mut acc = 0.0;
    for k in 0..SHIFT {
        acc -= nu.atan2(k as f64);
    }
    let w = Complex64::new(SHIFT as f64, nu);
    // Bernoulli numbers B_2 .. B_16.
    const B: [f64; 8] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
        7.0 / 6.0,
        -3617.0 / 510.0,
    ];
    let mut series = (w - 0.5) * w.ln() - w;
    let w2 = w * w;
    let mut wp = w;
    for (j, b) in B.iter().enumerate() {
        let k = (j + 1) as f64;
        series += b / (2.0 * k * (2.0 * k - 1.0)) / wp;
        wp *= w2;
    }
    acc + series.im
}

/// `(1/π) ∫_{-∞}^{z0} log(z0 - z) d log(1 - |r(z)|²)`.
///
/// Integrated by parts against `g = log(1-|r|²)`:
/// `g(z0) log(z0-a) - g(a) log(z0-a) + ∫_a^{z0} (g(z) - g(z0))/(z0 - z) dz`,
/// where `a` is the left end of the grid. The remaining integrand is smooth.
pub fn phase_integral(r: &ReflectionData, z0: f64) -> f64 {
    let grid = r.grid();
    let a = grid.origin();
    if z0 <= a {
        return 0.0;
    }
    let gfield = log_field(r);
    let interp = Interpolant::new(&gfield);
    let g = |z: f64| interp.eval(z).re;
    let g0 = g(z0);
    let ga = gfield.values()[0].re;
    let span = z0 - a;
    let rule = CompositeRule::with_max_width(a, z0, grid.spacing(), 8);
    let smooth = rule.integrate(|z| Complex64::new((g(z) - g0) / (z0 - z), 0.0)).re;
    ((g0 - ga) * span.ln() + smooth) / PI
}

fn log_field(r: &ReflectionData) -> ComplexField {
    let g = r.log_one_minus_sq();
    ComplexField::new(*r.grid(), g.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
        .expect("sup |r| < 1 keeps the logarithm finite")
}

/// `ν = -log(1 - |r|²)/2π`.
pub fn nu_of(r_abs: f64) -> f64 {
    -(-r_abs * r_abs).ln_1p() / (2.0 * PI)
}

/// `δ(z) = exp((1/2πi) ∫_{-∞}^{z0} log(1-|r(s)|²)/(s - z) ds)` off the cut.
pub fn delta_fn(r: &ReflectionData, z0: f64, z: Complex64) -> Result<Complex64> {
    let grid = r.grid();
    let a = grid.origin();
    let upper = z0.min(grid.last());
    if z.im == 0.0 && z.re <= z0 {
        return Err(Error::Domain(format!(
            "z = {z} lies on the cut (-inf, {z0}]; use delta_boundary"
        )));
    }
    if upper <= a || r.is_zero() {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let gfield = log_field(r);
    let interp = Interpolant::new(&gfield);
    let panel = grid.spacing().min(0.25 * z.im.abs().max(1e-3));
    let c = cauchy_integral_fn(|s| interp.eval(s), a, upper, z, panel);
    Ok((c / Complex64::new(0.0, 2.0 * PI)).exp())
}

/// Boundary values `(δ₊, δ₋)` at a real `z` on the cut:
/// `exp(PV/(2πi) ± g(z)/2)`.
pub fn delta_boundary(r: &ReflectionData, z0: f64, z: f64) -> Result<(Complex64, Complex64)> {
    let grid = r.grid();
    let a = grid.origin();
    let upper = z0.min(grid.last());
    if !(z > a && z < upper) {
        return Err(Error::Domain(format!("z = {z} must lie strictly inside ({a}, {upper})")));
    }
    let gfield = log_field(r);
    let interp = Interpolant::new(&gfield);
    let pv = pv_integral_fn(|s| interp.eval(s), a, upper, z, grid.spacing());
    let base = pv / Complex64::new(0.0, 2.0 * PI);
    let half = 0.5 * interp.eval(z).re;
    Ok(((base + half).exp(), (base - half).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticProfile {
    pub z0: f64,
    pub nu: f64,
    pub alpha: Complex64,
    pub qas: Complex64,
    /// `r(z0) = 0`, so the phase of α is undefined and `q_as = 0`.
    pub degenerate: bool,
}

pub fn asymptotic_profile(r: &ReflectionData, x: f64, t: f64) -> Result<AsymptoticProfile> {
    asymptotic_profile_with(r, x, t, DEFAULT_T_MIN)
}

pub fn asymptotic_profile_with(
    r: &ReflectionData,
    x: f64,
    t: f64,
    t_min: f64,
) -> Result<AsymptoticProfile> {
    if !(t >= t_min) {
        return Err(Error::Domain(format!("t = {t} is below t_min = {t_min}")));
    }
    let z0 = stationary_point(x, t)?;
    let rz0 = Interpolant::new(r.r()).eval(z0);
    if rz0.norm() == 0.0 {
        return Ok(AsymptoticProfile {
            z0,
            nu: 0.0,
            alpha: Complex64::new(0.0, 0.0),
            qas: Complex64::new(0.0, 0.0),
            degenerate: true,
        });
    }
    let nu = nu_of(rz0.norm());
    let arg = phase_integral(r, z0) + 0.25 * PI + log_gamma_arg(nu) + rz0.arg();
    let alpha = Complex64::from_polar((0.5 * nu).sqrt(), arg);
    let carrier = Complex64::from_polar(1.0, x * x / (4.0 * t) - nu * (2.0 * t).ln());
    Ok(AsymptoticProfile { z0, nu, alpha, qas: alpha * carrier / t.sqrt(), degenerate: false })
}

/// `q_as(·, t)` on an x-grid.
pub fn asymptotic_on_grid(r: &ReflectionData, t: f64, xgrid: &Grid1D) -> Result<ComplexField> {
    let xs: Vec<f64> = xgrid.nodes().collect();
    let q = xs
        .par_iter()
        .map(|&x| asymptotic_profile(r, x, t).map(|p| p.qas))
        .collect::<Result<Vec<_>>>()?;
    ComplexField::new(*xgrid, q)
}
