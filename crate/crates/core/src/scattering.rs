//! Direct scattering for `dΨ/dx = (izσ + Q(x))Ψ`, `σ = diag(1/2, -1/2)`,
//! `Q = offdiag(q, q̄)`.
//!
//! The left Jost solution is normalised so that `Ψ e^{-ixzσ} → I` at the left
//! edge; its gauge-normalised value at the right edge is the transition matrix
//! `T(z) = [[a, b̆], [b, ă]]`, i.e. `Ψ⁻ = Ψ⁺ T`. With this orientation the
//! reflection coefficient `r = b̆/a = conj(b)/a` is the one whose Riemann–Hilbert
//! problem (jump `[[1-|r|², r e^{iθ}], [-r̄ e^{-iθ}, 1]]`) reconstructs `q` via
//! `q = (1/2π) ∫ μ₁₁ r e^{iθ} dz`.
//!
//! Integration uses the fourth-order Magnus exponential integrator. Each step
//! propagator lies in SU(1,1), so `|a|² - |b|² = 1` holds to rounding.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fourier::periodic_shift;
use crate::grid::{ComplexField, Grid1D};
use crate::matrix::Mat2;
use crate::reflection::ReflectionData;

/// Potentials must be below this at both x-grid edges.
pub const EDGE_TOLERANCE: f64 = 1e-10;

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Normalised at the left edge, propagated to the right edge.
    Left,
    /// Normalised at the right edge, propagated to the left edge.
    Right,
}

/// Potential samples prepared for repeated Jost solves at different `z`.
#[derive(Debug, Clone)]
pub struct JostIntegrator {
    grid: Grid1D,
    /// `q` at the two Gauss points of every cell.
    gauss: Vec<(Complex64, Complex64)>,
}

impl JostIntegrator {
    pub fn new(q: &ComplexField) -> Result<Self> {
        let edge = q.edge_magnitude();
        if edge > EDGE_TOLERANCE {
            return Err(Error::Truncation { edge, threshold: EDGE_TOLERANCE });
        }
        let grid = *q.grid();
        let h = grid.spacing();
        let c1 = 0.5 - SQRT3 / 6.0;
        let c2 = 0.5 + SQRT3 / 6.0;
        let q1 = periodic_shift(q.values(), h, c1);
        let q2 = periodic_shift(q.values(), h, c2);
        let gauss = (0..grid.count() - 1).map(|n| (q1[n], q2[n])).collect();
        Ok(JostIntegrator { grid, gauss })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Product of the step propagators across the whole grid (left to right).
    fn propagator(&self, z: f64) -> Result<Mat2> {
        let h = self.grid.spacing();
        let izs = Complex64::new(0.0, z / 2.0);
        let coeff = |q: Complex64| Mat2::new(izs, q, q.conj(), -izs);
        let mut u = Mat2::IDENTITY;
        for &(qa, qb) in &self.gauss {
            let a1 = coeff(qa);
            let a2 = coeff(qb);
            let omega = (a1 + a2).scale(Complex64::new(0.5 * h, 0.0))
                + a2.commutator(&a1).scale(Complex64::new(SQRT3 * h * h / 12.0, 0.0));
            u = omega.exp_traceless() * u;
        }
        if u.0.iter().flatten().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::IntegratorFailure(format!("non-finite propagator at z = {z}")));
        }
        Ok(u)
    }

    pub fn solve(&self, z: f64, side: Side) -> Result<Mat2> {
        if !z.is_finite() {
            return Err(Error::Domain(format!("spectral parameter must be finite, got {z}")));
        }
        let u = self.propagator(z)?;
        let gauge = |x: f64, sign: f64| {
            Mat2::diag(
                Complex64::from_polar(1.0, sign * x * z / 2.0),
                Complex64::from_polar(1.0, -sign * x * z / 2.0),
            )
        };
        let (x0, x1) = (self.grid.origin(), self.grid.last());
        match side {
            Side::Left => Ok(gauge(x1, -1.0) * u * gauge(x0, 1.0)),
            Side::Right => {
                let inv = u.inverse().ok_or_else(|| {
                    Error::IntegratorFailure(format!("singular propagator at z = {z}"))
                })?;
                Ok(gauge(x0, -1.0) * inv * gauge(x1, 1.0))
            }
        }
    }
}

/// Gauge-normalised Jost matrix at the far edge from `side`.
pub fn jost_solve(q: &ComplexField, z: f64, side: Side) -> Result<Mat2> {
    JostIntegrator::new(q)?.solve(z, side)
}

/// Entries of the transition matrix on a z-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringEntries {
    pub zgrid: Grid1D,
    pub a: ComplexField,
    pub b: ComplexField,
    /// `T₂₂`, equal to `conj(a)` on the real line.
    pub a_breve: ComplexField,
    /// `T₁₂`, equal to `conj(b)` on the real line.
    pub b_breve: ComplexField,
}

impl ScatteringEntries {
    /// `max_z ||a|² - |b|² - 1|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.a
            .values()
            .iter()
            .zip(self.b.values())
            .map(|(a, b)| (a.norm_sqr() - b.norm_sqr() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `ă = conj(a)`, `b̆ = conj(b)`.
    pub fn symmetry_defect(&self) -> f64 {
        let pair = |x: &ComplexField, y: &ComplexField| {
            x.values()
                .iter()
                .zip(y.values())
                .map(|(u, v)| (u.conj() - v).norm())
                .fold(0.0, f64::max)
        };
        pair(&self.a, &self.a_breve).max(pair(&self.b, &self.b_breve))
    }
}

/// The direct scattering map evaluated on every node of `zgrid`.
pub fn scattering_map(q: &ComplexField, zgrid: &Grid1D) -> Result<ScatteringEntries> {
    let jost = JostIntegrator::new(q)?;
    let mats: Vec<Mat2> = (0..zgrid.count())
        .into_par_iter()
        .map(|i| jost.solve(zgrid.node(i), Side::Left))
        .collect::<Result<_>>()?;
    let entry = |i: usize, j: usize| ComplexField::new(*zgrid, mats.iter().map(|m| m.0[i][j]).collect());
    Ok(ScatteringEntries {
        zgrid: *zgrid,
        a: entry(0, 0)?,
        b: entry(1, 0)?,
        a_breve: entry(1, 1)?,
        b_breve: entry(0, 1)?,
    })
}

/// `r = conj(b)/a`, with sup and H^{1,1} norms.
pub fn reflection_of(entries: &ScatteringEntries) -> Result<ReflectionData> {
    let zgrid = entries.zgrid;
    let mut values = Vec::with_capacity(zgrid.count());
    for (i, (a, b)) in entries.a.values().iter().zip(entries.b.values()).enumerate() {
        if a.norm() < 1e-12 {
            return Err(Error::DegenerateEntry { z: zgrid.node(i), modulus: a.norm() });
        }
        values.push(b.conj() / a);
    }
    ReflectionData::new(ComplexField::new(zgrid, values)?)
}

/// `ℛ(q)` on `zgrid`.
pub fn direct_scattering(q: &ComplexField, zgrid: &Grid1D) -> Result<ReflectionData> {
    reflection_of(&scattering_map(q, zgrid)?)
}

/// `|r(z)|` for `q = A sech(x)`:
/// `|r|² = sinh²(πA) / (sinh²(πA) + cosh²(πz/2))`.
pub fn sech_reflection_modulus(amplitude: f64, z: f64) -> f64 {
    let s = (std::f64::consts::PI * amplitude).sinh().powi(2);
    let c = (std::f64::consts::PI * z / 2.0).cosh().powi(2);
    (s / (s + c)).sqrt()
}
