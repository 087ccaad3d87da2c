//! Discrete Fourier pair on uniform grids, plus spectral differentiation and
//! sub-cell shifts of periodic samples.
//!
//! The forward transform samples `f̂(k) = (2π)^{-1/2} ∫ f(x) e^{-ikx} dx` on the
//! centred frequency grid `k_m = (m - ⌊N/2⌋)·2π/(N h)`. With that scaling the
//! discrete pair is unitary: `h Σ|f|² = Δk Σ|f̂|²`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::Result;
use crate::grid::{ComplexField, Grid1D};

/// Frequency-side samples together with the spatial grid they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub field: ComplexField,
    pub source_grid: Grid1D,
}

/// Angular wavenumbers in FFT order for `n` samples at spacing `h`.
pub fn fft_wavenumbers(n: usize, h: f64) -> Vec<f64> {
    let dk = 2.0 * PI / (n as f64 * h);
    (0..n)
        .map(|j| {
            let m = if j <= (n - 1) / 2 { j as isize } else { j as isize - n as isize };
            m as f64 * dk
        })
        .collect()
}

pub fn forward_transform(f: &ComplexField) -> Result<Spectrum> {
    let grid = *f.grid();
    let n = grid.count();
    let h = grid.spacing();
    let x0 = grid.origin();
    let dk = 2.0 * PI / (n as f64 * h);
    let shift = n / 2;
    let k0 = -(shift as f64) * dk;

    // Pre-modulate so that the centred frequency grid lands on FFT bins 0..n.
    let mut buf: Vec<Complex64> = f
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| v * Complex64::from_polar(1.0, -k0 * j as f64 * h))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = h / (2.0 * PI).sqrt();
    let values = buf
        .iter()
        .enumerate()
        .map(|(m, v)| {
            let k = k0 + m as f64 * dk;
            v * norm * Complex64::from_polar(1.0, -k * x0)
        })
        .collect();
    Ok(Spectrum {
        field: ComplexField::new(Grid1D::new(k0, dk, n)?, values)?,
        source_grid: grid,
    })
}

pub fn inverse_transform(s: &Spectrum) -> Result<ComplexField> {
    let grid = s.source_grid;
    let n = grid.count();
    let h = grid.spacing();
    let x0 = grid.origin();
    let kgrid = s.field.grid();
    let k0 = kgrid.origin();
    let dk = kgrid.spacing();
    let mut buf: Vec<Complex64> = s
        .field
        .values()
        .iter()
        .enumerate()
        .map(|(m, v)| v * Complex64::from_polar(1.0, (k0 + m as f64 * dk) * x0))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let norm = dk / (2.0 * PI).sqrt();
    let values = buf
        .iter()
        .enumerate()
        .map(|(j, v)| v * norm * Complex64::from_polar(1.0, k0 * j as f64 * h))
        .collect();
    ComplexField::new(grid, values)
}

/// Spectral derivative of samples treated as one period.
pub fn spectral_derivative(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let ks = fft_wavenumbers(n, h);
    for (j, (v, &k)) in buf.iter_mut().zip(&ks).enumerate() {
        // The Nyquist mode of an even-length grid has no well-defined derivative.
        if n.is_multiple_of(2) && j == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        } else {
            *v *= Complex64::new(0.0, k) / n as f64;
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Band-limited values at `x_j + fraction·h`, treating the samples as periodic.
pub fn periodic_shift(values: &[Complex64], h: f64, fraction: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let mut buf = values.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let ks = fft_wavenumbers(n, h);
    let a = fraction * h;
    for (j, (v, &k)) in buf.iter_mut().zip(&ks).enumerate() {
        if n.is_multiple_of(2) && j == n / 2 {
            // Split the Nyquist mode symmetrically so real data stay real.
            *v *= Complex64::new((k * a).cos() / n as f64, 0.0);
        } else {
            *v *= Complex64::from_polar(1.0 / n as f64, k * a);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}
