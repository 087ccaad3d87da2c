//! Boundary values `C^±` of the Cauchy transform on a uniform grid.
//!
//! The samples are read as their sinc interpolant, whose Hilbert transform at
//! the nodes is the discrete convolution
//! `(Hf)_j = (2/π) Σ_{m odd} f_{j-m} / m`.
//! Its symbol on the semi-discrete frequency axis is exactly `-i sgn(k)`, so
//! `C⁺ = (1 + iH)/2` keeps the positive half-line of frequencies, `C⁻ = (-1 + iH)/2`
//! keeps (minus) the negative half-line, and the zero frequency gets weight 1/2
//! in each. The convolution is evaluated non-circularly through a zero-padded
//! FFT of length ≥ 2N, so nothing wraps around the truncated z-interval.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    Plus,
    Minus,
}

/// Edge-to-peak ratio above which [`CauchyProjector::project`] refuses the input.
pub const NON_DECAY_ERROR: f64 = 1e-2;
/// Edge-to-peak ratio above which a truncation warning is logged.
pub const NON_DECAY_WARN: f64 = 1e-6;

pub struct CauchyProjector {
    grid: Grid1D,
    padded: usize,
    kernel_hat: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CauchyProjector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CauchyProjector")
            .field("grid", &self.grid)
            .field("padded", &self.padded)
            .finish()
    }
}

impl CauchyProjector {
    pub fn new(grid: Grid1D) -> Self {
        let n = grid.count();
        let padded = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(padded);
        let inverse = planner.plan_fft_inverse(padded);
        let mut kernel = vec![Complex64::new(0.0, 0.0); padded];
        for m in (1..n).step_by(2) {
            let c = 2.0 / (PI * m as f64);
            kernel[m] = Complex64::new(c, 0.0);
            kernel[padded - m] = Complex64::new(-c, 0.0);
        }
        forward.process(&mut kernel);
        // Fold the inverse-FFT normalisation into the kernel.
        let scale = 1.0 / padded as f64;
        let kernel_hat = kernel.into_iter().map(|v| v * scale).collect();
        CauchyProjector { grid, padded, kernel_hat, forward, inverse }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Discrete Hilbert transform of `f` written into `out`.
    pub fn hilbert_into(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.grid.count();
        debug_assert_eq!(f.len(), n);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded];
        buf[..n].copy_from_slice(f);
        self.forward.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inverse.process(&mut buf);
        out.copy_from_slice(&buf[..n]);
    }

    /// `C^± f` written into `out`.
    pub fn apply_into(&self, f: &[Complex64], side: Projection, out: &mut [Complex64]) {
        self.hilbert_into(f, out);
        let half = match side {
            Projection::Plus => 0.5,
            Projection::Minus => -0.5,
        };
        let i_half = Complex64::new(0.0, 0.5);
        for (o, v) in out.iter_mut().zip(f) {
            *o = *o * i_half + v * half;
        }
    }

    pub fn apply(&self, f: &[Complex64], side: Projection) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); f.len()];
        self.apply_into(f, side, &mut out);
        out
    }

    /// Checked projection of a field living on this projector's grid.
    pub fn project(&self, h: &ComplexField, side: Projection) -> Result<ComplexField> {
        if *h.grid() != self.grid {
            return Err(Error::InvalidField("field grid differs from projector grid".into()));
        }
        let peak = h.sup_norm();
        if peak > 0.0 {
            let ratio = h.edge_magnitude() / peak;
            if ratio > NON_DECAY_ERROR {
                return Err(Error::Truncation { edge: ratio, threshold: NON_DECAY_ERROR });
            }
            if ratio > NON_DECAY_WARN {
                log::warn!("Cauchy projection of a field with edge/peak ratio {ratio:.2e}");
            }
        }
        ComplexField::new(self.grid, self.apply(h.values(), side))
    }
}

/// `C^± h` on the grid of `h`.
pub fn cauchy_project(h: &ComplexField, side: Projection) -> Result<ComplexField> {
    CauchyProjector::new(*h.grid()).project(h, side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::pv_integral_fn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn positive_frequency_content_is_kept_by_plus() {
        let g = Grid1D::from_range(-10.0, 10.0, 1024).unwrap();
        let h = ComplexField::from_fn(g, |z| Complex64::from_polar((-z * z).exp(), 10.0 * z)).unwrap();
        let p = cauchy_project(&h, Projection::Plus).unwrap();
        let m = cauchy_project(&h, Projection::Minus).unwrap();
        assert!(p.sub(&h).unwrap().sup_norm() < 1e-10);
        assert!(m.sup_norm() < 1e-10);
    }

    #[test]
    fn plemelj_difference_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid1D::from_range(-8.0, 8.0, 300).unwrap();
        let h = ComplexField::from_fn(g, |z| {
            let env = (-z * z / 4.0).exp();
            Complex64::new(rng.gen_range(-1.0..1.0) * env, rng.gen_range(-1.0..1.0) * env)
        })
        .unwrap();
        let p = cauchy_project(&h, Projection::Plus).unwrap();
        let m = cauchy_project(&h, Projection::Minus).unwrap();
        assert!(p.sub(&m).unwrap().sub(&h).unwrap().sup_norm() < 1e-10);
    }

    #[test]
    fn agrees_with_dense_pv_quadrature_for_lower_analytic_function() {
        // h = (z - i)^{-4} is analytic below the axis, so C⁻h = -h up to the
        // truncated tail; against PV quadrature of the same truncated h the
        // projector must agree to quadrature accuracy in the interior.
        let (a, b) = (-20.0, 20.0);
        let g = Grid1D::from_range(a, b, 4001).unwrap();
        let f = |z: f64| Complex64::new(1.0, 0.0) / (Complex64::new(z, -1.0)).powi(4);
        let h = ComplexField::from_fn(g, f).unwrap();
        let minus = cauchy_project(&h, Projection::Minus).unwrap();
        let plus = cauchy_project(&h, Projection::Plus).unwrap();
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for i in (1000..3001).step_by(125) {
            let z = g.node(i);
            let pv = pv_integral_fn(f, a, b, z, 0.05) / two_pi_i;
            let dense_minus = -0.5 * f(z) + pv;
            assert!((minus.values()[i] - dense_minus).norm() < 1e-6, "z = {z}");
            assert!((minus.values()[i] + f(z)).norm() < 1e-4);
            assert!(plus.values()[i].norm() < 1e-4);
        }
    }

    #[test]
    fn non_decaying_input_is_rejected() {
        let g = Grid1D::from_range(-5.0, 5.0, 64).unwrap();
        let h = ComplexField::from_real_fn(g, |_| 1.0).unwrap();
        assert!(matches!(cauchy_project(&h, Projection::Plus), Err(Error::Truncation { .. })));
    }
}
