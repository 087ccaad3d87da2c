//! 2×2 complex matrices and matrix-valued fields.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn new(m11: Complex64, m12: Complex64, m21: Complex64, m22: Complex64) -> Self {
        Mat2([[m11, m12], [m21, m22]])
    }

    pub fn diag(d1: Complex64, d2: Complex64) -> Self {
        Mat2::new(d1, ZERO, ZERO, d2)
    }

    pub fn offdiag(upper: Complex64, lower: Complex64) -> Self {
        Mat2::new(ZERO, upper, lower, ZERO)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d.norm() == 0.0 {
            return None;
        }
        let m = &self.0;
        Some(Mat2::new(m[1][1] / d, -m[0][1] / d, -m[1][0] / d, m[0][0] / d))
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// `exp(Ω)` for a traceless Ω: `cosh(s) I + sinh(s)/s Ω` with `s² = -det Ω`.
    pub fn exp_traceless(&self) -> Mat2 {
        let s2 = -self.det();
        let s = s2.sqrt();
        let (c, sinhc) = if s.norm() < 1e-4 {
            // Taylor series; s² is tiny so four terms reach rounding.
            (
                ONE + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0,
                ONE + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0,
            )
        } else {
            (s.cosh(), s.sinh() / s)
        };
        Mat2::IDENTITY.scale(c) + self.scale(sinhc)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2([
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        Mat2::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        self + rhs.scale(-ONE)
    }
}

/// 2×2-matrix-valued samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix2Field {
    pub m11: ComplexField,
    pub m12: ComplexField,
    pub m21: ComplexField,
    pub m22: ComplexField,
}

impl Matrix2Field {
    pub fn new(
        m11: ComplexField,
        m12: ComplexField,
        m21: ComplexField,
        m22: ComplexField,
    ) -> Result<Self> {
        let g = *m11.grid();
        if [&m12, &m21, &m22].iter().any(|f| *f.grid() != g) {
            return Err(Error::InvalidField("matrix entries on different grids".into()));
        }
        Ok(Matrix2Field { m11, m12, m21, m22 })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(usize, f64) -> Mat2) -> Result<Self> {
        let mats: Vec<Mat2> = grid.nodes().enumerate().map(|(i, x)| f(i, x)).collect();
        Matrix2Field::from_mats(grid, &mats)
    }

    pub fn from_mats(grid: Grid1D, mats: &[Mat2]) -> Result<Self> {
        let entry = |i: usize, j: usize| {
            ComplexField::new(grid, mats.iter().map(|m| m.0[i][j]).collect())
        };
        Matrix2Field::new(entry(0, 0)?, entry(0, 1)?, entry(1, 0)?, entry(1, 1)?)
    }

    pub fn identity(grid: Grid1D) -> Self {
        Matrix2Field::from_fn(grid, |_, _| Mat2::IDENTITY).expect("identity is finite")
    }

    pub fn grid(&self) -> &Grid1D {
        self.m11.grid()
    }

    pub fn len(&self) -> usize {
        self.m11.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m11.is_empty()
    }

    #[inline]
    pub fn at(&self, i: usize) -> Mat2 {
        Mat2::new(
            self.m11.values()[i],
            self.m12.values()[i],
            self.m21.values()[i],
            self.m22.values()[i],
        )
    }

    /// Largest entry modulus over the grid.
    pub fn sup_norm(&self) -> f64 {
        [&self.m11, &self.m12, &self.m21, &self.m22]
            .iter()
            .map(|f| f.sup_norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|m(z) - other(z)|` entry over the grid.
    pub fn max_diff(&self, other: &Matrix2Field) -> f64 {
        (0..self.len())
            .map(|i| (self.at(i) - other.at(i)).max_abs())
            .fold(0.0, f64::max)
    }
}
