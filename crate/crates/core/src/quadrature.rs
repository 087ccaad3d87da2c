//! Quadrature helpers: Gauss–Legendre panels, local interpolation of sampled
//! fields, and principal-value integrals by singularity subtraction.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule with `panels` equal panels of `order` points.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let lo = a + p as f64 * width;
            for (x, w) in xs.iter().zip(&ws) {
                nodes.push(lo + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        CompositeRule { nodes, weights }
    }

    /// Panels no wider than `max_width`.
    pub fn with_max_width(a: f64, b: f64, max_width: f64, order: usize) -> Self {
        let panels = (((b - a) / max_width).ceil() as usize).max(1);
        CompositeRule::new(a, b, panels, order)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| f(x) * w).sum()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
}

/// Local Lagrange interpolation of samples on a uniform grid; zero outside it.
#[derive(Debug, Clone)]
pub struct Interpolant<'a> {
    grid: Grid1D,
    values: &'a [Complex64],
    points: usize,
    bary: Vec<f64>,
}

impl<'a> Interpolant<'a> {
    pub fn new(field: &'a ComplexField) -> Self {
        Interpolant::with_points(*field.grid(), field.values(), 8)
    }

    pub fn with_points(grid: Grid1D, values: &'a [Complex64], points: usize) -> Self {
        let points = points.min(grid.count()).max(2);
        // Barycentric weights of equispaced nodes: (-1)^j C(p-1, j).
        let mut bary = Vec::with_capacity(points);
        let mut binom = 1.0;
        for j in 0..points {
            bary.push(if j % 2 == 0 { binom } else { -binom });
            binom = binom * (points - 1 - j) as f64 / (j + 1) as f64;
        }
        Interpolant { grid, values, points, bary }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.grid.count();
        if !self.grid.contains(x) {
            return Complex64::new(0.0, 0.0);
        }
        let s = (x - self.grid.origin()) / self.grid.spacing();
        let cell = (s.floor() as isize).clamp(0, n as isize - 2);
        let half = (self.points / 2) as isize;
        let start = (cell - half + 1).clamp(0, (n - self.points) as isize) as usize;
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = 0.0;
        for j in 0..self.points {
            let d = s - (start + j) as f64;
            if d.abs() < 1e-14 {
                return self.values[start + j];
            }
            let c = self.bary[j] / d;
            num += self.values[start + j] * c;
            den += c;
        }
        num / den
    }
}

/// Principal value `PV ∫ f(z)/(z - z0) dz` over the whole grid of `samples`.
///
/// The smooth remainder `(f(z) - f(z0))/(z - z0)` is integrated with
/// Gauss–Legendre panels on the local interpolant; the subtracted piece
/// contributes `f(z0) ln((b - z0)/(z0 - a))`.
pub fn pv_integral(samples: &ComplexField, singularity: f64) -> Result<Complex64> {
    let grid = samples.grid();
    let (a, b) = (grid.origin(), grid.last());
    if !(singularity > a && singularity < b) {
        return Err(Error::Domain(format!(
            "singularity {singularity} must lie strictly inside [{a}, {b}]"
        )));
    }
    let interp = Interpolant::new(samples);
    Ok(pv_integral_fn(|z| interp.eval(z), a, b, singularity, grid.spacing()))
}

/// `PV ∫_a^b f(z)/(z - z0) dz` for a callable `f`, with panels no wider than `panel`.
pub fn pv_integral_fn(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    z0: f64,
    panel: f64,
) -> Complex64 {
    let f0 = f(z0);
    let smooth = |z: f64| (f(z) - f0) / (z - z0);
    let left = CompositeRule::with_max_width(a, z0, panel, 8).integrate(smooth);
    let right = CompositeRule::with_max_width(z0, b, panel, 8).integrate(smooth);
    left + right + f0 * ((b - z0) / (z0 - a)).ln()
}

/// `∫_a^b f(s)/(s - z) ds` for `z` off the real axis, regularised at `Re z`.
pub fn cauchy_integral_fn(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    z: Complex64,
    panel: f64,
) -> Complex64 {
    let x = z.re;
    let log_term = (Complex64::new(b, 0.0) - z).ln() - (Complex64::new(a, 0.0) - z).ln();
    if x > a && x < b {
        let fx = f(x);
        let smooth = |s: f64| (f(s) - fx) / (s - z);
        let left = CompositeRule::with_max_width(a, x, panel, 8).integrate(smooth);
        let right = CompositeRule::with_max_width(x, b, panel, 8).integrate(smooth);
        left + right + fx * log_term
    } else {
        CompositeRule::with_max_width(a, b, panel, 8).integrate(|s| f(s) / (s - z))
    }
}
