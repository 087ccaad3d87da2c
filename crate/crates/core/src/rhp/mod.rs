//! Beals–Coifman solution of the oscillatory Riemann–Hilbert problem.
//!
//! With `ρ = r e^{iθ}` the jump factors are `w⁻ = offdiag(ρ, 0)` and
//! `w⁺ = offdiag(0, -conj ρ)`, and `μ` solves
//! `μ = I + C⁺(μ w⁻) + C⁻(μ w⁺)`.
//! The discrete projectors commute with conjugation in the sense needed for
//! `μ₂₁ = conj μ₁₂`, `μ₂₂ = conj μ₁₁` to hold exactly, so only the first row is
//! solved: `(μ₁₁, μ₁₂)` with `μ₁₁ = 1 + C⁻(-μ₁₂ conj ρ)`, `μ₁₂ = C⁺(μ₁₁ ρ)`.

pub mod cauchy;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid1D};
use crate::krylov::{gmres, norm, GmresConfig, LinearOperator};
use crate::matrix::{Mat2, Matrix2Field};
use crate::reflection::ReflectionData;

pub use cauchy::{cauchy_project, CauchyProjector, Projection};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Largest z-grid for which dense direct solves and dense SVDs are attempted.
pub const DENSE_LIMIT: usize = 512;

/// `θ = xz - tz²`.
pub fn phase(z: f64, x: f64, t: f64) -> f64 {
    x * z - t * z * z
}

/// `z₀ = x / 2t`.
pub fn stationary_point(x: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Err(Error::Domain("stationary point undefined at t = 0".into()));
    }
    Ok(x / (2.0 * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    /// GMRES, falling back to a dense LU solve on stagnation for small grids.
    Auto,
    Krylov,
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RhpConfig {
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    pub stagnation_window: usize,
    /// Fraction of the z-interval at each end over which `ρ` is tapered to zero.
    pub taper: f64,
    pub solver: SolverKind,
}

impl Default for RhpConfig {
    fn default() -> Self {
        RhpConfig {
            tol: 1e-10,
            restart: 40,
            max_iter: 4000,
            stagnation_window: 50,
            taper: 0.0,
            solver: SolverKind::Auto,
        }
    }
}

impl RhpConfig {
    pub fn with_tol(tol: f64) -> Self {
        RhpConfig { tol, ..Default::default() }
    }

    fn gmres(&self) -> GmresConfig {
        GmresConfig {
            tol: self.tol,
            restart: self.restart,
            max_iter: self.max_iter,
            stagnation_window: self.stagnation_window,
        }
    }
}

/// Smooth `sin²` ramp over the outer `fraction` of the grid at each end.
pub fn taper_window(grid: &Grid1D, fraction: f64) -> Vec<f64> {
    let n = grid.count();
    let width = fraction * (grid.last() - grid.origin());
    grid.nodes()
        .map(|z| {
            if width <= 0.0 || n < 2 {
                return 1.0;
            }
            let d = (z - grid.origin()).min(grid.last() - z);
            if d >= width {
                1.0
            } else {
                (0.5 * std::f64::consts::PI * d / width).sin().powi(2)
            }
        })
        .collect()
}

/// Triangular jump factors at one `(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpFactors {
    grid: Grid1D,
    rho: Vec<Complex64>,
    x: f64,
    t: f64,
}

impl JumpFactors {
    pub fn new(r: &ReflectionData, x: f64, t: f64) -> Self {
        let grid = *r.grid();
        let rho = grid
            .nodes()
            .zip(r.values())
            .map(|(z, v)| v * Complex64::from_polar(1.0, phase(z, x, t)))
            .collect();
        JumpFactors { grid, rho, x, t }
    }

    fn tapered(mut self, fraction: f64) -> Self {
        if fraction > 0.0 {
            for (v, w) in self.rho.iter_mut().zip(taper_window(&self.grid, fraction)) {
                *v *= w;
            }
        }
        self
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `r e^{iθ}`, the (1,2) entry of `w⁻`.
    pub fn upper(&self) -> &[Complex64] {
        &self.rho
    }

    /// `-conj(r) e^{-iθ}`, the (2,1) entry of `w⁺`.
    pub fn lower(&self, i: usize) -> Complex64 {
        -self.rho[i].conj()
    }

    pub fn wminus(&self) -> Matrix2Field {
        Matrix2Field::from_fn(self.grid, |i, _| Mat2::offdiag(self.rho[i], ZERO)).expect("finite")
    }

    pub fn wplus(&self) -> Matrix2Field {
        Matrix2Field::from_fn(self.grid, |i, _| Mat2::offdiag(ZERO, self.lower(i))).expect("finite")
    }

    /// `v⁻ = I - w⁻` at node `i`.
    pub fn vminus(&self, i: usize) -> Mat2 {
        Mat2::new(ONE, -self.rho[i], ZERO, ONE)
    }

    /// `v⁺ = I + w⁺` at node `i`.
    pub fn vplus(&self, i: usize) -> Mat2 {
        Mat2::new(ONE, ZERO, self.lower(i), ONE)
    }

    /// `v = (v⁻)⁻¹ v⁺` at node `i`.
    pub fn jump(&self, i: usize) -> Mat2 {
        let p = self.rho[i];
        Mat2::new(ONE - p.norm_sqr(), p, -p.conj(), ONE)
    }

    pub fn sup(&self) -> f64 {
        self.rho.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.rho.iter().all(|v| *v == ZERO)
    }
}

/// `(1 - C_w)` restricted to the first row, acting on `(h₁, h₂)` stacked.
struct RowOperator<'a> {
    proj: &'a CauchyProjector,
    rho: &'a [Complex64],
}

impl LinearOperator for RowOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.rho.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.rho.len();
        let (h1, h2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        let a: Vec<Complex64> = h2.iter().zip(self.rho).map(|(h, p)| -h * p.conj()).collect();
        self.proj.apply_into(&a, Projection::Minus, y1);
        let b: Vec<Complex64> = h1.iter().zip(self.rho).map(|(h, p)| h * p).collect();
        self.proj.apply_into(&b, Projection::Plus, y2);
        for (yi, hi) in y1.iter_mut().zip(h1) {
            *yi = hi - *yi;
        }
        for (yi, hi) in y2.iter_mut().zip(h2) {
            *yi = hi - *yi;
        }
    }
}

/// Adjoint of [`RowOperator`] in the Euclidean inner product.
struct RowAdjoint<'a> {
    proj: &'a CauchyProjector,
    rho: &'a [Complex64],
}

impl LinearOperator for RowAdjoint<'_> {
    fn dim(&self) -> usize {
        2 * self.rho.len()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let n = self.rho.len();
        let (g1, g2) = x.split_at(n);
        let (y1, y2) = y.split_at_mut(n);
        self.proj.apply_into(g2, Projection::Plus, y1);
        self.proj.apply_into(g1, Projection::Minus, y2);
        for i in 0..n {
            y1[i] = g1[i] - self.rho[i].conj() * y1[i];
            y2[i] = g2[i] + self.rho[i] * y2[i];
        }
    }
}

fn hilbert_entry(d: isize) -> f64 {
    if d % 2 == 0 {
        0.0
    } else {
        2.0 / (std::f64::consts::PI * d as f64)
    }
}

fn projector_entry(j: usize, k: usize, side: Projection) -> Complex64 {
    let h = Complex64::new(0.0, 0.5 * hilbert_entry(j as isize - k as isize));
    let diag = match side {
        Projection::Plus => 0.5,
        Projection::Minus => -0.5,
    };
    if j == k {
        h + diag
    } else {
        h
    }
}

fn dense_row_matrix(rho: &[Complex64]) -> DMatrix<Complex64> {
    let n = rho.len();
    DMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let id = if i == j { ONE } else { ZERO };
        match (i < n, j < n) {
            (true, false) => -projector_entry(i, j - n, Projection::Minus) * (-rho[j - n].conj()),
            (false, true) => -projector_entry(i - n, j, Projection::Plus) * rho[j],
            _ => id,
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Trivial,
    Krylov,
    Dense,
}

#[derive(Debug, Clone)]
pub struct RhpSolution {
    pub mu: Matrix2Field,
    /// Euclidean residual of the discrete first-row system.
    pub residual: f64,
    pub iterations: usize,
    pub x: f64,
    pub t: f64,
    pub method: SolveMethod,
    pub jump: JumpFactors,
    unknowns: Vec<Complex64>,
}

impl RhpSolution {
    /// Stacked `(μ₁₁ - 1, μ₁₂)`, usable as a warm start for a nearby solve.
    pub fn unknowns(&self) -> &[Complex64] {
        &self.unknowns
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryValues {
    pub mplus: Matrix2Field,
    pub mminus: Matrix2Field,
    /// `max |m⁺ - m⁻ v|` over nodes and entries.
    pub jump_residual: f64,
    /// `max |det m± - 1|`.
    pub det_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventEstimate {
    pub norm: f64,
    /// `(1+ρ)((1+ρ) M∞² + 1)`.
    pub bound: f64,
    pub m_infinity: f64,
    pub rho: f64,
    pub dense: bool,
}

/// Solver bound to one z-grid; reusable across `(x, t)` and threads.
#[derive(Debug)]
pub struct RhpSolver {
    proj: CauchyProjector,
    cfg: RhpConfig,
}

impl RhpSolver {
    pub fn new(zgrid: Grid1D, cfg: RhpConfig) -> Self {
        RhpSolver { proj: CauchyProjector::new(zgrid), cfg }
    }

    pub fn config(&self) -> &RhpConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid1D {
        self.proj.grid()
    }

    pub fn projector(&self) -> &CauchyProjector {
        &self.proj
    }

    pub fn jump(&self, r: &ReflectionData, x: f64, t: f64) -> Result<JumpFactors> {
        self.check(r)?;
        Ok(JumpFactors::new(r, x, t).tapered(self.cfg.taper))
    }

    fn check(&self, r: &ReflectionData) -> Result<()> {
        if r.grid() != self.grid() {
            return Err(Error::InvalidGrid("reflection data not on the solver grid".into()));
        }
        Ok(())
    }

    pub fn solve(&self, r: &ReflectionData, x: f64, t: f64) -> Result<RhpSolution> {
        let jump = self.jump(r, x, t)?;
        self.solve_jump(jump, None)
    }

    pub fn solve_with_guess(
        &self,
        r: &ReflectionData,
        x: f64,
        t: f64,
        guess: Option<&[Complex64]>,
    ) -> Result<RhpSolution> {
        let jump = self.jump(r, x, t)?;
        self.solve_jump(jump, guess)
    }

    pub fn solve_jump(&self, jump: JumpFactors, guess: Option<&[Complex64]>) -> Result<RhpSolution> {
        let n = self.grid().count();
        if jump.grid != *self.grid() {
            return Err(Error::InvalidGrid("jump factors not on the solver grid".into()));
        }
        if jump.is_zero() {
            let unknowns = vec![ZERO; 2 * n];
            return Ok(self.assemble(jump, unknowns, 0.0, 0, SolveMethod::Trivial));
        }
        // Unknowns ν = (μ₁₁ - 1, μ₁₂); right-hand side C_w applied to the row (1, 0).
        let mut rhs = vec![ZERO; 2 * n];
        self.proj.apply_into(&jump.rho, Projection::Plus, &mut rhs[n..]);
        let op = RowOperator { proj: &self.proj, rho: &jump.rho };
        let guess = guess.filter(|g| g.len() == 2 * n);

        let dense = |hist: Option<Vec<f64>>| -> Result<(Vec<Complex64>, f64, usize, SolveMethod)> {
            let a = dense_row_matrix(&jump.rho);
            let b = DMatrix::from_column_slice(2 * n, 1, &rhs);
            let sol = a.lu().solve(&b).ok_or_else(|| Error::SolverFailure {
                history: hist.clone().unwrap_or_default(),
            })?;
            let x: Vec<Complex64> = sol.iter().copied().collect();
            let mut ax = vec![ZERO; 2 * n];
            op.apply(&x, &mut ax);
            let res = norm(&ax.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
            Ok((x, res, hist.map_or(0, |h| h.len()), SolveMethod::Dense))
        };

        let (x, residual, iterations, method) = match self.cfg.solver {
            SolverKind::Dense => dense(None)?,
            SolverKind::Krylov | SolverKind::Auto => match gmres(&op, &rhs, guess, &self.cfg.gmres()) {
                Ok(out) => (out.x, out.residual, out.iterations, SolveMethod::Krylov),
                Err(Error::SolverFailure { history })
                    if self.cfg.solver == SolverKind::Auto && n <= DENSE_LIMIT =>
                {
                    log::warn!("GMRES stagnated after {} iterations; dense fallback", history.len());
                    dense(Some(history))?
                }
                Err(e) => return Err(e),
            },
        };
        Ok(self.assemble(jump, x, residual, iterations, method))
    }

    fn assemble(
        &self,
        jump: JumpFactors,
        unknowns: Vec<Complex64>,
        residual: f64,
        iterations: usize,
        method: SolveMethod,
    ) -> RhpSolution {
        let n = unknowns.len() / 2;
        let grid = *self.grid();
        let m11: Vec<Complex64> = unknowns[..n].iter().map(|v| v + ONE).collect();
        let m12 = unknowns[n..].to_vec();
        let m21: Vec<Complex64> = m12.iter().map(|v| v.conj()).collect();
        let m22: Vec<Complex64> = m11.iter().map(|v| v.conj()).collect();
        let field = |v| ComplexField::new(grid, v).expect("solver output is finite");
        let mu = Matrix2Field::new(field(m11), field(m12), field(m21), field(m22)).expect("same grid");
        RhpSolution { mu, residual, iterations, x: jump.x, t: jump.t, method, jump, unknowns }
    }

    /// `m± = I + C±(μ(w⁺ + w⁻))`, with the jump relation and determinant checked.
    pub fn boundary_values(&self, sol: &RhpSolution) -> Result<BoundaryValues> {
        let n = sol.mu.len();
        let jump = &sol.jump;
        let mw: [Vec<Complex64>; 4] = [
            (0..n).map(|i| sol.mu.m12.values()[i] * jump.lower(i)).collect(),
            (0..n).map(|i| sol.mu.m11.values()[i] * jump.rho[i]).collect(),
            (0..n).map(|i| sol.mu.m22.values()[i] * jump.lower(i)).collect(),
            (0..n).map(|i| sol.mu.m21.values()[i] * jump.rho[i]).collect(),
        ];
        let side = |s: Projection| -> Vec<Mat2> {
            let e: Vec<Vec<Complex64>> = mw.iter().map(|v| self.proj.apply(v, s)).collect();
            (0..n)
                .map(|i| Mat2::IDENTITY + Mat2::new(e[0][i], e[1][i], e[2][i], e[3][i]))
                .collect()
        };
        let plus = side(Projection::Plus);
        let minus = side(Projection::Minus);
        let mut jump_residual: f64 = 0.0;
        let mut det_defect: f64 = 0.0;
        for i in 0..n {
            jump_residual = jump_residual.max((plus[i] - minus[i] * jump.jump(i)).max_abs());
            det_defect = det_defect
                .max((plus[i].det() - 1.0).norm())
                .max((minus[i].det() - 1.0).norm());
        }
        let grid = *self.grid();
        Ok(BoundaryValues {
            mplus: Matrix2Field::from_mats(grid, &plus)?,
            mminus: Matrix2Field::from_mats(grid, &minus)?,
            jump_residual,
            det_defect,
        })
    }

    /// `𝐐 = ∫ μ (w⁺ + w⁻) dz` by the trapezoid rule.
    pub fn bold_q(&self, sol: &RhpSolution) -> Mat2 {
        let n = sol.mu.len();
        let h = self.grid().spacing();
        let jump = &sol.jump;
        let mut q = Mat2::ZERO;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            let mu = sol.mu.at(i);
            let wi = Mat2::offdiag(jump.rho[i], jump.lower(i));
            q = q + (mu * wi).scale(Complex64::new(w, 0.0));
        }
        q
    }

    /// `q(x, t) = 𝐐₁₂ / 2π`.
    pub fn reconstruct(&self, sol: &RhpSolution) -> Complex64 {
        self.bold_q(sol).get(0, 1) / (2.0 * std::f64::consts::PI)
    }

    /// Empirical `‖(1 - C_w)⁻¹‖` on L² together with the a priori bound.
    pub fn resolvent_norm(&self, r: &ReflectionData, x: f64, t: f64) -> Result<ResolventEstimate> {
        let sol = self.solve(r, x, t)?;
        let bv = self.boundary_values(&sol)?;
        let m_infinity = bv.mplus.sup_norm();
        let rho = r.rho();
        let bound = (1.0 + rho) * ((1.0 + rho) * m_infinity * m_infinity + 1.0);
        let n = self.grid().count();
        let jump = &sol.jump;
        let dense = n <= DENSE_LIMIT;
        let norm = if jump.is_zero() {
            1.0
        } else if dense {
            let svd = dense_row_matrix(&jump.rho).svd(false, false);
            let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
            1.0 / smin
        } else {
            self.inverse_norm_power(jump)?
        };
        Ok(ResolventEstimate { norm, bound, m_infinity, rho, dense })
    }

    /// Power iteration on `(K K*)⁻¹`; `K` is the first-row operator.
    fn inverse_norm_power(&self, jump: &JumpFactors) -> Result<f64> {
        let n = jump.rho.len();
        let op = RowOperator { proj: &self.proj, rho: &jump.rho };
        let adj = RowAdjoint { proj: &self.proj, rho: &jump.rho };
        let cfg = GmresConfig { tol: 1e-10, ..self.cfg.gmres() };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v: Vec<Complex64> = (0..2 * n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = norm(&v);
        v.iter_mut().for_each(|c| *c /= s);
        let mut lambda = 0.0;
        for _ in 0..20 {
            let u = gmres(&adj, &v, None, &cfg)?.x;
            let w = gmres(&op, &u, None, &cfg)?.x;
            let next = norm(&w);
            v = w.iter().map(|c| c / next).collect();
            let stall = (next - lambda).abs() <= 1e-6 * next;
            lambda = next;
            if stall {
                break;
            }
        }
        Ok(lambda.sqrt())
    }
}

/// One-shot solve with a fresh solver on the grid of `r`.
pub fn solve_mu(r: &ReflectionData, x: f64, t: f64, tol: f64) -> Result<RhpSolution> {
    RhpSolver::new(*r.grid(), RhpConfig::with_tol(tol)).solve(r, x, t)
}

pub fn boundary_values(sol: &RhpSolution) -> Result<BoundaryValues> {
    RhpSolver::new(*sol.jump.grid(), RhpConfig::default()).boundary_values(sol)
}

pub fn reconstruct(sol: &RhpSolution) -> Complex64 {
    RhpSolver::new(*sol.jump.grid(), RhpConfig::default()).reconstruct(sol)
}

pub fn resolvent_norm(r: &ReflectionData, x: f64, t: f64) -> Result<ResolventEstimate> {
    RhpSolver::new(*r.grid(), RhpConfig::default()).resolvent_norm(r, x, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointDiagnostics {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub q: ComplexField,
    pub diagnostics: Vec<PointDiagnostics>,
}

/// `q(·, t)` on `xgrid`; contiguous blocks of x are solved in parallel, each
/// block warm-starting from its previous node.
pub fn reconstruct_on_grid(
    r: &ReflectionData,
    t: f64,
    xgrid: &Grid1D,
    cfg: RhpConfig,
) -> Result<Reconstruction> {
    let solver = RhpSolver::new(*r.grid(), cfg);
    let xs: Vec<f64> = xgrid.nodes().collect();
    let block = 8;
    let blocks: Vec<Vec<(Complex64, PointDiagnostics)>> = xs
        .par_chunks(block)
        .map(|chunk| {
            let mut guess: Option<Vec<Complex64>> = None;
            chunk
                .iter()
                .map(|&x| {
                    let sol = solver.solve_with_guess(r, x, t, guess.as_deref())?;
                    let q = solver.reconstruct(&sol);
                    let d = PointDiagnostics { x, residual: sol.residual, iterations: sol.iterations };
                    guess = Some(sol.unknowns);
                    Ok((q, d))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (q, diagnostics): (Vec<_>, Vec<_>) = blocks.into_iter().flatten().unzip();
    Ok(Reconstruction { q: ComplexField::new(*xgrid, q)?, diagnostics })
}
