//! Restarted GMRES for complex linear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy)]
pub struct GmresConfig {
    /// Absolute tolerance on the Euclidean residual norm.
    pub tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Fail when the residual has not decreased over this many iterations.
    pub stagnation_window: usize,
}

impl Default for GmresConfig {
    fn default() -> Self {
        GmresConfig { tol: 1e-10, restart: 40, max_iter: 4000, stagnation_window: 50 }
    }
}

#[derive(Debug, Clone)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub residual: f64,
    pub iterations: usize,
    pub history: Vec<f64>,
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn residual_of(op: &dyn LinearOperator, b: &[Complex64], x: &[Complex64]) -> Vec<Complex64> {
    let mut ax = vec![Complex64::new(0.0, 0.0); b.len()];
    op.apply(x, &mut ax);
    b.iter().zip(&ax).map(|(b, a)| b - a).collect()
}

fn stagnated(history: &[f64], window: usize) -> bool {
    let n = history.len();
    n > window && history[n - 1] >= history[n - 1 - window]
}

/// Solve `A x = b` starting from `x0` (zero when `None`).
pub fn gmres(
    op: &dyn LinearOperator,
    b: &[Complex64],
    x0: Option<&[Complex64]>,
    cfg: &GmresConfig,
) -> Result<GmresOutcome> {
    let n = op.dim();
    assert_eq!(b.len(), n);
    let zero = Complex64::new(0.0, 0.0);
    let mut x = match x0 {
        Some(g) => g.to_vec(),
        None => vec![zero; n],
    };
    let m = cfg.restart.max(1);
    let mut history = Vec::new();
    let mut iterations = 0;

    loop {
        let r = residual_of(op, b, &x);
        let beta = norm(&r);
        if history.is_empty() {
            history.push(beta);
        }
        if beta <= cfg.tol {
            return Ok(GmresOutcome { x, residual: beta, iterations, history });
        }
        if iterations >= cfg.max_iter {
            return Err(Error::SolverFailure { history });
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns after Givens rotation (upper triangular part).
        let mut hcols: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        let mut w = vec![zero; n];

        while k < m && iterations < cfg.max_iter {
            op.apply(&basis[k], &mut w);
            let mut h = vec![zero; k + 2];
            for (j, v) in basis.iter().enumerate() {
                let c = dot(v, &w);
                h[j] = c;
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
            let hn = norm(&w);
            h[k + 1] = Complex64::new(hn, 0.0);
            for j in 0..k {
                let t = cs[j] * h[j] + sn[j] * h[j + 1];
                h[j + 1] = -sn[j].conj() * h[j] + cs[j] * h[j + 1];
                h[j] = t;
            }
            // Rotation zeroing h[k+1].
            let (a, bb) = (h[k], h[k + 1]);
            let an = a.norm();
            let (c, s) = if an == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let den = (an * an + bb.norm_sqr()).sqrt();
                (an / den, (a / an) * bb.conj() / den)
            };
            h[k] = c * a + s * bb;
            h[k + 1] = zero;
            g[k + 1] = -s.conj() * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            hcols.push(h);
            iterations += 1;
            k += 1;
            let est = g[k].norm();
            history.push(est);
            if est <= cfg.tol || hn == 0.0 {
                break;
            }
            if stagnated(&history, cfg.stagnation_window) {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }

        // Back substitution for the k×k triangular system.
        let mut y = vec![zero; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= hcols[j][i] * y[j];
            }
            y[i] = s / hcols[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        if stagnated(&history, cfg.stagnation_window) {
            let true_res = norm(&residual_of(op, b, &x));
            if true_res <= cfg.tol {
                return Ok(GmresOutcome { x, residual: true_res, iterations, history });
            }
            history.push(true_res);
            return Err(Error::SolverFailure { history });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    struct Dense(Vec<Vec<Complex64>>);

    impl LinearOperator for Dense {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            for (yi, row) in y.iter_mut().zip(&self.0) {
                *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
            }
        }
    }

    fn random_system(n: usize, seed: u64, shift: f64) -> (Dense, Vec<Complex64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| c() / (n as f64).sqrt() + if i == j { Complex64::new(shift, 0.0) } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let b = (0..n).map(|_| c()).collect();
        (Dense(a), b)
    }

    #[test]
    fn solves_well_conditioned_system() {
        let (a, b) = random_system(120, 3, 3.0);
        let out = gmres(&a, &b, None, &GmresConfig::default()).unwrap();
        let r = residual_of(&a, &b, &out.x);
        assert!(norm(&r) < 1e-9);
        assert!(out.iterations < 60);
    }

    #[test]
    fn restarts_reach_tolerance() {
        let (a, b) = random_system(150, 5, 1.5);
        let cfg = GmresConfig { restart: 10, ..Default::default() };
        let out = gmres(&a, &b, None, &cfg).unwrap();
        assert!(norm(&residual_of(&a, &b, &out.x)) < 1e-9);
    }

    #[test]
    fn warm_start_at_solution_returns_immediately() {
        let (a, b) = random_system(40, 8, 3.0);
        let cfg = GmresConfig::default();
        let first = gmres(&a, &b, None, &cfg).unwrap();
        let second = gmres(&a, &b, Some(&first.x), &cfg).unwrap();
        assert_eq!(second.iterations, 0);
    }

    #[test]
    fn stagnation_is_reported_with_history() {
        // A cyclic shift: GMRES(m) with m < n makes no progress on e_1.
        struct Shift(usize);
        impl LinearOperator for Shift {
            fn dim(&self) -> usize {
                self.0
            }
            fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
                for i in 0..self.0 {
                    y[(i + 1) % self.0] = x[i];
                }
            }
        }
        let n = 200;
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        b[0] = Complex64::new(1.0, 0.0);
        let cfg = GmresConfig { restart: 20, ..Default::default() };
        match gmres(&Shift(n), &b, None, &cfg) {
            Err(Error::SolverFailure { history }) => assert!(history.len() > 50),
            other => panic!("expected stagnation, got {other:?}"),
        }
    }
}
