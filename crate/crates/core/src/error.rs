use thiserror::Error;

/// Errors produced anywhere in the scattering / Riemann–Hilbert pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Input does not decay at the edges of its grid.
    #[error("truncation error: edge magnitude {edge:.3e} exceeds {threshold:.3e}")]
    Truncation { edge: f64, threshold: f64 },

    #[error("integrator failure: {0}")]
    IntegratorFailure(String),

    #[error("degenerate scattering entry: |a| = {modulus:.3e} at z = {z}")]
    DegenerateEntry { z: f64, modulus: f64 },

    /// Krylov iteration stagnated or ran out of iterations.
    #[error("solver failure after {} iterations (last residual {:.3e})", history.len(), history.last().copied().unwrap_or(f64::NAN))]
    SolverFailure { history: Vec<f64> },

    /// The monitored norms left the admissible region during time stepping.
    #[error("instability at t = {t}: {reason}")]
    Instability {
        t: f64,
        reason: String,
        completed_steps: usize,
        /// Steps completed before the violation.
        trajectory: Option<Box<crate::perturbation::TrajectoryRecord>>,
    },

    #[error("F evaluation failed at t = {t}, y = {y}: {source}")]
    FEvaluation {
        t: f64,
        y: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("step size {dt} exceeds the admissible bound {bound}")]
    StepSize { dt: f64, bound: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
