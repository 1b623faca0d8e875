use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid nonlinearity: {0}")]
    InvalidNonlinearity(String),
    #[error("no sign change of T_omega on (0, {y_max}]")]
    NoRoot { y_max: f64 },
    #[error("degenerate root y0={y0}: T'(y0)={slope:e}")]
    DegenerateRoot { y0: f64, slope: f64 },
    #[error("profile integration failed: {0}")]
    ProfileBlowup(String),
    #[error("profile tail not resolved on the grid (no samples in the fit window)")]
    TailUnresolved,
    #[error("finite-difference step too large: Richardson discrepancy {discrepancy:e}")]
    StepTooLarge { discrepancy: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("wrap-around: edge amplitude {edge:e} exceeds {limit:e}")]
    WrapAround { edge: f64, limit: f64 },
    #[error("field is not odd (relative residual {0:e})")]
    NotOdd(f64),
    #[error("source not orthogonal to the kernel (relative components {0:e}, {1:e})")]
    NotOrthogonal(f64, f64),
    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("singular Gram matrix")]
    SingularGram,
    #[error("interaction constant routes disagree: {route_i} vs {route_ii}")]
    CrossCheckFailed { route_i: f64, route_ii: f64 },
    #[error("non-finite sample at t={t}")]
    NonFinite { t: f64 },
    #[error("modulation fit lost at t={t}: {reason}")]
    FitLost { t: f64, reason: String },
    #[error("singular modulation Jacobian")]
    SingularJacobian,
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("refinement did not halve the residual ({before:e} -> {after:e})")]
    NoImprovement { before: f64, after: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::InvalidNonlinearity(_) | Error::InvalidGrid(_) | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
