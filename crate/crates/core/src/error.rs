use thiserror::Error;

/// Errors shared by the spectral kernels and both solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),

    #[error("n must be even and >= 8, got {0}")]
    BadGridSize(usize),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("fields live on different grids ({left} vs {right} nodes)")]
    GridMismatch { left: usize, right: usize },

    #[error("velocity history does not cover t = {t}")]
    HistoryGap { t: f64 },

    #[error("density fell below the vacuum floor at t = {t}: min rho = {min_rho:.3e}")]
    Vacuum { t: f64, min_rho: f64 },

    #[error("flow map folded at t = {t}: min det grad = {min_det:.3e}")]
    MapFolding { t: f64, min_det: f64 },

    #[error("Picard iteration did not converge at t = {t} ({iters} iterations, last update {last_update:.3e})")]
    NoConvergence { t: f64, iters: usize, last_update: f64 },

    #[error("time step {dt:.3e} violates the CFL bound {bound:.3e} (max |u| + c = {speed:.3e})")]
    CflViolation { dt: f64, bound: f64, speed: f64 },

    #[error("velocity gradient blew up at t = {t}: max |grad u| = {max_grad:.3e} exceeds {limit:.3e}")]
    Blowup { t: f64, max_grad: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
