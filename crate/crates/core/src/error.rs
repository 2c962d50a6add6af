use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("aliasing: {samples} time samples cannot resolve a cubic term with {harmonics} harmonics (need at least {required})")]
    Aliasing {
        samples: usize,
        harmonics: usize,
        required: usize,
    },

    #[error("eigenvalue solver failed on the Hill matrix (condition estimate {condition:.3e})")]
    Eigen { condition: f64 },

    #[error(
        "Newton corrector did not converge after {iterations} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular linear system")]
    Singular,

    #[error("step size underflow at t = {t:.6e} (h = {h:.3e}); the problem may be stiff")]
    StepUnderflow { t: f64, h: f64 },

    #[error("no seed bifurcation found: {0}")]
    SeedNotFound(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
}

pub type Result<T> = std::result::Result<T, Error>;
