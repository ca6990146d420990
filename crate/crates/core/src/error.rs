use alloc::string::String;

/// Errors raised by the solver core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("position vector has zero length")]
    ZeroRadius,

    #[error(
        "propagation stopped at t = {t_reached} s of {tof} s: step budget of {max_steps} exhausted"
    )]
    StepBudgetExhausted {
        t_reached: f64,
        tof: f64,
        max_steps: usize,
    },

    #[error("propagation stopped at t = {t_reached} s: step size underflow")]
    StepSizeUnderflow { t_reached: f64 },

    #[error("propagation produced a non-finite state at t = {t_reached} s")]
    NonFiniteState { t_reached: f64 },

    #[error("unsupported orbit: eccentricity {e} (closed orbits only)")]
    UnsupportedOrbit { e: f64 },

    #[error("no Lambert solution with {revs} revolutions for the requested time of flight")]
    LambertNoSolution { revs: u32 },

    #[error("Lambert iteration did not converge")]
    LambertNotConverged,

    #[error("transfer plane undefined: positions are collinear and no plane hint was given")]
    AmbiguousPlane,

    #[error("degenerate transfer geometry: {0}")]
    DegenerateGeometry(&'static str),

    #[error("shooting Jacobian is singular (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("magnitude difference coefficient undefined: column has no nonzero value")]
    UndefinedRho,

    #[error("training diverged at epoch {epoch}: non-finite loss")]
    Diverged { epoch: usize },

    #[error("model layout mismatch: {0}")]
    ModelLayout(String),

    #[error("parse error at line {line} (byte {offset}): {message}")]
    Parse {
        line: usize,
        offset: usize,
        message: String,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: &str) -> Error {
    Error::Domain(String::from(msg))
}
