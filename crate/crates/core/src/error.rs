use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Numerical and precondition failures raised by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("order {order} needs a grid of at least {needed} points, got {n}")]
    Aliasing {
        order: usize,
        n: usize,
        needed: usize,
    },

    #[error("grid size {0} must be even and positive")]
    InvalidGrid(usize),

    #[error("cos/sin coefficient arrays differ in length ({cos} vs {sin})")]
    LengthMismatch { cos: usize, sin: usize },

    #[error("shift {shift} is within the resonance margin of eigenvalue j^2 = {}", j * j)]
    ResonantShift { shift: f64, j: usize },

    #[error("{c} lies below the spectrum (lowest eigenvalue is 0)")]
    BelowSpectrum { c: f64 },

    #[error("derivative range [{q}, {p}] is not inside a single spectral gap (touches or straddles j^2 = {})", j * j)]
    GapViolation { q: f64, p: f64, j: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    MaxIterExceeded { iterations: usize, residual: f64 },

    #[error(
        "g' ranges over [{min}, {max}] on the computed solution, outside the certified [{q}, {p}]"
    )]
    PostHocRangeViolation { min: f64, max: f64, q: f64, p: f64 },

    #[error("linearization is singular (smallest singular value {sigma_min:e})")]
    SingularJacobian { sigma_min: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    #[error("no admissible window around t = {t_center}: g'(t) = {gp} is not inside ({lo}, {hi}) with margin")]
    NoWindow {
        t_center: f64,
        gp: f64,
        lo: f64,
        hi: f64,
    },

    #[error("g' never enters the gap ({lo}, {hi}) on [{search_lo}, {search_hi}]")]
    NoWitness {
        lo: f64,
        hi: f64,
        search_lo: f64,
        search_hi: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
