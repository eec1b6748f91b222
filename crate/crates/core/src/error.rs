use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Failures surfaced by the numerical routines.
///
/// Validation variants are raised before any computation starts; solver
/// variants carry the last diagnostic the solver had.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// `s` outside the open interval `(0, 1)`, or outside a module's range.
    InvalidOrder {
        s: f64,
        reason: &'static str,
    },
    InvalidGrid(String),
    InvalidModulation {
        amplitude: f64,
    },
    WrongBoundary {
        expected: &'static str,
    },
    IncompleteField(&'static str),
    NonintegrableDensity {
        beta: f64,
    },
    InvalidConfig(String),
    InvalidLevels(String),
    InvalidInput(String),
    SingularState {
        i: usize,
        j: usize,
    },
    SolverFailure {
        solver: &'static str,
        residual: f64,
        iterations: usize,
    },
    ConstraintTouching {
        margin: f64,
    },
    Unstable {
        time: f64,
        sup: f64,
    },
    CflViolation {
        dt: f64,
        limit: f64,
    },
}

impl Error {
    /// True for errors caught while checking inputs, as opposed to solver
    /// breakdowns.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SolverFailure { .. } | Error::ConstraintTouching { .. } | Error::Unstable { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidOrder { s, reason } => {
                write!(f, "invalid fractional order s = {s}: {reason}")
            }
            Error::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            Error::InvalidModulation { amplitude } => write!(
                f,
                "invalid modulation: amplitude {amplitude} must lie in [0, 1) so that a_min > 0"
            ),
            Error::WrongBoundary { expected } => {
                write!(f, "wrong boundary kind: operator expects a {expected} field")
            }
            Error::IncompleteField(msg) => write!(f, "incomplete field: {msg}"),
            Error::NonintegrableDensity { beta } => write!(
                f,
                "density tail decays like |x|^-{beta}, which is not integrable (need beta > 1)"
            ),
            Error::InvalidConfig(msg) => write!(f, "invalid layer configuration: {msg}"),
            Error::InvalidLevels(msg) => write!(f, "invalid levels: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::SingularState { i, j } => {
                write!(f, "particles {i} and {j} coincide; the interaction is singular")
            }
            Error::SolverFailure { solver, residual, iterations } => write!(
                f,
                "{solver} did not converge after {iterations} iterations (last residual {residual:e})"
            ),
            Error::ConstraintTouching { margin } => write!(
                f,
                "minimizer touches a window constraint (detachment margin {margin:e}); \
                 the windows are badly placed for this modulation"
            ),
            Error::Unstable { time, sup } => write!(
                f,
                "solution left the comparison envelope at t = {time} (sup = {sup}); reduce the time step"
            ),
            Error::CflViolation { dt, limit } => {
                write!(f, "time step {dt:e} violates the CFL limit {limit:e}")
            }
        }
    }
}

impl core::error::Error for Error {}
