use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown unit tag `{0}`")]
    UnknownUnit(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("infeasible constraint: {0}")]
    Infeasible(String),

    #[error("grid too small: boundary amplitude ratio {ratio:e} exceeds {limit:e}")]
    GridTooSmall { ratio: f64, limit: f64 },

    #[error("ground state did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("wave function reached the grid boundary at t = {t} (boundary/peak density {ratio:e})")]
    FrameEscape { t: f64, ratio: f64 },

    #[error("momentum content left the expected band at t = {t} (edge/peak spectral density {ratio:e})")]
    MomentumEscape { t: f64, ratio: f64 },

    #[error("grid resolves |k| <= {k_max} but the condensate needs {k_needed} at t = {t}")]
    Unresolved { t: f64, k_needed: f64, k_max: f64 },

    #[error("numerical instability: non-finite values at step {step}")]
    Unstable { step: usize },

    #[error("coverage: {0}")]
    Coverage(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("malformed file: {0}")]
    Format(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. }
                | Error::FrameEscape { .. }
                | Error::MomentumEscape { .. }
                | Error::Unresolved { .. }
                | Error::Unstable { .. }
                | Error::GridTooSmall { .. }
                | Error::Coverage(_)
        )
    }
}
