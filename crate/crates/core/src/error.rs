use thiserror::Error;

/// Errors raised by the grid, solvers, experiments and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("invalid initial condition: {0}")]
    InvalidInitialCondition(String),

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("blow-up at t = {time}: {detail}")]
    BlowUp { time: f64, detail: String },

    #[error("clip budget exceeded at t = {time}: {count} clip events > limit {limit}")]
    ClipBudget { time: f64, count: u64, limit: u64 },

    #[error("time step too large at t = {time}: dt = {dt} exceeds advective bound {bound}")]
    StepTooLarge { time: f64, dt: f64, bound: f64 },

    #[error("experiment failed: {0}")]
    Experiment(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::ClipBudget { .. }
                | Error::StepTooLarge { .. }
                | Error::Positivity(_)
                | Error::Experiment(_)
        )
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
