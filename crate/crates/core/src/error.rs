use thiserror::Error;

/// Errors raised by the simulation, estimation and analysis layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Invalid or inconsistent parameters.
    #[error("configuration error: {0}")]
    Config(String),

    /// The integrator produced a non-finite value; the run must halt.
    #[error("integrator fault at t={t_us} us: {what}")]
    Integrator { t_us: u64, what: String },

    /// A delay line was pushed or popped with a time earlier than a previous call.
    #[error("time regression on delay line: {now_us} us after {last_us} us")]
    TimeRegression { last_us: u64, now_us: u64 },

    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An event voted outside the Hough accumulator; indicates a geometry bug.
    #[error("rho {rho:.3} px out of accumulator range for event ({x}, {y})")]
    RhoOutOfRange { x: u16, y: u16, rho: f64 },

    /// Input data is insufficient for an analysis.
    #[error("analysis error: {0}")]
    Analysis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
