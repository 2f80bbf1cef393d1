//! Error taxonomy shared by the library and the CLI.
//!
//! The variants map onto the CLI exit codes: anything that reaches the
//! binary as `Usage` exits 2, a failed verification check exits 1, and
//! every other error (I/O, capacity, numerical degeneracy, ...) exits 3.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// A caller-supplied argument is malformed (bad band, empty grid, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request would materialize more data than the configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A value left its mathematical domain (sigma outside the band in
    /// strict mode, non-finite integrand value, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Breakpoints or evaluation times do not lie on the simulation grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The level grid does not cover the sampled path range.
    #[error("coverage error: {0}")]
    Coverage(String),

    /// A statistic degenerated (zero variance, empty fit, all-zero moments)
    /// and the requested diagnostic cannot be computed.
    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    /// Configuration file problems (parse errors, unknown keys, bad values).
    #[error("config error: {0}")]
    Config(String),

    /// Command-line usage problems (unknown payoff or check name, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    /// CLI exit code for this error: usage and configuration problems exit
    /// 2, every other runtime error 3. (A verification check that runs but
    /// fails its tolerances is not an error; the binary exits 1 for that.)
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config(_) => 2,
            _ => 3,
        }
    }
}
