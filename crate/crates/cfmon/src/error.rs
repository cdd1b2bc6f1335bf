//! Crate error type.

use std::fmt;

/// Errors surfaced by the simulator and optimizer.
#[derive(Debug)]
pub enum Error {
    /// Invalid system parameters (violated invariant, bad config value).
    BadParams(String),
    /// Config-file parse failure.
    Config(String),
    /// ZF precoding hit a singular Gram matrix or a zero channel estimate.
    DegenerateChannel,
    /// A monitoring configuration violates the per-MN jamming power budget.
    InfeasibleConfig(String),
    /// A moment cache was built for a different precoder or geometry.
    MomentCacheMismatch(String),
    /// Linear system stayed ill-conditioned after jitter escalation.
    IllConditioned(String),
    /// Acquisition had no feasible candidates to rank.
    EmptyCandidatePool,
    /// Experiment sweep grid was empty.
    EmptyGrid,
    /// I/O failure while writing results.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::BadParams(msg) => write!(f, "invalid parameters: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::DegenerateChannel => write!(f, "degenerate channel: singular ZF Gram matrix"),
            Error::InfeasibleConfig(msg) => write!(f, "infeasible monitoring config: {msg}"),
            Error::MomentCacheMismatch(msg) => write!(f, "moment cache mismatch: {msg}"),
            Error::IllConditioned(msg) => write!(f, "ill-conditioned system: {msg}"),
            Error::EmptyCandidatePool => write!(f, "acquisition candidate pool is empty"),
            Error::EmptyGrid => write!(f, "experiment sweep grid is empty"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
