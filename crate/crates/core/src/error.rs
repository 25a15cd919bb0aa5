use alloc::string::String;

/// Errors raised by the simulator and the trainers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("degenerate link: endpoints coincide")]
    DegenerateLink,
    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("episode already finished at slot {0}")]
    EpisodeFinished(usize),
    #[error("non-finite {what} at episode {episode}, step {step}")]
    NonFinite {
        what: &'static str,
        episode: usize,
        step: usize,
    },
    #[error("replay buffer is empty")]
    EmptyBuffer,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl Error {
    pub(crate) fn mismatch(what: &'static str, expected: usize, got: usize) -> Self {
        Error::DimensionMismatch { what, expected, got }
    }
}
