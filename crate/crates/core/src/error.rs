use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numeric core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("backward() needs a scalar root, got shape {0:?}")]
    NonScalarRoot(Vec<usize>),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("feedback polynomial {taps:#x} is not primitive for degree {degree}: period {period} instead of {expected}")]
    DegeneratePolynomial {
        degree: u32,
        taps: u32,
        period: usize,
        expected: usize,
    },

    #[error("path delay {delay_s:e} s lies outside the delay grid of {grid_s:e} s")]
    DelayOutOfGrid { delay_s: f64, grid_s: f64 },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty channel impulse response")]
    EmptyCir,

    #[error("trajectory shorter than N_p ({len} < {n_p})")]
    TrajectoryTooShort { len: usize, n_p: usize },

    #[error("too few positions for split policy: {0}")]
    TooFewPositions(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("normalization statistics differ between checkpoints")]
    NormStatsMismatch,

    #[error("checkpoint does not match its model configuration: {0}")]
    CheckpointMismatch(String),

    #[error("degenerate statistics: {0}")]
    DegenerateStats(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn shape_mismatch(op: &'static str, left: &[usize], right: &[usize]) -> Error {
    Error::ShapeMismatch {
        op,
        left: left.to_vec(),
        right: right.to_vec(),
    }
}
