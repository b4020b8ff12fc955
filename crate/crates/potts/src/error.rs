use thiserror::Error;

/// Crate-wide error type. Variants map onto the CLI exit-code contract:
/// capability refusals ([`Error::CapExceeded`], [`Error::PrecisionRefused`])
/// exit 2, everything else here is an input/usage error and exits 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs K >= 2, L >= 2, q >= 2 (got K={k}, L={l}, q={q})")]
    BadSpec { k: usize, l: usize, q: u8 },

    #[error("vertex ({0}, {1}) out of bounds for L={2} columns, K={3} rows")]
    OutOfBounds(usize, usize, usize, usize),

    #[error("spin {spin} outside 1..={q}")]
    SpinRange { spin: u8, q: u8 },

    #[error("spin vector has {got} entries, grid has {want} vertices")]
    SpinCount { got: usize, want: usize },

    #[error("line index {index} out of range (grid has {len})")]
    LineRange { index: usize, len: usize },

    #[error("colors must differ")]
    EqualColors,

    #[error("missing bridge: {0}")]
    MissingBridge(String),

    #[error("path step {step}: consecutive configurations differ at {differing} vertices, want exactly 1")]
    NotSingleUpdate { step: usize, differing: usize },

    #[error("path must contain at least one configuration")]
    EmptyPath,

    #[error("state space has {states} states, exceeding the cap of {cap}")]
    CapExceeded { states: u128, cap: u64 },

    #[error("beta {beta} refused: exp(-beta*Gamma) = {scale:.3e} is below the double-precision floor 1e-12")]
    PrecisionRefused { beta: f64, scale: f64 },

    #[error("escape probability underflowed to zero; the chain is numerically stuck")]
    Stuck,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: capability refusals are 2, everything else is a
    /// usage or input error at 1. Theorem-check failures exit 3 but are
    /// not errors; the CLI signals them separately.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CapExceeded { .. } | Error::PrecisionRefused { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
