use thiserror::Error;

/// Errors shared by every module in this crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("qudit dimension must be at least 2, got {d}")]
    InvalidDimension { d: usize },

    #[error("register must hold at least one wire, got {wires}")]
    InvalidWireCount { wires: usize },

    #[error("register of {wires} wires at dimension {d} exceeds the amplitude budget of {max_amplitudes}")]
    RegisterTooLarge {
        d: usize,
        wires: usize,
        max_amplitudes: usize,
    },

    #[error("digit {digit} is out of range for dimension {d}")]
    InvalidDigit { digit: usize, d: usize },

    #[error("wire {wire} is out of range for a register of {wires} wires")]
    InvalidWire { wire: usize, wires: usize },

    #[error("two-wire operation needs distinct wires, got {wire} twice")]
    SameWire { wire: usize },

    #[error("operands disagree in shape: d {left_d} x {left_wires} wires vs d {right_d} x {right_wires} wires")]
    DimensionMismatch {
        left_d: usize,
        left_wires: usize,
        right_d: usize,
        right_wires: usize,
    },

    #[error("amplitudes are not normalized: |norm - 1| = {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("all outcome probabilities are below the numerical floor")]
    DegenerateState,

    #[error("unknown protocol name: {name}")]
    InvalidProtocol { name: String },

    #[error("{party} applied a gate on wire {wire} it does not hold")]
    LocalityViolation { party: &'static str, wire: usize },

    #[error("invalid protocol input: {0}")]
    InvalidInput(String),

    #[error("state file rejected: {0}")]
    StateFile(String),
}

pub type Result<T> = std::result::Result<T, Error>;
