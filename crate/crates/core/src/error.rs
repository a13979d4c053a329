use thiserror::Error;

/// Errors raised by tape operations, differentiable functions and the
/// checked densities and integrators built on top of them.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdError {
    #[error("operand {operand} is not on this tape (tape length {len})")]
    UnknownOperand { operand: usize, len: usize },

    #[error("operands belong to different tapes")]
    CrossTape,

    #[error("stale tape mark: mark at {mark} nodes but tape holds {len}")]
    StaleMark { mark: usize, len: usize },

    #[error("rule {rule} expects {expected}, got {got}")]
    RuleShape {
        rule: &'static str,
        expected: String,
        got: String,
    },

    #[error("dimension mismatch in {op}: {lhs} vs {rhs}")]
    Dimension {
        op: &'static str,
        lhs: usize,
        rhs: usize,
    },

    #[error("{op} requires a non-empty input")]
    EmptyInput { op: &'static str },

    #[error("{function}: {argument} is {value}, but must be {requirement}")]
    Validation {
        function: &'static str,
        argument: String,
        value: String,
        requirement: String,
    },

    #[error("integration failed: {0}")]
    Integration(String),
}

pub type Result<T, E = AdError> = std::result::Result<T, E>;
