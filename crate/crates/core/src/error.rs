use thiserror::Error;

/// Errors raised by the symbolic layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymError {
    #[error("syntax error at offset {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("undeclared identifier `{name}` at offset {position}")]
    Undeclared { name: String, position: usize },
    #[error("symbol `{name}` already declared as {existing}")]
    KindConflict { name: String, existing: String },
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("pole or non-finite value while evaluating {0}")]
    Pole(String),
    #[error("term count {terms} exceeds the ceiling of {ceiling}")]
    TermCap { terms: usize, ceiling: usize },
}

/// Crate-level error.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Sym(#[from] SymError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("seed condition fails: {0}")]
    SeedCondition(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("chart error: {0}")]
    Chart(String),
    #[error("integrator failure: {0}")]
    Integrator(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownSystem(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
