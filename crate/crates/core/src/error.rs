use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("backward needs a scalar root, got a {rows}x{cols} node")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("operand belongs to a different tape")]
    ForeignTape,
}

/// Errors raised by the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate state: coefficient norm {norm:e} is below 1e-12{hint}")]
    DegenerateState { norm: f64, hint: &'static str },
    #[error("training diverged at iteration {iteration}: non-finite energy")]
    Diverged { iteration: usize },
    #[error("matrix is not symmetric: |H[{row},{col}] - H[{col},{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
