use thiserror::Error;

/// Errors produced by mesh construction, assembly, and the solver pipeline.
#[derive(Debug, Error)]
pub enum HdgError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature exactness {0} unsupported (max 20)")]
    UnsupportedQuadrature(usize),

    #[error("polynomial degree {0} outside supported range 0..=3")]
    UnsupportedDegree(usize),

    #[error("element {element}: singular local system ({context})")]
    SingularLocalSystem { element: usize, context: &'static str },

    #[error("coefficient matrix not symmetric positive definite at ({x}, {y})")]
    NonSpdCoefficient { x: f64, y: f64 },

    #[error("condensed system not positive definite at dof {0}")]
    NotPositiveDefinite(usize),

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("unknown problem preset `{0}` (expected `paper` or `linear`)")]
    UnknownProblem(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HdgError>;
