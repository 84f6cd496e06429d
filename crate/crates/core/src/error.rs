use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinslerError {
    #[error("derivative budget exceeded: requested {requested}, available {available}")]
    BudgetExceeded { requested: String, available: String },

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },

    #[error("unknown identifier `{name}` at line {line}, column {col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },

    #[error("variable index out of range: `{name}` in a model of dimension {dim}")]
    VariableOutOfRange { name: String, dim: usize },

    #[error("zeta component {component} references the directional variable `{name}`")]
    ZetaDependsOnY { component: usize, name: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("non-positive L2 = {value:e} at probe x = {x:?}, y = {y:?}")]
    NonPositive { value: f64, x: Vec<f64>, y: Vec<f64> },

    #[error("L2 is not 2-homogeneous in y at probe x = {x:?}, y = {y:?} (relative defect {defect:e})")]
    NotHomogeneous { defect: f64, x: Vec<f64>, y: Vec<f64> },

    #[error("positivity violation: {0}")]
    Positivity(String),

    #[error("singular fundamental tensor: condition number {0:e}")]
    SingularMetric(f64),

    #[error("zeta required")]
    ZetaRequired,

    #[error("zeta is not a concurrent field (max residual {0:e})")]
    NotConcurrent(f64),

    #[error("B = g(zeta, eta) vanishes at x = {x:?}, y = {y:?}; it must be everywhere non-zero")]
    DegenerateB { x: Vec<f64>, y: Vec<f64> },

    #[error("finite-difference step underflow near the domain boundary")]
    StepUnderflow,

    #[error("empty sampling box")]
    EmptyBox,
}

pub type Result<T> = std::result::Result<T, FinslerError>;
