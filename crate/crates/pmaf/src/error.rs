use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimensions of the inputs do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An input contains NaN or infinity.
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    /// An input is degenerate for the requested operation (zero vector,
    /// vanishing constraint row, ...).
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    /// A linear system is singular to working precision, even after any
    /// ridge term was applied.
    #[error("singular linear system (condition estimate {cond:.3e})")]
    Singular { cond: f64 },

    /// The matrix maps the current iterate to (numerically) zero.
    #[error("matrix maps iterate to zero")]
    ZeroImage,

    /// The iteration produced NaN/Inf. Carries the trace up to the failure,
    /// converted to f64: one `(u, objective, eta)` triple per iterate.
    #[error("numeric failure at iteration {iteration}")]
    NumericFailure {
        iteration: usize,
        trace: Vec<(Vec<f64>, f64, f64)>,
    },

    /// Fixed-point differentiation requires a positive dominant eigenvalue.
    #[error("eigenvalue {0} is not positive enough for fixed-point differentiation")]
    InvalidForIft(f64),

    /// The reference eigensolver could not produce a real dominant pair.
    #[error("reference oracle unavailable: {0}")]
    OracleUnavailable(String),

    /// A finite-difference evaluation produced NaN at the named entry.
    #[error("oracle evaluation produced a non-finite value at entry ({0}, {1})")]
    OracleFailure(usize, usize),

    /// Brute-force tensor assembly refuses sizes above its cap.
    #[error("size {got} exceeds the brute-force cap of {cap}")]
    SizeCap { got: usize, cap: usize },

    /// A materialized-tensor path would exceed the configured byte budget.
    #[error("materialized path needs {needed} bytes, budget is {budget}")]
    ByteBudget { needed: u64, budget: u64 },

    /// Invalid experiment or solver configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
