use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A constructor or operation argument violated its stated bound.
    #[error("parameter {name} = {value} violates bound {bound}")]
    Parameter {
        name: &'static str,
        value: f64,
        bound: &'static str,
    },

    /// The fixed-point equation has no positive root for the given inputs.
    #[error("fixed point has no positive root: {0}")]
    NoRoot(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    #[error("no convergence after {iterations} iterations, last bracket [{lo}, {hi}]")]
    NoConvergence { iterations: u32, lo: f64, hi: f64 },

    /// The degrees-of-freedom factor came out non-positive.
    #[error("degenerate degrees-of-freedom factor Q = {0}")]
    DegenerateQ(f64),

    /// The requested computation is outside the regime the formula covers.
    #[error("unsupported regime: {0}")]
    Unsupported(String),

    /// The optimization program has an empty feasible set.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A linear solve failed or left too large a residual.
    #[error("linear solve failed: {0}")]
    Solve(String),

    /// Malformed experiment configuration.
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
