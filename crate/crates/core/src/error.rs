use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular multiplier at mode ({0}, {1}, {2})")]
    SingularMultiplier(i64, i64, i64),

    #[error("field is not a gradient: relative curl {curl:.3e} exceeds {tol:.3e}")]
    NotAGradient { curl: f64, tol: f64 },

    #[error("nonzero-mean field where |∇|^-1 is required (mean {0:.3e})")]
    NonzeroMean(f64),

    #[error(
        "Poisson iteration failed to converge: residual {residual:.3e} after {iterations} iterations"
    )]
    PoissonNonconvergence {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("density positivity lost: min(1+rho) = {0:.3e}")]
    DensityPositivity(f64),

    #[error(
        "quadrature did not converge: estimate {re:.6e}+{im:.6e}i, panel disagreement {disagreement:.3e}"
    )]
    QuadratureNonconvergence {
        re: f64,
        im: f64,
        disagreement: f64,
    },

    #[error("decay fit window holds {have} points, need at least {need}")]
    InsufficientFitPoints { have: usize, need: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad snapshot file: {0}")]
    Snapshot(String),
}
