use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("derivative order {requested} exceeds the family limit {max}")]
    DerivativeOrder { requested: usize, max: usize },
    #[error("mollifier moment {order} is {value:e}, above tolerance {tol:e}")]
    MomentCheck { order: usize, value: f64, tol: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("singular window: {0}")]
    SingularWindow(String),
    #[error("degenerate Jacobian at X = {point:?}, condition number {cond:e}")]
    JacobianDegenerate { point: Vec<f64>, cond: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("finite-difference step is unstable: {0}")]
    UnstableStep(String),
    #[error("series did not converge: {0}")]
    Series(String),
    #[error("solver did not converge: {0}")]
    NoConvergence(String),
    #[error("supplied partial derivative disagrees with finite differences: {0}")]
    PartialCheck(String),
    #[error("Dirac root at x = {root} has |G'| = {slope:e}, below {threshold:e}")]
    DeltaDivergence { root: f64, slope: f64, threshold: f64 },
    #[error("singular matrix, condition estimate {cond:e}")]
    SingularMatrix { cond: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    /// Validation errors map to exit code 1, numerical ones to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DerivativeOrder { .. }
                | Error::Dimension(_)
                | Error::SingularWindow(_)
                | Error::PartialCheck(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
