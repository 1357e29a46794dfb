use thiserror::Error;

/// Errors raised by the numerical library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A model or configuration failed validation.
    #[error("validation error: {0}")]
    Validation(String),

    /// The medium has a response with negative absorption.
    #[error("non-passive medium at omega = {omega}: eigenvalue {eigenvalue} of Im chi is negative")]
    NonPassive { omega: f64, eigenvalue: f64 },

    /// A matrix expected to be positive semidefinite is not.
    #[error("matrix is not positive semidefinite: smallest eigenvalue {eigenvalue}")]
    NotPsd { eigenvalue: f64 },

    /// The requested combination of model and operation is not supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A quadrature did not reach the requested tolerance.
    #[error("accuracy not reached: estimate {estimate} with error bound {error_bound}")]
    Accuracy { estimate: f64, error_bound: f64 },

    /// An integral was detected to diverge.
    #[error("divergent integral: {0}")]
    Divergence(String),

    /// The inverse Laplace contour hit a singularity of the transform.
    #[error("inverse Laplace contour hit a singularity at s = {re}{im:+}i; change contour_scale")]
    ContourSingularity { re: f64, im: f64 },

    /// A matrix inversion is numerically singular.
    #[error("near-singular system (condition number {condition:e}); real pole near k = {pole_k}")]
    NearSingular { condition: f64, pole_k: f64 },

    /// The time step is too large for the integrator.
    #[error("step size error: {0}")]
    StepSize(String),

    /// Input/output failure.
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by invalid input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Validation(_)
                | Error::NonPassive { .. }
                | Error::NotPsd { .. }
                | Error::Unsupported(_)
                | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
