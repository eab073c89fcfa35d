use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("point outside the model domain: {0}")]
    OutsideDomain(String),

    #[error("singular matrix (|det| = {det:e} <= tol = {tol:e})")]
    SingularMatrix { det: f64, tol: f64 },

    #[error("metric is singular at ({a}, {b}, {c})")]
    SingularMetric { a: f64, b: f64, c: f64 },

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepFailure { t: f64, h: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate dual coordinates: eta1 and eta2 must be nonzero")]
    DegenerateEta,

    #[error("eta3/eta1 = {0} is negative; the Lax pair has no real square root")]
    NegativeRatio(f64),

    #[error("unknown suite: {0}")]
    UnknownSuite(String),

    #[error("invalid region: {0}")]
    InvalidRegion(String),
}

impl Error {
    /// Errors that stem from where a point lies rather than from how a
    /// computation went.
    pub fn is_domain_or_singular(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::OutsideDomain(_)
                | Error::SingularMatrix { .. }
                | Error::SingularMetric { .. }
                | Error::DegenerateEta
                | Error::NegativeRatio(_)
        )
    }
}
