use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("quadrature did not converge (achieved error estimate {achieved:e})")]
    Quadrature { achieved: f64 },
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("gauge alignment failed: overlap {overlap:.4} between neighbouring quasimomenta, increase n_kappa")]
    CoarseKappaGrid { overlap: f64 },
    #[error("overlap matrix ill-conditioned (|A| estimate {norm:.3} >= 1), hbar too large")]
    IllConditionedBasis { norm: f64 },
    #[error("basis leakage: {0}")]
    BasisLeakage(String),
    #[error("hopping is not positive (beta = {0:e})")]
    NonPositiveHopping(f64),
    #[error("not localized: {0}")]
    NotLocalized(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("fit unavailable: {0}")]
    Fit(String),
    #[error("quasimomentum {0} is not on the band grid")]
    KappaNotOnGrid(f64),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
