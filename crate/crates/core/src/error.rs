use thiserror::Error;

/// Errors raised by the estimation and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("design column {column} is identically zero (d_j(n) = 0)")]
    ZeroColumn { column: usize },

    #[error("lag {lag} out of range for a series of length {n}")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("design is rank deficient: column {column} is numerically dependent on earlier columns (|R_jj| = {pivot:e})")]
    RankDeficient { column: usize, pivot: f64 },

    #[error("bandwidth c_n = {bandwidth} out of range for n = {n} (need 1 <= c_n and 2 c_n <= n - 1)")]
    BandwidthOutOfRange { bandwidth: usize, n: usize },

    #[error("long-run variance estimate {value:e} is not positive; choose a different bandwidth or truncation lag")]
    NonPositiveLrv { value: f64 },

    #[error("residual sum of squares is zero; the fit is noiseless and the F statistic is undefined")]
    DegenerateFit,

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("exponent {alpha} must exceed -1/2")]
    ExponentOutOfRange { alpha: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("null model has no columns; pass allow_zero_model to use RSS_0 = |Y|^2")]
    EmptyNullModel,
}

impl Error {
    /// True for failures caused by the data (as opposed to malformed requests).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::NonPositiveLrv { .. }
                | Error::DegenerateFit
                | Error::NotPositiveDefinite { .. }
                | Error::ZeroColumn { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
