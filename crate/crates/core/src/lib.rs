//! Least-squares inference for linear models whose errors are stationary and
//! short-range dependent.
//!
//! The crate is organized bottom-up:
//!
//! * [`design`]: column norms, Lindeberg ratios, lag cross products `ρ̂(k)`
//!   and regularity checks for fixed designs.
//! * [`ols`]: QR-based least squares and nested-model residual sums.
//! * [`spectral`]: autocovariances, the lag-window spectral density estimate
//!   and long-run variance estimators.
//! * [`inference`]: classic and corrected Fisher statistics, `χ²` and Fisher
//!   tail probabilities, studentized coefficients.
//! * [`processes`]: seeded simulators for dependent error processes.
//! * [`montecarlo`]: level/power tables over many replications.

pub mod design;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod ols;
pub mod processes;
pub mod rng;
pub mod special;
pub mod spectral;

pub use design::{DesignMatrix, RegularityReport};
pub use error::{Error, Result};
pub use inference::{ReferenceKind, TestMethod, TestResult};
pub use montecarlo::{ExperimentSpec, TableResult};
pub use ols::FitResult;
pub use processes::{ProcessConfig, ProcessKind};
pub use spectral::{AcfEstimate, LrvEstimate, LrvMethod};
