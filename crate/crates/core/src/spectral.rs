//! Lag-window spectral density and long-run variance estimation.
//!
//! Sample autocovariances always use the divisor `n`:
//!
//! ```text
//! γ̂_k = (1/n) Σ_{j=1}^{n-|k|} s_j s_{j+|k|}
//! ```
//!
//! and the spectral density at frequency `λ` is estimated with the flat-top
//! trapezoidal lag window `K`:
//!
//! ```text
//! f_n(λ) = (1/2π) [ γ̂_0 + 2 Σ_{k≥1} K(k/c_n) γ̂_k cos(kλ) ]
//! ```
//!
//! `2π f_n(0)` estimates the long-run variance `Σ_{k∈ℤ} γ(k)` that replaces
//! `σ²` in Fisher tests when the errors are dependent. No mean-centering is
//! applied: residual vectors from a model with an intercept are already
//! centered.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat-top trapezoidal lag window: 1 on `[0,1]`, `2 − |x|` on `[1,2]`, 0 beyond.
pub fn kernel_k(x: f64) -> f64 {
    let a = x.abs();
    if a <= 1.0 {
        1.0
    } else if a <= 2.0 {
        2.0 - a
    } else {
        0.0
    }
}

/// Sample autocovariance at lag `k` (either sign) with divisor `n`.
pub fn autocov(series: &[f64], k: isize) -> Result<f64> {
    let n = series.len();
    let lag = k.unsigned_abs();
    if lag >= n {
        return Err(Error::LagOutOfRange { lag, n });
    }
    Ok(lagged_dot(series, lag) / n as f64)
}

fn lagged_dot(series: &[f64], lag: usize) -> f64 {
    series[..series.len() - lag]
        .iter()
        .zip(&series[lag..])
        .map(|(a, b)| a * b)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcfSource {
    RawSeries,
    Residuals,
}

/// `(γ̂_0, …, γ̂_K)` for a single series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcfEstimate {
    pub values: Vec<f64>,
    pub n: usize,
    pub source: AcfSource,
}

impl AcfEstimate {
    pub fn compute(series: &[f64], max_lag: usize, source: AcfSource) -> Result<Self> {
        let n = series.len();
        if max_lag >= n {
            return Err(Error::LagOutOfRange { lag: max_lag, n });
        }
        let values = (0..=max_lag).map(|k| lagged_dot(series, k) / n as f64).collect();
        Ok(Self { values, n, source })
    }

    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// `γ̂_k / γ̂_0`; all zeros when `γ̂_0 = 0`.
    pub fn correlations(&self) -> Vec<f64> {
        let g0 = self.values[0];
        if g0 == 0.0 {
            return vec![0.0; self.values.len()];
        }
        self.values.iter().map(|v| v / g0).collect()
    }

    /// Spectral density estimate at `lambda` using lags up to `min(2 c_n, K)`.
    pub fn spectral_density(&self, bandwidth: usize, lambda: f64) -> f64 {
        let c = bandwidth as f64;
        let top = (2 * bandwidth).min(self.max_lag());
        let tail: f64 = (1..=top)
            .map(|k| kernel_k(k as f64 / c) * self.values[k] * (k as f64 * lambda).cos())
            .sum();
        (self.values[0] + 2.0 * tail) / (2.0 * PI)
    }
}

fn check_bandwidth(bandwidth: usize, n: usize) -> Result<()> {
    if bandwidth < 1 || 2 * bandwidth + 1 > n {
        return Err(Error::BandwidthOutOfRange { bandwidth, n });
    }
    Ok(())
}

/// `f_n(λ)` from a residual vector; requires `1 <= c_n` and `2 c_n <= n − 1`.
pub fn spectral_density(residuals: &[f64], bandwidth: usize, lambda: f64) -> Result<f64> {
    Ok(spectral_density_grid(residuals, bandwidth, &[lambda])?[0])
}

/// `f_n` over a grid of frequencies, sharing one autocovariance pass.
pub fn spectral_density_grid(residuals: &[f64], bandwidth: usize, lambdas: &[f64]) -> Result<Vec<f64>> {
    check_bandwidth(bandwidth, residuals.len())?;
    let acf = AcfEstimate::compute(residuals, 2 * bandwidth, AcfSource::Residuals)?;
    Ok(lambdas.iter().map(|&l| acf.spectral_density(bandwidth, l)).collect())
}

/// How the long-run variance is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum LrvMethod {
    /// `2π f_n(0)` with lag-window bandwidth `c_n`.
    KernelF0 { bandwidth: usize },
    /// `γ̂_0 + w Σ_{k=1}^{a_n} γ̂_k` with `w = 2` when symmetrized, `w = 1`
    /// for the one-sided sum.
    Truncated { a_n: usize, symmetrized: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrvEstimate {
    pub value: f64,
    pub method: LrvMethod,
    /// `c_n` or `a_n`, whichever the method uses.
    pub bandwidth: usize,
    /// Set when `value <= 0`; such estimates cannot be used as denominators.
    pub nonpositive: bool,
}

impl LrvEstimate {
    pub fn from_acf(acf: &AcfEstimate, method: LrvMethod) -> Result<Self> {
        let (value, bandwidth) = match method {
            LrvMethod::KernelF0 { bandwidth } => {
                check_bandwidth(bandwidth, acf.n)?;
                // K(2) = 0, so lag 2 c_n carries no weight
                if acf.max_lag() + 1 < 2 * bandwidth {
                    return Err(Error::InvalidInput(format!(
                        "autocovariances up to lag {} are needed, only {} available",
                        2 * bandwidth - 1,
                        acf.max_lag()
                    )));
                }
                (2.0 * PI * acf.spectral_density(bandwidth, 0.0), bandwidth)
            }
            LrvMethod::Truncated { a_n, symmetrized } => {
                if a_n >= acf.n {
                    return Err(Error::LagOutOfRange { lag: a_n, n: acf.n });
                }
                if a_n > acf.max_lag() {
                    return Err(Error::InvalidInput(format!(
                        "truncation lag {a_n} exceeds the {} autocovariances available",
                        acf.max_lag()
                    )));
                }
                let w = if symmetrized { 2.0 } else { 1.0 };
                let tail: f64 = acf.values[1..=a_n].iter().sum();
                (acf.values[0] + w * tail, a_n)
            }
        };
        Ok(Self {
            value,
            method,
            bandwidth,
            nonpositive: !(value > 0.0),
        })
    }

    /// Error unless the estimate can serve as a test-statistic denominator.
    pub fn require_positive(&self) -> Result<f64> {
        if self.nonpositive {
            Err(Error::NonPositiveLrv { value: self.value })
        } else {
            Ok(self.value)
        }
    }
}

/// Number of autocovariances a method consumes beyond lag 0.
pub fn lags_needed(method: LrvMethod) -> usize {
    match method {
        LrvMethod::KernelF0 { bandwidth } => 2 * bandwidth,
        LrvMethod::Truncated { a_n, .. } => a_n,
    }
}

pub fn lrv(residuals: &[f64], method: LrvMethod) -> Result<LrvEstimate> {
    let n = residuals.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty residual vector".into()));
    }
    if let LrvMethod::Truncated { a_n, .. } = method {
        if a_n >= n {
            return Err(Error::LagOutOfRange { lag: a_n, n });
        }
    }
    if let LrvMethod::KernelF0 { bandwidth } = method {
        check_bandwidth(bandwidth, n)?;
    }
    let acf = AcfEstimate::compute(residuals, lags_needed(method).min(n - 1), AcfSource::Residuals)?;
    LrvEstimate::from_acf(&acf, method)
}

/// `max(1, ⌊n^{0.9 δ/(δ+2)}⌋)`, clamped to `⌊(n − 1)/2⌋`. For `δ = 2` the
/// exponent is 0.45, so `c_n → ∞` while `c_n²/n → 0`.
pub fn default_bandwidth(n: usize, delta: f64) -> Result<usize> {
    if n < 4 {
        return Err(Error::InvalidInput(format!("default bandwidth needs n >= 4, got {n}")));
    }
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::InvalidInput(format!("delta must lie in (0, 2], got {delta}")));
    }
    let exponent = 0.9 * delta / (delta + 2.0);
    let raw = (n as f64).powf(exponent).floor() as usize;
    Ok(raw.max(1).min((n - 1) / 2))
}
