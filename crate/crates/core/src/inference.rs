//! Classic and dependence-corrected Fisher tests for nested linear models.
//!
//! With i.i.d. errors the statistic `F = (RSS₀ − RSS)/((p − p₀) σ̂²)` is
//! asymptotically `χ²(p − p₀)/(p − p₀)`. Under short-range dependence the
//! same limit holds once `σ̂²` is replaced by a long-run variance estimate
//! (`2π f_n(0)` or a truncated autocovariance sum); see [`fisher_corrected`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ols::FitResult;
use crate::special::{beta_reg, gamma_q};
use crate::spectral::{LrvEstimate, LrvMethod};

/// Nesting violations smaller than this fraction of `RSS₀` are round-off.
pub const NESTING_SLACK: f64 = 1e-9;

/// Relative eigenvalue floor for the symmetric square root.
pub const SQRT_EIGEN_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    ClassicF,
    CorrectedKernel,
    CorrectedTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Asymptotic `χ²(q)/q`, `q = p − p₀`.
    #[default]
    Chi2OverDof,
    /// Exact `Fisher(q, n − p)` (i.i.d. Gaussian errors).
    Fisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    Chi2OverDof { dof: usize },
    Fisher { dof1: usize, dof2: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub numerator_dof: usize,
    pub method: TestMethod,
    pub p_value: f64,
    pub reference: Reference,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Upper tail `P(χ²_k > x) = Q(k/2, x/2)`.
pub fn chi2_sf(x: f64, k: usize) -> f64 {
    assert!(k >= 1, "chi-square needs at least one degree of freedom");
    if !(x > 0.0) {
        return 1.0;
    }
    gamma_q(k as f64 / 2.0, x / 2.0).clamp(0.0, 1.0)
}

/// Upper tail of the Fisher–Snedecor distribution with `(d1, d2)` degrees of freedom.
pub fn fisher_sf(f: f64, d1: usize, d2: usize) -> f64 {
    assert!(d1 >= 1 && d2 >= 1, "Fisher distribution needs positive degrees of freedom");
    if !(f > 0.0) {
        return 1.0;
    }
    let (a, b) = (d1 as f64, d2 as f64);
    beta_reg(b / 2.0, a / 2.0, b / (b + a * f)).clamp(0.0, 1.0)
}

fn reference_sf(statistic: f64, reference: Reference) -> f64 {
    match reference {
        Reference::Chi2OverDof { dof } => chi2_sf(dof as f64 * statistic, dof),
        Reference::Fisher { dof1, dof2 } => fisher_sf(statistic, dof1, dof2),
    }
}

fn rss_gap(rss0: f64, rss: f64) -> Result<f64> {
    if !(rss0.is_finite() && rss.is_finite()) || rss < 0.0 {
        return Err(Error::InvalidInput(format!("invalid residual sums rss0 = {rss0}, rss = {rss}")));
    }
    let gap = rss0 - rss;
    if gap >= 0.0 {
        Ok(gap)
    } else if gap >= -NESTING_SLACK * rss0.abs() {
        Ok(0.0)
    } else {
        Err(Error::InvalidInput(format!(
            "rss0 = {rss0} is below rss = {rss}; models are not nested"
        )))
    }
}

fn check_dims(p: usize, p0: usize) -> Result<usize> {
    if p0 >= p {
        return Err(Error::InvalidInput(format!("need p > p0, got p = {p}, p0 = {p0}")));
    }
    Ok(p - p0)
}

/// Textbook statistic `((RSS₀ − RSS)/(p − p₀)) / (RSS/(n − p))`.
pub fn fisher_classic(
    rss0: f64,
    rss: f64,
    n: usize,
    p: usize,
    p0: usize,
    reference: ReferenceKind,
) -> Result<TestResult> {
    let q = check_dims(p, p0)?;
    if n <= p {
        return Err(Error::InvalidInput(format!("need n > p, got n = {n}, p = {p}")));
    }
    let gap = rss_gap(rss0, rss)?;
    if rss == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sigma2 = rss / (n - p) as f64;
    let statistic = gap / (q as f64 * sigma2);
    let reference = match reference {
        ReferenceKind::Chi2OverDof => Reference::Chi2OverDof { dof: q },
        ReferenceKind::Fisher => Reference::Fisher { dof1: q, dof2: n - p },
    };
    Ok(TestResult {
        statistic,
        numerator_dof: q,
        method: TestMethod::ClassicF,
        p_value: reference_sf(statistic, reference),
        reference,
    })
}

/// `((RSS₀ − RSS)/(p − p₀)) / LRV`, referred to `χ²(p − p₀)/(p − p₀)`.
pub fn fisher_corrected(rss0: f64, rss: f64, lrv: &LrvEstimate, p: usize, p0: usize) -> Result<TestResult> {
    let q = check_dims(p, p0)?;
    let denom = lrv.require_positive()?;
    let gap = rss_gap(rss0, rss)?;
    let statistic = gap / (q as f64 * denom);
    let reference = Reference::Chi2OverDof { dof: q };
    let method = match lrv.method {
        LrvMethod::KernelF0 { .. } => TestMethod::CorrectedKernel,
        LrvMethod::Truncated { .. } => TestMethod::CorrectedTruncated,
    };
    Ok(TestResult {
        statistic,
        numerator_dof: q,
        method,
        p_value: reference_sf(statistic, reference),
        reference,
    })
}

/// Symmetric square root of a positive definite matrix. Eigenvalues below
/// `SQRT_EIGEN_FLOOR · λ_max` are rejected.
pub fn sqrt_spd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidInput("matrix square root needs a square matrix".into()));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if !(max > 0.0) || min <= SQRT_EIGEN_FLOOR * max {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    let roots = eig.eigenvalues.map(f64::sqrt);
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

/// `R(0)^{1/2} D(n) (β̂ − β₀) / √LRV`, asymptotically `N(0, I_p)` under a
/// regular design.
pub fn studentize(fit: &FitResult, r0: &DMatrix<f64>, lrv: &LrvEstimate, beta0: &[f64]) -> Result<Vec<f64>> {
    let p = fit.p();
    if beta0.len() != p || r0.nrows() != p || r0.ncols() != p {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: p = {p}, beta0 has {}, r0 is {}x{}",
            beta0.len(),
            r0.nrows(),
            r0.ncols()
        )));
    }
    let denom = lrv.require_positive()?.sqrt();
    let root = sqrt_spd(r0)?;
    let scaled = DVector::from_iterator(
        p,
        (0..p).map(|j| fit.col_norms[j] * (fit.beta_hat[j] - beta0[j]) / denom),
    );
    Ok((root * scaled).iter().copied().collect())
}
