//! Fixed regression designs and the quantities that govern least-squares
//! asymptotics under dependent errors.
//!
//! For a design `X` (n×p) the column norms `d_j(n) = ‖X_{·,j}‖₂` form the
//! diagonal scaling `D(n)`. The lag-`k` normalized cross products
//!
//! ```text
//! ρ̂_{j,l}(k) = Σ_{m=1}^{n-k} x_{m,j} x_{m+k,l} / (d_j(n) d_l(n))
//! ```
//!
//! converge for well-behaved designs; when the limit does not depend on `k`
//! the design is called regular, and the OLS covariance collapses to the
//! long-run variance times `R(0)⁻¹`. For pure power columns `i^α` the limit
//! has a closed form, see [`rho_regularly_varying`].

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Relative eigenvalue floor used to decide positive definiteness.
pub const PD_RELATIVE_TOL: f64 = 1e-10;

/// Default tolerance for judging finite-n regularity.
pub const DEFAULT_REGULARITY_TOL: f64 = 0.01;

/// A fixed `n × p` design matrix with finite entries and no zero column.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
}

impl DesignMatrix {
    /// Builds a design from a column-major list of columns.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let p = columns.len();
        if p == 0 {
            return Err(Error::InvalidInput("design needs at least one column".into()));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidInput("design columns have unequal lengths".into()));
        }
        let data = DMatrix::from_fn(n, p, |i, j| columns[j][i]);
        Self::from_matrix(data)
    }

    /// Builds a design from row-major data.
    pub fn from_rows(n: usize, p: usize, rows: &[f64]) -> Result<Self> {
        if rows.len() != n * p {
            return Err(Error::InvalidInput(format!(
                "expected {} entries for a {n}x{p} design, got {}",
                n * p,
                rows.len()
            )));
        }
        Self::from_matrix(DMatrix::from_row_slice(n, p, rows))
    }

    pub fn from_matrix(data: DMatrix<f64>) -> Result<Self> {
        let (n, p) = data.shape();
        if p == 0 || n < p {
            return Err(Error::InvalidInput(format!(
                "design must satisfy n >= p >= 1 (got n = {n}, p = {p})"
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("design has non-finite entries".into()));
        }
        let design = Self { data };
        column_norms(&design)?;
        Ok(design)
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// Column `j` as a contiguous slice.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.nrows();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    /// Sub-design keeping the listed columns in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.ncols()) {
            return Err(Error::InvalidInput(format!(
                "column index {bad} out of range for p = {}",
                self.ncols()
            )));
        }
        Self::from_matrix(self.data.select_columns(cols))
    }
}

/// `d_j(n) = sqrt(Σ_i x_{i,j}²)` for every column.
pub fn column_norms(x: &DesignMatrix) -> Result<Vec<f64>> {
    (0..x.ncols())
        .map(|j| {
            let norm = x.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 0.0 {
                Ok(norm)
            } else {
                Err(Error::ZeroColumn { column: j })
            }
        })
        .collect()
}

/// `max_i |x_{i,j}| / d_j(n)`; values near zero indicate that no single
/// observation dominates the column.
pub fn lindeberg_ratios(x: &DesignMatrix) -> Result<Vec<f64>> {
    let norms = column_norms(x)?;
    Ok(norms
        .iter()
        .enumerate()
        .map(|(j, d)| x.column(j).iter().fold(0.0_f64, |m, v| m.max(v.abs())) / d)
        .collect())
}

/// Finite-sample `ρ̂(k)`; entry `(j, l)` pairs column `j` at time `m` with
/// column `l` at time `m + k`.
pub fn empirical_rho(x: &DesignMatrix, k: usize) -> Result<DMatrix<f64>> {
    let n = x.nrows();
    if k >= n {
        return Err(Error::LagOutOfRange { lag: k, n });
    }
    let norms = column_norms(x)?;
    let p = x.ncols();
    Ok(DMatrix::from_fn(p, p, |j, l| {
        let a = &x.column(j)[..n - k];
        let b = &x.column(l)[k..];
        let s: f64 = a.iter().zip(b).map(|(u, v)| u * v).sum();
        s / (norms[j] * norms[l])
    }))
}

/// Eigenvalue summary of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSummary {
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    pub positive_definite: bool,
}

pub fn spectrum_summary(m: &DMatrix<f64>) -> SpectrumSummary {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    SpectrumSummary {
        min_eigenvalue: min,
        max_eigenvalue: max,
        positive_definite: max > 0.0 && min > PD_RELATIVE_TOL * max,
    }
}

/// Collected design quantities for a set of lags.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignDiagnostics {
    pub col_norms: Vec<f64>,
    pub lindeberg: Vec<f64>,
    pub rho_hat: BTreeMap<usize, DMatrix<f64>>,
    pub r0_hat: DMatrix<f64>,
}

impl DesignDiagnostics {
    pub fn compute(x: &DesignMatrix, lags: &[usize]) -> Result<Self> {
        let mut rho_hat = BTreeMap::new();
        let r0_hat = empirical_rho(x, 0)?;
        rho_hat.insert(0, r0_hat.clone());
        for &k in lags {
            if let std::collections::btree_map::Entry::Vacant(e) = rho_hat.entry(k) {
                e.insert(empirical_rho(x, k)?);
            }
        }
        Ok(Self {
            col_norms: column_norms(x)?,
            lindeberg: lindeberg_ratios(x)?,
            rho_hat,
            r0_hat,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LagDeviation {
    pub lag: usize,
    /// `‖ρ̂(k) − ρ̂(0)‖_∞` (max absolute entry).
    pub max_abs_deviation: f64,
    /// Per-entry `|ρ̂_{j,l}(k) − ρ̂_{j,l}(0)| <= tol`.
    pub entry_regular: Vec<Vec<bool>>,
    pub regular: bool,
    pub rho: Vec<Vec<f64>>,
}

/// Finite-n check of the regular-design conditions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub n: usize,
    pub p: usize,
    pub tol: f64,
    pub col_norms: Vec<f64>,
    pub lindeberg: Vec<f64>,
    pub r0: Vec<Vec<f64>>,
    pub r0_spectrum: SpectrumSummary,
    pub lags: Vec<LagDeviation>,
    /// Every requested lag is within `tol` of lag 0.
    pub regular: bool,
}

pub fn regularity_report(x: &DesignMatrix, lags: &[usize], tol: f64) -> Result<RegularityReport> {
    if !(tol >= 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be >= 0, got {tol}")));
    }
    let diag = DesignDiagnostics::compute(x, lags)?;
    let p = x.ncols();
    let lag_rows: Vec<LagDeviation> = lags
        .iter()
        .map(|k| {
            let rho = &diag.rho_hat[k];
            let diff = rho - &diag.r0_hat;
            let entry_regular: Vec<Vec<bool>> = (0..p)
                .map(|j| (0..p).map(|l| diff[(j, l)].abs() <= tol).collect())
                .collect();
            let max_abs_deviation = diff.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            LagDeviation {
                lag: *k,
                max_abs_deviation,
                regular: max_abs_deviation <= tol,
                entry_regular,
                rho: matrix_rows(rho),
            }
        })
        .collect();
    Ok(RegularityReport {
        n: x.nrows(),
        p,
        tol,
        regular: lag_rows.iter().all(|r| r.regular),
        r0_spectrum: spectrum_summary(&diag.r0_hat),
        r0: matrix_rows(&diag.r0_hat),
        col_norms: diag.col_norms,
        lindeberg: diag.lindeberg,
        lags: lag_rows,
    })
}

/// Limit of `ρ_{j,l}(k)` for columns `i^{α_j}` and `i^{α_l}`:
/// `√(2α_j+1)·√(2α_l+1)/(α_j+α_l+1)`, independent of `k`.
pub fn rho_regularly_varying(alpha_j: f64, alpha_l: f64) -> Result<f64> {
    for alpha in [alpha_j, alpha_l] {
        if !(alpha > -0.5) {
            return Err(Error::ExponentOutOfRange { alpha });
        }
    }
    if alpha_j == alpha_l {
        return Ok(1.0);
    }
    Ok((2.0 * alpha_j + 1.0).sqrt() * (2.0 * alpha_l + 1.0).sqrt() / (alpha_j + alpha_l + 1.0))
}

/// Closed-form `R(0)` for power columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormR0 {
    pub matrix: DMatrix<f64>,
    pub spectrum: SpectrumSummary,
}

impl ClosedFormR0 {
    /// Singular exactly when two exponents coincide.
    pub fn is_singular(&self) -> bool {
        !self.spectrum.positive_definite
    }
}

pub fn r0_from_alphas(alphas: &[f64]) -> Result<ClosedFormR0> {
    if alphas.is_empty() {
        return Err(Error::InvalidInput("need at least one exponent".into()));
    }
    let p = alphas.len();
    let mut matrix = DMatrix::zeros(p, p);
    for j in 0..p {
        for l in 0..p {
            matrix[(j, l)] = rho_regularly_varying(alphas[j], alphas[l])?;
        }
    }
    let spectrum = spectrum_summary(&matrix);
    Ok(ClosedFormR0 { matrix, spectrum })
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}
