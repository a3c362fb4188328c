//! Ordinary least squares via Householder QR on column-normalized designs.

use nalgebra::DVector;
use serde::Serialize;

use crate::design::{column_norms, DesignMatrix};
use crate::error::{Error, Result};

/// Pivots of the normalized `R` factor below this (relative to the largest)
/// mark the design as rank deficient.
pub const RANK_RELATIVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub beta_hat: Vec<f64>,
    pub residuals: Vec<f64>,
    pub rss: f64,
    pub col_norms: Vec<f64>,
}

impl FitResult {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }

    /// `Y − ε̂`.
    pub fn fitted(&self, y: &[f64]) -> Vec<f64> {
        y.iter().zip(&self.residuals).map(|(a, b)| a - b).collect()
    }
}

pub fn fit(x: &DesignMatrix, y: &[f64]) -> Result<FitResult> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::InvalidInput(format!(
            "response has length {}, design has {n} rows",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("response has non-finite entries".into()));
    }
    let norms = column_norms(x)?;
    let mut scaled = x.matrix().clone();
    for (j, d) in norms.iter().enumerate() {
        scaled.column_mut(j).unscale_mut(*d);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let p = x.ncols();
    let max_pivot = (0..p).map(|j| r[(j, j)].abs()).fold(0.0_f64, f64::max);
    for j in 0..p {
        let pivot = r[(j, j)].abs();
        if pivot <= RANK_RELATIVE_TOL * max_pivot {
            return Err(Error::RankDeficient { column: j, pivot });
        }
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, p).into_owned();
    let coef = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::RankDeficient { column: p - 1, pivot: 0.0 })?;
    let beta_hat: Vec<f64> = coef.iter().zip(&norms).map(|(b, d)| b / d).collect();

    let beta = DVector::from_column_slice(&beta_hat);
    let fitted: DVector<f64> = x.matrix() * beta;
    let residuals: Vec<f64> = y.iter().zip(fitted.iter()).map(|(a, b)| a - b).collect();
    let rss = residuals.iter().map(|e| e * e).sum();
    Ok(FitResult {
        beta_hat,
        residuals,
        rss,
        col_norms: norms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NestedRss {
    pub rss_full: f64,
    pub rss_null: f64,
    /// Dimension of the null model (`p₀`).
    pub p0: usize,
}

/// RSS of the full model and of the null model obtained by dropping the
/// `tested` columns (zero-based). With every column tested the null model is
/// empty; that is only accepted when `allow_zero_model` is set, in which case
/// `RSS₀ = ‖Y‖²`.
pub fn nested_rss(
    x: &DesignMatrix,
    tested: &[usize],
    y: &[f64],
    allow_zero_model: bool,
) -> Result<NestedRss> {
    let full = fit(x, y)?;
    let null_cols = null_columns(x.ncols(), tested)?;
    let rss_null = if null_cols.is_empty() {
        if !allow_zero_model {
            return Err(Error::EmptyNullModel);
        }
        y.iter().map(|v| v * v).sum()
    } else {
        fit(&x.select_columns(&null_cols)?, y)?.rss
    };
    Ok(NestedRss {
        rss_full: full.rss,
        rss_null,
        p0: null_cols.len(),
    })
}

/// Complement of `tested` in `0..p`, validating the tested set.
pub fn null_columns(p: usize, tested: &[usize]) -> Result<Vec<usize>> {
    if tested.is_empty() {
        return Err(Error::InvalidInput("tested column set is empty".into()));
    }
    let mut seen = vec![false; p];
    for &c in tested {
        if c >= p {
            return Err(Error::InvalidInput(format!("tested column {c} out of range for p = {p}")));
        }
        if seen[c] {
            return Err(Error::InvalidInput(format!("tested column {c} listed twice")));
        }
        seen[c] = true;
    }
    Ok((0..p).filter(|c| !seen[*c]).collect())
}

/// Residual sums at or below this fraction of `‖Y‖²` are round-off from an
/// exact fit.
pub const NOISELESS_RELATIVE_RSS: f64 = 1e-20;

/// `DegenerateFit` when `rss` is round-off relative to `‖Y‖²`.
pub fn check_noisy(rss: f64, y: &[f64]) -> Result<()> {
    let total: f64 = y.iter().map(|v| v * v).sum();
    if rss <= NOISELESS_RELATIVE_RSS * total {
        Err(Error::DegenerateFit)
    } else {
        Ok(())
    }
}

/// Convenience for building `X·β`.
pub fn predict(x: &DesignMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    if beta.len() != x.ncols() {
        return Err(Error::InvalidInput(format!(
            "coefficient vector has length {}, design has {} columns",
            beta.len(),
            x.ncols()
        )));
    }
    let b = DVector::from_column_slice(beta);
    let out: DVector<f64> = x.matrix() * b;
    Ok(out.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn line_design(n: usize) -> DesignMatrix {
        DesignMatrix::from_columns(&[vec![1.0; n], (1..=n).map(|i| i as f64).collect()]).unwrap()
    }

    #[test]
    fn mean_fit() {
        let x = DesignMatrix::from_columns(&[vec![1.0; 3]]).unwrap();
        let f = fit(&x, &[1.0, 2.0, 3.0]).unwrap();
        assert_abs_diff_eq!(f.beta_hat[0], 2.0, epsilon = 1e-14);
        for (a, b) in f.residuals.iter().zip([-1.0, 0.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_abs_diff_eq!(f.rss, 2.0, epsilon = 1e-13);
    }

    #[test]
    fn exact_line() {
        let x = line_design(5);
        let f = fit(&x, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_abs_diff_eq!(f.beta_hat[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.beta_hat[1], 1.0, epsilon = 1e-12);
        assert!(f.rss < 1e-24);
        assert_eq!(check_noisy(f.rss, &[1.0, 2.0, 3.0, 4.0, 5.0]), Err(Error::DegenerateFit));
        let noisy = fit(&x, &[1.0, 2.5, 3.0, 4.0, 5.0]).unwrap();
        assert!(check_noisy(noisy.rss, &[1.0, 2.5, 3.0, 4.0, 5.0]).is_ok());
    }

    #[test]
    fn noiseless_recovers_beta() {
        let x = DesignMatrix::from_columns(&[
            vec![1.0; 50],
            (1..=50).map(|i| i as f64).collect(),
            (1..=50).map(|i| (i * i) as f64).collect(),
        ])
        .unwrap();
        let beta = [3.0, -0.5, 0.01];
        let y = predict(&x, &beta).unwrap();
        let f = fit(&x, &y).unwrap();
        for (a, b) in f.beta_hat.iter().zip(beta) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-9);
        }
        assert!(f.rss < 1e-18);
    }

    #[test]
    fn rank_deficiency_is_detected() {
        let c: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let doubled: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let x = DesignMatrix::from_columns(&[vec![1.0; 10], c, doubled]).unwrap();
        let err = fit(&x, &[0.0; 10]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { column: 2, .. }), "{err:?}");
    }

    #[test]
    fn nested_slope_test() {
        let x = line_design(5);
        let r = nested_rss(&x, &[1], &[1.0, 2.0, 3.0, 4.0, 5.0], false).unwrap();
        assert!(r.rss_full < 1e-24);
        assert_abs_diff_eq!(r.rss_null, 10.0, epsilon = 1e-12);
        assert_eq!(r.p0, 1);
    }

    #[test]
    fn nested_orthogonal_direction_changes_nothing() {
        // y is constant: the slope column adds nothing beyond the intercept
        let x = line_design(6);
        let r = nested_rss(&x, &[1], &[2.0; 6], false).unwrap();
        assert_abs_diff_eq!(r.rss_full, r.rss_null, epsilon = 1e-20);
    }

    #[test]
    fn empty_null_model_needs_opt_in() {
        let x = line_design(5);
        let y = [1.0, 2.0, 3.0, 4.0, 6.0];
        assert_eq!(nested_rss(&x, &[0, 1], &y, false).unwrap_err(), Error::EmptyNullModel);
        let r = nested_rss(&x, &[1, 0], &y, true).unwrap();
        assert_abs_diff_eq!(r.rss_null, 66.0, epsilon = 1e-12);
        assert_eq!(r.p0, 0);
    }

    fn design_strategy() -> impl Strategy<Value = (DesignMatrix, Vec<f64>)> {
        (8usize..40).prop_flat_map(|n| {
            (
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-5.0f64..5.0, n),
                proptest::collection::vec(-50.0f64..50.0, n),
            )
                .prop_map(move |(a, b, y)| {
                    let x = DesignMatrix::from_columns(&[vec![1.0; a.len()], a, b]).unwrap();
                    (x, y)
                })
        })
    }

    proptest! {
        #[test]
        fn residuals_are_orthogonal((x, y) in design_strategy()) {
            let f = match fit(&x, &y) { Ok(f) => f, Err(_) => return Ok(()) };
            let xnorm = x.matrix().norm();
            let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            for j in 0..x.ncols() {
                let dot: f64 = x.column(j).iter().zip(&f.residuals).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-8 * xnorm * ynorm.max(1.0));
            }
            let rss: f64 = f.residuals.iter().map(|e| e * e).sum();
            prop_assert_eq!(rss, f.rss);
        }

        #[test]
        fn nesting_never_lowers_rss((x, y) in design_strategy()) {
            if let Ok(r) = nested_rss(&x, &[1, 2], &y, false) {
                prop_assert!(r.rss_null >= r.rss_full * (1.0 - 1e-12) - 1e-9);
            }
        }

        #[test]
        fn scaling_response((x, y) in design_strategy(), c in 0.1f64..10.0) {
            let f = match fit(&x, &y) { Ok(f) => f, Err(_) => return Ok(()) };
            let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
            let g = fit(&x, &ys).unwrap();
            for (a, b) in f.beta_hat.iter().zip(&g.beta_hat) {
                prop_assert!((c * a - b).abs() <= 1e-7 * (1.0 + b.abs()));
            }
            prop_assert!((c * c * f.rss - g.rss).abs() <= 1e-8 * (1.0 + g.rss));
        }

        #[test]
        fn reparametrization_keeps_fitted_values(
            (x, y) in design_strategy(),
            m in proptest::collection::vec(-2.0f64..2.0, 9),
        ) {
            let mm = DMatrix::from_row_slice(3, 3, &m) + DMatrix::identity(3, 3) * 3.0;
            prop_assume!(mm.determinant().abs() > 0.5);
            let f = match fit(&x, &y) { Ok(f) => f, Err(_) => return Ok(()) };
            let xm = match DesignMatrix::from_matrix(x.matrix() * &mm) { Ok(d) => d, Err(_) => return Ok(()) };
            let g = match fit(&xm, &y) { Ok(g) => g, Err(_) => return Ok(()) };
            let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
            for (a, b) in f.fitted(&y).iter().zip(g.fitted(&y)) {
                prop_assert!((a - b).abs() <= 1e-8 * scale);
            }
            prop_assert!((f.rss - g.rss).abs() <= 1e-8 * (1.0 + f.rss));
        }
    }
}
