//! Monte Carlo estimation of test level and power.
//!
//! An [`ExperimentSpec`] fixes a design family, true coefficients, an error
//! process, the tested coefficients and the long-run variance method. For
//! each sample size the harness draws `replications` independent error
//! series, fits the full and null models, computes the test statistic and
//! records how often `H₀` is rejected at level `alpha`.
//!
//! Replication `r` at sample size `n` is seeded with
//! [`split_seed`]`(master_seed, n, r)`, so results do not depend on how the
//! work is scheduled across threads.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::inference::{fisher_classic, fisher_corrected, ReferenceKind, TestResult};
use crate::ols::{fit, null_columns, predict};
use crate::processes::ProcessConfig;
use crate::rng::split_seed;
use crate::spectral::{default_bandwidth, lags_needed, AcfEstimate, AcfSource, LrvEstimate, LrvMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    /// Columns `1, i`.
    InterceptLinear,
    /// Columns `1, i, i²`.
    InterceptQuadratic,
    /// Columns `1, √i, log i`.
    InterceptSqrtLog,
}

impl DesignKind {
    pub fn p(self) -> usize {
        match self {
            DesignKind::InterceptLinear => 2,
            DesignKind::InterceptQuadratic | DesignKind::InterceptSqrtLog => 3,
        }
    }
}

/// Design for `i = 1..n`.
pub fn build_design(kind: DesignKind, n: usize) -> Result<DesignMatrix> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("designs need n >= 3, got {n}")));
    }
    let idx: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let ones = vec![1.0; n];
    let cols = match kind {
        DesignKind::InterceptLinear => vec![ones, idx],
        DesignKind::InterceptQuadratic => {
            let sq = idx.iter().map(|i| i * i).collect();
            vec![ones, idx, sq]
        }
        DesignKind::InterceptSqrtLog => {
            let root = idx.iter().map(|i| i.sqrt()).collect();
            let log = idx.iter().map(|i| i.ln()).collect();
            vec![ones, root, log]
        }
    };
    DesignMatrix::from_columns(&cols)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LrvMethodKind {
    #[default]
    Truncated,
    Kernel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    /// Dependence-corrected statistic with a long-run variance denominator.
    #[default]
    Corrected,
    /// Textbook F with `RSS/(n − p)` in the denominator.
    Classic,
}

fn default_symmetrized() -> bool {
    true
}
fn default_replications() -> usize {
    2000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_delta() -> f64 {
    2.0
}

/// Declarative level/power study. Field names double as the JSON config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub design_kind: DesignKind,
    pub beta: Vec<f64>,
    pub process: ProcessConfig,
    pub n_values: Vec<usize>,
    /// Zero-based indices of the tested coefficients; the null model keeps
    /// the remaining columns.
    pub null_cols: Vec<usize>,
    #[serde(default)]
    pub statistic: StatisticKind,
    #[serde(default)]
    pub lrv_method: LrvMethodKind,
    /// Truncation lag for the truncated estimator.
    #[serde(default)]
    pub a_n: usize,
    #[serde(default = "default_symmetrized")]
    pub symmetrized: bool,
    /// Fixed lag-window bandwidth for the kernel estimator; `None` uses
    /// [`default_bandwidth`] with `delta`.
    #[serde(default)]
    pub bandwidth: Option<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub reference: ReferenceKind,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub master_seed: u64,
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self =
            serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("experiment config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("experiment spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidInput("replications must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        let p = self.design_kind.p();
        if self.beta.len() != p {
            return Err(Error::InvalidInput(format!(
                "beta has {} entries, design {:?} has {p} columns",
                self.beta.len(),
                self.design_kind
            )));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidInput("n_values is empty".into()));
        }
        if let Some(&n) = self.n_values.iter().find(|&&n| n <= p) {
            return Err(Error::InvalidInput(format!("sample size {n} does not exceed p = {p}")));
        }
        null_columns(p, &self.null_cols)?;
        self.process.validate()?;
        for &n in &self.n_values {
            self.lrv_method_for(n)?;
        }
        Ok(())
    }

    /// Long-run variance method used at sample size `n`.
    pub fn lrv_method_for(&self, n: usize) -> Result<LrvMethod> {
        match self.lrv_method {
            LrvMethodKind::Truncated => {
                if self.a_n >= n {
                    return Err(Error::LagOutOfRange { lag: self.a_n, n });
                }
                Ok(LrvMethod::Truncated {
                    a_n: self.a_n,
                    symmetrized: self.symmetrized,
                })
            }
            LrvMethodKind::Kernel => {
                let bandwidth = match self.bandwidth {
                    Some(c) => c,
                    None => default_bandwidth(n, self.delta)?,
                };
                if bandwidth < 1 || 2 * bandwidth + 1 > n {
                    return Err(Error::BandwidthOutOfRange { bandwidth, n });
                }
                Ok(LrvMethod::KernelF0 { bandwidth })
            }
        }
    }

    /// The truncated method with the other summation convention, reported
    /// alongside the primary result.
    fn alternate_method(&self, n: usize) -> Option<LrvMethod> {
        match (self.statistic, self.lrv_method_for(n).ok()?) {
            (StatisticKind::Corrected, LrvMethod::Truncated { a_n, symmetrized }) if a_n > 0 => {
                Some(LrvMethod::Truncated {
                    a_n,
                    symmetrized: !symmetrized,
                })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub rejection_frequency: f64,
    /// Mean statistic over replications where it was defined.
    pub mean_statistic: f64,
    pub nonpositive_lrv_count: usize,
    /// Rejection frequency under the other truncated-sum convention, when
    /// applicable.
    pub alt_rejection_frequency: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableResult {
    pub rows: Vec<TableRow>,
    pub spec: ExperimentSpec,
}

impl TableResult {
    /// CSV with `#`-prefixed metadata lines followed by
    /// `n,freq,mean_stat,nonpos_lrv`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# spec: {}", self.spec.to_json());
        if self.rows.iter().any(|r| r.alt_rejection_frequency.is_some()) {
            let _ = writeln!(out, "# alt_convention: symmetrized={}", !self.spec.symmetrized);
            for r in &self.rows {
                if let Some(f) = r.alt_rejection_frequency {
                    let _ = writeln!(out, "# freq_alt: n={},{}", r.n, f);
                }
            }
        }
        out.push_str("n,freq,mean_stat,nonpos_lrv\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.n, r.rejection_frequency, r.mean_statistic, r.nonpositive_lrv_count
            );
        }
        out
    }
}

struct Outcome {
    statistic: Option<f64>,
    reject: bool,
    alt_reject: Option<bool>,
}

struct SampleContext {
    design: DesignMatrix,
    null_design: Option<DesignMatrix>,
    signal: Vec<f64>,
    p0: usize,
}

impl SampleContext {
    fn new(spec: &ExperimentSpec, n: usize) -> Result<Self> {
        let design = build_design(spec.design_kind, n)?;
        let null_cols = null_columns(design.ncols(), &spec.null_cols)?;
        let null_design = if null_cols.is_empty() {
            None
        } else {
            Some(design.select_columns(&null_cols)?)
        };
        let signal = predict(&design, &spec.beta)?;
        Ok(Self {
            design,
            null_design,
            signal,
            p0: null_cols.len(),
        })
    }

    fn response(&self, spec: &ExperimentSpec, seed: u64) -> Result<Vec<f64>> {
        let n = self.signal.len();
        let eps = spec.process.simulate_with_seed(n, seed)?;
        Ok(self.signal.iter().zip(&eps).map(|(s, e)| s + e).collect())
    }
}

fn replicate(
    spec: &ExperimentSpec,
    ctx: &SampleContext,
    method: LrvMethod,
    alt: Option<LrvMethod>,
    seed: u64,
) -> Result<Outcome> {
    let y = ctx.response(spec, seed)?;
    let full = fit(&ctx.design, &y)?;
    let rss0 = match &ctx.null_design {
        Some(d) => fit(d, &y)?.rss,
        None => y.iter().map(|v| v * v).sum(),
    };
    let n = y.len();
    let p = ctx.design.ncols();

    if spec.statistic == StatisticKind::Classic {
        let t = fisher_classic(rss0, full.rss, n, p, ctx.p0, spec.reference)?;
        return Ok(Outcome {
            statistic: Some(t.statistic),
            reject: t.rejects(spec.alpha),
            alt_reject: None,
        });
    }

    let max_lag = lags_needed(method).max(alt.map_or(0, lags_needed)).min(n - 1);
    let acf = AcfEstimate::compute(&full.residuals, max_lag, AcfSource::Residuals)?;
    let test = |m: LrvMethod| -> Result<Option<TestResult>> {
        let lrv = LrvEstimate::from_acf(&acf, m)?;
        if lrv.nonpositive {
            return Ok(None);
        }
        fisher_corrected(rss0, full.rss, &lrv, p, ctx.p0).map(Some)
    };
    let primary = test(method)?;
    let alt_reject = match alt {
        Some(m) => Some(test(m)?.is_some_and(|t| t.rejects(spec.alpha))),
        None => None,
    };
    Ok(Outcome {
        statistic: primary.map(|t| t.statistic),
        reject: primary.is_some_and(|t| t.rejects(spec.alpha)),
        alt_reject,
    })
}

/// Runs every sample size in `spec.n_values`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<TableResult> {
    spec.validate()?;
    let rows = spec
        .n_values
        .iter()
        .map(|&n| run_sample_size(spec, n))
        .collect::<Result<Vec<_>>>()?;
    Ok(TableResult {
        rows,
        spec: spec.clone(),
    })
}

fn run_sample_size(spec: &ExperimentSpec, n: usize) -> Result<TableRow> {
    let ctx = SampleContext::new(spec, n)?;
    let method = spec.lrv_method_for(n)?;
    let alt = spec.alternate_method(n);
    let outcomes = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| replicate(spec, &ctx, method, alt, split_seed(spec.master_seed, n as u64, r)))
        .collect::<Result<Vec<_>>>()?;

    let total = outcomes.len() as f64;
    let rejections = outcomes.iter().filter(|o| o.reject).count();
    let nonpositive = outcomes.iter().filter(|o| o.statistic.is_none()).count();
    let (sum, count) = outcomes
        .iter()
        .filter_map(|o| o.statistic)
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    let alt_rejection_frequency = alt.map(|_| outcomes.iter().filter(|o| o.alt_reject == Some(true)).count() as f64 / total);
    Ok(TableRow {
        n,
        rejection_frequency: rejections as f64 / total,
        mean_statistic: if count > 0 { sum / count as f64 } else { f64::NAN },
        nonpositive_lrv_count: nonpositive,
        alt_rejection_frequency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcfPoint {
    pub lag: usize,
    pub value: f64,
}

/// `(k, γ̂_k)` for `k = 0..=max_lag` of a given series.
pub fn acf_report_from_series(series: &[f64], max_lag: usize, source: AcfSource) -> Result<Vec<AcfPoint>> {
    let acf = AcfEstimate::compute(series, max_lag, source)?;
    Ok(acf
        .values
        .iter()
        .enumerate()
        .map(|(lag, &value)| AcfPoint { lag, value })
        .collect())
}

/// Residual autocovariances from one simulated fit of the full model at
/// sample size `n` (replication 0 of the spec's seed stream).
pub fn acf_report(spec: &ExperimentSpec, n: usize, max_lag: usize) -> Result<Vec<AcfPoint>> {
    spec.validate()?;
    let ctx = SampleContext::new(spec, n)?;
    let y = ctx.response(spec, split_seed(spec.master_seed, n as u64, 0))?;
    let full = fit(&ctx.design, &y)?;
    acf_report_from_series(&full.residuals, max_lag, AcfSource::Residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::processes::{Innovation, PostMap, ProcessKind};

    pub(crate) fn example1(a_n: usize, beta1: f64, n_values: Vec<usize>, replications: usize) -> ExperimentSpec {
        ExperimentSpec {
            design_kind: DesignKind::InterceptLinear,
            beta: vec![3.0, beta1],
            process: ProcessConfig::new(ProcessKind::Ar1Nonmixing).with_scale(10.0),
            n_values,
            null_cols: vec![1],
            statistic: StatisticKind::Corrected,
            lrv_method: LrvMethodKind::Truncated,
            a_n,
            symmetrized: true,
            bandwidth: None,
            delta: 2.0,
            reference: ReferenceKind::Chi2OverDof,
            replications,
            alpha: 0.05,
            master_seed: 2024,
        }
    }

    #[test]
    fn design_columns() {
        let x = build_design(DesignKind::InterceptLinear, 3).unwrap();
        assert_eq!(x.column(0), &[1.0, 1.0, 1.0]);
        assert_eq!(x.column(1), &[1.0, 2.0, 3.0]);
        let q = build_design(DesignKind::InterceptQuadratic, 12).unwrap();
        assert_eq!((q.column(0)[9], q.column(1)[9], q.column(2)[9]), (1.0, 10.0, 100.0));
        let s = build_design(DesignKind::InterceptSqrtLog, 5).unwrap();
        assert_eq!((s.column(0)[0], s.column(1)[0], s.column(2)[0]), (1.0, 1.0, 0.0));
        assert_eq!(s.column(2)[3], 4.0_f64.ln());
        assert!(build_design(DesignKind::InterceptLinear, 2).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = example1(3, 0.0, vec![200], 10);
        assert!(spec.validate().is_ok());
        spec.beta = vec![1.0];
        assert!(spec.validate().is_err());
        let mut spec = example1(3, 0.0, vec![200], 0);
        assert!(spec.validate().is_err());
        spec.replications = 5;
        spec.alpha = 1.0;
        assert!(spec.validate().is_err());
        let spec = example1(300, 0.0, vec![200], 5);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn json_config_defaults() {
        let spec = ExperimentSpec::from_json(
            r#"{
                "design_kind": "intercept_linear",
                "beta": [3.0, 0.0],
                "process": {"kind": "ar1_nonmixing", "scale": 10.0},
                "n_values": [200, 400],
                "null_cols": [1],
                "a_n": 3
            }"#,
        )
        .unwrap();
        assert_eq!(spec.replications, 2000);
        assert_eq!(spec.alpha, 0.05);
        assert!(spec.symmetrized);
        assert_eq!(spec.lrv_method_for(200).unwrap(), LrvMethod::Truncated { a_n: 3, symmetrized: true });
        assert!(ExperimentSpec::from_json(r#"{"design_kind": "intercept_linear"}"#).is_err());
        let back = ExperimentSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn reruns_are_bit_identical() {
        let spec = example1(3, 0.0, vec![200, 400], 200);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        for r in &a.rows {
            assert!((0.0..=1.0).contains(&r.rejection_frequency));
            assert!(r.alt_rejection_frequency.is_some());
        }
    }

    #[test]
    fn kernel_method_uses_default_bandwidth() {
        let mut spec = example1(0, 0.0, vec![500], 50);
        spec.lrv_method = LrvMethodKind::Kernel;
        assert_eq!(spec.lrv_method_for(500).unwrap(), LrvMethod::KernelF0 { bandwidth: 16 });
        let t = run_experiment(&spec).unwrap();
        assert!(t.rows[0].alt_rejection_frequency.is_none());
    }

    #[test]
    fn classic_gaussian_is_near_nominal() {
        let spec = ExperimentSpec {
            design_kind: DesignKind::InterceptLinear,
            beta: vec![0.0, 0.0],
            process: ProcessConfig::new(ProcessKind::LinearProcess {
                coeffs: vec![1.0],
                innovation: Innovation::Gaussian,
                post_map: PostMap::Identity,
            }),
            n_values: vec![50],
            null_cols: vec![1],
            statistic: StatisticKind::Classic,
            lrv_method: LrvMethodKind::Truncated,
            a_n: 0,
            symmetrized: true,
            bandwidth: None,
            delta: 2.0,
            reference: ReferenceKind::Fisher,
            replications: 2000,
            alpha: 0.05,
            master_seed: 99,
        };
        let t = run_experiment(&spec).unwrap();
        let band = 2.0 * (0.05_f64 * 0.95 / 2000.0).sqrt();
        assert!((t.rows[0].rejection_frequency - 0.05).abs() <= band, "{:?}", t.rows[0]);
    }

    #[test]
    fn csv_layout() {
        let spec = example1(2, 0.0, vec![100], 20);
        let csv = run_experiment(&spec).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# spec: {"));
        let header = lines.iter().position(|l| *l == "n,freq,mean_stat,nonpos_lrv").unwrap();
        assert!(lines[..header].iter().all(|l| l.starts_with('#')));
        assert_eq!(lines.len(), header + 2);
        assert!(lines[header + 1].starts_with("100,"));
    }

    #[test]
    fn acf_of_example1_residuals_decays_geometrically() {
        let spec = example1(0, 0.0, vec![600], 1);
        let pts = acf_report(&spec, 600, 6).unwrap();
        assert_eq!(pts.len(), 7);
        let g0 = pts[0].value;
        assert!((g0 - 100.0 / 12.0).abs() < 1.5);
        assert!(pts[1].value / g0 > 0.3 && pts[1].value / g0 < 0.7);
        for p in &pts[4..] {
            assert!((p.value / g0).abs() < 0.15, "{p:?}");
        }
        let zeros = acf_report_from_series(&[0.0; 10], 3, AcfSource::Residuals).unwrap();
        assert!(zeros.iter().all(|p| p.value == 0.0));
    }
}
