//! Acceptance checks. Runs without the libtest harness so that every check
//! prints exactly one PASS/FAIL line; the process exits non-zero if any fail.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;

use lrv_core::design::empirical_rho;
use lrv_core::inference::{chi2_sf, fisher_classic, fisher_corrected};
use lrv_core::montecarlo::{
    build_design, run_experiment, DesignKind, ExperimentSpec, LrvMethodKind, StatisticKind,
};
use lrv_core::ols::nested_rss;
use lrv_core::processes::{Innovation, PostMap, ProcessConfig, ProcessKind};
use lrv_core::rng::rng_from_seed;
use lrv_core::spectral::{autocov, default_bandwidth, kernel_k, lrv, spectral_density_grid, LrvMethod};
use lrv_core::{DesignMatrix, ReferenceKind};

const SEED: u64 = 2024;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

fn spec(process: ProcessConfig, beta1: f64, a_n: usize, n: usize) -> ExperimentSpec {
    ExperimentSpec {
        design_kind: DesignKind::InterceptLinear,
        beta: vec![3.0, beta1],
        process,
        n_values: vec![n],
        null_cols: vec![1],
        statistic: StatisticKind::Corrected,
        lrv_method: LrvMethodKind::Truncated,
        a_n,
        symmetrized: true,
        bandwidth: None,
        delta: 2.0,
        reference: ReferenceKind::Chi2OverDof,
        replications: 2000,
        alpha: 0.05,
        master_seed: SEED,
    }
}

fn ar1_scaled() -> ProcessConfig {
    ProcessConfig::new(ProcessKind::Ar1Nonmixing).with_scale(10.0)
}

fn intermittent_scaled() -> ProcessConfig {
    ProcessConfig::new(ProcessKind::Intermittent { gamma: 0.25 }).with_scale(10.0)
}

fn level(process: ProcessConfig, beta1: f64, a_n: usize, n: usize) -> f64 {
    run_experiment(&spec(process, beta1, a_n, n)).unwrap().rows[0].rejection_frequency
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn uncorrected_level_example1() -> Check {
    let start = Instant::now();
    let f = level(ar1_scaled(), 0.0, 0, 1000);
    let secs = start.elapsed().as_secs_f64();
    check(
        "AR(1) example, a_n=0, n=1000: level 0.2445 +/- 0.03 in under 60 s",
        within(f, 0.2445, 0.03) && secs < 60.0,
        format!("level {f:.4}, {secs:.1} s"),
    )
}

fn corrected_level_example1() -> Check {
    let f1000 = level(ar1_scaled(), 0.0, 3, 1000);
    let f5000 = level(ar1_scaled(), 0.0, 4, 5000);
    check(
        "AR(1) example: a_n=3, n=1000 level 0.0625 +/- 0.02; a_n=4, n=5000 level 0.05 +/- 0.015",
        within(f1000, 0.0625, 0.02) && within(f5000, 0.05, 0.015),
        format!("n=1000: {f1000:.4}, n=5000: {f5000:.4}"),
    )
}

fn power_example1() -> Check {
    let p600 = level(ar1_scaled(), 0.005, 3, 600);
    let p800 = level(ar1_scaled(), 0.005, 3, 800);
    check(
        "AR(1) example, beta1=0.005, a_n=3: power >= 0.95 at n=600, >= 0.99 at n=800",
        p600 >= 0.95 && p800 >= 0.99,
        format!("n=600: {p600:.4}, n=800: {p800:.4}"),
    )
}

fn intermittent_levels() -> Check {
    let start = Instant::now();
    let f0 = level(intermittent_scaled(), 0.0, 0, 5000);
    let f7 = level(intermittent_scaled(), 0.0, 7, 5000);
    let secs = start.elapsed().as_secs_f64();
    check(
        "intermittent map gamma=1/4, n=5000: a_n=0 level 0.349 +/- 0.04; a_n=7 level 0.06 +/- 0.02",
        within(f0, 0.349, 0.04) && within(f7, 0.06, 0.02),
        format!("a_n=0: {f0:.4}, a_n=7: {f7:.4}, {secs:.1} s"),
    )
}

fn kernel_lrv_ar1() -> Check {
    let n = 100_000;
    let c = default_bandwidth(n, 2.0).unwrap();
    let method = LrvMethod::KernelF0 { bandwidth: c };
    let unit = ProcessConfig::new(ProcessKind::Ar1Nonmixing).with_seed(SEED);
    let v1 = lrv(&unit.simulate(n).unwrap(), method).unwrap().value;
    let v10 = lrv(&unit.with_scale(10.0).simulate(n).unwrap(), method).unwrap().value;
    check(
        "kernel LRV on n=1e5 AR(1) with default bandwidth: within 15% of 1/4 (scale 1) and 25 (scale 10)",
        (v1 / 0.25 - 1.0).abs() <= 0.15 && (v10 / 25.0 - 1.0).abs() <= 0.15,
        format!("c_n={c}, scale 1: {v1:.5}, scale 10: {v10:.3}"),
    )
}

fn random_design(rng: &mut impl Rng, n: usize, p: usize) -> DesignMatrix {
    let mut cols = vec![vec![1.0; n]];
    for _ in 1..p {
        cols.push((0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect());
    }
    DesignMatrix::from_columns(&cols).unwrap()
}

fn corrected_vs_classic_identity() -> Check {
    let mut rng = rng_from_seed(SEED);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let n = rng.random_range(10..=200);
        let p = rng.random_range(2..=5);
        let q = rng.random_range(1..p);
        let x = random_design(&mut rng, n, p);
        let y: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let tested: Vec<usize> = (p - q..p).collect();
        let rss = nested_rss(&x, &tested, &y, false).unwrap();
        let full = lrv_core::ols::fit(&x, &y).unwrap();
        let est = lrv(&full.residuals, LrvMethod::Truncated { a_n: 0, symmetrized: true }).unwrap();
        let corrected = fisher_corrected(rss.rss_null, rss.rss_full, &est, p, rss.p0).unwrap().statistic;
        let classic = fisher_classic(rss.rss_null, rss.rss_full, n, p, rss.p0, ReferenceKind::Chi2OverDof)
            .unwrap()
            .statistic;
        let expected = n as f64 / (n - p) as f64 * classic;
        worst = worst.max((corrected - expected).abs() / expected.abs().max(f64::MIN_POSITIVE));
    }
    check(
        "corrected F with a_n=0 equals n/(n-p) times classic F on 100 random instances (1e-10 relative)",
        worst <= 1e-10,
        format!("max relative error {worst:.2e}"),
    )
}

fn brute_force_autocov(s: &[f64], k: usize) -> f64 {
    let n = s.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if j == i + k {
                acc += s[i] * s[j];
            }
        }
    }
    acc / n as f64
}

fn autocov_and_spectral_integral() -> Check {
    let mut rng = rng_from_seed(SEED + 1);
    let mut worst_acf = 0.0_f64;
    for n in [1usize, 2, 7, 50, 200] {
        let s: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        for k in 0..n {
            let fast = autocov(&s, k as isize).unwrap();
            let back = autocov(&s, -(k as isize)).unwrap();
            let oracle = brute_force_autocov(&s, k);
            worst_acf = worst_acf.max((fast - oracle).abs()).max((back - oracle).abs());
        }
    }
    let s: Vec<f64> = (0..500).map(|_| rng.random::<f64>() - 0.5).collect();
    let c = 20;
    let m = 4097;
    let grid: Vec<f64> = (0..m).map(|i| -PI + 2.0 * PI * i as f64 / (m - 1) as f64).collect();
    let f = spectral_density_grid(&s, c, &grid).unwrap();
    let h = 2.0 * PI / (m - 1) as f64;
    let integral = h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[m - 1]));
    let g0 = autocov(&s, 0).unwrap();
    let rel = (integral / g0 - 1.0).abs();
    check(
        "autocov matches O(n^2) oracle on all lags; trapezoid integral of f over [-pi, pi] equals gamma_0 (1e-6 relative)",
        worst_acf <= 1e-12 && rel <= 1e-6,
        format!("acf max abs error {worst_acf:.2e}, integral relative error {rel:.2e}"),
    )
}

fn reference_kernel(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        1.0
    } else if x.abs() <= 2.0 {
        2.0 - x.abs()
    } else {
        0.0
    }
}

fn rho_limit_and_kernel() -> Check {
    let n = 100_000;
    let x = build_design(DesignKind::InterceptLinear, n).unwrap();
    let r = 3.0_f64.sqrt() / 2.0;
    let target = [[1.0, r], [r, 1.0]];
    let mut worst = 0.0_f64;
    for k in 0..=5 {
        let rho = empirical_rho(&x, k).unwrap();
        for j in 0..2 {
            for l in 0..2 {
                worst = worst.max((rho[(j, l)] - target[j][l]).abs());
            }
        }
    }
    let grid: Vec<f64> = (0..20).map(|i| -2.5 + 5.0 * i as f64 / 19.0).collect();
    let kernel_ok = grid.iter().all(|&g| kernel_k(g) == reference_kernel(g))
        && [0.0, 1.0, -1.0, 1.5, 2.0, -2.0].iter().all(|&g| kernel_k(g) == reference_kernel(g));
    check(
        "rho(k) for columns 1, i at n=1e5, k=0..5 within 1e-2 of [[1, sqrt3/2], [sqrt3/2, 1]]; K exact on grid",
        worst <= 1e-2 && kernel_ok,
        format!("max deviation {worst:.2e}, kernel exact: {kernel_ok}"),
    )
}

// erf by composite Simpson on [0, z]
fn erf_quadrature(z: f64) -> f64 {
    let m = 20_000;
    let h = z / m as f64;
    let g = |t: f64| (-t * t).exp();
    let mut acc = g(0.0) + g(z);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(i as f64 * h);
    }
    2.0 / PI.sqrt() * acc * h / 3.0
}

fn gaussian_calibration() -> Check {
    let mut worst_tail = 0.0_f64;
    for x in [0.01_f64, 0.3, 1.0, 2.5, 3.841_458_820_694_124, 7.0, 12.0] {
        let dof1 = 1.0 - erf_quadrature((x / 2.0).sqrt());
        let dof2 = (-x / 2.0).exp();
        worst_tail = worst_tail
            .max((chi2_sf(x, 1) - dof1).abs() / dof1)
            .max((chi2_sf(x, 2) - dof2).abs() / dof2);
    }
    let gaussian = ProcessConfig::new(ProcessKind::LinearProcess {
        coeffs: vec![1.0],
        innovation: Innovation::Gaussian,
        post_map: PostMap::Identity,
    });
    let mut s = spec(gaussian, 0.0, 0, 50);
    s.statistic = StatisticKind::Classic;
    s.reference = ReferenceKind::Fisher;
    let f = run_experiment(&s).unwrap().rows[0].rejection_frequency;
    check(
        "i.i.d. Gaussian classic F with Fisher reference: level 0.05 +/- 0.01 (N=2000); chi2 tails match closed forms",
        within(f, 0.05, 0.01) && worst_tail <= 1e-8,
        format!("level {f:.4}, chi2 tail max relative error {worst_tail:.2e}"),
    )
}

fn main() -> ExitCode {
    let checks: Vec<fn() -> Check> = vec![
        uncorrected_level_example1,
        corrected_level_example1,
        power_example1,
        intermittent_levels,
        kernel_lrv_ar1,
        corrected_vs_classic_identity,
        autocov_and_spectral_integral,
        rho_limit_and_kernel,
        gaussian_calibration,
    ];
    let mut failed = 0;
    for (i, run) in checks.iter().enumerate() {
        let c = run();
        let tag = if c.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {} ({})", i + 1, c.name, c.detail);
        if !c.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
