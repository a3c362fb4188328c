//! Seeded simulators for stationary error processes.
//!
//! * `ar1_nonmixing`: `ε_{k+1} = (ε_k + η_{k+1})/2` with `η = ±1/2` and
//!   `ε_1 ~ U[−1/2, 1/2]`. Stationary, geometrically dependent, yet not
//!   strongly mixing; `γ(k) = 2^{−|k|}/12` and `Σ_k γ(k) = 1/4`.
//! * `intermittent`: orbits of the Liverani–Saussol–Vaienti map `θ_γ`, which
//!   has a neutral fixed point at 0 and polynomially decaying correlations.
//! * `linear_process`: `f(Σ_i a_i η_{k−i})` for a finite coefficient vector.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

pub const DEFAULT_INTERMITTENT_BURN_IN: usize = 10_000;
pub const DEFAULT_LINEAR_COEFFS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Innovation {
    Gaussian,
    /// `±1` with equal probability.
    Rademacher,
    /// Uniform on `[−√3, √3]` (unit variance).
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PostMap {
    #[default]
    Identity,
    Abs,
    Squared,
}

impl PostMap {
    fn apply(self, x: f64) -> f64 {
        match self {
            PostMap::Identity => x,
            PostMap::Abs => x.abs(),
            PostMap::Squared => x * x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProcessKind {
    Ar1Nonmixing,
    Intermittent {
        gamma: f64,
    },
    LinearProcess {
        coeffs: Vec<f64>,
        innovation: Innovation,
        #[serde(default)]
        post_map: PostMap,
    },
}

/// A process together with its output scale, burn-in and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    #[serde(flatten)]
    pub kind: ProcessKind,
    #[serde(default = "one")]
    pub scale: f64,
    /// Iterations discarded before output; `None` picks the kind's default
    /// (10⁴ for the intermittent map, 0 otherwise).
    #[serde(default)]
    pub burn_in: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl ProcessConfig {
    pub fn new(kind: ProcessKind) -> Self {
        Self {
            kind,
            scale: 1.0,
            burn_in: None,
            seed: 0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn effective_burn_in(&self) -> usize {
        self.burn_in.unwrap_or(match self.kind {
            ProcessKind::Intermittent { .. } => DEFAULT_INTERMITTENT_BURN_IN,
            _ => 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidInput(format!("scale must be positive, got {}", self.scale)));
        }
        match &self.kind {
            ProcessKind::Ar1Nonmixing => Ok(()),
            ProcessKind::Intermittent { gamma } => check_short_range(*gamma),
            ProcessKind::LinearProcess { coeffs, .. } => check_coeffs(coeffs),
        }
    }

    /// `n` scaled samples using the configured seed.
    pub fn simulate(&self, n: usize) -> Result<Vec<f64>> {
        self.simulate_with_seed(n, self.seed)
    }

    /// `n` scaled samples with an explicit seed (used for replications).
    pub fn simulate_with_seed(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = rng_from_seed(seed);
        let burn_in = self.effective_burn_in();
        let mut out = match &self.kind {
            ProcessKind::Ar1Nonmixing => ar1_nonmixing(&mut rng, n, burn_in),
            ProcessKind::Intermittent { gamma } => {
                let x0 = rng.random::<f64>();
                intermittent_orbit_unchecked(x0, *gamma, burn_in, n)
            }
            ProcessKind::LinearProcess {
                coeffs,
                innovation,
                post_map,
            } => linear_process(&mut rng, n, coeffs, *innovation, *post_map, burn_in),
        };
        if self.scale != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.scale);
        }
        Ok(out)
    }
}

fn check_short_range(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "intermittent map exponent {gamma} outside (0, 1/2); for gamma >= 1/2 the orbit is long-range dependent"
        )))
    }
}

fn check_coeffs(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::InvalidInput("linear process needs at least one coefficient".into()));
    }
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidInput("linear process coefficients must be finite".into()));
    }
    Ok(())
}

/// One transition `(ε + η)/2` of the non-mixing chain.
#[inline]
pub fn ar1_step(eps: f64, eta: f64) -> f64 {
    0.5 * (eps + eta)
}

fn ar1_nonmixing(rng: &mut SimRng, n: usize, burn_in: usize) -> Vec<f64> {
    let mut eps = rng.random::<f64>() - 0.5;
    let mut step = |e: f64| ar1_step(e, if rng.random::<bool>() { 0.5 } else { -0.5 });
    for _ in 0..burn_in {
        eps = step(eps);
    }
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(eps);
    for _ in 1..n {
        eps = step(eps);
        out.push(eps);
    }
    out
}

/// Unscaled non-mixing AR(1) series of length `n`.
pub fn simulate_ar1_nonmixing(n: usize, seed: u64) -> Vec<f64> {
    ar1_nonmixing(&mut rng_from_seed(seed), n, 0)
}

/// `θ_γ(x) = x(1 + (2x)^γ)` on `[0, 1/2)`, `2x − 1` on `[1/2, 1]`.
pub fn theta_gamma(x: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("theta_gamma needs x in [0, 1], got {x}")));
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Domain(format!("theta_gamma needs gamma in (0, 1), got {gamma}")));
    }
    Ok(theta(x, gamma))
}

#[inline]
fn theta(x: f64, gamma: f64) -> f64 {
    if x < 0.5 {
        x * (1.0 + (2.0 * x).powf(gamma))
    } else {
        2.0 * x - 1.0
    }
}

fn intermittent_orbit_unchecked(x0: f64, gamma: f64, burn_in: usize, n: usize) -> Vec<f64> {
    let mut x = x0;
    for _ in 0..burn_in {
        x = theta(x, gamma);
    }
    (0..n)
        .map(|_| {
            x = theta(x, gamma);
            x
        })
        .collect()
}

/// Deterministic orbit: iterate `burn_in` times from `x0`, then emit the
/// next `n` iterates.
pub fn intermittent_orbit(x0: f64, gamma: f64, burn_in: usize, n: usize) -> Result<Vec<f64>> {
    theta_gamma(x0, gamma)?;
    Ok(intermittent_orbit_unchecked(x0, gamma, burn_in, n))
}

/// Orbit of `θ_γ` from `x₀ ~ U[0, 1]` after `burn_in` iterations.
pub fn simulate_intermittent(n: usize, gamma: f64, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    ProcessConfig::new(ProcessKind::Intermittent { gamma })
        .with_burn_in(burn_in)
        .with_seed(seed)
        .simulate(n)
}

fn draw(rng: &mut SimRng, innovation: Innovation) -> f64 {
    match innovation {
        Innovation::Gaussian => rng.sample(StandardNormal),
        Innovation::Rademacher => {
            if rng.random::<bool>() {
                1.0
            } else {
                -1.0
            }
        }
        Innovation::Uniform => (2.0 * rng.random::<f64>() - 1.0) * 3.0_f64.sqrt(),
    }
}

fn linear_process(
    rng: &mut SimRng,
    n: usize,
    coeffs: &[f64],
    innovation: Innovation,
    post_map: PostMap,
    burn_in: usize,
) -> Vec<f64> {
    let m = coeffs.len() - 1;
    let total = n + burn_in;
    let eta: Vec<f64> = (0..total + m).map(|_| draw(rng, innovation)).collect();
    // output k uses eta[k + m - i] for i = 0..=m
    let mut out: Vec<f64> = (burn_in..total)
        .map(|k| {
            let s: f64 = coeffs.iter().enumerate().map(|(i, a)| a * eta[k + m - i]).sum();
            post_map.apply(s)
        })
        .collect();
    if !out.is_empty() {
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        out.iter_mut().for_each(|v| *v -= mean);
    }
    out
}

/// `f(Σ_{i=0}^{m} a_i η_{k−i})` for `k = 1..n`, centered by its sample mean.
pub fn simulate_linear_process(
    n: usize,
    coeffs: &[f64],
    innovation: Innovation,
    post_map: PostMap,
    seed: u64,
) -> Result<Vec<f64>> {
    ProcessConfig::new(ProcessKind::LinearProcess {
        coeffs: coeffs.to_vec(),
        innovation,
        post_map,
    })
    .with_seed(seed)
    .simulate(n)
}

/// `(1, r, r², …)` truncated to `len` terms.
pub fn geometric_coeffs(ratio: f64, len: usize) -> Vec<f64> {
    (0..len).map(|i| ratio.powi(i as i32)).collect()
}
