//! The standardized excess-MAD test and post-data severity.
//!
//! With `δ = MAD - E(MAD)`, the statistic
//!
//! ```text
//! δ̃ = k √n δ / √(1′DRD1)
//! ```
//!
//! is asymptotically N(0, 1) under conformity. Under the alternative
//! `δ = δ*` it is approximately N(ncp, 1) with `ncp = k √n δ* / √(1′DRD1)`.
//! The severity with which the data back the claim `δ > δ*` is
//! `Pr(δ̃ ≤ δ̃_obs; δ = δ*) = Φ(δ̃_obs - ncp)`; the claim `δ ≤ δ*` gets the
//! mirror image `1 - Φ(δ̃_obs - ncp)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{constants, mad_moments};
use crate::benford::{benford_probs, mad, proportions, Proportions};
use crate::digits::{DigitCounts, DigitSystem};
use crate::error::{domain, Error, Result};
use crate::specialfn::{noncentral_chi2_cdf, std_normal_cdf, std_normal_sf, Probability};

/// Default discrepancy benchmark for the first-digit test.
pub const DEFAULT_DELTA_STAR_FIRST: f64 = 0.00321;
/// Default discrepancy benchmark for the first-two-digits test.
pub const DEFAULT_DELTA_STAR_FIRST_TWO: f64 = 0.00037;

/// Close-conformity MAD thresholds (first digit, first-two digits).
pub const CLOSE_CONFORMITY_FIRST: f64 = 0.006;
pub const CLOSE_CONFORMITY_FIRST_TWO: f64 = 0.0012;

pub const DEFAULT_MIN_EXPECTED: f64 = 5.0;
pub const DEFAULT_N_MAX: u64 = 25_000;

pub fn default_delta_star(system: DigitSystem) -> f64 {
    match system {
        DigitSystem::FirstDigit => DEFAULT_DELTA_STAR_FIRST,
        DigitSystem::FirstTwoDigits => DEFAULT_DELTA_STAR_FIRST_TWO,
    }
}

pub fn close_conformity_threshold(system: DigitSystem) -> f64 {
    match system {
        DigitSystem::FirstDigit => CLOSE_CONFORMITY_FIRST,
        DigitSystem::FirstTwoDigits => CLOSE_CONFORMITY_FIRST_TWO,
    }
}

/// Result of the excess-MAD normal test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub system: DigitSystem,
    pub n: u64,
    pub mad: f64,
    /// Null mean of the MAD at this `n`.
    pub expected_mad: f64,
    /// Null standard deviation of the MAD at this `n`.
    pub sd_mad: f64,
    /// `δ = MAD - E(MAD)`
    pub excess_delta: f64,
    /// Standardized excess `δ̃`.
    pub tilde_delta: f64,
    /// One-sided p-value `1 - Φ(δ̃)` for H₁: δ > 0.
    pub p_value: Probability,
    /// `n` is below the minimum for this digit system.
    pub small_sample: bool,
}

/// Runs the excess-MAD test on observed digit counts.
pub fn run_test(counts: &DigitCounts) -> Result<TestOutcome> {
    let p = proportions(counts)?;
    run_test_from_proportions(&p)
}

/// Runs the excess-MAD test on proportions with their sample size.
pub fn run_test_from_proportions(p: &Proportions) -> Result<TestOutcome> {
    if p.n == 0 {
        return Err(Error::EmptySample);
    }
    let system = p.system;
    let b = benford_probs(system);
    let mad = mad(p, &b)?;
    let moments = mad_moments(system, p.n);
    let excess_delta = mad - moments.mean;
    let tilde_delta = standardize(system, p.n, excess_delta);
    let n_min = n_min_for(system, DEFAULT_MIN_EXPECTED).expect("positive default");
    Ok(TestOutcome {
        system,
        n: p.n,
        mad,
        expected_mad: moments.mean,
        sd_mad: moments.sd,
        excess_delta,
        tilde_delta,
        p_value: std_normal_sf(tilde_delta),
        small_sample: p.n < n_min,
    })
}

/// `k √n x / √(1′DRD1)`: maps an excess-MAD value to the standardized scale.
pub fn standardize(system: DigitSystem, n: u64, excess: f64) -> f64 {
    let c = constants(system);
    system.k() as f64 * (n as f64).sqrt() * excess / c.quad_form.sqrt()
}

/// Which test a severity refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    ExcessMad,
    ChiSquare,
}

/// Direction of the claim whose severity is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Claim {
    /// The discrepancy exceeds the benchmark (δ > δ*).
    DiscrepancyExceeds,
    /// The discrepancy is at most the benchmark (δ ≤ δ*).
    DiscrepancyAtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityResult {
    pub test: TestKind,
    pub claim: Claim,
    /// Discrepancy benchmark: δ* for the MAD test, ψ* for chi-square.
    pub delta_star: f64,
    /// Location of the test statistic under the benchmark alternative.
    pub noncentrality: f64,
    pub severity: Probability,
}

impl SeverityResult {
    pub fn claim_text(&self) -> &'static str {
        match (self.test, self.claim) {
            (TestKind::ExcessMad, Claim::DiscrepancyExceeds) => "δ > δ*",
            (TestKind::ExcessMad, Claim::DiscrepancyAtMost) => "δ ≤ δ*",
            (TestKind::ChiSquare, Claim::DiscrepancyExceeds) => "ψ > ψ*",
            (TestKind::ChiSquare, Claim::DiscrepancyAtMost) => "ψ ≤ ψ*",
        }
    }
}

impl fmt::Display for SeverityResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SEV({}) = {}", self.claim_text(), self.severity)
    }
}

/// Severity of an observed standard-normal outcome `z_obs` when the
/// statistic is N(ncp, 1) under the benchmark alternative: `Φ(z_obs - ncp)`.
pub fn generic_normal_severity(z_obs: f64, ncp: f64) -> Probability {
    std_normal_cdf(z_obs - ncp)
}

/// Shift of a one-sided z-test of a normal mean: `√n (μ₁ - μ₀) / σ`.
pub fn mean_test_noncentrality(n: u64, mu0: f64, mu1: f64, sigma: f64) -> f64 {
    (n as f64).sqrt() * (mu1 - mu0) / sigma
}

/// `k √n δ* / √(1′DRD1)`
pub fn noncentrality(system: DigitSystem, n: u64, delta_star: f64) -> f64 {
    standardize(system, n, delta_star)
}

fn check_severity_args(tilde_delta_obs: f64, delta_star: f64, n: u64) -> Result<()> {
    if !tilde_delta_obs.is_finite() {
        return domain(format!("observed statistic must be finite, got {tilde_delta_obs}"));
    }
    if !(delta_star >= 0.0) || !delta_star.is_finite() {
        return domain(format!("discrepancy benchmark must be finite and >= 0, got {delta_star}"));
    }
    if n == 0 {
        return Err(Error::EmptySample);
    }
    Ok(())
}

/// Severity of the claim `δ > δ*` given the observed `δ̃`.
pub fn severity_of_rejection(
    tilde_delta_obs: f64,
    delta_star: f64,
    n: u64,
    system: DigitSystem,
) -> Result<SeverityResult> {
    check_severity_args(tilde_delta_obs, delta_star, n)?;
    let ncp = noncentrality(system, n, delta_star);
    Ok(SeverityResult {
        test: TestKind::ExcessMad,
        claim: Claim::DiscrepancyExceeds,
        delta_star,
        noncentrality: ncp,
        severity: generic_normal_severity(tilde_delta_obs, ncp),
    })
}

/// Severity of the claim `δ ≤ δ*` given the observed `δ̃`.
///
/// Mirror of [`severity_of_rejection`]: the probability that the statistic
/// would have come out larger than observed were `δ = δ*`.
pub fn severity_of_acceptance(
    tilde_delta_obs: f64,
    delta_star: f64,
    n: u64,
    system: DigitSystem,
) -> Result<SeverityResult> {
    check_severity_args(tilde_delta_obs, delta_star, n)?;
    let ncp = noncentrality(system, n, delta_star);
    Ok(SeverityResult {
        test: TestKind::ExcessMad,
        claim: Claim::DiscrepancyAtMost,
        delta_star,
        noncentrality: ncp,
        severity: std_normal_sf(tilde_delta_obs - ncp),
    })
}

/// Severity of the claim `ψ > ψ*` for an observed Pearson statistic, using
/// the noncentral chi-square law with `k - 1` degrees of freedom.
pub fn chi_square_severity(x_obs: f64, psi_star: f64, system: DigitSystem) -> Result<SeverityResult> {
    if !(x_obs >= 0.0) {
        return domain(format!("chi-square statistic must be >= 0, got {x_obs}"));
    }
    if !(psi_star >= 0.0) {
        return domain(format!("ψ* must be >= 0, got {psi_star}"));
    }
    let df = (system.k() - 1) as u32;
    Ok(SeverityResult {
        test: TestKind::ChiSquare,
        claim: Claim::DiscrepancyExceeds,
        delta_star: psi_star,
        noncentrality: psi_star,
        severity: noncentral_chi2_cdf(x_obs, df, psi_star)?,
    })
}

/// Smallest `n` whose smallest expected digit count `n·min(b)` reaches
/// `min_expected`.
pub fn n_min_for(system: DigitSystem, min_expected: f64) -> Result<u64> {
    if !(min_expected > 0.0) || !min_expected.is_finite() {
        return domain(format!("minimum expected count must be > 0, got {min_expected}"));
    }
    let b_min = benford_probs(system).min();
    let mut n = (min_expected / b_min).ceil() as u64;
    while n > 1 && (n - 1) as f64 * b_min >= min_expected {
        n -= 1;
    }
    while (n as f64) * b_min < min_expected {
        n += 1;
    }
    Ok(n)
}

/// Inputs to the discrepancy-benchmark calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub system: DigitSystem,
    /// MAD threshold `t_k` regarded as the edge of close conformity.
    pub threshold: f64,
    pub n_min: u64,
    pub n_max: u64,
    /// Expected-count floor `n_min` was derived from, kept for reporting.
    pub min_expected: f64,
}

impl CalibrationConfig {
    /// Close-conformity threshold over `[n_min(5), 25 000]`.
    pub fn default_for(system: DigitSystem) -> Self {
        CalibrationConfig {
            system,
            threshold: close_conformity_threshold(system),
            n_min: n_min_for(system, DEFAULT_MIN_EXPECTED).expect("positive default"),
            n_max: DEFAULT_N_MAX,
            min_expected: DEFAULT_MIN_EXPECTED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!("threshold must be > 0, got {}", self.threshold)));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(Error::Config(format!(
                "need 1 <= n_min <= n_max, got n_min = {}, n_max = {}",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }
}

/// Average of `t_k - E(MAD_n)` over every integer `n` in `[n_min, n_max]`.
///
/// A negative value means the threshold sits below the average null
/// expectation of the MAD over the range; callers should warn about it.
pub fn delta_star(config: &CalibrationConfig) -> Result<f64> {
    config.validate()?;
    let total: f64 = (config.n_min..=config.n_max)
        .map(|n| config.threshold - mad_moments(config.system, n).mean)
        .sum();
    Ok(total / (config.n_max - config.n_min + 1) as f64)
}
