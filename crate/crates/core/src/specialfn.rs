//! Special functions: the standard normal CDF and quantile, the regularized
//! incomplete gamma function, and central/noncentral chi-square CDFs.
//!
//! Everything is plain `f64`. Tail probabilities are computed in
//! complementary form so that values such as `Φ(-8)` keep full relative
//! precision instead of collapsing to `0` through `1 - Φ(8)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

const MAX_GAMMA_ITER: usize = 100_000;
const GAMMA_EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// Poisson tail mass left out of the noncentral chi-square mixture, per side.
const MIXTURE_TAIL: f64 = 1e-13;

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub const ZERO: Probability = Probability(0.0);
    pub const ONE: Probability = Probability(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            domain(format!("probability {value} outside [0, 1]"))
        }
    }

    /// Clamps rounding spill-over (e.g. `1.0000000000000002`) back into range.
    pub(crate) fn saturating(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        Probability(value.clamp(0.0, 1.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn complement(self) -> Self {
        Probability(1.0 - self.0)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Standard normal CDF `Φ(x)`.
///
/// Uses `erfc` on both sides of zero so the lower tail is never formed by
/// cancellation. Saturates to 0/1 for infinite arguments.
pub fn std_normal_cdf(x: f64) -> Probability {
    Probability::saturating(0.5 * libm::erfc(-x * FRAC_1_SQRT_2))
}

/// Upper tail `1 - Φ(x)`, computed directly.
pub fn std_normal_sf(x: f64) -> Probability {
    Probability::saturating(0.5 * libm::erfc(x * FRAC_1_SQRT_2))
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`std_normal_cdf`] for `p` in the open unit interval.
///
/// A rational starting point (Abramowitz & Stegun 26.2.23, error < 4.5e-4)
/// is polished with Halley steps on the upper-tail function, so accuracy is
/// limited only by `erfc`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("normal quantile needs 0 < p < 1, got {p}"));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Solve sf(x) = q on the positive half line, then restore the sign.
    let (q, sign) = if p > 0.5 { (1.0 - p, 1.0) } else { (p, -1.0) };

    let t = (-2.0 * q.ln()).sqrt();
    let mut x = t
        - (2.515517 + 0.802853 * t + 0.010328 * t * t)
            / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);

    for _ in 0..50 {
        let f = std_normal_sf(x).get() - q;
        let r = f / std_normal_pdf(x);
        let step = r / (1.0 - 0.5 * x * r);
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(sign * x)
}

/// Regularized lower incomplete gamma `P(s, x) = γ(s, x) / Γ(s)`.
pub fn regularized_lower_gamma(s: f64, x: f64) -> Result<Probability> {
    check_gamma_args(s, x)?;
    if x == 0.0 {
        return Ok(Probability::ZERO);
    }
    if x.is_infinite() {
        return Ok(Probability::ONE);
    }
    let p = if x < s + 1.0 {
        gamma_series(s, x)
    } else {
        1.0 - gamma_continued_fraction(s, x)
    };
    Ok(Probability::saturating(p))
}

/// Regularized upper incomplete gamma `Q(s, x) = 1 - P(s, x)`.
pub fn regularized_upper_gamma(s: f64, x: f64) -> Result<Probability> {
    check_gamma_args(s, x)?;
    if x == 0.0 {
        return Ok(Probability::ONE);
    }
    if x.is_infinite() {
        return Ok(Probability::ZERO);
    }
    let q = if x < s + 1.0 {
        1.0 - gamma_series(s, x)
    } else {
        gamma_continued_fraction(s, x)
    };
    Ok(Probability::saturating(q))
}

fn check_gamma_args(s: f64, x: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return domain(format!("incomplete gamma needs finite s > 0, got {s}"));
    }
    if !(x >= 0.0) {
        return domain(format!("incomplete gamma needs x >= 0, got {x}"));
    }
    Ok(())
}

/// `exp(-x + s ln x - lnΓ(s))`, the common prefactor of both expansions.
fn gamma_prefactor(s: f64, x: f64) -> f64 {
    (-x + s * x.ln() - libm::lgamma(s)).exp()
}

// P(s, x) = e^{-x} x^s / Γ(s+1) · Σ_n x^n / ((s+1)…(s+n)); converges for all
// x but quickly only when x < s + 1.
fn gamma_series(s: f64, x: f64) -> f64 {
    let mut ap = s;
    let mut term = 1.0 / s;
    let mut sum = term;
    for _ in 0..MAX_GAMMA_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    sum * gamma_prefactor(s, x)
}

// Q(s, x) by the Legendre continued fraction, evaluated with modified Lentz.
fn gamma_continued_fraction(s: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - s;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=MAX_GAMMA_ITER {
        let an = -(i as f64) * (i as f64 - s);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    gamma_prefactor(s, x) * h
}

fn check_df(df: u32) -> Result<()> {
    if df == 0 {
        return domain("chi-square degrees of freedom must be positive");
    }
    Ok(())
}

/// CDF of the central chi-square distribution with `df` degrees of freedom.
pub fn central_chi2_cdf(x: f64, df: u32) -> Result<Probability> {
    check_df(df)?;
    if !(x >= 0.0) {
        return domain(format!("chi-square CDF needs x >= 0, got {x}"));
    }
    regularized_lower_gamma(df as f64 / 2.0, x / 2.0)
}

/// Upper tail of the central chi-square distribution (the usual p-value).
pub fn central_chi2_sf(x: f64, df: u32) -> Result<Probability> {
    check_df(df)?;
    if !(x >= 0.0) {
        return domain(format!("chi-square survival needs x >= 0, got {x}"));
    }
    regularized_upper_gamma(df as f64 / 2.0, x / 2.0)
}

/// CDF of the noncentral chi-square distribution with noncentrality `lambda`.
///
/// Evaluated as the Poisson(λ/2) mixture of central chi-square CDFs with
/// `df + 2j` degrees of freedom. Summation starts at the modal index
/// `⌊λ/2⌋` and walks outward in both directions, so the first weight is the
/// largest and nothing underflows for large λ. Each direction stops once a
/// geometric bound on its remaining Poisson mass drops below 1e-13.
pub fn noncentral_chi2_cdf(x: f64, df: u32, lambda: f64) -> Result<Probability> {
    check_df(df)?;
    if !(x >= 0.0) {
        return domain(format!("noncentral chi-square CDF needs x >= 0, got {x}"));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return domain(format!("noncentrality must be finite and >= 0, got {lambda}"));
    }
    if lambda == 0.0 {
        return central_chi2_cdf(x, df);
    }
    if x == 0.0 {
        return Ok(Probability::ZERO);
    }

    let mu = lambda / 2.0;
    let half_x = x / 2.0;
    let half_df = df as f64 / 2.0;
    let mode = mu.floor();
    let w_mode = (-mu + mode * mu.ln() - libm::lgamma(mode + 1.0)).exp();

    let term = |j: f64, w: f64| -> Result<f64> {
        Ok(w * regularized_lower_gamma(half_df + j, half_x)?.get())
    };

    let mut total = term(mode, w_mode)?;

    // Upward: w_{j+1} = w_j μ / (j + 1). Past the mode the ratio is < 1, so
    // Σ_{i>j} w_i ≤ w_{j+1} / (1 - μ / (j + 2)).
    let mut j = mode;
    let mut w = w_mode;
    loop {
        w *= mu / (j + 1.0);
        j += 1.0;
        total += term(j, w)?;
        let ratio = mu / (j + 1.0);
        if w * ratio / (1.0 - ratio) < MIXTURE_TAIL {
            break;
        }
    }

    // Downward: w_{j-1} = w_j j / μ, bounded the same way below the mode.
    let mut j = mode;
    let mut w = w_mode;
    while j > 0.0 {
        w *= j / mu;
        j -= 1.0;
        total += term(j, w)?;
        let ratio = j / mu;
        if j == 0.0 || w * ratio / (1.0 - ratio) < MIXTURE_TAIL {
            break;
        }
    }

    Ok(Probability::saturating(total))
}
