//! Skew-normal and skew-Brownian-motion statistics and samplers.
//!
//! Three equivalent skewness parameterizations are used throughout:
//!
//! ```text
//! alpha = (1 + delta) / 2        alpha in [0, 1]
//! lambda = delta / sqrt(1 - delta^2)
//! ```
//!
//! The skew normal density with shape `lambda` is `2 phi(z) Phi(lambda z)`.
//! The skew Brownian marginal at time `t` has the two-piece density
//!
//! ```text
//! f_t(x) = w(x) * sqrt(2 / (pi t)) * exp(-x^2 / (2t)),
//! w(x) = alpha for x >= 0, 1 - alpha for x < 0,
//! ```
//!
//! whose mass on `[0, inf)` is exactly `alpha`. Its mean and variance are
//! `mu_1 sqrt(t)` and `t (1 - mu_1^2)` with `mu_1 = (2 alpha - 1) sqrt(2/pi)`;
//! skewness and excess kurtosis are time-invariant:
//!
//! ```text
//! skew = (2 mu_1^2 - 1) mu_1 / (1 - mu_1^2)^(3/2)
//! exkurt = 2 mu_1^2 (2 - 3 mu_1^2) / (1 - mu_1^2)^2
//! ```
//!
//! The skew-path process driven by two independent Brownian motions,
//! `A_t = sqrt(1 - delta^2) B1_t + delta |B2_t|`, has `sqrt(t) Z(lambda)`
//! (skew normal) marginals. Note that this is a different law from the
//! two-piece marginal above even though the first two moments agree; see
//! the KS tests at the bottom of this module.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{self, norm_cdf, norm_pdf};

/// The skewness parameter triple `(alpha, delta, lambda)`.
///
/// `delta` is the canonical stored form; `alpha` and `lambda` are exact
/// derived views. The closed interval `delta in [-1, 1]` is accepted so
/// the fully one-sided sampler limits are expressible; operations that
/// need an interior parameter validate separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewParams {
    delta: f64,
}

impl SkewParams {
    /// Builds the triple from `delta in [-1, 1]`.
    ///
    /// # Errors
    /// `Error::InvalidInput` if `delta` is not finite or out of range.
    pub fn from_delta(delta: f64) -> Result<Self> {
        if !delta.is_finite() || !(-1.0..=1.0).contains(&delta) {
            return Err(Error::invalid_input(format!(
                "delta must lie in [-1, 1], got {delta}"
            )));
        }
        Ok(SkewParams { delta })
    }

    /// Builds the triple from `alpha in [0, 1]` via `delta = 2 alpha - 1`.
    ///
    /// # Errors
    /// `Error::InvalidInput` if `alpha` is not finite or out of range.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid_input(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        SkewParams::from_delta(2.0 * alpha - 1.0)
    }

    /// Builds the triple from the shape `lambda` via
    /// `delta = lambda / sqrt(1 + lambda^2)`.
    ///
    /// # Errors
    /// `Error::InvalidInput` if `lambda` is NaN.
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if lambda.is_nan() {
            return Err(Error::invalid_input("lambda must not be NaN"));
        }
        if lambda.is_infinite() {
            return SkewParams::from_delta(lambda.signum());
        }
        SkewParams::from_delta(lambda / (1.0 + lambda * lambda).sqrt())
    }

    /// Probability weight of the nonnegative half-line, `(1 + delta) / 2`.
    pub fn alpha(&self) -> f64 {
        (1.0 + self.delta) / 2.0
    }

    /// Canonical skewness parameter in `[-1, 1]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Skew-normal shape `delta / sqrt(1 - delta^2)`; infinite at the
    /// endpoints `delta = +-1`.
    pub fn lambda(&self) -> f64 {
        if self.delta.abs() == 1.0 {
            return self.delta * f64::INFINITY;
        }
        self.delta / (1.0 - self.delta * self.delta).sqrt()
    }
}

/// Mean, variance, skewness, and excess kurtosis of the skew Brownian
/// marginal at a fixed time. Skewness and excess kurtosis do not depend
/// on the time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SbmMoments {
    /// `mu_1 sqrt(t)` with `mu_1 = (2 alpha - 1) sqrt(2/pi)`.
    pub mean: f64,
    /// `t (1 - mu_1^2)`.
    pub variance: f64,
    /// Time-invariant standardized third moment.
    pub skewness: f64,
    /// Time-invariant standardized fourth moment minus 3.
    pub excess_kurtosis: f64,
}

/// Skew normal density `2 phi(z) Phi(lambda z)`.
pub fn snd_pdf(z: f64, lambda: f64) -> f64 {
    2.0 * norm_pdf(z) * norm_cdf(lambda * z)
}

/// Skew normal CDF `Phi(z) - 2 T(z, lambda)` (Owen's T).
pub fn snd_cdf(z: f64, lambda: f64) -> f64 {
    norm_cdf(z) - 2.0 * numerics::owens_t(z, lambda)
}

/// Mean and variance of the skew normal law:
/// `(sqrt(2/pi) delta, 1 - (2/pi) delta^2)` with
/// `delta = lambda / sqrt(1 + lambda^2)`.
pub fn snd_moments(lambda: f64) -> (f64, f64) {
    let delta = lambda / (1.0 + lambda * lambda).sqrt();
    let mean = (2.0 / std::f64::consts::PI).sqrt() * delta;
    (mean, 1.0 - mean * mean)
}

/// Raw odd moment `E[Z(lambda)^(2k+1)]` of the skew normal law:
///
/// ```text
/// sqrt(2/pi) lambda (1 + lambda^2)^(-k - 1/2) 2^(-k) (2k+1)!
///   * sum_{j=0}^{k} j! (2 lambda)^(2j) / ((2j+1)! (k-j)!)
/// ```
///
/// `k = 0` reduces to the mean. Even raw moments coincide with the
/// standard normal ones; see [`normal_even_moment`].
pub fn snd_odd_moment(k: u32, lambda: f64) -> f64 {
    let lam2 = lambda * lambda;
    let mut sum = 0.0;
    for j in 0..=k {
        sum += factorial(j) * (4.0 * lam2).powi(j as i32)
            / (factorial(2 * j + 1) * factorial(k - j));
    }
    (2.0 / std::f64::consts::PI).sqrt()
        * lambda
        * (1.0 + lam2).powf(-(k as f64) - 0.5)
        * 0.5f64.powi(k as i32)
        * factorial(2 * k + 1)
        * sum
}

/// Raw even moment `E[Z(lambda)^(2k)] = E[N(0,1)^(2k)] = (2k - 1)!!`,
/// independent of the shape.
pub fn normal_even_moment(k: u32) -> f64 {
    let mut m = 1.0;
    let mut i = 1;
    while i < 2 * k {
        m *= (2 * k - i) as f64;
        i += 2;
    }
    m
}

/// Raw absolute moment `E[|N(0,1)|^p]`, via the recursion
/// `E|N|^p = (p - 1) E|N|^(p-2)` from `E|N|^0 = 1`, `E|N|^1 = sqrt(2/pi)`.
pub fn abs_normal_moment(p: u32) -> f64 {
    let mut m = if p % 2 == 0 {
        1.0
    } else {
        (2.0 / std::f64::consts::PI).sqrt()
    };
    let mut q = p % 2;
    while q < p {
        q += 2;
        m *= (q - 1) as f64;
    }
    m
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn validate_time(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid_input(format!(
            "time must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

/// Two-piece skew Brownian marginal density at time `t`.
///
/// # Errors
/// `Error::InvalidInput` if `t <= 0`.
pub fn sbm_pdf(x: f64, t: f64, params: &SkewParams) -> Result<f64> {
    validate_time(t)?;
    let alpha = params.alpha();
    let weight = if x >= 0.0 { alpha } else { 1.0 - alpha };
    Ok(weight * (2.0 / (std::f64::consts::PI * t)).sqrt() * (-x * x / (2.0 * t)).exp())
}

/// CDF of the two-piece skew Brownian marginal at time `t`.
///
/// # Errors
/// `Error::InvalidInput` if `t <= 0`.
pub fn sbm_cdf(x: f64, t: f64, params: &SkewParams) -> Result<f64> {
    validate_time(t)?;
    let alpha = params.alpha();
    let u = norm_cdf(x / t.sqrt());
    Ok(if x < 0.0 {
        2.0 * (1.0 - alpha) * u
    } else {
        (1.0 - alpha) + alpha * (2.0 * u - 1.0)
    })
}

/// Closed-form moments of the two-piece skew Brownian marginal.
///
/// # Errors
/// `Error::InvalidInput` if `t <= 0`.
pub fn sbm_moments(t: f64, params: &SkewParams) -> Result<SbmMoments> {
    validate_time(t)?;
    // 2 alpha - 1 = delta exactly.
    let mu1 = params.delta() * (2.0 / std::f64::consts::PI).sqrt();
    let m2 = mu1 * mu1;
    Ok(SbmMoments {
        mean: mu1 * t.sqrt(),
        variance: t * (1.0 - m2),
        skewness: (2.0 * m2 - 1.0) * mu1 / (1.0 - m2).powf(1.5),
        excess_kurtosis: 2.0 * m2 * (2.0 - 3.0 * m2) / ((1.0 - m2) * (1.0 - m2)),
    })
}

/// Raw moment `E[(B_t)^p]` of the two-piece marginal:
/// `E|N|^p [alpha + (-1)^p (1 - alpha)] t^(p/2)`.
///
/// # Errors
/// `Error::InvalidInput` if `t <= 0`.
pub fn sbm_raw_moment(p: u32, t: f64, params: &SkewParams) -> Result<f64> {
    validate_time(t)?;
    let alpha = params.alpha();
    let signed = if p % 2 == 0 { 1.0 } else { 2.0 * alpha - 1.0 };
    Ok(abs_normal_moment(p) * signed * t.powf(p as f64 / 2.0))
}

/// Draws one sample of the two-piece skew Brownian marginal at time `t`:
/// `|N(0, t)|` carrying sign `+` with probability `alpha`.
///
/// # Panics
/// If `t <= 0`.
pub fn sample_sbm_marginal<R: Rng + ?Sized>(t: f64, params: &SkewParams, rng: &mut R) -> f64 {
    assert!(t > 0.0, "time must be positive");
    let z: f64 = rng.sample(StandardNormal);
    let magnitude = t.sqrt() * z.abs();
    if rng.random::<f64>() < 1.0 - params.alpha() {
        -magnitude
    } else {
        magnitude
    }
}

/// Simulates the two-driver skew path process on `t_grid`:
/// `A_t = sqrt(1 - delta^2) B1_t + delta |B2_t|` with independent
/// Brownian motions `B1`, `B2`. The grid must start at 0 and be strictly
/// increasing; the returned sequence starts with `A_0 = 0`.
///
/// # Errors
/// `Error::InvalidInput` on an empty or non-monotone grid, a grid not
/// starting at 0, or `delta` outside `(-1, 1)`.
pub fn sample_ito_mckean_path<R: Rng + ?Sized>(
    t_grid: &[f64],
    delta: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !delta.is_finite() || delta.abs() >= 1.0 {
        return Err(Error::invalid_input(format!(
            "delta must lie in (-1, 1), got {delta}"
        )));
    }
    if t_grid.first() != Some(&0.0) {
        return Err(Error::invalid_input("time grid must start at 0"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid_input(
            "time grid must be strictly increasing",
        ));
    }
    let sym = (1.0 - delta * delta).sqrt();
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    let mut path = Vec::with_capacity(t_grid.len());
    path.push(0.0);
    for w in t_grid.windows(2) {
        let sd = (w[1] - w[0]).sqrt();
        let (z1, z2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        b1 += sd * z1;
        b2 += sd * z2;
        path.push(sym * b1 + delta * b2.abs());
    }
    Ok(path)
}
