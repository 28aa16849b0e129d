//! Drift, scale, and skew estimation from a log-price history.
//!
//! The scale comes from the realized variance of return increments. The
//! drift and skew come from an ensemble search: each candidate pair drives
//! its own skew walk, the walk's return curve is scored against the observed
//! cumulative returns, and the best candidate wins. A rolling variant
//! repeats the fit over a sliding window and median-smooths the estimates;
//! an index variant maps the smoothed skew weight to a skew parameter.
//! A constrained least-squares fit recovers drift and scale when the skew
//! parameter is supplied externally.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::market_data::{compute_returns, PriceSeries, DEFAULT_DT};
use crate::numerics::{mean, percentile, sample_variance};
use crate::skew_stats::SkewParams;
use crate::skew_walk::{generate_srw, srw_values_with_rng};

/// Minimum return count for a realized-variance scale estimate.
pub const MIN_RETURNS_FOR_SIGMA: usize = 30;

/// Minimum candidate count for the ensemble search.
pub const MIN_ENSEMBLE_SIZE: usize = 1000;

/// Spot price used by synthetic fixtures; fits depend only on returns.
const FIXTURE_S0: f64 = 100.0;

/// Admissible (mu, alpha) region for the ensemble search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchDomain {
    pub mu_min: f64,
    pub mu_max: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for SearchDomain {
    /// Drift in [-0.5, 0.5], skew weight in [0.45, 0.65].
    fn default() -> Self {
        Self { mu_min: -0.5, mu_max: 0.5, alpha_min: 0.45, alpha_max: 0.65 }
    }
}

impl SearchDomain {
    pub fn new(mu_min: f64, mu_max: f64, alpha_min: f64, alpha_max: f64) -> Result<Self> {
        let domain = Self { mu_min, mu_max, alpha_min, alpha_max };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = [self.mu_min, self.mu_max, self.alpha_min, self.alpha_max];
        if bounds.iter().any(|b| !b.is_finite()) {
            return Err(Error::invalid_input("search domain bounds must be finite"));
        }
        if self.mu_min >= self.mu_max || self.alpha_min >= self.alpha_max {
            return Err(Error::invalid_input(
                "search domain bounds must satisfy min < max",
            ));
        }
        if self.alpha_min < 0.0 || self.alpha_max > 1.0 {
            return Err(Error::invalid_input("alpha bounds must lie within [0, 1]"));
        }
        Ok(())
    }

    pub fn contains(&self, mu: f64, alpha: f64) -> bool {
        mu >= self.mu_min && mu <= self.mu_max && alpha >= self.alpha_min && alpha <= self.alpha_max
    }
}

/// Output of a single-window fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    /// Scale estimate from realized variance.
    pub sigma_star: f64,
    /// Winning drift candidate.
    pub mu_star: f64,
    /// Winning skew-weight candidate.
    pub alpha_star: f64,
    /// Mean squared tracking error of the winning candidate.
    pub mse: f64,
    /// Region the candidates were drawn from.
    pub search_domain: SearchDomain,
    /// Number of candidates evaluated.
    pub ensemble_size: usize,
    /// Master seed for the candidate walks.
    pub seed: u64,
}

/// One evaluated candidate of an ensemble fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateFit {
    pub mu: f64,
    pub alpha: f64,
    pub mse: f64,
}

/// Full candidate table and advisory notes from a detailed fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDiagnostics {
    /// Every candidate in evaluation order.
    pub candidates: Vec<CandidateFit>,
    /// Boundary-proximity notes; an empty list means the winner sat
    /// comfortably inside the domain.
    pub warnings: Vec<String>,
}

/// One window's estimates in a rolling calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFit {
    /// Window end date.
    pub date: String,
    pub sigma_hat: f64,
    pub mu_hat: f64,
    pub alpha_hat: f64,
    pub mse: f64,
}

/// Per-date estimates over a sliding window, with median-smoothed drift and
/// skew series aligned to the fits.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingCalibration {
    window: usize,
    median_window: usize,
    fits: Vec<WindowFit>,
    mu_med: Vec<f64>,
    alpha_med: Vec<f64>,
}

impl RollingCalibration {
    pub fn new(
        window: usize,
        median_window: usize,
        fits: Vec<WindowFit>,
        mu_med: Vec<f64>,
        alpha_med: Vec<f64>,
    ) -> Result<Self> {
        if window == 0 || median_window == 0 {
            return Err(Error::invalid_input("window sizes must be at least 1"));
        }
        if fits.len() != mu_med.len() || fits.len() != alpha_med.len() {
            return Err(Error::invalid_input(format!(
                "smoothed series must align with fits: {} fits, {} mu_med, {} alpha_med",
                fits.len(),
                mu_med.len(),
                alpha_med.len()
            )));
        }
        Ok(Self { window, median_window, fits, mu_med, alpha_med })
    }

    /// Fit window length in prices.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Median smoothing span in windows.
    pub fn median_window(&self) -> usize {
        self.median_window
    }

    pub fn fits(&self) -> &[WindowFit] {
        &self.fits
    }

    /// Median-smoothed drift series, one entry per fit.
    pub fn mu_med(&self) -> &[f64] {
        &self.mu_med
    }

    /// Median-smoothed skew-weight series, one entry per fit.
    pub fn alpha_med(&self) -> &[f64] {
        &self.alpha_med
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }
}

/// Price-level fit quality against a reference series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitQuality {
    pub r_squared: f64,
    pub rmse: f64,
}

/// Drift and scale recovered at a fixed skew parameter, with fit quality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstrainedFit {
    pub mu_hat: f64,
    /// None when delta = 0 removes the scale regressor.
    pub sigma_hat: Option<f64>,
    pub r_squared: f64,
    pub rmse: f64,
}

/// A synthetic price history with its generating parameters attached.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFixture {
    pub series: PriceSeries,
    /// The driving walk, one state per price.
    pub chain: Vec<i64>,
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub seed: u64,
}

fn realized_sigma(increments: &[f64], dt: f64) -> f64 {
    (sample_variance(increments) / dt).sqrt()
}

/// Scale estimate: square root of the annualized realized return variance.
///
/// Non-positive prices cannot occur (the series type rejects them); the
/// only failure is a series with fewer than [`MIN_RETURNS_FOR_SIGMA`]
/// return increments.
pub fn estimate_sigma(series: &PriceSeries) -> Result<f64> {
    let (_, increments) = compute_returns(series);
    if increments.len() < MIN_RETURNS_FOR_SIGMA {
        return Err(Error::invalid_input(format!(
            "{} returns available, need at least {MIN_RETURNS_FOR_SIGMA} for a scale estimate",
            increments.len()
        )));
    }
    Ok(realized_sigma(&increments, series.dt()))
}

fn candidate_rng(seed: u64, candidate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(candidate);
    rng
}

/// Jittered position of `candidate` in a `grid` x `grid` stratification of
/// the domain, mu-major.
fn candidate_params(
    domain: &SearchDomain,
    grid: usize,
    candidate: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, f64) {
    let i = candidate / grid;
    let j = candidate % grid;
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    let mu = domain.mu_min + (i as f64 + u) / grid as f64 * (domain.mu_max - domain.mu_min);
    let alpha =
        domain.alpha_min + (j as f64 + v) / grid as f64 * (domain.alpha_max - domain.alpha_min);
    (mu, alpha)
}

/// Mean squared gap between observed cumulative returns and the candidate's
/// walk-driven return curve.
fn candidate_mse(
    r_emp: &[f64],
    sigma: f64,
    dt: f64,
    mu: f64,
    alpha: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let params = SkewParams::from_alpha(alpha).expect("alpha validated with the domain");
    let walk = srw_values_with_rng(r_emp.len(), &params, rng);
    let drift = (mu - 0.5 * sigma * sigma) * dt;
    let scale = sigma * dt.sqrt();
    let mut sse = 0.0;
    for (idx, &r) in r_emp.iter().enumerate() {
        let diff = r - (drift * (idx + 1) as f64 + scale * walk[idx + 1] as f64);
        sse += diff * diff;
    }
    sse / r_emp.len() as f64
}

/// Ensemble search for the drift and skew weight, returning the candidate
/// table alongside the winner.
///
/// Candidates stratify the domain on a jittered grid; each owns an rng
/// stream indexed by its position, so the result is deterministic for a
/// given seed regardless of thread count. Ties break toward the lower
/// candidate index. Warnings flag a winner within one grid step of the
/// domain boundary, where the search should be rerun on a wider domain.
pub fn fit_mu_alpha_detailed(
    series: &PriceSeries,
    sigma_star: f64,
    domain: SearchDomain,
    ensemble_size: usize,
    seed: u64,
) -> Result<(CalibrationResult, FitDiagnostics)> {
    domain.validate()?;
    if !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return Err(Error::invalid_input(format!(
            "sigma_star {sigma_star} must be positive"
        )));
    }
    if ensemble_size < MIN_ENSEMBLE_SIZE {
        return Err(Error::invalid_input(format!(
            "ensemble size {ensemble_size} below the minimum {MIN_ENSEMBLE_SIZE}"
        )));
    }

    let (r_emp, _) = compute_returns(series);
    let dt = series.dt();
    let grid = (ensemble_size as f64).sqrt().ceil() as usize;
    let candidates: Vec<CandidateFit> = (0..ensemble_size)
        .into_par_iter()
        .map(|c| {
            let mut rng = candidate_rng(seed, c as u64);
            let (mu, alpha) = candidate_params(&domain, grid, c, &mut rng);
            let mse = candidate_mse(&r_emp, sigma_star, dt, mu, alpha, &mut rng);
            CandidateFit { mu, alpha, mse }
        })
        .collect();

    let best = *candidates
        .iter()
        .min_by(|a, b| a.mse.total_cmp(&b.mse))
        .expect("ensemble is nonempty");

    let mut warnings = Vec::new();
    let mu_step = (domain.mu_max - domain.mu_min) / grid as f64;
    let alpha_step = (domain.alpha_max - domain.alpha_min) / grid as f64;
    if best.alpha < domain.alpha_min + alpha_step || best.alpha > domain.alpha_max - alpha_step {
        warnings.push(format!(
            "alpha_star {} is within one grid step of the search boundary; widen the domain and refit",
            best.alpha
        ));
    }
    if best.mu < domain.mu_min + mu_step || best.mu > domain.mu_max - mu_step {
        warnings.push(format!(
            "mu_star {} is within one grid step of the search boundary; widen the domain and refit",
            best.mu
        ));
    }

    let result = CalibrationResult {
        sigma_star,
        mu_star: best.mu,
        alpha_star: best.alpha,
        mse: best.mse,
        search_domain: domain,
        ensemble_size,
        seed,
    };
    Ok((result, FitDiagnostics { candidates, warnings }))
}

/// Ensemble search returning only the winning candidate.
pub fn fit_mu_alpha(
    series: &PriceSeries,
    sigma_star: f64,
    domain: SearchDomain,
    ensemble_size: usize,
    seed: u64,
) -> Result<CalibrationResult> {
    fit_mu_alpha_detailed(series, sigma_star, domain, ensemble_size, seed)
        .map(|(result, _)| result)
}

fn sign0(v: f64) -> i64 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Sign-quantized walk states implied by a return series under the given
/// drift and scale. A zero-valued standardized increment contributes a flat
/// step, so the result may break walk parity; it is an estimate, not a
/// sampled walk.
pub fn reconstruct_chain(series: &PriceSeries, mu_hat: f64, sigma_hat: f64) -> Result<Vec<i64>> {
    if sigma_hat == 0.0 || !sigma_hat.is_finite() || !mu_hat.is_finite() {
        return Err(Error::invalid_input(
            "chain reconstruction needs finite parameters and nonzero sigma_hat",
        ));
    }
    let (_, increments) = compute_returns(series);
    let dt = series.dt();
    let drift = (mu_hat - 0.5 * sigma_hat * sigma_hat) * dt;
    let scale = sigma_hat * dt.sqrt();
    let mut chain = Vec::with_capacity(increments.len() + 1);
    let mut m = 0i64;
    chain.push(m);
    for &r in &increments {
        m += sign0((r - drift) / scale);
        chain.push(m);
    }
    Ok(chain)
}

fn index_dates(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("t{i:06}")).collect()
}

fn fit_quality(fitted: &[f64], reference: &[f64]) -> FitQuality {
    let ref_mean = mean(reference);
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (f, r) in fitted.iter().zip(reference) {
        ss_res += (f - r) * (f - r);
        ss_tot += (r - ref_mean) * (r - ref_mean);
    }
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NAN
    };
    FitQuality { r_squared, rmse: (ss_res / fitted.len() as f64).sqrt() }
}

/// Price path implied by a walk chain under the given drift and scale.
///
/// Steps compound as S_k = S_{k-1} exp(drift dt + scale sqrt(dt) (M_k -
/// M_{k-1})). When a reference series of equal length is supplied, price-
/// level R-squared (centered) and RMSE are reported against it.
pub fn rebuild_price_path(
    chain: &[i64],
    mu_hat: f64,
    sigma_hat: f64,
    s0: f64,
    dt: f64,
    reference: Option<&PriceSeries>,
) -> Result<(PriceSeries, Option<FitQuality>)> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(Error::invalid_input(format!("spot {s0} must be positive")));
    }
    if !mu_hat.is_finite() || !sigma_hat.is_finite() {
        return Err(Error::invalid_input("parameters must be finite"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid_input(format!("step size {dt} must be positive")));
    }
    if chain.len() < 2 {
        return Err(Error::invalid_input("chain needs at least two states"));
    }

    let drift = (mu_hat - 0.5 * sigma_hat * sigma_hat) * dt;
    let scale = sigma_hat * dt.sqrt();
    let mut prices = Vec::with_capacity(chain.len());
    prices.push(s0);
    for pair in chain.windows(2) {
        let step = drift + scale * (pair[1] - pair[0]) as f64;
        let previous = *prices.last().expect("seeded with s0");
        prices.push(previous * step.exp());
    }
    let series = PriceSeries::with_dt(index_dates(chain.len()), prices, dt)?;

    let quality = match reference {
        None => None,
        Some(reference) => {
            if reference.len() != series.len() {
                return Err(Error::invalid_input(format!(
                    "reference length {} does not match rebuilt length {}",
                    reference.len(),
                    series.len()
                )));
            }
            Some(fit_quality(series.prices(), reference.prices()))
        }
    };
    Ok((series, quality))
}

fn log_increments(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
}

/// Median over the trailing `span` entries at each position.
fn trailing_median(values: &[f64], span: usize) -> Vec<f64> {
    (0..values.len())
        .map(|j| {
            let lo = (j + 1).saturating_sub(span);
            let mut window: Vec<f64> = values[lo..=j].to_vec();
            window.sort_by(f64::total_cmp);
            percentile(&window, 50.0)
        })
        .collect()
}

/// Sliding-window calibration over a price history.
///
/// Each window of `window` prices gets a realized-variance scale; the fit
/// for a window uses the trailing average of those scales (the realized
/// average over the window) and a window-indexed seed, so results are
/// deterministic regardless of thread count. Windows whose averaged scale
/// is not positive, or whose fit fails, are skipped and leave a date gap
/// rather than aborting the sweep. Drift and skew series are smoothed with
/// a trailing median over `median_window` surviving fits.
pub fn rolling_calibration(
    series: &PriceSeries,
    window: usize,
    median_window: usize,
    domain: SearchDomain,
    ensemble_size: usize,
    seed: u64,
) -> Result<RollingCalibration> {
    domain.validate()?;
    if median_window == 0 {
        return Err(Error::invalid_input("median window must be at least 1"));
    }
    if window < MIN_RETURNS_FOR_SIGMA + 1 {
        return Err(Error::invalid_input(format!(
            "window {window} too short: need at least {} prices",
            MIN_RETURNS_FOR_SIGMA + 1
        )));
    }
    if series.len() <= window {
        return Err(Error::invalid_input(format!(
            "series length {} does not exceed the window {window}",
            series.len()
        )));
    }

    let prices = series.prices();
    let dt = series.dt();
    let n_windows = series.len() - window + 1;
    let sigmas: Vec<f64> = (0..n_windows)
        .map(|e| realized_sigma(&log_increments(&prices[e..e + window]), dt))
        .collect();

    let fits: Vec<Option<WindowFit>> = (0..n_windows)
        .into_par_iter()
        .map(|e| {
            let lo = e.saturating_sub(window - 1);
            let sigma_star = mean(&sigmas[lo..=e]);
            if !(sigma_star > 0.0) {
                return None;
            }
            let window_dates = series.dates()[e..e + window].to_vec();
            let window_prices = prices[e..e + window].to_vec();
            let sub = PriceSeries::with_dt(window_dates, window_prices, dt)
                .expect("window of a valid series is valid");
            let window_seed = seed.wrapping_add((e as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            fit_mu_alpha(&sub, sigma_star, domain, ensemble_size, window_seed)
                .ok()
                .map(|fit| WindowFit {
                    date: series.dates()[e + window - 1].clone(),
                    sigma_hat: sigmas[e],
                    mu_hat: fit.mu_star,
                    alpha_hat: fit.alpha_star,
                    mse: fit.mse,
                })
        })
        .collect();

    let kept: Vec<WindowFit> = fits.into_iter().flatten().collect();
    let mu_series: Vec<f64> = kept.iter().map(|f| f.mu_hat).collect();
    let alpha_series: Vec<f64> = kept.iter().map(|f| f.alpha_hat).collect();
    let mu_med = trailing_median(&mu_series, median_window);
    let alpha_med = trailing_median(&alpha_series, median_window);
    RollingCalibration::new(window, median_window, kept, mu_med, alpha_med)
}

/// Skew-parameter series implied by an index history: the rolling fit is
/// run with the skew weight restricted to `alpha_bounds`, and each smoothed
/// weight maps to `2 alpha - 1`. Bounds of [0.45, 0.55] therefore pin the
/// result to [-0.1, 0.1].
pub fn estimate_delta_from_index(
    series: &PriceSeries,
    window: usize,
    median_window: usize,
    alpha_bounds: (f64, f64),
    ensemble_size: usize,
    seed: u64,
) -> Result<Vec<(String, f64)>> {
    let default = SearchDomain::default();
    let domain = SearchDomain::new(default.mu_min, default.mu_max, alpha_bounds.0, alpha_bounds.1)?;
    let rolling =
        rolling_calibration(series, window, median_window, domain, ensemble_size, seed)?;
    Ok(rolling
        .fits()
        .iter()
        .zip(rolling.alpha_med())
        .map(|(fit, &alpha)| (fit.date.clone(), 2.0 * alpha - 1.0))
        .collect())
}

/// Least squares for drift and scale at a fixed skew parameter.
///
/// Cumulative returns regress without intercept on k dt and
/// delta sqrt(2 k dt / pi). At delta = 0 the second regressor vanishes,
/// only the drift is fit, and the scale is reported as undetermined.
/// R-squared is centered; RMSE is on the return scale.
pub fn fit_mu_sigma_given_delta(series: &PriceSeries, delta: f64) -> Result<ConstrainedFit> {
    if !(delta.is_finite() && delta.abs() < 1.0) {
        return Err(Error::invalid_input(format!("delta {delta} outside (-1, 1)")));
    }
    let (r_emp, _) = compute_returns(series);
    let dt = series.dt();
    let n = r_emp.len();

    let x1: Vec<f64> = (1..=n).map(|k| k as f64 * dt).collect();
    if delta == 0.0 {
        let s11: f64 = x1.iter().map(|a| a * a).sum();
        let sy1: f64 = x1.iter().zip(&r_emp).map(|(a, r)| a * r).sum();
        let mu_hat = sy1 / s11;
        let residuals: Vec<f64> =
            r_emp.iter().zip(&x1).map(|(r, a)| r - mu_hat * a).collect();
        let quality = residual_quality(&residuals, &r_emp);
        return Ok(ConstrainedFit {
            mu_hat,
            sigma_hat: None,
            r_squared: quality.r_squared,
            rmse: quality.rmse,
        });
    }

    let x2: Vec<f64> = (1..=n)
        .map(|k| delta * (2.0 * k as f64 * dt / std::f64::consts::PI).sqrt())
        .collect();
    let mut s11 = 0.0;
    let mut s12 = 0.0;
    let mut s22 = 0.0;
    let mut sy1 = 0.0;
    let mut sy2 = 0.0;
    for ((a, b), r) in x1.iter().zip(&x2).zip(&r_emp) {
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        sy1 += a * r;
        sy2 += b * r;
    }
    let det = s11 * s22 - s12 * s12;
    let scale = (s11 * s22).max(f64::MIN_POSITIVE);
    if det.abs() <= 1e-12 * scale {
        return Err(Error::invalid_input(
            "regressors are collinear; need at least two returns to identify both coefficients",
        ));
    }
    let mu_hat = (sy1 * s22 - sy2 * s12) / det;
    let sigma_hat = (s11 * sy2 - s12 * sy1) / det;
    let residuals: Vec<f64> = r_emp
        .iter()
        .zip(x1.iter().zip(&x2))
        .map(|(r, (a, b))| r - mu_hat * a - sigma_hat * b)
        .collect();
    let quality = residual_quality(&residuals, &r_emp);
    Ok(ConstrainedFit {
        mu_hat,
        sigma_hat: Some(sigma_hat),
        r_squared: quality.r_squared,
        rmse: quality.rmse,
    })
}

fn residual_quality(residuals: &[f64], observed: &[f64]) -> FitQuality {
    let obs_mean = mean(observed);
    let ss_res: f64 = residuals.iter().map(|e| e * e).sum();
    let ss_tot: f64 = observed.iter().map(|r| (r - obs_mean) * (r - obs_mean)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        f64::NAN
    };
    FitQuality { r_squared, rmse: (ss_res / residuals.len() as f64).sqrt() }
}

/// Geometric skew-walk price history with known parameters.
///
/// `n` counts prices; the driving walk takes `n - 1` steps. Prices follow
/// S_k = 100 exp((mu - sigma^2/2) k dt + sigma sqrt(dt) M_k) at the default
/// daily spacing, and the same seed reproduces the series bit for bit.
pub fn synthetic_fixture(
    mu: f64,
    sigma: f64,
    alpha: f64,
    n: usize,
    seed: u64,
) -> Result<SyntheticFixture> {
    if !mu.is_finite() {
        return Err(Error::invalid_input("mu must be finite"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid_input(format!("sigma {sigma} must be positive")));
    }
    if n < 2 {
        return Err(Error::invalid_input("need at least two prices"));
    }
    let params = SkewParams::from_alpha(alpha)?;
    let dt = DEFAULT_DT;
    let walk = generate_srw(n - 1, &params, seed);
    let drift = (mu - 0.5 * sigma * sigma) * dt;
    let scale = sigma * dt.sqrt();
    let prices: Vec<f64> = walk
        .values()
        .iter()
        .enumerate()
        .map(|(k, &m)| FIXTURE_S0 * (drift * k as f64 + scale * m as f64).exp())
        .collect();
    let series = PriceSeries::with_dt(index_dates(n), prices, dt)?;
    Ok(SyntheticFixture {
        series,
        chain: walk.values().to_vec(),
        mu,
        sigma,
        alpha,
        seed,
    })
}
