//! Discrete skew random walks: generation, ensemble moment diagnostics,
//! zero-occurrence statistics, and the cadlag embedding.
//!
//! The walk starts at 0 and moves by +-1 each step; away from the origin
//! both directions have probability 1/2, while from the origin the
//! up-step has probability `alpha`:
//!
//! ```text
//! P(M_{k+1} = i + 1 | M_k = i) = 1/2 for i != 0, alpha for i = 0
//! ```
//!
//! Scaled by `sqrt(dt)` the walk converges weakly to the skew Brownian
//! motion with the same `alpha`, so ensemble moments are diagnosed
//! against the continuum reference curves
//!
//! ```text
//! E[M_k]  = mu_1 sqrt(k)              sd[M_k]  = sqrt((1 - mu_1^2) k)
//! E[dM_k] = mu_1 (sqrt(k) - sqrt(k-1))
//! sd[dM_k] = sqrt(1 - mu_1^2 (sqrt(k) - sqrt(k-1))^2)
//! ```
//!
//! with `mu_1 = delta sqrt(2/pi)`. Fit quality is reported as the root
//! mean square deviation between empirical and reference curves over all
//! steps.
//!
//! Ensembles are generated from one master seed with one counter-mode
//! stream per path, so results are identical across runs and thread
//! counts; all cross-path reductions are exact integer sums.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::percentile;
use crate::skew_stats::SkewParams;

/// Display truncation for zero-occurrence histograms, in percent.
const HISTOGRAM_TRUNCATION_PCT: f64 = 4.17;
/// Zero-occurrence histogram bin width, in percentage points.
const HISTOGRAM_BIN_WIDTH_PCT: f64 = 0.05;

/// One integer skew random walk trajectory `M_0 .. M_n` with `M_0 = 0`.
///
/// Invariants: every increment is +-1 and `M_k` has the parity of `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrwPath {
    values: Vec<i64>,
    alpha: f64,
    seed: u64,
}

impl SrwPath {
    /// The trajectory `M_0 .. M_n` (length `n + 1`).
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    /// Up-step probability at the origin.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Seed the path was generated from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of steps `n`.
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }
}

/// Ensemble moment diagnostics for a skew random walk ensemble.
///
/// All eight curves are indexed by step `k = 1..=n_steps`. The `mse_*`
/// fields are root mean square deviations between the paired empirical
/// and theoretical curves.
#[derive(Debug, Clone)]
pub struct EnsembleMomentReport {
    /// Up-step probability at the origin.
    pub alpha: f64,
    /// Number of simulated paths.
    pub n_paths: usize,
    /// Master seed (path `i` uses stream `i`).
    pub seed: u64,
    /// Per-step ensemble mean of `M_k`.
    pub empirical_mean: Vec<f64>,
    /// Per-step ensemble standard deviation of `M_k` (population form).
    pub empirical_std: Vec<f64>,
    /// Per-step ensemble mean of the increment `dM_k`.
    pub empirical_dmean: Vec<f64>,
    /// Per-step ensemble standard deviation of `dM_k`.
    pub empirical_dstd: Vec<f64>,
    /// Reference curve `mu_1 sqrt(k)`.
    pub theoretical_mean: Vec<f64>,
    /// Reference curve `sqrt((1 - mu_1^2) k)`.
    pub theoretical_std: Vec<f64>,
    /// Reference curve `mu_1 (sqrt(k) - sqrt(k-1))`.
    pub theoretical_dmean: Vec<f64>,
    /// Reference curve `sqrt(1 - mu_1^2 (sqrt(k) - sqrt(k-1))^2)`.
    pub theoretical_dstd: Vec<f64>,
    /// RMS deviation of the mean curve.
    pub mse_mean: f64,
    /// RMS deviation of the standard-deviation curve.
    pub mse_std: f64,
    /// RMS deviation of the increment-mean curve.
    pub mse_dmean: f64,
    /// RMS deviation of the increment-standard-deviation curve.
    pub mse_dstd: f64,
}

impl EnsembleMomentReport {
    /// Number of steps covered by every curve.
    pub fn n_steps(&self) -> usize {
        self.empirical_mean.len()
    }
}

/// One bin of the zero-occurrence histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    /// Inclusive lower edge, percent.
    pub lo: f64,
    /// Exclusive upper edge (inclusive for the final, truncated bin), percent.
    pub hi: f64,
    /// Fraction of paths falling in the bin.
    pub frequency: f64,
}

/// Distribution of per-path zero-occurrence rates.
///
/// The rate of a path counts the steps `k in 0..n_steps` with `M_k = 0`
/// (the start `M_0 = 0` is always counted, the final state is not) as a
/// percentage of `n_steps`. The histogram is truncated for display; the
/// quartiles are computed on the untruncated rates.
#[derive(Debug, Clone)]
pub struct ZeroOccurrenceStats {
    /// Up-step probability at the origin.
    pub alpha: f64,
    /// Number of simulated paths.
    pub n_paths: usize,
    /// Steps per path.
    pub n_steps: usize,
    /// Master seed.
    pub seed: u64,
    /// Sorted per-path rates, percent.
    pub rates: Vec<f64>,
    /// Fixed-width histogram of the rates, truncated at 4.17%.
    pub histogram: Vec<HistogramBin>,
    /// First, second, and third quartiles of the untruncated rates.
    pub quartiles: [f64; 3],
}

#[inline]
fn srw_step<R: Rng + ?Sized>(m: i64, alpha: f64, rng: &mut R) -> i64 {
    let p_up = if m == 0 { alpha } else { 0.5 };
    if rng.random::<f64>() < p_up {
        1
    } else {
        -1
    }
}

/// Generates the trajectory values of one walk with the supplied rng.
/// Returns `M_0 .. M_n` (length `n + 1`).
pub fn srw_values_with_rng<R: Rng + ?Sized>(
    n: usize,
    params: &SkewParams,
    rng: &mut R,
) -> Vec<i64> {
    let alpha = params.alpha();
    let mut values = Vec::with_capacity(n + 1);
    let mut m = 0i64;
    values.push(m);
    for _ in 0..n {
        m += srw_step(m, alpha, rng);
        values.push(m);
    }
    values
}

/// Generates one skew random walk of `n >= 1` steps from an explicit seed.
///
/// # Panics
/// If `n = 0`.
pub fn generate_srw(n: usize, params: &SkewParams, seed: u64) -> SrwPath {
    assert!(n >= 1, "walk needs at least one step");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SrwPath {
        values: srw_values_with_rng(n, params, &mut rng),
        alpha: params.alpha(),
        seed,
    }
}

/// Continuum reference moments of the walk at step `k`:
/// `(mean, std, dmean, dstd)` as in the module header.
///
/// # Errors
/// `Error::InvalidInput` if `k = 0`.
pub fn srw_theoretical_moments(k: usize, params: &SkewParams) -> Result<(f64, f64, f64, f64)> {
    if k == 0 {
        return Err(Error::invalid_input("step index must be at least 1"));
    }
    let mu1 = params.delta() * (2.0 / std::f64::consts::PI).sqrt();
    let sk = (k as f64).sqrt();
    let dsk = sk - ((k - 1) as f64).sqrt();
    Ok((
        mu1 * sk,
        ((1.0 - mu1 * mu1) * k as f64).sqrt(),
        mu1 * dsk,
        (1.0 - mu1 * mu1 * dsk * dsk).sqrt(),
    ))
}

// Per-thread integer accumulator for ensemble moments. Exact integer
// sums make the reduction independent of the merge order.
struct MomentAccumulator {
    sum_m: Vec<i64>,
    sum_m2: Vec<i64>,
    sum_d: Vec<i64>,
}

impl MomentAccumulator {
    fn new(n_steps: usize) -> Self {
        MomentAccumulator {
            sum_m: vec![0; n_steps],
            sum_m2: vec![0; n_steps],
            sum_d: vec![0; n_steps],
        }
    }

    fn add_path<R: Rng + ?Sized>(&mut self, alpha: f64, rng: &mut R) {
        let mut m = 0i64;
        for k in 0..self.sum_m.len() {
            let step = srw_step(m, alpha, rng);
            m += step;
            self.sum_m[k] += m;
            self.sum_m2[k] += m * m;
            self.sum_d[k] += step;
        }
    }

    fn merge(mut self, other: &MomentAccumulator) -> Self {
        for k in 0..self.sum_m.len() {
            self.sum_m[k] += other.sum_m[k];
            self.sum_m2[k] += other.sum_m2[k];
            self.sum_d[k] += other.sum_d[k];
        }
        self
    }
}

fn rms(diff: impl Iterator<Item = f64>, n: usize) -> f64 {
    (diff.map(|d| d * d).sum::<f64>() / n as f64).sqrt()
}

/// Simulates `n_paths` walks of `n_steps` steps and reports empirical
/// versus theoretical moment curves with their RMS deviations.
///
/// Path `i` uses stream `i` of a counter-mode generator seeded with
/// `seed`, so the report is reproducible across runs and thread counts.
///
/// # Panics
/// If `n_paths < 100` or `n_steps = 0`.
pub fn ensemble_moment_report(
    n_paths: usize,
    n_steps: usize,
    params: &SkewParams,
    seed: u64,
) -> EnsembleMomentReport {
    assert!(n_paths >= 100, "ensemble needs at least 100 paths");
    assert!(n_steps >= 1, "walk needs at least one step");
    let alpha = params.alpha();

    let acc = (0..n_paths as u64)
        .into_par_iter()
        .fold(
            || MomentAccumulator::new(n_steps),
            |mut acc, path_idx| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(path_idx);
                acc.add_path(alpha, &mut rng);
                acc
            },
        )
        .reduce(|| MomentAccumulator::new(n_steps), |a, b| a.merge(&b));

    let n = n_paths as f64;
    let mut report = EnsembleMomentReport {
        alpha,
        n_paths,
        seed,
        empirical_mean: Vec::with_capacity(n_steps),
        empirical_std: Vec::with_capacity(n_steps),
        empirical_dmean: Vec::with_capacity(n_steps),
        empirical_dstd: Vec::with_capacity(n_steps),
        theoretical_mean: Vec::with_capacity(n_steps),
        theoretical_std: Vec::with_capacity(n_steps),
        theoretical_dmean: Vec::with_capacity(n_steps),
        theoretical_dstd: Vec::with_capacity(n_steps),
        mse_mean: 0.0,
        mse_std: 0.0,
        mse_dmean: 0.0,
        mse_dstd: 0.0,
    };
    for k in 1..=n_steps {
        let mean = acc.sum_m[k - 1] as f64 / n;
        let var = (acc.sum_m2[k - 1] as f64 / n - mean * mean).max(0.0);
        let dmean = acc.sum_d[k - 1] as f64 / n;
        // Increments are +-1, so the population variance is 1 - mean^2
        // exactly.
        let dvar = (1.0 - dmean * dmean).max(0.0);
        let (tm, ts, tdm, tds) = srw_theoretical_moments(k, params).expect("k >= 1");
        report.empirical_mean.push(mean);
        report.empirical_std.push(var.sqrt());
        report.empirical_dmean.push(dmean);
        report.empirical_dstd.push(dvar.sqrt());
        report.theoretical_mean.push(tm);
        report.theoretical_std.push(ts);
        report.theoretical_dmean.push(tdm);
        report.theoretical_dstd.push(tds);
    }
    let paired = |e: &[f64], t: &[f64]| -> f64 {
        rms(
            e.iter().zip(t).map(|(a, b)| a - b),
            n_steps,
        )
    };
    report.mse_mean = paired(&report.empirical_mean, &report.theoretical_mean);
    report.mse_std = paired(&report.empirical_std, &report.theoretical_std);
    report.mse_dmean = paired(&report.empirical_dmean, &report.theoretical_dmean);
    report.mse_dstd = paired(&report.empirical_dstd, &report.theoretical_dstd);
    report
}

/// Simulates `n_paths` walks and reports the distribution of per-path
/// zero-occurrence rates (histogram, sorted rates, quartiles).
///
/// # Panics
/// If `n_paths < 1000` or `n_steps = 0`.
pub fn zero_occurrence_stats(
    n_paths: usize,
    n_steps: usize,
    params: &SkewParams,
    seed: u64,
) -> ZeroOccurrenceStats {
    assert!(n_paths >= 1000, "rate distribution needs at least 1000 paths");
    assert!(n_steps >= 1, "walk needs at least one step");
    let alpha = params.alpha();

    let mut rates: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|path_idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path_idx);
            let mut m = 0i64;
            let mut zeros = 0u32;
            for _ in 0..n_steps {
                if m == 0 {
                    zeros += 1;
                }
                m += srw_step(m, alpha, &mut rng);
            }
            100.0 * f64::from(zeros) / n_steps as f64
        })
        .collect();
    rates.sort_by(f64::total_cmp);

    let n_bins = (HISTOGRAM_TRUNCATION_PCT / HISTOGRAM_BIN_WIDTH_PCT).ceil() as usize;
    let mut histogram: Vec<HistogramBin> = (0..n_bins)
        .map(|i| HistogramBin {
            lo: i as f64 * HISTOGRAM_BIN_WIDTH_PCT,
            hi: ((i + 1) as f64 * HISTOGRAM_BIN_WIDTH_PCT).min(HISTOGRAM_TRUNCATION_PCT),
            frequency: 0.0,
        })
        .collect();
    let weight = 1.0 / n_paths as f64;
    for &r in &rates {
        if r > HISTOGRAM_TRUNCATION_PCT {
            continue;
        }
        let bin = ((r / HISTOGRAM_BIN_WIDTH_PCT) as usize).min(n_bins - 1);
        histogram[bin].frequency += weight;
    }

    let quartiles = [
        percentile(&rates, 25.0),
        percentile(&rates, 50.0),
        percentile(&rates, 75.0),
    ];
    ZeroOccurrenceStats {
        alpha,
        n_paths,
        n_steps,
        seed,
        rates,
        histogram,
        quartiles,
    }
}

/// Right-continuous piecewise-constant embedding of a walk into
/// continuous time: `t -> sqrt(dt) * M_floor(t / dt)` on `[0, n dt]`.
#[derive(Debug, Clone)]
pub struct CadlagPath {
    scaled: Vec<f64>,
    dt: f64,
}

impl CadlagPath {
    /// Value at time `t`, which must lie in `[0, duration]`.
    ///
    /// # Panics
    /// If `t` is outside the domain.
    pub fn value(&self, t: f64) -> f64 {
        assert!(
            (0.0..=self.duration()).contains(&t),
            "time {t} outside [0, {}]",
            self.duration()
        );
        let idx = ((t / self.dt) as usize).min(self.scaled.len() - 1);
        self.scaled[idx]
    }

    /// Terminal value `sqrt(dt) * M_n`.
    pub fn terminal(&self) -> f64 {
        *self.scaled.last().expect("embedding is never empty")
    }

    /// Length of the time domain, `n * dt`.
    pub fn duration(&self) -> f64 {
        (self.scaled.len() - 1) as f64 * self.dt
    }

    /// Step width.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// The scaled lattice values `sqrt(dt) * M_k`, `k = 0..=n`.
    pub fn scaled_values(&self) -> &[f64] {
        &self.scaled
    }
}

/// Embeds a walk as a cadlag step function with step width `dt`.
///
/// # Panics
/// If `dt <= 0`.
pub fn embed_cadlag(path: &SrwPath, dt: f64) -> CadlagPath {
    assert!(dt > 0.0 && dt.is_finite(), "dt must be positive");
    let scale = dt.sqrt();
    CadlagPath {
        scaled: path.values().iter().map(|&m| scale * m as f64).collect(),
        dt,
    }
}
