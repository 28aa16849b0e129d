//! Price-series ingestion, log-return transforms, and CSV export.
//!
//! Input is a two-column `date,price` CSV with a header row. Loading is
//! lenient toward malformed rows, which are dropped with a recorded warning,
//! and strict about structural faults: a wrong header, duplicate dates, or
//! fewer than two usable rows reject the file. Dates are opaque labels
//! compared lexically, which orders ISO-8601 dates chronologically.
//!
//! Every writer is byte-stable: fixed column order, line-feed terminators,
//! and values rounded to 10 significant digits, so identical inputs produce
//! identical files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::calibration::RollingCalibration;
use crate::error::{Error, Result};
use crate::imspt_lattice::PriceSurface;
use crate::skew_walk::{EnsembleMomentReport, ZeroOccurrenceStats};

/// Trading-day year fraction, the default spacing for daily series.
pub const DEFAULT_DT: f64 = 1.0 / 252.0;

/// A validated price history: strictly increasing dates, positive prices.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<String>,
    prices: Vec<f64>,
    dt: f64,
}

impl PriceSeries {
    /// Builds a series observed at the default daily spacing [`DEFAULT_DT`].
    ///
    /// Requires matching lengths, at least two rows, strictly increasing
    /// dates, and finite positive prices.
    pub fn new(dates: Vec<String>, prices: Vec<f64>) -> Result<Self> {
        Self::with_dt(dates, prices, DEFAULT_DT)
    }

    /// Builds a series with an explicit observation spacing in years.
    pub fn with_dt(dates: Vec<String>, prices: Vec<f64>, dt: f64) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::invalid_input(format!(
                "date/price length mismatch: {} vs {}",
                dates.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::invalid_input(
                "a price series needs at least two rows",
            ));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid_input(format!(
                "observation spacing {dt} must be positive"
            )));
        }
        if let Some(pair) = dates.windows(2).find(|pair| pair[0] >= pair[1]) {
            return Err(Error::invalid_input(format!(
                "dates not strictly increasing: '{}' then '{}'",
                pair[0], pair[1]
            )));
        }
        if let Some((i, &p)) = prices
            .iter()
            .enumerate()
            .find(|(_, p)| !(**p > 0.0 && p.is_finite()))
        {
            return Err(Error::invalid_input(format!(
                "price {p} at row {i} is not a positive finite value"
            )));
        }
        Ok(Self { dates, prices, dt })
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    /// Observation spacing in years.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of observations; at least 2.
    pub fn len(&self) -> usize {
        self.prices.len()
    }
}

/// A loaded CSV: source path, validated series, and load diagnostics.
#[derive(Debug, Clone)]
pub struct RawSeriesFile {
    path: PathBuf,
    series: PriceSeries,
    warnings: Vec<String>,
}

impl RawSeriesFile {
    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn series(&self) -> &PriceSeries {
        &self.series
    }

    pub fn into_series(self) -> PriceSeries {
        self.series
    }

    /// One entry per dropped row plus a note if rows had to be sorted.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
}

/// Loads a `date,price` CSV, dropping malformed rows with a warning each.
///
/// Structural faults are errors: a header other than `date,price`, duplicate
/// dates, or fewer than two valid rows. Rows out of date order are sorted
/// ascending and the reordering is noted in the warnings.
pub fn load_price_csv(path: impl AsRef<Path>) -> Result<RawSeriesFile> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "date" || &headers[1] != "price" {
        return Err(Error::data(format!(
            "expected header 'date,price', found '{}'",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut warnings = Vec::new();
    let mut rows: Vec<(String, f64)> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 2;
        let record = match record {
            Ok(record) => record,
            Err(err) => {
                warnings.push(format!("line {line}: unreadable row ({err}), dropped"));
                continue;
            }
        };
        if record.len() != 2 {
            warnings.push(format!(
                "line {line}: expected 2 fields, found {}, dropped",
                record.len()
            ));
            continue;
        }
        let date = record[0].trim();
        let raw_price = record[1].trim();
        if date.is_empty() {
            warnings.push(format!("line {line}: missing date, dropped"));
            continue;
        }
        let price: f64 = match raw_price.parse() {
            Ok(price) => price,
            Err(_) => {
                warnings.push(format!(
                    "line {line}: unparseable price '{raw_price}', dropped"
                ));
                continue;
            }
        };
        if !(price > 0.0 && price.is_finite()) {
            warnings.push(format!("line {line}: non-positive price {price}, dropped"));
            continue;
        }
        rows.push((date.to_string(), price));
    }

    let mut seen = HashSet::new();
    for (date, _) in &rows {
        if !seen.insert(date.as_str()) {
            return Err(Error::data(format!("duplicate date '{date}'")));
        }
    }
    if rows.len() < 2 {
        return Err(Error::data(format!(
            "{} valid rows after filtering, need at least 2",
            rows.len()
        )));
    }
    if !rows.windows(2).all(|pair| pair[0].0 < pair[1].0) {
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        warnings.push("rows were not in date order, sorted ascending".to_string());
    }

    let (dates, prices) = rows.into_iter().unzip();
    Ok(RawSeriesFile {
        path: path.to_path_buf(),
        series: PriceSeries::new(dates, prices)?,
        warnings,
    })
}

/// Cumulative and incremental log returns of a price series.
///
/// Returns `(cumulative, increments)`, both of length `len - 1`. Entry
/// `k - 1` holds R_k = ln(S_k / S_0) and r_k = R_k - R_{k-1}; the first
/// increment equals the first cumulative return.
pub fn compute_returns(series: &PriceSeries) -> (Vec<f64>, Vec<f64>) {
    let prices = series.prices();
    let s0 = prices[0];
    let cumulative: Vec<f64> = prices[1..].iter().map(|&s| (s / s0).ln()).collect();
    let mut increments = Vec::with_capacity(cumulative.len());
    let mut prev = 0.0;
    for &r in &cumulative {
        increments.push(r - prev);
        prev = r;
    }
    (cumulative, increments)
}

/// Formats a value rounded to 10 significant digits.
///
/// Plain decimal for base-10 exponents in [-4, 14], scientific notation
/// outside that range; trailing fractional zeros are trimmed. The output
/// depends only on the value, which keeps exports byte-stable.
pub fn format_sig10(x: f64) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }

    let sci = format!("{:.9e}", x.abs());
    let (mantissa, exponent) = sci.split_once('e').expect("exponential format");
    let exp: i32 = exponent.parse().expect("integer exponent");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    debug_assert_eq!(digits.len(), 10);

    let body = if (-4..=14).contains(&exp) {
        if exp >= 0 {
            let point = exp as usize + 1;
            if point >= digits.len() {
                format!("{digits}{}", "0".repeat(point - digits.len()))
            } else {
                let frac = digits[point..].trim_end_matches('0');
                if frac.is_empty() {
                    digits[..point].to_string()
                } else {
                    format!("{}.{frac}", &digits[..point])
                }
            }
        } else {
            let frac = digits.trim_end_matches('0');
            format!("0.{}{frac}", "0".repeat((-exp - 1) as usize))
        }
    } else {
        let frac = digits[1..].trim_end_matches('0');
        if frac.is_empty() {
            format!("{}e{exp}", &digits[..1])
        } else {
            format!("{}.{frac}e{exp}", &digits[..1])
        }
    };
    if x < 0.0 {
        format!("-{body}")
    } else {
        body
    }
}

/// Writes a price surface as CSV with columns
/// `T_days,moneyness,strike,price,warnings`.
///
/// Cell warnings are joined with `; `. An empty surface is an error and no
/// file is created.
pub fn write_surface_csv(surface: &PriceSurface, path: impl AsRef<Path>) -> Result<()> {
    if surface.is_empty() {
        return Err(Error::invalid_input("refusing to write an empty surface"));
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["T_days", "moneyness", "strike", "price", "warnings"])?;
    for cell in surface.cells() {
        writer.write_record([
            cell.maturity_days.to_string(),
            format_sig10(cell.moneyness),
            format_sig10(cell.strike),
            format_sig10(cell.price),
            cell.warnings.join("; "),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a rolling calibration as CSV with columns
/// `date,sigma_hat,mu_hat,alpha_hat,mse,mu_med,alpha_med`.
///
/// One row per window end date. An empty calibration is an error and no
/// file is created.
pub fn write_calibration_csv(rolling: &RollingCalibration, path: impl AsRef<Path>) -> Result<()> {
    if rolling.is_empty() {
        return Err(Error::invalid_input(
            "refusing to write an empty calibration",
        ));
    }
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "date",
        "sigma_hat",
        "mu_hat",
        "alpha_hat",
        "mse",
        "mu_med",
        "alpha_med",
    ])?;
    for (i, fit) in rolling.fits().iter().enumerate() {
        writer.write_record([
            fit.date.clone(),
            format_sig10(fit.sigma_hat),
            format_sig10(fit.mu_hat),
            format_sig10(fit.alpha_hat),
            format_sig10(fit.mse),
            format_sig10(rolling.mu_med()[i]),
            format_sig10(rolling.alpha_med()[i]),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Which tracked ensemble statistic a moment CSV export contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentQuantity {
    Mean,
    Std,
    IncrementMean,
    IncrementStd,
}

/// Writes one tracked statistic as CSV with columns `k,empirical,theoretical`.
pub fn write_moment_csv(
    report: &EnsembleMomentReport,
    quantity: MomentQuantity,
    path: impl AsRef<Path>,
) -> Result<()> {
    let (empirical, theoretical) = match quantity {
        MomentQuantity::Mean => (&report.empirical_mean, &report.theoretical_mean),
        MomentQuantity::Std => (&report.empirical_std, &report.theoretical_std),
        MomentQuantity::IncrementMean => (&report.empirical_dmean, &report.theoretical_dmean),
        MomentQuantity::IncrementStd => (&report.empirical_dstd, &report.theoretical_dstd),
    };
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["k", "empirical", "theoretical"])?;
    for (i, (e, t)) in empirical.iter().zip(theoretical).enumerate() {
        writer.write_record([
            (i + 1).to_string(),
            format_sig10(*e),
            format_sig10(*t),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Writes a zero-occurrence histogram as CSV with columns
/// `bin_lo,bin_hi,frequency`; bin edges are percentages.
pub fn write_zero_histogram_csv(
    stats: &ZeroOccurrenceStats,
    path: impl AsRef<Path>,
) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["bin_lo", "bin_hi", "frequency"])?;
    for bin in &stats.histogram {
        writer.write_record([
            format_sig10(bin.lo),
            format_sig10(bin.hi),
            format_sig10(bin.frequency),
        ])?;
    }
    writer.flush()?;
    Ok(())
}
