//! Tick prices to per-tick simple returns and their summary statistics.
//!
//! Real tick data is read from `timestamp,price` CSV. When no data is at
//! hand, [`gbm_ticks`] generates a discrete geometric Brownian path and
//! [`moment_matched_ticks`] tunes its drift so the sample returns hit a
//! requested `mu_hat / sigma_hat^2`.

use std::cmp::Ordering;
use std::io::Read;

use serde::Serialize;

use crate::constraints::{confinement_interval, Interval};
use crate::distributions::standard_normal_noise;
use crate::error::{KellyError, Result};
use crate::sum::compensated_sum;

/// Prices in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    pub prices: Vec<f64>,
    pub label: String,
}

impl TickSeries {
    pub fn new(prices: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(KellyError::domain(format!("price {} at index {i} is not positive", prices[i])));
        }
        Ok(Self { prices, label: label.into() })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Sample moments and extremes of a return series. `sigma_hat` uses the
/// population (`1/m`) convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnStats {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub m: usize,
    /// `[-1/x_max, -1/x_min]` when `x_min < 0 < x_max`.
    pub confinement: Option<Interval>,
}

/// Orders timestamps numerically when both parse as numbers, else as text
/// (which orders ISO-8601 stamps of one format correctly).
fn timestamp_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x.partial_cmp(&y).unwrap_or(Ordering::Equal),
        _ => a.cmp(b),
    }
}

/// Reads `timestamp,price` CSV with one header line. Row numbers in errors
/// are file line numbers.
pub fn read_prices_csv<R: Read>(source: R) -> Result<TickSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| KellyError::Parse { row: 1, message: e.to_string() })?
        .clone();
    if headers.len() != 2 {
        return Err(KellyError::Parse { row: 1, message: format!("expected header timestamp,price, got {headers:?}") });
    }

    let mut prices = Vec::new();
    let mut last_ts: Option<String> = None;
    for (i, record) in reader.records().enumerate() {
        let fallback_row = i + 2;
        let record = record.map_err(|e| KellyError::Parse { row: fallback_row, message: e.to_string() })?;
        let row = record.position().map_or(fallback_row, |p| p.line() as usize);
        if record.len() != 2 {
            return Err(KellyError::Parse { row, message: format!("expected 2 fields, found {}", record.len()) });
        }
        let ts = &record[0];
        if ts.is_empty() {
            return Err(KellyError::Parse { row, message: "empty timestamp".into() });
        }
        let price: f64 = record[1]
            .parse()
            .map_err(|_| KellyError::Parse { row, message: format!("price {:?} is not a number", &record[1]) })?;
        if !(price.is_finite() && price > 0.0) {
            return Err(KellyError::Parse { row, message: format!("price {price} is not positive") });
        }
        if let Some(prev) = &last_ts {
            if timestamp_cmp(ts, prev) == Ordering::Less {
                return Err(KellyError::Parse { row, message: format!("timestamp {ts} precedes {prev}") });
            }
        }
        last_ts = Some(ts.to_string());
        prices.push(price);
    }
    TickSeries::new(prices, "csv")
}

/// `X(k) = (S(k+1) - S(k)) / S(k)`.
pub fn returns_from_prices(ticks: &TickSeries) -> Result<Vec<f64>> {
    if ticks.len() < 2 {
        return Err(KellyError::domain(format!("need at least 2 prices, got {}", ticks.len())));
    }
    Ok(ticks.prices.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect())
}

/// `m` prices with `S(k+1) = S(k) exp((mu - sigma^2/2) + sigma Z(k))`.
pub fn gbm_ticks(s0: f64, mu_tick: f64, sigma_tick: f64, m: usize, seed: u64) -> Result<TickSeries> {
    if !(s0 > 0.0 && s0.is_finite()) {
        return Err(KellyError::domain(format!("initial price must be positive, got {s0}")));
    }
    if !(sigma_tick >= 0.0 && sigma_tick.is_finite()) || !mu_tick.is_finite() {
        return Err(KellyError::domain(format!("bad drift/volatility ({mu_tick}, {sigma_tick})")));
    }
    if m < 2 {
        return Err(KellyError::domain(format!("need at least 2 ticks, got {m}")));
    }
    let drift = mu_tick - 0.5 * sigma_tick * sigma_tick;
    let mut prices = Vec::with_capacity(m);
    let mut log_s = s0.ln();
    prices.push(s0);
    for z in standard_normal_noise(m - 1, seed) {
        log_s += drift + sigma_tick * z;
        prices.push(log_s.exp());
    }
    if sigma_tick == 0.0 && mu_tick == 0.0 {
        prices.iter_mut().for_each(|p| *p = s0);
    }
    TickSeries::new(prices, format!("gbm(s0={s0}, mu={mu_tick}, sigma={sigma_tick}, m={m}, seed={seed})"))
}

/// Synthetic ticks whose sample returns satisfy `mu_hat / sigma_hat^2 ~ target_ratio`.
///
/// With the noise fixed by `seed`, the sample mean moves one-for-one with
/// the drift, so a few fixed-point corrections of the drift suffice.
/// Returns the series and the drift used.
pub fn moment_matched_ticks(
    s0: f64,
    sigma_tick: f64,
    m: usize,
    seed: u64,
    target_ratio: f64,
) -> Result<(TickSeries, f64)> {
    if !(sigma_tick > 0.0) {
        return Err(KellyError::domain("moment matching needs positive volatility"));
    }
    let mut mu = target_ratio * sigma_tick * sigma_tick;
    for _ in 0..8 {
        let stats = summary_stats(&returns_from_prices(&gbm_ticks(s0, mu, sigma_tick, m, seed)?)?)?;
        let miss = stats.mu_hat - target_ratio * stats.sigma_hat * stats.sigma_hat;
        mu -= miss;
        if miss.abs() <= 1e-6 * target_ratio.abs() * stats.sigma_hat * stats.sigma_hat {
            break;
        }
    }
    Ok((gbm_ticks(s0, mu, sigma_tick, m, seed)?, mu))
}

pub fn summary_stats(returns: &[f64]) -> Result<ReturnStats> {
    if returns.is_empty() {
        return Err(KellyError::domain("no returns to summarize"));
    }
    let m = returns.len();
    let mu_hat = compensated_sum(returns.iter().copied()) / m as f64;
    let var = compensated_sum(returns.iter().map(|x| (x - mu_hat) * (x - mu_hat))) / m as f64;
    let x_min = returns.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = returns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let confinement = if x_min < 0.0 && x_max > 0.0 { Some(confinement_interval(x_min, x_max)?) } else { None };
    Ok(ReturnStats {
        // rounding can push the mean of a constant series a hair outside its range
        mu_hat: mu_hat.clamp(x_min, x_max),
        sigma_hat: var.sqrt(),
        x_min,
        x_max,
        m,
        confinement,
    })
}
