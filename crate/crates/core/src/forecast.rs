//! Demand extrapolation by simple exponential smoothing and synthetic
//! producer capacities proportional to market share.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ForecastError {
    #[error("empty series")]
    Empty,
    #[error("smoothing factor {0} outside (0,1]")]
    Alpha(f64),
    #[error("non-finite value in series")]
    NonFinite,
    #[error("{0}")]
    Invalid(String),
    #[error("CSV line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastSeries {
    pub observed: Vec<f64>,
    pub alpha: f64,
    /// `levels[t]` is the level after observation `t` (0-based).
    pub levels: Vec<f64>,
    pub horizon: usize,
    pub forecast: Vec<f64>,
}

pub const DEFAULT_ALPHA: f64 = 0.3;

fn check_alpha(alpha: f64) -> Result<(), ForecastError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(ForecastError::Alpha(alpha))
    }
}

fn levels(obs: &[f64], alpha: f64, init: f64) -> Vec<f64> {
    let mut level = init;
    obs.iter()
        .map(|&y| {
            level = alpha * y + (1.0 - alpha) * level;
            level
        })
        .collect()
}

/// Smooth `obs` and extend it `horizon` periods with the final level.
/// The initial level defaults to the first observation.
pub fn ses_forecast(
    obs: &[f64],
    alpha: f64,
    horizon: usize,
    init: Option<f64>,
) -> Result<ForecastSeries, ForecastError> {
    let first = *obs.first().ok_or(ForecastError::Empty)?;
    check_alpha(alpha)?;
    if obs.iter().any(|v| !v.is_finite()) || init.is_some_and(|v| !v.is_finite()) {
        return Err(ForecastError::NonFinite);
    }
    let levels = levels(obs, alpha, init.unwrap_or(first));
    let last = *levels.last().unwrap();
    Ok(ForecastSeries { observed: obs.to_vec(), alpha, levels, horizon, forecast: vec![last; horizon] })
}

/// In-sample sum of squared one-step-ahead errors, each observation
/// predicted by the level before it.
pub fn one_step_sse(obs: &[f64], alpha: f64, init: Option<f64>) -> Result<f64, ForecastError> {
    let first = *obs.first().ok_or(ForecastError::Empty)?;
    check_alpha(alpha)?;
    let mut prev = init.unwrap_or(first);
    let mut sse = 0.0;
    for &y in obs {
        sse += (y - prev).powi(2);
        prev = alpha * y + (1.0 - alpha) * prev;
    }
    Ok(sse)
}

/// Grid search over α ∈ {0.1, …, 0.9}; ties go to the smaller α.
pub fn fit_alpha(obs: &[f64], init: Option<f64>) -> Result<f64, ForecastError> {
    let mut best = (f64::INFINITY, DEFAULT_ALPHA);
    for k in 1..=9 {
        let alpha = k as f64 / 10.0;
        let sse = one_step_sse(obs, alpha, init)?;
        if sse < best.0 {
            best = (sse, alpha);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityPlan {
    pub shares: Vec<f64>,
    pub coverage: f64,
    /// `capacity[p][t]`, doses per period.
    pub capacity: Vec<Vec<f64>>,
}

/// `s_pt = demand_t · coverage · share_p`.
pub fn synth_capacity(agg_demand: &[f64], shares: &[f64], coverage: f64) -> Result<CapacityPlan, ForecastError> {
    if !(coverage > 0.0 && coverage.is_finite()) {
        return Err(ForecastError::Invalid(format!("coverage {coverage} must be positive")));
    }
    if agg_demand.iter().any(|&d| !(d >= 0.0 && d.is_finite())) {
        return Err(ForecastError::Invalid("negative or non-finite demand".into()));
    }
    if shares.iter().any(|&s| !(0.0..=1.0).contains(&s)) {
        return Err(ForecastError::Invalid("market shares must lie in [0,1]".into()));
    }
    if shares.iter().sum::<f64>() > 1.0 + 1e-12 {
        return Err(ForecastError::Invalid("market shares sum above 1".into()));
    }
    let capacity = shares.iter().map(|&s| agg_demand.iter().map(|&d| d * coverage * s).collect()).collect();
    Ok(CapacityPlan { shares: shares.to_vec(), coverage, capacity })
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    period: u64,
    value: f64,
}

/// Read a `period,value` series with strictly increasing 1-based periods.
pub fn read_series_csv<R: Read>(reader: R) -> Result<Vec<(usize, f64)>, ForecastError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| csv_err(&e))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["period", "value"] {
        return Err(ForecastError::Csv { line: 1, message: "header must be `period,value`".into() });
    }
    let mut out: Vec<(usize, f64)> = Vec::new();
    for rec in rdr.deserialize::<CsvRow>() {
        let row = rec.map_err(|e| csv_err(&e))?;
        let line = (out.len() + 2) as u64;
        if row.period == 0 {
            return Err(ForecastError::Csv { line, message: "periods are 1-based".into() });
        }
        if out.last().is_some_and(|&(p, _)| row.period as usize <= p) {
            return Err(ForecastError::Csv { line, message: "periods must be strictly increasing".into() });
        }
        if !row.value.is_finite() {
            return Err(ForecastError::Csv { line, message: "non-finite value".into() });
        }
        out.push((row.period as usize, row.value));
    }
    if out.is_empty() {
        return Err(ForecastError::Empty);
    }
    Ok(out)
}

fn csv_err(e: &csv::Error) -> ForecastError {
    let line = e.position().map_or(0, |p| p.line());
    ForecastError::Csv { line, message: e.to_string() }
}

/// Write `(period, value)` rows under a `period,value` header.
pub fn write_series_csv<W: Write>(writer: W, rows: &[(usize, f64)]) -> Result<(), ForecastError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| ForecastError::Invalid(e.to_string());
    w.write_record(["period", "value"]).map_err(io)?;
    for &(p, v) in rows {
        w.write_record([p.to_string(), v.to_string()]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
