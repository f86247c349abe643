use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::copula::{build_copula, diagonal_band_indicator, ellipsoid_levels, hyperplane_levels};
use super::data::{compound_returns, shrink_covariance, ReturnsMatrix};
use crate::error::{Error, Result};
use crate::rng::with_thread_cap;
use crate::sampling::{Characteristic, SamplerConfig, SamplerMethod};

/// Streams per date: one for the quadratic levels, one for the copula.
const STREAMS_PER_DATE: u64 = 2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollingConfig {
    /// Window length `k` in observations.
    pub window: usize,
    pub band_width: f64,
    /// Bands per axis.
    pub m: usize,
    /// Simplex points per copula.
    pub n: usize,
    pub seed: u64,
    pub sampler: SamplerMethod,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            window: 60,
            band_width: 0.10,
            m: 100,
            n: 500_000,
            seed: 0,
            sampler: SamplerMethod::Exponential,
        }
    }
}

/// Indicator values by date; dates without a full window are omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    /// Dates whose up band was empty (value `+inf`).
    pub unbounded: Vec<bool>,
    pub band_width: f64,
    pub window: usize,
}

impl IndicatorSeries {
    pub fn new(
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        band_width: f64,
        window: usize,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::invalid("dates and values differ in length"));
        }
        let unbounded = values.iter().map(|v| v.is_infinite()).collect();
        Ok(IndicatorSeries {
            dates,
            values,
            unbounded,
            band_width,
            window,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["date", "value"])?;
        for (d, v) in self.dates.iter().zip(&self.values) {
            w.write_record([d.format("%Y-%m-%d").to_string(), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningPeriod {
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Number of observations in the run.
    pub duration_days: usize,
}

pub fn write_warnings_csv(periods: &[WarningPeriod], writer: impl std::io::Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["start", "end", "duration"])?;
    for p in periods {
        w.write_record([
            p.start_date.format("%Y-%m-%d").to_string(),
            p.end_date.format("%Y-%m-%d").to_string(),
            p.duration_days.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Maximal runs with indicator above 1 lasting more than `min_days`.
pub fn detect_persistent_periods(
    series: &IndicatorSeries,
    min_days: usize,
) -> Result<Vec<WarningPeriod>> {
    if series.is_empty() {
        return Err(Error::invalid("indicator series is empty"));
    }
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for t in 0..=series.len() {
        let above = t < series.len() && series.values[t] > 1.0;
        match (above, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                let len = t - s;
                if len > min_days {
                    out.push(WarningPeriod {
                        start_date: series.dates[s],
                        end_date: series.dates[t - 1],
                        duration_days: len,
                    });
                }
                start = None;
            }
            _ => {}
        }
    }
    Ok(out)
}

fn check(cfg: &RollingConfig) -> Result<()> {
    if cfg.window < 2 {
        return Err(Error::invalid("window must be at least 2"));
    }
    if cfg.m < 2 {
        return Err(Error::invalid("need at least two bands"));
    }
    if !(cfg.band_width > 0.0 && cfg.band_width < 0.5) {
        return Err(Error::invalid("band width must lie in (0, 0.5)"));
    }
    Ok(())
}

fn date_sampler(cfg: &RollingConfig, d: usize, t: usize, which: u64) -> SamplerConfig {
    SamplerConfig::new(d, cfg.seed)
        .with_method(cfg.sampler)
        .with_stream(t as u64 * STREAMS_PER_DATE + which)
}

/// Sampler for the copula reported at row `t`.
pub fn copula_sampler(cfg: &RollingConfig, d: usize, t: usize) -> SamplerConfig {
    date_sampler(cfg, d, t, 1)
}

/// Return and variance axes of the `k`-row window ending at row `t`.
pub fn volatility_axes(
    returns: &ReturnsMatrix,
    t: usize,
    cfg: &RollingConfig,
) -> Result<(Characteristic, Characteristic)> {
    check(cfg)?;
    let k = cfg.window;
    if t >= returns.len() || t + 1 < k {
        return Err(Error::invalid(format!(
            "no window of {k} rows ends at row {t} of {}",
            returns.len()
        )));
    }
    let d = returns.asset_count() - 1;
    let start = t + 1 - k;
    let r = compound_returns(returns, start, k)?;
    let lin = Characteristic::Linear(hyperplane_levels(&r, cfg.m)?);
    let c = shrink_covariance(returns, start, k)?;
    let lv = ellipsoid_levels(
        &c,
        cfg.m,
        cfg.n.max(100 * cfg.m),
        &date_sampler(cfg, d, t, 0),
    )?;
    Ok((lin, Characteristic::quadratic(c, lv)?))
}

/// Return axes of the window before and the window ending at row `t`.
pub fn momentum_axes(
    returns: &ReturnsMatrix,
    t: usize,
    cfg: &RollingConfig,
) -> Result<(Characteristic, Characteristic)> {
    check(cfg)?;
    let k = cfg.window;
    if t >= returns.len() || t + 1 < 2 * k {
        return Err(Error::invalid(format!(
            "no two windows of {k} rows end at row {t} of {}",
            returns.len()
        )));
    }
    let past = compound_returns(returns, t + 1 - 2 * k, k)?;
    let next = compound_returns(returns, t + 1 - k, k)?;
    Ok((
        Characteristic::Linear(hyperplane_levels(&past, cfg.m)?),
        Characteristic::Linear(hyperplane_levels(&next, cfg.m)?),
    ))
}

fn series(
    returns: &ReturnsMatrix,
    cfg: &RollingConfig,
    first: usize,
    axes: impl Fn(usize) -> Result<(Characteristic, Characteristic)> + Sync,
) -> Result<IndicatorSeries> {
    let d = returns.asset_count() - 1;
    let ends: Vec<usize> = (first..returns.len()).collect();
    let values: Vec<Result<f64>> = with_thread_cap(|| {
        ends.par_iter()
            .map(|&t| {
                let (a1, a2) = axes(t)?;
                let grid = build_copula(&a1, &a2, cfg.n, &copula_sampler(cfg, d, t))?;
                Ok(diagonal_band_indicator(&grid, cfg.band_width)?.value)
            })
            .collect()
    });
    let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
    IndicatorSeries::new(
        ends.iter().map(|&t| returns.dates()[t]).collect(),
        values,
        cfg.band_width,
        cfg.window,
    )
}

/// Return/volatility indicator over a rolling window.
///
/// For each date with `k` observations of history, the window's compound
/// returns give the hyperplane axis and its shrunk covariance the quadratic
/// axis; the indicator of their copula is reported at the window's last date.
pub fn rolling_indicator(returns: &ReturnsMatrix, cfg: &RollingConfig) -> Result<IndicatorSeries> {
    check(cfg)?;
    let k = cfg.window;
    if k > returns.len() {
        return Err(Error::invalid(format!(
            "window {k} exceeds {} dates",
            returns.len()
        )));
    }
    series(returns, cfg, k - 1, |t| volatility_axes(returns, t, cfg))
}

/// Momentum indicator: the copula of past-window against following-window
/// compound returns, both hyperplane axes. Reported at the last date of the
/// following window.
pub fn momentum_pipeline(returns: &ReturnsMatrix, cfg: &RollingConfig) -> Result<IndicatorSeries> {
    check(cfg)?;
    let k = cfg.window;
    if 2 * k > returns.len() {
        return Err(Error::invalid(format!(
            "two windows of {k} exceed {} dates",
            returns.len()
        )));
    }
    series(returns, cfg, 2 * k - 1, |t| momentum_axes(returns, t, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> IndicatorSeries {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).unwrap();
        let dates = (0..values.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        IndicatorSeries::new(dates, values, 0.1, 60).unwrap()
    }

    #[test]
    fn periods_need_more_than_min_days() {
        let mut v = vec![0.9; 10];
        v.extend(vec![1.2; 60]);
        v.extend(vec![1.0; 5]);
        v.extend(vec![1.1; 61]);
        let s = series(v);
        let p = detect_persistent_periods(&s, 60).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].duration_days, 61);
        assert_eq!(p[0].start_date, s.dates[75]);
        assert_eq!(p[0].end_date, *s.dates.last().unwrap());
        assert!(detect_persistent_periods(&series(vec![1.0; 100]), 60)
            .unwrap()
            .is_empty());
        assert!(detect_persistent_periods(&series(vec![]), 60).is_err());
    }
}
