use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Smallest shrinkage intensity, so the estimate is SPD even for
/// rank-deficient windows.
pub const MIN_SHRINKAGE: f64 = 1e-4;

/// Daily simple returns, one row per date and one column per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsMatrix {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ReturnsMatrix {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if assets.len() < 2 {
            return Err(Error::Data(format!(
                "need at least two assets, got {}",
                assets.len()
            )));
        }
        if dates.len() != values.len() {
            return Err(Error::Data(format!(
                "{} dates but {} rows of returns",
                dates.len(),
                values.len()
            )));
        }
        for (t, w) in dates.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(Error::Data(format!(
                    "dates must be strictly increasing (row {})",
                    t + 2
                )));
            }
        }
        for (t, row) in values.iter().enumerate() {
            if row.len() != assets.len() {
                return Err(Error::Data(format!(
                    "row {} has {} values, expected {}",
                    t + 1,
                    row.len(),
                    assets.len()
                )));
            }
            if let Some(j) = row.iter().position(|&r| !(r > -1.0) || !r.is_finite()) {
                return Err(Error::Data(format!(
                    "return {} of {} on {} must be finite and > -1",
                    row[j], assets[j], dates[t]
                )));
            }
        }
        Ok(ReturnsMatrix {
            dates,
            assets,
            values,
        })
    }

    /// Reads `date,ASSET1,ASSET2,...` CSV with ISO dates.
    pub fn from_csv_reader(reader: impl Read) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.get(0).map(|h| h.to_ascii_lowercase()) != Some("date".into()) {
            return Err(Error::Data("first column must be 'date'".into()));
        }
        let assets: Vec<String> = header.iter().skip(1).map(String::from).collect();
        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let date = NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d")
                .map_err(|e| Error::Data(format!("line {line}: bad date '{}': {e}", &rec[0])))?;
            let mut row = Vec::with_capacity(assets.len());
            for (j, cell) in rec.iter().skip(1).enumerate() {
                if cell.is_empty() {
                    return Err(Error::Data(format!(
                        "line {line}: missing value for {}",
                        assets.get(j).map(String::as_str).unwrap_or("?")
                    )));
                }
                row.push(
                    cell.parse::<f64>().map_err(|_| {
                        Error::Data(format!("line {line}: '{cell}' is not a number"))
                    })?,
                );
            }
            dates.push(date);
            values.push(row);
        }
        ReturnsMatrix::new(dates, assets, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        ReturnsMatrix::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["date".to_string()];
        header.extend(self.assets.iter().cloned());
        w.write_record(&header)?;
        for (date, row) in self.dates.iter().zip(&self.values) {
            let mut rec = vec![date.format("%Y-%m-%d").to_string()];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Number of dates.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Number of assets, `d + 1`.
    pub fn asset_count(&self) -> usize {
        self.assets.len()
    }

    fn window(&self, start: usize, k: usize) -> Result<&[Vec<f64>]> {
        if k == 0 {
            return Err(Error::invalid("window length must be positive"));
        }
        if start + k > self.len() {
            return Err(Error::invalid(format!(
                "window [{start}, {}) exceeds {} dates",
                start + k,
                self.len()
            )));
        }
        Ok(&self.values[start..start + k])
    }
}

/// Per-asset compounded return over rows `start..start + k`.
pub fn compound_returns(returns: &ReturnsMatrix, start: usize, k: usize) -> Result<Vec<f64>> {
    let rows = returns.window(start, k)?;
    let mut growth = vec![1.0; returns.asset_count()];
    for row in rows {
        for (g, r) in growth.iter_mut().zip(row) {
            *g *= 1.0 + r;
        }
    }
    Ok(growth.into_iter().map(|g| g - 1.0).collect())
}

/// Covariance of rows `start..start + k`, shrunk toward a multiple of the
/// identity with the Ledoit-Wolf intensity.
pub fn shrink_covariance(returns: &ReturnsMatrix, start: usize, k: usize) -> Result<DMatrix<f64>> {
    if k < 2 {
        return Err(Error::invalid("covariance needs a window of at least 2"));
    }
    let rows = returns.window(start, k)?;
    shrink_covariance_rows(rows)
}

/// Shrinkage estimate from observations given as rows.
pub fn shrink_covariance_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::invalid("covariance needs at least 2 observations"));
    }
    let p = rows[0].len();
    let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let means = x.row_mean();
    let xc = DMatrix::from_fn(n, p, |i, j| x[(i, j)] - means[j]);
    let s = xc.transpose() * &xc / n as f64;
    let mu = s.trace() / p as f64;
    if !(mu > 0.0) {
        return Err(Error::Data(
            "every asset is constant over the window".into(),
        ));
    }
    let target = DMatrix::<f64>::identity(p, p) * mu;
    let delta2 = (&s - &target).norm_squared() / p as f64;
    let mut beta2 = 0.0;
    for i in 0..n {
        let r = xc.row(i);
        let outer = r.transpose() * r;
        beta2 += (outer - &s).norm_squared();
    }
    beta2 /= (n * n * p) as f64;
    let intensity = if delta2 > 0.0 {
        (beta2.min(delta2) / delta2).clamp(MIN_SHRINKAGE, 1.0)
    } else {
        1.0
    };
    let c = target * intensity + s * (1.0 - intensity);
    Ok((&c + c.transpose()) * 0.5)
}
