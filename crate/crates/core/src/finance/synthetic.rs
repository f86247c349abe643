//! Seeded synthetic daily returns for exercising the indicators.

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::data::ReturnsMatrix;
use crate::error::Result;
use crate::rng::stream_rng;

/// How expected returns relate to asset volatility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// No drift; returns symmetric around zero.
    Neutral,
    /// Drift proportional to volatility (risk is rewarded).
    Normal,
    /// Drift opposite to volatility (volatile assets fall).
    Crisis,
}

/// One segment of a synthetic market.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub regime: Regime,
    pub days: usize,
}

/// `d + 1` assets with one common factor and idiosyncratic noise. Asset `j`
/// has volatility scale `s_j` spread evenly over `[vol_low, vol_high]`; its
/// daily drift is `0`, `+drift * s_j` or `-drift * s_j` depending on the regime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticMarket {
    pub assets: usize,
    pub drift: f64,
    pub factor_weight: f64,
    pub vol_low: f64,
    pub vol_high: f64,
    pub seed: u64,
    pub start: NaiveDate,
}

impl SyntheticMarket {
    pub fn new(assets: usize, seed: u64) -> Self {
        SyntheticMarket {
            assets,
            drift: 0.1,
            factor_weight: 0.3,
            vol_low: 0.005,
            vol_high: 0.03,
            seed,
            start: NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date"),
        }
    }

    fn scale(&self, j: usize) -> f64 {
        let t = if self.assets > 1 {
            j as f64 / (self.assets - 1) as f64
        } else {
            0.0
        };
        self.vol_low + (self.vol_high - self.vol_low) * t
    }

    /// Weekday dates starting at `start`.
    fn dates(&self, n: usize) -> Vec<NaiveDate> {
        let mut out = Vec::with_capacity(n);
        let mut d = self.start;
        while out.len() < n {
            if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
                out.push(d);
            }
            d = d.succ_opt().expect("date in range");
        }
        out
    }

    pub fn generate(&self, segments: &[Segment]) -> Result<ReturnsMatrix> {
        let total: usize = segments.iter().map(|s| s.days).sum();
        let mut rng = stream_rng(self.seed, 0x5e9_0000);
        let mut rows = Vec::with_capacity(total);
        for seg in segments {
            let sign = match seg.regime {
                Regime::Neutral => 0.0,
                Regime::Normal => 1.0,
                Regime::Crisis => -1.0,
            };
            for _ in 0..seg.days {
                let f: f64 = rng.sample(StandardNormal);
                let row: Vec<f64> = (0..self.assets)
                    .map(|j| {
                        let s = self.scale(j);
                        let e: f64 = rng.sample(StandardNormal);
                        let noise = self.factor_weight * f + (1.0 - self.factor_weight) * e;
                        (sign * self.drift * s + s * noise).max(-0.99)
                    })
                    .collect();
                rows.push(row);
            }
        }
        let names = (0..self.assets).map(|j| format!("S{j:02}")).collect();
        ReturnsMatrix::new(self.dates(total), names, rows)
    }
}
