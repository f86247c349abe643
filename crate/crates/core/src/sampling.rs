//! Uniform simplex samplers, band assignment, and rejection volume estimates.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dot, Body, HyperplaneFamily, Simplex};
use crate::rng::{open_unit, stream_rng, with_thread_cap, StreamRng};

/// Largest value the sorted-integer sampler draws from.
pub const SORTED_K: u64 = (1u64 << 63) - 1;

/// Points per random stream in the parallel estimators.
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    /// Normalised unit exponentials.
    #[default]
    Exponential,
    /// Spacings of sorted distinct integers in `1..K`.
    SortedIntegers,
}

impl std::str::FromStr for SamplerMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(SamplerMethod::Exponential),
            "sorted" | "sorted_integers" => Ok(SamplerMethod::SortedIntegers),
            _ => Err(Error::invalid(format!("unknown sampler '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub seed: u64,
    pub dimension: usize,
    /// Base stream id; parallel routines derive their own ids from it.
    pub stream: u64,
}

impl SamplerConfig {
    pub fn new(dimension: usize, seed: u64) -> Self {
        SamplerConfig {
            method: SamplerMethod::Exponential,
            seed,
            dimension,
            stream: 0,
        }
    }

    pub fn with_method(mut self, method: SamplerMethod) -> Self {
        self.method = method;
        self
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(Error::invalid("sampler dimension must be at least 1"));
        }
        Ok(())
    }

    fn substream(&self, i: u64) -> u64 {
        (self.stream << 32) ^ i
    }
}

/// A stateful uniform sampler on the full-dimensional unit simplex.
pub struct UnitSimplexSampler {
    rng: StreamRng,
    method: SamplerMethod,
    d: usize,
    scratch: Vec<u64>,
}

impl UnitSimplexSampler {
    pub fn new(cfg: &SamplerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self::on_stream(cfg, cfg.stream))
    }

    fn on_stream(cfg: &SamplerConfig, stream: u64) -> Self {
        UnitSimplexSampler {
            rng: stream_rng(cfg.seed, stream),
            method: cfg.method,
            d: cfg.dimension,
            scratch: Vec::with_capacity(cfg.dimension),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Writes the next point into `out` (length d).
    pub fn fill(&mut self, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.d);
        match self.method {
            SamplerMethod::Exponential => {
                let mut total = -open_unit(&mut self.rng).ln();
                for x in out.iter_mut() {
                    *x = -open_unit(&mut self.rng).ln();
                    total += *x;
                }
                let inv = 1.0 / total;
                out.iter_mut().for_each(|x| *x *= inv);
            }
            SamplerMethod::SortedIntegers => {
                let s = &mut self.scratch;
                loop {
                    s.clear();
                    s.extend((0..self.d).map(|_| self.rng.gen_range(1..SORTED_K)));
                    s.sort_unstable();
                    if s.windows(2).all(|w| w[0] != w[1]) {
                        break;
                    }
                }
                let k = SORTED_K as f64;
                let mut prev = 0u64;
                for (x, &v) in out.iter_mut().zip(s.iter()) {
                    *x = (v - prev) as f64 / k;
                    prev = v;
                }
            }
        }
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let mut p = vec![0.0; self.d];
        self.fill(&mut p);
        p
    }
}

/// `n` uniform points of the full-dimensional unit simplex in R^d.
pub fn sample_unit_simplex(n: usize, cfg: &SamplerConfig) -> Result<Vec<Vec<f64>>> {
    let mut s = UnitSimplexSampler::new(cfg)?;
    Ok((0..n).map(|_| s.next_point()).collect())
}

/// `n` uniform points of an arbitrary simplex, mapped from the unit simplex.
pub fn sample_simplex(n: usize, simplex: &Simplex, cfg: &SamplerConfig) -> Result<Vec<Vec<f64>>> {
    if cfg.dimension != simplex.dim() {
        return Err(Error::DimensionMismatch {
            expected: simplex.dim(),
            got: cfg.dimension,
        });
    }
    let pts = sample_unit_simplex(n, cfg)?;
    if simplex.is_unit() {
        return Ok(pts);
    }
    Ok(pts.iter().map(|y| simplex.map().apply(y)).collect())
}

/// Rows `(error, m1, m2, confidence)`: `N = m1 * 10^(m2 + order)`.
const ERROR_TABLE: [(f64, u64, u32, f64); 10] = [
    (0.01, 4, 4, 0.955),
    (0.02, 9, 3, 0.942),
    (0.03, 4, 3, 0.942),
    (0.04, 4, 3, 0.972),
    (0.05, 2, 3, 0.975),
    (0.06, 1, 3, 0.942),
    (0.07, 8, 2, 0.952),
    (0.08, 6, 2, 0.951),
    (0.09, 5, 2, 0.956),
    (0.10, 4, 2, 0.955),
];

/// Sample count and confidence for a relative error `e` when `p` has order
/// `p_order = ceil(-log10 p)`. Errors between rows use the next stricter row.
pub fn required_samples(e: f64, p_order: u32) -> Result<(u64, f64)> {
    if !(0.01 - 1e-12..=0.10 + 1e-12).contains(&e) {
        return Err(Error::invalid(format!(
            "target error {e} outside [0.01, 0.10]"
        )));
    }
    let &(_, m1, m2, pr) = ERROR_TABLE
        .iter()
        .rev()
        .find(|row| row.0 <= e + 1e-12)
        .expect("e >= first row");
    let n = 10u64
        .checked_pow(m2 + p_order)
        .and_then(|p| p.checked_mul(m1))
        .ok_or_else(|| Error::invalid(format!("p order {p_order} overflows the sample count")))?;
    Ok((n, pr))
}

/// `ceil(-log10 p)` with `p` floored at 1e-5.
pub fn p_order(p: f64) -> u32 {
    (-p.max(1e-5).log10() - 1e-9).ceil().max(0.0) as u32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectionEstimate {
    pub volume_fraction: f64,
    pub hits: u64,
    pub trials: u64,
    pub abs_volume: Option<f64>,
    pub std_error: f64,
    /// No sample landed in the body.
    pub below_resolution: bool,
}

impl RejectionEstimate {
    fn from_counts(hits: u64, trials: u64, reference_volume: Option<f64>) -> Self {
        let p = hits as f64 / trials as f64;
        RejectionEstimate {
            volume_fraction: p,
            hits,
            trials,
            abs_volume: reference_volume.map(|v| p * v),
            std_error: (p * (1.0 - p) / trials as f64).sqrt(),
            below_resolution: hits == 0,
        }
    }
}

/// Runs `f(sampler, count)` over fixed-size chunks on independent streams and
/// returns the results in chunk order. The split does not depend on the thread count.
fn chunked<T: Send>(
    n: usize,
    cfg: &SamplerConfig,
    f: impl Fn(&mut UnitSimplexSampler, usize) -> T + Sync + Send,
) -> Vec<T> {
    let chunks = n.div_ceil(CHUNK);
    with_thread_cap(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let len = CHUNK.min(n - c * CHUNK);
                let mut s = UnitSimplexSampler::on_stream(cfg, cfg.substream(c as u64));
                f(&mut s, len)
            })
            .collect()
    })
}

/// Fraction of `n` uniform simplex points inside `body`.
///
/// `reference_volume` (usually `1/d!` times the simplex scale) turns the
/// fraction into an absolute volume.
pub fn rejection_volume(
    body: &Body,
    n: usize,
    cfg: &SamplerConfig,
    reference_volume: Option<f64>,
) -> Result<RejectionEstimate> {
    cfg.validate()?;
    if cfg.dimension != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: cfg.dimension,
        });
    }
    if n == 0 {
        return Err(Error::invalid("rejection sampling needs n >= 1"));
    }
    let hits: u64 = chunked(n, cfg, |s, len| {
        let mut x = vec![0.0; s.dim()];
        let mut h = 0u64;
        for _ in 0..len {
            s.fill(&mut x);
            h += body.satisfies_constraints(&x) as u64;
        }
        h
    })
    .into_iter()
    .sum();
    Ok(RejectionEstimate::from_counts(
        hits,
        n as u64,
        reference_volume,
    ))
}

/// Rejection estimate sized from the error table: a pilot of `10^5` points
/// fixes the order of `p`, then the full run uses a fresh stream.
pub fn rejection_volume_for_error(
    body: &Body,
    target_error: f64,
    cfg: &SamplerConfig,
    reference_volume: Option<f64>,
) -> Result<(RejectionEstimate, f64)> {
    let pilot = rejection_volume(body, 100_000, cfg, None)?;
    let (n, pr) = required_samples(target_error, p_order(pilot.volume_fraction))?;
    let main = cfg.clone().with_stream(cfg.stream.wrapping_add(1));
    let n = usize::try_from(n).map_err(|_| Error::invalid("sample count exceeds usize"))?;
    Ok((rejection_volume(body, n, &main, reference_volume)?, pr))
}

/// Index of the band containing `value`: the number of levels strictly below it.
///
/// With levels `z_0 < ... < z_{l-1}` there are `l + 1` bands; a value equal to
/// `z_i` lands in band `i`, the band just below that level.
pub fn band_index(levels: &[f64], value: f64) -> usize {
    levels.partition_point(|&z| z < value)
}

/// A scalar portfolio characteristic together with its band levels.
#[derive(Debug, Clone)]
pub enum Characteristic {
    /// `a . x` on Cartesian unit-simplex points.
    Linear(HyperplaneFamily),
    /// `lambda^T C lambda` with `lambda = (1 - sum x, x)`.
    Quadratic {
        matrix: DMatrix<f64>,
        levels: Vec<f64>,
    },
}

impl Characteristic {
    pub fn quadratic(matrix: DMatrix<f64>, levels: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid(
                "quadratic characteristic needs a square matrix",
            ));
        }
        if levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("levels must be strictly increasing"));
        }
        Ok(Characteristic::Quadratic { matrix, levels })
    }

    pub fn dim(&self) -> usize {
        match self {
            Characteristic::Linear(f) => f.normal().len(),
            Characteristic::Quadratic { matrix, .. } => matrix.nrows() - 1,
        }
    }

    pub fn levels(&self) -> &[f64] {
        match self {
            Characteristic::Linear(f) => f.offsets(),
            Characteristic::Quadratic { levels, .. } => levels,
        }
    }

    pub fn bands(&self) -> usize {
        self.levels().len() + 1
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Characteristic::Linear(f) => dot(f.normal(), x),
            Characteristic::Quadratic { matrix, .. } => quadratic_form_bary(matrix, x),
        }
    }

    pub fn band(&self, x: &[f64]) -> usize {
        band_index(self.levels(), self.evaluate(x))
    }
}

/// `lambda^T C lambda` for the barycentric point of Cartesian `x` in the unit simplex.
pub(crate) fn quadratic_form_bary(c: &DMatrix<f64>, x: &[f64]) -> f64 {
    let n = c.nrows();
    let l0 = 1.0 - x.iter().sum::<f64>();
    let lam = |i: usize| if i == 0 { l0 } else { x[i - 1] };
    let mut total = 0.0;
    for j in 0..n {
        let lj = lam(j);
        let col = c.column(j);
        let mut acc = col[j] * lj * 0.5;
        for i in 0..j {
            acc += col[i] * lam(i);
        }
        total += 2.0 * acc * lj;
    }
    total
}

/// Band histogram of `points` for one characteristic; counts sum to `points.len()`.
pub fn assign_to_bands(points: &[Vec<f64>], characteristic: &Characteristic) -> Vec<u64> {
    let mut counts = vec![0u64; characteristic.bands()];
    for p in points {
        counts[characteristic.band(p)] += 1;
    }
    counts
}

/// Joint band histogram of `n` fresh uniform points, row-major
/// `(bands(first), bands(second))`.
pub fn joint_band_counts(
    n: usize,
    first: &Characteristic,
    second: &Characteristic,
    cfg: &SamplerConfig,
) -> Result<Vec<u64>> {
    cfg.validate()?;
    if first.dim() != cfg.dimension || second.dim() != cfg.dimension {
        return Err(Error::DimensionMismatch {
            expected: cfg.dimension,
            got: first.dim().max(second.dim()),
        });
    }
    let (r, c) = (first.bands(), second.bands());
    let parts = chunked(n, cfg, |s, len| {
        let mut x = vec![0.0; s.dim()];
        let mut counts = vec![0u64; r * c];
        for _ in 0..len {
            s.fill(&mut x);
            counts[first.band(&x) * c + second.band(&x)] += 1;
        }
        counts
    });
    let mut total = vec![0u64; r * c];
    for part in parts {
        total.iter_mut().zip(part).for_each(|(t, p)| *t += p);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Halfspace;

    #[test]
    fn points_lie_in_simplex() {
        for method in [SamplerMethod::Exponential, SamplerMethod::SortedIntegers] {
            let cfg = SamplerConfig::new(7, 1).with_method(method);
            for p in sample_unit_simplex(1000, &cfg).unwrap() {
                assert!(p.iter().all(|&x| x >= 0.0));
                assert!(p.iter().sum::<f64>() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for method in [SamplerMethod::Exponential, SamplerMethod::SortedIntegers] {
            let cfg = SamplerConfig::new(4, 9).with_method(method);
            assert_eq!(
                sample_unit_simplex(50, &cfg).unwrap(),
                sample_unit_simplex(50, &cfg).unwrap()
            );
            let other = SamplerConfig::new(4, 10).with_method(method);
            assert_ne!(
                sample_unit_simplex(50, &cfg).unwrap(),
                sample_unit_simplex(50, &other).unwrap()
            );
        }
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(sample_unit_simplex(1, &SamplerConfig::new(0, 0)).is_err());
    }

    #[test]
    fn table_rows() {
        assert_eq!(required_samples(0.01, 2).unwrap(), (4_000_000, 0.955));
        assert_eq!(required_samples(0.10, 2).unwrap(), (40_000, 0.955));
        assert_eq!(required_samples(0.05, 3).unwrap(), (2_000_000, 0.975));
        assert_eq!(required_samples(0.055, 3).unwrap(), (2_000_000, 0.975));
        assert!(required_samples(0.005, 2).is_err());
        assert!(required_samples(0.2, 2).is_err());
    }

    #[test]
    fn p_orders() {
        assert_eq!(p_order(0.01), 2);
        assert_eq!(p_order(0.011), 2);
        assert_eq!(p_order(0.009), 3);
        assert_eq!(p_order(0.0), 5);
    }

    #[test]
    fn ties_go_to_lower_band() {
        let levels = [0.1, 0.5, 0.9];
        assert_eq!(band_index(&levels, 0.05), 0);
        assert_eq!(band_index(&levels, 0.1), 0);
        assert_eq!(band_index(&levels, 0.10000001), 1);
        assert_eq!(band_index(&levels, 0.5), 1);
        assert_eq!(band_index(&levels, 2.0), 3);
    }

    #[test]
    fn full_simplex_fraction_is_one() {
        let body = Body::simplex_only(6);
        let est =
            rejection_volume(&body, 10_000, &SamplerConfig::new(6, 3), Some(1.0 / 720.0)).unwrap();
        assert_eq!(est.volume_fraction, 1.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn corner_fraction_quarter() {
        let body = Body::new(
            2,
            vec![Halfspace::new(vec![1.0, 1.0], 0.5).unwrap()],
            vec![],
        )
        .unwrap();
        let est = rejection_volume(&body, 200_000, &SamplerConfig::new(2, 4), None).unwrap();
        assert!((est.volume_fraction - 0.25).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn empty_body_flagged() {
        let body = Body::new(
            3,
            vec![Halfspace::new(vec![1.0, 1.0, 1.0], -0.1).unwrap()],
            vec![],
        )
        .unwrap();
        let est = rejection_volume(&body, 1000, &SamplerConfig::new(3, 4), None).unwrap();
        assert!(est.below_resolution);
        assert_eq!(est.hits, 0);
    }

    #[test]
    fn quadratic_form_matches_dense() {
        let c = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, -0.1, 0.3, 1.0, 0.2, -0.1, 0.2, 1.5]);
        let x = [0.2, 0.5];
        let lam = nalgebra::DVector::from_column_slice(&[0.3, 0.2, 0.5]);
        let dense = (lam.transpose() * &c * &lam)[(0, 0)];
        assert!((quadratic_form_bary(&c, &x) - dense).abs() < 1e-15);
    }
}
