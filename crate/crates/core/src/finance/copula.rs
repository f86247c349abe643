use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{bisect_level_for_fraction, lawrence_volume, Family, LawrenceProblem};
use crate::geometry::{
    ln_factorial, standardize, Ellipsoid, Halfspace, HyperplaneFamily, Side, Simplex,
};
use crate::rng::with_thread_cap;
use crate::sampling::{
    joint_band_counts, quadratic_form_bary, Characteristic, SamplerConfig, UnitSimplexSampler,
};
use crate::walk::{volume_hnr, volume_nonconvex, WalkConfig};

/// Bisection tolerance on each cumulative level fraction.
pub const LEVEL_TOL: f64 = 1e-9;

/// Cartesian normal of the portfolio-return functional `R . lambda`:
/// `a_j = R_j - R_0`, with constant term `R_0`.
fn return_normal(r: &[f64]) -> Result<(Vec<f64>, f64)> {
    if r.len() < 2 {
        return Err(Error::invalid("need at least two asset returns"));
    }
    let a: Vec<f64> = r[1..].iter().map(|v| v - r[0]).collect();
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::Data(
            "all assets have the same compound return; the return axis is constant".into(),
        ));
    }
    Ok((a, r[0]))
}

/// Parallel hyperplanes cutting the simplex into `m` bands of equal volume
/// along the portfolio return `R . lambda`, in Cartesian coordinates.
pub fn hyperplane_levels(normal: &[f64], m: usize) -> Result<HyperplaneFamily> {
    if m < 2 {
        return Err(Error::invalid("need at least two bands"));
    }
    let (a, _) = return_normal(normal)?;
    let mut offsets = Vec::with_capacity(m - 1);
    for i in 1..m {
        let s = bisect_level_for_fraction(&a, i as f64 / m as f64, LEVEL_TOL)?;
        if s.warning {
            return Err(Error::numerical(format!(
                "level {i}/{m} reached fraction {} only",
                s.fraction
            )));
        }
        offsets.push(s.level);
    }
    HyperplaneFamily::new(a, offsets)
}

/// Levels `c_1 < ... < c_{m-1}` of `lambda^T C lambda` at the empirical
/// `i/m`-quantiles of `n` uniform simplex points.
pub fn ellipsoid_levels(
    c: &DMatrix<f64>,
    m: usize,
    n: usize,
    cfg: &SamplerConfig,
) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::invalid("need at least two bands"));
    }
    if n < 100 * m {
        return Err(Error::invalid(format!(
            "need at least {} samples for {m} bands, got {n}",
            100 * m
        )));
    }
    if c.nrows() != cfg.dimension + 1 || c.ncols() != c.nrows() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dimension + 1,
            got: c.nrows(),
        });
    }
    let mut sampler = UnitSimplexSampler::new(cfg)?;
    let mut x = vec![0.0; cfg.dimension];
    let mut vals: Vec<f64> = (0..n)
        .map(|_| {
            sampler.fill(&mut x);
            quadratic_form_bary(c, &x)
        })
        .collect();
    vals.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = (1..m).map(|i| vals[(i * n).div_ceil(m) - 1]).collect();
    levels.dedup();
    if levels.len() != m - 1 {
        return Err(Error::Data(
            "quadratic form takes too few distinct values for the band count".into(),
        ));
    }
    Ok(levels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    Linear,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaAxis {
    pub kind: AxisKind,
    pub levels: Vec<f64>,
}

impl CopulaAxis {
    pub fn describe(c: &Characteristic) -> Self {
        CopulaAxis {
            kind: match c {
                Characteristic::Linear(_) => AxisKind::Linear,
                Characteristic::Quadratic { .. } => AxisKind::Quadratic,
            },
            levels: c.levels().to_vec(),
        }
    }
}

/// How cell masses are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaMethod {
    /// Uniform simplex points assigned to cells.
    Sampling,
    /// Exact per-cell volumes; both axes must be linear.
    Lawrence,
    /// Random-walk per-cell volumes.
    Hnr,
}

impl std::str::FromStr for CopulaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampling" | "rejection" => Ok(CopulaMethod::Sampling),
            "lawrence" => Ok(CopulaMethod::Lawrence),
            "hnr" => Ok(CopulaMethod::Hnr),
            _ => Err(Error::invalid(format!(
                "unknown copula method '{s}' (sampling, lawrence, hnr)"
            ))),
        }
    }
}

/// `m x m` cell masses, rows along the first axis, columns along the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaGrid {
    pub m: usize,
    /// Row-major masses summing to 1.
    pub mass: Vec<f64>,
    /// Sample size behind the masses, when sampled.
    pub samples: Option<usize>,
    pub method: CopulaMethod,
    pub axes: [CopulaAxis; 2],
}

impl CopulaGrid {
    pub fn from_mass(
        m: usize,
        mass: Vec<f64>,
        axes: [CopulaAxis; 2],
        method: CopulaMethod,
    ) -> Result<Self> {
        if mass.len() != m * m {
            return Err(Error::invalid(format!(
                "expected {} cells, got {}",
                m * m,
                mass.len()
            )));
        }
        if mass.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::invalid("cell masses must be nonnegative"));
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("copula has no mass"));
        }
        Ok(CopulaGrid {
            m,
            mass: mass.into_iter().map(|v| v / total).collect(),
            samples: None,
            method,
            axes,
        })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.m + j]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.mass.chunks(self.m).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.m)
            .map(|j| (0..self.m).map(|i| self.at(i, j)).sum())
            .collect()
    }

    /// Mirror about the main diagonal.
    pub fn transposed(&self) -> Self {
        let m = self.m;
        let mut g = self.clone();
        for i in 0..m {
            for j in 0..m {
                g.mass[i * m + j] = self.at(j, i);
            }
        }
        g.axes = [self.axes[1].clone(), self.axes[0].clone()];
        g
    }

    /// Writes the grid as `m` CSV rows of `m` masses.
    pub fn write_csv(&self, writer: impl std::io::Write) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(writer);
        for row in self.mass.chunks(self.m) {
            w.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Copula of two characteristics from `n` uniform simplex points.
pub fn build_copula(
    axis1: &Characteristic,
    axis2: &Characteristic,
    n: usize,
    cfg: &SamplerConfig,
) -> Result<CopulaGrid> {
    let m = axis1.bands();
    if axis2.bands() != m {
        return Err(Error::invalid(format!(
            "axes have {} and {} bands",
            m,
            axis2.bands()
        )));
    }
    if n == 0 {
        return Err(Error::invalid("copula needs n >= 1 samples"));
    }
    let counts = joint_band_counts(n, axis1, axis2, cfg)?;
    let mass = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(CopulaGrid {
        m,
        mass,
        samples: Some(n),
        method: CopulaMethod::Sampling,
        axes: [CopulaAxis::describe(axis1), CopulaAxis::describe(axis2)],
    })
}

/// Copula with per-cell volumes from the exact or random-walk methods.
///
/// Intended for small dimension and band counts; the sampling method is
/// [`build_copula`].
pub fn build_copula_with(
    method: CopulaMethod,
    axis1: &Characteristic,
    axis2: &Characteristic,
    n: usize,
    cfg: &SamplerConfig,
    walk: &WalkConfig,
) -> Result<CopulaGrid> {
    match method {
        CopulaMethod::Sampling => build_copula(axis1, axis2, n, cfg),
        CopulaMethod::Lawrence => lawrence_copula(axis1, axis2),
        CopulaMethod::Hnr => hnr_copula(axis1, axis2, walk),
    }
}

fn lawrence_copula(axis1: &Characteristic, axis2: &Characteristic) -> Result<CopulaGrid> {
    let (Characteristic::Linear(f1), Characteristic::Linear(f2)) = (axis1, axis2) else {
        return Err(Error::Unsupported(
            "exact copula cells need two hyperplane axes".into(),
        ));
    };
    let m = axis1.bands();
    if axis2.bands() != m {
        return Err(Error::invalid("axes differ in band count"));
    }
    let d = f1.normal().len();
    let bound = |levels: &[f64], i: usize| -> Option<f64> { (i < levels.len()).then(|| levels[i]) };
    // cumulative fractions F[i][j] = vol{a.x <= z_i, b.x <= w_j} * d!
    let idx: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).collect();
    let cum: Vec<Result<f64>> = with_thread_cap(|| {
        idx.par_iter()
            .map(|&(i, j)| {
                let mut fams = Vec::new();
                if let Some(z) = bound(f1.offsets(), i) {
                    fams.push(Family {
                        normal: f1.normal().to_vec(),
                        lower: None,
                        upper: Some(z),
                    });
                }
                if let Some(w) = bound(f2.offsets(), j) {
                    fams.push(Family {
                        normal: f2.normal().to_vec(),
                        lower: None,
                        upper: Some(w),
                    });
                }
                if fams.is_empty() {
                    return Ok(1.0);
                }
                let p = LawrenceProblem::<f64>::new(d, fams)?;
                Ok(lawrence_volume(&p, None, 0)?.value * ln_factorial(d).exp())
            })
            .collect()
    });
    let mut f = vec![vec![0.0; m + 1]; m + 1];
    for (&(i, j), v) in idx.iter().zip(cum) {
        f[i + 1][j + 1] = v?;
    }
    let mut mass = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let v = f[i + 1][j + 1] - f[i][j + 1] - f[i + 1][j] + f[i][j];
            mass[i * m + j] = v.max(0.0);
        }
    }
    CopulaGrid::from_mass(
        m,
        mass,
        [CopulaAxis::describe(axis1), CopulaAxis::describe(axis2)],
        CopulaMethod::Lawrence,
    )
}

/// Constraints of band `i` along one axis.
fn band_constraints(
    c: &Characteristic,
    i: usize,
) -> Result<(Vec<Halfspace>, Vec<(Ellipsoid, Side)>)> {
    let levels = c.levels();
    let lo = (i > 0).then(|| levels[i - 1]);
    let hi = (i < levels.len()).then(|| levels[i]);
    match c {
        Characteristic::Linear(f) => {
            let mut hs = Vec::new();
            if let Some(z) = hi {
                hs.push(Halfspace::new(f.normal().to_vec(), z)?);
            }
            if let Some(z) = lo {
                hs.push(Halfspace::new(f.normal().iter().map(|v| -v).collect(), -z)?);
            }
            Ok((hs, Vec::new()))
        }
        Characteristic::Quadratic { matrix, .. } => {
            let mut es = Vec::new();
            if let Some(z) = hi {
                es.push((Ellipsoid::centered(matrix.clone(), z)?, Side::Inside));
            }
            if let Some(z) = lo {
                es.push((Ellipsoid::centered(matrix.clone(), z)?, Side::Outside));
            }
            Ok((Vec::new(), es))
        }
    }
}

fn hnr_copula(
    axis1: &Characteristic,
    axis2: &Characteristic,
    walk: &WalkConfig,
) -> Result<CopulaGrid> {
    let m = axis1.bands();
    if axis2.bands() != m {
        return Err(Error::invalid("axes differ in band count"));
    }
    let d = axis1.dim();
    let unit = Simplex::unit(d);
    let mut mass = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            let (mut hs, mut es) = band_constraints(axis1, i)?;
            let (h2, e2) = band_constraints(axis2, j)?;
            hs.extend(h2);
            es.extend(e2);
            if es.iter().filter(|(_, s)| *s == Side::Outside).count() > 1 {
                return Err(Error::Unsupported(
                    "random-walk cells allow one quadratic axis".into(),
                ));
            }
            let (body, _) = match standardize(&unit, &hs, &es) {
                Ok(b) => b,
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            };
            let cfg = WalkConfig {
                seed: walk.seed.wrapping_add((i * m + j) as u64),
                ..walk.clone()
            };
            let est = if body.is_convex() {
                volume_hnr(&body, &cfg)
            } else {
                volume_nonconvex(&body, &cfg)
            };
            mass[i * m + j] = match est {
                Ok(e) if e.value.is_finite() => e.value * ln_factorial(d).exp(),
                Ok(_) | Err(Error::Infeasible(_)) => 0.0,
                Err(e) => return Err(e),
            };
        }
    }
    CopulaGrid::from_mass(
        m,
        mass,
        [CopulaAxis::describe(axis1), CopulaAxis::describe(axis2)],
        CopulaMethod::Hnr,
    )
}

/// Ratio of the down-diagonal band mass to the up-diagonal band mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandIndicator {
    /// `down / up`; `+inf` when the up band is empty.
    pub value: f64,
    pub up: f64,
    pub down: f64,
    /// The up band carries no mass.
    pub unbounded: bool,
}

/// Cell `(i, j)` is in the up band when `|i - j| <= w` and in the down band
/// when `|i + j - (m - 1)| <= w`, with `w = floor(band_width * m)`. Cells in
/// both bands count for neither.
pub fn diagonal_band_indicator(copula: &CopulaGrid, band_width: f64) -> Result<BandIndicator> {
    if !(band_width > 0.0 && band_width < 0.5) {
        return Err(Error::invalid(format!(
            "band width must lie in (0, 0.5), got {band_width}"
        )));
    }
    let m = copula.m as i64;
    let w = (band_width * copula.m as f64).floor() as i64;
    let (mut up, mut down) = (0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            let in_up = (i - j).abs() <= w;
            let in_down = (i + j - (m - 1)).abs() <= w;
            let v = copula.at(i as usize, j as usize);
            match (in_up, in_down) {
                (true, false) => up += v,
                (false, true) => down += v,
                _ => {}
            }
        }
    }
    let unbounded = up == 0.0;
    Ok(BandIndicator {
        value: if unbounded { f64::INFINITY } else { down / up },
        up,
        down,
        unbounded,
    })
}
