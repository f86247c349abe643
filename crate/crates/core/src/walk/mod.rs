//! Hit-and-run volume estimation for bodies cut by halfspaces and ellipsoids.

mod ball;
mod chain;

pub use ball::{
    chebyshev_ball_polytope, inscribed_ball_for_ellipsoid_body, inscribed_ball_socp, probes_inside,
    shrink_ball_init, tight_constraints, Ball, TIGHT_TOL,
};
pub use chain::{ray_body_intersection, WalkState};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Method, VolumeEstimate};
use crate::geometry::{contains, ln_factorial, Body, Ellipsoid, Side};
use crate::rng::{stream_rng, with_thread_cap};
use crate::sampling::{SamplerConfig, UnitSimplexSampler};
use chain::sq_dist;

/// Simplex draws spent looking for a point of a non-convex body.
pub const NONCONVEX_SAMPLE_BUDGET: u64 = 10_000_000;
/// Interior points collected before choosing the initial ball center.
const NONCONVEX_CANDIDATES: usize = 64;
const CHAIN_STREAM: u64 = 0x3a1c_0000;
const INIT_STREAM: u64 = 0x3a1d_0000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WalkConfig {
    /// Target relative error; sets the default number of points per phase.
    pub epsilon: f64,
    /// Steps between recorded points; `None` uses `ceil(ln d) + 10`.
    pub walk_length: Option<usize>,
    /// `None` uses `ceil(400 d ln d / epsilon^2)`.
    pub points_per_phase: Option<usize>,
    pub seed: u64,
    /// Independent chains sharing each phase's points.
    pub chains: usize,
    pub max_dimension_nonconvex: usize,
    pub allow_high_dim_nonconvex: bool,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            epsilon: 0.2,
            walk_length: None,
            points_per_phase: None,
            seed: 0,
            chains: 8,
            max_dimension_nonconvex: 35,
            allow_high_dim_nonconvex: false,
        }
    }
}

impl WalkConfig {
    pub fn new(seed: u64) -> Self {
        WalkConfig {
            seed,
            ..Default::default()
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_walk_length(mut self, w: usize) -> Self {
        self.walk_length = Some(w);
        self
    }

    pub fn with_points_per_phase(mut self, n: usize) -> Self {
        self.points_per_phase = Some(n);
        self
    }

    pub fn points_per_phase_for(&self, d: usize) -> usize {
        self.points_per_phase.unwrap_or_else(|| {
            let d = d as f64;
            let scale = 400.0 / (self.epsilon * self.epsilon);
            (scale * d * d.ln()).max(scale).ceil() as usize
        })
    }

    pub fn walk_length_for(&self, d: usize) -> usize {
        self.walk_length
            .unwrap_or_else(|| (d as f64).ln().ceil() as usize + 10)
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain is required"));
        }
        if self.walk_length == Some(0) || self.points_per_phase == Some(0) {
            return Err(Error::invalid(
                "walk length and points per phase must be positive",
            ));
        }
        Ok(())
    }
}

/// `ln` of the volume of a d-ball of radius `r`.
pub fn ln_ball_volume(d: usize, r: f64) -> f64 {
    let half_d = d as f64 / 2.0;
    let ln_gamma = if d.is_multiple_of(2) {
        ln_factorial(d / 2)
    } else {
        let n = d.div_ceil(2);
        ln_factorial(2 * n) + 0.5 * std::f64::consts::PI.ln()
            - n as f64 * 4f64.ln()
            - ln_factorial(n)
    };
    half_d * std::f64::consts::PI.ln() + d as f64 * r.ln() - ln_gamma
}

/// Largest distance from `c` to a vertex of the unit simplex.
fn enclosing_radius(body: &Body, c: &[f64]) -> f64 {
    body.simplex()
        .vertices()
        .iter()
        .map(|v| sq_dist(v, c))
        .fold(0.0, f64::max)
        .sqrt()
}

/// Radii `r 2^{i/d}` for `i = 0..m`, with the last one replaced by `big`.
fn phase_radii(d: usize, r: f64, big: f64) -> Vec<f64> {
    let m = if big > r {
        (d as f64 * (big / r).log2()).ceil().max(1.0) as usize
    } else {
        0
    };
    let mut radii: Vec<f64> = (0..m).map(|i| r * 2f64.powf(i as f64 / d as f64)).collect();
    radii.push(big.max(r));
    radii
}

/// Hits per phase for one chain: points of `K_i` that also lie in `K_{i-1}`.
fn run_chain(
    body: &Body,
    ball: &Ball,
    radii: &[f64],
    points: usize,
    walk_length: usize,
    seed: u64,
    chain: u64,
) -> Result<(Vec<u64>, u64)> {
    let rng = stream_rng(seed, CHAIN_STREAM + chain);
    let mut state = WalkState::new(body, ball.center.clone(), None, rng)?;
    let mut hits = Vec::with_capacity(radii.len() - 1);
    for w in radii.windows(2) {
        let (inner, outer) = (w[0], w[1]);
        state.set_ball(Some(Ball {
            center: ball.center.clone(),
            radius: outer,
        }))?;
        let inner2 = inner * inner;
        let mut count = 0u64;
        for _ in 0..points {
            state.walk(walk_length);
            if state.ball_dist2() <= inner2 {
                count += 1;
            }
        }
        hits.push(count);
    }
    Ok((hits, state.steps()))
}

/// Multiphase estimate over the ball sequence around `ball`.
fn multiphase(
    body: &Body,
    ball: &Ball,
    cfg: &WalkConfig,
    method: Method,
) -> Result<VolumeEstimate> {
    let d = body.dim();
    let n = cfg.points_per_phase_for(d);
    let w = cfg.walk_length_for(d);
    let big = enclosing_radius(body, &ball.center);
    let radii = phase_radii(d, ball.radius, big);
    let chains = cfg.chains.min(n);
    let share = |j: usize| n / chains + usize::from(j < n % chains);
    let runs: Vec<Result<(Vec<u64>, u64)>> = with_thread_cap(|| {
        (0..chains)
            .into_par_iter()
            .map(|j| run_chain(body, ball, &radii, share(j), w, cfg.seed, j as u64))
            .collect()
    });
    let mut hits = vec![0u64; radii.len() - 1];
    let mut total_steps = 0u64;
    for run in runs {
        let (h, s) = run?;
        for (a, b) in hits.iter_mut().zip(h) {
            *a += b;
        }
        total_steps += s;
    }
    let ratios: Vec<f64> = hits.iter().map(|&h| h as f64 / n as f64).collect();
    let zero_ratio = ratios.contains(&0.0);
    let log_value = if zero_ratio {
        f64::NAN
    } else {
        ln_ball_volume(d, ball.radius) - ratios.iter().map(|p| p.ln()).sum::<f64>()
    };
    let var: f64 = ratios
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| (1.0 - p) / (p * n as f64))
        .sum();
    Ok(VolumeEstimate {
        value: log_value.exp(),
        log_value,
        method,
        rel_std_error: Some(var.sqrt()),
        phase_ratios: ratios,
        points_per_phase: n,
        walk_length: w,
        total_steps,
        inscribed_radius: Some(ball.radius),
        enclosing_radius: Some(big),
        experimental: method == Method::Nonconvex,
        empty: false,
        zero_ratio,
    })
}

/// Volume of a convex body (unit-simplex frame) by multiphase hit-and-run.
pub fn volume_hnr(body: &Body, cfg: &WalkConfig) -> Result<VolumeEstimate> {
    cfg.validate()?;
    if !body.is_convex() {
        return Err(Error::Unsupported(
            "body excludes an ellipsoid; use the non-convex estimator".into(),
        ));
    }
    let ball = ball::convex_inscribed_ball(body)?;
    multiphase(body, &ball, cfg, Method::Hnr)
}

/// Lower bound on `min (x - c)^T C (x - c)` over the unit simplex, from
/// projected gradient descent and the Frank-Wolfe duality gap.
fn min_form_lower_bound(e: &Ellipsoid) -> f64 {
    let d = e.dim();
    let step = 1.0 / (2.0 * e.max_eigenvalue());
    let grad = |x: &[f64]| -> Vec<f64> {
        let y: Vec<f64> = x.iter().zip(e.center()).map(|(a, b)| a - b).collect();
        (0..d)
            .map(|i| 2.0 * (0..d).map(|j| e.matrix()[(i, j)] * y[j]).sum::<f64>())
            .collect()
    };
    let mut x = project_unit_simplex(e.center());
    let mut best = f64::NEG_INFINITY;
    for _ in 0..2000 {
        let g = grad(&x);
        let gx: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let gmin = g.iter().copied().fold(0.0, f64::min);
        best = best.max(e.form(&x) + gmin - gx);
        let moved: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        x = project_unit_simplex(&moved);
    }
    best
}

/// Euclidean projection onto `{x >= 0, sum x <= 1}`.
fn project_unit_simplex(y: &[f64]) -> Vec<f64> {
    let clipped: Vec<f64> = y.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= 1.0 {
        return clipped;
    }
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, v) in u.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    y.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn empty_estimate() -> VolumeEstimate {
    VolumeEstimate {
        value: 0.0,
        log_value: f64::NEG_INFINITY,
        method: Method::Nonconvex,
        rel_std_error: None,
        phase_ratios: Vec::new(),
        points_per_phase: 0,
        walk_length: 0,
        total_steps: 0,
        inscribed_radius: None,
        enclosing_radius: None,
        experimental: true,
        empty: true,
        zero_ratio: false,
    }
}

/// Volume of a shell body: the simplex and halfspaces, inside the outer
/// ellipsoids and outside one excluded concentric ellipsoid.
///
/// The walk is the convex one with chords cut at the excluded core. The start
/// point comes from uniform simplex draws; among the first hits the one with
/// the largest certified ball is kept and its ball is grown by
/// [`shrink_ball_init`]. Results are flagged experimental.
pub fn volume_nonconvex(body: &Body, cfg: &WalkConfig) -> Result<VolumeEstimate> {
    cfg.validate()?;
    let d = body.dim();
    if d > cfg.max_dimension_nonconvex && !cfg.allow_high_dim_nonconvex {
        return Err(Error::Unsupported(format!(
            "non-convex estimation is refused above dimension {} (got {d}); \
             set allow_high_dim_nonconvex to override",
            cfg.max_dimension_nonconvex
        )));
    }
    let vertices = body.simplex().vertices();
    let mut kept = Vec::new();
    for (e, side) in body.ellipsoids() {
        if *side == Side::Outside {
            if vertices.iter().all(|v| e.form(v) < e.level()) {
                return Ok(empty_estimate());
            }
            if min_form_lower_bound(e) > e.level() {
                continue;
            }
        }
        kept.push((e.clone(), *side));
    }
    let reduced = Body::new(d, body.halfspaces().to_vec(), kept)?;
    if reduced.is_convex() {
        let mut est = volume_hnr(&reduced, cfg)?;
        est.method = Method::Nonconvex;
        est.experimental = true;
        return Ok(est);
    }
    let sampler_cfg = SamplerConfig::new(d, cfg.seed).with_stream(INIT_STREAM);
    let mut sampler = UnitSimplexSampler::new(&sampler_cfg)?;
    let mut x = vec![0.0; d];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut found = 0;
    let mut drawn = 0u64;
    while drawn < NONCONVEX_SAMPLE_BUDGET && found < NONCONVEX_CANDIDATES {
        sampler.fill(&mut x);
        drawn += 1;
        if reduced.satisfies_constraints(&x) && contains(&reduced, &x) {
            found += 1;
            let r = reduced.certified_radius(&x);
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, x.clone()));
            }
        }
    }
    let Some((_, start)) = best else {
        return Ok(empty_estimate());
    };
    let ball = shrink_ball_init(&reduced, &start)?;
    multiphase(&reduced, &ball, cfg, Method::Nonconvex)
}
