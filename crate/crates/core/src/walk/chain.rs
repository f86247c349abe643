use rand::Rng;

use super::Ball;
use crate::error::{Error, Result};
use crate::geometry::{contains, dot, Body, Side};
use crate::rng::StreamRng;

/// Steps between full recomputations of the cached constraint values.
const REFRESH_EVERY: u64 = 4096;

/// Cached `g = C (x - c)` and `f = (x - c)^T C (x - c)` for one ellipsoid.
#[derive(Debug, Clone)]
struct Quad {
    /// Column-major copy of `C`.
    matrix: Vec<f64>,
    center: Vec<f64>,
    level: f64,
    side: Side,
    g: Vec<f64>,
    f: f64,
}

impl Quad {
    fn refresh(&mut self, x: &[f64]) {
        let d = x.len();
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, b)| a - b).collect();
        for i in 0..d {
            self.g[i] = (0..d).map(|j| self.matrix[j * d + i] * y[j]).sum();
        }
        self.f = dot(&y, &self.g);
    }

    /// Chord of the ray `x + t e_k` allowed by this constraint, intersected
    /// with `(lo, hi)`.
    fn clip(&self, k: usize, d: usize, lo: &mut f64, hi: &mut f64) {
        let a = self.matrix[k * d + k];
        let b = self.g[k];
        let c = self.f - self.level;
        let disc = b * b - a * c;
        match self.side {
            Side::Inside => {
                let (r1, r2) = roots(a, b, disc.max(0.0));
                *lo = lo.max(r1);
                *hi = hi.min(r2);
            }
            Side::Outside => {
                if disc <= 0.0 {
                    return;
                }
                let (r1, r2) = roots(a, b, disc);
                if r1 > 0.0 {
                    *hi = hi.min(r1);
                } else if r2 < 0.0 {
                    *lo = lo.max(r2);
                }
            }
        }
    }

    fn advance(&mut self, k: usize, d: usize, t: f64) {
        let col = &self.matrix[k * d..(k + 1) * d];
        self.f += t * (2.0 * self.g[k] + t * col[k]);
        for (g, c) in self.g.iter_mut().zip(col) {
            *g += t * c;
        }
    }
}

/// Ordered roots of `a t^2 + 2 b t + c` given `disc = b^2 - a c >= 0`.
fn roots(a: f64, b: f64, disc: f64) -> (f64, f64) {
    let s = disc.sqrt();
    let q = if b >= 0.0 { -(b + s) } else { -(b - s) };
    if q == 0.0 {
        return (0.0, 0.0);
    }
    let c = (b * b - disc) / a;
    let (r1, r2) = (q / a, c / q);
    if r1 <= r2 {
        (r1, r2)
    } else {
        (r2, r1)
    }
}

/// A coordinate-direction hit-and-run chain inside a body, optionally
/// intersected with a ball.
#[derive(Debug, Clone)]
pub struct WalkState<'a> {
    body: &'a Body,
    x: Vec<f64>,
    sum: f64,
    lin: Vec<f64>,
    quads: Vec<Quad>,
    ball: Option<Ball>,
    dist2: f64,
    rng: StreamRng,
    steps: u64,
}

impl<'a> WalkState<'a> {
    /// Starts a chain at `start`, which must lie inside the body and the ball.
    pub fn new(
        body: &'a Body,
        start: Vec<f64>,
        ball: Option<Ball>,
        rng: StreamRng,
    ) -> Result<Self> {
        if start.len() != body.dim() {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                got: start.len(),
            });
        }
        if !contains(body, &start) {
            return Err(Error::ContractViolation(
                "walk start point is outside the body".into(),
            ));
        }
        let d = body.dim();
        let quads = body
            .ellipsoids()
            .iter()
            .map(|(e, side)| Quad {
                matrix: e.matrix().as_slice().to_vec(),
                center: e.center().to_vec(),
                level: e.level(),
                side: *side,
                g: vec![0.0; d],
                f: 0.0,
            })
            .collect();
        let mut state = WalkState {
            body,
            x: start,
            sum: 0.0,
            lin: vec![0.0; body.halfspaces().len()],
            quads,
            ball: None,
            dist2: 0.0,
            rng,
            steps: 0,
        };
        state.set_ball(ball)?;
        state.refresh();
        Ok(state)
    }

    /// Replaces the bounding ball; the current point must lie inside it.
    pub fn set_ball(&mut self, ball: Option<Ball>) -> Result<()> {
        if let Some(b) = &ball {
            let dist2 = sq_dist(&self.x, &b.center);
            if dist2 > b.radius * b.radius * (1.0 + 1e-12) {
                return Err(Error::ContractViolation(
                    "walk point is outside the bounding ball".into(),
                ));
            }
        }
        self.ball = ball;
        self.refresh();
        Ok(())
    }

    fn refresh(&mut self) {
        self.sum = self.x.iter().sum();
        for (v, h) in self.lin.iter_mut().zip(self.body.halfspaces()) {
            *v = dot(&h.normal, &self.x);
        }
        for q in &mut self.quads {
            q.refresh(&self.x);
        }
        if let Some(b) = &self.ball {
            self.dist2 = sq_dist(&self.x, &b.center);
        }
    }

    pub fn point(&self) -> &[f64] {
        &self.x
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Squared distance from the current point to the ball center.
    pub fn ball_dist2(&self) -> f64 {
        self.dist2
    }

    /// `(t_minus, t_plus)` such that `x + t e_k` stays inside for `t` between them.
    pub fn chord(&self, k: usize) -> (f64, f64) {
        let d = self.x.len();
        let mut lo = -self.x[k];
        let mut hi = 1.0 - self.sum;
        for (h, v) in self.body.halfspaces().iter().zip(&self.lin) {
            let a = h.normal[k];
            if a != 0.0 {
                let t = (h.offset - v) / a;
                if a > 0.0 {
                    hi = hi.min(t);
                } else {
                    lo = lo.max(t);
                }
            }
        }
        for q in &self.quads {
            q.clip(k, d, &mut lo, &mut hi);
        }
        if let Some(b) = &self.ball {
            let bk = self.x[k] - b.center[k];
            let c = self.dist2 - b.radius * b.radius;
            let (r1, r2) = roots(1.0, bk, (bk * bk - c).max(0.0));
            lo = lo.max(r1);
            hi = hi.min(r2);
        }
        (lo.min(0.0), hi.max(0.0))
    }

    /// Moves along coordinate `k` by `t`.
    fn advance(&mut self, k: usize, t: f64) {
        let d = self.x.len();
        if let Some(b) = &self.ball {
            self.dist2 += t * (2.0 * (self.x[k] - b.center[k]) + t);
        }
        self.x[k] += t;
        self.sum += t;
        for (v, h) in self.lin.iter_mut().zip(self.body.halfspaces()) {
            *v += h.normal[k] * t;
        }
        for q in &mut self.quads {
            q.advance(k, d, t);
        }
    }

    /// One hit-and-run step along a uniformly chosen coordinate.
    pub fn step(&mut self) {
        let d = self.x.len();
        let k = self.rng.gen_range(0..d);
        let (lo, hi) = self.chord(k);
        let u: f64 = self.rng.gen();
        let t = lo + u * (hi - lo);
        if t.is_finite() {
            self.advance(k, t);
        }
        self.steps += 1;
        if self.steps.is_multiple_of(REFRESH_EVERY) {
            self.refresh();
        }
    }

    pub fn walk(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Endpoints of the chord through `p` along coordinate `k`.
///
/// Keeps the largest negative and smallest positive crossing over all
/// constraints; an excluded ellipsoid whose quadratic has no real roots does
/// not restrict the ray.
pub fn ray_body_intersection(p: &[f64], k: usize, body: &Body) -> Result<(f64, f64)> {
    if k >= body.dim() {
        return Err(Error::invalid(format!(
            "coordinate {k} out of range for dimension {}",
            body.dim()
        )));
    }
    let state = WalkState::new(body, p.to_vec(), None, crate::rng::stream_rng(0, 0))?;
    Ok(state.chord(k))
}
