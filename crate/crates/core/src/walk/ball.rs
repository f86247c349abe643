use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::chain::sq_dist;
use crate::error::{Error, Result};
use crate::geometry::{contains, dot, norm, Body, Halfspace, Side};
use crate::rng::stream_rng;

/// Constraint value treated as tight when certifying a Chebyshev ball.
pub const TIGHT_TOL: f64 = 1e-8;

const SHRINK_ITERATIONS: usize = 40;
const SHRINK_PROBES: usize = 100;
const MIN_RADIUS: f64 = 1e-12;
const DYKSTRA_SWEEPS: usize = 20_000;
const DYKSTRA_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        sq_dist(x, &self.center) <= self.radius * self.radius
    }
}

/// Largest ball inside `{x : a_i . x <= b_i}` by linear programming.
pub fn chebyshev_ball_polytope(halfspaces: &[Halfspace]) -> Result<Ball> {
    let d = halfspaces
        .first()
        .map(|h| h.dim())
        .ok_or_else(|| Error::invalid("no halfspaces given"))?;
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let xs: Vec<_> = (0..d)
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let r = lp.add_var(1.0, (0.0, f64::INFINITY));
    for h in halfspaces {
        if h.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: h.dim(),
            });
        }
        let mut row: Vec<_> = xs.iter().copied().zip(h.normal.iter().copied()).collect();
        row.push((r, norm(&h.normal)));
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, h.offset);
    }
    let sol = lp.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::Infeasible("polytope is empty".into()),
        minilp::Error::Unbounded => Error::invalid("polytope is unbounded"),
    })?;
    let center: Vec<f64> = xs.iter().map(|&v| sol[v]).collect();
    let radius = halfspaces
        .iter()
        .map(|h| h.slack(&center))
        .fold(f64::INFINITY, f64::min);
    if !(radius > 0.0) {
        return Err(Error::Infeasible("polytope has empty interior".into()));
    }
    Ok(Ball { center, radius })
}

/// Number of halfspaces within [`TIGHT_TOL`] of touching the ball.
pub fn tight_constraints(halfspaces: &[Halfspace], ball: &Ball) -> usize {
    halfspaces
        .iter()
        .filter(|h| (h.slack(&ball.center) - ball.radius).abs() <= TIGHT_TOL)
        .count()
}

/// Euclidean projection of `x0` onto `{x : a_i . x <= b_i}` by Dykstra's method.
fn project_polytope(normals: &[Vec<f64>], offsets: &[f64], x0: &[f64]) -> Vec<f64> {
    let d = x0.len();
    let m = normals.len();
    let mut x = x0.to_vec();
    let mut incr = vec![vec![0.0; d]; m];
    let mut y = vec![0.0; d];
    for _ in 0..DYKSTRA_SWEEPS {
        let mut moved = 0.0f64;
        for i in 0..m {
            for j in 0..d {
                y[j] = x[j] + incr[i][j];
            }
            let a = &normals[i];
            let excess = dot(a, &y) - offsets[i];
            let t = if excess > 0.0 {
                excess / dot(a, a)
            } else {
                0.0
            };
            for j in 0..d {
                let next = y[j] - t * a[j];
                incr[i][j] = y[j] - next;
                moved = moved.max((next - x[j]).abs());
                x[j] = next;
            }
        }
        if moved <= DYKSTRA_TOL {
            break;
        }
    }
    x
}

/// Largest ball inside a polytope and a second ball `outer`.
///
/// Bisects on the radius `r`: a radius is feasible when the projection of the
/// outer center onto the polytope shrunk by `r` lies within `r' - r` of it.
pub fn inscribed_ball_socp(halfspaces: &[Halfspace], outer: &Ball) -> Result<Ball> {
    let d = outer.dim();
    if halfspaces.iter().any(|h| h.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: halfspaces
                .iter()
                .map(|h| h.dim())
                .find(|&n| n != d)
                .unwrap_or(d),
        });
    }
    if !(outer.radius > 0.0) {
        return Err(Error::Infeasible("outer ball has no interior".into()));
    }
    let radius_at = |c: &[f64]| {
        halfspaces
            .iter()
            .map(|h| h.slack(c))
            .fold(outer.radius - sq_dist(c, &outer.center).sqrt(), f64::min)
    };
    if radius_at(&outer.center) >= outer.radius {
        return Ok(outer.clone());
    }
    let cheb = chebyshev_ball_polytope(halfspaces)?;
    if radius_at(&cheb.center) >= cheb.radius {
        return Ok(cheb);
    }
    let normals: Vec<Vec<f64>> = halfspaces.iter().map(|h| h.normal.clone()).collect();
    let norms: Vec<f64> = normals.iter().map(|a| norm(a)).collect();
    let feasible = |r: f64| -> Option<Vec<f64>> {
        let offsets: Vec<f64> = halfspaces
            .iter()
            .zip(&norms)
            .map(|(h, n)| h.offset - r * n)
            .collect();
        let y = project_polytope(&normals, &offsets, &outer.center);
        let gap = sq_dist(&y, &outer.center).sqrt();
        (gap <= outer.radius - r + 1e-12).then_some(y)
    };
    let mut best =
        feasible(0.0).ok_or_else(|| Error::Infeasible("polytope and ball do not meet".into()))?;
    let mut lo = 0.0;
    let mut hi = outer.radius.min(cheb.radius);
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match feasible(mid) {
            Some(y) => {
                lo = mid;
                best = y;
            }
            None => hi = mid,
        }
    }
    let radius = radius_at(&best);
    if !(radius > 0.0) {
        return Err(Error::Infeasible("intersection has empty interior".into()));
    }
    Ok(Ball {
        center: best,
        radius,
    })
}

/// An initial ball for the simplex cut by halfspaces and one ellipsoid.
///
/// Maps the ellipsoid to the unit ball, solves the single-cone problem there,
/// and maps the result back; the image is an ellipsoid whose largest
/// inscribed ball, centered at its center with radius scaled by the smallest
/// semi-axis, is returned. Falls back to [`shrink_ball_init`] when the probe
/// check fails.
pub fn inscribed_ball_for_ellipsoid_body(body: &Body) -> Result<Ball> {
    let d = body.dim();
    let (e, side) = match body.ellipsoids() {
        [one] => one,
        _ => {
            return Err(Error::Unsupported(
                "expected exactly one ellipsoid constraint".into(),
            ))
        }
    };
    if *side != Side::Inside {
        return Err(Error::Unsupported(
            "the ellipsoid must bound the body from outside".into(),
        ));
    }
    let polytope = body.polytope_halfspaces();
    if body.simplex().vertices().iter().all(|v| e.contains(v)) {
        return chebyshev_ball_polytope(&polytope);
    }
    let l = e.cholesky_lower();
    let s = e.level().sqrt();
    let mut mapped = Vec::with_capacity(polytope.len());
    for h in &polytope {
        let a = DVector::from_column_slice(&h.normal);
        let y = l
            .solve_lower_triangular(&a)
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        let normal: Vec<f64> = y.iter().map(|v| v * s).collect();
        if normal.iter().all(|&v| v == 0.0) {
            continue;
        }
        mapped.push(Halfspace {
            normal,
            offset: h.offset - dot(&h.normal, e.center()),
        });
    }
    let unit = Ball {
        center: vec![0.0; d],
        radius: 1.0,
    };
    let attempt = inscribed_ball_socp(&mapped, &unit).and_then(|u| {
        let uc = DVector::from_column_slice(&u.center);
        let z = l
            .transpose()
            .solve_upper_triangular(&uc)
            .ok_or_else(|| Error::numerical("singular Cholesky factor"))?;
        let center: Vec<f64> = z.iter().zip(e.center()).map(|(v, c)| c + s * v).collect();
        let radius = u.radius * s / e.max_eigenvalue().sqrt();
        Ok(Ball { center, radius })
    });
    match attempt {
        Ok(ball) if probes_inside(body, &ball) => Ok(ball),
        Ok(ball) if contains(body, &ball.center) => shrink_ball_init(body, &ball.center),
        _ => {
            let cheb = chebyshev_ball_polytope(&polytope)?;
            if contains(body, &cheb.center) {
                shrink_ball_init(body, &cheb.center)
            } else {
                Err(Error::numerical(
                    "no interior point found for the ellipsoid body",
                ))
            }
        }
    }
}

/// `center ± r e_k` are all in the body.
pub fn probes_inside(body: &Body, ball: &Ball) -> bool {
    let mut p = ball.center.clone();
    for k in 0..ball.dim() {
        for sign in [-1.0, 1.0] {
            p[k] = ball.center[k] + sign * ball.radius;
            let ok = contains(body, &p);
            p[k] = ball.center[k];
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Whether `B(p, r)` lies in the body. Linear constraints and the ellipsoids
/// whose certified bound already covers `r` are decided exactly; otherwise a
/// coordinate hit-and-run walk inside the ball checks that the chord
/// endpoints, which lie on the sphere, are in the body.
fn ball_is_inscribed(body: &Body, p: &[f64], r: f64, probe_stream: u64) -> bool {
    if body.polytope_halfspaces().iter().any(|h| h.slack(p) < r) {
        return false;
    }
    let uncertain: Vec<_> = body
        .ellipsoids()
        .iter()
        .filter(|(e, side)| {
            let gauge = e.form(p).max(0.0).sqrt();
            let s = e.level().sqrt();
            let room = match side {
                Side::Inside => s - gauge,
                Side::Outside => gauge - s,
            };
            room / e.max_eigenvalue().sqrt() < r
        })
        .collect();
    if uncertain.is_empty() {
        return true;
    }
    let inside = |y: &[f64]| {
        uncertain.iter().all(|(e, side)| match side {
            Side::Inside => e.form(y) <= e.level(),
            Side::Outside => e.form(y) >= e.level(),
        })
    };
    let d = p.len();
    let mut rng = stream_rng(0x5b_a11, probe_stream);
    let mut x = p.to_vec();
    let mut y = x.clone();
    for _ in 0..SHRINK_PROBES {
        let k = rng.gen_range(0..d);
        let off = sq_dist(&x, p) - (x[k] - p[k]).powi(2);
        let half = (r * r - off).max(0.0).sqrt();
        y.copy_from_slice(&x);
        for end in [p[k] - half, p[k] + half] {
            y[k] = end;
            if !inside(&y) {
                return false;
            }
        }
        x[k] = p[k] - half + 2.0 * half * rng.gen::<f64>();
    }
    true
}

/// Shrinks a ball around `interior_point` until it passes the inscribed test.
///
/// Bisects the radius between a certified inner radius and the distance to
/// the nearest linear facet.
pub fn shrink_ball_init(body: &Body, interior_point: &[f64]) -> Result<Ball> {
    if interior_point.len() != body.dim() {
        return Err(Error::DimensionMismatch {
            expected: body.dim(),
            got: interior_point.len(),
        });
    }
    if !contains(body, interior_point) {
        return Err(Error::ContractViolation(
            "shrink_ball_init needs an interior point".into(),
        ));
    }
    let mut lo = body.certified_radius(interior_point).max(0.0);
    let mut hi = body
        .polytope_halfspaces()
        .iter()
        .map(|h| h.slack(interior_point))
        .fold(f64::INFINITY, f64::min);
    if hi > lo {
        for i in 0..SHRINK_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if ball_is_inscribed(body, interior_point, mid, i as u64) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    if !(lo >= MIN_RADIUS) {
        return Err(Error::numerical(format!(
            "inscribed radius {lo:e} below {MIN_RADIUS:e}"
        )));
    }
    Ok(Ball {
        center: interior_point.to_vec(),
        radius: lo,
    })
}

/// An inscribed ball for any convex body.
pub(crate) fn convex_inscribed_ball(body: &Body) -> Result<Ball> {
    let polytope = body.polytope_halfspaces();
    match body.ellipsoids().len() {
        0 => chebyshev_ball_polytope(&polytope),
        1 => inscribed_ball_for_ellipsoid_body(body),
        _ => {
            let mut best: Option<Ball> = None;
            for (e, side) in body.ellipsoids() {
                let single = Body::new(
                    body.dim(),
                    body.halfspaces().to_vec(),
                    vec![(e.clone(), *side)],
                )?;
                if let Ok(b) = inscribed_ball_for_ellipsoid_body(&single) {
                    if contains(body, &b.center) {
                        let b = shrink_ball_init(body, &b.center)?;
                        if best.as_ref().is_none_or(|x| b.radius > x.radius) {
                            best = Some(b);
                        }
                    }
                }
            }
            best.ok_or_else(|| Error::numerical("no inscribed ball found"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Ellipsoid;
    use nalgebra::DMatrix;

    fn square() -> Vec<Halfspace> {
        vec![
            Halfspace::new(vec![-1.0, 0.0], 0.0).unwrap(),
            Halfspace::new(vec![1.0, 0.0], 1.0).unwrap(),
            Halfspace::new(vec![0.0, -1.0], 0.0).unwrap(),
            Halfspace::new(vec![0.0, 1.0], 1.0).unwrap(),
        ]
    }

    #[test]
    fn chebyshev_triangle_and_square() {
        let tri = Body::simplex_only(2).polytope_halfspaces();
        let b = chebyshev_ball_polytope(&tri).unwrap();
        let r = 1.0 / (2.0 + 2f64.sqrt());
        assert!((b.radius - r).abs() < 1e-9);
        assert!((b.center[0] - r).abs() < 1e-9 && (b.center[1] - r).abs() < 1e-9);
        assert_eq!(tight_constraints(&tri, &b), 3);
        let s = chebyshev_ball_polytope(&square()).unwrap();
        assert!((s.radius - 0.5).abs() < 1e-9);
        assert!((s.center[0] - 0.5).abs() < 1e-9 && (s.center[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn chebyshev_unit_simplex_inradius() {
        for d in [3usize, 7, 12] {
            let hs = Body::simplex_only(d).polytope_halfspaces();
            let b = chebyshev_ball_polytope(&hs).unwrap();
            let r = 1.0 / (d as f64 + (d as f64).sqrt());
            assert!((b.radius - r).abs() < 1e-9, "d={d}");
            assert!(tight_constraints(&hs, &b) > d);
        }
    }

    #[test]
    fn empty_polytope_is_infeasible() {
        let mut hs = Body::simplex_only(2).polytope_halfspaces();
        hs.push(Halfspace::new(vec![-1.0, -1.0], -2.0).unwrap());
        assert!(matches!(
            chebyshev_ball_polytope(&hs),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn socp_trivial_cases() {
        let tri = Body::simplex_only(2).polytope_halfspaces();
        let big = Ball {
            center: vec![0.3, 0.3],
            radius: 5.0,
        };
        let cheb = chebyshev_ball_polytope(&tri).unwrap();
        let b = inscribed_ball_socp(&tri, &big).unwrap();
        assert!((b.radius - cheb.radius).abs() < 1e-12);
        let small = Ball {
            center: vec![0.25, 0.25],
            radius: 0.1,
        };
        assert_eq!(inscribed_ball_socp(&tri, &small).unwrap(), small);
    }

    #[test]
    fn socp_active_cone() {
        let tri = Body::simplex_only(2).polytope_halfspaces();
        let outer = Ball {
            center: vec![0.5, 0.5],
            radius: 0.3,
        };
        let b = inscribed_ball_socp(&tri, &outer).unwrap();
        for h in &tri {
            assert!(h.slack(&b.center) >= b.radius - 1e-12);
        }
        assert!(sq_dist(&b.center, &outer.center).sqrt() + b.radius <= outer.radius + 1e-12);
        // the optimum is the inscribed ball of the half disc
        let t = b.center[0];
        let expect = ((1.0 - 2.0 * t) / 2f64.sqrt()).min(0.3 - (0.5 - t) * 2f64.sqrt());
        assert!((b.radius - expect).abs() < 1e-6);
        assert!((b.radius - 0.15).abs() < 1e-6, "{}", b.radius);
    }

    #[test]
    fn ellipsoid_containing_simplex_gives_chebyshev() {
        let e = Ellipsoid::new(DMatrix::identity(3, 3), vec![0.0; 3], 4.0).unwrap();
        let b = Body::new(3, vec![], vec![(e, Side::Inside)]).unwrap();
        let ball = inscribed_ball_for_ellipsoid_body(&b).unwrap();
        let cheb = chebyshev_ball_polytope(&b.polytope_halfspaces()).unwrap();
        assert_eq!(ball, cheb);
    }

    #[test]
    fn sphere_matches_socp() {
        let c = vec![0.4, 0.1, 0.2];
        let e = Ellipsoid::new(DMatrix::identity(3, 3) * 4.0, c.clone(), 0.09).unwrap();
        let b = Body::new(3, vec![], vec![(e, Side::Inside)]).unwrap();
        let ball = inscribed_ball_for_ellipsoid_body(&b).unwrap();
        let direct = inscribed_ball_socp(
            &b.polytope_halfspaces(),
            &Ball {
                center: c,
                radius: 0.15,
            },
        )
        .unwrap();
        assert!((ball.radius - direct.radius).abs() < 1e-9);
        assert!(sq_dist(&ball.center, &direct.center).sqrt() < 1e-6);
    }

    #[test]
    fn shrink_recovers_sphere_radius() {
        let c = vec![0.2, 0.2, 0.2];
        let e = Ellipsoid::new(DMatrix::identity(3, 3), c.clone(), 0.01).unwrap();
        let b = Body::new(3, vec![], vec![(e, Side::Inside)]).unwrap();
        let ball = shrink_ball_init(&b, &c).unwrap();
        assert!((ball.radius - 0.1).abs() < 1e-9);
    }

    #[test]
    fn shrink_near_facet_and_general_ellipsoid() {
        let d = 4;
        let m = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 + i as f64 } else { 0.2 });
        let e = Ellipsoid::new(m, vec![0.2; d], 0.05).unwrap();
        let b = Body::new(d, vec![], vec![(e, Side::Inside)]).unwrap();
        let p = vec![0.2, 0.2, 0.2, 0.2];
        let ball = shrink_ball_init(&b, &p).unwrap();
        assert!(ball.radius >= b.certified_radius(&p));
        assert!(probes_inside(&b, &ball));
        let q = vec![1e-3, 0.2, 0.2, 0.2];
        let near = shrink_ball_init(&b, &q).unwrap();
        assert!(near.radius <= 1e-3 && near.radius > 0.0);
        assert!(probes_inside(&b, &near));
    }

    #[test]
    fn shrink_rejects_outside_point() {
        let b = Body::simplex_only(2);
        assert!(matches!(
            shrink_ball_init(&b, &[0.9, 0.9]),
            Err(Error::ContractViolation(_))
        ));
    }
}
