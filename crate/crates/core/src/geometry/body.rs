use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::{dot, norm, restrict_ellipsoid, Ellipsoid, Halfspace, Simplex};
use crate::error::{Error, Result};

/// Slack allowed on every constraint by [`contains`].
pub const MEMBERSHIP_TOL: f64 = 1e-9;

/// Which side of an ellipsoid a body keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inside,
    Outside,
}

/// The unit simplex intersected with halfspaces and ellipsoid side constraints.
///
/// A body with an `Outside` constraint is the non-convex shell case: exactly
/// one excluded core, and every ellipsoid shares its quadratic form and center.
#[derive(Debug, Clone)]
pub struct Body {
    simplex: Simplex,
    halfspaces: Vec<Halfspace>,
    ellipsoids: Vec<(Ellipsoid, Side)>,
}

impl Body {
    pub fn new(
        d: usize,
        halfspaces: Vec<Halfspace>,
        ellipsoids: Vec<(Ellipsoid, Side)>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        for h in &halfspaces {
            if h.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: h.dim(),
                });
            }
        }
        for (e, _) in &ellipsoids {
            if e.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: e.dim(),
                });
            }
        }
        let outside: Vec<&Ellipsoid> = ellipsoids
            .iter()
            .filter(|(_, s)| *s == Side::Outside)
            .map(|(e, _)| e)
            .collect();
        if outside.len() > 1 {
            return Err(Error::invalid(
                "a shell body has exactly one excluded ellipsoid",
            ));
        }
        if let Some(core) = outside.first() {
            if ellipsoids.iter().any(|(e, _)| !e.shares_form_with(core)) {
                return Err(Error::invalid(
                    "shell ellipsoids must share one quadratic form and center",
                ));
            }
        }
        Ok(Body {
            simplex: Simplex::unit(d),
            halfspaces,
            ellipsoids,
        })
    }

    pub fn simplex_only(d: usize) -> Self {
        Body {
            simplex: Simplex::unit(d),
            halfspaces: Vec::new(),
            ellipsoids: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.simplex.dim()
    }

    pub fn simplex(&self) -> &Simplex {
        &self.simplex
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    pub fn ellipsoids(&self) -> &[(Ellipsoid, Side)] {
        &self.ellipsoids
    }

    pub fn is_convex(&self) -> bool {
        self.ellipsoids.iter().all(|(_, s)| *s == Side::Inside)
    }

    /// Simplex facets followed by the body's own halfspaces.
    pub fn polytope_halfspaces(&self) -> Vec<Halfspace> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d + 1 + self.halfspaces.len());
        for i in 0..d {
            let mut a = vec![0.0; d];
            a[i] = -1.0;
            out.push(Halfspace {
                normal: a,
                offset: 0.0,
            });
        }
        out.push(Halfspace {
            normal: vec![1.0; d],
            offset: 1.0,
        });
        out.extend(self.halfspaces.iter().cloned());
        out
    }

    pub fn contains_with_tol(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        if x.iter().any(|&v| !(v >= -tol)) || x.iter().sum::<f64>() > 1.0 + tol {
            return false;
        }
        for h in &self.halfspaces {
            if dot(&h.normal, x) - h.offset > tol * norm(&h.normal) {
                return false;
            }
        }
        for (e, side) in &self.ellipsoids {
            let r = e.form(x) - e.level();
            let slack = tol * e.level().max(1.0);
            let ok = match side {
                Side::Inside => r <= slack,
                Side::Outside => r >= -slack,
            };
            if !ok {
                return false;
            }
        }
        true
    }

    /// The body's own constraints, without the simplex bounds and without slack.
    pub fn satisfies_constraints(&self, x: &[f64]) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, x) <= h.offset)
            && self.ellipsoids.iter().all(|(e, side)| match side {
                Side::Inside => e.form(x) <= e.level(),
                Side::Outside => e.form(x) >= e.level(),
            })
    }

    /// Largest radius of a ball around `x` that is certainly inside the body.
    ///
    /// Exact for the linear constraints; for ellipsoids uses
    /// `|y - c|_C <= |x - c|_C + r sqrt(lambda_max)`, which is exact for spheres.
    pub fn certified_radius(&self, x: &[f64]) -> f64 {
        let mut r = f64::INFINITY;
        for h in self.polytope_halfspaces() {
            r = r.min(h.slack(x));
        }
        for (e, side) in &self.ellipsoids {
            let gauge = e.form(x).max(0.0).sqrt();
            let s = e.level().sqrt();
            let room = match side {
                Side::Inside => s - gauge,
                Side::Outside => gauge - s,
            };
            r = r.min(room / e.max_eigenvalue().sqrt());
        }
        r
    }
}

/// Membership with the default [`MEMBERSHIP_TOL`] slack.
pub fn contains(body: &Body, x: &[f64]) -> bool {
    body.contains_with_tol(x, MEMBERSHIP_TOL)
}

/// Maps a simplex with its constraints onto the unit simplex.
///
/// Halfspaces and d-dimensional ellipsoids are given in the Cartesian frame of
/// `simplex`; (d+1)-dimensional ellipsoids are barycentric quadratic forms and
/// are restricted to the simplex hyperplane. Returns the body and
/// `scale = |det M|`, so `vol(original) = scale * vol(body)`.
pub fn standardize(
    simplex: &Simplex,
    halfspaces: &[Halfspace],
    ellipsoids: &[(Ellipsoid, Side)],
) -> Result<(Body, f64)> {
    let d = simplex.dim();
    let map = simplex.map();
    let m = map.matrix();
    let v0 = map.shift();
    let mut hs = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        if h.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: h.dim(),
            });
        }
        let a = DVector::from_column_slice(&h.normal);
        let normal: Vec<f64> = (m.transpose() * a).data.into();
        hs.push(Halfspace::new(normal, h.offset - dot(&h.normal, v0))?);
    }
    let mut es = Vec::with_capacity(ellipsoids.len());
    let unit = Simplex::unit(d);
    for (e, side) in ellipsoids {
        if e.dim() == d {
            let q = m.transpose() * e.matrix() * m;
            let q = (&q + q.transpose()) * 0.5;
            let center = map.apply_inverse(e.center());
            es.push((Ellipsoid::new(q, center, e.level())?, *side));
        } else if e.dim() == d + 1 {
            match restrict_ellipsoid(e, &unit)?.to_ellipsoid() {
                Ok(r) => es.push((r, *side)),
                Err(Error::Infeasible(_)) if *side == Side::Outside => {}
                Err(err) => return Err(err),
            }
        } else {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: e.dim(),
            });
        }
    }
    Ok((Body::new(d, hs, es)?, map.det_abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn bare_simplex_membership() {
        let b = Body::simplex_only(3);
        assert!(contains(&b, &[0.25, 0.25, 0.25]));
        assert!(!contains(&b, &[-0.1, 0.25, 0.25]));
        assert!(!contains(&b, &[0.5, 0.5, 0.5]));
    }

    #[test]
    fn shell_excludes_core() {
        let e = Ellipsoid::new(DMatrix::identity(2, 2), vec![0.3, 0.3], 0.01).unwrap();
        let outer = e.with_level(0.09).unwrap();
        let b = Body::new(2, vec![], vec![(outer, Side::Inside), (e, Side::Outside)]).unwrap();
        assert!(!b.is_convex());
        assert!(!contains(&b, &[0.3, 0.3]));
        assert!(contains(&b, &[0.3, 0.5]));
    }

    #[test]
    fn shell_needs_shared_form() {
        let e = Ellipsoid::new(DMatrix::identity(2, 2), vec![0.3, 0.3], 0.01).unwrap();
        let other = Ellipsoid::new(DMatrix::identity(2, 2) * 2.0, vec![0.3, 0.3], 0.2).unwrap();
        assert!(Body::new(
            2,
            vec![],
            vec![(other, Side::Inside), (e.clone(), Side::Outside)]
        )
        .is_err());
        assert!(Body::new(
            2,
            vec![],
            vec![(e.clone(), Side::Outside), (e, Side::Outside)]
        )
        .is_err());
    }

    #[test]
    fn unit_simplex_standardizes_to_itself() {
        let h = Halfspace::new(vec![1.0, 2.0], 0.7).unwrap();
        let (b, scale) = standardize(&Simplex::unit(2), std::slice::from_ref(&h), &[]).unwrap();
        assert_eq!(scale, 1.0);
        assert_eq!(b.halfspaces()[0], h);
    }

    #[test]
    fn doubled_simplex_scale() {
        let s = Simplex::new(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let (_, scale) = standardize(&s, &[], &[]).unwrap();
        assert!((scale - 4.0).abs() < 1e-15);
    }

    #[test]
    fn membership_preserved_d5() {
        let mut rng = crate::rng::stream_rng(11, 0);
        let d = 5;
        let verts: Vec<Vec<f64>> = (0..=d)
            .map(|i| {
                (0..d)
                    .map(|r| rng.gen_range(-0.4..0.4) + if i > 0 && r + 1 == i { 2.0 } else { 0.0 })
                    .collect()
            })
            .collect();
        let s = Simplex::new(verts).unwrap();
        let centroid: Vec<f64> = (0..d)
            .map(|r| s.vertices().iter().map(|v| v[r]).sum::<f64>() / 6.0)
            .collect();
        let normal: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h = Halfspace::new(normal.clone(), dot(&normal, &centroid)).unwrap();
        let q = DMatrix::from_fn(
            d,
            d,
            |i, j| if i == j { 1.0 + i as f64 * 0.2 } else { 0.05 },
        );
        let e = Ellipsoid::new(q, centroid.clone(), 0.8).unwrap();
        let (body, _) =
            standardize(&s, std::slice::from_ref(&h), &[(e.clone(), Side::Inside)]).unwrap();
        let cfg = crate::sampling::SamplerConfig::new(d, 3);
        let ys = crate::sampling::sample_unit_simplex(100_000, &cfg).unwrap();
        let mut inside = 0;
        for y in ys {
            let x = s.map().apply(&y);
            let direct = dot(&h.normal, &x) <= h.offset && e.contains(&x);
            let mapped = body.contains_with_tol(&y, 0.0);
            // boundary points within 1e-10 may legitimately disagree
            let near = h.slack(&x).abs() < 1e-10 || (e.form(&x) - e.level()).abs() < 1e-10;
            if !near {
                assert_eq!(direct, mapped);
            }
            inside += direct as usize;
        }
        assert!(inside > 1000);
    }

    #[test]
    fn certified_radius_is_inside() {
        let e = Ellipsoid::new(
            DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]),
            vec![0.3, 0.3],
            0.2,
        )
        .unwrap();
        let b = Body::new(2, vec![], vec![(e, Side::Inside)]).unwrap();
        let x = [0.25, 0.35];
        let r = b.certified_radius(&x);
        assert!(r > 0.0);
        for k in 0..64 {
            let t = k as f64 * std::f64::consts::TAU / 64.0;
            let p = [x[0] + r * t.cos(), x[1] + r * t.sin()];
            assert!(b.contains_with_tol(&p, 1e-12));
        }
    }
}
