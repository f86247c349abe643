//! Simplices, halfspaces, ellipsoids, and the bodies built from them.
//!
//! Cartesian points are plain `[f64]` slices of length d; barycentric points
//! carry all d+1 weights explicitly.

mod body;
mod ellipsoid;
pub mod io;
mod simplex;

pub use body::{contains, standardize, Body, Side, MEMBERSHIP_TOL};
pub use ellipsoid::{restrict_ellipsoid, Ellipsoid, RestrictedQuadric};
pub use simplex::{
    barycentric_to_cartesian, cartesian_to_barycentric, ln_factorial, AffineMap, Simplex,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vec<f64>;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `{x : normal . x <= offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().all(|&a| a == 0.0) {
            return Err(Error::invalid("halfspace normal must be nonzero"));
        }
        if normal.iter().any(|a| !a.is_finite()) || !offset.is_finite() {
            return Err(Error::invalid("halfspace coefficients must be finite"));
        }
        Ok(Halfspace { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// Signed distance to the boundary, positive inside.
    pub fn slack(&self, x: &[f64]) -> f64 {
        (self.offset - dot(&self.normal, x)) / norm(&self.normal)
    }
}

/// Parallel hyperplanes `normal . x = z_i` with strictly increasing offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneFamily {
    normal: Vec<f64>,
    offsets: Vec<f64>,
}

impl HyperplaneFamily {
    pub fn new(normal: Vec<f64>, offsets: Vec<f64>) -> Result<Self> {
        if normal.iter().all(|&a| a == 0.0) {
            return Err(Error::invalid("family normal must be nonzero"));
        }
        if offsets.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("family offsets must be strictly increasing"));
        }
        Ok(HyperplaneFamily { normal, offsets })
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// Halfspaces bounding band `i`, i.e. `z_{i-1} <= normal . x <= z_i`;
    /// the outermost bands are open on one side.
    pub fn band(&self, i: usize) -> Vec<Halfspace> {
        let mut out = Vec::new();
        if i > 0 {
            let neg: Vec<f64> = self.normal.iter().map(|a| -a).collect();
            out.push(Halfspace {
                normal: neg,
                offset: -self.offsets[i - 1],
            });
        }
        if i < self.offsets.len() {
            out.push(Halfspace {
                normal: self.normal.clone(),
                offset: self.offsets[i],
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halfspace_validation() {
        assert!(Halfspace::new(vec![0.0, 0.0], 1.0).is_err());
        assert!(Halfspace::new(vec![f64::NAN, 1.0], 1.0).is_err());
        let h = Halfspace::new(vec![3.0, 4.0], 5.0).unwrap();
        assert!((h.slack(&[0.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_offsets_strict() {
        assert!(HyperplaneFamily::new(vec![1.0], vec![0.1, 0.1]).is_err());
        let f = HyperplaneFamily::new(vec![1.0, 1.0], vec![0.2, 0.5]).unwrap();
        assert_eq!(f.band(0).len(), 1);
        assert_eq!(f.band(1).len(), 2);
        assert_eq!(f.band(2)[0].offset, -0.5);
    }
}
