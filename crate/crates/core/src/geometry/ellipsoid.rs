use nalgebra::{DMatrix, DVector};

use super::Simplex;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// `{x : (x - center)^T C (x - center) <= level}` with `C` symmetric positive definite.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    matrix: DMatrix<f64>,
    center: Vec<f64>,
    level: f64,
    chol: DMatrix<f64>,
    min_eig: f64,
    max_eig: f64,
}

impl Ellipsoid {
    pub fn new(matrix: DMatrix<f64>, center: Vec<f64>, level: f64) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.ncols(),
            });
        }
        if center.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: center.len(),
            });
        }
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::invalid(format!(
                "ellipsoid level must be positive, got {level}"
            )));
        }
        let scale = matrix.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSpd(format!(
                        "entries ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        let sym = (&matrix + matrix.transpose()) * 0.5;
        let chol = sym
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("Cholesky factorisation failed".into()))?
            .l();
        let eig = sym.clone().symmetric_eigenvalues();
        let min_eig = eig.min();
        let max_eig = eig.max();
        if !(min_eig > 0.0) {
            return Err(Error::NotSpd(format!("smallest eigenvalue {min_eig:e}")));
        }
        Ok(Ellipsoid {
            matrix: sym,
            center,
            level,
            chol,
            min_eig,
            max_eig,
        })
    }

    pub fn centered(matrix: DMatrix<f64>, level: f64) -> Result<Self> {
        let d = matrix.nrows();
        Ellipsoid::new(matrix, vec![0.0; d], level)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    /// Lower Cholesky factor `L` with `C = L L^T`.
    pub fn cholesky_lower(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eig
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.max_eig
    }

    /// `C` is a multiple of the identity.
    pub fn is_sphere(&self) -> bool {
        let d = self.dim();
        let c = self.matrix[(0, 0)];
        (0..d).all(|i| (0..d).all(|j| self.matrix[(i, j)] == if i == j { c } else { 0.0 }))
    }

    /// Same level set with a different level.
    pub fn with_level(&self, level: f64) -> Result<Self> {
        if !(level > 0.0) {
            return Err(Error::invalid(format!(
                "ellipsoid level must be positive, got {level}"
            )));
        }
        let mut e = self.clone();
        e.level = level;
        Ok(e)
    }

    /// `(x - center)^T C (x - center)`.
    pub fn form(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        let mut total = 0.0;
        for i in 0..d {
            let yi = x[i] - self.center[i];
            let mut row = 0.0;
            for j in 0..d {
                row += self.matrix[(i, j)] * (x[j] - self.center[j]);
            }
            total += yi * row;
        }
        total
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.form(x) <= self.level
    }

    /// Same quadratic form and center as `other`.
    pub fn shares_form_with(&self, other: &Ellipsoid) -> bool {
        self.dim() == other.dim()
            && self.center == other.center
            && (&self.matrix - &other.matrix).amax() <= 1e-12 * self.matrix.amax()
    }
}

/// A quadratic constraint in the Cartesian frame of a simplex:
/// `(x - origin)^T Q (x - origin) + linear . (x - origin) <= constant`.
#[derive(Debug, Clone)]
pub struct RestrictedQuadric {
    pub matrix: DMatrix<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub origin: Vec<f64>,
}

impl RestrictedQuadric {
    /// Left-hand side of the constraint at `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.origin.len();
        let y = DVector::from_fn(d, |i, _| x[i] - self.origin[i]);
        let quad = (y.transpose() * &self.matrix * &y)[(0, 0)];
        quad + self
            .linear
            .iter()
            .zip(y.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.value(x) <= self.constant
    }

    /// Completes the square. Fails when the quadric has no interior point.
    pub fn to_ellipsoid(&self) -> Result<Ellipsoid> {
        let d = self.origin.len();
        let chol = self
            .matrix
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotSpd("restricted form".into()))?;
        let a = DVector::from_column_slice(&self.linear);
        let shift = chol.solve(&a) * 0.5;
        let level = self.constant + (a.transpose() * &shift)[(0, 0)] * 0.5;
        if !(level > 0.0) {
            return Err(Error::Infeasible(format!(
                "quadric does not meet the simplex hyperplane (level {level:e})"
            )));
        }
        let center: Vec<f64> = (0..d).map(|i| self.origin[i] - shift[i]).collect();
        Ellipsoid::new(self.matrix.clone(), center, level)
    }
}

/// Restricts the origin-centred ellipsoid `lambda^T C lambda <= c` in R^{d+1}
/// to the hyperplane `sum lambda = 1`, expressed in the Cartesian frame of
/// `simplex` through `lambda = m_cb(x)`.
///
/// With `y = M^{-1}(x - v_0)` and `lambda = (1 - 1.y, y)`:
/// `lambda^T C lambda = y^T (L^T C L) y + 2 (C_{0,1..} - C_00 1) . y + C_00`,
/// `L = [-1^T; I]`, which gives the quadric below after substituting `y`.
pub fn restrict_ellipsoid(full: &Ellipsoid, simplex: &Simplex) -> Result<RestrictedQuadric> {
    let d = simplex.dim();
    if full.dim() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: full.dim(),
        });
    }
    if full.center().iter().any(|&c| c != 0.0) {
        return Err(Error::invalid(
            "restriction expects an origin-centred ellipsoid",
        ));
    }
    let c = full.matrix();
    let c00 = c[(0, 0)];
    let q_y = DMatrix::from_fn(d, d, |i, j| {
        c[(i + 1, j + 1)] - c[(i + 1, 0)] - c[(0, j + 1)] + c00
    });
    let g_y = DVector::from_fn(d, |i, _| 2.0 * (c[(0, i + 1)] - c00));
    let m_inv = simplex.map().inverse_matrix();
    let matrix = m_inv.transpose() * q_y * &m_inv;
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    let linear = m_inv.transpose() * g_y;
    Ok(RestrictedQuadric {
        matrix,
        linear: linear.data.into(),
        constant: full.level() - c00,
        origin: simplex.map().shift().to_vec(),
    })
}
