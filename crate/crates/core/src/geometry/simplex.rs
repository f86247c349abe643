use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Pivot ratio below which a simplex counts as flat.
const SINGULAR_REL_TOL: f64 = 1e-12;

/// `x -> M x + shift` with a cached pivoted LU of `M`.
#[derive(Debug, Clone)]
pub struct AffineMap {
    matrix: DMatrix<f64>,
    shift: DVector<f64>,
    lu: LU<f64, Dyn, Dyn>,
    det_abs: f64,
}

impl AffineMap {
    pub fn new(matrix: DMatrix<f64>, shift: Vec<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.ncols(),
            });
        }
        if shift.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: shift.len(),
            });
        }
        let lu = matrix.clone().lu();
        let det_abs = lu.determinant().abs();
        let pivots = lu.u().diagonal().map(f64::abs);
        if !det_abs.is_finite() || det_abs == 0.0 || pivots.min() <= SINGULAR_REL_TOL * pivots.max()
        {
            return Err(Error::SingularSimplex(det_abs));
        }
        Ok(AffineMap {
            matrix,
            shift: DVector::from_vec(shift),
            lu,
            det_abs,
        })
    }

    pub fn identity(d: usize) -> Self {
        AffineMap::new(DMatrix::identity(d, d), vec![0.0; d]).expect("identity is invertible")
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &[f64] {
        self.shift.as_slice()
    }

    pub fn det_abs(&self) -> f64 {
        self.det_abs
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let y = DVector::from_column_slice(y);
        (&self.matrix * y + &self.shift).data.into()
    }

    pub fn apply_inverse(&self, x: &[f64]) -> Vec<f64> {
        let rhs = DVector::from_column_slice(x) - &self.shift;
        self.lu
            .solve(&rhs)
            .expect("LU checked non-singular at construction")
            .data
            .into()
    }

    pub fn inverse_matrix(&self) -> DMatrix<f64> {
        self.lu
            .try_inverse()
            .expect("LU checked non-singular at construction")
    }
}

/// A d-simplex given by its d+1 vertices in R^d.
#[derive(Debug, Clone)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    map: AffineMap,
    is_unit: bool,
}

impl Simplex {
    /// Full-dimensional unit simplex: the origin and the standard basis vectors.
    pub fn unit(d: usize) -> Self {
        assert!(d >= 1, "simplex dimension must be at least 1");
        let mut vertices = vec![vec![0.0; d]];
        for i in 0..d {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            vertices.push(v);
        }
        Simplex {
            vertices,
            map: AffineMap::identity(d),
            is_unit: true,
        }
    }

    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("a simplex needs at least two vertices"));
        }
        let d = vertices.len() - 1;
        for v in &vertices {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        let v0 = &vertices[0];
        let matrix = DMatrix::from_fn(d, d, |r, c| vertices[c + 1][r] - v0[r]);
        let map = AffineMap::new(matrix, v0.clone())?;
        let is_unit = vertices.iter().enumerate().all(|(i, v)| {
            v.iter()
                .enumerate()
                .all(|(r, &x)| x == if i > 0 && r + 1 == i { 1.0 } else { 0.0 })
        });
        Ok(Simplex {
            vertices,
            map,
            is_unit,
        })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn is_unit(&self) -> bool {
        self.is_unit
    }

    /// The map from the unit simplex frame onto this simplex.
    pub fn map(&self) -> &AffineMap {
        &self.map
    }

    pub fn log_volume(&self) -> f64 {
        self.map.det_abs().ln() - ln_factorial(self.dim())
    }

    pub fn volume(&self) -> f64 {
        self.log_volume().exp()
    }
}

pub fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `lambda -> M (lambda_1..lambda_d) + v_0`.
pub fn barycentric_to_cartesian(lambda: &[f64], simplex: &Simplex) -> Result<Vec<f64>> {
    let d = simplex.dim();
    if lambda.len() != d + 1 {
        return Err(Error::DimensionMismatch {
            expected: d + 1,
            got: lambda.len(),
        });
    }
    Ok(simplex.map.apply(&lambda[1..]))
}

/// Inverse of [`barycentric_to_cartesian`]; entries go negative outside the simplex.
pub fn cartesian_to_barycentric(x: &[f64], simplex: &Simplex) -> Result<Vec<f64>> {
    let d = simplex.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len(),
        });
    }
    let y = simplex.map.apply_inverse(x);
    let mut lambda = Vec::with_capacity(d + 1);
    lambda.push(1.0 - y.iter().sum::<f64>());
    lambda.extend(y);
    Ok(lambda)
}
