use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::rational::{f64_to_rational, parse_decimal, rational_det, tree_sum, Fraction};
use crate::error::{Error, Result};
use crate::geometry::io::{BodySpec, SimplexSpec};
use crate::geometry::Body;
use crate::rng::{stream_rng, with_thread_cap};

/// Largest dimension the floating-point backend accepts.
pub const FLOAT_MAX_DIM: usize = 40;

const C_RANGE: i64 = 1 << 16;
const C_ATTEMPTS: usize = 20;

/// Arithmetic used by the Lawrence sum: `f64` or exact `BigRational`.
pub trait LawrenceScalar:
    Clone + Debug + PartialOrd + Signed + FromPrimitive + Send + Sync
{
    type Term: Clone + Send;

    /// Equal for the purpose of degeneracy detection.
    fn coincident(&self, other: &Self) -> bool;
    /// Too close to zero to divide by.
    fn negligible(&self) -> bool;
    fn approx(&self) -> f64;
    /// `cv^d / (det * prod(gammas))`.
    fn term(cv: &Self, d: usize, det: &Self, gammas: &[Self]) -> Self::Term;
    fn term_abs(t: &Self::Term) -> f64;
    fn sum(terms: Vec<Self::Term>) -> Self::Term;

    fn quo(a: Self, b: Self) -> Self {
        a / b
    }
}

impl LawrenceScalar for f64 {
    type Term = f64;

    fn coincident(&self, other: &Self) -> bool {
        (self - other).abs() <= 1e-10 * self.abs().max(other.abs()).max(1.0)
    }

    fn negligible(&self) -> bool {
        self.abs() < 1e-8
    }

    fn approx(&self) -> f64 {
        *self
    }

    fn term(cv: &f64, d: usize, det: &f64, gammas: &[f64]) -> f64 {
        let mut t = cv.powi(d as i32) / det;
        for g in gammas {
            t /= g;
        }
        t
    }

    fn term_abs(t: &f64) -> f64 {
        t.abs()
    }

    fn sum(mut terms: Vec<f64>) -> f64 {
        if terms.is_empty() {
            return 0.0;
        }
        while terms.len() > 1 {
            terms = terms.chunks(2).map(|p| p.iter().sum()).collect();
        }
        terms[0]
    }
}

fn product(xs: impl Iterator<Item = BigInt>) -> BigInt {
    let mut v: Vec<BigInt> = xs.collect();
    if v.is_empty() {
        return BigInt::one();
    }
    while v.len() > 1 {
        v = v
            .chunks(2)
            .map(|p| {
                if p.len() == 2 {
                    &p[0] * &p[1]
                } else {
                    p[0].clone()
                }
            })
            .collect();
    }
    v.pop().expect("nonempty")
}

impl LawrenceScalar for BigRational {
    type Term = Fraction;

    fn coincident(&self, other: &Self) -> bool {
        self == other
    }

    fn negligible(&self) -> bool {
        self.is_zero()
    }

    fn approx(&self) -> f64 {
        super::rational::rational_to_f64(self)
    }

    fn term(cv: &Self, d: usize, det: &Self, gammas: &[Self]) -> Fraction {
        let num = num_traits::pow(cv.numer().clone(), d)
            * det.denom()
            * product(gammas.iter().map(|g| g.denom().clone()));
        let den = num_traits::pow(cv.denom().clone(), d)
            * det.numer()
            * product(gammas.iter().map(|g| g.numer().clone()));
        Fraction { num, den }
    }

    fn term_abs(t: &Fraction) -> f64 {
        t.to_f64().abs()
    }

    fn sum(terms: Vec<Fraction>) -> Fraction {
        tree_sum(terms)
    }
}

impl LawrenceScalar for TwoFloat {
    type Term = TwoFloat;

    fn coincident(&self, other: &Self) -> bool {
        self.hi().coincident(&other.hi())
    }

    fn negligible(&self) -> bool {
        self.hi().abs() < 1e-8
    }

    fn approx(&self) -> f64 {
        self.hi() + self.lo()
    }

    fn term(cv: &Self, d: usize, det: &Self, gammas: &[Self]) -> Self {
        let den = gammas.iter().fold(*det, |acc, g| acc * *g);
        Self::quo(num_traits::pow(*cv, d), den)
    }

    fn term_abs(t: &Self) -> f64 {
        t.hi().abs()
    }

    fn sum(mut terms: Vec<Self>) -> Self {
        if terms.is_empty() {
            return TwoFloat::from(0.0);
        }
        while terms.len() > 1 {
            terms = terms
                .chunks(2)
                .map(|p| p.iter().fold(TwoFloat::from(0.0), |a, b| a + *b))
                .collect();
        }
        terms[0]
    }

    /// Long division with two correction steps; plain `TwoFloat` division
    /// is only accurate to about one double ulp.
    fn quo(a: Self, b: Self) -> Self {
        let q1 = a.hi() / b.hi();
        let r1 = a - b * TwoFloat::from(q1);
        let q2 = r1.hi() / b.hi();
        let r2 = r1 - b * TwoFloat::from(q2);
        let q3 = r2.hi() / b.hi();
        TwoFloat::from(q1) + TwoFloat::from(q2) + TwoFloat::from(q3)
    }
}

/// Parallel hyperplanes `lower <= normal . x <= upper` in the unit-simplex frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Family<T> {
    pub normal: Vec<T>,
    pub lower: Option<T>,
    pub upper: Option<T>,
}

/// The unit simplex cut by at most two parallel families.
#[derive(Debug, Clone)]
pub struct LawrenceProblem<T> {
    dim: usize,
    families: Vec<Family<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plane {
    pub family: usize,
    pub upper: bool,
}

/// One of the d constraints tight at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Active {
    /// `x_k >= 0`, with k in 1..=d.
    Coordinate(usize),
    /// `sum x <= 1`.
    Simplex,
    Plane(Plane),
}

/// A vertex of the cut simplex with its tight constraints.
///
/// `gamma` is filled in for a particular objective vector `c` and ordered as
/// `active`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LawrenceVertex {
    pub coords: Vec<f64>,
    pub active: Vec<Active>,
    pub gamma: Vec<f64>,
    pub det_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Float,
    Rational,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "float" => Ok(Backend::Float),
            "rational" => Ok(Backend::Rational),
            _ => Err(Error::invalid(format!("unknown backend '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactVolume {
    pub value: f64,
    pub backend: Backend,
    /// High-precision decimal form of the rational result.
    pub decimal: Option<String>,
    pub vertex_count: usize,
    pub c: Vec<i64>,
    pub attempts: usize,
    /// `sum |term| / |sum term|`; large values mean heavy cancellation.
    pub cancellation: f64,
    #[serde(skip)]
    pub exact: Option<Fraction>,
}

impl ExactVolume {
    /// Multiplies the volume by `factor`, e.g. the `|det M|` of a simplex.
    pub fn scale_by(&mut self, factor: &BigRational) {
        if let Some(f) = &self.exact {
            let scaled = Fraction {
                num: &f.num * factor.numer(),
                den: &f.den * factor.denom(),
            };
            self.value = scaled.to_f64();
            self.decimal = Some(scaled.to_decimal(DECIMAL_DIGITS));
            self.exact = Some(scaled);
        } else {
            self.value *= super::rational::rational_to_f64(factor);
        }
    }
}

const DECIMAL_DIGITS: usize = 30;

/// Raw vertex: barycentric support `(index, weight)` and tight hyperplanes.
#[derive(Debug, Clone)]
struct RawVertex<T> {
    support: Vec<(usize, T)>,
    planes: Vec<Plane>,
}

fn bound_name(p: Plane) -> &'static str {
    if p.upper {
        "upper"
    } else {
        "lower"
    }
}

impl<T: LawrenceScalar> LawrenceProblem<T> {
    pub fn new(dim: usize, families: Vec<Family<T>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be at least 1"));
        }
        if families.len() > 2 {
            return Err(Error::Unsupported(format!(
                "at most two parallel hyperplane families are supported, got {}",
                families.len()
            )));
        }
        for (i, f) in families.iter().enumerate() {
            if f.normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: f.normal.len(),
                });
            }
            if f.normal.iter().all(|a| a.is_zero()) {
                return Err(Error::invalid(format!("family {i} has a zero normal")));
            }
            if let (Some(lo), Some(hi)) = (&f.lower, &f.upper) {
                if !(lo < hi) {
                    return Err(Error::invalid(format!(
                        "family {i} has lower bound >= upper bound"
                    )));
                }
            }
        }
        if families.len() == 2 && proportional(&families[0].normal, &families[1].normal).is_some() {
            return Err(Error::invalid(
                "the two families are parallel; merge them into one",
            ));
        }
        Ok(LawrenceProblem { dim, families })
    }

    /// Groups halfspaces `normal . x <= offset` into parallel families,
    /// keeping the tightest bound on each side.
    pub fn from_halfspaces(dim: usize, halfspaces: &[(Vec<T>, T)]) -> Result<Self> {
        let mut families: Vec<Family<T>> = Vec::new();
        for (normal, offset) in halfspaces {
            if normal.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: normal.len(),
                });
            }
            let found = families
                .iter_mut()
                .find_map(|f| proportional(&f.normal, normal).map(|r| (f, r)));
            let (family, ratio) = match found {
                Some(x) => x,
                None => {
                    families.push(Family {
                        normal: normal.clone(),
                        lower: None,
                        upper: None,
                    });
                    (families.last_mut().expect("just pushed"), T::one())
                }
            };
            // normal = ratio * family.normal, so family.normal . x <= offset / ratio when ratio > 0
            let b = T::quo(offset.clone(), ratio.clone());
            if ratio.is_positive() {
                if family.upper.as_ref().is_none_or(|u| b < *u) {
                    family.upper = Some(b);
                }
            } else if family.lower.as_ref().is_none_or(|l| b > *l) {
                family.lower = Some(b);
            }
        }
        for f in &families {
            if let (Some(lo), Some(hi)) = (&f.lower, &f.upper) {
                if !(lo < hi) {
                    return Err(Error::Infeasible(
                        "a family's bounds leave an empty band".into(),
                    ));
                }
            }
        }
        LawrenceProblem::new(dim, families)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn families(&self) -> &[Family<T>] {
        &self.families
    }

    fn planes(&self) -> Vec<Plane> {
        let mut out = Vec::new();
        for (i, f) in self.families.iter().enumerate() {
            if f.lower.is_some() {
                out.push(Plane {
                    family: i,
                    upper: false,
                });
            }
            if f.upper.is_some() {
                out.push(Plane {
                    family: i,
                    upper: true,
                });
            }
        }
        out
    }

    fn level(&self, p: Plane) -> &T {
        let f = &self.families[p.family];
        if p.upper {
            f.upper.as_ref()
        } else {
            f.lower.as_ref()
        }
        .expect("plane exists")
    }

    /// `a_hat[f][i]`: family normal evaluated at simplex vertex i (0 at the origin).
    fn vertex_values(&self) -> Vec<Vec<T>> {
        self.families
            .iter()
            .map(|f| {
                std::iter::once(T::zero())
                    .chain(f.normal.iter().cloned())
                    .collect()
            })
            .collect()
    }

    /// Whether the family values `s` satisfy every bound not in `active`.
    /// A value sitting on an inactive bound is a degeneracy.
    fn admissible(&self, s: &[T], active: &[Plane], what: impl Fn() -> String) -> Result<bool> {
        for p in self.planes() {
            if active.contains(&p) {
                continue;
            }
            let z = self.level(p);
            let v = &s[p.family];
            if v.coincident(z) {
                return Err(Error::DegenerateInput(format!(
                    "{} bound {:?} of family {} passes through {}",
                    bound_name(p),
                    z.approx(),
                    p.family,
                    what()
                )));
            }
            if (p.upper && v > z) || (!p.upper && v < z) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn raw_vertices(&self) -> Result<Vec<RawVertex<T>>> {
        let d = self.dim;
        let vals = self.vertex_values();
        let planes = self.planes();
        for &p in &planes {
            let z = self.level(p);
            for (i, v) in vals[p.family].iter().enumerate() {
                if v.coincident(z) {
                    return Err(Error::DegenerateInput(format!(
                        "{} bound {:?} of family {} passes through simplex vertex {i}",
                        bound_name(p),
                        z.approx(),
                        p.family
                    )));
                }
            }
        }
        let at = |i: usize| -> Vec<T> { vals.iter().map(|v| v[i].clone()).collect() };
        let mut out = Vec::new();
        for i in 0..=d {
            if self.admissible(&at(i), &[], || format!("simplex vertex {i}"))? {
                out.push(RawVertex {
                    support: vec![(i, T::one())],
                    planes: vec![],
                });
            }
        }
        // above[p][i]: simplex vertex i lies strictly above plane p
        let above: Vec<Vec<bool>> = planes
            .iter()
            .map(|&p| vals[p.family].iter().map(|v| v > self.level(p)).collect())
            .collect();
        for (pi, &p) in planes.iter().enumerate() {
            let a = &vals[p.family];
            let z = self.level(p);
            for i in 0..=d {
                for j in i + 1..=d {
                    if above[pi][i] == above[pi][j] {
                        continue;
                    }
                    let t = T::quo(z.clone() - a[i].clone(), a[j].clone() - a[i].clone());
                    let s: Vec<T> = vals
                        .iter()
                        .map(|v| v[i].clone() + t.clone() * (v[j].clone() - v[i].clone()))
                        .collect();
                    if self
                        .admissible(&s, &[p], || format!("the cut of simplex edge ({i}, {j})"))?
                    {
                        out.push(RawVertex {
                            support: vec![(i, T::one() - t.clone()), (j, t)],
                            planes: vec![p],
                        });
                    }
                }
            }
        }
        for (pi, &p) in planes.iter().enumerate() {
            for (qi, &q) in planes.iter().enumerate() {
                if p.family != 0 || q.family != 1 {
                    continue;
                }
                let (a, b) = (&vals[0], &vals[1]);
                let (za, zb) = (self.level(p), self.level(q));
                let crosses = |side: &[bool], i: usize, j: usize, k: usize| {
                    !(side[i] == side[j] && side[j] == side[k])
                };
                for i in 0..=d {
                    for j in i + 1..=d {
                        for k in j + 1..=d {
                            if !crosses(&above[pi], i, j, k) || !crosses(&above[qi], i, j, k) {
                                continue;
                            }
                            let m = [
                                [T::one(), T::one(), T::one()],
                                [a[i].clone(), a[j].clone(), a[k].clone()],
                                [b[i].clone(), b[j].clone(), b[k].clone()],
                            ];
                            let rhs = [T::one(), za.clone(), zb.clone()];
                            let Some(lam) = cramer3(&m, &rhs) else {
                                continue;
                            };
                            if lam
                                .iter()
                                .any(|l| !l.is_positive() || l.coincident(&T::zero()))
                            {
                                continue;
                            }
                            let s = vec![za.clone(), zb.clone()];
                            let tri =
                                || format!("the meeting point in simplex triangle ({i}, {j}, {k})");
                            if self.admissible(&s, &[p, q], tri)? {
                                let [li, lj, lk] = lam;
                                out.push(RawVertex {
                                    support: vec![(i, li), (j, lj), (k, lk)],
                                    planes: vec![p, q],
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Tight constraints, gamma (ordered as the constraints), `|det A(v)|`,
    /// and `c . v` at one vertex. Returns `None` when the small block is singular.
    fn solve_vertex(
        &self,
        v: &RawVertex<T>,
        vals: &[Vec<T>],
        c: &[T],
    ) -> Option<(Vec<Active>, Vec<T>, T, T)> {
        let d = self.dim;
        let has_origin = v.support.iter().any(|(i, _)| *i == 0);
        let free: Vec<usize> = v
            .support
            .iter()
            .map(|(i, _)| *i)
            .filter(|&i| i > 0)
            .collect();
        let n = free.len();
        let sigma = |p: Plane| if p.upper { T::one() } else { -T::one() };
        let mut cols: Vec<Vec<T>> = Vec::with_capacity(n);
        let mut active = Vec::with_capacity(d);
        if !has_origin {
            cols.push(vec![T::one(); n]);
            active.push(Active::Simplex);
        }
        for &p in &v.planes {
            cols.push(
                free.iter()
                    .map(|&j| sigma(p) * vals[p.family][j].clone())
                    .collect(),
            );
            active.push(Active::Plane(p));
        }
        debug_assert_eq!(cols.len(), n);
        // rows are equations j in `free`, columns unknowns
        let mat: Vec<Vec<T>> = (0..n)
            .map(|r| cols.iter().map(|col| col[r].clone()).collect())
            .collect();
        let rhs: Vec<T> = free.iter().map(|&j| c[j - 1].clone()).collect();
        let (det, sol) = solve_small(&mat, &rhs)?;
        let mut gamma = sol.clone();
        for j in 1..=d {
            if free.contains(&j) {
                continue;
            }
            let mut g = -c[j - 1].clone();
            let mut idx = 0;
            if !has_origin {
                g = g + sol[0].clone();
                idx = 1;
            }
            for (h, &p) in v.planes.iter().enumerate() {
                g = g + sigma(p) * sol[idx + h].clone() * vals[p.family][j].clone();
            }
            gamma.push(g);
            active.push(Active::Coordinate(j));
        }
        let cv = v
            .support
            .iter()
            .filter(|(i, _)| *i > 0)
            .fold(T::zero(), |acc, (i, l)| acc + c[i - 1].clone() * l.clone());
        Some((active, gamma, det.abs(), cv))
    }
}

fn proportional<T: LawrenceScalar>(base: &[T], other: &[T]) -> Option<T> {
    let k = base.iter().position(|x| !x.is_zero())?;
    if other[k].is_zero() {
        return None;
    }
    let r = T::quo(other[k].clone(), base[k].clone());
    base.iter()
        .zip(other)
        .all(|(b, o)| (r.clone() * b.clone()).coincident(o))
        .then_some(r)
}

fn det3<T: LawrenceScalar>(m: &[[T; 3]; 3]) -> T {
    let c = |i: usize, j: usize| m[i][j].clone();
    c(0, 0) * (c(1, 1) * c(2, 2) - c(1, 2) * c(2, 1))
        - c(0, 1) * (c(1, 0) * c(2, 2) - c(1, 2) * c(2, 0))
        + c(0, 2) * (c(1, 0) * c(2, 1) - c(1, 1) * c(2, 0))
}

fn cramer3<T: LawrenceScalar>(m: &[[T; 3]; 3], rhs: &[T; 3]) -> Option<[T; 3]> {
    let det = det3(m);
    if det.negligible() {
        return None;
    }
    let col = |k: usize| {
        let mut mk = m.clone();
        for r in 0..3 {
            mk[r][k] = rhs[r].clone();
        }
        T::quo(det3(&mk), det.clone())
    };
    Some([col(0), col(1), col(2)])
}

/// Determinant and solution of an n x n system with n <= 3.
fn solve_small<T: LawrenceScalar>(m: &[Vec<T>], rhs: &[T]) -> Option<(T, Vec<T>)> {
    match m.len() {
        0 => Some((T::one(), Vec::new())),
        1 => {
            let det = m[0][0].clone();
            if det.negligible() {
                return None;
            }
            Some((det.clone(), vec![T::quo(rhs[0].clone(), det)]))
        }
        2 => {
            let det = m[0][0].clone() * m[1][1].clone() - m[0][1].clone() * m[1][0].clone();
            if det.negligible() {
                return None;
            }
            let x0 = T::quo(
                rhs[0].clone() * m[1][1].clone() - m[0][1].clone() * rhs[1].clone(),
                det.clone(),
            );
            let x1 = T::quo(
                m[0][0].clone() * rhs[1].clone() - rhs[0].clone() * m[1][0].clone(),
                det.clone(),
            );
            Some((det, vec![x0, x1]))
        }
        3 => {
            let a = [
                [m[0][0].clone(), m[0][1].clone(), m[0][2].clone()],
                [m[1][0].clone(), m[1][1].clone(), m[1][2].clone()],
                [m[2][0].clone(), m[2][1].clone(), m[2][2].clone()],
            ];
            let det = det3(&a);
            let sol = cramer3(&a, &[rhs[0].clone(), rhs[1].clone(), rhs[2].clone()])?;
            Some((det, sol.to_vec()))
        }
        _ => None,
    }
}

fn draw_c(d: usize, seed: u64, attempt: usize) -> Vec<i64> {
    let mut rng = stream_rng(seed, 0x1a3e_0000 + attempt as u64);
    (0..d).map(|_| rng.gen_range(-C_RANGE..=C_RANGE)).collect()
}

/// Every vertex of the cut simplex, in a fixed order. With `c` given, each
/// vertex also carries its gamma vector.
pub fn enumerate_vertices<T: LawrenceScalar>(
    problem: &LawrenceProblem<T>,
    c: Option<&[i64]>,
) -> Result<Vec<LawrenceVertex>> {
    let raw = problem.raw_vertices()?;
    let vals = problem.vertex_values();
    let d = problem.dim;
    let cv: Vec<T> = match c {
        Some(c) => c
            .iter()
            .map(|&x| T::from_i64(x).expect("small integer"))
            .collect(),
        None => vec![T::one(); d],
    };
    raw.iter()
        .map(|v| {
            let mut coords = vec![0.0; d];
            for (i, l) in &v.support {
                if *i > 0 {
                    coords[i - 1] = l.approx();
                }
            }
            let (active, gamma, det, _) = problem
                .solve_vertex(v, &vals, &cv)
                .ok_or_else(|| Error::DegenerateInput("singular vertex block".into()))?;
            Ok(LawrenceVertex {
                coords,
                active,
                gamma: if c.is_some() {
                    gamma.iter().map(|g| g.approx()).collect()
                } else {
                    Vec::new()
                },
                det_abs: det.approx(),
            })
        })
        .collect()
}

struct SignedSum<T: LawrenceScalar> {
    total: T::Term,
    abs_sum: f64,
}

fn lawrence_sum<T: LawrenceScalar>(
    problem: &LawrenceProblem<T>,
    raw: &[RawVertex<T>],
    c: &[i64],
) -> Option<SignedSum<T>> {
    let vals = problem.vertex_values();
    let cv: Vec<T> = c
        .iter()
        .map(|&x| T::from_i64(x).expect("small integer"))
        .collect();
    let d = problem.dim;
    let solved: Option<Vec<(Vec<T>, T, T)>> = with_thread_cap(|| {
        raw.par_iter()
            .map(|v| {
                let (_, gamma, det, dot) = problem.solve_vertex(v, &vals, &cv)?;
                if gamma.iter().any(|g| g.negligible()) {
                    return None;
                }
                Some((gamma, det, dot))
            })
            .collect()
    });
    let terms: Vec<T::Term> = solved?
        .iter()
        .map(|(gamma, det, dot)| T::term(dot, d, det, gamma))
        .collect();
    let abs_sum = terms.iter().map(T::term_abs).sum();
    Some(SignedSum {
        total: T::sum(terms),
        abs_sum,
    })
}

/// Volume of the cut simplex by Lawrence's sign decomposition with `q = 0`.
///
/// `c` defaults to a random integer vector drawn from `seed`; a draw that
/// makes some gamma entry vanish is replaced, up to 20 times. The float
/// backend evaluates the vertex solves and the signed sum in double-double
/// arithmetic.
pub fn lawrence_volume<T: LawrenceSum>(
    problem: &LawrenceProblem<T>,
    c: Option<&[i64]>,
    seed: u64,
) -> Result<ExactVolume> {
    T::run(problem, c, seed)
}

fn lawrence_volume_with<T: LawrenceSum>(
    problem: &LawrenceProblem<T>,
    c: Option<&[i64]>,
    seed: u64,
) -> Result<ExactVolume> {
    let d = problem.dim;
    T::check_dim(d)?;
    let raw = problem.raw_vertices()?;
    let attempts: Vec<Vec<i64>> = match c {
        Some(c) => {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
            vec![c.to_vec()]
        }
        None => (0..C_ATTEMPTS).map(|k| draw_c(d, seed, k)).collect(),
    };
    for (k, c) in attempts.iter().enumerate() {
        if let Some(sum) = lawrence_sum(problem, &raw, c) {
            let cancellation = sum.abs_sum / T::term_abs(&sum.total);
            let mut out = T::finish(sum.total, d);
            out.vertex_count = raw.len();
            out.c = c.clone();
            out.attempts = k + 1;
            out.cancellation = cancellation;
            return Ok(out);
        }
    }
    Err(Error::numerical(format!(
        "every objective vector tried ({}) left a vanishing gamma entry",
        attempts.len()
    )))
}

/// Backend-specific ends of [`lawrence_volume`].
pub trait LawrenceSum: LawrenceScalar {
    fn check_dim(d: usize) -> Result<()>;
    fn finish(total: Self::Term, d: usize) -> ExactVolume;

    fn run(problem: &LawrenceProblem<Self>, c: Option<&[i64]>, seed: u64) -> Result<ExactVolume> {
        lawrence_volume_with(problem, c, seed)
    }
}

fn factorial(d: usize) -> BigInt {
    (1..=d).fold(BigInt::one(), |acc, k| acc * k)
}

impl LawrenceSum for f64 {
    fn check_dim(d: usize) -> Result<()> {
        TwoFloat::check_dim(d)
    }

    fn finish(total: f64, d: usize) -> ExactVolume {
        TwoFloat::finish(TwoFloat::from(total), d)
    }

    fn run(problem: &LawrenceProblem<f64>, c: Option<&[i64]>, seed: u64) -> Result<ExactVolume> {
        let lift = |x: &f64| TwoFloat::from(*x);
        let families = problem
            .families
            .iter()
            .map(|f| Family {
                normal: f.normal.iter().map(lift).collect(),
                lower: f.lower.as_ref().map(lift),
                upper: f.upper.as_ref().map(lift),
            })
            .collect();
        lawrence_volume_with(
            &LawrenceProblem {
                dim: problem.dim,
                families,
            },
            c,
            seed,
        )
    }
}

impl LawrenceSum for TwoFloat {
    fn check_dim(d: usize) -> Result<()> {
        if d > FLOAT_MAX_DIM {
            return Err(Error::Unsupported(format!(
                "the float backend is unreliable above d = {FLOAT_MAX_DIM}; use the rational backend (d = {d})"
            )));
        }
        Ok(())
    }

    fn finish(total: TwoFloat, d: usize) -> ExactVolume {
        let fact = (1..=d).fold(TwoFloat::from(1.0), |acc, k| acc * TwoFloat::from(k as f64));
        ExactVolume {
            value: TwoFloat::quo(total, fact).approx(),
            backend: Backend::Float,
            decimal: None,
            vertex_count: 0,
            c: Vec::new(),
            attempts: 0,
            cancellation: 0.0,
            exact: None,
        }
    }
}

impl LawrenceSum for BigRational {
    fn check_dim(_: usize) -> Result<()> {
        Ok(())
    }

    fn finish(total: Fraction, d: usize) -> ExactVolume {
        let f = Fraction {
            num: total.num,
            den: total.den * factorial(d),
        };
        ExactVolume {
            value: f.to_f64(),
            backend: Backend::Rational,
            decimal: Some(f.to_decimal(DECIMAL_DIGITS)),
            vertex_count: 0,
            c: Vec::new(),
            attempts: 0,
            cancellation: 0.0,
            exact: Some(f),
        }
    }
}

impl LawrenceProblem<f64> {
    pub fn from_body(body: &Body) -> Result<Self> {
        if !body.ellipsoids().is_empty() {
            return Err(Error::Unsupported(
                "the Lawrence method handles halfspaces only".into(),
            ));
        }
        let hs: Vec<(Vec<f64>, f64)> = body
            .halfspaces()
            .iter()
            .map(|h| (h.normal.clone(), h.offset))
            .collect();
        LawrenceProblem::from_halfspaces(body.dim(), &hs)
    }
}

impl LawrenceProblem<BigRational> {
    /// Exact problem from the doubles of a standardized body.
    pub fn from_body_exact(body: &Body) -> Result<Self> {
        if !body.ellipsoids().is_empty() {
            return Err(Error::Unsupported(
                "the Lawrence method handles halfspaces only".into(),
            ));
        }
        let mut hs = Vec::new();
        for h in body.halfspaces() {
            let n: Result<Vec<BigRational>> =
                h.normal.iter().map(|&x| f64_to_rational(x)).collect();
            hs.push((n?, f64_to_rational(h.offset)?));
        }
        LawrenceProblem::from_halfspaces(body.dim(), &hs)
    }

    /// Exact problem and simplex scale `|det M|` read from the decimal text
    /// of a body file; nothing passes through `f64`.
    pub fn from_spec(spec: &BodySpec) -> Result<(Self, BigRational)> {
        if !spec.ellipsoids.is_empty() {
            return Err(Error::Unsupported(
                "the Lawrence method handles halfspaces only".into(),
            ));
        }
        let d = spec.dim();
        let parse = |v: &[crate::geometry::io::Decimal]| -> Result<Vec<BigRational>> {
            v.iter().map(|x| parse_decimal(x.as_str())).collect()
        };
        let mut hs = Vec::new();
        let scale = match &spec.simplex {
            SimplexSpec::Unit(_) => {
                for h in &spec.halfspaces {
                    hs.push((parse(&h.normal)?, parse_decimal(h.offset.as_str())?));
                }
                BigRational::one()
            }
            SimplexSpec::Vertices(rows) => {
                let verts: Vec<Vec<BigRational>> =
                    rows.iter().map(|r| parse(r)).collect::<Result<_>>()?;
                let v0 = &verts[0];
                let edges: Vec<Vec<BigRational>> = verts[1..]
                    .iter()
                    .map(|v| v.iter().zip(v0).map(|(a, b)| a - b).collect())
                    .collect();
                let dot = |a: &[BigRational], b: &[BigRational]| -> BigRational {
                    a.iter()
                        .zip(b)
                        .fold(BigRational::zero(), |acc, (x, y)| acc + x * y)
                };
                for h in &spec.halfspaces {
                    let a = parse(&h.normal)?;
                    let normal: Vec<BigRational> = edges.iter().map(|e| dot(&a, e)).collect();
                    hs.push((normal, parse_decimal(h.offset.as_str())? - dot(&a, v0)));
                }
                let det = rational_det(&edges).abs();
                if det.is_zero() {
                    return Err(Error::SingularSimplex(0.0));
                }
                det
            }
        };
        for (n, _) in &hs {
            if n.iter().all(|x| x.is_zero()) {
                return Err(Error::invalid(
                    "halfspace normal is zero in the simplex frame",
                ));
            }
        }
        Ok((LawrenceProblem::from_halfspaces(d, &hs)?, scale))
    }
}
