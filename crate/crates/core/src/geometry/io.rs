//! Body definition files.
//!
//! ```json
//! {
//!   "simplex": "unit:3",
//!   "halfspaces": [{"normal": [1, 2, 0.5], "offset": 0.7}],
//!   "ellipsoids": [{"matrix": [[2, 0, 0], [0, 1, 0], [0, 0, 1]], "level": 0.4, "side": "inside"}]
//! }
//! ```
//!
//! `simplex` is either `"unit:d"` or a list of d+1 vertex rows. An ellipsoid
//! matrix of size d is Cartesian (optional `center`, default origin); size d+1
//! is a barycentric form `lambda^T C lambda <= level`. Numbers keep their decimal
//! text so the exact backend can read them without a float round-trip.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde_json::{Map, Value};

use super::{standardize, Body, Ellipsoid, Halfspace, Side, Simplex};
use crate::error::{Error, Result};

/// A JSON number kept as its literal text.
#[derive(Debug, Clone, PartialEq)]
pub struct Decimal(String);

impl Decimal {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.parse().expect("validated at parse time")
    }
}

impl From<f64> for Decimal {
    fn from(v: f64) -> Self {
        Decimal(format!("{v:?}"))
    }
}

impl FromStr for Decimal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Decimal(s.to_string())),
            _ => Err(schema(format!("'{s}' is not a finite number"))),
        }
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SimplexSpec {
    Unit(usize),
    Vertices(Vec<Vec<Decimal>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HalfspaceSpec {
    pub normal: Vec<Decimal>,
    pub offset: Decimal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidSpec {
    pub matrix: Vec<Vec<Decimal>>,
    pub level: Decimal,
    pub side: Side,
    pub center: Option<Vec<Decimal>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodySpec {
    pub simplex: SimplexSpec,
    pub halfspaces: Vec<HalfspaceSpec>,
    pub ellipsoids: Vec<EllipsoidSpec>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::InvalidInput(format!("body schema: {}", msg.into()))
}

fn number(v: &Value, path: &str) -> Result<Decimal> {
    match v {
        Value::Number(n) => n.to_string().parse(),
        _ => Err(schema(format!("{path} must be a number"))),
    }
}

fn vector(v: &Value, path: &str) -> Result<Vec<Decimal>> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(format!("{path} must be an array of numbers")))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{path}[{i}]")))
        .collect()
}

fn matrix(v: &Value, path: &str) -> Result<Vec<Vec<Decimal>>> {
    let arr = v
        .as_array()
        .ok_or_else(|| schema(format!("{path} must be an array of rows")))?;
    arr.iter()
        .enumerate()
        .map(|(i, r)| vector(r, &format!("{path}[{i}]")))
        .collect()
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| schema(format!("{path} is missing '{key}'")))
}

fn object<'a>(v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>> {
    let obj = v
        .as_object()
        .ok_or_else(|| schema(format!("{path} must be an object")))?;
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(schema(format!("{path} has unknown field '{k}'")));
    }
    Ok(obj)
}

fn number_value(d: &Decimal) -> Value {
    Value::Number(serde_json::Number::from_str(d.as_str()).expect("validated decimal"))
}

fn vector_value(v: &[Decimal]) -> Value {
    Value::Array(v.iter().map(number_value).collect())
}

fn floats(v: &[Decimal]) -> Vec<f64> {
    v.iter().map(Decimal::to_f64).collect()
}

impl BodySpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| schema(e.to_string()))?;
        let obj = object(&root, "body", &["simplex", "halfspaces", "ellipsoids"])?;
        let simplex = match field(obj, "simplex", "body")? {
            Value::String(s) => {
                let d = s
                    .strip_prefix("unit:")
                    .and_then(|d| d.parse::<usize>().ok())
                    .filter(|&d| d >= 1)
                    .ok_or_else(|| schema(format!("simplex '{s}' is not of the form unit:d")))?;
                SimplexSpec::Unit(d)
            }
            v @ Value::Array(_) => SimplexSpec::Vertices(matrix(v, "simplex")?),
            _ => {
                return Err(schema(
                    "simplex must be \"unit:d\" or a list of vertex rows",
                ))
            }
        };
        let list = |key: &str| -> Result<Vec<Value>> {
            match obj.get(key) {
                None => Ok(Vec::new()),
                Some(Value::Array(a)) => Ok(a.clone()),
                Some(_) => Err(schema(format!("{key} must be an array"))),
            }
        };
        let mut halfspaces = Vec::new();
        for (i, h) in list("halfspaces")?.iter().enumerate() {
            let path = format!("halfspaces[{i}]");
            let o = object(h, &path, &["normal", "offset"])?;
            halfspaces.push(HalfspaceSpec {
                normal: vector(field(o, "normal", &path)?, &format!("{path}.normal"))?,
                offset: number(field(o, "offset", &path)?, &format!("{path}.offset"))?,
            });
        }
        let mut ellipsoids = Vec::new();
        for (i, e) in list("ellipsoids")?.iter().enumerate() {
            let path = format!("ellipsoids[{i}]");
            let o = object(e, &path, &["matrix", "level", "side", "center"])?;
            let side = match o.get("side").map(|s| s.as_str()) {
                None | Some(Some("inside")) => Side::Inside,
                Some(Some("outside")) => Side::Outside,
                _ => {
                    return Err(schema(format!(
                        "{path}.side must be \"inside\" or \"outside\""
                    )))
                }
            };
            ellipsoids.push(EllipsoidSpec {
                matrix: matrix(field(o, "matrix", &path)?, &format!("{path}.matrix"))?,
                level: number(field(o, "level", &path)?, &format!("{path}.level"))?,
                side,
                center: o
                    .get("center")
                    .map(|c| vector(c, &format!("{path}.center")))
                    .transpose()?,
            });
        }
        let spec = BodySpec {
            simplex,
            halfspaces,
            ellipsoids,
        };
        spec.check_shapes()?;
        Ok(spec)
    }

    pub fn to_json_value(&self) -> Value {
        let mut obj = Map::new();
        let simplex = match &self.simplex {
            SimplexSpec::Unit(d) => Value::String(format!("unit:{d}")),
            SimplexSpec::Vertices(rows) => {
                Value::Array(rows.iter().map(|r| vector_value(r)).collect())
            }
        };
        obj.insert("simplex".into(), simplex);
        let hs = self
            .halfspaces
            .iter()
            .map(|h| {
                let mut o = Map::new();
                o.insert("normal".into(), vector_value(&h.normal));
                o.insert("offset".into(), number_value(&h.offset));
                Value::Object(o)
            })
            .collect();
        obj.insert("halfspaces".into(), Value::Array(hs));
        let es = self
            .ellipsoids
            .iter()
            .map(|e| {
                let mut o = Map::new();
                o.insert(
                    "matrix".into(),
                    Value::Array(e.matrix.iter().map(|r| vector_value(r)).collect()),
                );
                o.insert("level".into(), number_value(&e.level));
                let side = if e.side == Side::Inside {
                    "inside"
                } else {
                    "outside"
                };
                o.insert("side".into(), Value::String(side.into()));
                if let Some(c) = &e.center {
                    o.insert("center".into(), vector_value(c));
                }
                Value::Object(o)
            })
            .collect();
        obj.insert("ellipsoids".into(), Value::Array(es));
        Value::Object(obj)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("plain JSON")
    }

    pub fn dim(&self) -> usize {
        match &self.simplex {
            SimplexSpec::Unit(d) => *d,
            SimplexSpec::Vertices(rows) => rows.len().saturating_sub(1),
        }
    }

    fn check_shapes(&self) -> Result<()> {
        let d = self.dim();
        if let SimplexSpec::Vertices(rows) = &self.simplex {
            if rows.len() < 2 || rows.iter().any(|r| r.len() != d) {
                return Err(schema(format!(
                    "simplex needs d+1 vertex rows of length d (got {} rows)",
                    rows.len()
                )));
            }
        }
        for (i, h) in self.halfspaces.iter().enumerate() {
            if h.normal.len() != d {
                return Err(schema(format!(
                    "halfspaces[{i}].normal has length {}, expected {d}",
                    h.normal.len()
                )));
            }
        }
        for (i, e) in self.ellipsoids.iter().enumerate() {
            let n = e.matrix.len();
            if (n != d && n != d + 1) || e.matrix.iter().any(|r| r.len() != n) {
                return Err(schema(format!(
                    "ellipsoids[{i}].matrix must be square of size {d} or {}",
                    d + 1
                )));
            }
            if let Some(c) = &e.center {
                if c.len() != n {
                    return Err(schema(format!(
                        "ellipsoids[{i}].center has length {}, expected {n}",
                        c.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn simplex(&self) -> Result<Simplex> {
        match &self.simplex {
            SimplexSpec::Unit(d) => Ok(Simplex::unit(*d)),
            SimplexSpec::Vertices(rows) => Simplex::new(rows.iter().map(|r| floats(r)).collect()),
        }
    }

    pub fn halfspace_list(&self) -> Result<Vec<Halfspace>> {
        self.halfspaces
            .iter()
            .map(|h| Halfspace::new(floats(&h.normal), h.offset.to_f64()))
            .collect()
    }

    pub fn ellipsoid_list(&self) -> Result<Vec<(Ellipsoid, Side)>> {
        self.ellipsoids
            .iter()
            .map(|e| {
                let n = e.matrix.len();
                let m = DMatrix::from_fn(n, n, |i, j| e.matrix[i][j].to_f64());
                let center = e
                    .center
                    .as_deref()
                    .map(floats)
                    .unwrap_or_else(|| vec![0.0; n]);
                Ok((Ellipsoid::new(m, center, e.level.to_f64())?, e.side))
            })
            .collect()
    }

    /// The standardized body and the scale `|det M|` of its simplex.
    pub fn to_body(&self) -> Result<(Body, f64)> {
        standardize(
            &self.simplex()?,
            &self.halfspace_list()?,
            &self.ellipsoid_list()?,
        )
    }
}
