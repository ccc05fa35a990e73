//! Text formats: path specification JSON, grid and tolerance flags.
//!
//! A path specification looks like
//!
//! ```json
//! { "family": "herm-evd:3", "kind": "trigpoly", "domain": [0, 1],
//!   "data": { "constant": [[...]], "cos": [[[...]]], "sin": [] } }
//! ```
//!
//! Matrices are arrays of rows; an entry is a number or a `[re, im]` pair.
//! `"samples"` data is `{"times": [...], "matrices": [...]}` and `"builtin"`
//! data is a name (or `{"name": ...}`). An optional `"derivative": false`
//! marks the derivative as unavailable.

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::families::Family;
use crate::linalg::{c, CMat, C64};
use crate::path::{Builtin, PathKind, PathSpec};
use crate::tolerances::Tolerances;

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn parse_family(s: &str) -> Result<Family> {
    s.parse()
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(format!("{what}: expected a finite number")))
}

fn parse_entry(v: &Value) -> Result<C64> {
    match v {
        Value::Number(_) => Ok(c(as_f64(v, "matrix entry")?, 0.0)),
        Value::Array(pair) if pair.len() == 2 => Ok(c(as_f64(&pair[0], "real part")?, as_f64(&pair[1], "imaginary part")?)),
        _ => Err(parse_err("matrix entry must be a number or a [re, im] pair")),
    }
}

/// Parses a row-major nested array into a matrix of the expected shape.
pub fn parse_matrix(v: &Value, shape: (usize, usize)) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| parse_err("matrix must be an array of rows"))?;
    if rows.len() != shape.0 {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: (rows.len(), rows.first().and_then(|r| r.as_array()).map_or(0, |r| r.len())),
        });
    }
    let mut m = CMat::zeros(shape.0, shape.1);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| parse_err("matrix row must be an array"))?;
        if row.len() != shape.1 {
            return Err(Error::ShapeMismatch {
                expected: shape,
                found: (rows.len(), row.len()),
            });
        }
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = parse_entry(e)?;
        }
    }
    Ok(m)
}

fn parse_matrix_list(v: Option<&Value>, shape: (usize, usize), what: &str) -> Result<Vec<CMat>> {
    match v {
        None | Some(Value::Null) => Ok(vec![]),
        Some(Value::Array(items)) => items.iter().map(|m| parse_matrix(m, shape)).collect(),
        Some(_) => Err(parse_err(format!("{what} must be an array of matrices"))),
    }
}

fn parse_domain(v: Option<&Value>) -> Result<Option<(f64, f64)>> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::Array(ab)) if ab.len() == 2 => {
            let a = as_f64(&ab[0], "domain start")?;
            let b = as_f64(&ab[1], "domain end")?;
            if a > b {
                return Err(parse_err("domain start exceeds domain end"));
            }
            Ok(Some((a, b)))
        }
        Some(_) => Err(parse_err("domain must be [start, end]")),
    }
}

/// Parses a path specification; `tol = None` skips the membership test.
pub fn parse_path_spec_value(v: &Value, tol: Option<&Tolerances>) -> Result<PathSpec> {
    let obj = v.as_object().ok_or_else(|| parse_err("path spec must be a JSON object"))?;
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err("missing string field 'kind'"))?;
    let family = match obj.get("family") {
        Some(Value::String(s)) => Some(parse_family(s)?),
        None | Some(Value::Null) => None,
        Some(_) => return Err(parse_err("'family' must be a string")),
    };
    let domain = parse_domain(obj.get("domain"))?;
    let data = obj.get("data").unwrap_or(&Value::Null);
    let (family, kind) = match kind {
        "builtin" => {
            let name = match data {
                Value::String(s) => s.as_str(),
                Value::Object(o) => o
                    .get("name")
                    .and_then(Value::as_str)
                    .ok_or_else(|| parse_err("builtin data needs a 'name'"))?,
                _ => return Err(parse_err("builtin data must be a name")),
            };
            let b: Builtin = name.parse()?;
            (family.unwrap_or(b.family()), PathKind::Builtin(b))
        }
        "samples" | "trigpoly" => {
            let family = family.ok_or_else(|| parse_err("missing string field 'family'"))?;
            let shape = family.ambient_shape();
            let data = data.as_object().ok_or_else(|| parse_err(format!("{kind} data must be an object")))?;
            let kind = if kind == "samples" {
                let times = data
                    .get("times")
                    .and_then(Value::as_array)
                    .ok_or_else(|| parse_err("samples data needs 'times'"))?
                    .iter()
                    .map(|t| as_f64(t, "sample time"))
                    .collect::<Result<Vec<_>>>()?;
                let matrices = parse_matrix_list(data.get("matrices"), shape, "matrices")?;
                PathKind::Samples { times, matrices }
            } else {
                let constant = match data.get("constant") {
                    None | Some(Value::Null) => CMat::zeros(shape.0, shape.1),
                    Some(m) => parse_matrix(m, shape)?,
                };
                let cos = parse_matrix_list(data.get("cos"), shape, "cos")?;
                let sin = parse_matrix_list(data.get("sin"), shape, "sin")?;
                PathKind::TrigPoly { constant, cos, sin }
            };
            (family, kind)
        }
        other => return Err(parse_err(format!("unknown kind '{other}'"))),
    };
    let mut spec = match tol {
        Some(tol) => PathSpec::new(family, kind, domain, tol)?,
        None => PathSpec::new_unchecked(family, kind, domain)?,
    };
    match obj.get("derivative") {
        None | Some(Value::Null) => {}
        Some(Value::Bool(b)) => spec.derivative = *b,
        Some(_) => return Err(parse_err("'derivative' must be a boolean")),
    }
    Ok(spec)
}

/// Parses and validates a path specification from JSON text.
pub fn parse_path_spec(text: &str, tol: &Tolerances) -> Result<PathSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(format!("malformed JSON: {e}")))?;
    parse_path_spec_value(&v, Some(tol))
}

/// Parses without the membership test (shapes, times and domain are still
/// checked).
pub fn parse_path_spec_unchecked(text: &str) -> Result<PathSpec> {
    let v: Value = serde_json::from_str(text).map_err(|e| parse_err(format!("malformed JSON: {e}")))?;
    parse_path_spec_value(&v, None)
}

fn num(x: f64) -> Value {
    json!(if x == 0.0 { 0.0 } else { x })
}

/// Matrix as nested rows; complex entries as `[re, im]` unless `real`.
pub fn matrix_to_json(m: &CMat, real: bool) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols())
                        .map(|j| {
                            let z = m[(i, j)];
                            if real {
                                num(z.re)
                            } else {
                                json!([num(z.re), num(z.im)])
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn path_spec_to_json(spec: &PathSpec) -> Value {
    let real = spec.family.is_real();
    let mut obj = Map::new();
    obj.insert("family".into(), json!(spec.family.to_string()));
    let (kind, data) = match &spec.kind {
        PathKind::Builtin(b) => ("builtin", json!(b.name())),
        PathKind::Samples { times, matrices } => (
            "samples",
            json!({
                "times": times.iter().map(|&t| num(t)).collect::<Vec<_>>(),
                "matrices": matrices.iter().map(|m| matrix_to_json(m, real)).collect::<Vec<_>>(),
            }),
        ),
        PathKind::TrigPoly { constant, cos, sin } => (
            "trigpoly",
            json!({
                "constant": matrix_to_json(constant, real),
                "cos": cos.iter().map(|m| matrix_to_json(m, real)).collect::<Vec<_>>(),
                "sin": sin.iter().map(|m| matrix_to_json(m, real)).collect::<Vec<_>>(),
            }),
        ),
    };
    obj.insert("kind".into(), json!(kind));
    obj.insert("domain".into(), json!([num(spec.domain.0), num(spec.domain.1)]));
    obj.insert("data".into(), data);
    if !spec.derivative {
        obj.insert("derivative".into(), json!(false));
    }
    Value::Object(obj)
}

/// Time grid `start:end:n` with `n >= 2` and `start < end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        crate::path::linspace(self.start, self.end, self.n)
    }
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(parse_err(format!("grid '{s}' is not of the form start:end:n")));
    };
    let num = |x: &str, what: &str| -> Result<f64> {
        x.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| parse_err(format!("grid {what} '{x}' is not a finite number")))
    };
    let start = num(a, "start")?;
    let end = num(b, "end")?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("grid sample count '{n}' is not a positive integer")))?;
    if n < 2 {
        return Err(parse_err("grid needs at least 2 samples"));
    }
    if !(start < end) {
        return Err(parse_err("grid start must be below grid end"));
    }
    Ok(GridSpec { start, end, n })
}

/// Parses `key=value` and applies it to `tol`.
pub fn apply_tolerance(tol: &mut Tolerances, s: &str) -> Result<()> {
    let (key, value) = s
        .split_once('=')
        .ok_or_else(|| parse_err(format!("tolerance '{s}' is not of the form key=value")))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|_| parse_err(format!("tolerance value '{value}' is not a number")))?;
    tol.set(key.trim(), value)
}
