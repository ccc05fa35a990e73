//! CSV and JSON output for diagonalized paths.
//!
//! CSV layout (version 1):
//!
//! ```text
//! # cartanflow v1
//! # family=real-sym-evd:2
//! # command=diagonalize
//! t,lambda_sorted_1,lambda_sorted_2,face,residual_offdiag,residual_group,status
//! ...
//! # max_residual_offdiag=...
//! ```
//!
//! The `u_*` columns hold U flattened column-major, left block first for the
//! SVD families. Complex families interleave `_re`/`_im` columns. Failed
//! samples keep their `t` and have empty value cells and an `error: ...`
//! status.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::engine::{DiagonalizedPath, Warning};
use crate::families::Family;
use crate::linalg::C64;

pub const FORMAT_VERSION: &str = "cartanflow v1";

/// Shortest round-trip decimal; `-0` is written as `0`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let a = x.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(if x == 0.0 { 0.0 } else { x })
    } else {
        json!(fmt_f64(x))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub t: f64,
    pub lambda_sorted: Option<Vec<f64>>,
    pub lambda_lift: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub face: Option<String>,
    pub u: Option<Vec<C64>>,
    pub residual_offdiag: Option<f64>,
    pub residual_group: Option<f64>,
    pub c1_defect: Option<f64>,
    pub status: String,
}

/// Which column groups a report carries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Columns {
    pub lambda_sorted: bool,
    pub lambda_lift: bool,
    pub mu: bool,
    pub face: bool,
    pub u: bool,
    pub residual_offdiag: bool,
    pub residual_group: bool,
    pub c1_defect: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub family: Family,
    pub command: String,
    pub columns: Columns,
    pub rows: Vec<Row>,
    /// Footer entries, in insertion order.
    pub meta: Vec<(String, Value)>,
}

impl Report {
    pub fn new(family: Family, command: &str, columns: Columns) -> Self {
        Report {
            family,
            command: command.into(),
            columns,
            rows: vec![],
            meta: vec![],
        }
    }

    pub fn from_path(command: &str, path: &DiagonalizedPath) -> Self {
        let columns = Columns {
            lambda_sorted: !path.lambda_sorted.is_empty(),
            lambda_lift: !path.lambda_lift.is_empty(),
            mu: !path.mu.is_empty(),
            face: !path.face.is_empty(),
            u: !path.u.is_empty(),
            residual_offdiag: !path.residual_offdiag.is_empty(),
            residual_group: !path.residual_group.is_empty(),
            c1_defect: !path.c1_defect.is_empty(),
        };
        let mut report = Report::new(path.family, command, columns);
        for (i, &t) in path.times.iter().enumerate() {
            let mut status = String::from("ok");
            for w in &path.warnings {
                match w {
                    Warning::MatchAmbiguous { index, .. } if *index == i => status = "ok:ambiguous-match".into(),
                    Warning::DetRelaxed { index, .. } if *index == i => status = "ok:det-relaxed".into(),
                    _ => {}
                }
            }
            report.rows.push(Row {
                t,
                lambda_sorted: path.lambda_sorted.get(i).map(|a| a.coords.clone()),
                lambda_lift: path.lambda_lift.get(i).map(|a| a.coords.clone()),
                mu: path.mu.get(i).map(|a| a.coords.clone()),
                face: path.face.get(i).map(|f| f.hash_string()),
                u: path.u.get(i).map(|u| u.flatten()),
                residual_offdiag: path.residual_offdiag.get(i).copied(),
                residual_group: path.residual_group.get(i).copied(),
                c1_defect: path.c1_defect.get(i).copied(),
                status,
            });
        }
        if columns.residual_offdiag {
            report.push_meta("max_residual_offdiag", num(path.max_residual_offdiag()));
        }
        if columns.residual_group {
            report.push_meta("max_residual_group", num(path.max_residual_group()));
        }
        if let Some(f) = path.ae_match_fraction {
            report.push_meta("ae_match_fraction", num(f));
        }
        report
    }

    pub fn push_meta(&mut self, key: &str, value: Value) {
        self.meta.push((key.into(), value));
    }

    pub fn failed_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.status.starts_with("error")).count()
    }

    fn u_len(&self) -> usize {
        let (p, q) = self.family.ambient_shape();
        if self.family.is_svd() {
            p * p + q * q
        } else {
            p * p
        }
    }

    pub fn header(&self) -> Vec<String> {
        let r = self.family.a_dim();
        let c = &self.columns;
        let mut h = vec!["t".to_string()];
        let mut vec_cols = |on: bool, name: &str| {
            if on {
                h.extend((1..=r).map(|i| format!("{name}_{i}")));
            }
        };
        vec_cols(c.lambda_sorted, "lambda_sorted");
        vec_cols(c.lambda_lift, "lambda_lift");
        vec_cols(c.mu, "mu");
        if c.face {
            h.push("face".into());
        }
        if c.u {
            for k in 1..=self.u_len() {
                if self.family.is_real() {
                    h.push(format!("u_{k}"));
                } else {
                    h.push(format!("u_{k}_re"));
                    h.push(format!("u_{k}_im"));
                }
            }
        }
        for (on, name) in [
            (c.residual_offdiag, "residual_offdiag"),
            (c.residual_group, "residual_group"),
            (c.c1_defect, "c1_defect"),
        ] {
            if on {
                h.push(name.into());
            }
        }
        h.push("status".into());
        h
    }

    fn csv_row(&self, row: &Row) -> Vec<String> {
        let r = self.family.a_dim();
        let c = &self.columns;
        let mut cells = vec![fmt_f64(row.t)];
        let push_vec = |cells: &mut Vec<String>, on: bool, v: &Option<Vec<f64>>| {
            if on {
                match v {
                    Some(v) => cells.extend(v.iter().map(|&x| fmt_f64(x))),
                    None => cells.extend(std::iter::repeat_n(String::new(), r)),
                }
            }
        };
        push_vec(&mut cells, c.lambda_sorted, &row.lambda_sorted);
        push_vec(&mut cells, c.lambda_lift, &row.lambda_lift);
        push_vec(&mut cells, c.mu, &row.mu);
        if c.face {
            cells.push(row.face.clone().unwrap_or_default());
        }
        if c.u {
            let width = if self.family.is_real() { 1 } else { 2 } * self.u_len();
            match &row.u {
                Some(u) => {
                    for z in u {
                        cells.push(fmt_f64(z.re));
                        if !self.family.is_real() {
                            cells.push(fmt_f64(z.im));
                        }
                    }
                }
                None => cells.extend(std::iter::repeat_n(String::new(), width)),
            }
        }
        for (on, v) in [
            (c.residual_offdiag, row.residual_offdiag),
            (c.residual_group, row.residual_group),
            (c.c1_defect, row.c1_defect),
        ] {
            if on {
                cells.push(v.map(fmt_f64).unwrap_or_default());
            }
        }
        cells.push(csv_escape(&row.status));
        cells
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {FORMAT_VERSION}");
        let _ = writeln!(out, "# family={}", self.family);
        let _ = writeln!(out, "# command={}", self.command);
        let _ = writeln!(out, "{}", self.header().join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", self.csv_row(row).join(","));
        }
        for (k, v) in &self.meta {
            let v = match v {
                Value::Number(n) => n.as_f64().map(fmt_f64).unwrap_or_else(|| n.to_string()),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let c = &self.columns;
        let real = self.family.is_real();
        let vec_json = |v: &Option<Vec<f64>>| v.as_ref().map_or(Value::Null, |v| Value::Array(v.iter().map(|&x| num(x)).collect()));
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut o = Map::new();
                o.insert("t".into(), num(row.t));
                if c.lambda_sorted {
                    o.insert("lambda_sorted".into(), vec_json(&row.lambda_sorted));
                }
                if c.lambda_lift {
                    o.insert("lambda_lift".into(), vec_json(&row.lambda_lift));
                }
                if c.mu {
                    o.insert("mu".into(), vec_json(&row.mu));
                }
                if c.face {
                    o.insert("face".into(), row.face.as_ref().map_or(Value::Null, |f| json!(f)));
                }
                if c.u {
                    let u = row.u.as_ref().map_or(Value::Null, |u| {
                        Value::Array(
                            u.iter()
                                .map(|z| if real { num(z.re) } else { json!([num(z.re), num(z.im)]) })
                                .collect(),
                        )
                    });
                    o.insert("u".into(), u);
                }
                for (on, name, v) in [
                    (c.residual_offdiag, "residual_offdiag", row.residual_offdiag),
                    (c.residual_group, "residual_group", row.residual_group),
                    (c.c1_defect, "c1_defect", row.c1_defect),
                ] {
                    if on {
                        o.insert(name.into(), v.map_or(Value::Null, num));
                    }
                }
                o.insert("status".into(), json!(row.status));
                Value::Object(o)
            })
            .collect();
        let meta: Map<String, Value> = self.meta.iter().cloned().collect();
        json!({
            "format": FORMAT_VERSION,
            "family": self.family.to_string(),
            "command": self.command,
            "samples": rows,
            "meta": meta,
        })
    }
}

fn csv_escape(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::sorted_curve;
    use crate::path::{Builtin, PathSpec};
    use crate::tolerances::Tolerances;

    #[test]
    fn float_formatting_round_trips() {
        for x in [1.0, -0.5, 1e-300, 3.0e20, 0.1 + 0.2, -1.2345e-7, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(2.0), "2");
    }

    #[test]
    fn csv_layout() {
        let spec = PathSpec::builtin(Builtin::Rellich);
        let grid = spec.grid(5);
        let path = sorted_curve(&spec, &grid, &Tolerances::default()).unwrap();
        let mut report = Report::from_path("diagonalize", &path);
        assert!(report.columns.u);
        report.columns.u = false;
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# cartanflow v1");
        assert_eq!(lines[3], "t,lambda_sorted_1,lambda_sorted_2,face,residual_offdiag,residual_group,status");
        assert_eq!(lines.len(), 4 + 5 + 2);
        assert!(lines[6].starts_with("0,0,0,A:{12},"));
        assert!(lines[9].starts_with("# max_residual_offdiag="));
    }

    #[test]
    fn failed_rows_have_empty_cells() {
        let mut r = Report::new(
            Family::HermEvd(2),
            "flow",
            Columns {
                lambda_lift: true,
                u: true,
                ..Default::default()
            },
        );
        r.rows.push(Row {
            t: 0.5,
            status: "error: near-singular, point".into(),
            ..Default::default()
        });
        let csv = r.to_csv();
        let row = csv.lines().nth(4).unwrap();
        assert_eq!(row, "0.5,,,,,,,,,,,\"error: near-singular, point\"");
        assert_eq!(r.header().len(), 1 + 2 + 8 + 1);
        assert_eq!(r.failed_rows(), 1);
        assert_eq!(r.to_json()["samples"][0]["u"], Value::Null);
    }
}
