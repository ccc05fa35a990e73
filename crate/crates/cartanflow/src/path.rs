//! Parametrized paths `t -> rho(t)` in `p`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::families::{validate_p, Family, PElement};
use crate::linalg::{self, re, CMat, RMat};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    /// `e^{-1/t^2} [[cos(2/t), sin(2/t)], [sin(2/t), -cos(2/t)]]`: smooth,
    /// but no continuous diagonalizing frame exists through `t = 0`.
    Rellich,
    /// `a(t) [[cos(1/t), sin(1/t)], [sin(1/t), -cos(1/t)]]` with
    /// `a(t) = e^{-1/t^2} sin(1/t)`: smooth with infinitely many crossings
    /// accumulating at 0.
    KrieglLike,
    /// `diag(t, -t)`.
    ChamberCross,
    /// `R(t) diag(2, -2) R(t)^T` for the rotation `R(t)` by angle `t`.
    RotationFlow,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [
        Builtin::Rellich,
        Builtin::KrieglLike,
        Builtin::ChamberCross,
        Builtin::RotationFlow,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::Rellich => "rellich",
            Builtin::KrieglLike => "kriegl-like",
            Builtin::ChamberCross => "chamber-cross",
            Builtin::RotationFlow => "rotation-flow",
        }
    }

    pub fn family(&self) -> Family {
        Family::RealSymEvd(2)
    }

    pub fn default_domain(&self) -> (f64, f64) {
        match self {
            Builtin::RotationFlow => (0.0, 2.0 * PI),
            _ => (-1.0, 1.0),
        }
    }

    /// Value and derivative at `t`.
    fn eval(&self, t: f64) -> (RMat, RMat) {
        // [[cos, sin], [sin, -cos]] and its derivative in the angle
        let refl = |th: f64| RMat::from_row_slice(2, 2, &[th.cos(), th.sin(), th.sin(), -th.cos()]);
        let drefl = |th: f64| RMat::from_row_slice(2, 2, &[-th.sin(), th.cos(), th.cos(), th.sin()]);
        match self {
            Builtin::Rellich => {
                let e = if t == 0.0 { 0.0 } else { (-1.0 / (t * t)).exp() };
                if e == 0.0 {
                    return (RMat::zeros(2, 2), RMat::zeros(2, 2));
                }
                let th = 2.0 / t;
                let de = e * 2.0 / (t * t * t);
                let dth = -2.0 / (t * t);
                (refl(th) * e, refl(th) * de + drefl(th) * (e * dth))
            }
            Builtin::KrieglLike => {
                let e = if t == 0.0 { 0.0 } else { (-1.0 / (t * t)).exp() };
                if e == 0.0 {
                    return (RMat::zeros(2, 2), RMat::zeros(2, 2));
                }
                let th = 1.0 / t;
                let a = e * th.sin();
                let da = e * (2.0 / (t * t * t)) * th.sin() - e * th.cos() / (t * t);
                let dth = -1.0 / (t * t);
                (refl(th) * a, refl(th) * da + drefl(th) * (a * dth))
            }
            Builtin::ChamberCross => (
                RMat::from_row_slice(2, 2, &[t, 0.0, 0.0, -t]),
                RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            ),
            Builtin::RotationFlow => (refl(2.0 * t) * 2.0, drefl(2.0 * t) * 4.0),
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathKind {
    /// Samples joined by a C^1 piecewise cubic interpolant.
    Samples { times: Vec<f64>, matrices: Vec<CMat> },
    /// `constant + sum_j cos(j t) cos[j-1] + sin(j t) sin[j-1]`.
    TrigPoly {
        constant: CMat,
        cos: Vec<CMat>,
        sin: Vec<CMat>,
    },
    Builtin(Builtin),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub family: Family,
    pub kind: PathKind,
    pub domain: (f64, f64),
    pub derivative: bool,
}

impl PathSpec {
    /// Validates shapes, membership, times and domain.
    pub fn new(family: Family, kind: PathKind, domain: Option<(f64, f64)>, tol: &Tolerances) -> Result<Self> {
        Self::build(family, kind, domain, Some(tol))
    }

    /// Like [`PathSpec::new`] but without the membership test.
    pub fn new_unchecked(family: Family, kind: PathKind, domain: Option<(f64, f64)>) -> Result<Self> {
        Self::build(family, kind, domain, None)
    }

    fn build(family: Family, kind: PathKind, domain: Option<(f64, f64)>, tol: Option<&Tolerances>) -> Result<Self> {
        let check = |m: &CMat, what: &str| -> Result<()> {
            let x = PElement::new(family, m.clone())?;
            let Some(tol) = tol else {
                return Ok(());
            };
            let residual = validate_p(&x)?;
            if !(residual <= tol.eps_member(x.norm())) {
                return Err(Error::InvalidSpec(format!(
                    "{what} is not in {family}: membership residual {residual:e}"
                )));
            }
            Ok(())
        };
        let default_domain = match &kind {
            PathKind::Samples { times, matrices } => {
                if times.is_empty() || times.len() != matrices.len() {
                    return Err(Error::InvalidSpec(format!(
                        "{} times for {} matrices",
                        times.len(),
                        matrices.len()
                    )));
                }
                if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidSpec("sample times must be finite and strictly increasing".into()));
                }
                for (i, m) in matrices.iter().enumerate() {
                    check(m, &format!("sample {i}"))?;
                }
                (times[0], times[times.len() - 1])
            }
            PathKind::TrigPoly { constant, cos, sin } => {
                check(constant, "constant term")?;
                for (j, m) in cos.iter().enumerate() {
                    check(m, &format!("cos coefficient {}", j + 1))?;
                }
                for (j, m) in sin.iter().enumerate() {
                    check(m, &format!("sin coefficient {}", j + 1))?;
                }
                (0.0, 2.0 * PI)
            }
            PathKind::Builtin(b) => {
                if b.family() != family {
                    return Err(Error::FamilyMismatch {
                        expected: b.family().to_string(),
                        found: family.to_string(),
                    });
                }
                b.default_domain()
            }
        };
        let domain = domain.unwrap_or(default_domain);
        if !(domain.0.is_finite() && domain.1.is_finite() && domain.0 <= domain.1) {
            return Err(Error::InvalidSpec(format!("bad domain [{}, {}]", domain.0, domain.1)));
        }
        if let PathKind::Samples { .. } = kind {
            if domain.0 < default_domain.0 || domain.1 > default_domain.1 {
                return Err(Error::InvalidSpec("domain extends beyond the sample times".into()));
            }
        }
        Ok(PathSpec {
            family,
            kind,
            domain,
            derivative: true,
        })
    }

    /// Largest membership residual of the defining matrices, relative to
    /// `1 + |m|`.
    pub fn membership_residual(&self) -> f64 {
        let mats: Vec<&CMat> = match &self.kind {
            PathKind::Samples { matrices, .. } => matrices.iter().collect(),
            PathKind::TrigPoly { constant, cos, sin } => std::iter::once(constant).chain(cos).chain(sin).collect(),
            PathKind::Builtin(_) => vec![],
        };
        mats.into_iter()
            .map(|m| {
                let x = PElement {
                    family: self.family,
                    data: m.clone(),
                };
                validate_p(&x).map_or(f64::INFINITY, |r| r / (1.0 + x.norm()))
            })
            .fold(0.0, f64::max)
    }

    pub fn builtin(b: Builtin) -> Self {
        PathSpec {
            family: b.family(),
            kind: PathKind::Builtin(b),
            domain: b.default_domain(),
            derivative: true,
        }
    }

    pub fn with_domain(mut self, start: f64, end: f64) -> Self {
        self.domain = (start, end);
        self
    }

    pub fn constant(x: &PElement) -> Self {
        PathSpec {
            family: x.family,
            kind: PathKind::TrigPoly {
                constant: x.data.clone(),
                cos: vec![],
                sin: vec![],
            },
            domain: (0.0, 1.0),
            derivative: true,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.domain.0 && t <= self.domain.1
    }

    /// Evenly spaced grid over the whole domain.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, n)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Tangent of the interpolant at knot `i` (three-point formula on
/// nonuniform knots, one-sided at the ends).
fn knot_tangent(times: &[f64], ms: &[CMat], i: usize) -> CMat {
    let n = times.len();
    if n == 1 {
        return linalg::zeros(ms[0].nrows(), ms[0].ncols());
    }
    if n == 2 {
        return (&ms[1] - &ms[0]) * re(1.0 / (times[1] - times[0]));
    }
    let (a, b, cidx) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let (t0, t1, t2) = (times[a], times[b], times[cidx]);
    let t = times[i];
    // derivative of the quadratic Lagrange interpolant at t
    let w0 = ((t - t1) + (t - t2)) / ((t0 - t1) * (t0 - t2));
    let w1 = ((t - t0) + (t - t2)) / ((t1 - t0) * (t1 - t2));
    let w2 = ((t - t0) + (t - t1)) / ((t2 - t0) * (t2 - t1));
    &ms[a] * re(w0) + &ms[b] * re(w1) + &ms[cidx] * re(w2)
}

fn eval_samples(times: &[f64], ms: &[CMat], t: f64) -> (CMat, CMat) {
    let n = times.len();
    if n == 1 {
        return (ms[0].clone(), linalg::zeros(ms[0].nrows(), ms[0].ncols()));
    }
    let i = match times.partition_point(|&s| s <= t) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let h = times[i + 1] - times[i];
    let s = (t - times[i]) / h;
    let m0 = knot_tangent(times, ms, i);
    let m1 = knot_tangent(times, ms, i + 1);
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = &ms[i] * re(h00) + &m0 * re(h10 * h) + &ms[i + 1] * re(h01) + &m1 * re(h11 * h);
    let d00 = (6.0 * s2 - 6.0 * s) / h;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = (-6.0 * s2 + 6.0 * s) / h;
    let d11 = 3.0 * s2 - 2.0 * s;
    let deriv = &ms[i] * re(d00) + &m0 * re(d10) + &ms[i + 1] * re(d01) + &m1 * re(d11);
    (value, deriv)
}

/// Value and (when available) derivative of the path at `t`.
pub fn eval_path(spec: &PathSpec, t: f64) -> Result<(PElement, Option<PElement>)> {
    if !spec.contains(t) {
        return Err(Error::OutOfDomain {
            t,
            start: spec.domain.0,
            end: spec.domain.1,
        });
    }
    let (value, deriv) = match &spec.kind {
        PathKind::Samples { times, matrices } => eval_samples(times, matrices, t),
        PathKind::TrigPoly { constant, cos, sin } => {
            let mut value = constant.clone();
            let mut deriv = linalg::zeros(constant.nrows(), constant.ncols());
            for (j, m) in cos.iter().enumerate() {
                let k = (j + 1) as f64;
                value += m * re((k * t).cos());
                deriv -= m * re(k * (k * t).sin());
            }
            for (j, m) in sin.iter().enumerate() {
                let k = (j + 1) as f64;
                value += m * re((k * t).sin());
                deriv += m * re(k * (k * t).cos());
            }
            (value, deriv)
        }
        PathKind::Builtin(b) => {
            let (v, d) = b.eval(t);
            (linalg::from_real(&v), linalg::from_real(&d))
        }
    };
    let rho = PElement {
        family: spec.family,
        data: value,
    };
    let drho = spec.derivative.then_some(PElement {
        family: spec.family,
        data: deriv,
    });
    Ok((rho, drho))
}

/// Value and derivative, failing when the derivative is unavailable.
pub fn eval_jet(spec: &PathSpec, t: f64) -> Result<(PElement, PElement)> {
    let (rho, drho) = eval_path(spec, t)?;
    Ok((rho, drho.ok_or(Error::DerivativeUnavailable)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rellich_vanishes_at_zero() {
        let (r, d) = eval_path(&PathSpec::builtin(Builtin::Rellich), 0.0).unwrap();
        assert_eq!(r.norm(), 0.0);
        assert_eq!(d.unwrap().norm(), 0.0);
    }

    #[test]
    fn builtin_derivatives_match_finite_differences() {
        for b in Builtin::ALL {
            let spec = PathSpec::builtin(b);
            for &t in &[0.37, -0.61, 0.9] {
                if !spec.contains(t) {
                    continue;
                }
                let h = 1e-6;
                let (_, d) = eval_path(&spec, t).unwrap();
                let p = eval_path(&spec, t + h).unwrap().0;
                let m = eval_path(&spec, t - h).unwrap().0;
                let fd = (&p - &m).data * re(0.5 / h);
                let scale = 1.0 + linalg::max_abs(&fd);
                assert!(linalg::max_abs(&(fd - d.unwrap().data)) < 1e-6 * scale, "{b} at {t}");
            }
        }
    }

    #[test]
    fn trigpoly_constant_and_cosine() {
        let f = Family::RealSymEvd(2);
        let c0 = linalg::from_real(&RMat::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -1.0]));
        let spec = PathSpec::new(
            f,
            PathKind::TrigPoly {
                constant: linalg::zeros(2, 2),
                cos: vec![c0.clone()],
                sin: vec![],
            },
            None,
            &Tolerances::default(),
        )
        .unwrap();
        let (r, d) = eval_path(&spec, 0.0).unwrap();
        assert_eq!(r.data, c0);
        assert_eq!(d.unwrap().norm(), 0.0);
        assert!(matches!(eval_path(&spec, 7.0), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn samples_reproduce_quadratics() {
        // the three-point tangents are exact on quadratics, so is the cubic
        let f = Family::RealSymEvd(2);
        let base = RMat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0]);
        let times = vec![0.0, 0.3, 0.5, 1.1, 1.4];
        let matrices = times.iter().map(|&t: &f64| linalg::from_real(&(&base * (t * t)))).collect();
        let spec = PathSpec::new(f, PathKind::Samples { times, matrices }, None, &Tolerances::default()).unwrap();
        for &t in &[0.1, 0.45, 0.8, 1.3] {
            let (r, d) = eval_path(&spec, t).unwrap();
            assert!(linalg::max_abs(&(r.data - linalg::from_real(&(&base * (t * t))))) < 1e-13);
            assert!(linalg::max_abs(&(d.unwrap().data - linalg::from_real(&(&base * (2.0 * t))))) < 1e-12);
        }
    }

    #[test]
    fn rejects_non_members() {
        let f = Family::RealSymEvd(2);
        let bad = linalg::from_real(&RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]));
        let kind = PathKind::TrigPoly {
            constant: bad,
            cos: vec![],
            sin: vec![],
        };
        assert!(PathSpec::new(f, kind, None, &Tolerances::default()).is_err());
    }

    #[test]
    fn linspace_endpoints_exact() {
        let g = linspace(0.0, 2.0 * PI, 7);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[6], 2.0 * PI);
    }
}
