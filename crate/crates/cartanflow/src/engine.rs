//! Path-level algorithms: sorted curves, differentiable lifts, the analytic
//! frame flow and per-sample (measurable) diagonalization.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::families::{
    adjoint_action_inv, diagonalize_point_with, project_a, AVector, Family, KElement, PElement,
};
use crate::lie_ops::{eigen_structure, KTangent};
use crate::linalg::{self, re, CMat};
use crate::oracles;
use crate::path::{eval_jet, eval_path, PathSpec};
use crate::simultaneous::simultaneous_diagonalize_with;
use crate::tolerances::Tolerances;
use crate::weyl::{self, face_of, match_jet, FaceLabel};

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Several Weyl elements matched the jet equally well.
    MatchAmbiguous { index: usize, t: f64 },
    /// The determinant condition was relaxed to `|det| = 1`.
    DetRelaxed { index: usize, t: f64 },
}

/// Per-sample output of the path engines. Columns that an engine does not
/// compute are left empty.
#[derive(Debug, Clone)]
pub struct DiagonalizedPath {
    pub family: Family,
    pub times: Vec<f64>,
    pub lambda_sorted: Vec<AVector>,
    pub lambda_lift: Vec<AVector>,
    pub mu: Vec<AVector>,
    pub u: Vec<KElement>,
    pub face: Vec<FaceLabel>,
    pub residual_offdiag: Vec<f64>,
    pub residual_group: Vec<f64>,
    /// `|(lift[i] - lift[i-1]) / h - mu[i-1]|`, zero at the first sample.
    pub c1_defect: Vec<f64>,
    /// Fraction of regular interior samples where the finite difference of
    /// the sorted curve agrees with `mu` (measurable curve only).
    pub ae_match_fraction: Option<f64>,
    pub warnings: Vec<Warning>,
}

impl DiagonalizedPath {
    fn empty(family: Family, times: &[f64]) -> Self {
        DiagonalizedPath {
            family,
            times: times.to_vec(),
            lambda_sorted: vec![],
            lambda_lift: vec![],
            mu: vec![],
            u: vec![],
            face: vec![],
            residual_offdiag: vec![],
            residual_group: vec![],
            c1_defect: vec![],
            ae_match_fraction: None,
            warnings: vec![],
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_residual_offdiag(&self) -> f64 {
        self.residual_offdiag.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_residual_group(&self) -> f64 {
        self.residual_group.iter().copied().fold(0.0, f64::max)
    }

    fn push_faces(&mut self, tol: &Tolerances) -> Result<()> {
        let wt = self.family.weyl_type();
        self.face = self
            .lambda_sorted
            .iter()
            .enumerate()
            .map(|(i, l)| face_of(wt, &l.coords, tol.face).map_err(|e| e.at_sample(i, self.times[i])))
            .collect::<Result<_>>()?;
        Ok(())
    }
}

fn check_grid(spec: &PathSpec, grid: &[f64]) -> Result<()> {
    if let Some(&t) = grid.iter().find(|&&t| !spec.contains(t)) {
        return Err(Error::OutOfDomain {
            t,
            start: spec.domain.0,
            end: spec.domain.1,
        });
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidSpec("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Off-pattern residual of `Ad_U^{-1}(x)` and its `a` coordinates.
fn frame_residual(u: &KElement, x: &PElement) -> Result<(AVector, f64)> {
    Ok(project_a(&adjoint_action_inv(u, x)?))
}

struct PointSample {
    u: KElement,
    lambda: AVector,
    offdiag: f64,
}

fn diagonalize_sample(spec: &PathSpec, t: f64, tol: &Tolerances) -> Result<PointSample> {
    let (rho, _) = eval_path(spec, t)?;
    let (u, lambda) = diagonalize_point_with(&rho, tol)?;
    let (_, offdiag) = frame_residual(&u, &rho)?;
    Ok(PointSample { u, lambda, offdiag })
}

/// Chamber representative of the spectrum at every grid point. Samples are
/// processed in parallel; output order follows the grid.
pub fn sorted_curve(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Result<DiagonalizedPath> {
    check_grid(spec, grid)?;
    let samples: Vec<PointSample> = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| diagonalize_sample(spec, t, tol).map_err(|e| e.at_sample(i, t)))
        .collect::<Result<_>>()?;
    let mut out = DiagonalizedPath::empty(spec.family, grid);
    for (i, s) in samples.into_iter().enumerate() {
        if s.u.det_relaxed {
            out.warnings.push(Warning::DetRelaxed { index: i, t: grid[i] });
        }
        out.residual_group.push(s.u.group_residual());
        out.residual_offdiag.push(s.offdiag);
        out.lambda_sorted.push(s.lambda);
        out.u.push(s.u);
    }
    out.push_faces(tol)?;
    Ok(out)
}

/// Per-sample sorted curve that also reports per-sample results for failed
/// samples instead of aborting.
pub fn sorted_curve_partial(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Vec<Result<(KElement, AVector, FaceLabel, f64)>> {
    let wt = spec.family.weyl_type();
    grid.par_iter()
        .enumerate()
        .map(|(i, &t)| {
            let s = diagonalize_sample(spec, t, tol)?;
            let face = face_of(wt, &s.lambda.coords, tol.face)?;
            Ok((s.u, s.lambda, face, s.offdiag))
        }
        .map_err(|e: Error| e.at_sample(i, t)))
        .collect()
}

/// Jet of the spectrum at `t`: `lambda`, `mu` and a frame diagonalizing
/// both `rho(t)` and the commutant part of `rho'(t)`.
pub fn pointwise_derivative(spec: &PathSpec, t: f64, tol: &Tolerances) -> Result<(AVector, AVector, KElement)> {
    let (rho, drho) = eval_jet(spec, t)?;
    let es = eigen_structure(&rho, tol.cluster)?;
    let pd = es.project(&drho)?;
    let (u, mut ls) = simultaneous_diagonalize_with(&[rho, pd], tol)?;
    let mu = ls.pop().expect("two elements");
    let lambda = ls.pop().expect("two elements");
    Ok((lambda, mu, u))
}

/// Differentiable lift obtained by matching jets between consecutive samples.
pub fn c1_lift(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Result<DiagonalizedPath> {
    check_grid(spec, grid)?;
    let family = spec.family;
    let wt = family.weyl_type();
    let mut out = DiagonalizedPath::empty(family, grid);
    for (i, &t) in grid.iter().enumerate() {
        let (lambda, mu, u) = pointwise_derivative(spec, t, tol).map_err(|e| e.at_sample(i, t))?;
        let (lambda, mu, u) = if i == 0 {
            (lambda, mu, u)
        } else {
            let h = t - grid[i - 1];
            let prev_l = &out.lambda_lift[i - 1].coords;
            let prev_m = &out.mu[i - 1].coords;
            let predicted: Vec<f64> = prev_l.iter().zip(prev_m).map(|(l, m)| l + h * m).collect();
            let m = match_jet(wt, (&predicted, prev_m), (&lambda.coords, &mu.coords), h);
            if m.ambiguous {
                out.warnings.push(Warning::MatchAmbiguous { index: i, t });
            }
            let u = if m.w.is_identity() {
                u
            } else {
                let rep = crate::families::weyl_representative(family, &m.w);
                let mut v = u.compose(&rep.inverse());
                v.det_relaxed |= u.det_relaxed;
                v
            };
            (
                AVector {
                    family,
                    coords: m.w.apply(&lambda.coords),
                },
                AVector {
                    family,
                    coords: m.w.apply(&mu.coords),
                },
                u,
            )
        };
        let defect = if i == 0 {
            0.0
        } else {
            let h = t - grid[i - 1];
            let prev = &out.lambda_lift[i - 1].coords;
            let prev_mu = &out.mu[i - 1].coords;
            lambda
                .coords
                .iter()
                .zip(prev)
                .zip(prev_mu)
                .map(|((l, p), m)| ((l - p) / h - m).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let (rho, _) = eval_path(spec, t)?;
        let (_, offdiag) = frame_residual(&u, &rho)?;
        if u.det_relaxed {
            out.warnings.push(Warning::DetRelaxed { index: i, t });
        }
        out.c1_defect.push(defect);
        out.residual_offdiag.push(offdiag);
        out.residual_group.push(u.group_residual());
        out.lambda_sorted.push(AVector {
            family,
            coords: weyl::chamber_sort(wt, &lambda.coords).0,
        });
        out.lambda_lift.push(lambda);
        out.mu.push(mu);
        out.u.push(u);
    }
    out.push_faces(tol)?;
    Ok(out)
}

/// Default regularity threshold for flows at a point.
pub fn default_gap_min(rho: &PElement) -> f64 {
    1e-6 * (1.0 + rho.norm())
}

/// Right-hand side `k(t) = -ad_rho^{-1}(Pi_perp(rho'))` of `U' = k U`.
pub fn flow_generator(spec: &PathSpec, t: f64, gap_min: Option<f64>, tol: &Tolerances) -> Result<KTangent> {
    let (rho, drho) = eval_jet(spec, t)?;
    let es = eigen_structure(&rho, tol.cluster)?;
    let threshold = gap_min.unwrap_or_else(|| default_gap_min(&rho));
    if !(es.min_root >= threshold) {
        return Err(Error::NearSingularPoint {
            t: Some(t),
            gap: es.min_root,
            gap_min: threshold,
        });
    }
    let perp = es.project_perp(&drho)?;
    Ok(es.ad_inverse_unchecked(&perp)?.scaled(-1.0))
}

fn retract(family: Family, left: &CMat, right: &Option<CMat>, relaxed: bool) -> Result<KElement> {
    let real = family.is_real();
    Ok(KElement {
        family,
        left: linalg::polar_unitary(left, real)?,
        right: right.as_ref().map(|r| linalg::polar_unitary(r, real)).transpose()?,
        det_relaxed: relaxed,
    })
}

/// Integrates `U' = k(t) U` along the grid starting from the diagonalizing
/// frame at the first grid point.
pub fn analytic_flow(spec: &PathSpec, grid: &[f64], gap_min: Option<f64>, tol: &Tolerances) -> Result<DiagonalizedPath> {
    check_grid(spec, grid)?;
    let t0 = *grid.first().ok_or_else(|| Error::InvalidSpec("empty grid".into()))?;
    let (rho0, _) = eval_path(spec, t0)?;
    let (u0, _) = diagonalize_point_with(&rho0, tol)?;
    analytic_flow_from(spec, grid, gap_min, u0, tol)
}

/// As [`analytic_flow`] with a caller-provided initial frame, which must
/// diagonalize `rho` at the first grid point.
pub fn analytic_flow_from(
    spec: &PathSpec,
    grid: &[f64],
    gap_min: Option<f64>,
    u0: KElement,
    tol: &Tolerances,
) -> Result<DiagonalizedPath> {
    check_grid(spec, grid)?;
    let family = spec.family;
    let wt = family.weyl_type();
    let mut out = DiagonalizedPath::empty(family, grid);
    let mut u = u0;
    let relaxed = u.det_relaxed;
    let mut k_here = if grid.is_empty() {
        None
    } else {
        Some(flow_generator(spec, grid[0], gap_min, tol)?)
    };
    for (i, &t) in grid.iter().enumerate() {
        if i > 0 {
            let h = t - grid[i - 1];
            let t_prev = grid[i - 1];
            let k1 = k_here.take().expect("generator at previous sample");
            let k_mid = flow_generator(spec, t_prev + 0.5 * h, gap_min, tol)?;
            let k_end = flow_generator(spec, t, gap_min, tol)?;
            let stage = |k: &KTangent, l: &CMat, r: &Option<CMat>| -> (CMat, Option<CMat>) {
                let left = &k.left * l;
                let right = match (&k.right, r) {
                    (Some(a), Some(b)) => Some(a * b),
                    _ => None,
                };
                (left, right)
            };
            let axpy = |base: &CMat, d: &CMat, s: f64| base + d * re(s);
            let axpy_opt = |base: &Option<CMat>, d: &Option<CMat>, s: f64| match (base, d) {
                (Some(b), Some(d)) => Some(axpy(b, d, s)),
                _ => None,
            };
            let (l0, r0) = (u.left.clone(), u.right.clone());
            let (d1l, d1r) = stage(&k1, &l0, &r0);
            let (d2l, d2r) = stage(&k_mid, &axpy(&l0, &d1l, 0.5 * h), &axpy_opt(&r0, &d1r, 0.5 * h));
            let (d3l, d3r) = stage(&k_mid, &axpy(&l0, &d2l, 0.5 * h), &axpy_opt(&r0, &d2r, 0.5 * h));
            let (d4l, d4r) = stage(&k_end, &axpy(&l0, &d3l, h), &axpy_opt(&r0, &d3r, h));
            let left = &l0 + (d1l + d2l * re(2.0) + d3l * re(2.0) + d4l) * re(h / 6.0);
            let right = match (r0, d1r, d2r, d3r, d4r) {
                (Some(r0), Some(a), Some(b), Some(c), Some(d)) => {
                    Some(&r0 + (a + b * re(2.0) + c * re(2.0) + d) * re(h / 6.0))
                }
                _ => None,
            };
            u = retract(family, &left, &right, relaxed).map_err(|e| e.at_sample(i, t))?;
            k_here = Some(k_end);
        }
        let (rho, drho) = eval_jet(spec, t)?;
        let (lift, offdiag) = frame_residual(&u, &rho)?;
        let (mu, _) = frame_residual(&u, &drho)?;
        out.residual_offdiag.push(offdiag);
        out.residual_group.push(u.group_residual());
        out.lambda_sorted.push(AVector {
            family,
            coords: weyl::chamber_sort(wt, &lift.coords).0,
        });
        out.lambda_lift.push(lift);
        out.mu.push(mu);
        out.u.push(u.clone());
    }
    out.push_faces(tol)?;
    Ok(out)
}

/// [`analytic_flow`] with every grid interval split into equal substeps no
/// longer than `max_step`; only the grid samples are reported.
pub fn analytic_flow_substepped(
    spec: &PathSpec,
    grid: &[f64],
    max_step: f64,
    gap_min: Option<f64>,
    tol: &Tolerances,
) -> Result<DiagonalizedPath> {
    if !(max_step.is_finite() && max_step > 0.0) {
        return Err(Error::InvalidSpec("maximum step must be positive".into()));
    }
    check_grid(spec, grid)?;
    let mut fine = Vec::with_capacity(grid.len());
    let mut keep = Vec::with_capacity(grid.len());
    for (i, &t) in grid.iter().enumerate() {
        if i > 0 {
            let a = grid[i - 1];
            let m = ((t - a) / max_step).ceil().max(1.0) as usize;
            fine.extend((1..m).map(|k| a + (t - a) * k as f64 / m as f64));
        }
        keep.push(fine.len());
        fine.push(t);
    }
    let full = analytic_flow(spec, &fine, gap_min, tol)?;
    let pick = |v: &Vec<AVector>| keep.iter().map(|&k| v[k].clone()).collect::<Vec<_>>();
    let mut out = DiagonalizedPath::empty(spec.family, grid);
    out.lambda_sorted = pick(&full.lambda_sorted);
    out.lambda_lift = pick(&full.lambda_lift);
    out.mu = pick(&full.mu);
    out.u = keep.iter().map(|&k| full.u[k].clone()).collect();
    out.face = keep.iter().map(|&k| full.face[k].clone()).collect();
    out.residual_offdiag = keep.iter().map(|&k| full.residual_offdiag[k]).collect();
    out.residual_group = keep.iter().map(|&k| full.residual_group[k]).collect();
    Ok(out)
}

/// Independent per-sample diagonalization. With derivatives available, also
/// reports how often the finite difference of the sorted curve matches the
/// projected derivative at regular samples.
pub fn measurable_curve(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Result<DiagonalizedPath> {
    let mut out = sorted_curve(spec, grid, tol)?;
    if !spec.derivative {
        return Ok(out);
    }
    out.mu = grid
        .par_iter()
        .enumerate()
        .map(|(i, &t)| {
            pointwise_derivative(spec, t, tol)
                .map(|(_, mu, _)| mu)
                .map_err(|e| e.at_sample(i, t))
        })
        .collect::<Result<_>>()?;
    let mut regular = 0usize;
    let mut matched = 0usize;
    for i in 1..grid.len().saturating_sub(1) {
        if !out.face[i].is_regular() {
            continue;
        }
        regular += 1;
        let dt = grid[i + 1] - grid[i - 1];
        let mut fd: Vec<f64> = out.lambda_sorted[i + 1]
            .coords
            .iter()
            .zip(&out.lambda_sorted[i - 1].coords)
            .map(|(a, b)| (a - b) / dt)
            .collect();
        let mut mu = out.mu[i].coords.clone();
        fd.sort_by(f64::total_cmp);
        mu.sort_by(f64::total_cmp);
        let h = 0.5 * dt;
        let mu_norm = mu.iter().map(|x| x * x).sum::<f64>().sqrt();
        // second difference of mu tracks h^2 lambda''' near avoided crossings
        let curvature = (0..mu.len())
            .map(|k| (out.mu[i + 1].coords[k] - 2.0 * out.mu[i].coords[k] + out.mu[i - 1].coords[k]).abs())
            .fold(0.0, f64::max);
        let allowed = ae_tolerance(h, mu_norm, curvature);
        let err = fd.iter().zip(&mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err <= allowed {
            matched += 1;
        }
    }
    out.ae_match_fraction = Some(if regular == 0 { 1.0 } else { matched as f64 / regular as f64 });
    Ok(out)
}

/// Agreement threshold between central differences of the sorted curve and
/// the projected derivative. `mu_curvature` is the second difference of `mu`
/// at the sample; a third of it bounds the truncation error `h^2 lambda''' / 6`
/// with a factor two to spare.
pub fn ae_tolerance(h: f64, mu_norm: f64, mu_curvature: f64) -> f64 {
    1e-8 + 10.0 * h * h * (1.0 + mu_norm) + mu_curvature / 3.0
}

/// `| k(t) - 1/2 sum_k [P_k'(t), P_k(t)] |_F` in the Hermitian picture, with
/// `P_k'` from central differences of step `h_fd`.
pub fn resolvent_crosscheck(spec: &PathSpec, t: f64, h_fd: f64, tol: &Tolerances) -> Result<f64> {
    let (rho, drho) = eval_jet(spec, t)?;
    let es = eigen_structure(&rho, tol.cluster)?;
    let gap_min = default_gap_min(&rho);
    if !(es.min_root >= gap_min) {
        return Err(Error::NearSingularPoint {
            t: Some(t),
            gap: es.min_root,
            gap_min,
        });
    }
    let k = es.ad_inverse_unchecked(&es.project_perp(&drho)?)?.scaled(-1.0);
    let ad_side = k.to_ambient();
    let (projections, derivatives) = oracles::finite_diff_projectors_with(spec, t, h_fd, tol.cluster)?;
    let n = ad_side.nrows();
    let mut proj_side = linalg::zeros(n, n);
    for (p, dp) in projections.iter().zip(&derivatives) {
        proj_side += linalg::commutator(dp, p);
    }
    proj_side *= re(0.5);
    // the skew family's Hermitian picture is i x, whose projectors already
    // act on the same space as k; nothing else to map
    Ok(linalg::fro(&(ad_side - proj_side)))
}
