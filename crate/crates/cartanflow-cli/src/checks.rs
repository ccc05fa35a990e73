//! Invariant suite behind `cartanflow check`.

use cartanflow::engine::{c1_lift, default_gap_min, flow_generator, resolvent_crosscheck, sorted_curve};
use cartanflow::families::{adjoint_action, diagonalize_point_with, PElement};
use cartanflow::lie_ops::{bracket_kp, bracket_pp, eigen_structure};
use cartanflow::oracles::{InstanceGenerator, SpectralProfile};
use cartanflow::path::{eval_jet, eval_path};
use cartanflow::{PathSpec, Result, Tolerances};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub status: Status,
    /// Worst observed value and the limit it was compared against.
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl CheckResult {
    fn measured(name: &'static str, value: f64, limit: f64, detail: String) -> Self {
        CheckResult {
            name,
            status: if value <= limit { Status::Pass } else { Status::Fail },
            value: Some(value),
            limit: Some(limit),
            detail,
        }
    }

    fn skipped(name: &'static str, why: impl Into<String>) -> Self {
        CheckResult {
            name,
            status: Status::Skip,
            value: None,
            limit: None,
            detail: why.into(),
        }
    }

    fn errored(name: &'static str, e: &cartanflow::Error) -> Self {
        CheckResult {
            name,
            status: Status::Fail,
            value: None,
            limit: None,
            detail: e.to_string(),
        }
    }
}

/// At most `k` grid points spread evenly, endpoints included.
fn probe_points(grid: &[f64], k: usize) -> Vec<f64> {
    if grid.len() <= k {
        return grid.to_vec();
    }
    (0..k).map(|i| grid[i * (grid.len() - 1) / (k - 1)]).collect()
}

fn scale(x: &PElement, y: &PElement) -> f64 {
    (1.0 + x.norm()) * (1.0 + y.norm())
}

fn membership(spec: &PathSpec, tol: &Tolerances) -> CheckResult {
    let r = spec.membership_residual();
    CheckResult::measured("membership", r, tol.member, "relative off-space residual of the input matrices".into())
}

fn projection_identities(spec: &PathSpec, points: &[f64], gen: &mut InstanceGenerator, tol: &Tolerances) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for &t in points {
        let (x, _) = eval_path(spec, t)?;
        let es = eigen_structure(&x, tol.cluster)?;
        for _ in 0..4 {
            let b = gen.gaussian_point();
            let pb = es.project(&b)?;
            let qb = es.project_perp(&b)?;
            let s = scale(&x, &b);
            let idem = (&es.project(&pb)? - &pb).norm();
            let split = (&(&pb + &qb) - &b).norm();
            let orth = pb.inner(&qb).abs();
            let commute = bracket_pp(&x, &pb)?.norm();
            worst = worst.max(idem.max(split).max(orth).max(commute) / s);
        }
    }
    Ok(CheckResult::measured(
        "projection-identities",
        worst,
        tol.solve,
        format!("idempotence, complement, orthogonality and commutation at {} points", points.len()),
    ))
}

fn equivariance(spec: &PathSpec, points: &[f64], gen: &mut InstanceGenerator, tol: &Tolerances) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for &t in points {
        let (x, _) = eval_path(spec, t)?;
        let (_, lambda) = diagonalize_point_with(&x, tol)?;
        for _ in 0..4 {
            let u = gen.group_element();
            let b = gen.gaussian_point();
            let ux = adjoint_action(&u, &x)?;
            let lhs = adjoint_action(&u, &eigen_structure(&x, tol.cluster)?.project(&b)?)?;
            let rhs = eigen_structure(&ux, tol.cluster)?.project(&adjoint_action(&u, &b)?)?;
            let (_, lambda_u) = diagonalize_point_with(&ux, tol)?;
            let s = scale(&x, &b);
            worst = worst.max((&lhs - &rhs).norm() / s).max(lambda.dist(&lambda_u) / (1.0 + x.norm()));
        }
    }
    Ok(CheckResult::measured(
        "equivariance",
        worst,
        tol.solve,
        format!("projection and spectrum under random group elements at {} points", points.len()),
    ))
}

/// `rho' = [k, rho] + Pi_rho(rho')` with `k` the flow generator, and `rho'`
/// against a central difference of `rho`.
fn product_rule(spec: &PathSpec, points: &[f64], gap_min: Option<f64>, tol: &Tolerances) -> Result<CheckResult> {
    let h = 1e-4;
    let mut used = 0usize;
    // the point with the largest error relative to its own limit
    let mut worst: Option<(f64, f64)> = None;
    for &t in points {
        if !(spec.contains(t - h) && spec.contains(t + h)) {
            continue;
        }
        let k = match flow_generator(spec, t, gap_min, tol) {
            Ok(k) => k,
            Err(e) if matches!(e.root(), cartanflow::Error::NearSingularPoint { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (rho, drho) = eval_jet(spec, t)?;
        let (plus, _) = eval_path(spec, t + h)?;
        let (minus, _) = eval_path(spec, t - h)?;
        let fd = &(&plus - &minus) * (0.5 / h);
        let es = eigen_structure(&rho, tol.cluster)?;
        let rebuilt = &bracket_kp(&k, &rho)? + &es.project(&drho)?;
        let allowed = 1e-6 + 10.0 * h * h * (1.0 + rho.norm()) * (1.0 + drho.norm());
        let err = (&fd - &drho).norm().max((&rebuilt - &drho).norm());
        if worst.is_none_or(|(e, a)| err / allowed > e / a) {
            worst = Some((err, allowed));
        }
        used += 1;
    }
    let Some((err, allowed)) = worst else {
        return Ok(CheckResult::skipped("product-rule", "no regular interior probe points"));
    };
    Ok(CheckResult::measured(
        "product-rule",
        err,
        allowed,
        format!("{used} regular points, central step {h:e}"),
    ))
}

fn resolvent(spec: &PathSpec, points: &[f64], tol: &Tolerances) -> Result<CheckResult> {
    let limit = 1e-7;
    let mut worst: f64 = 0.0;
    let mut used = 0usize;
    for &t in points {
        if !(spec.contains(t - tol.h_fd) && spec.contains(t + tol.h_fd)) {
            continue;
        }
        let (rho, _) = eval_path(spec, t)?;
        if eigen_structure(&rho, tol.cluster)?.min_root < default_gap_min(&rho) {
            continue;
        }
        match resolvent_crosscheck(spec, t, tol.h_fd, tol) {
            Ok(d) => {
                worst = worst.max(d / (1.0 + rho.norm()));
                used += 1;
            }
            Err(e) if matches!(e.root(), cartanflow::Error::ClusterMismatch { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Ok(CheckResult::skipped("resolvent", "no regular interior probe points"));
    }
    Ok(CheckResult::measured(
        "resolvent",
        worst,
        limit,
        format!("{used} points, h_fd {:e}", tol.h_fd),
    ))
}

fn lipschitz(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Result<CheckResult> {
    let curve = sorted_curve(spec, grid, tol)?;
    let mut worst = f64::NEG_INFINITY;
    let mut prev = eval_path(spec, grid[0])?.0;
    for i in 1..grid.len() {
        let cur = eval_path(spec, grid[i])?.0;
        let gap = curve.lambda_sorted[i].dist(&curve.lambda_sorted[i - 1]) - (&cur - &prev).norm();
        worst = worst.max(gap);
        prev = cur;
    }
    Ok(CheckResult::measured(
        "lipschitz",
        worst.max(0.0),
        1e-10,
        "sorted spectrum moves no further than the path between samples".into(),
    ))
}

fn max_slope_jump(times: &[f64], values: &[Vec<f64>]) -> f64 {
    let slopes: Vec<Vec<f64>> = (1..times.len())
        .map(|i| {
            let h = times[i] - times[i - 1];
            values[i].iter().zip(&values[i - 1]).map(|(a, b)| (a - b) / h).collect()
        })
        .collect();
    slopes
        .windows(2)
        .flat_map(|w| w[1].iter().zip(&w[0]).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn lift_kink(spec: &PathSpec, grid: &[f64], tol: &Tolerances) -> Result<CheckResult> {
    let lift = c1_lift(spec, grid, tol)?;
    let sorted: Vec<Vec<f64>> = lift.lambda_sorted.iter().map(|a| a.coords.clone()).collect();
    let lifted: Vec<Vec<f64>> = lift.lambda_lift.iter().map(|a| a.coords.clone()).collect();
    let js = max_slope_jump(grid, &sorted);
    let jl = max_slope_jump(grid, &lifted);
    Ok(CheckResult::measured(
        "lift-kink",
        jl,
        js + 1e-9,
        format!("slope jump: sorted {js:.6e}, lifted {jl:.6e}"),
    ))
}

pub struct Summary {
    pub results: Vec<CheckResult>,
}

impl Summary {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.status != Status::Fail)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<22} {:<6} {:>12} {:>12}  {}\n", "check", "status", "value", "limit", "detail");
        let f = |x: Option<f64>| x.map_or("-".to_string(), |x| format!("{x:.3e}"));
        for r in &self.results {
            out.push_str(&format!(
                "{:<22} {:<6} {:>12} {:>12}  {}\n",
                r.name,
                r.status.as_str(),
                f(r.value),
                f(r.limit),
                r.detail
            ));
        }
        out
    }

    pub fn to_json(&self) -> Value {
        json!({
            "format": cartanflow::report::FORMAT_VERSION,
            "all_pass": self.all_pass(),
            "checks": self.results.iter().map(|r| json!({
                "name": r.name,
                "status": r.status.as_str().to_lowercase(),
                "value": r.value,
                "limit": r.limit,
                "detail": r.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Runs the suite. A membership failure stops the remaining checks; errors
/// inside a check count as a failure of that check.
pub fn run(spec: &PathSpec, grid: &[f64], gap_min: Option<f64>, seed: u64, tol: &Tolerances) -> Summary {
    let mut results = vec![membership(spec, tol)];
    if results[0].status == Status::Fail {
        for name in ["projection-identities", "equivariance", "product-rule", "resolvent", "lipschitz", "lift-kink"] {
            results.push(CheckResult::skipped(name, "input is not in the space"));
        }
        return Summary { results };
    }
    let points = probe_points(grid, 9);
    let mut gen = InstanceGenerator::new(spec.family, seed, SpectralProfile::Generic);
    let wrap = |name: &'static str, r: Result<CheckResult>| r.unwrap_or_else(|e| CheckResult::errored(name, &e));
    results.push(wrap("projection-identities", projection_identities(spec, &points, &mut gen, tol)));
    results.push(wrap("equivariance", equivariance(spec, &points, &mut gen, tol)));
    if spec.derivative {
        results.push(wrap("product-rule", product_rule(spec, &points, gap_min, tol)));
        results.push(wrap("resolvent", resolvent(spec, &points, tol)));
    } else {
        results.push(CheckResult::skipped("product-rule", "derivative unavailable"));
        results.push(CheckResult::skipped("resolvent", "derivative unavailable"));
    }
    results.push(wrap("lipschitz", lipschitz(spec, grid, tol)));
    if spec.derivative {
        results.push(wrap("lift-kink", lift_kink(spec, grid, tol)));
    } else {
        results.push(CheckResult::skipped("lift-kink", "derivative unavailable"));
    }
    Summary { results }
}
