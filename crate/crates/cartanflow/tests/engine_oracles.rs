use cartanflow::engine::{
    analytic_flow, analytic_flow_substepped, c1_lift, flow_generator, measurable_curve, pointwise_derivative,
    resolvent_crosscheck, sorted_curve,
};
use cartanflow::families::embed_a;
use cartanflow::oracles::{finite_diff_projectors, InstanceGenerator, SpectralProfile};
use cartanflow::path::{eval_path, linspace};
use cartanflow::{Builtin, Error, Family, PathSpec, Tolerances};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn rellich_near_zero_is_singular_for_the_flow() {
    let spec = PathSpec::builtin(Builtin::Rellich).with_domain(0.05, 1.0);
    let grid = linspace(0.05, 1.0, 20);
    match analytic_flow(&spec, &grid, Some(1e-12), &tol()) {
        Err(e) => assert!(matches!(e.root(), Error::NearSingularPoint { .. }), "{e}"),
        Ok(_) => panic!("flow through an exponentially small gap succeeded"),
    }
    // away from the flat point the same request is fine
    let grid = linspace(0.4, 1.0, 61);
    let path = analytic_flow(&spec.with_domain(0.4, 1.0), &grid, Some(1e-12), &tol()).unwrap();
    assert!(path.max_residual_offdiag() <= 1e-6);
}

#[test]
fn random_paths_match_the_projected_derivative_almost_everywhere() {
    for (i, f) in [Family::RealSymEvd(4), Family::HermEvd(3), Family::ComplexSvd(3, 2), Family::SkewEvd(5)]
        .into_iter()
        .enumerate()
    {
        let mut gen = InstanceGenerator::new(f, 100 + i as u64, SpectralProfile::Generic);
        let spec = gen.generic_path();
        let grid = linspace(0.0, 1.0, 1001);
        let path = measurable_curve(&spec, &grid, &tol()).unwrap();
        let frac = path.ae_match_fraction.unwrap();
        assert!(frac >= 0.99, "{f}: {frac}");
    }
}

#[test]
fn sorted_curve_is_lipschitz_along_random_paths() {
    for (i, f) in [Family::HermEvd(4), Family::RealSvd(3, 2), Family::SkewEvd(6)].into_iter().enumerate() {
        let mut gen = InstanceGenerator::new(f, 7 + i as u64, SpectralProfile::Generic);
        let spec = gen.generic_path();
        let grid = linspace(0.0, 6.0, 601);
        let path = sorted_curve(&spec, &grid, &tol()).unwrap();
        for j in 1..grid.len() {
            let (a, _) = eval_path(&spec, grid[j - 1]).unwrap();
            let (b, _) = eval_path(&spec, grid[j]).unwrap();
            let d_lambda = (&embed_a(&path.lambda_sorted[j - 1]) - &embed_a(&path.lambda_sorted[j])).norm();
            assert!(d_lambda <= (1.0 + 1e-8) * (&a - &b).norm() + 1e-14, "{f} at {}", grid[j]);
        }
    }
}

#[test]
fn kriegl_like_sorted_curve_is_lipschitz() {
    let spec = PathSpec::builtin(Builtin::KrieglLike);
    let grid = linspace(-1.0, 1.0, 2001);
    let path = sorted_curve(&spec, &grid, &tol()).unwrap();
    for j in 1..grid.len() {
        let (a, _) = eval_path(&spec, grid[j - 1]).unwrap();
        let (b, _) = eval_path(&spec, grid[j]).unwrap();
        let d = path.lambda_sorted[j - 1].dist(&path.lambda_sorted[j]);
        assert!(d <= (1.0 + 1e-8) * (&a - &b).norm() + 1e-14, "t = {}", grid[j]);
    }
}

#[test]
fn chamber_cross_changes_face_only_at_zero() {
    let spec = PathSpec::builtin(Builtin::ChamberCross);
    let grid = linspace(-1.0, 1.0, 21);
    let path = sorted_curve(&spec, &grid, &tol()).unwrap();
    for (j, &t) in grid.iter().enumerate() {
        assert_eq!(path.face[j].is_regular(), j != 10, "t = {t}");
        let l = &path.lambda_sorted[j].coords;
        assert!((l[0] - t.abs()).abs() <= 1e-14 && (l[1] + t.abs()).abs() <= 1e-14);
    }
}

#[test]
fn derivative_at_the_crossing_is_sorted_within_the_face() {
    let spec = PathSpec::builtin(Builtin::ChamberCross);
    let (lambda, mu, _) = pointwise_derivative(&spec, 0.0, &tol()).unwrap();
    assert!(max_abs(&lambda.coords) <= 1e-15);
    assert!((mu.coords[0] - 1.0).abs() <= 1e-12 && (mu.coords[1] + 1.0).abs() <= 1e-12);
}

#[test]
fn lift_through_an_engineered_crossing_is_smooth() {
    for seed in 0..3 {
        let mut gen = InstanceGenerator::new(Family::HermEvd(4), seed, SpectralProfile::CrossingEngineered);
        let (spec, t_star) = gen.crossing_path().unwrap();
        let grid = linspace(0.0, 1.0, 401);
        let h = grid[1] - grid[0];
        let lift = c1_lift(&spec, &grid, &tol()).unwrap();
        let sorted = sorted_curve(&spec, &grid, &tol()).unwrap();
        let second = |curve: &[cartanflow::AVector], j: usize| {
            (0..4)
                .map(|k| (curve[j + 1].coords[k] - 2.0 * curve[j].coords[k] + curve[j - 1].coords[k]).abs())
                .fold(0.0, f64::max)
                / (h * h)
        };
        let lifted = (1..grid.len() - 1).map(|j| second(&lift.lambda_lift, j)).fold(0.0, f64::max);
        let kinked = (1..grid.len() - 1).map(|j| second(&sorted.lambda_sorted, j)).fold(0.0, f64::max);
        // sin'' is bounded by 1; the sorted curve has a corner of size ~ 2 cos(t*) / h
        assert!(lifted <= 1.5, "seed {seed}: {lifted}");
        assert!(kinked >= 0.5 / h, "seed {seed}: crossing at {t_star} not visible ({kinked})");
    }
}

#[test]
fn resolvent_error_halves_quadratically() {
    let mut gen = InstanceGenerator::new(Family::HermEvd(3), 3, SpectralProfile::Generic);
    let spec = gen.regular_path();
    let coarse = resolvent_crosscheck(&spec, 0.37, 1e-3, &tol()).unwrap();
    let fine = resolvent_crosscheck(&spec, 0.37, 5e-4, &tol()).unwrap();
    let ratio = coarse / fine;
    assert!((ratio - 4.0).abs() <= 0.2, "{coarse} / {fine} = {ratio}");
    assert!(resolvent_crosscheck(&spec, 0.37, 1e-5, &tol()).unwrap() <= 1e-7);
}

#[test]
fn rotation_flow_projectors() {
    let spec = PathSpec::builtin(Builtin::RotationFlow);
    for t in [0.5, 1.0, 2.5, 6.0] {
        let dp = finite_diff_projectors(&spec, t, 1e-5).unwrap();
        assert_eq!(dp.len(), 2);
        for d in &dp {
            let op = d.clone().singular_values().max();
            assert!((op - 1.0).abs() <= 1e-8, "t = {t}: {op}");
        }
        let k = flow_generator(&spec, t, None, &tol()).unwrap();
        // the frame rotates at unit speed: k = [[0, 1], [-1, 0]] up to sign
        assert!((k.norm() - 2f64.sqrt()).abs() <= 1e-12, "{}", k.norm());
        assert!(resolvent_crosscheck(&spec, t, 1e-5, &tol()).unwrap() <= 1e-7);
    }
}

#[test]
fn constant_path_is_stationary() {
    let mut gen = InstanceGenerator::new(Family::ComplexSvd(3, 2), 11, SpectralProfile::Generic);
    let x = gen.gaussian_point();
    let spec = PathSpec::constant(&x).with_domain(0.0, 1.0);
    let grid = linspace(0.0, 1.0, 11);
    let lift = c1_lift(&spec, &grid, &tol()).unwrap();
    for l in &lift.lambda_lift {
        assert_eq!(l.coords, lift.lambda_lift[0].coords);
    }
    for m in &lift.mu {
        assert!(max_abs(&m.coords) <= 1e-14);
    }
    assert_eq!(flow_generator(&spec, 0.3, None, &tol()).unwrap().norm(), 0.0);
    let flow = analytic_flow(&spec, &grid, None, &tol()).unwrap();
    for u in &flow.u {
        assert!((&u.left - &flow.u[0].left).norm() <= 1e-14);
    }
}

#[test]
fn flow_keeps_regular_paths_diagonal() {
    let families = [
        Family::RealSymEvd(3),
        Family::HermEvd(3),
        Family::RealSvd(3, 2),
        Family::ComplexSvd(3, 3),
        Family::SkewEvd(4),
        Family::SkewEvd(5),
    ];
    for (i, f) in families.into_iter().enumerate() {
        let mut gen = InstanceGenerator::new(f, 40 + i as u64, SpectralProfile::Generic);
        let spec = gen.regular_path();
        let grid = linspace(0.0, 1.0, 11);
        let path = analytic_flow_substepped(&spec, &grid, 1e-2, None, &tol()).unwrap();
        assert!(path.max_residual_offdiag() <= 1e-6, "{f}: {}", path.max_residual_offdiag());
        assert!(path.max_residual_group() <= 1e-8, "{f}");
        // the frame never leaves the identity component
        for u in &path.u {
            assert!((u.det() - path.u[0].det()).norm() <= 1e-8, "{f}");
        }
    }
}
