//! Field-level transform checks: time changes between the two clocks,
//! round trips, the scaling transform, and the conformal charge balance.

mod common;

use tricomi_lab::field::Grid;
use tricomi_lab::simulator::{
    evolve, make_initial_data, DataKind, EquationKind, Nonlinearity, SimConfig, SimOutcome,
};
use tricomi_lab::transforms::{
    damped_to_tricomi, field_time_change, phi_m, phi_m_inverse, scaling_transform,
};

fn snapshot_triple(times: &[f64], around: f64, delta: f64) -> Vec<f64> {
    let _ = times;
    vec![around - delta, around, around + delta]
}

/// Damped linear run whose time-changed trace must satisfy the Tricomi
/// equation to discretization accuracy.
#[test]
fn time_change_maps_damped_to_tricomi_solution() {
    let mu = 0.5;
    let map = damped_to_tricomi(mu, 3.0).unwrap();
    assert_eq!(map.m, 2.0);
    let grid = Grid::new(128, 8.0).unwrap();
    let mut config = SimConfig::new(EquationKind::Damped { mu }, 3.0, grid, 2.6);
    config.nonlinearity = Nonlinearity::None;
    config.rtol = 1e-9;
    config.atol = 1e-12;
    let delta = 0.02;
    config.snapshot_times = snapshot_triple(&[], 2.0, delta);
    let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 1.0, 8, grid);
    let trace = evolve(&config, &u0, &u1).unwrap();
    assert_eq!(trace.outcome, SimOutcome::ReachedHorizon);

    // Baseline: native Tricomi run sampled the same way around the mapped
    // middle time, with the same finite-difference residual estimator.
    let tau_mid = phi_m_inverse(map.m, 2.0);
    let tau_delta = phi_m_inverse(map.m, 2.0 + delta) - tau_mid;
    let mut native = SimConfig::new(
        EquationKind::Tricomi {
            m: map.m,
            alpha: map.alpha,
        },
        3.0,
        grid,
        tau_mid + 2.0 * tau_delta,
    );
    native.nonlinearity = Nonlinearity::None;
    native.rtol = 1e-9;
    native.atol = 1e-12;
    native.t0 = phi_m_inverse(map.m, 1.0);
    native.snapshot_times = vec![tau_mid - tau_delta, tau_mid, tau_mid + tau_delta];
    // Tricomi data at τ0: u(τ0) = u0, ∂_τ u = τ0^{m/2} u1.
    let tau0 = native.t0;
    let mut u1_tri = u1.clone();
    for v in u1_tri.values.iter_mut() {
        *v *= tau0.powf(map.m / 2.0);
    }
    let native_trace = evolve(&native, &u0, &u1_tri).unwrap();
    let baseline = common::tricomi_equation_residual(
        [
            native_trace.snapshot_times[0],
            native_trace.snapshot_times[1],
            native_trace.snapshot_times[2],
        ],
        [
            &native_trace.snapshots[0].0,
            &native_trace.snapshots[1].0,
            &native_trace.snapshots[2].0,
        ],
        map.m,
        map.alpha,
        3.0,
        Nonlinearity::None,
    );

    let mapped = field_time_change(&trace, &map, None).unwrap();
    match mapped.equation {
        EquationKind::Tricomi { m, .. } => assert_eq!(m, 2.0),
        _ => panic!("wrong form"),
    }
    let residual = common::tricomi_equation_residual(
        [
            mapped.snapshot_times[0],
            mapped.snapshot_times[1],
            mapped.snapshot_times[2],
        ],
        [
            &mapped.snapshots[0].0,
            &mapped.snapshots[1].0,
            &mapped.snapshots[2].0,
        ],
        map.m,
        map.alpha,
        3.0,
        Nonlinearity::None,
    );
    assert!(
        residual <= 10.0 * baseline.max(1e-12),
        "mapped residual {residual} vs baseline {baseline}"
    );
}

#[test]
fn time_change_identity_is_bitwise() {
    let grid = Grid::new(32, 8.0).unwrap();
    let mut config = SimConfig::new(
        EquationKind::Tricomi { m: 2.0, alpha: 2.0 },
        3.0,
        grid,
        2.0,
    );
    config.nonlinearity = Nonlinearity::None;
    config.snapshot_times = vec![1.5, 2.0];
    let (u0, u1) = make_initial_data(DataKind::GaussianBump, 0.5, 2, grid);
    let trace = evolve(&config, &u0, &u1).unwrap();
    let map = damped_to_tricomi(0.5, 3.0).unwrap();
    // Trace already in the target (Tricomi) form: identity short-circuit.
    let out = field_time_change(&trace, &map, None).unwrap();
    for (a, b) in trace.snapshots.iter().zip(&out.snapshots) {
        assert_eq!(a.0.values, b.0.values);
        assert_eq!(a.1.values, b.1.values);
    }
}

#[test]
fn time_change_round_trip() {
    let mu = 1.5;
    let p = 2.5;
    let map = damped_to_tricomi(mu, p).unwrap();
    let back = tricomi_lab::transforms::tricomi_to_damped(map.m, map.alpha, p).unwrap();
    let grid = Grid::new(64, 8.0).unwrap();
    let mut config = SimConfig::new(EquationKind::Damped { mu }, p, grid, 3.0);
    config.nonlinearity = Nonlinearity::None;
    config.snapshot_times = vec![1.2, 1.9, 2.6];
    let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 0.8, 3, grid);
    let trace = evolve(&config, &u0, &u1).unwrap();
    let there = field_time_change(&trace, &map, None).unwrap();
    let home = field_time_change(&there, &back, None).unwrap();
    for ((ta, a), (tb, b)) in trace
        .snapshot_times
        .iter()
        .zip(&trace.snapshots)
        .zip(home.snapshot_times.iter().zip(&home.snapshots))
    {
        assert!((ta - tb).abs() < 1e-10);
        assert!(common::rel_sup_distance(&b.0, &a.0) < 1e-6);
        assert!(common::rel_sup_distance(&b.1, &a.1) < 1e-6);
    }
}

#[test]
fn time_change_resampling_matches_native_solve() {
    // Map a densely sampled damped trace to the Tricomi clock at explicit
    // target times and compare against a native Tricomi solve there.
    let mu = 0.5;
    let p = 3.0;
    let map = damped_to_tricomi(mu, p).unwrap();
    let grid = Grid::new(64, 8.0).unwrap();
    let mut config = SimConfig::new(EquationKind::Damped { mu }, p, grid, 3.0);
    config.nonlinearity = Nonlinearity::None;
    config.rtol = 1e-9;
    config.snapshot_times = (0..161).map(|k| 1.0 + 2.0 * k as f64 / 160.0).collect();
    let (u0, u1) = make_initial_data(DataKind::GaussianBump, 1.0, 6, grid);
    let trace = evolve(&config, &u0, &u1).unwrap();

    let tau_target = phi_m_inverse(map.m, 2.37); // off the sample lattice
    let mapped = field_time_change(&trace, &map, Some(&[tau_target])).unwrap();

    let tau0 = phi_m_inverse(map.m, 1.0);
    let mut native = SimConfig::new(
        EquationKind::Tricomi {
            m: map.m,
            alpha: map.alpha,
        },
        p,
        grid,
        tau_target + 0.1,
    );
    native.nonlinearity = Nonlinearity::None;
    native.rtol = 1e-9;
    native.t0 = tau0;
    native.snapshot_times = vec![tau_target];
    let mut u1_tri = u1.clone();
    for v in u1_tri.values.iter_mut() {
        *v *= tau0.powf(map.m / 2.0);
    }
    let native_trace = evolve(&native, &u0, &u1_tri).unwrap();
    let d = common::rel_sup_distance(&mapped.snapshots[0].0, &native_trace.snapshots[0].0);
    assert!(d < 2e-3, "resampled field off by {d}");
}

#[test]
fn damped_vs_transformed_semilinear_cross_check() {
    // evolve_damped(mu = 0.5, p = 3) against the time-changed
    // evolve_semilinear(m = 2, alpha = 2, p = 3): L² agreement at matched
    // times to 1e-4 relative.
    let grid = Grid::new(128, 8.0).unwrap();
    let p = 3.0;
    let t_damped = [1.5, 2.0, 2.5];
    let mut damped = SimConfig::new(EquationKind::Damped { mu: 0.5 }, p, grid, 2.6);
    damped.nonlinearity = Nonlinearity::AbsPow;
    damped.rtol = 1e-9;
    damped.atol = 1e-12;
    damped.snapshot_times = t_damped.to_vec();
    let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 0.4, 12, grid);
    let damped_trace = tricomi_lab::simulator::evolve_damped(&damped, &u0, &u1).unwrap();

    let map = damped_to_tricomi(0.5, p).unwrap();
    let tau0 = phi_m_inverse(map.m, 1.0);
    let mut tric = SimConfig::new(
        EquationKind::Tricomi {
            m: map.m,
            alpha: map.alpha,
        },
        p,
        grid,
        phi_m_inverse(map.m, 2.6),
    );
    tric.nonlinearity = Nonlinearity::AbsPow;
    tric.rtol = 1e-9;
    tric.atol = 1e-12;
    tric.t0 = tau0;
    tric.snapshot_times = t_damped.iter().map(|&t| phi_m_inverse(map.m, t)).collect();
    let mut u1_tri = u1.clone();
    for v in u1_tri.values.iter_mut() {
        *v *= tau0.powf(map.m / 2.0);
    }
    let tric_trace = tricomi_lab::simulator::evolve_semilinear(&tric, &u0, &u1_tri).unwrap();
    let back = tricomi_lab::transforms::tricomi_to_damped(map.m, map.alpha, p).unwrap();
    let mapped = field_time_change(&tric_trace, &back, None).unwrap();

    for (k, (a, b)) in damped_trace
        .snapshots
        .iter()
        .zip(&mapped.snapshots)
        .enumerate()
    {
        let mut diff = a.0.clone();
        for (x, y) in diff.values.iter_mut().zip(&b.0.values) {
            *x -= y;
        }
        let rel = diff.l2_norm() / a.0.l2_norm();
        assert!(rel < 1e-4, "snapshot {k}: relative L² distance {rel}");
        assert!((damped_trace.snapshot_times[k] - mapped.snapshot_times[k]).abs() < 1e-10);
    }
}

#[test]
fn scaling_transform_identity_and_residual() {
    let grid = Grid::new(128, 10.0).unwrap();
    let (m, alpha, p) = (2.0, 2.0, 3.0);
    let mut config = SimConfig::new(EquationKind::Tricomi { m, alpha }, p, grid, 2.4);
    config.nonlinearity = Nonlinearity::AbsPow;
    config.rtol = 1e-9;
    config.atol = 1e-12;
    let delta = 0.02;
    config.snapshot_times = vec![2.25 - delta, 2.25, 2.25 + delta];
    // Spectrally concentrated datum: compression dilates the spectrum by
    // λ^{(m+2)/2}, so content past Nyquist/λ^{(m+2)/2} would alias.
    let sigma = 1.2f64;
    let u0 = tricomi_lab::field::Field2D::from_real_fn(grid, |x, y| {
        0.5 * (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    });
    let u1 = tricomi_lab::field::Field2D::zeros(grid, tricomi_lab::field::Space::Physical);
    let trace = evolve(&config, &u0, &u1).unwrap();

    // λ = 1: untouched.
    let same = scaling_transform(&trace, 1.0).unwrap();
    assert_eq!(same.snapshots[0].0.values, trace.snapshots[0].0.values);

    // λ = 1.5 rescaled trace still satisfies the equation. The baseline is
    // a native solve restarted from the scaled trace's own first snapshot,
    // so both residuals see the same (λ-stretched) frequency content and
    // the same finite-difference estimator.
    let lambda = 1.5;
    let scaled = scaling_transform(&trace, lambda).unwrap();
    let band = 0.25;
    let residual = common::tricomi_equation_residual_banded(
        [
            scaled.snapshot_times[0],
            scaled.snapshot_times[1],
            scaled.snapshot_times[2],
        ],
        [
            &scaled.snapshots[0].0,
            &scaled.snapshots[1].0,
            &scaled.snapshots[2].0,
        ],
        m,
        alpha,
        p,
        Nonlinearity::AbsPow,
        band,
    );
    let mut native = SimConfig::new(
        EquationKind::Tricomi { m, alpha },
        p,
        grid,
        scaled.snapshot_times[2] + 1e-3,
    );
    native.nonlinearity = Nonlinearity::AbsPow;
    native.rtol = 1e-9;
    native.atol = 1e-12;
    native.t0 = scaled.snapshot_times[0];
    native.snapshot_times = scaled.snapshot_times.clone();
    let native_trace = evolve(&native, &scaled.snapshots[0].0, &scaled.snapshots[0].1).unwrap();
    let baseline = common::tricomi_equation_residual_banded(
        [
            native_trace.snapshot_times[0],
            native_trace.snapshot_times[1],
            native_trace.snapshot_times[2],
        ],
        [
            &native_trace.snapshots[0].0,
            &native_trace.snapshots[1].0,
            &native_trace.snapshots[2].0,
        ],
        m,
        alpha,
        p,
        Nonlinearity::AbsPow,
        band,
    );
    assert!(
        residual <= 10.0 * baseline.max(1e-10),
        "scaled residual {residual} vs baseline {baseline}"
    );
}

#[test]
fn conformal_charge_conserved_at_conformal_power() {
    // (m, alpha) = (1, 0): p_conf = 3. Euler-Lagrange (defocusing) run.
    let grid = Grid::new(128, 8.0).unwrap();
    let mut config = SimConfig::new(EquationKind::Tricomi { m: 1.0, alpha: 0.0 }, 3.0, grid, 4.0);
    config.nonlinearity = Nonlinearity::Defocusing;
    config.rtol = 1e-8;
    config.monitor_stride = 2;
    let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 0.6, 5, grid);
    let trace = evolve(&config, &u0, &u1).unwrap();
    assert_eq!(trace.outcome, SimOutcome::ReachedHorizon);
    let q0: Vec<f64> = trace.scalars.iter().map(|r| r.q0.unwrap()).collect();
    let scale = q0.iter().map(|v| v.abs()).fold(0.0f64, f64::max);
    let drift = q0
        .iter()
        .map(|v| (v - q0[0]).abs())
        .fold(0.0f64, f64::max);
    assert!(drift / scale < 0.02, "charge drift {}", drift / scale);
}
