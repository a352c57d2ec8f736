//! Cross-validation of the per-mode ODE propagator against the
//! hypergeometric multiplier oracle, plus structural properties of the
//! full-field evolution.

mod common;

use num_complex::Complex64;
use tricomi_lab::field::{Field2D, Grid, Space};
use tricomi_lab::propagator::{
    exact_wave_propagator, linear_evolve, linear_evolve_sampled, mode_ode_solve_sampled,
    symbol_v, symbol_v_with_dt, OdeOptions,
};
use tricomi_lab::simulator::{make_initial_data, DataKind};
use tricomi_lab::transforms::{phi_m, phi_m_inverse};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Sample times with `φ_m(t)ρ` spanning (0, x_max].
fn symbol_sample_times(m: f64, rho: f64, x_max: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|k| {
            let x = x_max * k as f64 / count as f64;
            phi_m_inverse(m, x / rho)
        })
        .collect()
}

#[test]
fn ode_matches_multiplier_pair() {
    // Fundamental system normalized at t = 0: data (1,0) reproduces V1 and
    // (0,1) reproduces V2 along the whole series regime.
    let opts = OdeOptions::default();
    for &m in &[0.5, 1.0, 2.0] {
        for &rho in &[0.5, 1.0, 2.0, 5.0] {
            let times = symbol_sample_times(m, rho, 29.5, 24);
            let v1_states =
                mode_ode_solve_sampled(m, rho, 0.0, &times, c(1.0), c(0.0), None, opts).unwrap();
            let v2_states =
                mode_ode_solve_sampled(m, rho, 0.0, &times, c(0.0), c(1.0), None, opts).unwrap();
            let mut err1: f64 = 0.0;
            let mut err2: f64 = 0.0;
            let mut scale1: f64 = 0.0;
            let mut scale2: f64 = 0.0;
            for (k, &t) in times.iter().enumerate() {
                let (v1, v2) = symbol_v(m, t, rho).unwrap();
                err1 = err1.max((v1_states[k].y - v1).norm());
                err2 = err2.max((v2_states[k].y - v2).norm());
                scale1 = scale1.max(v1.norm());
                scale2 = scale2.max(v2.norm());
            }
            assert!(
                err1 / scale1 < 1e-6,
                "V1 mismatch at m={m}, rho={rho}: {}",
                err1 / scale1
            );
            assert!(
                err2 / scale2 < 1e-6,
                "V2 mismatch at m={m}, rho={rho}: {}",
                err2 / scale2
            );
        }
    }
}

#[test]
fn multiplier_wronskian_constant() {
    for &m in &[0.5, 1.0, 2.0] {
        for &rho in &[0.5, 2.0, 5.0] {
            for &x in &[0.5, 3.0, 11.0, 24.0] {
                let t = phi_m_inverse(m, x / rho);
                let ((v1, dv1), (v2, dv2)) = symbol_v_with_dt(m, t, rho).unwrap();
                let w = v1 * dv2 - v2 * dv1;
                assert!((w - 1.0).abs() < 1e-7, "m={m} rho={rho} x={x}: W = {w}");
            }
        }
    }
}

#[test]
fn symbol_magnitude_decay_slope() {
    // |V1| peak envelope over φρ in [3, 30] decays like (1+φρ)^{-m/(2(m+2))}.
    for &m in &[1.0, 2.0] {
        let rho = 1.0;
        let xs: Vec<f64> = (0..2200).map(|k| 3.0 + 27.0 * k as f64 / 2199.0).collect();
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let t = phi_m_inverse(m, x / rho);
                symbol_v(m, t, rho).unwrap().0.norm()
            })
            .collect();
        // Local maxima form the envelope.
        let mut env: Vec<(f64, f64)> = Vec::new();
        for k in 1..xs.len() - 1 {
            if vals[k] >= vals[k - 1] && vals[k] >= vals[k + 1] {
                env.push((1.0 + xs[k], vals[k]));
            }
        }
        assert!(env.len() >= 5, "need several peaks, got {}", env.len());
        let n = env.len() as f64;
        let sx: f64 = env.iter().map(|e| e.0.ln()).sum();
        let sy: f64 = env.iter().map(|e| e.1.ln()).sum();
        let sxx: f64 = env.iter().map(|e| e.0.ln().powi(2)).sum();
        let sxy: f64 = env.iter().map(|e| e.0.ln() * e.1.ln()).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let target = -m / (2.0 * (m + 2.0));
        assert!(
            ((slope - target) / target).abs() < 0.15,
            "m={m}: slope {slope} vs target {target}"
        );
    }
}

#[test]
fn finite_propagation_speed() {
    let grid = Grid::new(256, 6.0).unwrap();
    let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 1.0, 4, grid);
    let m = 2.0;
    let times = [1.5, 2.0, 2.4];
    let frames =
        linear_evolve_sampled(&u0, &u1, m, 1.0, &times, OdeOptions::default(), false).unwrap();
    for (k, &t) in times.iter().enumerate() {
        let radius = 1.0 + phi_m(m, t) - phi_m(m, 1.0);
        let outside = frames.fields[k].mass_fraction_outside(radius);
        assert!(outside < 1e-8, "t={t}: outside mass {outside}");
    }
}

#[test]
fn per_mode_scaling_relation() {
    // If y solves the mode equation at frequency rho, then y(λ·) solves it
    // at frequency λ^{(m+2)/2} ρ.
    let (m, rho, lambda) = (2.0, 1.0, 2.0);
    let opts = OdeOptions::default();
    let t_end: f64 = 2.6;
    let a = tricomi_lab::propagator::mode_ode_solve(
        m,
        rho,
        0.0,
        lambda * t_end,
        c(1.0),
        c(0.0),
        None,
        opts,
    )
    .unwrap();
    let b = tricomi_lab::propagator::mode_ode_solve(
        m,
        lambda.powf((m + 2.0) / 2.0) * rho,
        0.0,
        t_end,
        c(1.0),
        c(0.0),
        None,
        opts,
    )
    .unwrap();
    assert!(
        (a.state.y - b.state.y).norm() < 1e-8,
        "{} vs {}",
        a.state.y,
        b.state.y
    );
}

#[test]
fn m_zero_reduction_full_field() {
    let grid = Grid::new(64, 5.0).unwrap();
    let (u0, u1) = make_initial_data(DataKind::GaussianBump, 1.0, 9, grid);
    let (num, _) = linear_evolve(&u0, &u1, 0.0, 1.0, 3.2, OdeOptions::default()).unwrap();
    let (exact, _) = exact_wave_propagator(&u0, &u1, 1.0, 3.2).unwrap();
    assert!(common::rel_sup_distance(&num, &exact) < 1e-8);
}

#[test]
fn linear_sup_decay_slope_small() {
    // Desk-size version of the decay measurement: m = 1 on a fully
    // contained cone, slope within 10% of -(m+1)/2 = -1.
    let grid = Grid::new(128, 82.0).unwrap();
    let sigma = 1.0;
    let u0 = Field2D::from_real_fn(grid, |x, y| {
        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
    });
    let u1 = Field2D::zeros(grid, Space::Physical);
    let times: Vec<f64> = (0..40)
        .map(|k| 2.0 * (24.0f64 / 2.0).powf(k as f64 / 39.0))
        .collect();
    let opts = OdeOptions {
        rtol: 1e-6,
        atol: 1e-10,
        ..OdeOptions::default()
    };
    let frames = linear_evolve_sampled(&u0, &u1, 1.0, 1.0, &times, opts, false).unwrap();
    let sups: Vec<f64> = frames
        .fields
        .iter()
        .map(|f| f.sup_norm().unwrap())
        .collect();
    let (slope, _, r2) = tricomi_lab::norms::decay_fit(&times, &sups).unwrap();
    assert!(
        (slope + 1.0).abs() < 0.1,
        "slope {slope} (r² = {r2}) outside 10% of -1"
    );
}
