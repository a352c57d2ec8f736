//! Shared helpers for the integration suites.

use num_complex::Complex64;
use tricomi_lab::field::Field2D;
use tricomi_lab::simulator::Nonlinearity;

/// Relative sup-norm distance between two fields.
pub fn rel_sup_distance(a: &Field2D, b: &Field2D) -> f64 {
    let scale = b
        .values
        .iter()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
        / scale
}

/// Three-point second time derivative on an uneven stencil.
fn second_derivative(
    u0: &Field2D,
    u1: &Field2D,
    u2: &Field2D,
    h0: f64,
    h1: f64,
) -> Field2D {
    let c0 = 2.0 / (h0 * (h0 + h1));
    let c1 = -2.0 / (h0 * h1);
    let c2 = 2.0 / (h1 * (h0 + h1));
    let mut out = u1.clone();
    for (i, v) in out.values.iter_mut().enumerate() {
        *v = u0.values[i] * c0 + u1.values[i] * c1 + u2.values[i] * c2;
    }
    out
}

/// Sharp spectral low-pass keeping wavenumbers `|k| <= fraction * N/2`.
pub fn band_limit(f: &Field2D, fraction: f64) -> Field2D {
    let mut hat = f.clone().spectral();
    let grid = hat.grid;
    let cut = fraction * (grid.n / 2) as f64;
    let n = grid.n;
    for j in 0..n {
        let k2 = grid.wavenumber(j).abs() as f64;
        for i in 0..n {
            let k1 = grid.wavenumber(i).abs() as f64;
            if k1.max(k2) > cut {
                hat.values[j * n + i] = Complex64::new(0.0, 0.0);
            }
        }
    }
    hat.physical()
}

/// [`tricomi_equation_residual`] after low-passing the snapshots, so the
/// ω⁴-amplified alias dust does not drown the measurement.
#[allow(clippy::too_many_arguments)]
pub fn tricomi_equation_residual_banded(
    times: [f64; 3],
    snapshots: [&Field2D; 3],
    m: f64,
    alpha: f64,
    p: f64,
    nonlinearity: Nonlinearity,
    fraction: f64,
) -> f64 {
    let filtered: Vec<Field2D> = snapshots.iter().map(|f| band_limit(f, fraction)).collect();
    tricomi_equation_residual(
        times,
        [&filtered[0], &filtered[1], &filtered[2]],
        m,
        alpha,
        p,
        nonlinearity,
    )
}

/// Relative residual of `u_tt - t^m Δu - t^α N(u)` at the middle of a
/// closely spaced snapshot triple, measured against the sup of the field.
pub fn tricomi_equation_residual(
    times: [f64; 3],
    snapshots: [&Field2D; 3],
    m: f64,
    alpha: f64,
    p: f64,
    nonlinearity: Nonlinearity,
) -> f64 {
    let [t0, t1, t2] = times;
    let utt = second_derivative(snapshots[0], snapshots[1], snapshots[2], t1 - t0, t2 - t1);
    let mut lap = snapshots[1].clone().spectral();
    lap.apply_multiplier(|x1, x2| Complex64::new(-(x1 * x1 + x2 * x2), 0.0))
        .unwrap();
    let lap = lap.physical();
    let tm = t1.powf(m);
    let ta = t1.powf(alpha);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..utt.values.len() {
        let u = snapshots[1].values[i].re;
        let src = match nonlinearity {
            Nonlinearity::AbsPow => ta * u.abs().powf(p),
            Nonlinearity::Defocusing => -ta * u.abs().powf(p - 1.0) * u,
            Nonlinearity::None => 0.0,
        };
        let r = utt.values[i].re - tm * lap.values[i].re - src;
        worst = worst.max(r.abs());
        scale = scale.max(u.abs());
    }
    worst / scale.max(1e-300)
}
