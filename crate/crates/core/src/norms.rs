//! Weighted space-time norms, polar mixed norms `L^q_t L^ν_r L²_θ`, Sobolev
//! norms, decay-rate fitting, and empirical boundedness probes for the
//! weighted space-time estimates.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exponents;
use crate::field::{Field2D, FieldError, Grid, Space};
use crate::propagator::{
    duhamel_evolve_sampled, linear_evolve_sampled, OdeOptions, PropagatorError, SpectralForcing,
};
use crate::simulator::{make_initial_data, DataKind, SimTrace};
use crate::transforms::{phi_m, phi_m_inverse, WeightKind, WeightSpec};

#[derive(Debug, thiserror::Error)]
pub enum NormsError {
    #[error("need at least {need} snapshots, got {got}")]
    InsufficientSnapshots { need: usize, got: usize },
    #[error("decay fit needs >= 10 samples spanning at least one decade; got {got} samples over ratio {span:.3}")]
    SpanError { got: usize, span: f64 },
    #[error("homogeneous norm with s = {s} < 0 requires zero mean; |mean| fraction = {mean_fraction:e}")]
    ZeroMode { s: f64, mean_fraction: f64 },
    #[error("polar resample error estimate {0:e} above 1e-4 relative")]
    PolarResolution(f64),
    #[error("probe hypothesis violated: {0}")]
    HypothesisViolation(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

/// A computed norm with its weight and quadrature metadata.
#[derive(Clone, Debug, Serialize)]
pub struct NormReport {
    pub value: f64,
    pub weight: WeightSpec,
    pub q: f64,
    pub nu: Option<f64>,
    pub grid_n: usize,
    pub grid_l: f64,
    pub n_time_samples: usize,
    /// |value - value at half time resolution| (plus half polar resolution
    /// for mixed norms).
    pub estimated_quadrature_error: f64,
}

fn trapezoid(ts: &[f64], fs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for k in 1..ts.len() {
        acc += 0.5 * (fs[k] + fs[k - 1]) * (ts[k] - ts[k - 1]);
    }
    acc
}

/// Spatial `L^q` power of a weighted snapshot: `Σ (w(t,r)|u|)^q h²`.
fn weighted_lq_power(u: &Field2D, weight: &WeightSpec, t: f64, q: f64) -> f64 {
    let grid = u.grid;
    let n = grid.n;
    let mut acc = 0.0;
    for j in 0..n {
        let y = grid.coord(j);
        for i in 0..n {
            let x = grid.coord(i);
            let r = x.hypot(y);
            let w = weight.eval(t, r);
            if w > 0.0 {
                let a = u.values[j * n + i].norm();
                if a > 0.0 {
                    acc += (w * a).powf(q);
                }
            }
        }
    }
    acc * grid.cell_area()
}

/// `‖ w(t,|x|) u ‖_{L^q}` over the trace snapshots: composite trapezoid in t
/// of the spatial `L^q` powers.
pub fn weighted_spacetime_norm(
    trace: &SimTrace,
    weight: &WeightSpec,
    q: f64,
) -> Result<NormReport, NormsError> {
    weighted_norm_of_frames(&trace.snapshot_times, trace.snapshots.iter().map(|s| &s.0), weight, q)
}

/// Same as [`weighted_spacetime_norm`] over bare field frames.
pub fn weighted_norm_of_frames<'a>(
    times: &[f64],
    frames: impl Iterator<Item = &'a Field2D>,
    weight: &WeightSpec,
    q: f64,
) -> Result<NormReport, NormsError> {
    let frames: Vec<&Field2D> = frames.collect();
    if times.len() < 5 {
        return Err(NormsError::InsufficientSnapshots {
            need: 5,
            got: times.len(),
        });
    }
    let powers: Vec<f64> = frames
        .iter()
        .zip(times)
        .map(|(u, &t)| weighted_lq_power(u, weight, t, q))
        .collect();
    let full = trapezoid(times, &powers);
    let half_ts: Vec<f64> = times.iter().step_by(2).copied().collect();
    let half_ps: Vec<f64> = powers.iter().step_by(2).copied().collect();
    let half = trapezoid(&half_ts, &half_ps);
    let value = full.powf(1.0 / q);
    let grid = frames[0].grid;
    Ok(NormReport {
        value,
        weight: *weight,
        q,
        nu: None,
        grid_n: grid.n,
        grid_l: grid.l,
        n_time_samples: times.len(),
        estimated_quadrature_error: (full.powf(1.0 / q) - half.powf(1.0 / q)).abs(),
    })
}

/// Catmull-Rom cubic through four samples at offsets -1, 0, 1, 2.
#[inline]
fn catmull_rom(f: [Complex64; 4], t: f64) -> Complex64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (f[1] * 2.0
        + (f[2] - f[0]) * t
        + (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) * t2
        + (f[1] * 3.0 - f[0] - f[2] * 3.0 + f[3]) * t3)
        * 0.5
}

/// Bicubic sample of `u` at `(x, y)` with periodic wrap.
fn bicubic(u: &Field2D, x: f64, y: f64) -> Complex64 {
    let grid = u.grid;
    let n = grid.n as i64;
    let h = grid.h();
    let fx = (x + grid.l) / h;
    let fy = (y + grid.l) / h;
    let ix = fx.floor() as i64;
    let iy = fy.floor() as i64;
    let tx = fx - ix as f64;
    let ty = fy - iy as f64;
    let wrap = |k: i64| (k.rem_euclid(n)) as usize;
    let nn = grid.n;
    let mut rows = [Complex64::default(); 4];
    for (dj, row) in rows.iter_mut().enumerate() {
        let j = wrap(iy + dj as i64 - 1) * nn;
        let f = [
            u.values[j + wrap(ix - 1)],
            u.values[j + wrap(ix)],
            u.values[j + wrap(ix + 1)],
            u.values[j + wrap(ix + 2)],
        ];
        *row = catmull_rom(f, tx);
    }
    catmull_rom(rows, ty)
}

/// Radial profile of the angular `L²` norm: `g(r) = (∫ |u(r,θ)|² dθ)^{1/2}`
/// on `n_r` midpoint radii, by bicubic polar resampling with `n_theta`
/// angles (periodic trapezoid = rectangle rule in θ).
fn angular_l2_profile(u: &Field2D, n_r: usize, n_theta: usize, r_max: f64) -> Vec<(f64, f64)> {
    let dtheta = 2.0 * std::f64::consts::PI / n_theta as f64;
    (0..n_r)
        .map(|ir| {
            let r = (ir as f64 + 0.5) * r_max / n_r as f64;
            let mut acc = 0.0;
            for it in 0..n_theta {
                let th = it as f64 * dtheta;
                let v = bicubic(u, r * th.cos(), r * th.sin());
                acc += v.norm_sqr();
            }
            (r, (acc * dtheta).sqrt())
        })
        .collect()
}

fn mixed_norm_once(
    times: &[f64],
    frames: &[&Field2D],
    q: f64,
    nu: f64,
    time_power: f64,
    n_r: usize,
    n_theta: usize,
) -> f64 {
    let r_max = frames[0].grid.l * 0.999;
    let dr = r_max / n_r as f64;
    let spatial: Vec<f64> = frames
        .iter()
        .map(|u| {
            let prof = angular_l2_profile(u, n_r, n_theta, r_max);
            // L^nu_r with Jacobian r dr (midpoint rule).
            let acc: f64 = prof.iter().map(|&(r, g)| g.powf(nu) * r * dr).sum();
            acc.powf(1.0 / nu)
        })
        .collect();
    let powers: Vec<f64> = spatial
        .iter()
        .zip(times)
        .map(|(s, &t)| (t.powf(time_power) * s).powf(q))
        .collect();
    trapezoid(times, &powers).powf(1.0 / q)
}

/// Mixed norm `‖ t^w u ‖_{L^q_t L^ν_r L²_θ}` over the trace snapshots.
/// Angular resolution is fixed at 256; the radial grid matches N.
pub fn mixed_norm_lq_lnu_l2(
    trace: &SimTrace,
    q: f64,
    nu: f64,
    time_power: f64,
) -> Result<NormReport, NormsError> {
    let frames: Vec<&Field2D> = trace.snapshots.iter().map(|s| &s.0).collect();
    mixed_norm_of_frames(&trace.snapshot_times, &frames, q, nu, time_power)
}

/// Mixed norm over bare frames; also returns the resampling error estimate
/// and fails when it exceeds 1e-4 relative.
pub fn mixed_norm_of_frames(
    times: &[f64],
    frames: &[&Field2D],
    q: f64,
    nu: f64,
    time_power: f64,
) -> Result<NormReport, NormsError> {
    if times.len() < 5 {
        return Err(NormsError::InsufficientSnapshots {
            need: 5,
            got: times.len(),
        });
    }
    let grid = frames[0].grid;
    let n_r = grid.n;
    let value = mixed_norm_once(times, frames, q, nu, time_power, n_r, 256);
    // Angular-aliasing estimate: same radial bins, half the angles.
    let coarse = mixed_norm_once(times, frames, q, nu, time_power, n_r, 128);
    let est = (value - coarse).abs() / value.max(1e-300);
    if est > 1e-4 && value > 1e-12 {
        return Err(NormsError::PolarResolution(est));
    }
    Ok(NormReport {
        value,
        weight: WeightSpec::flat(time_power),
        q,
        nu: Some(nu),
        grid_n: grid.n,
        grid_l: grid.l,
        n_time_samples: times.len(),
        estimated_quadrature_error: (value - coarse).abs(),
    })
}

/// Sobolev norm via spectral multipliers: `|ξ|^s` (homogeneous, zero mode
/// excluded) or `(1+|ξ|²)^{s/2}` (inhomogeneous), then `L²`.
pub fn sobolev_norm(field: &Field2D, s: f64, homogeneous: bool) -> Result<f64, NormsError> {
    let mut hat = field.clone().spectral();
    if homogeneous && s < 0.0 {
        let zero_amp = hat.values[0].norm();
        let scale: f64 = hat.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale > 0.0 && zero_amp / scale > 1e-10 {
            return Err(NormsError::ZeroMode {
                s,
                mean_fraction: zero_amp / scale,
            });
        }
    }
    hat.apply_multiplier(|x1, x2| {
        let r2 = x1 * x1 + x2 * x2;
        let mult = if homogeneous {
            if r2 == 0.0 {
                0.0
            } else {
                r2.powf(s / 2.0)
            }
        } else {
            (1.0 + r2).powf(s / 2.0)
        };
        Complex64::new(mult, 0.0)
    })?;
    Ok(hat.l2_norm())
}

/// Grid proxy for the `W^{s,1}` data norms: Bessel multiplier
/// `(1+|ξ|²)^{s/2}` then `L¹` in physical space.
pub fn sobolev_w1_norm(field: &Field2D, s: f64) -> Result<f64, NormsError> {
    let mut hat = field.clone().spectral();
    hat.apply_multiplier(|x1, x2| Complex64::new((1.0 + x1 * x1 + x2 * x2).powf(s / 2.0), 0.0))?;
    let phys = hat.physical();
    Ok(phys.values.iter().map(|v| v.norm()).sum::<f64>() * phys.grid.cell_area())
}

/// The three first-order vector fields of the mixed-norm estimates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VectorField {
    D1,
    D2,
    Rotation,
}

/// Apply `∂₁`, `∂₂`, or the rotation `x₁∂₂ - x₂∂₁` (spectral derivatives,
/// pointwise coordinate multiplication).
pub fn vector_field_apply(field: &Field2D, z: VectorField) -> Result<Field2D, NormsError> {
    match z {
        VectorField::D1 => Ok(field.derivative(0)?),
        VectorField::D2 => Ok(field.derivative(1)?),
        VectorField::Rotation => {
            let d1 = field.derivative(0)?;
            let d2 = field.derivative(1)?;
            let grid = field.grid;
            let n = grid.n;
            let mut out = Field2D::zeros(grid, Space::Physical);
            for j in 0..n {
                let y = grid.coord(j);
                for i in 0..n {
                    let x = grid.coord(i);
                    let idx = j * n + i;
                    out.values[idx] = d2.values[idx] * x - d1.values[idx] * y;
                }
            }
            Ok(out)
        }
    }
}

/// Least-squares power-law fit `log y = slope·log t + intercept`.
pub fn decay_fit(times: &[f64], values: &[f64]) -> Result<(f64, f64, f64), NormsError> {
    let pairs: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|&(&t, &v)| t > 0.0 && v > 0.0)
        .map(|(&t, &v)| (t.ln(), v.ln()))
        .collect();
    let span = if times.is_empty() {
        0.0
    } else {
        times[times.len() - 1] / times[0]
    };
    if pairs.len() < 10 || span < 10.0 {
        return Err(NormsError::SpanError {
            got: pairs.len(),
            span,
        });
    }
    let n = pairs.len() as f64;
    let sx: f64 = pairs.iter().map(|p| p.0).sum();
    let sy: f64 = pairs.iter().map(|p| p.1).sum();
    let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
    let syy: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let r_num = n * sxy - sx * sy;
    let r_den = ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
    let r2 = if r_den > 0.0 {
        (r_num / r_den).powi(2)
    } else {
        1.0
    };
    Ok((slope, intercept, r2))
}

/// Which estimate a ratio probe exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ProbeStatement {
    /// Homogeneous, weighted `L^q`: shifted-cone weight against `W^{s,1}` data.
    HomogeneousWeighted,
    /// Inhomogeneous, weighted `L^q` against weighted `L^{q'}` forcing with
    /// the cone support condition on `F`.
    InhomogeneousWeighted,
    /// Homogeneous, mixed norm against homogeneous Sobolev data.
    HomogeneousMixed,
    /// Inhomogeneous, mixed norm against the dual mixed norm of the forcing.
    InhomogeneousMixed,
}

#[derive(Clone, Debug)]
pub struct ProbeConfig {
    pub statement: ProbeStatement,
    pub m: f64,
    pub alpha: f64,
    /// Nonlinearity power entering the time weights of the mixed statements.
    pub p: f64,
    pub q: f64,
    pub nu: f64,
    pub q_tilde: f64,
    pub nu_tilde: f64,
    pub gamma: f64,
    pub gamma2: f64,
    pub delta: f64,
    pub grid: Grid,
    pub t_probe: f64,
    pub n_time_samples: usize,
    pub family_size: usize,
    pub seed: u64,
    pub ode: OdeOptions,
}

impl ProbeConfig {
    pub fn new(statement: ProbeStatement, m: f64, alpha: f64, grid: Grid) -> ProbeConfig {
        ProbeConfig {
            statement,
            m,
            alpha,
            p: 0.0,
            q: 2.0,
            nu: 2.0,
            q_tilde: 2.0,
            nu_tilde: 2.0,
            gamma: 0.0,
            gamma2: 0.0,
            delta: 0.05,
            grid,
            t_probe: 10.0,
            n_time_samples: 80,
            family_size: 20,
            seed: 1,
            ode: OdeOptions {
                rtol: 1e-8,
                atol: 1e-11,
                ..OdeOptions::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub skipped: usize,
}

fn violation(name: &str, detail: String) -> NormsError {
    NormsError::HypothesisViolation(format!("{name}: {detail}"))
}

fn validate_probe(cfg: &ProbeConfig) -> Result<(), NormsError> {
    let (m, alpha, q) = (cfg.m, cfg.alpha, cfg.q);
    match cfg.statement {
        ProbeStatement::HomogeneousWeighted => {
            if alpha <= -1.0 {
                return Err(violation("alpha", format!("need alpha > -1, got {alpha}")));
            }
            let crit = exponents::p_crit_tricomi(m, alpha)
                .map_err(|e| violation("p_crit", e.to_string()))?;
            let conf =
                exponents::p_conf_tricomi(m, alpha).map_err(|e| violation("p_conf", e.to_string()))?;
            if q <= crit.value + 1.0 || q >= conf + 1.0 {
                return Err(violation(
                    "q",
                    format!(
                        "need p_crit+1 < q < p_conf+1, i.e. ({}, {}), got {q}",
                        crit.value + 1.0,
                        conf + 1.0
                    ),
                ));
            }
            let gamma_hi = (m + 1.0) / (m + 2.0) - (m + 4.0 + 2.0 * alpha) / ((m + 2.0) * q);
            if cfg.gamma <= 0.0 || cfg.gamma >= gamma_hi {
                return Err(violation(
                    "gamma",
                    format!("need 0 < gamma < {gamma_hi}, got {}", cfg.gamma),
                ));
            }
            let delta_hi = (m + 1.0) / (m + 2.0) - cfg.gamma - 1.0 / q;
            if cfg.delta <= 0.0 || cfg.delta >= delta_hi {
                return Err(violation(
                    "delta",
                    format!("need 0 < delta < {delta_hi}, got {}", cfg.delta),
                ));
            }
        }
        ProbeStatement::InhomogeneousWeighted => {
            if alpha <= -1.0 || alpha > m {
                return Err(violation(
                    "alpha",
                    format!("need -1 < alpha <= m, got {alpha}"),
                ));
            }
            let q0 = 2.0 * (m + 3.0 + alpha) / (m + 1.0);
            if !(2.0..=q0 + 1e-12).contains(&q) {
                return Err(violation("q", format!("need 2 <= q <= {q0}, got {q}")));
            }
            let gamma1_hi = (m + 1.0) / (m + 2.0) - (m + 4.0 + 2.0 * alpha) / ((m + 2.0) * q);
            if cfg.gamma <= 0.0 || cfg.gamma >= gamma1_hi {
                return Err(violation(
                    "gamma1",
                    format!("need 0 < gamma1 < {gamma1_hi}, got {}", cfg.gamma),
                ));
            }
            if cfg.gamma2 <= 1.0 / q {
                return Err(violation(
                    "gamma2",
                    format!("need gamma2 > 1/q = {}, got {}", 1.0 / q, cfg.gamma2),
                ));
            }
        }
        ProbeStatement::HomogeneousMixed | ProbeStatement::InhomogeneousMixed => {
            let w = (m - cfg.p + 1.0) / (cfg.p + 1.0);
            let slack = (m + 1.0) / 2.0 - (m + 2.0) / (2.0 * cfg.nu) - w - 1.0 / q;
            if cfg.q < 2.0 || cfg.nu < 2.0 {
                return Err(violation("q,nu", format!("need q,nu >= 2, got {q}, {}", cfg.nu)));
            }
            if slack < -1e-12 {
                return Err(violation(
                    "admissibility",
                    format!("1/q <= (m+1)/2 - (m+2)/(2nu) - (m-p+1)/(p+1) violated by {slack}"),
                ));
            }
            if 1.0 / cfg.nu + w / (m + 2.0) <= 0.0 {
                return Err(violation("nu_positivity", format!("nu = {}", cfg.nu)));
            }
            if cfg.statement == ProbeStatement::InhomogeneousMixed {
                let slack_t = (m + 1.0) / 2.0
                    - (m + 2.0) / (2.0 * cfg.nu_tilde)
                    - w
                    - 1.0 / cfg.q_tilde;
                if cfg.q_tilde < 2.0 || cfg.nu_tilde < 2.0 || slack_t < -1e-12 {
                    return Err(violation(
                        "dual admissibility",
                        format!("(q~, nu~) = ({}, {})", cfg.q_tilde, cfg.nu_tilde),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn probe_times(cfg: &ProbeConfig) -> Vec<f64> {
    let n = cfg.n_time_samples;
    (0..n)
        .map(|k| 1.0 + (cfg.t_probe - 1.0) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Mean-zero companion datum (a derivative of a bump) for norms that live in
/// negative homogeneous Sobolev spaces.
fn mean_zero_variant(f: &Field2D) -> Field2D {
    f.derivative(0).expect("derivative")
}

/// Smooth switch that turns on over `[0, 1]`.
fn smooth_switch(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / s).exp();
        let b = (-1.0 / (1.0 - s)).exp();
        a / (a + b)
    }
}

/// Run an empirical LHS/RHS ratio probe for the selected statement on a
/// deterministic family of data or forcing profiles over `[1, t_probe]`.
/// Zero right-hand sides are reported as skipped, never as ratios.
pub fn strichartz_ratio_probe(cfg: &ProbeConfig) -> Result<ProbeReport, NormsError> {
    let mut reports = strichartz_ratio_probe_windows(cfg, &[cfg.t_probe])?;
    Ok(reports.pop().expect("one window"))
}

/// Same probe evaluated on several nested time windows `[1, T]` from a single
/// evolution per family member (the windows share samples, so ratio
/// stability under window growth costs one run).
pub fn strichartz_ratio_probe_windows(
    cfg: &ProbeConfig,
    windows: &[f64],
) -> Result<Vec<ProbeReport>, NormsError> {
    let mut big = cfg.clone();
    big.t_probe = windows.iter().copied().fold(1.0, f64::max);
    validate_probe(&big)?;
    let cfg = &big;
    // Uniform samples over the largest window, with every window endpoint
    // included exactly.
    let times = {
        let mut ts = probe_times(cfg);
        for &w in windows {
            ts.push(w);
        }
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        ts
    };
    let window_len = |w: f64| times.iter().take_while(|&&t| t <= w + 1e-12).count();
    let mut reports: Vec<ProbeReport> = windows
        .iter()
        .map(|_| ProbeReport {
            ratios: Vec::new(),
            max_ratio: 0.0,
            skipped: 0,
        })
        .collect();
    let kinds = [
        DataKind::SmoothCompactBump,
        DataKind::GaussianBump,
        DataKind::AnnularBump,
    ];
    let tw = (cfg.m - cfg.p + 1.0) / (cfg.p + 1.0);
    for member in 0..cfg.family_size {
        let seed = cfg.seed + member as u64;
        let kind = kinds[member % kinds.len()];
        // One evolution per member; per-window norms on truncated frames.
        // lhs_rhs[w] = (lhs, rhs) for window w.
        let mut push = |w_idx: usize, lhs: f64, rhs: f64| {
            if rhs <= 1e-300 {
                reports[w_idx].skipped += 1;
            } else {
                reports[w_idx].ratios.push(lhs / rhs);
            }
        };
        match cfg.statement {
            ProbeStatement::HomogeneousWeighted => {
                let (u0, u1) = make_initial_data(kind, 1.0, seed, cfg.grid);
                let frames = linear_evolve_sampled(&u0, &u1, cfg.m, 1.0, &times, cfg.ode, false)?;
                let weight = WeightSpec {
                    kind: WeightKind::PhiMShifted,
                    gamma: cfg.gamma,
                    theta: cfg.alpha / cfg.q,
                    mu: None,
                    m: Some(cfg.m),
                };
                let rhs = sobolev_w1_norm(&u0, (cfg.m + 3.0) / (cfg.m + 2.0) + cfg.delta)?
                    + sobolev_w1_norm(&u1, (cfg.m + 1.0) / (cfg.m + 2.0) + cfg.delta)?;
                for (w_idx, &w) in windows.iter().enumerate() {
                    let k = window_len(w);
                    let lhs = weighted_norm_of_frames(
                        &times[..k],
                        frames.fields[..k].iter(),
                        &weight,
                        cfg.q,
                    )?
                    .value;
                    push(w_idx, lhs, rhs);
                }
            }
            ProbeStatement::InhomogeneousWeighted => {
                let forcing = cone_supported_forcing(cfg, seed, &times)?;
                let frames = duhamel_evolve_sampled(&forcing, cfg.m, 1.0, &times, cfg.ode, false)?;
                let f_frames = forcing_physical_frames(&forcing);
                let w_lhs = WeightSpec {
                    kind: WeightKind::PhiMLightCone,
                    gamma: cfg.gamma,
                    theta: cfg.alpha / cfg.q,
                    mu: None,
                    m: Some(cfg.m),
                };
                let w_rhs = WeightSpec {
                    kind: WeightKind::PhiMLightCone,
                    gamma: cfg.gamma2,
                    theta: -cfg.alpha / cfg.q,
                    mu: None,
                    m: Some(cfg.m),
                };
                let q_dual = cfg.q / (cfg.q - 1.0);
                for (w_idx, &w) in windows.iter().enumerate() {
                    let k = window_len(w);
                    let lhs = weighted_norm_of_frames(
                        &times[..k],
                        frames.fields[..k].iter(),
                        &w_lhs,
                        cfg.q,
                    )?
                    .value;
                    let rhs = weighted_norm_of_frames(
                        &times[..k],
                        f_frames[..k].iter(),
                        &w_rhs,
                        q_dual,
                    )?
                    .value;
                    push(w_idx, lhs, rhs);
                }
            }
            ProbeStatement::HomogeneousMixed => {
                let (u0, u1_raw) = make_initial_data(kind, 1.0, seed, cfg.grid);
                let u1 = mean_zero_variant(&u1_raw);
                let frames = linear_evolve_sampled(&u0, &u1, cfg.m, 1.0, &times, cfg.ode, false)?;
                let s = 1.0 - 2.0 / cfg.nu - 2.0 / (cfg.m + 2.0) * (1.0 / cfg.q + tw);
                let rhs = sobolev_norm(&u0, s, true)?
                    + sobolev_norm(&u1, s - 2.0 / (cfg.m + 2.0), true)?;
                for (w_idx, &w) in windows.iter().enumerate() {
                    let k = window_len(w);
                    let refs: Vec<&Field2D> = frames.fields[..k].iter().collect();
                    let lhs = mixed_norm_of_frames(&times[..k], &refs, cfg.q, cfg.nu, tw)?.value;
                    push(w_idx, lhs, rhs);
                }
            }
            ProbeStatement::InhomogeneousMixed => {
                let forcing = cone_supported_forcing(cfg, seed, &times)?;
                let frames = duhamel_evolve_sampled(&forcing, cfg.m, 1.0, &times, cfg.ode, false)?;
                let f_frames = forcing_physical_frames(&forcing);
                let qtp = cfg.q_tilde / (cfg.q_tilde - 1.0);
                let ntp = cfg.nu_tilde / (cfg.nu_tilde - 1.0);
                for (w_idx, &w) in windows.iter().enumerate() {
                    let k = window_len(w);
                    let refs: Vec<&Field2D> = frames.fields[..k].iter().collect();
                    let lhs = mixed_norm_of_frames(&times[..k], &refs, cfg.q, cfg.nu, tw)?.value;
                    let f_refs: Vec<&Field2D> = f_frames[..k].iter().collect();
                    let rhs = mixed_norm_of_frames(&times[..k], &f_refs, qtp, ntp, -tw)?.value;
                    push(w_idx, lhs, rhs);
                }
            }
        }
    }
    for r in reports.iter_mut() {
        r.max_ratio = r.ratios.iter().copied().fold(0.0, f64::max);
    }
    Ok(reports)
}

/// Forcing `F(t,x) = s(t) B(x)` with `B` a random bump of radius `R` and the
/// switch `s` vanishing until `φ_m(t) >= R + 1`, so `F ≡ 0` on
/// `|x| > φ_m(t) - 1` by construction.
fn cone_supported_forcing(
    cfg: &ProbeConfig,
    seed: u64,
    times: &[f64],
) -> Result<SpectralForcing, NormsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b9));
    let radius: f64 = rng.gen_range(0.5..1.8);
    let cx: f64 = rng.gen_range(-0.2..0.2);
    let cy: f64 = rng.gen_range(-0.2..0.2);
    let osc = rng.gen_range(0.4..1.6);
    let amp = rng.gen_range(0.5..1.5);
    // Switch-on time: phi_m(t_on) = radius + |center| + 1 (+ safety).
    let switch_level = radius + cx.hypot(cy) + 1.0 + 0.05;
    let t_on = phi_m_inverse(cfg.m, switch_level);
    let bump = Field2D::from_real_fn(cfg.grid, |x, y| {
        let r = ((x - cx) * (x - cx) + (y - cy) * (y - cy)).sqrt() / radius;
        if r < 1.0 {
            (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    });
    let frames: Vec<Field2D> = times
        .iter()
        .map(|&t| {
            let ramp = smooth_switch((t - t_on) / t_on.max(0.5));
            let a = amp * ramp * (osc * (t - t_on)).cos();
            let mut f = bump.clone();
            for v in f.values.iter_mut() {
                *v *= a;
            }
            f
        })
        .collect();
    // Support check: F must vanish outside |x| <= phi_m(t) - 1.
    for (&t, frame) in times.iter().zip(&frames) {
        let allowed = phi_m(cfg.m, t) - 1.0;
        if frame.sup_norm()? > 0.0 && frame.mass_fraction_outside(allowed.max(0.0)) > 1e-20 {
            return Err(violation(
                "forcing support",
                format!("F not contained in |x| <= phi_m(t)-1 at t = {t}"),
            ));
        }
    }
    Ok(SpectralForcing::from_physical_frames(times.to_vec(), frames)
        .map_err(NormsError::Propagator)?)
}

fn forcing_physical_frames(forcing: &SpectralForcing) -> Vec<Field2D> {
    // Reconstruct the physical frames stored spectrally in the forcing.
    forcing
        .spectral_frames()
        .map(|(_, grid, vals)| {
            Field2D {
                grid,
                space: Space::Spectral,
                values: vals.to_vec(),
            }
            .physical()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{EquationKind, Nonlinearity, SimConfig, SimOutcome};

    fn grid() -> Grid {
        Grid::new(64, 4.0).unwrap()
    }

    fn gaussian(grid: Grid, sigma: f64) -> Field2D {
        Field2D::from_real_fn(grid, |x, y| (-(x * x + y * y) / (2.0 * sigma * sigma)).exp())
    }

    #[test]
    fn sobolev_s0_is_l2_and_s1_is_gradient() {
        let f = gaussian(grid(), 0.5);
        let l2 = f.l2_norm();
        assert!((sobolev_norm(&f, 0.0, false).unwrap() - l2).abs() < 1e-12 * l2);
        let gx = f.derivative(0).unwrap();
        let gy = f.derivative(1).unwrap();
        let grad = (gx.l2_norm().powi(2) + gy.l2_norm().powi(2)).sqrt();
        let h1 = sobolev_norm(&f, 1.0, true).unwrap();
        assert!((h1 - grad).abs() < 1e-10 * grad);
    }

    #[test]
    fn sobolev_single_mode() {
        let g = Grid::new(32, std::f64::consts::PI).unwrap();
        let f = Field2D::from_fn(g, |x, y| Complex64::new(0.0, 3.0 * x + 4.0 * y).exp());
        // |xi| = 5; box measure (2pi)^2.
        let expect = 5.0f64.powf(0.7) * 2.0 * std::f64::consts::PI;
        let got = sobolev_norm(&f, 0.7, true).unwrap();
        assert!((got - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn negative_homogeneous_needs_zero_mean() {
        let f = gaussian(grid(), 0.5);
        assert!(matches!(
            sobolev_norm(&f, -0.5, true),
            Err(NormsError::ZeroMode { .. })
        ));
        let d = f.derivative(0).unwrap();
        assert!(sobolev_norm(&d, -0.5, true).is_ok());
    }

    #[test]
    fn rotation_annihilates_radial_fields() {
        let f = gaussian(grid(), 0.6);
        let rot = vector_field_apply(&f, VectorField::Rotation).unwrap();
        assert!(rot.sup_norm().unwrap() < 1e-8 * f.sup_norm().unwrap());
        let c = Field2D::from_real_fn(grid(), |_, _| 2.0);
        assert!(
            vector_field_apply(&c, VectorField::D1)
                .unwrap()
                .sup_norm()
                .unwrap()
                < 1e-12
        );
    }

    #[test]
    fn rotation_eigenmode() {
        // u = e^{ikθ} f(r): rotation gives ik·u.
        let g = Grid::new(128, 4.0).unwrap();
        let k = 3.0;
        let f = Field2D::from_fn(g, |x, y| {
            let r2 = x * x + y * y;
            let theta = y.atan2(x);
            Complex64::new(0.0, k * theta).exp() * (-r2 / 0.5).exp() * r2.powf(k / 2.0)
        });
        let rot = vector_field_apply(&f, VectorField::Rotation).unwrap();
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (a, b) in rot.values.iter().zip(&f.values) {
            err = err.max((a - Complex64::new(0.0, k) * b).norm());
            scale = scale.max(b.norm());
        }
        assert!(err / scale < 1e-6, "relative error {}", err / scale);
    }

    #[test]
    fn decay_fit_exact_power_law() {
        let times: Vec<f64> = (0..40).map(|k| 1.5f64.powi(k / 4) * (1.0 + 0.1 * (k % 4) as f64)).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * t.powf(-1.5)).collect();
        let (slope, intercept, r2) = decay_fit(&times, &values).unwrap();
        assert!((slope + 1.5).abs() < 1e-10);
        assert!((intercept - 3f64.ln()).abs() < 1e-10);
        assert!(r2 > 1.0 - 1e-12);
    }

    #[test]
    fn decay_fit_span_gate() {
        let times: Vec<f64> = (0..20).map(|k| 1.0 + 0.1 * k as f64).collect();
        let values = vec![1.0; 20];
        assert!(matches!(
            decay_fit(&times, &values),
            Err(NormsError::SpanError { .. })
        ));
    }

    #[test]
    fn weighted_norm_of_zero_trace_is_zero() {
        let g = grid();
        let times: Vec<f64> = (0..8).map(|k| 1.0 + k as f64 * 0.5).collect();
        let zeros: Vec<Field2D> = times
            .iter()
            .map(|_| Field2D::zeros(g, Space::Physical))
            .collect();
        let w = WeightSpec {
            kind: WeightKind::PhiMShifted,
            gamma: 0.1,
            theta: 0.5,
            mu: None,
            m: Some(2.0),
        };
        let r = weighted_norm_of_frames(&times, zeros.iter(), &w, 4.0).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn weighted_norm_matches_separable_analytic_value() {
        // u(t,x) = a(t) g(x) with flat weight and q = 2:
        // ||u||² = ∫ a(t)² dt · ||g||²_{L²}.
        let g = grid();
        let f = gaussian(g, 0.5);
        let times: Vec<f64> = (0..2001).map(|k| 1.0 + 4.0 * k as f64 / 2000.0).collect();
        let frames: Vec<Field2D> = times
            .iter()
            .map(|&t| {
                let mut h = f.clone();
                for v in h.values.iter_mut() {
                    *v *= 1.0 / t;
                }
                h
            })
            .collect();
        let w = WeightSpec::flat(0.0);
        let r = weighted_norm_of_frames(&times, frames.iter(), &w, 2.0).unwrap();
        // ∫_1^5 t^{-2} dt = 4/5.
        let expect = (0.8f64).sqrt() * f.l2_norm();
        assert!(
            (r.value - expect).abs() < 1e-6 * expect,
            "got {} expect {expect}",
            r.value
        );
        assert!(r.estimated_quadrature_error < 1e-4 * expect);
    }

    #[test]
    fn weighted_norm_flat_weight_is_plain_l2() {
        // gamma = 0, q = 2 cross-checked against the scalar monitor series.
        let g = Grid::new(64, 8.0).unwrap();
        let mut config = SimConfig::new(EquationKind::Tricomi { m: 1.0, alpha: 0.0 }, 2.0, g, 3.0);
        config.nonlinearity = Nonlinearity::None;
        config.snapshot_times = (0..17).map(|k| 1.0 + 2.0 * k as f64 / 16.0).collect();
        let (u0, u1) = make_initial_data(DataKind::SmoothCompactBump, 0.5, 3, g);
        let trace = crate::simulator::evolve(&config, &u0, &u1).unwrap();
        assert_eq!(trace.outcome, SimOutcome::ReachedHorizon);
        let w = WeightSpec::flat(0.0);
        let r = weighted_spacetime_norm(&trace, &w, 2.0).unwrap();
        // Same integral from the snapshot l2 series.
        let l2s: Vec<f64> = trace
            .snapshots
            .iter()
            .map(|(u, _)| u.l2_norm().powi(2))
            .collect();
        let expect = trapezoid(&trace.snapshot_times, &l2s).sqrt();
        assert!((r.value - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn mixed_norm_radial_field_angular_factor() {
        let g = Grid::new(256, 4.0).unwrap();
        let f = gaussian(g, 1.0);
        let prof = angular_l2_profile(&f, 64, 128, 2.0);
        for &(r, v) in prof.iter().take(40) {
            let expect = (2.0 * std::f64::consts::PI).sqrt() * (-(r * r) / 2.0).exp();
            assert!(
                (v - expect).abs() < 1e-6 * expect.max(1e-8),
                "r = {r}: {v} vs {expect}"
            );
        }
    }

    #[test]
    fn mixed_norm_rotation_mode_independence() {
        // |e^{ikθ} f(r)| is radial, so the angular norm is k-independent.
        let g = Grid::new(128, 4.0).unwrap();
        let make = |k: f64| {
            Field2D::from_fn(g, |x, y| {
                let r2 = x * x + y * y;
                let theta = y.atan2(x);
                Complex64::new(0.0, k * theta).exp() * (-r2).exp() * r2.powf(k / 2.0)
            })
        };
        let f1 = make(2.0);
        let f2 = make(2.0);
        let p1 = angular_l2_profile(&f1, 32, 256, 2.0);
        let p2 = angular_l2_profile(&f2, 32, 256, 2.0);
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a.1 - b.1).abs() <= 1e-8 * a.1.max(1e-12));
        }
    }

    #[test]
    fn mixed_norm_q_nu_2_equals_cartesian_l2() {
        let g = Grid::new(128, 4.0).unwrap();
        let times: Vec<f64> = (0..9).map(|k| 1.0 + 0.25 * k as f64).collect();
        let frames: Vec<Field2D> = times.iter().map(|_| gaussian(g, 1.0)).collect();
        let refs: Vec<&Field2D> = frames.iter().collect();
        let mixed = mixed_norm_of_frames(&times, &refs, 2.0, 2.0, 0.0).unwrap();
        let w = WeightSpec::flat(0.0);
        let cart = weighted_norm_of_frames(&times, frames.iter(), &w, 2.0).unwrap();
        assert!(
            (mixed.value - cart.value).abs() < 1e-4 * cart.value,
            "mixed {} cart {}",
            mixed.value,
            cart.value
        );
    }

    #[test]
    fn probe_hypothesis_gates() {
        let g = Grid::new(32, 8.0).unwrap();
        let mut cfg = ProbeConfig::new(ProbeStatement::HomogeneousWeighted, 2.0, 2.0, g);
        cfg.q = 4.0;
        cfg.gamma = 0.2; // above the admissible 0.125 window
        cfg.delta = 0.01;
        assert!(matches!(
            strichartz_ratio_probe(&cfg),
            Err(NormsError::HypothesisViolation(_))
        ));
        cfg.gamma = 0.0625;
        cfg.delta = 2.0; // delta window violated
        assert!(strichartz_ratio_probe(&cfg).is_err());
    }

    #[test]
    fn probe_zero_family_skips() {
        // A family of size 0 yields no ratios and max 0.
        let g = Grid::new(32, 8.0).unwrap();
        let mut cfg = ProbeConfig::new(ProbeStatement::HomogeneousWeighted, 2.0, 2.0, g);
        cfg.q = 4.0;
        cfg.gamma = 0.0625;
        cfg.delta = 0.02;
        cfg.family_size = 0;
        cfg.t_probe = 3.0;
        cfg.n_time_samples = 10;
        let r = strichartz_ratio_probe(&cfg).unwrap();
        assert!(r.ratios.is_empty());
        assert_eq!(r.max_ratio, 0.0);
    }
}
