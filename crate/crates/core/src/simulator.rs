//! Pseudo-spectral method-of-lines solver for `u_tt - t^m Δu = t^α N(u)` and
//! the damped form `u_tt - Δu + (μ/t) u_t = N(u)`, with compactly supported
//! data generation, adaptive time stepping, two-signal blowup detection, and
//! per-run scalar monitors (norms, Lagrangian, conformal charge).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::field::{Field2D, FieldError, Grid, Space};
use crate::transforms::{conformal_charge_q0, phi_m};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(
        "box half-width {l} too small for finite-speed containment; need at least {needed} \
         (1 + cone growth over [{t0}, {t_max}] + 0.5 margin)"
    )]
    BoxTooSmall {
        l: f64,
        needed: f64,
        t0: f64,
        t_max: f64,
    },
    #[error("t0 must be positive, got {0}")]
    BadT0(f64),
    #[error("t_max = {t_max} must exceed t0 = {t0}")]
    BadHorizon { t0: f64, t_max: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Which equation a run integrates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum EquationKind {
    /// `u_tt - t^m Δu = t^α N(u)`
    Tricomi { m: f64, alpha: f64 },
    /// `u_tt - Δu + (μ/t) u_t = N(u)`
    Damped { mu: f64 },
}

impl EquationKind {
    /// Radius the support cone gains between `t0` and `t` (characteristic
    /// speed `t^{m/2}` in Tricomi form, `1` in damped form).
    pub fn cone_growth(&self, t0: f64, t: f64) -> f64 {
        match *self {
            EquationKind::Tricomi { m, .. } => phi_m(m, t) - phi_m(m, t0),
            EquationKind::Damped { .. } => t - t0,
        }
    }
}

/// Nonlinearity `N(u)` on the right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Nonlinearity {
    /// `N(u) = |u|^p` (the sign-definite source of the model problem).
    AbsPow,
    /// `N(u) = -|u|^{p-1} u`, the Euler-Lagrange (defocusing) form whose
    /// solutions carry the conformal charge balance exactly.
    Defocusing,
    /// Linear run (`N = 0`).
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimConfig {
    pub equation: EquationKind,
    pub p: f64,
    pub nonlinearity: Nonlinearity,
    #[serde(flatten)]
    pub grid: Grid,
    pub t0: f64,
    pub t_max: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Step cap as a fraction of the local oscillation time of the highest
    /// resolved mode.
    pub cap_factor: f64,
    pub blowup_sup_threshold: f64,
    pub blowup_step_floor: f64,
    /// Record scalar monitors every this many accepted steps.
    pub monitor_stride: usize,
    /// Times at which full `(u, ∂ₜu)` snapshots are stored (sorted).
    pub snapshot_times: Vec<f64>,
}

impl SimConfig {
    pub fn new(equation: EquationKind, p: f64, grid: Grid, t_max: f64) -> SimConfig {
        SimConfig {
            equation,
            p,
            nonlinearity: Nonlinearity::AbsPow,
            grid,
            t0: 1.0,
            t_max,
            rtol: 1e-8,
            atol: 1e-12,
            cap_factor: 0.7,
            blowup_sup_threshold: 1e6,
            blowup_step_floor: 1e-10,
            monitor_stride: 5,
            snapshot_times: Vec::new(),
        }
    }

    /// Finite-speed containment: the box must hold the unit data ball plus
    /// the cone growth over the run, with a 0.5 margin.
    pub fn validate(&self) -> Result<(), SimError> {
        if self.t0 <= 0.0 {
            return Err(SimError::BadT0(self.t0));
        }
        if self.t_max <= self.t0 {
            return Err(SimError::BadHorizon {
                t0: self.t0,
                t_max: self.t_max,
            });
        }
        let needed = 1.0 + self.equation.cone_growth(self.t0, self.t_max) + 0.5;
        if self.grid.l < needed {
            return Err(SimError::BoxTooSmall {
                l: self.grid.l,
                needed,
                t0: self.t0,
                t_max: self.t_max,
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SimOutcome {
    ReachedHorizon,
    BlowupDetected { t_star: f64 },
    StepCollapse { t_star: f64, sup_trend: f64 },
}

/// Scalar monitors at one time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScalarRow {
    pub t: f64,
    pub sup: f64,
    pub l2: f64,
    pub h1_seminorm: f64,
    pub lagrangian: Option<f64>,
    pub q0: Option<f64>,
    pub max_imag: f64,
}

#[derive(Clone, Debug)]
pub struct SimTrace {
    pub equation: EquationKind,
    pub p: f64,
    pub nonlinearity: Nonlinearity,
    /// Monitor times (strictly increasing).
    pub times: Vec<f64>,
    pub scalars: Vec<ScalarRow>,
    pub snapshot_times: Vec<f64>,
    pub snapshots: Vec<(Field2D, Field2D)>,
    pub outcome: SimOutcome,
}

impl SimTrace {
    /// Scalar series by closure, e.g. `|r| r.sup`.
    pub fn series(&self, f: impl Fn(&ScalarRow) -> f64) -> Vec<f64> {
        self.scalars.iter().map(f).collect()
    }
}

/// Shapes of compactly supported initial data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DataKind {
    GaussianBump,
    SmoothCompactBump,
    AnnularBump,
}

/// Smooth cutoff equal to 1 on `[0, 1/2]`, 0 from 1 on.
fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let x = (s - 0.5) / 0.5;
        let a = (-1.0 / (1.0 - x * x).max(1e-300)).exp();
        let b = (-1.0 / (x * x).max(1e-300)).exp();
        a / (a + b)
    }
}

/// Generate `(u0, u1)` supported in `B(0, 1)` (numerically below 1e-14
/// outside), scaled so the larger of the two sup-norms equals `epsilon`.
/// Deterministic in `seed`.
pub fn make_initial_data(
    kind: DataKind,
    epsilon: f64,
    seed: u64,
    grid: Grid,
) -> (Field2D, Field2D) {
    if epsilon == 0.0 {
        return (
            Field2D::zeros(grid, Space::Physical),
            Field2D::zeros(grid, Space::Physical),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cx = rng.gen_range(-0.12..0.12);
    let cy = rng.gen_range(-0.12..0.12);
    let width = rng.gen_range(0.85..1.15);
    let u1_amp = rng.gen_range(0.3..0.7);

    let profile = move |x: f64, y: f64| -> f64 {
        let r = ((x - cx) * (x - cx) + (y - cy) * (y - cy)).sqrt() / width;
        match kind {
            DataKind::GaussianBump => {
                // Gaussian with a smooth cutoff pinning the support.
                (-r * r / (2.0 * 0.22 * 0.22)).exp() * cutoff(r / 0.8)
            }
            DataKind::SmoothCompactBump => {
                let s = r / 0.8;
                if s < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
            DataKind::AnnularBump => {
                let s = (r - 0.5) / 0.28;
                if s.abs() < 1.0 {
                    (1.0 - 1.0 / (1.0 - s * s)).exp()
                } else {
                    0.0
                }
            }
        }
    };
    let u0 = Field2D::from_real_fn(grid, |x, y| profile(x, y));
    let sup = u0.sup_norm().unwrap().max(1e-300);
    let scale0 = epsilon / sup;
    let mut u0 = u0;
    for v in u0.values.iter_mut() {
        *v *= scale0;
    }
    let mut u1 = Field2D::from_real_fn(grid, |x, y| profile(x, y));
    for v in u1.values.iter_mut() {
        *v *= scale0 * u1_amp;
    }
    (u0, u1)
}

// Dormand-Prince coefficients shared with the per-mode solver.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Spectral state `(û, v̂)` flattened as two stacked arrays.
#[derive(Clone)]
struct State {
    u: Vec<Complex64>,
    v: Vec<Complex64>,
}

struct Stepper<'a> {
    config: &'a SimConfig,
    /// `|ξ|²` per mode.
    xi_sq: Vec<f64>,
    rho_max: f64,
}

impl<'a> Stepper<'a> {
    fn new(config: &'a SimConfig) -> Stepper<'a> {
        let grid = config.grid;
        let n = grid.n;
        let mut xi_sq = vec![0.0; grid.total()];
        for j in 0..n {
            let x2 = grid.freq(j);
            for i in 0..n {
                let x1 = grid.freq(i);
                xi_sq[j * n + i] = x1 * x1 + x2 * x2;
            }
        }
        let rho_max = grid.freq_max() * std::f64::consts::SQRT_2;
        Stepper {
            config,
            xi_sq,
            rho_max,
        }
    }

    /// Nonlinear source in physical space; the imaginary dust is discarded
    /// before powering so spectral round-off never feeds the nonlinearity.
    fn source(&self, t: f64, u_hat: &[Complex64]) -> Option<Vec<Complex64>> {
        let p = self.config.p;
        let coeff = match self.config.equation {
            EquationKind::Tricomi { alpha, .. } => t.powf(alpha),
            EquationKind::Damped { .. } => 1.0,
        };
        let mut u = Field2D {
            grid: self.config.grid,
            space: Space::Spectral,
            values: u_hat.to_vec(),
        };
        u.to_physical();
        match self.config.nonlinearity {
            Nonlinearity::AbsPow => {
                u.values.par_iter_mut().for_each(|v| {
                    *v = Complex64::new(coeff * v.re.abs().powf(p), 0.0);
                });
            }
            Nonlinearity::Defocusing => {
                u.values.par_iter_mut().for_each(|v| {
                    let r = v.re;
                    *v = Complex64::new(-coeff * r.abs().powf(p - 1.0) * r, 0.0);
                });
            }
            Nonlinearity::None => return None,
        }
        u.to_spectral();
        u.dealias().unwrap();
        Some(u.values)
    }

    fn rhs(&self, t: f64, s: &State) -> State {
        let src = self.source(t, &s.u);
        let (tm, damping) = match self.config.equation {
            EquationKind::Tricomi { m, .. } => (t.powf(m), 0.0),
            EquationKind::Damped { mu } => (1.0, mu / t),
        };
        let n = self.config.grid.n;
        let mut du = vec![Complex64::default(); s.u.len()];
        let mut dv = vec![Complex64::default(); s.u.len()];
        du.par_chunks_mut(n)
            .zip(dv.par_chunks_mut(n))
            .enumerate()
            .for_each(|(j, (du_row, dv_row))| {
                let base = j * n;
                for i in 0..n {
                    let idx = base + i;
                    du_row[i] = s.v[idx];
                    let mut acc = -tm * self.xi_sq[idx] * s.u[idx] - damping * s.v[idx];
                    if let Some(src) = &src {
                        acc += src[idx];
                    }
                    dv_row[i] = acc;
                }
            });
        State { u: du, v: dv }
    }

    fn freq(&self, t: f64) -> f64 {
        match self.config.equation {
            EquationKind::Tricomi { m, .. } => t.powf(m / 2.0) * self.rho_max,
            EquationKind::Damped { .. } => self.rho_max,
        }
    }
}

fn axpy(state: &State, ks: &[State], coeffs: &[f64], dt: f64) -> State {
    let mut u = state.u.clone();
    let mut v = state.v.clone();
    for (k, &c) in ks.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        let cdt = c * dt;
        u.par_iter_mut().zip(&k.u).for_each(|(a, b)| *a += b * cdt);
        v.par_iter_mut().zip(&k.v).for_each(|(a, b)| *a += b * cdt);
    }
    State { u, v }
}

/// Scaled RMS error of the embedded pair; reductions are per-row then summed
/// serially, so the result is independent of the thread count.
fn error_norm(old: &State, new: &State, ks: &[State], dt: f64, rtol: f64, atol: f64, n: usize) -> f64 {
    let row_sums: Vec<f64> = (0..old.u.len() / n)
        .into_par_iter()
        .map(|j| {
            let mut acc = 0.0;
            for i in j * n..(j + 1) * n {
                let mut eu = Complex64::default();
                let mut ev = Complex64::default();
                for (k, &e) in ks.iter().zip(&E) {
                    if e != 0.0 {
                        eu += k.u[i] * e;
                        ev += k.v[i] * e;
                    }
                }
                let scu = atol + rtol * old.u[i].norm().max(new.u[i].norm());
                let scv = atol + rtol * old.v[i].norm().max(new.v[i].norm());
                acc += (eu.norm() * dt / scu).powi(2) + (ev.norm() * dt / scv).powi(2);
            }
            acc
        })
        .collect();
    let total: f64 = row_sums.iter().sum();
    (total / (2.0 * old.u.len() as f64)).sqrt()
}

/// Integrate the configured equation from `(u0, u1)` at `config.t0`.
pub fn evolve(config: &SimConfig, u0: &Field2D, u1: &Field2D) -> Result<SimTrace, SimError> {
    config.validate()?;
    u0.assert_same_grid(u1)?;
    let grid = config.grid;
    let n = grid.n;
    let stepper = Stepper::new(config);

    let mut state = State {
        u: u0.clone().spectral().values,
        v: u1.clone().spectral().values,
    };
    let mut t = config.t0;
    let mut dt = (config.cap_factor / stepper.freq(t).max(1e-9)).min(0.05);
    let mut k1 = stepper.rhs(t, &state);

    let mut times = Vec::new();
    let mut scalars = Vec::new();
    let mut snapshots = Vec::new();
    let mut snapshot_times = Vec::new();
    let mut pending_snapshots: Vec<f64> = config.snapshot_times.clone();
    pending_snapshots.retain(|&ts| ts >= config.t0 - 1e-12);

    let mut accepted: usize = 0;
    let mut sup_history: Vec<(f64, f64)> = Vec::new();
    let mut outcome = SimOutcome::ReachedHorizon;

    let record = |t: f64,
                  state: &State,
                  times: &mut Vec<f64>,
                  scalars: &mut Vec<ScalarRow>,
                  sup_history: &mut Vec<(f64, f64)>|
     -> f64 {
        let u = Field2D {
            grid,
            space: Space::Spectral,
            values: state.u.clone(),
        }
        .physical();
        let v = Field2D {
            grid,
            space: Space::Spectral,
            values: state.v.clone(),
        }
        .physical();
        let sup = u.sup_norm().unwrap();
        let (lag, q0) = match config.equation {
            EquationKind::Tricomi { m, alpha } => {
                match conformal_charge_q0(&u, &v, t, m, alpha, config.p) {
                    Ok(r) => (Some(r.lagrangian), Some(r.q0)),
                    Err(_) => (None, None),
                }
            }
            EquationKind::Damped { .. } => (None, None),
        };
        let mut h1 = Field2D {
            grid,
            space: Space::Spectral,
            values: state.u.clone(),
        };
        h1.apply_multiplier(|x1, x2| Complex64::new((x1 * x1 + x2 * x2).sqrt(), 0.0))
            .unwrap();
        times.push(t);
        scalars.push(ScalarRow {
            t,
            sup,
            l2: u.l2_norm(),
            h1_seminorm: h1.l2_norm(),
            lagrangian: lag,
            q0,
            max_imag: u.max_imag().unwrap(),
        });
        sup_history.push((t, sup));
        sup
    };

    record(t, &state, &mut times, &mut scalars, &mut sup_history);
    while !pending_snapshots.is_empty() && pending_snapshots[0] <= t + 1e-12 {
        pending_snapshots.remove(0);
        snapshot_times.push(t);
        let u = Field2D {
            grid,
            space: Space::Spectral,
            values: state.u.clone(),
        }
        .physical();
        let v = Field2D {
            grid,
            space: Space::Spectral,
            values: state.v.clone(),
        }
        .physical();
        snapshots.push((u, v));
    }

    'time_loop: while t < config.t_max {
        // Clamp to the next event (snapshot or horizon).
        let next_event = pending_snapshots.first().copied().unwrap_or(config.t_max);
        let target = next_event.min(config.t_max);
        let mut h = dt.min(config.cap_factor / stepper.freq(t + dt).max(1e-9));
        let mut clamped = false;
        if t + h >= target {
            h = target - t;
            clamped = true;
        }
        if h < config.blowup_step_floor * t.max(1.0) && !clamped {
            // Step collapse: decide between blowup and numerical failure by
            // the recent sup trend.
            let trend = sup_trend(&sup_history);
            outcome = if trend > 0.0 {
                SimOutcome::BlowupDetected { t_star: t }
            } else {
                SimOutcome::StepCollapse {
                    t_star: t,
                    sup_trend: trend,
                }
            };
            break 'time_loop;
        }

        let mut ks: Vec<State> = Vec::with_capacity(7);
        ks.push(k1.clone());
        for stage in 1..7 {
            let ys = axpy(&state, &ks, &A[stage - 1][..stage], h);
            ks.push(stepper.rhs(t + C[stage] * h, &ys));
        }
        let y_new = axpy(&state, &ks[..6], &A[5], h);
        let err = error_norm(&state, &y_new, &ks, h, config.rtol, config.atol, n);

        if err <= 1.0 {
            t += h;
            state = y_new;
            k1 = ks.pop().unwrap();
            accepted += 1;

            let is_snapshot =
                !pending_snapshots.is_empty() && (t - pending_snapshots[0]).abs() <= 1e-9;
            if is_snapshot || accepted % config.monitor_stride == 0 || t >= config.t_max {
                let sup = record(t, &state, &mut times, &mut scalars, &mut sup_history);
                if sup > config.blowup_sup_threshold {
                    outcome = SimOutcome::BlowupDetected { t_star: t };
                    break 'time_loop;
                }
                if !sup.is_finite() {
                    outcome = SimOutcome::StepCollapse {
                        t_star: t,
                        sup_trend: f64::INFINITY,
                    };
                    break 'time_loop;
                }
            }
            if is_snapshot {
                pending_snapshots.remove(0);
                snapshot_times.push(t);
                let u = Field2D {
                    grid,
                    space: Space::Spectral,
                    values: state.u.clone(),
                }
                .physical();
                let v = Field2D {
                    grid,
                    space: Space::Spectral,
                    values: state.v.clone(),
                }
                .physical();
                snapshots.push((u, v));
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        dt = (h * factor).max(1e-300);
    }

    Ok(SimTrace {
        equation: config.equation,
        p: config.p,
        nonlinearity: config.nonlinearity,
        times,
        scalars,
        snapshot_times,
        snapshots,
        outcome,
    })
}

fn sup_trend(history: &[(f64, f64)]) -> f64 {
    let k = history.len();
    if k < 3 {
        return 0.0;
    }
    let tail = &history[k.saturating_sub(5)..];
    let first = tail.first().unwrap();
    let last = tail.last().unwrap();
    last.1 - first.1
}

/// Integrate `u_tt - t^m Δu = t^α N(u)`.
pub fn evolve_semilinear(config: &SimConfig, u0: &Field2D, u1: &Field2D) -> Result<SimTrace, SimError> {
    debug_assert!(matches!(config.equation, EquationKind::Tricomi { .. }));
    evolve(config, u0, u1)
}

/// Integrate the damped form `u_tt - Δu + (μ/t) u_t = N(u)`.
pub fn evolve_damped(config: &SimConfig, u0: &Field2D, u1: &Field2D) -> Result<SimTrace, SimError> {
    debug_assert!(matches!(config.equation, EquationKind::Damped { .. }));
    evolve(config, u0, u1)
}

/// One cell of a blowup scan.
#[derive(Clone, Debug, Serialize)]
pub struct BlowupCell {
    pub p: f64,
    pub epsilon: f64,
    pub outcome: SimOutcome,
    /// Time to blowup when detected.
    pub t_star: Option<f64>,
}

/// Run the configured equation over a `(p, ε)` grid; deterministic given the
/// grids and seed.
pub fn blowup_scan(
    base: &SimConfig,
    p_grid: &[f64],
    epsilon_grid: &[f64],
    kind: DataKind,
    seed: u64,
) -> Result<Vec<BlowupCell>, SimError> {
    let mut cells = Vec::new();
    for &p in p_grid {
        for &eps in epsilon_grid {
            let mut config = base.clone();
            config.p = p;
            let (u0, u1) = make_initial_data(kind, eps, seed, config.grid);
            let trace = evolve(&config, &u0, &u1)?;
            let t_star = match trace.outcome {
                SimOutcome::BlowupDetected { t_star } => Some(t_star),
                _ => None,
            };
            cells.push(BlowupCell {
                p,
                epsilon: eps,
                outcome: trace.outcome,
                t_star,
            });
        }
    }
    Ok(cells)
}
