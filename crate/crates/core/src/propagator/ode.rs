//! Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) for the per-mode
//! oscillator `y'' + t^m ρ² y = g(t)`.
//!
//! Besides the usual error control, the step is capped at
//! `cap_factor / (t^{m/2} ρ)` — the local oscillation period — so phase error
//! stays bounded for high modes over long windows.

use num_complex::Complex64;

use super::PropagatorError;

/// One per-mode state `(y, y')` at time `t` for radial frequency `ρ`.
#[derive(Clone, Copy, Debug)]
pub struct ModeState {
    pub rho: f64,
    pub y: Complex64,
    pub dy_dt: Complex64,
    pub t: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Step cap as a fraction of the local oscillation time `1/(t^{m/2} ρ)`.
    pub cap_factor: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-13,
            cap_factor: 0.125,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct OdeOutcome {
    pub state: ModeState,
    pub steps: usize,
    pub rejected: usize,
}

type State = [Complex64; 2];

#[inline]
fn rhs(m: f64, rho2: f64, t: f64, y: &State, g: Option<&dyn Fn(f64) -> Complex64>) -> State {
    let forcing = g.map_or(Complex64::new(0.0, 0.0), |g| g(t));
    [y[1], forcing - t.powf(m) * rho2 * y[0]]
}

// Dormand-Prince 5(4) coefficients.
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

struct Integrator<'a> {
    m: f64,
    rho2: f64,
    g: Option<&'a dyn Fn(f64) -> Complex64>,
    opts: OdeOptions,
    t: f64,
    y: State,
    k1: State,
    dt: f64,
    steps: usize,
    rejected: usize,
}

impl<'a> Integrator<'a> {
    fn new(
        m: f64,
        rho: f64,
        t0: f64,
        y0: Complex64,
        dy0: Complex64,
        g: Option<&'a dyn Fn(f64) -> Complex64>,
        opts: OdeOptions,
    ) -> Integrator<'a> {
        let y = [y0, dy0];
        let k1 = rhs(m, rho * rho, t0, &y, g);
        let freq = (t0.max(1e-6)).powf(m / 2.0) * rho + 1e-9;
        let dt = (opts.cap_factor / freq).min(0.1).max(1e-8);
        Integrator {
            m,
            rho2: rho * rho,
            g,
            opts,
            t: t0,
            y,
            k1,
            dt,
            steps: 0,
            rejected: 0,
        }
    }

    fn cap(&self, t: f64, dt: f64) -> f64 {
        // Frequency grows with t; evaluate the cap at the step end.
        let freq = (t + dt).max(1e-6).powf(self.m / 2.0) * self.rho2.sqrt() + 1e-9;
        dt.min(self.opts.cap_factor / freq)
    }

    /// Advance to exactly `t_target`.
    fn advance_to(&mut self, t_target: f64) -> Result<(), PropagatorError> {
        while self.t < t_target {
            if self.steps + self.rejected > self.opts.max_steps {
                return Err(PropagatorError::StepBudgetExceeded {
                    t: self.t,
                    steps: self.steps,
                });
            }
            let mut dt = self.cap(self.t, self.dt);
            let mut clamped = false;
            if self.t + dt >= t_target {
                dt = t_target - self.t;
                clamped = true;
            }
            if dt < 1e-14 * self.t.abs().max(1.0) {
                if clamped {
                    // Target reached to roundoff.
                    self.t = t_target;
                    return Ok(());
                }
                return Err(PropagatorError::StepSizeCollapse {
                    t: self.t,
                    dt,
                });
            }

            let mut k = [[Complex64::new(0.0, 0.0); 2]; 7];
            k[0] = self.k1;
            for stage in 1..7 {
                let mut ys = self.y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(stage) {
                        let a = A[stage - 1][j];
                        if a != 0.0 {
                            acc += kj[i] * a;
                        }
                    }
                    *yi += acc * dt;
                }
                k[stage] = rhs(self.m, self.rho2, self.t + C[stage] * dt, &ys, self.g);
            }
            // 5th-order solution is the stage-6 state (FSAL); k[6] is its RHS.
            let mut y_new = self.y;
            for (i, yi) in y_new.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate().take(6) {
                    let a = A[5][j];
                    if a != 0.0 {
                        acc += kj[i] * a;
                    }
                }
                *yi += acc * dt;
            }

            let mut err_sq = 0.0;
            for i in 0..2 {
                let mut e = Complex64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                let e = e * dt;
                let sc = self.opts.atol
                    + self.opts.rtol * self.y[i].norm().max(y_new[i].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / 2.0).sqrt();

            if err <= 1.0 {
                self.t += dt;
                self.y = y_new;
                self.k1 = k[6];
                self.steps += 1;
            } else {
                self.rejected += 1;
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            self.dt = dt * factor;
        }
        Ok(())
    }

    fn state(&self) -> ModeState {
        ModeState {
            rho: self.rho2.sqrt(),
            y: self.y[0],
            dy_dt: self.y[1],
            t: self.t,
        }
    }
}

/// Solve `y'' + t^m ρ² y = g(t)` from `(y0, dy0)` at `t0` to `t1`.
pub fn mode_ode_solve(
    m: f64,
    rho: f64,
    t0: f64,
    t1: f64,
    y0: Complex64,
    dy0: Complex64,
    forcing: Option<&dyn Fn(f64) -> Complex64>,
    opts: OdeOptions,
) -> Result<OdeOutcome, PropagatorError> {
    let mut integ = Integrator::new(m, rho, t0, y0, dy0, forcing, opts);
    integ.advance_to(t1)?;
    Ok(OdeOutcome {
        state: integ.state(),
        steps: integ.steps,
        rejected: integ.rejected,
    })
}

/// Integrate once and emit the state at each (sorted, increasing) sample time.
pub fn mode_ode_solve_sampled(
    m: f64,
    rho: f64,
    t0: f64,
    samples: &[f64],
    y0: Complex64,
    dy0: Complex64,
    forcing: Option<&dyn Fn(f64) -> Complex64>,
    opts: OdeOptions,
) -> Result<Vec<ModeState>, PropagatorError> {
    let mut integ = Integrator::new(m, rho, t0, y0, dy0, forcing, opts);
    let mut out = Vec::with_capacity(samples.len());
    for &ts in samples {
        debug_assert!(ts >= t0);
        if ts > integ.t {
            integ.advance_to(ts)?;
        }
        out.push(integ.state());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn constant_coefficient_oscillator() {
        // m = 0, rho = 1, data (1, 0) at t0 = 1: y(t) = cos(t - 1).
        let out = mode_ode_solve(
            0.0,
            1.0,
            1.0,
            7.0,
            c(1.0),
            c(0.0),
            None,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((out.state.y - c((7.0f64 - 1.0).cos())).norm() < 1e-9);
        assert!((out.state.dy_dt - c(-(7.0f64 - 1.0).sin())).norm() < 1e-9);
        assert!(out.steps > 0);
    }

    #[test]
    fn zero_frequency_is_linear_motion() {
        let out = mode_ode_solve(
            2.0,
            0.0,
            1.0,
            5.0,
            c(0.3),
            c(0.7),
            None,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((out.state.y - c(0.3 + 0.7 * 4.0)).norm() < 1e-10);
    }

    #[test]
    fn forced_oscillator_matches_particular_solution() {
        // y'' + y = sin(2t) has particular solution -sin(2t)/3; with data
        // matching it at t0 the solution stays on it.
        let part = |t: f64| -(2.0 * t).sin() / 3.0;
        let dpart = |t: f64| -2.0 * (2.0 * t).cos() / 3.0;
        let forcing = |t: f64| c((2.0 * t).sin());
        let out = mode_ode_solve(
            0.0,
            1.0,
            1.0,
            9.0,
            c(part(1.0)),
            c(dpart(1.0)),
            Some(&forcing),
            OdeOptions::default(),
        )
        .unwrap();
        assert!((out.state.y - c(part(9.0))).norm() < 1e-8);
    }

    #[test]
    fn sampled_outputs_are_consistent_with_single_shot() {
        let samples = [1.5, 2.5, 4.0];
        let states = mode_ode_solve_sampled(
            1.0,
            2.0,
            1.0,
            &samples,
            c(1.0),
            c(0.0),
            None,
            OdeOptions::default(),
        )
        .unwrap();
        let direct = mode_ode_solve(
            1.0,
            2.0,
            1.0,
            4.0,
            c(1.0),
            c(0.0),
            None,
            OdeOptions::default(),
        )
        .unwrap();
        assert!((states[2].y - direct.state.y).norm() < 1e-9);
        assert_eq!(states.len(), 3);
        assert!((states[0].t - 1.5).abs() < 1e-14);
    }

    #[test]
    fn wronskian_of_fundamental_pair_is_constant() {
        // No first-order term: W(t) = y1 y2' - y2 y1' is conserved.
        let opts = OdeOptions::default();
        for m in [0.5, 1.0, 2.0] {
            let a = mode_ode_solve(m, 1.5, 0.0, 6.0, c(1.0), c(0.0), None, opts).unwrap();
            let b = mode_ode_solve(m, 1.5, 0.0, 6.0, c(0.0), c(1.0), None, opts).unwrap();
            let w = a.state.y * b.state.dy_dt - b.state.y * a.state.dy_dt;
            assert!((w - c(1.0)).norm() < 1e-7, "m = {m}: W = {w}");
        }
    }
}
