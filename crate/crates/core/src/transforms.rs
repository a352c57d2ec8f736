//! Exact maps between the damped-wave and Tricomi forms: parameter
//! correspondences, degenerate-speed weights, the Lagrangian density, the
//! conformal charge, the scaling transform, and trace-level time changes.
//!
//! Conventions. The damped form carries clock `t` and the Tricomi form clock
//! `τ`, linked by `t = φ_m(τ)` with `φ_m(τ) = (2/(m+2)) τ^{(m+2)/2}`. Under
//! that substitution, `∂²_τ u - τ^m Δu = τ^m (∂²_t ũ - Δũ + (μ/t) ∂_t ũ)`
//! for `μ = m/(m+2)`, which fixes the direction of the map. For `μ ∈ (1,2)`
//! the amplitude change `v = t^{μ-1} u` is applied on the damped side first.

use num_complex::Complex64;
use serde::Serialize;

use crate::field::{Field2D, FieldError, Space};
use crate::simulator::{EquationKind, SimTrace};

#[derive(Debug, thiserror::Error)]
pub enum TransformError {
    #[error("mu = 1 is the Klein-Gordon case; the map is defined for mu in (0,1)∪(1,2)")]
    MuIsOne,
    #[error("mu = {0} outside (0, 2)")]
    MuOutOfRange(f64),
    #[error("m must be positive, got {0}")]
    MNonPositive(f64),
    #[error("target times [{lo}, {hi}] fall outside the source trace range [{src_lo}, {src_hi}]")]
    TimeRange {
        lo: f64,
        hi: f64,
        src_lo: f64,
        src_hi: f64,
    },
    #[error("trace is in the wrong form for this map")]
    WrongForm,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Degenerate characteristic `φ_m(t) = (2/(m+2)) t^{(m+2)/2}`.
pub fn phi_m(m: f64, t: f64) -> f64 {
    2.0 / (m + 2.0) * t.powf((m + 2.0) / 2.0)
}

/// Inverse of `φ_m`: the `τ` with `φ_m(τ) = s`.
pub fn phi_m_inverse(m: f64, s: f64) -> f64 {
    ((m + 2.0) / 2.0 * s).powf(2.0 / (m + 2.0))
}

/// Damped-side light-cone radius `ψ_μ(t) = |μ-1| t^{1/|μ-1|}`.
pub fn psi_mu(mu: f64, t: f64) -> Result<f64, TransformError> {
    if mu == 1.0 {
        return Err(TransformError::MuIsOne);
    }
    let a = (mu - 1.0).abs();
    Ok(a * t.powf(1.0 / a))
}

/// Decay power `θ(μ, p)`: `2μ/((1-μ)(p+1))` for `μ ∈ (0,1)` and
/// `(3-μ-p(μ-1))/((μ-1)(p+1))` for `μ ∈ (1,2)`. Coincides with `α/(p+1)` of
/// the transformed Tricomi problem.
pub fn theta_exponent(mu: f64, p: f64) -> Result<f64, TransformError> {
    if mu == 1.0 {
        return Err(TransformError::MuIsOne);
    }
    if mu <= 0.0 || mu >= 2.0 {
        return Err(TransformError::MuOutOfRange(mu));
    }
    Ok(if mu < 1.0 {
        2.0 * mu / ((1.0 - mu) * (p + 1.0))
    } else {
        (3.0 - mu - p * (mu - 1.0)) / ((mu - 1.0) * (p + 1.0))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    DampedToTricomi,
    TricomiToDamped,
}

/// A parameter-level change of variables between the two forms.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TransformMap {
    pub direction: Direction,
    pub mu: f64,
    pub m: f64,
    pub alpha: f64,
    pub p: f64,
    /// Power `a` in the amplitude factor `t^a` applied on the damped side
    /// (`0` for `μ ∈ (0,1)`, `μ-1` for `μ ∈ (1,2)`).
    pub amplitude_power: f64,
    /// Residual forcing power `2(α-m)/(m+2)` left on the damped side when the
    /// tuple matches neither canonical pattern (zero in the canonical cases).
    pub residual_forcing_power: f64,
    pub time_map: &'static str,
}

/// Map `(μ, p)` with `μ ∈ (0,1)∪(1,2)` to the Tricomi parameters:
/// `m = α = 2μ/(1-μ)` below 1, and `m = 2(2-μ)/(μ-1)`, `α = 1+m-p` above.
pub fn damped_to_tricomi(mu: f64, p: f64) -> Result<TransformMap, TransformError> {
    if mu == 1.0 {
        return Err(TransformError::MuIsOne);
    }
    if mu <= 0.0 || mu >= 2.0 {
        return Err(TransformError::MuOutOfRange(mu));
    }
    let (m, alpha, amplitude_power) = if mu < 1.0 {
        let m = 2.0 * mu / (1.0 - mu);
        (m, m, 0.0)
    } else {
        let m = 2.0 * (2.0 - mu) / (mu - 1.0);
        (m, 1.0 + m - p, mu - 1.0)
    };
    Ok(TransformMap {
        direction: Direction::DampedToTricomi,
        mu,
        m,
        alpha,
        p,
        amplitude_power,
        residual_forcing_power: 0.0,
        time_map: "damped time = phi_m(tricomi time)",
    })
}

/// Map `(m, α, p)` back to a damped tuple. The canonical patterns `α = m`
/// and `α = 1+m-p` invert `damped_to_tricomi`; any other `α` returns the
/// generic damped form `μ = m/(m+2)` with the leftover forcing power
/// `2(α-m)/(m+2)` recorded.
pub fn tricomi_to_damped(m: f64, alpha: f64, p: f64) -> Result<TransformMap, TransformError> {
    if m <= 0.0 {
        return Err(TransformError::MNonPositive(m));
    }
    let tol = 1e-12 * (1.0 + m.abs() + p.abs());
    let (mu, amplitude_power, residual) = if (alpha - m).abs() <= tol {
        (m / (m + 2.0), 0.0, 0.0)
    } else if (alpha - (1.0 + m - p)).abs() <= tol {
        ((m + 4.0) / (m + 2.0), (m + 4.0) / (m + 2.0) - 1.0, 0.0)
    } else {
        (m / (m + 2.0), 0.0, 2.0 * (alpha - m) / (m + 2.0))
    };
    Ok(TransformMap {
        direction: Direction::TricomiToDamped,
        mu,
        m,
        alpha,
        p,
        amplitude_power,
        residual_forcing_power: residual,
        time_map: "tricomi time = phi_m^{-1}(damped time)",
    })
}

/// Weight families appearing in the space-time estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum WeightKind {
    /// `(1 + |ψ_μ(t)² - r²|)^γ`
    PsiMuLightCone,
    /// `(φ_m(t)² - r²)₊^γ` (clamped to zero outside the cone)
    PhiMLightCone,
    /// `((φ_m(t) + 2)² - r²)₊^γ`
    PhiMShifted,
}

/// A pointwise space-time weight `w(t, r) = base(t, r)^γ · t^θ`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct WeightSpec {
    pub kind: WeightKind,
    pub gamma: f64,
    pub theta: f64,
    pub mu: Option<f64>,
    pub m: Option<f64>,
}

impl WeightSpec {
    pub fn flat(theta: f64) -> WeightSpec {
        WeightSpec {
            kind: WeightKind::PhiMLightCone,
            gamma: 0.0,
            theta,
            mu: None,
            m: Some(1.0),
        }
    }

    pub fn eval(&self, t: f64, r: f64) -> f64 {
        let time_power = if self.theta == 0.0 { 1.0 } else { t.powf(self.theta) };
        if self.gamma == 0.0 {
            return time_power;
        }
        let base = match self.kind {
            WeightKind::PsiMuLightCone => {
                let psi = psi_mu(self.mu.expect("mu required"), t).expect("mu != 1");
                1.0 + (psi * psi - r * r).abs()
            }
            WeightKind::PhiMLightCone => {
                let phi = phi_m(self.m.expect("m required"), t);
                (phi * phi - r * r).max(0.0)
            }
            WeightKind::PhiMShifted => {
                let phi = phi_m(self.m.expect("m required"), t) + 2.0;
                (phi * phi - r * r).max(0.0)
            }
        };
        base.powf(self.gamma) * time_power
    }
}

/// Pointwise Lagrangian density
/// `L = ½|∂ₜu|² - ½ t^m |∇u|² - (t^α/(p+1)) |u|^{p+1}` (real parts).
pub fn lagrangian_density(
    u: &Field2D,
    du_dt: &Field2D,
    grad: (&Field2D, &Field2D),
    t: f64,
    m: f64,
    alpha: f64,
    p: f64,
) -> Result<Field2D, FieldError> {
    u.assert_same_grid(du_dt)?;
    u.assert_same_grid(grad.0)?;
    u.assert_same_grid(grad.1)?;
    let tm = t.powf(m);
    let ta = t.powf(alpha);
    let mut out = Field2D::zeros(u.grid, Space::Physical);
    for (i, v) in out.values.iter_mut().enumerate() {
        let ut = du_dt.values[i].re;
        let ux = grad.0.values[i].re;
        let uy = grad.1.values[i].re;
        let uu = u.values[i].re;
        let l = 0.5 * ut * ut
            - 0.5 * tm * (ux * ux + uy * uy)
            - ta / (p + 1.0) * uu.abs().powf(p + 1.0);
        *v = Complex64::new(l, 0.0);
    }
    Ok(out)
}

/// Result of a conformal-charge evaluation on one snapshot.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChargeReport {
    /// `∫ Q₀ dx`
    pub q0: f64,
    /// `∫ L dx`
    pub lagrangian: f64,
    /// Coefficient of the balance law: `d/dt ∫Q₀ = coeff · ∫L`.
    pub balance_coefficient: f64,
    /// `L²`-mass fraction within two cells of the box boundary; a support
    /// violation when it exceeds 1e-10.
    pub boundary_mass_fraction: f64,
}

/// Integrate the conformal charge
/// `Q₀ = ∂ₜu ((α+2)/(p-1) u + t ∂ₜu + ((m+2)/2) Σ xⱼ∂ⱼu) - t L` over the box.
/// Spatial derivatives are spectral; the quadrature is the periodic
/// trapezoid rule (exact spacing `h²` sums).
pub fn conformal_charge_q0(
    u: &Field2D,
    du_dt: &Field2D,
    t: f64,
    m: f64,
    alpha: f64,
    p: f64,
) -> Result<ChargeReport, FieldError> {
    u.assert_same_grid(du_dt)?;
    let ux = u.derivative(0)?;
    let uy = u.derivative(1)?;
    let lag = lagrangian_density(u, du_dt, (&ux, &uy), t, m, alpha, p)?;
    let grid = u.grid;
    let n = grid.n;
    let kappa = (alpha + 2.0) / (p - 1.0);
    let mut q0_sum = 0.0;
    let mut lag_sum = 0.0;
    let mut boundary = 0.0;
    let mut total = 0.0;
    for j in 0..n {
        let y = grid.coord(j);
        for i in 0..n {
            let x = grid.coord(i);
            let idx = j * n + i;
            let uu = u.values[idx].re;
            let ut = du_dt.values[idx].re;
            let xdu = x * ux.values[idx].re + y * uy.values[idx].re;
            let l = lag.values[idx].re;
            let q0 = ut * (kappa * uu + t * ut + 0.5 * (m + 2.0) * xdu) - t * l;
            q0_sum += q0;
            lag_sum += l;
            let mass = uu * uu + ut * ut;
            total += mass;
            if i < 2 || i >= n - 2 || j < 2 || j >= n - 2 {
                boundary += mass;
            }
        }
    }
    let area = grid.cell_area();
    Ok(ChargeReport {
        q0: q0_sum * area,
        lagrangian: lag_sum * area,
        balance_coefficient: 2.0 * (alpha + 2.0) / (p - 1.0) - m - 1.0,
        boundary_mass_fraction: if total > 0.0 { boundary / total } else { 0.0 },
    })
}

/// Evaluate the band-limited interpolant of `f` at the scaled points
/// `(s·x_i, s·y_j)` exactly (two-stage mode summation, O(N³)).
///
/// For `s > 1` the compression dilates the spectrum by `s`, so modes above
/// `Nyquist/s` would fold back onto the grid; they are removed first
/// (anti-alias filter). Content at scales the compressed grid cannot carry
/// is unrepresentable either way.
fn eval_scaled_trig(f: &Field2D, s: f64) -> Field2D {
    use rayon::prelude::*;
    let grid = f.grid;
    let n = grid.n;
    let mut hat = f.clone().spectral();
    if s > 1.0 {
        let cut = ((n / 2) as f64 / s).floor() as i64;
        for j in 0..n {
            let k2 = grid.wavenumber(j).abs();
            for i in 0..n {
                let k1 = grid.wavenumber(i).abs();
                if k1.max(k2) > cut {
                    hat.values[j * n + i] = Complex64::new(0.0, 0.0);
                }
            }
        }
    }
    let hat = hat;
    let norm = 1.0 / (n * n) as f64;
    // Stage 1: partial[j][k1] = Σ_{k2} û[k2][k1] e^{i s y_j ξ2(k2)}
    // DFT lattice modes are e^{i ξ (x + L)}: evaluation points enter the
    // phases with the +L offset.
    let partial: Vec<Complex64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let yj = s * grid.coord(j) + grid.l;
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            for k2 in 0..n {
                let phase = Complex64::new(0.0, grid.freq(k2) * yj).exp();
                let base = k2 * n;
                for (k1, r) in row.iter_mut().enumerate() {
                    *r += hat.values[base + k1] * phase;
                }
            }
            row.into_iter()
        })
        .collect();
    // Stage 2: out[j][i] = Σ_{k1} partial[j][k1] e^{i s x_i ξ1(k1)}
    let mut out = Field2D::zeros(grid, Space::Physical);
    out.values
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, row)| {
            // Points whose preimage s·x leaves the fundamental cell would
            // sample wrapped images of the periodic interpolant; the true
            // compressed field of box-supported data vanishes there.
            if (s * grid.coord(j)).abs() > grid.l {
                return;
            }
            let base = j * n;
            for (i, v) in row.iter_mut().enumerate() {
                if (s * grid.coord(i)).abs() > grid.l {
                    continue;
                }
                let xi = s * grid.coord(i) + grid.l;
                let mut acc = Complex64::new(0.0, 0.0);
                for k1 in 0..n {
                    let phase = Complex64::new(0.0, grid.freq(k1) * xi).exp();
                    acc += partial[base + k1] * phase;
                }
                *v = acc * norm;
            }
        });
    out
}

/// Apply `u(t,x) -> λ^{(α+2)/(p-1)} u(λt, λ^{(m+2)/2} x)` to a trace.
///
/// Target times are `t_i/λ` for the source times `t_i`, so no time
/// interpolation is involved; only the spatial rescale is interpolatory
/// (exact trig-interpolant evaluation). `λ = 1` returns the trace unchanged.
pub fn scaling_transform(trace: &SimTrace, lambda: f64) -> Result<SimTrace, TransformError> {
    let (m, alpha) = match trace.equation {
        EquationKind::Tricomi { m, alpha } => (m, alpha),
        EquationKind::Damped { .. } => return Err(TransformError::WrongForm),
    };
    if lambda == 1.0 {
        return Ok(trace.clone());
    }
    let p = trace.p;
    let kappa = (alpha + 2.0) / (p - 1.0);
    let amp = lambda.powf(kappa);
    let s = lambda.powf((m + 2.0) / 2.0);
    let mut out = trace.clone();
    out.times = trace.times.iter().map(|t| t / lambda).collect();
    out.snapshot_times = trace.snapshot_times.iter().map(|t| t / lambda).collect();
    out.snapshots = trace
        .snapshots
        .iter()
        .map(|(u, du)| {
            let mut su = eval_scaled_trig(u, s);
            let mut sdu = eval_scaled_trig(du, s);
            for v in su.values.iter_mut() {
                *v *= amp;
            }
            // ∂_{t'} u_λ = λ^{κ+1} (∂ₜu)(λt', ·)
            for v in sdu.values.iter_mut() {
                *v *= amp * lambda;
            }
            (su, sdu)
        })
        .collect();
    Ok(out)
}

/// Monotone (Fritsch-Carlson) cubic interpolation of a scalar series.
pub fn pchip_eval(ts: &[f64], ys: &[f64], t: f64) -> f64 {
    let n = ts.len();
    debug_assert!(n >= 2);
    let k = match ts.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
        Ok(k) => return ys[k],
        Err(k) => k.clamp(1, n - 1) - 1,
    };
    // Slopes with one-sided ends.
    let h = |i: usize| ts[i + 1] - ts[i];
    let delta = |i: usize| (ys[i + 1] - ys[i]) / h(i);
    let slope = |i: usize| -> f64 {
        if i == 0 {
            delta(0)
        } else if i == n - 1 {
            delta(n - 2)
        } else {
            let (d0, d1) = (delta(i - 1), delta(i));
            if d0 * d1 <= 0.0 {
                0.0
            } else {
                let (h0, h1) = (h(i - 1), h(i));
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                (w1 + w2) / (w1 / d0 + w2 / d1)
            }
        }
    };
    let (t0, t1) = (ts[k], ts[k + 1]);
    let (y0, y1) = (ys[k], ys[k + 1]);
    let (m0, m1) = (slope(k), slope(k + 1));
    let hk = t1 - t0;
    let x = (t - t0) / hk;
    let x2 = x * x;
    let x3 = x2 * x;
    y0 * (2.0 * x3 - 3.0 * x2 + 1.0)
        + m0 * hk * (x3 - 2.0 * x2 + x)
        + y1 * (-2.0 * x3 + 3.0 * x2)
        + m1 * hk * (x3 - x2)
}

/// Change a trace between the damped and Tricomi clocks.
///
/// With `target_times = None` the output samples sit exactly at the images of
/// the source sample times (no interpolation). Explicit target times are
/// honored by monotone-cubic resampling per grid point.
pub fn field_time_change(
    trace: &SimTrace,
    map: &TransformMap,
    target_times: Option<&[f64]>,
) -> Result<SimTrace, TransformError> {
    // Identity short-circuit: trace already in the map's target form.
    match (map.direction, &trace.equation) {
        (Direction::DampedToTricomi, EquationKind::Tricomi { .. })
        | (Direction::TricomiToDamped, EquationKind::Damped { .. }) => {
            return Ok(trace.clone());
        }
        _ => {}
    }
    let m = map.m;
    let a = map.amplitude_power;
    // Map each snapshot exactly.
    let (new_equation, mapped_times, mapped): (EquationKind, Vec<f64>, Vec<(Field2D, Field2D)>) =
        match map.direction {
            Direction::DampedToTricomi => {
                // τ_i = φ^{-1}(t_i); u_tri(τ,x) = t^a u_d(t,x) at t = φ_m(τ).
                let times: Vec<f64> = trace
                    .snapshot_times
                    .iter()
                    .map(|&t| phi_m_inverse(m, t))
                    .collect();
                let fields = trace
                    .snapshot_times
                    .iter()
                    .zip(&trace.snapshots)
                    .map(|(&t, (u, du))| {
                        let tau = phi_m_inverse(m, t);
                        let tau_pow = tau.powf(m / 2.0);
                        let ta = t.powf(a);
                        let ta1 = if a == 0.0 { 0.0 } else { a * t.powf(a - 1.0) };
                        let mut nu = u.clone();
                        let mut ndu = du.clone();
                        for idx in 0..nu.values.len() {
                            let uu = u.values[idx];
                            let ut = du.values[idx];
                            nu.values[idx] = uu * ta;
                            // ∂_τ (t^a u) = τ^{m/2} (a t^{a-1} u + t^a ∂ₜu)
                            ndu.values[idx] = (uu * ta1 + ut * ta) * tau_pow;
                        }
                        (nu, ndu)
                    })
                    .collect();
                (
                    EquationKind::Tricomi {
                        m,
                        alpha: map.alpha,
                    },
                    times,
                    fields,
                )
            }
            Direction::TricomiToDamped => {
                // t_i = φ_m(τ_i); u_d(t,x) = τ-side u times t^{-a}.
                let times: Vec<f64> = trace.snapshot_times.iter().map(|&tau| phi_m(m, tau)).collect();
                let fields = trace
                    .snapshot_times
                    .iter()
                    .zip(&trace.snapshots)
                    .map(|(&tau, (u, du))| {
                        let t = phi_m(m, tau);
                        let tau_pow = tau.powf(m / 2.0);
                        let ta = t.powf(-a);
                        let ta1 = if a == 0.0 { 0.0 } else { -a * t.powf(-a - 1.0) };
                        let mut nu = u.clone();
                        let mut ndu = du.clone();
                        for idx in 0..nu.values.len() {
                            let uu = u.values[idx];
                            let ut = du.values[idx];
                            nu.values[idx] = uu * ta;
                            // ∂ₜ(t^{-a} u) = t^{-a-1}(-a) u + t^{-a} ∂_τu dτ/dt
                            ndu.values[idx] = uu * ta1 + ut * ta / tau_pow;
                        }
                        (nu, ndu)
                    })
                    .collect();
                (EquationKind::Damped { mu: map.mu }, times, fields)
            }
        };

    let mut out = trace.clone();
    out.equation = new_equation;
    match target_times {
        None => {
            out.times = mapped_times.clone();
            out.snapshot_times = mapped_times;
            out.snapshots = mapped;
        }
        Some(targets) => {
            let lo = *mapped_times.first().unwrap();
            let hi = *mapped_times.last().unwrap();
            if targets.iter().any(|&t| t < lo - 1e-12 || t > hi + 1e-12) {
                return Err(TransformError::TimeRange {
                    lo: targets.first().copied().unwrap_or(lo),
                    hi: targets.last().copied().unwrap_or(hi),
                    src_lo: lo,
                    src_hi: hi,
                });
            }
            let grid = mapped[0].0.grid;
            let total = grid.total();
            let mut snaps = Vec::with_capacity(targets.len());
            for &tt in targets {
                let mut u = Field2D::zeros(grid, Space::Physical);
                let mut du = Field2D::zeros(grid, Space::Physical);
                // Per-point monotone cubic in time, real and imaginary parts.
                for idx in 0..total {
                    let ur: Vec<f64> = mapped.iter().map(|(f, _)| f.values[idx].re).collect();
                    let ui: Vec<f64> = mapped.iter().map(|(f, _)| f.values[idx].im).collect();
                    let vr: Vec<f64> = mapped.iter().map(|(_, g)| g.values[idx].re).collect();
                    let vi: Vec<f64> = mapped.iter().map(|(_, g)| g.values[idx].im).collect();
                    u.values[idx] = Complex64::new(
                        pchip_eval(&mapped_times, &ur, tt),
                        pchip_eval(&mapped_times, &ui, tt),
                    );
                    du.values[idx] = Complex64::new(
                        pchip_eval(&mapped_times, &vr, tt),
                        pchip_eval(&mapped_times, &vi, tt),
                    );
                }
                snaps.push((u, du));
            }
            out.times = targets.to_vec();
            out.snapshot_times = targets.to_vec();
            out.snapshots = snaps;
        }
    }
    out.scalars = Vec::new();
    Ok(out)
}
