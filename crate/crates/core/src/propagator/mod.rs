//! Linear generalized Tricomi evolution `v_tt - t^m Δv = F` by two
//! independent routes: per-frequency adaptive ODE integration (the primary
//! path) and explicit Fourier multipliers `V₁, V₂` built from confluent
//! hypergeometric series (the validation oracle), plus Duhamel solves for
//! forcing.
//!
//! The multiplier pair is the fundamental system of `y'' + t^m ρ² y = 0`
//! normalized at `t = 0`: `V₁(0) = 1, V₁'(0) = 0` and `V₂(0) = 0,
//! V₂'(0) = 1`, with `V₁ = e^{-z/2} Φ(m/(2(m+2)), m/(m+2); z)` and
//! `V₂ = t e^{-z/2} Φ((m+4)/(2(m+2)), (m+4)/(m+2); z)` at `z = 2iφ_m(t)ρ`.
//! Data posed at `t₀ > 0` is always propagated through the ODE path, which
//! needs no normalization bookkeeping between the two time origins.

mod evolve;
mod kummer;
mod ode;

pub use evolve::{
    duhamel_evolve, duhamel_evolve_sampled, exact_wave_propagator, linear_evolve,
    linear_evolve_sampled, EvolvedFrames, SpectralForcing,
};
pub use kummer::{hyp0f1, kummer_phi, KummerError, SERIES_REGIME_MAX_ABS_Z};
pub use ode::{mode_ode_solve, mode_ode_solve_sampled, ModeState, OdeOptions, OdeOutcome};

use num_complex::Complex64;

use crate::field::FieldError;
use crate::transforms::phi_m;

#[derive(Debug, thiserror::Error)]
pub enum PropagatorError {
    #[error("step size collapsed to {dt:e} at t = {t}; stiffness or tolerance misconfiguration")]
    StepSizeCollapse { t: f64, dt: f64 },
    #[error("step budget exhausted at t = {t} after {steps} steps")]
    StepBudgetExceeded { t: f64, steps: usize },
    #[error("phi_m(t)·rho = {0} outside the multiplier series regime (<= 30)")]
    SymbolRegime(f64),
    #[error("forcing samples cover [{have_lo}, {have_hi}] but [{need_lo}, {need_hi}] is required")]
    ForcingRange {
        have_lo: f64,
        have_hi: f64,
        need_lo: f64,
        need_hi: f64,
    },
    #[error("forcing needs at least 4 time samples, got {0}")]
    ForcingTooShort(usize),
    #[error(transparent)]
    Kummer(#[from] KummerError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Both multiplier values `(V₁, V₂)` at `(t, ρ)`.
///
/// Requires `φ_m(t)·ρ <= 30`. For `|z| = 2φ_m(t)ρ <= 30` the values come
/// straight from the Kummer series; past that, from the (algebraically
/// identical) real quadratic-transformation series, which carries the
/// cancellation comfortably to the regime edge.
pub fn symbol_v(m: f64, t: f64, rho: f64) -> Result<(Complex64, Complex64), PropagatorError> {
    let x = phi_m(m, t) * rho;
    if x > 30.0 * (1.0 + 1e-9) {
        return Err(PropagatorError::SymbolRegime(x));
    }
    let c1 = m / (m + 2.0);
    let c2 = (m + 4.0) / (m + 2.0);
    if 2.0 * x <= kummer::SERIES_REGIME_MAX_ABS_Z {
        let z = Complex64::new(0.0, 2.0 * x);
        let phase = (-z / 2.0).exp();
        let v1 = phase * kummer_phi(c1 / 2.0, c1, z)?;
        let v2 = phase * kummer_phi(c2 / 2.0, c2, z)? * t;
        Ok((v1, v2))
    } else {
        let u = -x * x / 4.0;
        let v1 = hyp0f1((c1 + 1.0) / 2.0, u)?;
        let v2 = t * hyp0f1((c2 + 1.0) / 2.0, u)?;
        Ok((Complex64::new(v1, 0.0), Complex64::new(v2, 0.0)))
    }
}

/// `(V₁, V₂)` together with their exact time derivatives, via the
/// term-by-term derivative of the transformed series.
pub fn symbol_v_with_dt(
    m: f64,
    t: f64,
    rho: f64,
) -> Result<((f64, f64), (f64, f64)), PropagatorError> {
    let x = phi_m(m, t) * rho;
    if x > 30.0 * (1.0 + 1e-9) {
        return Err(PropagatorError::SymbolRegime(x));
    }
    let b1 = (m + 1.0) / (m + 2.0);
    let b2 = (m + 3.0) / (m + 2.0);
    let u = -x * x / 4.0;
    let f1 = hyp0f1(b1, u)?;
    let f2 = hyp0f1(b2, u)?;
    // d/dx 0F1(; b; -x²/4) = -(x / (2b)) 0F1(; b+1; -x²/4)
    let df1 = -x / (2.0 * b1) * hyp0f1(b1 + 1.0, u)?;
    let df2 = -x / (2.0 * b2) * hyp0f1(b2 + 1.0, u)?;
    let dx_dt = rho * t.powf(m / 2.0);
    let v1 = f1;
    let dv1 = df1 * dx_dt;
    let v2 = t * f2;
    let dv2 = f2 + t * df2 * dx_dt;
    Ok(((v1, dv1), (v2, dv2)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_normalization_at_small_t() {
        for m in [0.5, 1.0, 2.0] {
            let t = 1e-6;
            let (v1, v2) = symbol_v(m, t, 1.0).unwrap();
            assert!((v1 - Complex64::new(1.0, 0.0)).norm() < 1e-8);
            assert!((v2 / t - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn symbol_seam_is_continuous() {
        // The Kummer-series and transformed-series paths meet at 2φρ = 30;
        // values on both sides of the seam must agree.
        let m = 2.0;
        let rho = 1.0;
        // phi_2(t) = t²/2, so phi·rho = 15 at t = sqrt(30).
        let t_seam = 30f64.sqrt();
        let (a1, a2) = symbol_v(m, t_seam * (1.0 - 1e-9), rho).unwrap();
        let (b1, b2) = symbol_v(m, t_seam * (1.0 + 1e-9), rho).unwrap();
        assert!((a1 - b1).norm() < 1e-7);
        assert!((a2 - b2).norm() < 1e-6 * a2.norm());
    }

    #[test]
    fn symbol_regime_error() {
        // m = 2: phi(t) = t²/2; t = 9, rho = 1 gives phi·rho = 40.5 > 30.
        assert!(matches!(
            symbol_v(2.0, 9.0, 1.0),
            Err(PropagatorError::SymbolRegime(_))
        ));
    }

    #[test]
    fn wronskian_is_one_everywhere() {
        for m in [0.5, 1.0, 2.0] {
            for t in [0.2, 1.0, 2.0, 3.0] {
                for rho in [0.5, 2.0, 5.0] {
                    if phi_m(m, t) * rho > 30.0 {
                        continue;
                    }
                    let ((v1, dv1), (v2, dv2)) = symbol_v_with_dt(m, t, rho).unwrap();
                    let w = v1 * dv2 - v2 * dv1;
                    assert!((w - 1.0).abs() < 1e-7, "m={m}, t={t}, rho={rho}: W={w}");
                }
            }
        }
    }

    #[test]
    fn symbol_satisfies_mode_ode_by_second_differences() {
        let m = 1.0;
        let rho = 2.0;
        let h = 1e-4;
        for &t in &[0.8, 1.6, 2.9] {
            let vm = symbol_v(m, t - h, rho).unwrap().0.re;
            let v0 = symbol_v(m, t, rho).unwrap().0.re;
            let vp = symbol_v(m, t + h, rho).unwrap().0.re;
            let ypp = (vp - 2.0 * v0 + vm) / (h * h);
            let residual = ypp + t.powf(m) * rho * rho * v0;
            assert!(residual.abs() < 1e-7 * (1.0 + rho * rho), "t={t}: {residual}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (m, t, rho) = (2.0, 1.7, 1.3);
        let h = 1e-5;
        let ((_, dv1), (_, dv2)) = symbol_v_with_dt(m, t, rho).unwrap();
        let (a1, a2) = symbol_v(m, t - h, rho).unwrap();
        let (b1, b2) = symbol_v(m, t + h, rho).unwrap();
        assert!(((b1.re - a1.re) / (2.0 * h) - dv1).abs() < 1e-6);
        assert!(((b2.re - a2.re) / (2.0 * h) - dv2).abs() < 1e-6);
    }
}
