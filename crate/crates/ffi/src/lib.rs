//! C ABI for the exponent calculus, regime classifier, parameter transforms,
//! and admissibility selection.
//!
//! Conventions: every fallible function returns a [`TlStatus`] code and
//! writes results through out-pointers; passing a null out-pointer yields
//! `TlStatusNullPointer`. The admissibility result is an opaque handle with
//! accessor functions and an explicit destructor. All functions are
//! thread-safe (the underlying computations are pure).

use std::os::raw::c_char;

use tricomi_lab::admissibility::{self, ConstraintKind, NuBranch};
use tricomi_lab::exponents::{self, ModelParams, Q0Hypothesis, RegimeLabel};
use tricomi_lab::transforms;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TlStatus {
    TlStatusOk = 0,
    /// Parameters outside the documented domain.
    TlStatusDomain = 1,
    TlStatusNullPointer = 2,
    /// Root bracketing failed.
    TlStatusBracket = 3,
    /// Constraint system infeasible for the requested substitution.
    TlStatusInfeasible = 4,
    /// Index out of range.
    TlStatusRange = 5,
}

use TlStatus::*;

/// Active branch of a max-of-two critical exponent.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TlCritBranch {
    TlBranchStrauss = 0,
    TlBranchFujita = 1,
    TlBranchP1 = 2,
    TlBranchP2 = 3,
}

/// Regime labels of the 2-D classifier.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TlRegime {
    TlRegimeBlowupKnown = 0,
    TlRegimeGlobalThm11i = 1,
    TlRegimeGlobalThm11ii = 2,
    TlRegimeGlobalThm12 = 3,
    TlRegimeGlobalForthcoming = 4,
    TlRegimeMuEqualsOneOpen = 5,
    TlRegimeUnclassified = 6,
}

/// ν-selection branch of the admissibility rule.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TlNuBranch {
    TlNuEqualsP = 0,
    TlNuPlusOneThird = 1,
    TlNuCappedAtQBound = 2,
}

/// Hypothesis flag of the inhomogeneous endpoint exponent.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TlQ0Hypothesis {
    TlQ0GlobalInTime = 0,
    TlQ0FiniteHorizon = 1,
    TlQ0Neither = 2,
}

fn write_out<T>(out: *mut T, value: T) -> TlStatus {
    if out.is_null() {
        return TlStatusNullPointer;
    }
    unsafe { *out = value };
    TlStatusOk
}

/// Library version as a static, NUL-terminated string.
#[no_mangle]
pub extern "C" fn tl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Strauss exponent `p_s(z)`, the positive root of `(z-1)p² - (z+1)p - 2`.
#[no_mangle]
pub extern "C" fn tl_strauss_exponent(z: f64, out: *mut f64) -> TlStatus {
    match exponents::strauss_exponent(z) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Fujita exponent `p_f(n) = 1 + 2/n`.
#[no_mangle]
pub extern "C" fn tl_fujita_exponent(n: u32, out: *mut f64) -> TlStatus {
    match exponents::fujita_exponent(n) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Strauss/Fujita crossover damping `μ̄(n)`.
#[no_mangle]
pub extern "C" fn tl_mu_bar(n: u32, out: *mut f64) -> TlStatus {
    match exponents::mu_bar(n) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

fn branch_code(b: exponents::CritBranch) -> TlCritBranch {
    match b {
        exponents::CritBranch::Strauss => TlCritBranch::TlBranchStrauss,
        exponents::CritBranch::Fujita => TlCritBranch::TlBranchFujita,
        exponents::CritBranch::P1 => TlCritBranch::TlBranchP1,
        exponents::CritBranch::P2 => TlCritBranch::TlBranchP2,
    }
}

/// `p_crit(n, μ) = max{p_s(n+μ), p_f(n)}` with the active branch.
#[no_mangle]
pub extern "C" fn tl_p_crit_damped(
    n: u32,
    mu: f64,
    out_value: *mut f64,
    out_branch: *mut TlCritBranch,
) -> TlStatus {
    match exponents::p_crit_damped(n, mu) {
        Ok(c) => {
            if write_out(out_branch, branch_code(c.branch)) != TlStatusOk {
                return TlStatusNullPointer;
            }
            write_out(out_value, c.value)
        }
        Err(_) => TlStatusDomain,
    }
}

/// `p_crit(2, m, α) = max{p₁, p₂}` with the active branch.
#[no_mangle]
pub extern "C" fn tl_p_crit_tricomi(
    m: f64,
    alpha: f64,
    out_value: *mut f64,
    out_branch: *mut TlCritBranch,
) -> TlStatus {
    match exponents::p_crit_tricomi(m, alpha) {
        Ok(c) => {
            if write_out(out_branch, branch_code(c.branch)) != TlStatusOk {
                return TlStatusNullPointer;
            }
            write_out(out_value, c.value)
        }
        Err(_) => TlStatusDomain,
    }
}

/// Conformal exponent `p_conf(2, m, α) = (m + 2α + 5)/(m + 1)`.
#[no_mangle]
pub extern "C" fn tl_p_conf_tricomi(m: f64, alpha: f64, out: *mut f64) -> TlStatus {
    match exponents::p_conf_tricomi(m, alpha) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Conformal exponent `p_conf(2, μ) = (μ+5)/(μ+1)`, `μ ∈ (0,1)∪(1,2)`.
#[no_mangle]
pub extern "C" fn tl_p_conf_damped(mu: f64, out: *mut f64) -> TlStatus {
    match exponents::p_conf_damped(mu) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Endpoint exponent `q₀ = 2(m+3+α)/(m+1)` and its hypothesis flag.
#[no_mangle]
pub extern "C" fn tl_q0_endpoint(
    m: f64,
    alpha: f64,
    out_q0: *mut f64,
    out_hypothesis: *mut TlQ0Hypothesis,
) -> TlStatus {
    match exponents::q0_endpoint(m, alpha) {
        Ok((q0, flag)) => {
            let f = match flag {
                Q0Hypothesis::GlobalInTime => TlQ0Hypothesis::TlQ0GlobalInTime,
                Q0Hypothesis::FiniteHorizon => TlQ0Hypothesis::TlQ0FiniteHorizon,
                Q0Hypothesis::Neither => TlQ0Hypothesis::TlQ0Neither,
            };
            if write_out(out_hypothesis, f) != TlStatusOk {
                return TlStatusNullPointer;
            }
            write_out(out_q0, q0)
        }
        Err(_) => TlStatusDomain,
    }
}

/// Homogeneous endpoint `q̃₀ = (2m+6)/(m+1-2β)` for `0 < β <= m/4`.
#[no_mangle]
pub extern "C" fn tl_q_tilde0(m: f64, beta: f64, out: *mut f64) -> TlStatus {
    match exponents::q_tilde0(m, beta) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Weight-exponent window: `gamma_lo < γ < gamma_hi`, δ bound at the γ
/// midpoint, and an emptiness flag (nonempty iff `p > p₂(m, α)`).
#[no_mangle]
pub extern "C" fn tl_gamma_delta_ranges(
    m: f64,
    alpha: f64,
    p: f64,
    out_gamma_lo: *mut f64,
    out_gamma_hi: *mut f64,
    out_delta_hi: *mut f64,
    out_empty: *mut i32,
) -> TlStatus {
    match exponents::gamma_delta_ranges(m, alpha, p) {
        Ok(r) => {
            if out_gamma_lo.is_null()
                || out_gamma_hi.is_null()
                || out_delta_hi.is_null()
                || out_empty.is_null()
            {
                return TlStatusNullPointer;
            }
            unsafe {
                *out_gamma_lo = r.gamma_lo;
                *out_gamma_hi = r.gamma_hi;
                *out_delta_hi = r.delta_hi;
                *out_empty = r.empty as i32;
            }
            TlStatusOk
        }
        Err(_) => TlStatusDomain,
    }
}

/// Threshold constants recovered by root finding: μ₁, m₁, and the
/// `p₁(m) = m+2` crossover.
#[no_mangle]
pub extern "C" fn tl_threshold_constants(
    out_mu1: *mut f64,
    out_m1: *mut f64,
    out_m_p1_crossover: *mut f64,
) -> TlStatus {
    if out_mu1.is_null() || out_m1.is_null() || out_m_p1_crossover.is_null() {
        return TlStatusNullPointer;
    }
    let c = exponents::threshold_constants();
    unsafe {
        *out_mu1 = c.mu1;
        *out_m1 = c.m1;
        *out_m_p1_crossover = c.m_p1_crossover;
    }
    TlStatusOk
}

/// Classify `(n, μ, p)`; `out_nu_choice` is NaN when the regime carries none.
#[no_mangle]
pub extern "C" fn tl_classify_damped(
    n: u32,
    mu: f64,
    p: f64,
    out_regime: *mut TlRegime,
    out_nu_choice: *mut f64,
) -> TlStatus {
    let Ok(params) = ModelParams::damped(n, mu, p) else {
        return TlStatusDomain;
    };
    match exponents::classify_regime(&params) {
        Ok(r) => {
            let label = match r.label {
                RegimeLabel::BlowupKnown => TlRegime::TlRegimeBlowupKnown,
                RegimeLabel::GlobalThm11i => TlRegime::TlRegimeGlobalThm11i,
                RegimeLabel::GlobalThm11ii => TlRegime::TlRegimeGlobalThm11ii,
                RegimeLabel::GlobalThm12 => TlRegime::TlRegimeGlobalThm12,
                RegimeLabel::GlobalForthcoming => TlRegime::TlRegimeGlobalForthcoming,
                RegimeLabel::MuEqualsOneOpen => TlRegime::TlRegimeMuEqualsOneOpen,
                RegimeLabel::Unclassified => TlRegime::TlRegimeUnclassified,
            };
            if write_out(out_regime, label) != TlStatusOk {
                return TlStatusNullPointer;
            }
            write_out(out_nu_choice, r.nu_choice.unwrap_or(f64::NAN))
        }
        Err(_) => TlStatusDomain,
    }
}

/// `(μ, p) -> (m, α, amplitude power)` for `μ ∈ (0,1)∪(1,2)`.
#[no_mangle]
pub extern "C" fn tl_damped_to_tricomi(
    mu: f64,
    p: f64,
    out_m: *mut f64,
    out_alpha: *mut f64,
    out_amplitude_power: *mut f64,
) -> TlStatus {
    match transforms::damped_to_tricomi(mu, p) {
        Ok(map) => {
            if out_m.is_null() || out_alpha.is_null() || out_amplitude_power.is_null() {
                return TlStatusNullPointer;
            }
            unsafe {
                *out_m = map.m;
                *out_alpha = map.alpha;
                *out_amplitude_power = map.amplitude_power;
            }
            TlStatusOk
        }
        Err(_) => TlStatusDomain,
    }
}

/// `(m, α, p) -> (μ, amplitude power, residual forcing power)`.
#[no_mangle]
pub extern "C" fn tl_tricomi_to_damped(
    m: f64,
    alpha: f64,
    p: f64,
    out_mu: *mut f64,
    out_amplitude_power: *mut f64,
    out_residual_forcing_power: *mut f64,
) -> TlStatus {
    match transforms::tricomi_to_damped(m, alpha, p) {
        Ok(map) => {
            if out_mu.is_null()
                || out_amplitude_power.is_null()
                || out_residual_forcing_power.is_null()
            {
                return TlStatusNullPointer;
            }
            unsafe {
                *out_mu = map.mu;
                *out_amplitude_power = map.amplitude_power;
                *out_residual_forcing_power = map.residual_forcing_power;
            }
            TlStatusOk
        }
        Err(_) => TlStatusDomain,
    }
}

/// Degenerate characteristic `φ_m(t)`.
#[no_mangle]
pub extern "C" fn tl_phi_m(m: f64, t: f64) -> f64 {
    transforms::phi_m(m, t)
}

/// Damped-side light-cone radius `ψ_μ(t)` (NaN at μ = 1).
#[no_mangle]
pub extern "C" fn tl_psi_mu(mu: f64, t: f64) -> f64 {
    transforms::psi_mu(mu, t).unwrap_or(f64::NAN)
}

/// Decay power `θ(μ, p)` (domain error outside `(0,1)∪(1,2)`).
#[no_mangle]
pub extern "C" fn tl_theta_exponent(mu: f64, p: f64, out: *mut f64) -> TlStatus {
    match transforms::theta_exponent(mu, p) {
        Ok(v) => write_out(out, v),
        Err(_) => TlStatusDomain,
    }
}

/// Opaque admissibility result: a selected or checked `(q, ν)` pair with the
/// residuals of every constraint.
pub struct TlAdmissiblePair {
    pair: admissibility::AdmissiblePair,
    branch: Option<NuBranch>,
}

/// Run the ν-selection rule at `(m, p)` and verify the full restriction
/// system. On success the caller owns the returned handle and must release
/// it with `tl_admissible_free`.
#[no_mangle]
pub extern "C" fn tl_admissible_select(
    m: f64,
    p: f64,
    out: *mut *mut TlAdmissiblePair,
) -> TlStatus {
    if out.is_null() {
        return TlStatusNullPointer;
    }
    unsafe { *out = std::ptr::null_mut() };
    match admissibility::select_pair(m, p) {
        Ok((pair, branch)) => {
            let boxed = Box::new(TlAdmissiblePair {
                pair,
                branch: Some(branch),
            });
            unsafe { *out = Box::into_raw(boxed) };
            TlStatusOk
        }
        Err(admissibility::AdmissibilityError::InfeasibleQ(_)) => TlStatusInfeasible,
        Err(_) => TlStatusDomain,
    }
}

/// Evaluate the restriction system on an explicit `(q, ν)` pair.
#[no_mangle]
pub extern "C" fn tl_admissible_check(
    m: f64,
    p: f64,
    q: f64,
    nu: f64,
    out: *mut *mut TlAdmissiblePair,
) -> TlStatus {
    if out.is_null() {
        return TlStatusNullPointer;
    }
    unsafe { *out = std::ptr::null_mut() };
    match admissibility::check_ugly_system(m, p, q, nu) {
        Ok(pair) => {
            let boxed = Box::new(TlAdmissiblePair { pair, branch: None });
            unsafe { *out = Box::into_raw(boxed) };
            TlStatusOk
        }
        Err(_) => TlStatusDomain,
    }
}

macro_rules! handle_ref {
    ($h:expr) => {
        match unsafe { $h.as_ref() } {
            Some(r) => r,
            None => return TlStatusNullPointer,
        }
    };
}

/// q of the pair.
#[no_mangle]
pub extern "C" fn tl_admissible_q(h: *const TlAdmissiblePair, out: *mut f64) -> TlStatus {
    let r = handle_ref!(h);
    write_out(out, r.pair.q)
}

/// ν of the pair.
#[no_mangle]
pub extern "C" fn tl_admissible_nu(h: *const TlAdmissiblePair, out: *mut f64) -> TlStatus {
    let r = handle_ref!(h);
    write_out(out, r.pair.nu)
}

/// 1 when every constraint is satisfied within tolerance.
#[no_mangle]
pub extern "C" fn tl_admissible_feasible(h: *const TlAdmissiblePair, out: *mut i32) -> TlStatus {
    let r = handle_ref!(h);
    write_out(out, r.pair.feasible as i32)
}

/// Selection branch; `TlStatusRange` for handles from an explicit check.
#[no_mangle]
pub extern "C" fn tl_admissible_branch(
    h: *const TlAdmissiblePair,
    out: *mut TlNuBranch,
) -> TlStatus {
    let r = handle_ref!(h);
    match r.branch {
        Some(NuBranch::EqualsP) => write_out(out, TlNuBranch::TlNuEqualsP),
        Some(NuBranch::PlusOneThird) => write_out(out, TlNuBranch::TlNuPlusOneThird),
        Some(NuBranch::CappedAtQBound) => write_out(out, TlNuBranch::TlNuCappedAtQBound),
        None => TlStatusRange,
    }
}

/// Number of recorded constraint residuals.
#[no_mangle]
pub extern "C" fn tl_admissible_residual_count(
    h: *const TlAdmissiblePair,
    out: *mut usize,
) -> TlStatus {
    let r = handle_ref!(h);
    write_out(out, r.pair.residuals.len())
}

/// Residual value by index; `kind` is 0 equality, 1 inequality slack,
/// 2 strict slack.
#[no_mangle]
pub extern "C" fn tl_admissible_residual(
    h: *const TlAdmissiblePair,
    index: usize,
    out_value: *mut f64,
    out_kind: *mut i32,
) -> TlStatus {
    let r = handle_ref!(h);
    let Some(res) = r.pair.residuals.get(index) else {
        return TlStatusRange;
    };
    let kind = match res.kind {
        ConstraintKind::Equality => 0,
        ConstraintKind::InequalitySlack => 1,
        ConstraintKind::StrictSlack => 2,
    };
    if write_out(out_kind, kind) != TlStatusOk {
        return TlStatusNullPointer;
    }
    write_out(out_value, res.value)
}

/// Static name of the residual at `index` (NUL-terminated, borrowed).
#[no_mangle]
pub extern "C" fn tl_admissible_residual_name(
    h: *const TlAdmissiblePair,
    index: usize,
) -> *const c_char {
    let Some(r) = (unsafe { h.as_ref() }) else {
        return std::ptr::null();
    };
    let Some(res) = r.pair.residuals.get(index) else {
        return std::ptr::null();
    };
    // Names are 'static literals in the core crate; map to NUL-terminated
    // statics for C consumers.
    match res.name {
        "q_lower" => "q_lower\0".as_ptr() as *const c_char,
        "q_upper" => "q_upper\0".as_ptr() as *const c_char,
        "nu_lower" => "nu_lower\0".as_ptr() as *const c_char,
        "nu_upper" => "nu_upper\0".as_ptr() as *const c_char,
        "nu_positivity" => "nu_positivity\0".as_ptr() as *const c_char,
        "scaling_equality" => "scaling_equality\0".as_ptr() as *const c_char,
        "upper_halfline" => "upper_halfline\0".as_ptr() as *const c_char,
        "lower_halfline" => "lower_halfline\0".as_ptr() as *const c_char,
        _ => "unknown\0".as_ptr() as *const c_char,
    }
}

/// Release a handle from `tl_admissible_select`/`tl_admissible_check`.
///
/// # Safety
/// `h` must be a pointer returned by those constructors, not yet freed;
/// null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn tl_admissible_free(h: *mut TlAdmissiblePair) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_functions_roundtrip() {
        let mut v = 0.0;
        assert_eq!(tl_strauss_exponent(3.0, &mut v), TlStatusOk);
        assert!((v - (1.0 + std::f64::consts::SQRT_2)).abs() < 1e-12);
        assert_eq!(tl_strauss_exponent(1.0, &mut v), TlStatusDomain);
        assert_eq!(
            tl_strauss_exponent(3.0, std::ptr::null_mut()),
            TlStatusNullPointer
        );

        assert_eq!(tl_p_conf_tricomi(0.0, 0.0, &mut v), TlStatusOk);
        assert_eq!(v, 5.0);
        assert_eq!(tl_p_conf_damped(1.0, &mut v), TlStatusDomain);

        let (mut mu1, mut m1, mut cross) = (0.0, 0.0, 0.0);
        assert_eq!(
            tl_threshold_constants(&mut mu1, &mut m1, &mut cross),
            TlStatusOk
        );
        assert!((mu1 - 1.977).abs() < 1e-3);
        assert!((m1 - 0.048).abs() < 1e-3);
        assert!((cross - 0.092).abs() < 2e-3);
    }

    #[test]
    fn classify_and_transform() {
        let mut regime = TlRegime::TlRegimeUnclassified;
        let mut nu = 0.0;
        assert_eq!(
            tl_classify_damped(2, 0.5, 3.0, &mut regime, &mut nu),
            TlStatusOk
        );
        assert_eq!(regime, TlRegime::TlRegimeGlobalThm11i);
        assert!(nu.is_nan());

        let (mut m, mut alpha, mut amp) = (0.0, 0.0, 0.0);
        assert_eq!(
            tl_damped_to_tricomi(0.5, 3.0, &mut m, &mut alpha, &mut amp),
            TlStatusOk
        );
        assert_eq!((m, alpha, amp), (2.0, 2.0, 0.0));
        assert!((tl_phi_m(2.0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn admissible_handle_lifecycle() {
        let mut h: *mut TlAdmissiblePair = std::ptr::null_mut();
        assert_eq!(tl_admissible_select(0.2, 2.2, &mut h), TlStatusOk);
        let mut q = 0.0;
        let mut nu = 0.0;
        let mut feasible = 0;
        let mut branch = TlNuBranch::TlNuEqualsP;
        assert_eq!(tl_admissible_q(h, &mut q), TlStatusOk);
        assert_eq!(tl_admissible_nu(h, &mut nu), TlStatusOk);
        assert_eq!(tl_admissible_feasible(h, &mut feasible), TlStatusOk);
        assert_eq!(tl_admissible_branch(h, &mut branch), TlStatusOk);
        assert!((q - 3.6047430830039526).abs() < 1e-9);
        assert!((nu - (2.2 + 1.0 / 3.0)).abs() < 1e-12);
        assert_eq!(feasible, 1);
        assert_eq!(branch, TlNuBranch::TlNuPlusOneThird);

        let mut count = 0usize;
        assert_eq!(tl_admissible_residual_count(h, &mut count), TlStatusOk);
        assert_eq!(count, 8);
        let mut value = 0.0;
        let mut kind = -1;
        let mut eq_index = None;
        for i in 0..count {
            let name = tl_admissible_residual_name(h, i);
            let s = unsafe { std::ffi::CStr::from_ptr(name) }.to_str().unwrap();
            if s == "scaling_equality" {
                eq_index = Some(i);
            }
        }
        let i = eq_index.expect("scaling equality present");
        assert_eq!(tl_admissible_residual(h, i, &mut value, &mut kind), TlStatusOk);
        assert_eq!(kind, 0);
        assert!(value.abs() < 1e-12);
        assert_eq!(
            tl_admissible_residual(h, 99, &mut value, &mut kind),
            TlStatusRange
        );
        unsafe { tl_admissible_free(h) };
        unsafe { tl_admissible_free(std::ptr::null_mut()) };

        // Domain error for out-of-rectangle parameters.
        let mut h2: *mut TlAdmissiblePair = std::ptr::null_mut();
        assert_eq!(tl_admissible_select(0.9, 2.5, &mut h2), TlStatusDomain);
        assert!(h2.is_null());
    }
}
