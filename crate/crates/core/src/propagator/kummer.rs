//! Confluent hypergeometric machinery for the linear Tricomi multipliers.
//!
//! `kummer_phi` sums the defining power series in compensated (double-double)
//! arithmetic; on the imaginary axis the partial sums grow like `e^{|z|}`
//! while the value stays `O(1)`, so the working precision has to carry the
//! cancelled digits. The series is the contract up to `|z| = 30`; beyond
//! that a pointwise value is refused and only magnitude-bound checks remain.
//!
//! The multiplier pair `V₁, V₂` comes with parameters satisfying `a = c/2`
//! exactly, where `e^{-z/2} Φ(c/2, c; z) = ₀F₁(; (c+1)/2; z²/16)` (the
//! classical quadratic transformation). That real, cancellation-tame series
//! extends the evaluation across the whole symbol regime `φ_m(t)·ρ <= 30`.

use num_complex::Complex64;

use crate::dd::{Dd, DdComplex};

/// Largest `|z|` at which the raw Kummer series is served pointwise.
pub const SERIES_REGIME_MAX_ABS_Z: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum KummerError {
    #[error("parameter c = {0} is a non-positive integer; series undefined")]
    DegenerateC(f64),
    #[error("|z| = {0} exceeds the series regime |z| <= 30; only magnitude bounds are available there")]
    OutsideSeriesRegime(f64),
    #[error("series failed to converge within {0} terms")]
    NoConvergence(usize),
}

fn c_is_nonpositive_integer(c: f64) -> bool {
    c <= 0.0 && (c - c.round()).abs() < 1e-12
}

/// Kummer's confluent hypergeometric function `Φ(a, c; z)` by its power
/// series `Σ (a)_k z^k / ((c)_k k!)`, summed in double-double arithmetic.
/// Relative accuracy ~1e-9 or better throughout `|z| <= 30`.
pub fn kummer_phi(a: f64, c: f64, z: Complex64) -> Result<Complex64, KummerError> {
    if c_is_nonpositive_integer(c) {
        return Err(KummerError::DegenerateC(c));
    }
    let abs_z = z.norm();
    if abs_z > SERIES_REGIME_MAX_ABS_Z {
        return Err(KummerError::OutsideSeriesRegime(abs_z));
    }
    let zdd = DdComplex::new(z.re, z.im);
    let add = Dd::from(a);
    let cdd = Dd::from(c);
    let mut term = DdComplex::ONE;
    let mut sum = DdComplex::ONE;
    let max_terms = 600;
    for k in 0..max_terms {
        let kf = Dd::from(k as f64);
        // term_{k+1} = term_k * (a+k)/(c+k) * z/(k+1). The parameter shifts
        // a+k, c+k are carried in double-double: rounding them to f64 each
        // step perturbs the coefficients by ~1e-16, which the e^{|z|}
        // cancellation blows up to ~1e-16·e^{|z|} in the sum.
        term = term
            .mul(zdd)
            .mul_real(add.add(kf))
            .div_real(cdd.add(kf))
            .div_f64(k as f64 + 1.0);
        sum = sum.add(term);
        if k as f64 > abs_z && term.norm_f64() <= 1e-26 * (1.0 + sum.norm_f64()) {
            return Ok(Complex64::new(sum.re.to_f64(), sum.im.to_f64()));
        }
    }
    Err(KummerError::NoConvergence(max_terms))
}

/// `₀F₁(; b; x)` summed in double-double arithmetic (real argument).
pub fn hyp0f1(b: f64, x: f64) -> Result<f64, KummerError> {
    if c_is_nonpositive_integer(b) {
        return Err(KummerError::DegenerateC(b));
    }
    let xdd = Dd::from(x);
    let bdd = Dd::from(b);
    let mut term = Dd::ONE;
    let mut sum = Dd::ONE;
    let max_terms = 600;
    for k in 0..max_terms {
        let kf = k as f64;
        term = term.mul(xdd).div(bdd.add(Dd::from(kf))).div_f64(kf + 1.0);
        sum = sum.add(term);
        // Terms peak near k ~ 2 sqrt(|x|) for this series.
        if kf * kf > 4.0 * x.abs() && term.abs() <= 1e-28 * (1.0 + sum.abs()) {
            return Ok(sum.to_f64());
        }
    }
    Err(KummerError::NoConvergence(max_terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_at_zero_is_one() {
        for (a, c) in [(0.25, 0.5), (1.0, 1.0), (0.125, 0.25), (-0.3, 0.7)] {
            let v = kummer_phi(a, c, Complex64::new(0.0, 0.0)).unwrap();
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn phi_1_1_is_exp() {
        // Φ(1, 1; z) = e^z; at z = 2i the modulus is 1 and the argument 2.
        let z = Complex64::new(0.0, 2.0);
        let v = kummer_phi(1.0, 1.0, z).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-13);
        assert!((v.arg() - 2.0).abs() < 1e-13);
        // And a harder one at the regime edge.
        let z = Complex64::new(0.0, 30.0);
        let v = kummer_phi(1.0, 1.0, z).unwrap();
        assert!((v - z.exp()).norm() < 1e-12);
    }

    #[test]
    fn degenerate_c_rejected() {
        assert!(matches!(
            kummer_phi(0.5, 0.0, Complex64::new(1.0, 0.0)),
            Err(KummerError::DegenerateC(_))
        ));
        assert!(matches!(
            kummer_phi(0.5, -2.0, Complex64::new(1.0, 0.0)),
            Err(KummerError::DegenerateC(_))
        ));
    }

    #[test]
    fn regime_gate() {
        assert!(matches!(
            kummer_phi(0.25, 0.5, Complex64::new(0.0, 30.5)),
            Err(KummerError::OutsideSeriesRegime(_))
        ));
    }

    #[test]
    fn quadratic_transformation_identity() {
        // e^{-z/2} Φ(c/2, c; z) = 0F1(; (c+1)/2; z²/16) for z = 2iX.
        for m in [0.5, 1.0, 2.0] {
            let c = m / (m + 2.0);
            for x in [0.3, 2.0, 7.5, 14.9] {
                let z = Complex64::new(0.0, 2.0 * x);
                let lhs = (-z / 2.0).exp() * kummer_phi(c / 2.0, c, z).unwrap();
                let rhs = hyp0f1((c + 1.0) / 2.0, -x * x / 4.0).unwrap();
                assert!(
                    (lhs - Complex64::new(rhs, 0.0)).norm() < 1e-11 * (1.0 + rhs.abs()),
                    "m={m}, x={x}: lhs={lhs}, rhs={rhs}"
                );
            }
        }
    }

    #[test]
    fn hyp0f1_matches_cosh_special_case() {
        // 0F1(; 1/2; x²/4) = cosh(x).
        for x in [0.5f64, 2.0, 10.0] {
            let v = hyp0f1(0.5, x * x / 4.0).unwrap();
            assert!((v - x.cosh()).abs() < 1e-12 * x.cosh());
        }
        // 0F1(; 1/2; -x²/4) = cos(x): heavy cancellation at x = 30.
        let v = hyp0f1(0.5, -225.0).unwrap();
        assert!((v - 30f64.cos()).abs() < 1e-13);
    }
}
