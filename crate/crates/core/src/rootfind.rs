//! Bracketed scalar root finding: bisection to localize, Newton to polish.

/// Error returned when the requested bracket does not change sign.
#[derive(Debug, thiserror::Error)]
#[error("root not bracketed on [{lo}, {hi}]: f(lo)={flo:e}, f(hi)={fhi:e}")]
pub struct BracketError {
    pub lo: f64,
    pub hi: f64,
    pub flo: f64,
    pub fhi: f64,
}

/// Find the root of `f` in `[lo, hi]`, assuming a single sign change.
///
/// Bisection brings the bracket below `1e-6`, then Newton (with a secant
/// derivative estimate) polishes to machine precision. Returns the root.
pub fn bisect_newton(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
) -> Result<f64, BracketError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(BracketError {
            lo,
            hi,
            flo: fa,
            fhi: fb,
        });
    }
    while b - a > 1e-6 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    // Newton polish with a central-difference slope.
    let mut x = 0.5 * (a + b);
    for _ in 0..40 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        let h = 1e-7 * x.abs().max(1e-3);
        let d = (f(x + h) - f(x - h)) / (2.0 * h);
        if d == 0.0 {
            break;
        }
        let step = fx / d;
        let xn = (x - step).clamp(lo, hi);
        if (xn - x).abs() <= 1e-15 * x.abs().max(1.0) {
            x = xn;
            break;
        }
        x = xn;
    }
    Ok(x)
}

/// Positive root of `a p^2 + b p + c = 0` (largest real root), by the
/// numerically stable quadratic formula.
pub fn quadratic_positive_root(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(a != 0.0);
    let disc = (b * b - 4.0 * a * c).sqrt();
    // q = -(b + sign(b) disc)/2 avoids cancellation in one of the roots.
    let q = -0.5 * (b + b.signum() * disc);
    let r1 = q / a;
    let r2 = c / q;
    r1.max(r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_matches_factored_form() {
        // (p - 3)(p + 2) = p^2 - p - 6
        let r = quadratic_positive_root(1.0, -1.0, -6.0);
        assert!((r - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_root_bracketed() {
        let r = bisect_newton(|x| x * x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn unbracketed_reports_error() {
        let e = bisect_newton(|x| x * x + 1.0, -1.0, 1.0).unwrap_err();
        assert!(e.flo > 0.0 && e.fhi > 0.0);
    }
}
