//! Double-double arithmetic for series summation with heavy cancellation.
//!
//! A value is represented as an unevaluated sum `hi + lo` of two `f64`s with
//! `|lo| <= ulp(hi)/2`, giving roughly 31 significant decimal digits. Only the
//! operations the Kummer/Bessel-type series need are implemented. Algorithms
//! are the classical error-free transformations (Dekker, Knuth); products use
//! `f64::mul_add` so the two-product is exact.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn add(self, other: Dd) -> Dd {
        // Accurate (cancellation-safe) double-double addition.
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let e = e + t;
        let (s, e) = quick_two_sum(s, e);
        let e = e + f;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    #[inline]
    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    #[inline]
    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    #[inline]
    pub fn mul(self, other: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, other.hi);
        let p2 = p2 + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    #[inline]
    pub fn mul_f64(self, x: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, x);
        let p2 = p2 + self.lo * x;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    /// Quotient by a plain f64, with one Newton correction step.
    #[inline]
    pub fn div_f64(self, x: f64) -> Dd {
        let q1 = self.hi / x;
        let (p1, p2) = two_prod(q1, x);
        let r = ((self.hi - p1) - p2) + self.lo;
        let q2 = r / x;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo }
    }

    /// Full double-double quotient (three-term long division).
    #[inline]
    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = r.hi / other.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd { hi: s, lo: e }.add(Dd::from(q3))
    }

    #[inline]
    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }
}

/// Complex number with double-double real and imaginary parts.
#[derive(Clone, Copy, Debug)]
pub struct DdComplex {
    pub re: Dd,
    pub im: Dd,
}

impl DdComplex {
    pub const ONE: DdComplex = DdComplex {
        re: Dd::ONE,
        im: Dd::ZERO,
    };

    #[inline]
    pub fn new(re: f64, im: f64) -> DdComplex {
        DdComplex {
            re: Dd::from(re),
            im: Dd::from(im),
        }
    }

    #[inline]
    pub fn add(self, other: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.add(other.re),
            im: self.im.add(other.im),
        }
    }

    #[inline]
    pub fn mul(self, other: DdComplex) -> DdComplex {
        DdComplex {
            re: self.re.mul(other.re).sub(self.im.mul(other.im)),
            im: self.re.mul(other.im).add(self.im.mul(other.re)),
        }
    }

    #[inline]
    pub fn div_f64(self, x: f64) -> DdComplex {
        DdComplex {
            re: self.re.div_f64(x),
            im: self.im.div_f64(x),
        }
    }

    /// Multiply by a real double-double scalar.
    #[inline]
    pub fn mul_real(self, x: Dd) -> DdComplex {
        DdComplex {
            re: self.re.mul(x),
            im: self.im.mul(x),
        }
    }

    /// Divide by a real double-double scalar.
    #[inline]
    pub fn div_real(self, x: Dd) -> DdComplex {
        DdComplex {
            re: self.re.div(x),
            im: self.im.div(x),
        }
    }

    #[inline]
    pub fn norm_f64(self) -> f64 {
        self.re.to_f64().hypot(self.im.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_recovers_cancelled_bits() {
        // 1 + 1e-20 - 1 underflows to 0 in f64 but survives in dd.
        let a = Dd::ONE.add(Dd::from(1e-20));
        let b = a.sub(Dd::ONE);
        assert!((b.to_f64() - 1e-20).abs() < 1e-33);
    }

    #[test]
    fn mul_exactness() {
        let a = Dd::from(1.0 + 2f64.powi(-30));
        let b = a.mul(a);
        let exact = 1.0 + 2f64.powi(-29) + 2f64.powi(-60);
        assert!((b.to_f64() - exact).abs() < 1e-30);
    }

    #[test]
    fn div_roundtrip() {
        let a = Dd::from(std::f64::consts::PI);
        let b = a.div_f64(7.0).mul_f64(7.0);
        assert!((b.to_f64() - std::f64::consts::PI).abs() < 1e-30);
        assert!(b.sub(a).abs() < 1e-30);
    }

    #[test]
    fn exp_series_dd_beats_f64() {
        // Sum exp(30i) by raw series in dd; |result| must equal 1 to ~1e-17.
        let z = DdComplex::new(0.0, 30.0);
        let mut term = DdComplex::ONE;
        let mut sum = DdComplex::ONE;
        for k in 1..300 {
            term = term.mul(z).div_f64(k as f64);
            sum = sum.add(term);
        }
        assert!((sum.norm_f64() - 1.0).abs() < 1e-15);
    }
}
