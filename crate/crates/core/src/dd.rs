//! Double-double arithmetic.
//!
//! A value is the unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`, giving
//! about 106 significant bits. This is the working type for window tables: it
//! is fast enough to evaluate ~10^6 log-weights and accurate enough that the
//! difference of two log-weights of size 10^9 keeps ~14 significant digits.
//!
//! The algorithms follow the classic error-free transformations (Dekker,
//! Knuth) and the QD library's exp/log/sin reductions.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let e = b - (s - a);
    (s, e)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let e = a.mul_add(b, -p);
    (p, e)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };
    pub const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.224_646_799_147_353_2e-16,
    };
    pub const FRAC_PI_2: Dd = Dd {
        hi: std::f64::consts::FRAC_PI_2,
        lo: 6.123_233_995_736_766e-17,
    };
    pub const LN_2: Dd = Dd {
        hi: std::f64::consts::LN_2,
        lo: 2.319_046_813_846_299_6e-17,
    };

    /// Builds a value from two components, renormalizing them.
    pub fn new(hi: f64, lo: f64) -> Self {
        let (hi, lo) = two_sum(hi, lo);
        Dd { hi, lo }
    }

    pub const fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact for every `u64`.
    pub fn from_u64(n: u64) -> Self {
        let hi = n as f64;
        let lo = (n as i128 - hi as i128) as f64;
        Dd::new(hi, lo)
    }

    pub fn from_i64(n: i64) -> Self {
        let d = Dd::from_u64(n.unsigned_abs());
        if n < 0 {
            -d
        } else {
            d
        }
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    /// Multiplication by a power of two, exact.
    pub fn scale_pow2(self, k: i32) -> Self {
        let s = 2f64.powi(k);
        Dd {
            hi: self.hi * s,
            lo: self.lo * s,
        }
    }

    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let e = e + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self - Dd::from_f64(q1).mul_f64(b);
        let q2 = r.hi / b;
        let r = r - Dd::from_f64(q2).mul_f64(b);
        let q3 = r.hi / b;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }

    pub fn sqr(self) -> Self {
        self * self
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let x = 1.0 / self.hi.sqrt();
        let ax = self.hi * x;
        let corr = (self - Dd::from_f64(ax).sqr()).hi * (x * 0.5);
        let (hi, lo) = two_sum(ax, corr);
        Dd { hi, lo }
    }

    pub fn exp(self) -> Self {
        const LN2_HI_INV: f64 = std::f64::consts::LOG2_E;
        const REDUCE: i32 = 9;
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        if self.hi == 0.0 {
            return Dd::ONE;
        }
        let k = (self.hi * LN2_HI_INV + 0.5).floor();
        let r = (self - Dd::LN_2.mul_f64(k)).scale_pow2(-REDUCE);

        // exp(r) - 1 by Taylor; |r| <= ln2 / 2^10, so 11 terms reach 2^-110.
        let mut term = r;
        let mut sum = r;
        for i in 2..=12 {
            term = (term * r).div_f64(i as f64);
            sum = sum + term;
            if term.hi.abs() < 1e-36 {
                break;
            }
        }
        // (1 + s)^2 - 1 = 2s + s^2, applied REDUCE times.
        for _ in 0..REDUCE {
            sum = sum.scale_pow2(1) + sum.sqr();
        }
        (sum + Dd::ONE).scale_pow2(k as i32)
    }

    /// Natural logarithm by one Newton step on `exp`, doubling the f64 guess.
    pub fn ln(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::from_f64(f64::NAN);
        }
        if self == Dd::ONE {
            return Dd::ZERO;
        }
        let x = Dd::from_f64(self.hi.ln());
        x + self * (-x).exp() - Dd::ONE
    }

    pub fn log2(self) -> Self {
        self.ln() / Dd::LN_2
    }

    /// `(sin x, cos x)` for moderate arguments (|x| well below 2^40).
    pub fn sin_cos(self) -> (Self, Self) {
        if self.hi == 0.0 {
            return (Dd::ZERO, Dd::ONE);
        }
        let j = (self.hi / Dd::FRAC_PI_2.hi).round();
        let t = self - Dd::FRAC_PI_2.mul_f64(j);
        let (s, c) = sin_cos_taylor(t);
        match (j as i64).rem_euclid(4) {
            0 => (s, c),
            1 => (c, -s),
            2 => (-s, -c),
            _ => (-c, s),
        }
    }

    pub fn sin(self) -> Self {
        self.sin_cos().0
    }
}

/// Taylor series on the reduced argument |t| <= pi/4.
fn sin_cos_taylor(t: Dd) -> (Dd, Dd) {
    let t2 = t.sqr();
    let mut term = t;
    let mut sin = t;
    let mut i = 1.0;
    loop {
        term = -(term * t2).div_f64((i + 1.0) * (i + 2.0));
        i += 2.0;
        sin = sin + term;
        if term.hi.abs() < 1e-34 * sin.hi.abs().max(1e-300) || i > 60.0 {
            break;
        }
    }
    // cos from sin keeps one series; sqrt(1 - s^2) is well conditioned for |t| <= pi/4.
    let cos = (Dd::ONE - sin.sqr()).sqrt();
    (sin, cos)
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let s2 = s2 + t1;
        let (s1, s2) = quick_two_sum(s1, s2);
        let s2 = s2 + t2;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e} + {:e}", self.hi, self.lo)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: f64, rel: f64) -> bool {
        ((a.to_f64() - b) / b).abs() <= rel
    }

    #[test]
    fn from_u64_is_exact() {
        let n = (1u64 << 60) + 12345;
        let d = Dd::from_u64(n);
        assert_eq!(d.hi as i128 + d.lo as i128, n as i128);
    }

    #[test]
    fn exp_ln_roundtrip() {
        for &x in &[1e-3, 0.5, 1.0, 2.0, 10.0, 123.456, 1e6] {
            let d = Dd::from_f64(x);
            let back = d.ln().exp();
            let err = ((back - d) / d).abs().to_f64();
            assert!(err < 1e-30, "x={x} err={err:e}");
        }
    }

    #[test]
    fn constants_match_libm() {
        assert!(close(Dd::from_f64(1.0).exp(), std::f64::consts::E, 1e-16));
        assert!(close(Dd::from_f64(2.0).ln(), std::f64::consts::LN_2, 1e-16));
        // ln 2 as a double-double must agree with its own table constant
        let err = (Dd::from_f64(2.0).ln() - Dd::LN_2).abs().to_f64();
        assert!(err < 1e-31, "{err:e}");
    }

    #[test]
    fn sin_of_quarter_turns() {
        for k in 0..12 {
            let (s, c) = Dd::FRAC_PI_2.mul_f64(k as f64).sin_cos();
            let (es, ec) = [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)][k % 4];
            assert!((s.to_f64() - es).abs() < 1e-30);
            assert!((c.to_f64() - ec).abs() < 1e-30);
        }
    }

    #[test]
    fn pythagoras() {
        for &x in &[0.1, 1.0, 2.5, 5.81, 9.04] {
            let (s, c) = Dd::from_f64(x).sin_cos();
            let one = s.sqr() + c.sqr();
            assert!((one - Dd::ONE).abs().to_f64() < 1e-30, "x={x}");
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let d = Dd::from_u64(2_147_483_647);
        let r = d.sqrt();
        assert!(((r.sqr() - d) / d).abs().to_f64() < 1e-31);
    }
}
