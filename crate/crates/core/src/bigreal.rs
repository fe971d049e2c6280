//! Extended-range multiprecision reals for log-domain quantities.
//!
//! Log-weights at the witness indices reach ~2^2047, past the `f64` range, and
//! the growth excess is a difference of two such numbers. [`BigReal`] wraps an
//! `astro-float` value and carries its own precision.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, Word};
use num_bigint::BigInt;

use crate::dd::Dd;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> =
        RefCell::new(Consts::new().expect("allocate astro-float constant cache"));
}

fn with_consts<R>(f: impl FnOnce(&mut Consts) -> R) -> R {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// Rounds a working precision up to whole machine words.
fn words(p: usize) -> usize {
    p.max(64).div_ceil(64) * 64
}

#[derive(Debug, Clone)]
pub struct BigReal(BigFloat);

impl BigReal {
    pub fn zero() -> Self {
        BigReal(BigFloat::from_word(0, 64))
    }

    pub fn from_f64(x: f64, p: usize) -> Self {
        BigReal(BigFloat::from_f64(x, words(p).max(64)))
    }

    pub fn from_i64(x: i64, p: usize) -> Self {
        BigReal(BigFloat::from_i64(x, words(p)))
    }

    /// Exact conversion; the precision grows to hold every bit of `n`.
    pub fn from_bigint(n: &BigInt) -> Self {
        let (sign, digits) = n.to_u64_digits();
        if digits.is_empty() {
            return BigReal::zero();
        }
        let m: Vec<Word> = digits.iter().map(|&d| d as Word).collect();
        let s = if sign == num_bigint::Sign::Minus {
            Sign::Neg
        } else {
            Sign::Pos
        };
        let e = (64 * m.len()) as i32;
        BigReal(BigFloat::from_words(&m, s, e))
    }

    /// Exact conversion of the unevaluated sum.
    pub fn from_dd(d: Dd) -> Self {
        let hi = BigFloat::from_f64(d.hi(), 64);
        if d.lo() == 0.0 || d.hi() == 0.0 {
            return BigReal(hi);
        }
        let lo = BigFloat::from_f64(d.lo(), 64);
        // Exact: the sum spans at most the exponent gap plus one f64 significand.
        let gap = (d.hi().abs().log2() - d.lo().abs().log2()).abs() as usize;
        BigReal(hi.add(&lo, words(gap + 128), RM))
    }

    pub fn pi(p: usize) -> Self {
        with_consts(|cc| BigReal(cc.pi(words(p), RM)))
    }

    pub fn ln_2(p: usize) -> Self {
        with_consts(|cc| BigReal(cc.ln_2(words(p), RM)))
    }

    pub fn precision(&self) -> usize {
        self.0.precision().unwrap_or(64)
    }

    pub fn add(&self, o: &Self, p: usize) -> Self {
        BigReal(self.0.add(&o.0, words(p), RM))
    }

    pub fn sub(&self, o: &Self, p: usize) -> Self {
        BigReal(self.0.sub(&o.0, words(p), RM))
    }

    pub fn mul(&self, o: &Self, p: usize) -> Self {
        BigReal(self.0.mul(&o.0, words(p), RM))
    }

    pub fn div(&self, o: &Self, p: usize) -> Self {
        BigReal(self.0.div(&o.0, words(p), RM))
    }

    pub fn neg(&self) -> Self {
        BigReal(self.0.neg())
    }

    pub fn abs(&self) -> Self {
        BigReal(self.0.abs())
    }

    pub fn sqrt(&self, p: usize) -> Self {
        BigReal(self.0.sqrt(words(p), RM))
    }

    pub fn ln(&self, p: usize) -> Self {
        with_consts(|cc| BigReal(self.0.ln(words(p), RM, cc)))
    }

    pub fn log2(&self, p: usize) -> Self {
        with_consts(|cc| BigReal(self.0.log2(words(p), RM, cc)))
    }

    pub fn sin(&self, p: usize) -> Self {
        with_consts(|cc| BigReal(self.0.sin(words(p), RM, cc)))
    }

    pub fn is_finite(&self) -> bool {
        !self.0.is_nan() && !self.0.is_inf()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e`; `None` for zero and non-finite values.
    pub fn exponent(&self) -> Option<i32> {
        if self.is_zero() || !self.is_finite() {
            None
        } else {
            self.0.exponent()
        }
    }

    /// Nearest `f64`; saturates to infinity past the `f64` range.
    pub fn to_f64(&self) -> f64 {
        if self.0.is_nan() {
            return f64::NAN;
        }
        if self.0.is_inf() {
            return if self.0.is_inf_pos() {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        if self.is_zero() {
            return 0.0;
        }
        let Some((m, _, s, e, _)) = self.0.as_raw_parts() else {
            return f64::NAN;
        };
        // The mantissa is normalized: value = 0.m * 2^e, most significant word last.
        let top = m[m.len() - 1] as u128;
        let next = if m.len() >= 2 { m[m.len() - 2] as u128 } else { 0 };
        let sticky = m.len() > 2 && m[..m.len() - 2].iter().any(|&w| w != 0);
        let mut bits = (top << 64) | next;
        if sticky {
            bits |= 1;
        }
        let v = ldexp(bits as f64, e - 128);
        if s == Sign::Neg {
            -v
        } else {
            v
        }
    }

    /// Leading 106 bits as a double-double.
    pub fn to_dd(&self) -> Dd {
        let hi = self.to_f64();
        if !hi.is_finite() || hi == 0.0 {
            return Dd::from_f64(hi);
        }
        let rest = self.sub(&BigReal::from_f64(hi, 64), self.precision().max(128));
        Dd::new(hi, rest.to_f64())
    }

    pub fn total_cmp(&self, o: &Self) -> Ordering {
        match self.0.cmp(&o.0) {
            Some(c) if c < 0 => Ordering::Less,
            Some(0) => Ordering::Equal,
            Some(_) => Ordering::Greater,
            None => Ordering::Equal,
        }
    }

    /// Decimal rendering with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        if !self.is_finite() {
            return self.to_f64().to_string();
        }
        // ~3.33 bits per decimal digit; round before formatting to trim the tail.
        let p = words((digits as f64 * 3.33) as usize + 8);
        let mut r = self.0.clone();
        if r.precision().is_some_and(|q| q > p) {
            let _ = r.set_precision(p, RM);
        }
        with_consts(|cc| r.format(Radix::Dec, RM, cc)).unwrap_or_else(|_| "NaN".into())
    }
}

impl PartialEq for BigReal {
    fn eq(&self, o: &Self) -> bool {
        self.0.cmp(&o.0) == Some(0)
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        self.0.cmp(&o.0).map(|c| c.cmp(&0))
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal(f.precision().unwrap_or(20)))
    }
}

/// `x * 2^k` without intermediate overflow or premature underflow.
fn ldexp(mut x: f64, mut k: i32) -> f64 {
    while k > 1000 {
        x *= 2f64.powi(1000);
        k -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while k < -1000 {
        x *= 2f64.powi(-1000);
        k += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(k)
}
