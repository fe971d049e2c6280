//! Weight sequences `{v_n}` and their exact log-domain evaluation.
//!
//! The oscillating weights are `v_n = c^{φ(|n|)} e^{ψ(|n|)}` with
//!
//! ```text
//! φ(x) = x   · sin θ(x)
//! ψ(x) = √x  · sin θ(x)        θ(x) = (π/2) · log₂(1 + log₂(1 + x))
//! ```
//!
//! so `ln v_n = sin θ(|n|) · (|n| ln c + √|n|)`. Everything is kept in the log
//! domain: `c^{n}` overflows every fixed-width float long before the witness
//! indices (`2^31 - 1` is the smallest one).
//!
//! Three evaluation routes exist and are kept consistent by tests:
//!
//! * exact chain: when `1 + |n| = 2^j` and `1 + j = 2^i`, `θ = iπ/2` and the sine is
//!   exactly `0` or `±1`; no logarithm of a huge number is ever formed;
//! * double-double for `|n| < 2^53` at the default precision (106 bits);
//! * multiprecision for everything else, with the working precision raised by the
//!   bit length of the index so that differences of neighbouring log-weights
//!   survive cancellation.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bigreal::BigReal;
use crate::dd::Dd;
use crate::error::{Error, Result};

/// Default significand size for φ/ψ composition; this is also what the
/// double-double route delivers.
pub const DEFAULT_PRECISION_BITS: u32 = 106;
pub const MIN_PRECISION_BITS: u32 = 80;

/// Indices below this bound use the double-double route.
const DD_LIMIT: u64 = 1 << 53;

/// Largest witness order whose index is still materialized (2^{2^{23}} bits is 1 MiB).
pub const MAX_WITNESS_K: u32 = 5;

/// `k = π / (2 ln²2)`, the constant in the closed-form derivatives of φ and ψ.
pub fn derivative_constant() -> f64 {
    PI / (2.0 * LN_2 * LN_2)
}

/// An arbitrary-precision signed index into the basis `{b_n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index(BigInt);

impl Index {
    pub fn new(n: i64) -> Self {
        Index(BigInt::from(n))
    }

    pub fn from_bigint(n: BigInt) -> Self {
        Index(n)
    }

    pub fn as_bigint(&self) -> &BigInt {
        &self.0
    }

    pub fn abs(&self) -> Index {
        Index(self.0.abs())
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn to_i64(&self) -> Option<i64> {
        self.0.to_i64()
    }

    /// Bit length of `|n|`.
    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    /// `|n|` as a `u64` when it is below 2^53.
    fn small_abs(&self) -> Option<u64> {
        self.0.abs().to_u64().filter(|&m| m < DD_LIMIT)
    }
}

impl From<i64> for Index {
    fn from(n: i64) -> Self {
        Index::new(n)
    }
}

impl From<BigInt> for Index {
    fn from(n: BigInt) -> Self {
        Index(n)
    }
}

impl Add<&Index> for &Index {
    type Output = Index;
    fn add(self, o: &Index) -> Index {
        Index(&self.0 + &o.0)
    }
}

impl Sub<&Index> for &Index {
    type Output = Index;
    fn sub(self, o: &Index) -> Index {
        Index(&self.0 - &o.0)
    }
}

impl Add<i64> for &Index {
    type Output = Index;
    fn add(self, o: i64) -> Index {
        Index(&self.0 + o)
    }
}

impl Neg for &Index {
    type Output = Index;
    fn neg(self) -> Index {
        Index(-&self.0)
    }
}

impl FromStr for Index {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let body = t.strip_prefix(['+', '-']).unwrap_or(t);
        if body.is_empty() || !body.bytes().all(|b| b.is_ascii_digit()) {
            return Err(Error::IndexParse(s.to_string()));
        }
        BigInt::from_str(t)
            .map(Index)
            .map_err(|_| Error::IndexParse(s.to_string()))
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl Serialize for Index {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.to_string())
    }
}

impl<'de> Deserialize<'de> for Index {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `ln v_n`. Weights are real and positive, so the sign is always `+1` and only
/// the logarithm is stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LogWeight {
    value: BigReal,
}

impl LogWeight {
    pub fn log_value(&self) -> &BigReal {
        &self.value
    }

    pub fn into_inner(self) -> BigReal {
        self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }
}

/// A user-supplied log-weight rule `n ↦ ln v_n`.
#[derive(Clone)]
pub struct UserRule {
    name: String,
    rule: Arc<dyn Fn(&Index) -> f64 + Send + Sync>,
}

impl UserRule {
    pub fn new(name: impl Into<String>, rule: impl Fn(&Index) -> f64 + Send + Sync + 'static) -> Self {
        UserRule {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    /// Periodic log-weights `ln v_n = logs[n mod p]`.
    pub fn periodic(logs: Vec<f64>) -> Result<Self> {
        if logs.is_empty() {
            return Err(Error::InvalidWeight("periodic rule needs at least one value".into()));
        }
        let name = format!(
            "user:logs={}",
            logs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
        );
        let p = BigInt::from(logs.len());
        Ok(UserRule::new(name, move |n: &Index| {
            let r = ((n.as_bigint() % &p) + &p) % &p;
            logs[r.to_usize().unwrap_or(0)]
        }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for UserRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("UserRule").field(&self.name).finish()
    }
}

#[derive(Clone, Debug)]
pub enum WeightKind {
    /// `v_n = c^{φ(|n|)} e^{ψ(|n|)}`, `c ≥ 1`.
    PaperLemma6 { c: f64 },
    /// `v_n = r^n`.
    Geometric { ratio: f64 },
    /// `v_n = 1`.
    Constant,
    UserRule(UserRule),
}

impl WeightKind {
    pub fn label(&self) -> &'static str {
        match self {
            WeightKind::PaperLemma6 { .. } => "paper",
            WeightKind::Geometric { .. } => "geometric",
            WeightKind::Constant => "constant",
            WeightKind::UserRule(_) => "user",
        }
    }
}

#[derive(Clone, Debug)]
pub struct WeightSequence {
    kind: WeightKind,
    precision_bits: u32,
    /// `ln c` or `ln r` in double-double, zero otherwise.
    ln_param: Dd,
}

impl WeightSequence {
    pub fn paper(c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 1.0) {
            return Err(Error::InvalidWeight(format!("paper weights need c >= 1, got {c}")));
        }
        Ok(WeightSequence {
            kind: WeightKind::PaperLemma6 { c },
            precision_bits: DEFAULT_PRECISION_BITS,
            ln_param: Dd::from_f64(c).ln(),
        })
    }

    pub fn geometric(ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidWeight(format!("geometric ratio must be > 0, got {ratio}")));
        }
        Ok(WeightSequence {
            kind: WeightKind::Geometric { ratio },
            precision_bits: DEFAULT_PRECISION_BITS,
            ln_param: Dd::from_f64(ratio).ln(),
        })
    }

    pub fn constant() -> Self {
        WeightSequence {
            kind: WeightKind::Constant,
            precision_bits: DEFAULT_PRECISION_BITS,
            ln_param: Dd::ZERO,
        }
    }

    pub fn user(rule: UserRule) -> Self {
        WeightSequence {
            kind: WeightKind::UserRule(rule),
            precision_bits: DEFAULT_PRECISION_BITS,
            ln_param: Dd::ZERO,
        }
    }

    /// Raises the working precision; values below 80 bits are rejected.
    pub fn with_precision(mut self, bits: u32) -> Result<Self> {
        if bits < MIN_PRECISION_BITS {
            return Err(Error::InvalidWeight(format!(
                "precision must be at least {MIN_PRECISION_BITS} bits, got {bits}"
            )));
        }
        self.precision_bits = bits;
        Ok(self)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    /// `c` for the oscillating family.
    pub fn paper_c(&self) -> Option<f64> {
        match self.kind {
            WeightKind::PaperLemma6 { c } => Some(c),
            _ => None,
        }
    }

    /// True when `v_n = v_{-n}` holds by construction.
    pub fn is_symmetric_by_construction(&self) -> bool {
        matches!(self.kind, WeightKind::PaperLemma6 { .. } | WeightKind::Constant)
    }

    /// True when `v_{n+1}/v_n` does not depend on `n`, so every window is exact.
    pub fn is_translation_invariant(&self) -> bool {
        matches!(self.kind, WeightKind::Geometric { .. } | WeightKind::Constant)
    }

    /// `ln(v_{n+1}/v_n)` for translation-invariant kinds.
    pub fn unit_log_ratio(&self) -> Option<Dd> {
        self.is_translation_invariant().then_some(self.ln_param)
    }

    fn dd_route(&self) -> bool {
        self.precision_bits <= DEFAULT_PRECISION_BITS
    }

    /// Working precision for an index of `bits` bits.
    fn mp_precision(&self, bits: u64) -> usize {
        self.precision_bits as usize + bits as usize + 32
    }

    fn ln_param_mp(&self, p: usize) -> BigReal {
        match self.kind {
            WeightKind::PaperLemma6 { c } => BigReal::from_f64(c, 64).ln(p),
            WeightKind::Geometric { ratio } => BigReal::from_f64(ratio, 64).ln(p),
            _ => BigReal::zero(),
        }
    }

    /// `ln v_n`.
    pub fn eval_log_weight(&self, n: &Index) -> Result<LogWeight> {
        let value = match &self.kind {
            WeightKind::Constant => BigReal::zero(),
            WeightKind::UserRule(rule) => {
                let v = (rule.rule)(n);
                if !v.is_finite() {
                    return Err(Error::NonFiniteWeight { index: n.to_string() });
                }
                BigReal::from_f64(v, 64)
            }
            WeightKind::Geometric { .. } => match (self.dd_route(), n.small_abs()) {
                (true, Some(_)) => {
                    let k = n.to_i64().expect("small index");
                    BigReal::from_dd(self.ln_param * Dd::from_i64(k))
                }
                _ => {
                    let p = self.mp_precision(n.bits());
                    BigReal::from_bigint(n.as_bigint()).mul(&self.ln_param_mp(p), p)
                }
            },
            WeightKind::PaperLemma6 { .. } => match (self.dd_route(), n.small_abs()) {
                (true, Some(m)) => BigReal::from_dd(oscillating_log_weight_dd(m, self.ln_param)),
                _ => {
                    let m = n.abs();
                    let p = self.mp_precision(m.bits());
                    oscillating_log_weight_mp(m.as_bigint(), &self.ln_param_mp(p), p)
                }
            },
        };
        Ok(LogWeight { value })
    }

    /// `ln v_n` as a double-double, for table construction and vector actions.
    pub(crate) fn log_weight_dd(&self, n: i64) -> Result<Dd> {
        match &self.kind {
            WeightKind::Constant => Ok(Dd::ZERO),
            WeightKind::Geometric { .. } if n.unsigned_abs() < DD_LIMIT => {
                Ok(self.ln_param * Dd::from_i64(n))
            }
            WeightKind::PaperLemma6 { .. } if n.unsigned_abs() < DD_LIMIT => {
                Ok(oscillating_log_weight_dd(n.unsigned_abs(), self.ln_param))
            }
            _ => Ok(self.eval_log_weight(&Index::new(n))?.value.to_dd()),
        }
    }

    /// `ln v_{n+step} - ln v_n`, computed without losing the O(1) difference of
    /// two large terms.
    pub fn log_ratio(&self, n: &Index, step: &Index) -> Result<BigReal> {
        let target = n + step;
        if self.dd_route() {
            if let (Some(a), Some(b)) = (n.to_i64(), target.to_i64()) {
                if a.unsigned_abs() < DD_LIMIT && b.unsigned_abs() < DD_LIMIT {
                    let d = self.log_weight_dd(b)? - self.log_weight_dd(a)?;
                    return Ok(BigReal::from_dd(d));
                }
            }
        }
        if self.is_translation_invariant() {
            if self.ln_param == Dd::ZERO {
                return Ok(BigReal::zero());
            }
            let p = self.mp_precision(step.bits());
            return Ok(BigReal::from_bigint(step.as_bigint()).mul(&self.ln_param_mp(p), p));
        }
        let hi = self.eval_log_weight(&target)?.value;
        let lo = self.eval_log_weight(n)?.value;
        let p = self.mp_precision(n.bits().max(target.bits())) + 64;
        Ok(hi.sub(&lo, p))
    }

    /// Rigorous bound on `|ln v_{x+1} - ln v_x|` for all real `x ≥ n_min`.
    ///
    /// By the mean value theorem the step is at most `sup |φ'|·ln c + sup |ψ'|` over
    /// `[n_min, ∞)`. With `h(x) = 1/(1 + log₂(1+x))`,
    ///
    /// ```text
    /// φ'(x) = sin z + cos z · k · h(x) · x/(1+x)           ⇒ |φ'| ≤ √(1 + (k h)²)
    /// ψ'(x) = sin z/(2√x) + cos z · k · h(x) · √x/(1+x)     ⇒ |ψ'| ≤ √(1/(4x) + (k h/√x)²)
    /// ```
    ///
    /// and both right-hand sides decrease in `x`.
    pub fn tail_derivative_bound(&self, n_min: &Index) -> Result<TailBound> {
        let WeightKind::PaperLemma6 { c } = self.kind else {
            return Err(Error::NoAnalyticTail(self.kind.label()));
        };
        if n_min.as_bigint() < &BigInt::one() {
            return Err(Error::Precondition(format!("tail bound needs n_min >= 1, got {n_min}")));
        }
        // x is rounded down so every bound below is taken at a point no larger than n_min.
        let x = n_min.as_bigint().to_f64().unwrap_or(f64::INFINITY);
        let x = if x.is_finite() { x * (1.0 - f64::EPSILON) } else { x };
        let log2 = if x.is_finite() {
            (1.0 + x).log2() * (1.0 - 4.0 * f64::EPSILON)
        } else {
            (n_min.bits() - 1) as f64
        };
        let k = derivative_constant();
        let h = 1.0 / (1.0 + log2);
        let phi_slope = round_up((1.0 + (k * h).powi(2)).sqrt());
        let inv_x = if x.is_finite() { 1.0 / x } else { 0.0 };
        let psi_slope = round_up((0.25 * inv_x + (k * h).powi(2) * inv_x).sqrt());
        let log_step_bound = round_up(phi_slope * c.ln().max(0.0) + psi_slope);
        Ok(TailBound {
            n_min: n_min.clone(),
            phi_slope,
            psi_slope,
            log_step_bound,
        })
    }
}

/// Inflates a positive bound past the rounding error of a few f64 operations.
fn round_up(v: f64) -> f64 {
    v * (1.0 + 16.0 * f64::EPSILON)
}

impl PartialEq for WeightSequence {
    fn eq(&self, o: &Self) -> bool {
        self.precision_bits == o.precision_bits && self.to_string() == o.to_string()
    }
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            WeightKind::PaperLemma6 { c } => write!(f, "paper:c={c}"),
            WeightKind::Geometric { ratio } => write!(f, "geom:r={ratio}"),
            WeightKind::Constant => f.write_str("const"),
            WeightKind::UserRule(rule) => f.write_str(rule.name()),
        }
    }
}

/// Parses a float in decimal or C99 hex-float notation (`0x1.8p1`).
pub fn parse_real(s: &str) -> Option<f64> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    let unsigned = lower.trim_start_matches(['+', '-']);
    if unsigned.starts_with("0x") {
        hexf_parse::parse_hexf64(t, false).ok()
    } else {
        t.parse::<f64>().ok().filter(|v| v.is_finite())
    }
}

impl FromStr for WeightSequence {
    type Err = Error;

    /// Grammar:
    ///
    /// ```text
    /// const
    /// paper:c=<real>          c >= 1
    /// geom:r=<real>           r > 0
    /// user:logs=<real>,...    periodic log-weights, ln v_n = logs[n mod p]
    /// ```
    fn from_str(spec: &str) -> Result<Self> {
        let fail = |reason: &str| Error::WeightSpec {
            spec: spec.to_string(),
            reason: reason.to_string(),
        };
        let s = spec.trim();
        if s == "const" {
            return Ok(WeightSequence::constant());
        }
        let (family, args) = s.split_once(':').ok_or_else(|| fail("expected <family>:<key>=<value>"))?;
        let (key, value) = args.split_once('=').ok_or_else(|| fail("expected <key>=<value>"))?;
        match (family, key) {
            ("paper", "c") => {
                let c = parse_real(value).ok_or_else(|| fail("c is not a real number"))?;
                WeightSequence::paper(c).map_err(|e| fail(&e.to_string()))
            }
            ("geom", "r") => {
                let r = parse_real(value).ok_or_else(|| fail("r is not a real number"))?;
                WeightSequence::geometric(r).map_err(|e| fail(&e.to_string()))
            }
            ("user", "logs") => {
                let logs = value
                    .split(',')
                    .map(parse_real)
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| fail("logs must be a comma-separated list of reals"))?;
                Ok(WeightSequence::user(UserRule::periodic(logs)?))
            }
            _ => Err(fail("unknown family; expected const, paper:c=, geom:r= or user:logs=")),
        }
    }
}

/// Output of [`WeightSequence::tail_derivative_bound`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailBound {
    pub n_min: Index,
    /// Upper bound on `|φ'|` over `[n_min, ∞)`; tends to 1.
    pub phi_slope: f64,
    /// Upper bound on `|ψ'|` over `[n_min, ∞)`; tends to 0.
    pub psi_slope: f64,
    /// `phi_slope · ln c + psi_slope`, a bound on one log-ratio step.
    pub log_step_bound: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WitnessKind {
    /// `n_k = 2^{2^{1+4k}-1} - 1`, where `sin θ = +1`.
    Nk,
    /// `m_k = 2^{2^{3+4k}-1} - 1`, where `sin θ = -1`.
    Mk,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WitnessSchedule {
    pub kind: WitnessKind,
    pub k: u32,
    pub index: Index,
}

pub fn witness_index(kind: WitnessKind, k: u32) -> Result<WitnessSchedule> {
    if k == 0 {
        return Err(Error::WitnessOrder(k));
    }
    if k > MAX_WITNESS_K {
        return Err(Error::WitnessTooLarge(k));
    }
    let inner = match kind {
        WitnessKind::Nk => 1 + 4 * k,
        WitnessKind::Mk => 3 + 4 * k,
    };
    let exponent = (1u64 << inner) - 1;
    let index = (BigInt::one() << exponent) - 1;
    Ok(WitnessSchedule {
        kind,
        k,
        index: Index(index),
    })
}

/// `Some(j)` when `t = 2^j`.
fn pow2_exponent(t: &BigInt) -> Option<u64> {
    if t.is_positive() && t.trailing_zeros() == Some(t.bits() - 1) {
        Some(t.bits() - 1)
    } else {
        None
    }
}

/// `sin θ(m)` when it is exactly one of `0, ±1`: `1 + m = 2^j` and `1 + j = 2^i`.
fn exact_oscillation(m: &BigInt) -> Option<i8> {
    let j = pow2_exponent(&(m + 1u32))?;
    let u = j + 1;
    u.is_power_of_two().then(|| [0, 1, 0, -1][(u.trailing_zeros() % 4) as usize])
}

fn exact_oscillation_u64(m: u64) -> Option<i8> {
    let t = m + 1;
    if !t.is_power_of_two() {
        return None;
    }
    let u = t.trailing_zeros() as u64 + 1;
    u.is_power_of_two().then(|| [0, 1, 0, -1][(u.trailing_zeros() % 4) as usize])
}

/// `sin θ(x)` for a real `x ≥ 0` below 2^53.
fn oscillation_dd(x: Dd) -> Dd {
    let t = x + Dd::ONE;
    let l = match t.to_f64() {
        v if v.fract() == 0.0 && (v as u64).is_power_of_two() && x.lo() == 0.0 => {
            Dd::from_f64((v as u64).trailing_zeros() as f64)
        }
        _ => t.log2(),
    };
    (Dd::FRAC_PI_2 * (l + Dd::ONE).log2()).sin()
}

fn oscillation_u64(m: u64) -> Dd {
    match exact_oscillation_u64(m) {
        Some(s) => Dd::from_f64(s as f64),
        None => oscillation_dd(Dd::from_u64(m)),
    }
}

fn oscillating_log_weight_dd(m: u64, ln_c: Dd) -> Dd {
    let s = oscillation_u64(m);
    if s == Dd::ZERO {
        return Dd::ZERO;
    }
    let x = Dd::from_u64(m);
    (x * ln_c + x.sqrt()) * s
}

enum Oscillation {
    Exact(i8),
    Value(BigReal),
}

fn oscillation_mp(m: &BigInt, p: usize) -> Oscillation {
    if let Some(s) = exact_oscillation(m) {
        return Oscillation::Exact(s);
    }
    let t = m + 1u32;
    let l = match pow2_exponent(&t) {
        Some(j) => BigReal::from_i64(j as i64, 64),
        None => BigReal::from_bigint(&t).log2(p),
    };
    let inner = l.add(&BigReal::from_i64(1, 64), p);
    let half_pi = BigReal::pi(p).div(&BigReal::from_i64(2, 64), p);
    Oscillation::Value(half_pi.mul(&inner.log2(p), p).sin(p))
}

fn oscillating_log_weight_mp(m: &BigInt, ln_c: &BigReal, p: usize) -> BigReal {
    let x = BigReal::from_bigint(m);
    let amplitude = x.mul(ln_c, p).add(&x.sqrt(p), p);
    match oscillation_mp(m, p) {
        Oscillation::Exact(0) => BigReal::zero(),
        Oscillation::Exact(s) if s > 0 => amplitude,
        Oscillation::Exact(_) => amplitude.neg(),
        Oscillation::Value(s) => amplitude.mul(&s, p),
    }
}

fn nonnegative(x: &Index) -> Result<()> {
    if x.is_negative() {
        Err(Error::NegativeArgument(x.to_string()))
    } else {
        Ok(())
    }
}

/// `φ(x) = x sin θ(x)` at an integer argument, at `precision_bits` bits beyond the
/// integer part.
pub fn phi_with_precision(x: &Index, precision_bits: u32) -> Result<BigReal> {
    nonnegative(x)?;
    let m = x.as_bigint();
    if precision_bits <= DEFAULT_PRECISION_BITS {
        if let Some(v) = x.small_abs() {
            return Ok(BigReal::from_dd(Dd::from_u64(v) * oscillation_u64(v)));
        }
    }
    let p = precision_bits as usize + x.bits() as usize + 32;
    let xm = BigReal::from_bigint(m);
    Ok(match oscillation_mp(m, p) {
        Oscillation::Exact(s) => xm.mul(&BigReal::from_i64(s as i64, 64), p),
        Oscillation::Value(s) => xm.mul(&s, p),
    })
}

/// `ψ(x) = √x sin θ(x)` at an integer argument.
pub fn psi_with_precision(x: &Index, precision_bits: u32) -> Result<BigReal> {
    nonnegative(x)?;
    let m = x.as_bigint();
    if precision_bits <= DEFAULT_PRECISION_BITS {
        if let Some(v) = x.small_abs() {
            return Ok(BigReal::from_dd(Dd::from_u64(v).sqrt() * oscillation_u64(v)));
        }
    }
    let p = precision_bits as usize + x.bits() as usize + 32;
    let root = BigReal::from_bigint(m).sqrt(p);
    Ok(match oscillation_mp(m, p) {
        Oscillation::Exact(s) => root.mul(&BigReal::from_i64(s as i64, 64), p),
        Oscillation::Value(s) => root.mul(&s, p),
    })
}

pub fn phi(x: &Index) -> Result<BigReal> {
    phi_with_precision(x, DEFAULT_PRECISION_BITS)
}

pub fn psi(x: &Index) -> Result<BigReal> {
    psi_with_precision(x, DEFAULT_PRECISION_BITS)
}

fn real_arg(x: f64) -> Result<Option<Index>> {
    if x.is_nan() || x < 0.0 || x.is_infinite() {
        return Err(Error::NegativeArgument(x.to_string()));
    }
    Ok((x >= DD_LIMIT as f64).then(|| Index(BigInt::from(x as u128))))
}

/// `φ` at a real argument `x ≥ 0`.
pub fn phi_real(x: f64) -> Result<f64> {
    match real_arg(x)? {
        Some(i) => Ok(phi(&i)?.to_f64()),
        None => Ok((Dd::from_f64(x) * oscillation_dd(Dd::from_f64(x))).to_f64()),
    }
}

/// `ψ` at a real argument `x ≥ 0`.
pub fn psi_real(x: f64) -> Result<f64> {
    match real_arg(x)? {
        Some(i) => Ok(psi(&i)?.to_f64()),
        None => Ok((Dd::from_f64(x).sqrt() * oscillation_dd(Dd::from_f64(x))).to_f64()),
    }
}

/// Generic multiprecision evaluation of `sin θ(m)`, bypassing both the exact chain
/// and the double-double route. Exposed for consistency checks.
pub fn oscillation_reference(m: &Index, precision_bits: u32) -> Result<BigReal> {
    nonnegative(m)?;
    let p = precision_bits as usize + m.bits() as usize + 32;
    let t = m.as_bigint() + 1u32;
    let l = BigReal::from_bigint(&t).log2(p);
    let inner = l.add(&BigReal::from_i64(1, 64), p);
    let half_pi = BigReal::pi(p).div(&BigReal::from_i64(2, 64), p);
    Ok(half_pi.mul(&inner.log2(p), p).sin(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(s: &str) -> Index {
        s.parse().unwrap()
    }

    #[test]
    fn index_decimal_roundtrip() {
        for s in ["0", "-17", "2147483647", "-170141183460469231731687303715884105727"] {
            assert_eq!(idx(s).to_string(), s);
        }
        assert!("1e5".parse::<Index>().is_err());
        assert!("".parse::<Index>().is_err());
        assert!("--3".parse::<Index>().is_err());
    }

    #[test]
    fn phi_psi_at_zero() {
        assert!(phi(&Index::new(0)).unwrap().is_zero());
        assert!(psi(&Index::new(0)).unwrap().is_zero());
    }

    #[test]
    fn negative_arguments_rejected() {
        assert!(matches!(phi(&Index::new(-1)), Err(Error::NegativeArgument(_))));
        assert!(matches!(psi_real(-0.5), Err(Error::NegativeArgument(_))));
    }

    #[test]
    fn exact_chain_signs() {
        // 1 + m = 2^j, 1 + j = 2^i  =>  sin(iπ/2)
        assert_eq!(exact_oscillation_u64(0), Some(0));
        assert_eq!(exact_oscillation_u64(1), Some(1));
        assert_eq!(exact_oscillation_u64(7), Some(0)); // j = 3, i = 2
        assert_eq!(exact_oscillation_u64((1 << 31) - 1), Some(1)); // n_1
        assert_eq!(exact_oscillation_u64(3), None);
        let m1 = (BigInt::one() << 127) - 1;
        assert_eq!(exact_oscillation(&m1), Some(-1));
    }

    #[test]
    fn phi_at_first_witnesses() {
        let n1 = witness_index(WitnessKind::Nk, 1).unwrap().index;
        assert_eq!(phi(&n1).unwrap(), BigReal::from_bigint(n1.as_bigint()));
        let m1 = witness_index(WitnessKind::Mk, 1).unwrap().index;
        assert_eq!(phi(&m1).unwrap(), BigReal::from_bigint(m1.as_bigint()).neg());
    }

    #[test]
    fn witness_indices() {
        assert_eq!(witness_index(WitnessKind::Nk, 1).unwrap().index, Index::new(2_147_483_647));
        let m1 = witness_index(WitnessKind::Mk, 1).unwrap().index;
        assert_eq!(m1.as_bigint(), &((BigInt::one() << 127) - 1));
        let n2 = witness_index(WitnessKind::Nk, 2).unwrap().index;
        assert_eq!(n2.as_bigint(), &((BigInt::one() << 511) - 1));
        assert_eq!(witness_index(WitnessKind::Nk, 0), Err(Error::WitnessOrder(0)));
        assert_eq!(witness_index(WitnessKind::Mk, 9), Err(Error::WitnessTooLarge(9)));
    }

    #[test]
    fn spec_grammar() {
        assert_eq!(
            "paper:c=2".parse::<WeightSequence>().unwrap().paper_c(),
            Some(2.0)
        );
        assert!(matches!(
            "geom:r=0x1p-1".parse::<WeightSequence>().unwrap().kind(),
            WeightKind::Geometric { ratio } if *ratio == 0.5
        ));
        assert!(matches!(
            "const".parse::<WeightSequence>().unwrap().kind(),
            WeightKind::Constant
        ));
        let user: WeightSequence = "user:logs=0,0.5,-1".parse().unwrap();
        assert_eq!(user.eval_log_weight(&Index::new(-1)).unwrap().to_f64(), -1.0);
        assert_eq!(user.to_string(), "user:logs=0,0.5,-1");
        for bad in ["paper:c=0.5", "geom:r=-1", "geom:x=1", "paper", "user:logs=", "paper:c=nan"] {
            assert!(bad.parse::<WeightSequence>().is_err(), "{bad}");
        }
    }

    #[test]
    fn user_rule_must_be_finite() {
        let w = WeightSequence::user(UserRule::new("bad", |_| f64::INFINITY));
        assert!(matches!(
            w.eval_log_weight(&Index::new(3)),
            Err(Error::NonFiniteWeight { .. })
        ));
    }

    #[test]
    fn geometric_and_constant_log_ratio() {
        let g = WeightSequence::geometric(2.0).unwrap();
        let r = g.log_ratio(&Index::new(7), &Index::new(3)).unwrap().to_f64();
        assert!((r - 3.0 * LN_2).abs() < 1e-15);
        let c = WeightSequence::constant();
        assert_eq!(c.log_ratio(&Index::new(-4), &Index::new(1)).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn tail_bound_rejects_non_analytic() {
        let g = WeightSequence::geometric(2.0).unwrap();
        assert_eq!(
            g.tail_derivative_bound(&Index::new(10)),
            Err(Error::NoAnalyticTail("geometric"))
        );
        let p = WeightSequence::paper(2.0).unwrap();
        assert!(p.tail_derivative_bound(&Index::new(0)).is_err());
    }

    #[test]
    fn precision_floor() {
        assert!(WeightSequence::paper(2.0).unwrap().with_precision(64).is_err());
        assert!(WeightSequence::paper(2.0).unwrap().with_precision(256).is_ok());
    }
}
