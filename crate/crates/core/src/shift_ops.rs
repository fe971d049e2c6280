//! Bilateral weighted shifts acting lazily on finitely-supported vectors.
//!
//! For a weight sequence `{v_n}` the shift and its relatives act on the
//! orthonormal basis `{b_n}` by
//!
//! ```text
//! V^N      b_n = (v_{n+N} / v_n) b_{n+N}
//! V^{-N}   b_n = (v_{n-N} / v_n) b_{n-N}
//! V*^N     b_n = (v_n / v_{n-N}) b_{n-N}
//! V*^{-N}  b_n = (v_n / v_{n+N}) b_{n+N}
//! ```
//!
//! and `‖V^N‖ = sup_n v_{n+N}/v_n`. The supremum over all of ℤ is split into an
//! exhaustive window scan and an analytic bound on the complement; see
//! [`norm_power`].

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::bigreal::BigReal;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::weights::{witness_index, Index, WeightKind, WeightSequence, WitnessKind};

/// Finitely-supported vector `Σ x_n b_n`. Zero coefficients are never stored.
#[derive(Clone, PartialEq)]
pub struct FinSuppVector<S> {
    coefficients: BTreeMap<i64, S>,
}

impl<S: Scalar> Default for FinSuppVector<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> FinSuppVector<S> {
    pub fn zero() -> Self {
        FinSuppVector {
            coefficients: BTreeMap::new(),
        }
    }

    /// The basis vector `b_n`.
    pub fn basis(n: i64) -> Self {
        let mut v = Self::zero();
        v.coefficients.insert(n, S::one());
        v
    }

    /// Duplicate indices are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (i64, S)>) -> Self {
        let mut v = Self::zero();
        for (n, a) in pairs {
            v.add_at(n, a);
        }
        v
    }

    pub fn get(&self, n: i64) -> S {
        self.coefficients.get(&n).copied().unwrap_or_else(S::zero)
    }

    pub fn set(&mut self, n: i64, a: S) {
        if a == S::zero() {
            self.coefficients.remove(&n);
        } else {
            self.coefficients.insert(n, a);
        }
    }

    pub fn add_at(&mut self, n: i64, a: S) {
        let v = self.get(n) + a;
        self.set(n, v);
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, S)> + '_ {
        self.coefficients.iter().map(|(&n, &a)| (n, a))
    }

    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.coefficients.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.is_zero()
    }

    /// Real ℓ² inner product `(self, other)`.
    pub fn inner(&self, other: &Self) -> S {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .coefficients
            .iter()
            .filter_map(|(n, &a)| large.coefficients.get(n).map(|&b| a * b))
            .sum()
    }

    pub fn norm_sqr(&self) -> S {
        self.coefficients.values().map(|&a| a * a).sum()
    }

    pub fn norm(&self) -> S {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, s: S) -> Self {
        Self::from_pairs(self.iter().map(|(n, a)| (n, a * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut v = self.clone();
        for (n, a) in other.iter() {
            v.add_at(n, a);
        }
        v
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-S::one()))
    }

    /// The flip `R b_n = b_{-n}`.
    pub fn flip(&self) -> Self {
        Self::from_pairs(self.iter().map(|(n, a)| (-n, a)))
    }

    pub fn max_abs(&self) -> S {
        self.coefficients
            .values()
            .fold(S::zero(), |m, &a| m.max(a.abs()))
    }
}

impl<S: fmt::Debug> fmt::Debug for FinSuppVector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.coefficients.iter()).finish()
    }
}

impl<S: Scalar> FromIterator<(i64, S)> for FinSuppVector<S> {
    fn from_iter<I: IntoIterator<Item = (i64, S)>>(iter: I) -> Self {
        Self::from_pairs(iter)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerKind {
    /// `V`
    Forward,
    /// `V^{-1}`
    Inverse,
    /// `V*`
    Adjoint,
    /// `V*^{-1}`
    AdjointInverse,
}

impl PowerKind {
    pub const ALL: [PowerKind; 4] = [
        PowerKind::Forward,
        PowerKind::Inverse,
        PowerKind::AdjointInverse,
        PowerKind::Adjoint,
    ];

    /// Direction in which the support moves under a positive power.
    pub fn shift_sign(self) -> i64 {
        match self {
            PowerKind::Forward | PowerKind::AdjointInverse => 1,
            PowerKind::Inverse | PowerKind::Adjoint => -1,
        }
    }

    /// Whether the coefficient is `v_target / v_source` (true) or its reciprocal.
    fn ratio_up(self) -> bool {
        matches!(self, PowerKind::Forward | PowerKind::Inverse)
    }

    /// `‖V*^N‖ = ‖V^N‖` and `‖V*^{-N}‖ = ‖V^{-N}‖`; the norm only depends on this.
    fn norm_class(self) -> PowerKind {
        match self {
            PowerKind::Forward | PowerKind::Adjoint => PowerKind::Forward,
            PowerKind::Inverse | PowerKind::AdjointInverse => PowerKind::Inverse,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            PowerKind::Forward => "V",
            PowerKind::Inverse => "V^-1",
            PowerKind::Adjoint => "V*",
            PowerKind::AdjointInverse => "V*^-1",
        }
    }
}

impl fmt::Display for PowerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

#[derive(Clone, Debug)]
pub struct ShiftOperator {
    pub weights: WeightSequence,
    pub kind: PowerKind,
}

impl ShiftOperator {
    pub fn new(weights: WeightSequence, kind: PowerKind) -> Self {
        ShiftOperator { weights, kind }
    }

    pub fn forward(weights: WeightSequence) -> Self {
        Self::new(weights, PowerKind::Forward)
    }

    /// Image of `b_n` under the `power`-th power: `(target index, ln coefficient)`.
    pub fn log_action(&self, n: i64, power: i64) -> Result<(i64, Dd)> {
        let step = power
            .checked_mul(self.kind.shift_sign())
            .ok_or_else(|| Error::IndexRange(format!("{power}")))?;
        let target = n
            .checked_add(step)
            .ok_or_else(|| Error::IndexRange(format!("{n} + {step}")))?;
        let up = self.weights.log_weight_dd(target)? - self.weights.log_weight_dd(n)?;
        let log = if self.kind.ratio_up() { up } else { -up };
        Ok((target, log))
    }

    /// `T^power x` coefficient-wise, for the operator's kind `T`.
    pub fn apply_power<S: Scalar>(&self, power: i64, x: &FinSuppVector<S>) -> Result<FinSuppVector<S>> {
        let mut out = FinSuppVector::zero();
        for (n, a) in x.iter() {
            let (target, log) = self.log_action(n, power)?;
            let coef = exp_dd(log);
            let value = S::from_f64_lossy(coef) * a;
            if !coef.is_finite() || !value.is_finite() {
                return Err(Error::CoefficientOverflow {
                    index: target,
                    log_magnitude: log.to_f64(),
                });
            }
            out.add_at(target, value);
        }
        Ok(out)
    }
}

/// `exp` of a log-coefficient, keeping the low word's first-order contribution.
pub(crate) fn exp_dd(log: Dd) -> f64 {
    log.hi().exp() * (1.0 + log.lo())
}

/// `ln v_n` for every `|n| <= half_width`, in double-double.
#[derive(Clone, Debug)]
pub struct LogWeightTable {
    half_width: u64,
    values: Vec<Dd>,
}

impl LogWeightTable {
    pub fn build(weights: &WeightSequence, half_width: u64) -> Result<Self> {
        let h = i64::try_from(half_width).map_err(|_| Error::IndexRange(half_width.to_string()))?;
        let len = 2 * half_width as usize + 1;
        let mut values = vec![Dd::ZERO; len];
        if weights.is_symmetric_by_construction() {
            for m in 0..=h {
                let v = weights.log_weight_dd(m)?;
                values[(h + m) as usize] = v;
                values[(h - m) as usize] = v;
            }
        } else {
            for n in -h..=h {
                values[(n + h) as usize] = weights.log_weight_dd(n)?;
            }
        }
        Ok(LogWeightTable { half_width, values })
    }

    pub fn half_width(&self) -> u64 {
        self.half_width
    }

    /// Panics outside `[-half_width, half_width]`.
    #[inline]
    pub fn get(&self, n: i64) -> Dd {
        self.values[(n + self.half_width as i64) as usize]
    }
}

/// Certified value of `ln ‖T^N‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormCertificate {
    pub power: u64,
    pub window: u64,
    /// Exact supremum over the scanned window.
    pub window_sup_log: f64,
    /// Bound on the supremum outside the window; absent when no analytic tail exists.
    pub tail_bound_log: Option<f64>,
    /// `max(window_sup_log, tail_bound_log)`; `None` when only the window lower bound is known.
    pub certified: Option<f64>,
    pub lower_bound_only: bool,
}

impl NormCertificate {
    fn assemble(power: u64, window: u64, window_sup_log: f64, tail_bound_log: Option<f64>) -> Self {
        let certified = tail_bound_log.map(|t| t.max(window_sup_log));
        NormCertificate {
            power,
            window,
            window_sup_log,
            tail_bound_log,
            certified,
            lower_bound_only: certified.is_none(),
        }
    }

    /// Certified value, or the window lower bound when uncertified.
    pub fn log_norm(&self) -> f64 {
        self.certified.unwrap_or(self.window_sup_log)
    }
}

/// Per-step log-ratio for translation-invariant weights, signed by the norm class.
fn invariant_step(op: &ShiftOperator) -> Option<f64> {
    let s = op.weights.unit_log_ratio()?.to_f64();
    Some(match op.kind.norm_class() {
        PowerKind::Forward => s,
        _ => -s,
    })
}

/// Window supremum `max ln(v_{n±N}/v_n)`, scanning every `n` whose segment
/// touches `[-window, window]`.
fn window_sup(table: &LogWeightTable, class: PowerKind, power: u64, window: u64) -> f64 {
    let w = window as i64;
    let n = power as i64;
    let mut best = f64::NEG_INFINITY;
    match class {
        PowerKind::Forward => {
            for i in -w - n..=w {
                best = best.max((table.get(i + n) - table.get(i)).to_f64());
            }
        }
        _ => {
            for i in -w..=w + n {
                best = best.max((table.get(i - n) - table.get(i)).to_f64());
            }
        }
    }
    best
}

/// Same window supremum with the telescoped ratio summed one step at a time;
/// slower, used to cross-check the single-difference route.
pub fn window_sup_unit_steps(op: &ShiftOperator, power: u64, window: u64) -> Result<f64> {
    let table = LogWeightTable::build(&op.weights, window + power)?;
    let w = window as i64;
    let n = power as i64;
    let (start, end, dir) = match op.kind.norm_class() {
        PowerKind::Forward => (-w - n, w, 1),
        _ => (-w, w + n, -1),
    };
    let mut best = f64::NEG_INFINITY;
    for i in start..=end {
        let mut acc = Dd::ZERO;
        for j in 0..n {
            let a = i + dir * j;
            acc = acc + (table.get(a + dir) - table.get(a));
        }
        best = best.max(acc.to_f64());
    }
    Ok(best)
}

fn tail_bound(op: &ShiftOperator, power: u64, window: u64) -> Result<Option<f64>> {
    match op.weights.kind() {
        WeightKind::PaperLemma6 { .. } => {
            let b = op.weights.tail_derivative_bound(&Index::new(window as i64))?;
            Ok(Some(b.log_step_bound * power as f64))
        }
        _ => Ok(None),
    }
}

/// Certified `ln ‖T^N‖` from a window scan of half-width `window` plus a tail bound.
///
/// Outside the window every unit step `ln(v_{m+1}/v_m)` has both endpoints at
/// `|m| ≥ window`, where [`WeightSequence::tail_derivative_bound`] caps it, so an
/// `N`-step ratio there is at most `N` times that cap.
pub fn norm_power(op: &ShiftOperator, power: u64, window: u64) -> Result<NormCertificate> {
    check_norm_args(power, window)?;
    if let Some(s) = invariant_step(op) {
        let v = s * power as f64;
        return Ok(NormCertificate::assemble(power, window, v, Some(v)));
    }
    let table = LogWeightTable::build(&op.weights, window + power)?;
    norm_power_with_table(op, &table, power, window)
}

/// [`norm_power`] against a prebuilt table covering `window + power`.
pub fn norm_power_with_table(
    op: &ShiftOperator,
    table: &LogWeightTable,
    power: u64,
    window: u64,
) -> Result<NormCertificate> {
    check_norm_args(power, window)?;
    if let Some(s) = invariant_step(op) {
        let v = s * power as f64;
        return Ok(NormCertificate::assemble(power, window, v, Some(v)));
    }
    if table.half_width() < window + power {
        return Err(Error::Precondition(format!(
            "table half-width {} does not cover window {window} + power {power}",
            table.half_width()
        )));
    }
    let sup = window_sup(table, op.kind.norm_class(), power, window);
    let tail = tail_bound(op, power, window)?;
    Ok(NormCertificate::assemble(power, window, sup, tail))
}

fn check_norm_args(power: u64, window: u64) -> Result<()> {
    if power == 0 || window == 0 {
        return Err(Error::Precondition(format!(
            "norm certificates need N >= 1 and window >= 1 (got N = {power}, window = {window})"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GelfandTerm {
    pub power: u64,
    pub log_norm: f64,
    pub certified: bool,
    /// `log_norm / N`
    pub root_log: f64,
}

/// Bracket on `ln r(T)`.
///
/// `upper_log` is the smallest certified Gelfand term `ln ‖T^N‖ / N` over
/// `N = 1, 2, 4, …`. `lower_log` is the largest sampled value of
/// `ln(v_{n+N}/v_n) / N`, a lower bound on `ln ‖T^N‖ / N` at the sampled `N`;
/// the sampled powers include the largest Gelfand power and, for the oscillating
/// weights, the witness indices, where this value is `ln c + 1/√n_k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecRadEstimate {
    pub lower_log: f64,
    pub upper_log: f64,
    pub powers_used: Vec<Index>,
    /// Power at which `lower_log` was attained.
    pub lower_power: Index,
    pub certified: bool,
    pub terms: Vec<GelfandTerm>,
}

impl SpecRadEstimate {
    pub fn lower(&self) -> f64 {
        self.lower_log.exp()
    }

    pub fn upper(&self) -> f64 {
        self.upper_log.exp()
    }
}

pub fn specrad_bounds(
    op: &ShiftOperator,
    max_power_exponent: u32,
    window: u64,
    witness_k: u32,
) -> Result<SpecRadEstimate> {
    if max_power_exponent > 40 {
        return Err(Error::Precondition(format!(
            "max power exponent {max_power_exponent} is beyond the supported 40"
        )));
    }
    let powers: Vec<u64> = (0..=max_power_exponent).map(|e| 1u64 << e).collect();
    let top = *powers.last().expect("at least N = 1");

    if let Some(s) = invariant_step(op) {
        let terms = powers
            .iter()
            .map(|&p| GelfandTerm {
                power: p,
                log_norm: s * p as f64,
                certified: true,
                root_log: s,
            })
            .collect();
        return Ok(SpecRadEstimate {
            lower_log: s,
            upper_log: s,
            powers_used: powers.iter().map(|&p| Index::new(p as i64)).collect(),
            lower_power: Index::new(top as i64),
            certified: true,
            terms,
        });
    }

    let table = LogWeightTable::build(&op.weights, window + top)?;
    let mut terms = Vec::with_capacity(powers.len());
    for &p in &powers {
        let cert = norm_power_with_table(op, &table, p, window)?;
        terms.push(GelfandTerm {
            power: p,
            log_norm: cert.log_norm(),
            certified: !cert.lower_bound_only,
            root_log: cert.log_norm() / p as f64,
        });
    }
    let certified = terms.iter().any(|t| t.certified);
    let upper_log = terms
        .iter()
        .filter(|t| t.certified || !certified)
        .map(|t| t.root_log)
        .fold(f64::INFINITY, f64::min);

    let mut lower_powers = vec![Index::new(top as i64)];
    if op.weights.paper_c().is_some() {
        for k in 1..=witness_k {
            lower_powers.push(witness_index(WitnessKind::Nk, k)?.index);
            lower_powers.push(witness_index(WitnessKind::Mk, k)?.index);
        }
    }
    let mut lower_log = f64::NEG_INFINITY;
    let mut lower_power = Index::new(top as i64);
    for power in &lower_powers {
        let value = sampled_gelfand_lower(op, power)?;
        if value > lower_log {
            lower_log = value;
            lower_power = power.clone();
        }
    }
    if certified && lower_log > upper_log {
        return Err(Error::Inconsistent(format!(
            "sampled lower bound {lower_log} exceeds certified upper bound {upper_log}"
        )));
    }
    let mut powers_used: Vec<Index> = powers.iter().map(|&p| Index::new(p as i64)).collect();
    powers_used.extend(lower_powers.into_iter().skip(1));
    Ok(SpecRadEstimate {
        lower_log,
        upper_log,
        powers_used,
        lower_power,
        certified,
        terms,
    })
}

/// `max_{n ∈ {0, ∓N}} ln(coefficient of T^N b_n) / N`, a lower bound on `ln ‖T^N‖ / N`.
fn sampled_gelfand_lower(op: &ShiftOperator, power: &Index) -> Result<f64> {
    let w = &op.weights;
    let zero = Index::new(0);
    let (a, b) = match op.kind.norm_class() {
        // ‖V^N‖ >= v_N/v_0 and v_0/v_{-N}
        PowerKind::Forward => (w.log_ratio(&zero, power)?, w.log_ratio(&(-power), power)?),
        // ‖V^{-N}‖ >= v_{-N}/v_0 and v_0/v_N
        _ => (w.log_ratio(&zero, &(-power))?, w.log_ratio(power, &(-power))?),
    };
    let best = if a >= b { a } else { b };
    let n = BigReal::from_bigint(power.as_bigint());
    Ok(best.div(&n, 128).to_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlipReport {
    pub samples: usize,
    /// Largest `|ln coefficient(R V R b_n) - ln coefficient(V^{-1} b_n)|`.
    pub max_deviation: f64,
    pub pass: bool,
}

pub const FLIP_TOLERANCE: f64 = 1e-14;

/// Checks `R V R = V^{-1}` on each `b_n`, with `R b_n = b_{-n}`, in the log domain.
pub fn flip_conjugate_check(weights: &WeightSequence, sample: &[i64]) -> Result<FlipReport> {
    for &n in sample {
        for m in [n, n - 1] {
            if weights.log_weight_dd(m)? != weights.log_weight_dd(-m)? {
                return Err(Error::Asymmetric { index: m });
            }
        }
    }
    let forward = ShiftOperator::new(weights.clone(), PowerKind::Forward);
    let inverse = ShiftOperator::new(weights.clone(), PowerKind::Inverse);
    let mut max_deviation = 0.0f64;
    for &n in sample {
        let (t1, l1) = forward.log_action(-n, 1)?;
        let (t2, l2) = inverse.log_action(n, 1)?;
        if -t1 != t2 {
            return Err(Error::Inconsistent(format!(
                "R V R b_{n} lands on b_{} but V^-1 b_{n} on b_{t2}",
                -t1
            )));
        }
        max_deviation = max_deviation.max((l1 - l2).abs().to_f64());
    }
    Ok(FlipReport {
        samples: sample.len(),
        max_deviation,
        pass: max_deviation <= FLIP_TOLERANCE,
    })
}
