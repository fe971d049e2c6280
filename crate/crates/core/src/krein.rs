//! The doubled space `Ĥ = H ⊕ H` with the swap form
//! `{f ⊕ g, f' ⊕ g'} = (f, g') + (g, f')`, the operator `V̂ = V ⊕ V*^{-1}`
//! and the spans `L± = span{V̂^N (b_0 ⊕ ±b_0)}`.
//!
//! `V̂^N (b_0 ⊕ ±b_0) = (v_N/v_0) b_N ⊕ ±(v_0/v_N) b_N` is supported on `{N}`,
//! so generators are indexed by their support point.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::shift_ops::{exp_dd, FinSuppVector, PowerKind, ShiftOperator};
use crate::weights::WeightSequence;

#[derive(Clone, Debug, PartialEq)]
pub struct DoubledVector<S> {
    pub plus_leg: FinSuppVector<S>,
    pub minus_leg: FinSuppVector<S>,
}

impl<S: Scalar> DoubledVector<S> {
    pub fn new(plus_leg: FinSuppVector<S>, minus_leg: FinSuppVector<S>) -> Self {
        DoubledVector { plus_leg, minus_leg }
    }

    pub fn zero() -> Self {
        Self::new(FinSuppVector::zero(), FinSuppVector::zero())
    }

    /// `b_0 ⊕ ±b_0`
    pub fn seed(sign: Sign) -> Self {
        Self::new(FinSuppVector::basis(0), FinSuppVector::basis(0).scale(sign.value()))
    }

    /// The leg swap `J(f ⊕ g) = g ⊕ f`.
    pub fn swap(&self) -> Self {
        Self::new(self.minus_leg.clone(), self.plus_leg.clone())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.plus_leg.add(&o.plus_leg), self.minus_leg.add(&o.minus_leg))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.plus_leg.sub(&o.plus_leg), self.minus_leg.sub(&o.minus_leg))
    }

    pub fn scale(&self, s: S) -> Self {
        Self::new(self.plus_leg.scale(s), self.minus_leg.scale(s))
    }

    /// Hilbert norm on `H ⊕ H`.
    pub fn norm(&self) -> S {
        (self.plus_leg.norm_sqr() + self.minus_leg.norm_sqr()).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.plus_leg.is_zero() && self.minus_leg.is_zero()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<S: Scalar>(self) -> S {
        match self {
            Sign::Plus => S::one(),
            Sign::Minus => -S::one(),
        }
    }
}

/// `{x, y} = (plus(x), minus(y)) + (minus(x), plus(y))`.
pub fn indefinite_inner<S: Scalar>(x: &DoubledVector<S>, y: &DoubledVector<S>) -> S {
    x.plus_leg.inner(&y.minus_leg) + x.minus_leg.inner(&y.plus_leg)
}

/// `Σ |termwise products|` of [`indefinite_inner`], the scale for relative deviations.
fn indefinite_inner_abs<S: Scalar>(x: &DoubledVector<S>, y: &DoubledVector<S>) -> S {
    fn abs_inner<S: Scalar>(a: &FinSuppVector<S>, b: &FinSuppVector<S>) -> S {
        a.iter().map(|(n, v)| (v * b.get(n)).abs()).sum()
    }
    abs_inner(&x.plus_leg, &y.minus_leg) + abs_inner(&x.minus_leg, &y.plus_leg)
}

/// `V̂ = V ⊕ V*^{-1}`.
#[derive(Clone, Debug)]
pub struct DoubledOperator {
    forward: ShiftOperator,
    adjoint_inverse: ShiftOperator,
}

impl DoubledOperator {
    pub fn new(base_weights: WeightSequence) -> Self {
        DoubledOperator {
            forward: ShiftOperator::new(base_weights.clone(), PowerKind::Forward),
            adjoint_inverse: ShiftOperator::new(base_weights, PowerKind::AdjointInverse),
        }
    }

    pub fn base_weights(&self) -> &WeightSequence {
        &self.forward.weights
    }

    pub fn hat_apply<S: Scalar>(&self, power: i64, x: &DoubledVector<S>) -> Result<DoubledVector<S>> {
        Ok(DoubledVector::new(
            self.forward.apply_power(power, &x.plus_leg)?,
            self.adjoint_inverse.apply_power(power, &x.minus_leg)?,
        ))
    }

    /// `V̂^N (b_0 ⊕ ±b_0)`.
    pub fn generator<S: Scalar>(&self, sign: Sign, power: i64) -> Result<DoubledVector<S>> {
        self.hat_apply(power, &DoubledVector::seed(sign))
    }

    /// `ln(v_n / v_0)`.
    fn log_ratio_to_origin(&self, n: i64) -> Result<f64> {
        Ok(self.forward.log_action(0, n)?.1.to_f64())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JUnitarityReport {
    pub samples: usize,
    pub max_relative_deviation: f64,
    pub pass: bool,
}

pub const J_UNITARITY_TOLERANCE: f64 = 1e-12;

/// `{V̂^N x, V̂^N y} = {x, y}` on every sample.
pub fn j_unitarity_check<S: Scalar>(
    op: &DoubledOperator,
    samples: &[(DoubledVector<S>, DoubledVector<S>, i64)],
) -> Result<JUnitarityReport> {
    let mut worst = 0.0f64;
    for (x, y, n) in samples {
        let (hx, hy) = (op.hat_apply(*n, x)?, op.hat_apply(*n, y)?);
        let before = indefinite_inner(x, y).to_f64_lossy();
        let after = indefinite_inner(&hx, &hy).to_f64_lossy();
        let scale = indefinite_inner_abs(x, y)
            .to_f64_lossy()
            .max(indefinite_inner_abs(&hx, &hy).to_f64_lossy());
        let dev = if scale == 0.0 { (after - before).abs() } else { (after - before).abs() / scale };
        worst = worst.max(dev);
    }
    Ok(JUnitarityReport {
        samples: samples.len(),
        max_relative_deviation: worst,
        pass: worst <= J_UNITARITY_TOLERANCE,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Lemma7Identity {
    /// `{g+(N), g+(N)} = 2`
    PlusDiagonal,
    /// `{g+(N), g+(M)} = 0`, `M ≠ N`
    PlusOrthogonal,
    /// `{g-(N), g-(N)} = -2`
    MinusDiagonal,
    /// `{g-(N), g-(M)} = 0`, `M ≠ N`
    MinusOrthogonal,
    /// `{g+(N), g-(M)} = 0`
    CrossOrthogonal,
}

impl Lemma7Identity {
    pub const ALL: [Lemma7Identity; 5] = [
        Lemma7Identity::PlusDiagonal,
        Lemma7Identity::PlusOrthogonal,
        Lemma7Identity::MinusDiagonal,
        Lemma7Identity::MinusOrthogonal,
        Lemma7Identity::CrossOrthogonal,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityResult {
    pub identity_id: Lemma7Identity,
    pub range: [i64; 2],
    pub max_abs_deviation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryReport {
    pub identities: Vec<IdentityResult>,
    pub pass: bool,
}

pub const BATTERY_TOLERANCE: f64 = 1e-12;

/// All five generator identities for `N, M` in `range`.
pub fn lemma7_battery(op: &DoubledOperator, range: RangeInclusive<i64>) -> Result<BatteryReport> {
    let (lo, hi) = (*range.start(), *range.end());
    if lo > hi {
        return Err(Error::Precondition(format!("empty range [{lo}, {hi}]")));
    }
    let plus: Vec<DoubledVector<f64>> = range.clone().map(|n| op.generator(Sign::Plus, n)).collect::<Result<_>>()?;
    let minus: Vec<DoubledVector<f64>> = range.map(|n| op.generator(Sign::Minus, n)).collect::<Result<_>>()?;
    let mut dev = [0.0f64; 5];
    for i in 0..plus.len() {
        for j in 0..plus.len() {
            if i == j {
                dev[0] = dev[0].max((indefinite_inner(&plus[i], &plus[j]) - 2.0).abs());
                dev[2] = dev[2].max((indefinite_inner(&minus[i], &minus[j]) + 2.0).abs());
            } else {
                dev[1] = dev[1].max(indefinite_inner(&plus[i], &plus[j]).abs());
                dev[3] = dev[3].max(indefinite_inner(&minus[i], &minus[j]).abs());
            }
            dev[4] = dev[4].max(indefinite_inner(&plus[i], &minus[j]).abs());
        }
    }
    let identities: Vec<IdentityResult> = Lemma7Identity::ALL
        .iter()
        .zip(dev)
        .map(|(&id, d)| IdentityResult {
            identity_id: id,
            range: [lo, hi],
            max_abs_deviation: d,
            pass: d <= BATTERY_TOLERANCE,
        })
        .collect();
    let pass = identities.iter().all(|r| r.pass);
    Ok(BatteryReport { identities, pass })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership<S> {
    /// Generator coefficients `α_N`, keyed by support point.
    Member(BTreeMap<i64, S>),
    /// Distance from the span, carried on the minus leg.
    NonMember(DoubledVector<S>),
}

impl<S> Membership<S> {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

pub const MEMBERSHIP_TOLERANCE: f64 = 1e-12;

/// `x ∈ L±` iff `minus(n) = ±(v_0²/v_n²) plus(n)` on the joint support; then
/// `x = Σ α_n V̂^n (b_0 ⊕ ±b_0)` with `α_n = plus(n) v_0/v_n`.
pub fn span_membership<S: Scalar>(op: &DoubledOperator, sign: Sign, x: &DoubledVector<S>) -> Result<Membership<S>> {
    let support: std::collections::BTreeSet<i64> = x.plus_leg.support().chain(x.minus_leg.support()).collect();
    let mut coefficients = BTreeMap::new();
    let mut residual = FinSuppVector::zero();
    for n in support {
        let l = op.log_ratio_to_origin(n)?;
        let p = x.plus_leg.get(n).to_f64_lossy();
        let m = x.minus_leg.get(n).to_f64_lossy();
        let expected = sign.value::<f64>() * (-2.0 * l).exp() * p;
        if (m - expected).abs() > MEMBERSHIP_TOLERANCE * (m.abs() + expected.abs()) {
            residual.set(n, S::from_f64_lossy(m - expected));
        }
        if p != 0.0 {
            coefficients.insert(n, S::from_f64_lossy(p * (-l).exp()));
        }
    }
    Ok(if residual.is_zero() {
        Membership::Member(coefficients)
    } else {
        Membership::NonMember(DoubledVector::new(FinSuppVector::zero(), residual))
    })
}

/// `b_N ⊕ 0 = α (g+(N) + g-(N))` and `0 ⊕ b_N = β (g+(N) − g-(N))`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityWitness {
    pub power: i64,
    /// `ln α = ln(v_0 / (2 v_N))`
    pub plus_leg_coefficient_log: f64,
    /// `ln β = ln(v_N / (2 v_0))`
    pub minus_leg_coefficient_log: f64,
    /// Relative reconstruction errors; absent when the vectors overflow and only the logs are reported.
    pub plus_leg_error: Option<f64>,
    pub minus_leg_error: Option<f64>,
}

impl DensityWitness {
    pub fn within(&self, tol: f64) -> bool {
        matches!((self.plus_leg_error, self.minus_leg_error), (Some(a), Some(b)) if a <= tol && b <= tol)
    }
}

pub fn density_witness(op: &DoubledOperator, power: i64) -> Result<DensityWitness> {
    let l = op.forward.log_action(0, power)?.1;
    let ln2 = std::f64::consts::LN_2;
    let alpha_log = -l.to_f64() - ln2;
    let beta_log = l.to_f64() - ln2;
    let mut w = DensityWitness {
        power,
        plus_leg_coefficient_log: alpha_log,
        minus_leg_coefficient_log: beta_log,
        plus_leg_error: None,
        minus_leg_error: None,
    };
    let (gp, gm) = match (op.generator::<f64>(Sign::Plus, power), op.generator::<f64>(Sign::Minus, power)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(Error::CoefficientOverflow { .. }), _) | (_, Err(Error::CoefficientOverflow { .. })) => return Ok(w),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let alpha = exp_dd(-l) * 0.5;
    let beta = exp_dd(l) * 0.5;
    if !alpha.is_finite() || !beta.is_finite() {
        return Ok(w);
    }
    let bn = FinSuppVector::basis(power);
    let plus_target = DoubledVector::new(bn.clone(), FinSuppVector::zero());
    let minus_target = DoubledVector::new(FinSuppVector::zero(), bn);
    w.plus_leg_error = Some(gp.add(&gm).scale(alpha).sub(&plus_target).norm());
    w.minus_leg_error = Some(gp.sub(&gm).scale(beta).sub(&minus_target).norm());
    Ok(w)
}

/// `{x, x}` for `x = Σ α_N V̂^N (b_0 ⊕ ±b_0)`.
pub fn sign_definiteness_check<S: Scalar>(
    op: &DoubledOperator,
    sign: Sign,
    coefficients: &BTreeMap<i64, S>,
) -> Result<S> {
    if coefficients.values().all(|&a| a == S::zero()) {
        return Err(Error::Precondition("all coefficients are zero".into()));
    }
    let mut x = DoubledVector::zero();
    for (&n, &a) in coefficients {
        x = x.add(&op.generator::<S>(sign, n)?.scale(a));
    }
    Ok(indefinite_inner(&x, &x))
}

/// Seeded random vectors for the identity batteries.
pub struct SampleGenerator {
    rng: ChaCha8Rng,
}

impl SampleGenerator {
    pub fn new(seed: u64) -> Self {
        SampleGenerator {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Up to `max_terms` coefficients in `[-1, 1]` at indices in `support`.
    pub fn vector(&mut self, support: RangeInclusive<i64>, max_terms: usize) -> FinSuppVector<f64> {
        let terms = self.rng.gen_range(1..=max_terms.max(1));
        let mut v = FinSuppVector::zero();
        while v.len() < terms {
            let n = self.rng.gen_range(support.clone());
            v.set(n, self.rng.gen_range(-1.0..=1.0));
        }
        v
    }

    pub fn doubled(&mut self, support: RangeInclusive<i64>, max_terms: usize) -> DoubledVector<f64> {
        DoubledVector::new(self.vector(support.clone(), max_terms), self.vector(support, max_terms))
    }

    pub fn power(&mut self, powers: RangeInclusive<i64>) -> i64 {
        self.rng.gen_range(powers)
    }

    /// Generator coefficients, at least one nonzero.
    pub fn coefficients(&mut self, powers: RangeInclusive<i64>, max_terms: usize) -> BTreeMap<i64, f64> {
        self.vector(powers, max_terms).iter().collect()
    }

    pub fn j_samples(
        &mut self,
        count: usize,
        support: RangeInclusive<i64>,
        powers: RangeInclusive<i64>,
    ) -> Vec<(DoubledVector<f64>, DoubledVector<f64>, i64)> {
        (0..count)
            .map(|_| {
                let x = self.doubled(support.clone(), 8);
                let y = self.doubled(support.clone(), 8);
                (x, y, self.power(powers.clone()))
            })
            .collect()
    }
}
