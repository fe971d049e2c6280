//! Orbit growth of `b_0` against a rate `a`.
//!
//! `S(T, a) ≠ {0}` for a weighted shift exactly when `‖T^N b_0‖ ≤ M' a^N` for
//! all `N ≥ 0`, so everything reduces to the excess
//! `excess(N) = ln ‖T^N b_0‖ − N ln a`.

use serde::{Serialize, Serializer};

use crate::bigreal::BigReal;
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::shift_ops::PowerKind;
use crate::weights::{witness_index, Index, WeightKind, WeightSequence, WitnessKind, MAX_WITNESS_K};

/// Largest `N` scanned densely when bounding the excess of oscillating weights.
pub const DENSE_SCAN_LIMIT: u64 = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthHorizon {
    /// The scan schedule is `N = 0, 1, 2, 4, …, 2^scan_exponent`.
    pub scan_exponent: u32,
    /// Witness indices `k = 1..=witness_k`.
    pub witness_k: u32,
}

impl Default for GrowthHorizon {
    fn default() -> Self {
        GrowthHorizon {
            scan_exponent: 20,
            witness_k: 2,
        }
    }
}

impl GrowthHorizon {
    /// Same witnesses, twice the largest scanned `N`.
    pub fn doubled(self) -> Self {
        GrowthHorizon {
            scan_exponent: self.scan_exponent + 1,
            ..self
        }
    }
}

#[derive(Clone, Debug)]
pub struct GrowthQuery {
    pub weights: WeightSequence,
    pub kind: PowerKind,
    pub rate: f64,
    pub horizon: GrowthHorizon,
}

impl GrowthQuery {
    pub fn new(weights: WeightSequence, kind: PowerKind, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidWeight(format!("rate must be positive and finite, got {rate}")));
        }
        Ok(GrowthQuery {
            weights,
            kind,
            rate,
            horizon: GrowthHorizon::default(),
        })
    }

    pub fn with_horizon(mut self, horizon: GrowthHorizon) -> Self {
        self.horizon = horizon;
        self
    }

    fn work_bits(&self, n: &Index) -> usize {
        self.weights.precision_bits() as usize + n.bits() as usize + 64
    }

    /// `excess(N) = ln ‖T^N b_0‖ − N ln a`.
    pub fn excess(&self, n: &Index) -> Result<BigReal> {
        let p = self.work_bits(n);
        let orbit = orbit_log_norm(self, n)?;
        let ln_a = BigReal::from_f64(self.rate, 64).ln(p);
        let linear = BigReal::from_bigint(n.as_bigint()).mul(&ln_a, p);
        Ok(orbit.sub(&linear, p))
    }
}

/// `ln ‖T^N b_0‖` for `N ≥ 0`.
pub fn orbit_log_norm(q: &GrowthQuery, n: &Index) -> Result<BigReal> {
    if n.is_negative() {
        return Err(Error::NegativeArgument(n.to_string()));
    }
    let zero = Index::new(0);
    let w = &q.weights;
    Ok(match q.kind {
        PowerKind::Forward => w.log_ratio(&zero, n)?,
        PowerKind::AdjointInverse => w.log_ratio(&zero, n)?.neg(),
        PowerKind::Inverse => w.log_ratio(&zero, &(-n))?,
        PowerKind::Adjoint => w.log_ratio(&zero, &(-n))?.neg(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GrowthStatus {
    Bounded,
    Unbounded,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthWitness {
    /// Power `N`; signed for the kinds that move the support left.
    #[serde(rename = "index_decimal", serialize_with = "decimal")]
    pub index: Index,
    pub excess_log: f64,
    #[serde(skip)]
    pub excess: BigReal,
}

fn decimal<S: Serializer>(n: &Index, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_string())
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthVerdict {
    pub kind: PowerKind,
    pub rate_log: f64,
    pub status: GrowthStatus,
    /// `ln M'` for bounded verdicts.
    pub log_m_prime: Option<f64>,
    pub witnesses: Vec<GrowthWitness>,
    pub horizon: GrowthHorizon,
    /// Largest excess seen on the scan schedule.
    pub scanned_max_excess: Option<f64>,
    /// Set when an analytic bound covers every `N` past the scan.
    pub tail_argument: bool,
    pub note: String,
}

impl GrowthVerdict {
    fn new(q: &GrowthQuery, status: GrowthStatus, note: impl Into<String>) -> Self {
        GrowthVerdict {
            kind: q.kind,
            rate_log: q.rate.ln(),
            status,
            log_m_prime: None,
            witnesses: Vec::new(),
            horizon: q.horizon,
            scanned_max_excess: None,
            tail_argument: false,
            note: note.into(),
        }
    }
}

fn schedule(h: GrowthHorizon) -> impl Iterator<Item = Index> {
    std::iter::once(Index::new(0)).chain((0..=h.scan_exponent.min(62)).map(|e| Index::new(1i64 << e)))
}

fn scan_max(q: &GrowthQuery) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for n in schedule(q.horizon) {
        best = best.max(q.excess(&n)?.to_f64());
    }
    Ok(best)
}

pub fn classify_growth(q: &GrowthQuery) -> Result<GrowthVerdict> {
    match q.weights.kind() {
        WeightKind::UserRule(_) => {
            let mut v = GrowthVerdict::new(q, GrowthStatus::Inconclusive, "no tail structure for user weights");
            v.scanned_max_excess = Some(scan_max(q)?);
            Ok(v)
        }
        WeightKind::Geometric { .. } | WeightKind::Constant => classify_invariant(q),
        WeightKind::PaperLemma6 { c } => {
            if q.rate <= *c {
                classify_witnesses(q)
            } else {
                classify_dominated(q, *c)
            }
        }
    }
}

/// Translation-invariant weights: the excess is exactly `N d` with `d` the per-step excess.
fn classify_invariant(q: &GrowthQuery) -> Result<GrowthVerdict> {
    let step = q.weights.unit_log_ratio().expect("translation-invariant weights");
    let step = match q.kind {
        PowerKind::Forward | PowerKind::Adjoint => step,
        PowerKind::Inverse | PowerKind::AdjointInverse => -step,
    };
    // ln a in the same arithmetic as the weights' own ln r, so a = r cancels exactly
    let d = step - Dd::from_f64(q.rate).ln();
    if d <= Dd::ZERO {
        let mut v = GrowthVerdict::new(q, GrowthStatus::Bounded, "excess is N·d with d <= 0");
        v.log_m_prime = Some(0.0);
        v.scanned_max_excess = Some(0.0);
        v.tail_argument = true;
        return Ok(v);
    }
    let mut v = GrowthVerdict::new(q, GrowthStatus::Unbounded, "excess is N·d with d > 0");
    for n in schedule(q.horizon).skip(1) {
        let n_f = n.to_i64().expect("schedule fits i64") as f64;
        let e = d.mul_f64(n_f).to_f64();
        v.witnesses.push(GrowthWitness {
            index: signed_witness(q.kind, n),
            excess_log: e,
            excess: BigReal::from_f64(e, 64),
        });
    }
    v.scanned_max_excess = v.witnesses.last().map(|w| w.excess_log);
    v.tail_argument = true;
    Ok(v)
}

fn signed_witness(kind: PowerKind, n: Index) -> Index {
    match kind {
        PowerKind::Forward | PowerKind::AdjointInverse => n,
        PowerKind::Inverse | PowerKind::Adjoint => -&n,
    }
}

/// `a <= c`: the excess along the witness schedule.
fn classify_witnesses(q: &GrowthQuery) -> Result<GrowthVerdict> {
    let k_max = q.horizon.witness_k.min(MAX_WITNESS_K);
    if k_max < 2 {
        return Ok(GrowthVerdict::new(
            q,
            GrowthStatus::Inconclusive,
            "at least two witnesses are needed",
        ));
    }
    let wk = match q.kind {
        PowerKind::Forward | PowerKind::Inverse => WitnessKind::Nk,
        PowerKind::AdjointInverse | PowerKind::Adjoint => WitnessKind::Mk,
    };
    let mut witnesses = Vec::new();
    for k in 1..=k_max {
        let n = witness_index(wk, k)?.index;
        let excess = q.excess(&n)?;
        witnesses.push(GrowthWitness {
            index: signed_witness(q.kind, n),
            excess_log: excess.to_f64(),
            excess,
        });
    }
    let increasing = witnesses
        .windows(2)
        .all(|p| p[1].excess > p[0].excess && !p[0].excess.is_negative());
    let mut v = if increasing {
        GrowthVerdict::new(q, GrowthStatus::Unbounded, "excess grows along the witness schedule")
    } else {
        GrowthVerdict::new(q, GrowthStatus::Inconclusive, "witness excess is not increasing")
    };
    v.witnesses = witnesses;
    Ok(v)
}

/// `a > c`: every kind has `excess(N) <= √N − N d` with `d = ln a − ln c > 0`.
fn classify_dominated(q: &GrowthQuery, c: f64) -> Result<GrowthVerdict> {
    let d = (q.rate.ln() - c.ln()) * (1.0 - 1e-12);
    let n_star = 1.0 / (4.0 * d * d);
    let n_dense = (n_star.ceil() as u64).min(DENSE_SCAN_LIMIT);

    let mut scanned = f64::NEG_INFINITY;
    let ln_a = Dd::from_f64(q.rate).ln();
    for n in 0..=n_dense as i64 {
        let lam = q.weights.log_weight_dd(n)?;
        let orbit = match q.kind {
            PowerKind::Forward | PowerKind::Inverse => lam,
            PowerKind::AdjointInverse | PowerKind::Adjoint => -lam,
        };
        scanned = scanned.max((orbit - ln_a.mul_f64(n as f64)).to_f64());
    }
    scanned = scanned.max(scan_max(q)?);

    let g = |n: f64| n.sqrt() - d * n;
    let first_tail = (n_dense + 1) as f64;
    let tail_sup = if first_tail >= n_star { g(first_tail) } else { 1.0 / (4.0 * d) };
    let log_m_prime = scanned.max(tail_sup);

    let mut v = GrowthVerdict::new(
        q,
        GrowthStatus::Bounded,
        format!("dense scan to N = {n_dense}; excess <= √N − {d:.6e}·N beyond"),
    );
    v.log_m_prime = Some(log_m_prime);
    v.scanned_max_excess = Some(scanned);
    v.tail_argument = true;
    Ok(v)
}

#[derive(Clone, Debug, Serialize)]
pub struct STrivialReport {
    pub rate_log: f64,
    pub verdicts: Vec<GrowthVerdict>,
    /// All four verdicts are UNBOUNDED, i.e. every `S(T, a)` is trivial.
    pub all_trivial: bool,
}

/// [`classify_growth`] for `V`, `V^{-1}`, `V*^{-1}`, `V*` at one rate.
pub fn s_trivial_all_four(w: &WeightSequence, rate: f64, horizon: GrowthHorizon) -> Result<STrivialReport> {
    if w.paper_c().is_none() {
        return Err(Error::Precondition(format!(
            "S-triviality report needs oscillating paper weights, got {w}"
        )));
    }
    let mut verdicts = Vec::with_capacity(4);
    for kind in PowerKind::ALL {
        let q = GrowthQuery::new(w.clone(), kind, rate)?.with_horizon(horizon);
        verdicts.push(classify_growth(&q)?);
    }
    let all_trivial = verdicts.iter().all(|v| v.status == GrowthStatus::Unbounded);
    Ok(STrivialReport {
        rate_log: rate.ln(),
        verdicts,
        all_trivial,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(w: WeightSequence, kind: PowerKind, a: f64) -> GrowthQuery {
        GrowthQuery::new(w, kind, a).unwrap()
    }

    #[test]
    fn constant_orbit_is_flat() {
        let g = q(WeightSequence::constant(), PowerKind::Forward, 1.0);
        assert_eq!(orbit_log_norm(&g, &Index::new(17)).unwrap().to_f64(), 0.0);
    }

    #[test]
    fn rate_must_be_positive() {
        assert!(GrowthQuery::new(WeightSequence::constant(), PowerKind::Forward, 0.0).is_err());
        assert!(GrowthQuery::new(WeightSequence::constant(), PowerKind::Forward, -1.0).is_err());
    }

    #[test]
    fn geometric_at_its_rate_is_bounded() {
        let v = classify_growth(&q(WeightSequence::geometric(2.0).unwrap(), PowerKind::Forward, 2.0)).unwrap();
        assert_eq!(v.status, GrowthStatus::Bounded);
        assert_eq!(v.log_m_prime, Some(0.0));
    }

    #[test]
    fn geometric_below_its_rate_is_unbounded() {
        let v = classify_growth(&q(WeightSequence::geometric(2.0).unwrap(), PowerKind::Forward, 1.5)).unwrap();
        assert_eq!(v.status, GrowthStatus::Unbounded);
        // V^{-1} of geometric(2) contracts
        let v = classify_growth(&q(WeightSequence::geometric(2.0).unwrap(), PowerKind::Inverse, 1.0)).unwrap();
        assert_eq!(v.status, GrowthStatus::Bounded);
    }

    #[test]
    fn user_weights_are_inconclusive() {
        let w: WeightSequence = "user:logs=0,0.3".parse().unwrap();
        let v = classify_growth(&q(w, PowerKind::Forward, 1.5)).unwrap();
        assert_eq!(v.status, GrowthStatus::Inconclusive);
    }

    #[test]
    fn paper_rate_four_is_bounded() {
        let w = WeightSequence::paper(2.0).unwrap();
        let v = classify_growth(&q(w, PowerKind::Forward, 4.0)).unwrap();
        assert_eq!(v.status, GrowthStatus::Bounded);
        assert!(v.tail_argument);
    }

    #[test]
    fn one_witness_is_not_enough() {
        let w = WeightSequence::paper(2.0).unwrap();
        let g = q(w, PowerKind::Forward, 2.0).with_horizon(GrowthHorizon {
            scan_exponent: 4,
            witness_k: 1,
        });
        assert_eq!(classify_growth(&g).unwrap().status, GrowthStatus::Inconclusive);
    }

    #[test]
    fn s_trivial_needs_paper_weights() {
        assert!(s_trivial_all_four(&WeightSequence::constant(), 1.0, GrowthHorizon::default()).is_err());
    }
}
