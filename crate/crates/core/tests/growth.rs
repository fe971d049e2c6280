use krein_shift::bigreal::BigReal;
use krein_shift::growth::{
    classify_growth, orbit_log_norm, s_trivial_all_four, GrowthHorizon, GrowthQuery, GrowthStatus,
};
use krein_shift::shift_ops::{FinSuppVector, PowerKind, ShiftOperator};
use krein_shift::weights::{witness_index, Index, WeightSequence, WitnessKind};
use std::time::Instant;

fn sqrt_of(n: &Index) -> BigReal {
    BigReal::from_bigint(n.abs().as_bigint()).sqrt(n.bits() as usize + 128)
}

#[test]
fn orbit_at_first_witnesses() {
    let w = WeightSequence::paper(2.0).unwrap();
    let n1 = witness_index(WitnessKind::Nk, 1).unwrap().index;
    let g = GrowthQuery::new(w.clone(), PowerKind::Forward, 2.0).unwrap();
    let got = orbit_log_norm(&g, &n1).unwrap().to_f64();
    let want = n1.to_i64().unwrap() as f64 * std::f64::consts::LN_2 + (n1.to_i64().unwrap() as f64).sqrt();
    assert!(((got - want) / want).abs() < 1e-15);

    let m1 = witness_index(WitnessKind::Mk, 1).unwrap().index;
    let g = GrowthQuery::new(w, PowerKind::AdjointInverse, 2.0).unwrap();
    let got = orbit_log_norm(&g, &m1).unwrap().to_f64();
    let m = 2f64.powi(127);
    let want = m * std::f64::consts::LN_2 + m.sqrt();
    assert!(((got - want) / want).abs() < 1e-15);
}

#[test]
fn witnesses_for_all_kinds_and_c() {
    let t = Instant::now();
    for c in [1.0, 2.0, 10.0] {
        let r = s_trivial_all_four(&WeightSequence::paper(c).unwrap(), c, GrowthHorizon::default()).unwrap();
        assert!(r.all_trivial, "c={c}");
        for v in &r.verdicts {
            assert_eq!(v.witnesses.len(), 2);
            for wit in &v.witnesses {
                let root = sqrt_of(&wit.index);
                let rel = wit.excess.sub(&root, 4096).abs().div(&root, 128).to_f64();
                assert!(rel <= 1e-12, "c={c} {:?} rel={rel:e}", v.kind);
            }
            let neg = matches!(v.kind, PowerKind::Inverse | PowerKind::Adjoint);
            assert_eq!(v.witnesses[0].index.is_negative(), neg);
        }
    }
    assert!(t.elapsed().as_secs_f64() < 1.0, "{:?}", t.elapsed());
}

#[test]
fn bounded_at_two_e_and_stable_under_doubling() {
    let w = WeightSequence::paper(2.0).unwrap();
    let a = 2.0 * std::f64::consts::E;
    let q = GrowthQuery::new(w, PowerKind::Forward, a).unwrap();
    let v = classify_growth(&q).unwrap();
    assert_eq!(v.status, GrowthStatus::Bounded);
    assert!(v.tail_argument);
    let m = v.log_m_prime.unwrap();
    assert!(m.abs() < 1e-12, "{m}");
    let v2 = classify_growth(&q.clone().with_horizon(q.horizon.doubled())).unwrap();
    assert_eq!(v2.status, GrowthStatus::Bounded);
    assert_eq!(v2.log_m_prime, v.log_m_prime);
}

#[test]
fn inverse_excess_equals_forward() {
    let w = WeightSequence::paper(2.0).unwrap();
    let f = GrowthQuery::new(w.clone(), PowerKind::Forward, 2.0).unwrap();
    let i = GrowthQuery::new(w, PowerKind::Inverse, 2.0).unwrap();
    for n in [1i64, 5, 77, 1 << 20, 1 << 55] {
        let n = Index::new(n);
        assert_eq!(f.excess(&n).unwrap(), i.excess(&n).unwrap());
    }
}

#[test]
fn orbit_matches_shift_action() {
    let w = WeightSequence::paper(2.0).unwrap();
    let op = ShiftOperator::forward(w.clone());
    let q = GrowthQuery::new(w, PowerKind::Forward, 2.0).unwrap();
    for n in 0..=64 {
        let y = op.apply_power(n, &FinSuppVector::<f64>::basis(0)).unwrap();
        let want = orbit_log_norm(&q, &Index::new(n)).unwrap().to_f64().exp();
        assert!(((y.norm() - want) / want).abs() < 1e-10, "N={n}");
    }
}

#[test]
fn paper_examples_at_other_rates() {
    let w = WeightSequence::paper(2.0).unwrap();
    let r = s_trivial_all_four(&w, 4.0, GrowthHorizon::default()).unwrap();
    assert_eq!(r.verdicts[0].status, GrowthStatus::Bounded);
    assert!(!r.all_trivial);
    // just above c the dense scan is capped and the analytic sup takes over
    let q = GrowthQuery::new(w, PowerKind::AdjointInverse, 2.0001).unwrap();
    let v = classify_growth(&q).unwrap();
    assert_eq!(v.status, GrowthStatus::Bounded);
    assert!(v.log_m_prime.unwrap() >= v.scanned_max_excess.unwrap());
}
