use serde::Serialize;
use serde_json::json;

use krein_shift::growth::{classify_growth, s_trivial_all_four, GrowthHorizon, GrowthQuery, GrowthStatus, GrowthVerdict};
use krein_shift::krein::{
    density_witness, j_unitarity_check, lemma7_battery, sign_definiteness_check, BatteryReport, DensityWitness,
    DoubledOperator, JUnitarityReport, SampleGenerator, Sign,
};
use krein_shift::shift_ops::{flip_conjugate_check, norm_power, specrad_bounds, SpecRadEstimate};
use krein_shift::weights::{Index, WeightKind};
use krein_shift::{Error, PowerKind, Result, ShiftOperator};

use crate::report::{num, Report, Table};
use crate::{LemmaId, RunConfig, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, EXIT_UNCERTIFIED};

const J_SAMPLES: usize = 200;
const J_SUPPORT: i64 = 50;
const SIGN_SETS: usize = 50;
const DENSITY_TOLERANCE: f64 = 1e-12;
const SIGN_TOLERANCE: f64 = 1e-12;
const FLIP_RANGE: i64 = 1000;
const TAIL_WINDOWS: [u64; 3] = [100, 10_000, 1_000_000];

pub fn lemma_label(id: LemmaId) -> &'static str {
    match id {
        LemmaId::L1 => "1",
        LemmaId::L2 => "2",
        LemmaId::L3 => "3",
        LemmaId::L4 => "4",
        LemmaId::L5 => "5",
        LemmaId::L6 => "6",
        LemmaId::L7 => "7",
        LemmaId::Thm1 => "thm1",
    }
}

fn pass_code(ok: bool) -> u8 {
    if ok {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

pub fn norm(cfg: &RunConfig) -> Result<Report> {
    let op = ShiftOperator::forward(cfg.weights.clone());
    let cert = norm_power(&op, cfg.n, cfg.window)?;
    let text = vec![
        format!("N                 {}", cert.power),
        format!("window            {}", cert.window),
        format!("window_sup_log    {}", num(Some(cert.window_sup_log))),
        format!("tail_bound_log    {}", num(cert.tail_bound_log)),
        match cert.certified {
            Some(v) => format!("certified_log     {} (norm {})", num(Some(v)), v.exp()),
            None => "certified_log     lower bound only".into(),
        },
    ];
    let mut table = Table::new(&["N", "window", "window_sup_log", "tail_bound_log", "certified_log_norm"]);
    table.push(vec![
        cert.power.to_string(),
        cert.window.to_string(),
        num(Some(cert.window_sup_log)),
        num(cert.tail_bound_log),
        num(cert.certified),
    ]);
    let code = if cert.lower_bound_only { EXIT_UNCERTIFIED } else { EXIT_PASS };
    Ok(Report::new(code, &cert, text, table))
}

fn specrad_for(cfg: &RunConfig, kind: PowerKind) -> Result<SpecRadEstimate> {
    let op = ShiftOperator::new(cfg.weights.clone(), kind);
    specrad_bounds(&op, cfg.max_power_exponent, cfg.window, cfg.witness_k_max)
}

fn specrad_json(e: &SpecRadEstimate) -> serde_json::Value {
    json!({
        "estimate": e,
        "lower": e.lower(),
        "upper": e.upper(),
    })
}

pub fn specrad(cfg: &RunConfig) -> Result<Report> {
    let e = specrad_for(cfg, PowerKind::Forward)?;
    let mut text = vec![format!("r(V) in [{}, {}]", e.lower(), e.upper())];
    text.push(format!("lower attained at N = {}", e.lower_power));
    if !e.certified {
        text.push("upper value is a window lower bound, not certified".into());
    }
    let mut table = Table::new(&["N", "log_norm", "root_estimate"]);
    for t in &e.terms {
        text.push(format!("N = {:<6} ln‖V^N‖ = {:<24} ‖V^N‖^(1/N) = {}", t.power, t.log_norm, t.root_log.exp()));
        table.push(vec![t.power.to_string(), num(Some(t.log_norm)), num(Some(t.root_log.exp()))]);
    }
    let code = if e.certified { EXIT_PASS } else { EXIT_UNCERTIFIED };
    Ok(Report::new(code, specrad_json(&e), text, table))
}

fn growth_verdicts(cfg: &RunConfig) -> Result<Vec<GrowthVerdict>> {
    let horizon = GrowthHorizon {
        scan_exponent: cfg.max_power_exponent,
        witness_k: cfg.witness_k_max,
    };
    PowerKind::ALL
        .iter()
        .map(|&kind| {
            let q = GrowthQuery::new(cfg.weights.clone(), kind, cfg.rate)?.with_horizon(horizon);
            classify_growth(&q)
        })
        .collect()
}

fn short_index(n: &Index) -> String {
    let s = n.to_string();
    let digits = s.trim_start_matches('-').len();
    if digits <= 24 {
        return s;
    }
    format!("{}...{} ({digits} digits)", &s[..s.len() - digits + 8], &s[s.len() - 8..])
}

fn growth_lines(verdicts: &[GrowthVerdict], text: &mut Vec<String>, table: &mut Table) {
    for v in verdicts {
        let status = serde_json::to_value(v.status).expect("status serializes");
        let status = status.as_str().unwrap_or_default().to_string();
        let extra = match v.log_m_prime {
            Some(m) => format!("ln M' = {m}"),
            None => format!("{} witnesses", v.witnesses.len()),
        };
        text.push(format!("S({}, a): {status:<12} {extra}", v.kind));
        for w in &v.witnesses {
            text.push(format!("    N = {}  ln excess = {:e}", short_index(&w.index), w.excess_log));
            table.push(vec![
                v.kind.symbol().into(),
                status.clone(),
                num(v.log_m_prime),
                w.index.to_string(),
                num(Some(w.excess_log)),
            ]);
        }
        if v.witnesses.is_empty() {
            table.push(vec![v.kind.symbol().into(), status, num(v.log_m_prime), String::new(), String::new()]);
        }
    }
}

pub fn growth(cfg: &RunConfig) -> Result<Report> {
    let verdicts = growth_verdicts(cfg)?;
    let mut text = vec![format!("rate a = {}", cfg.rate)];
    let mut table = Table::new(&["kind", "status", "log_m_prime", "index_decimal", "excess_log"]);
    growth_lines(&verdicts, &mut text, &mut table);
    let inconclusive = verdicts.iter().any(|v| v.status == GrowthStatus::Inconclusive);
    let code = if inconclusive { EXIT_INCONCLUSIVE } else { EXIT_PASS };
    let result = json!({
        "rate_log": cfg.rate.ln(),
        "verdicts": verdicts,
        "all_trivial": verdicts.iter().all(|v| v.status == GrowthStatus::Unbounded),
    });
    Ok(Report::new(code, result, text, table))
}

#[derive(Serialize)]
struct KreinSummary {
    battery: BatteryReport,
    j_unitarity: JUnitarityReport,
    density: DensitySummary,
    sign_definiteness: SignSummary,
    pass: bool,
}

#[derive(Serialize)]
struct DensitySummary {
    range: [i64; 2],
    max_relative_error: Option<f64>,
    overflowed: Vec<DensityWitness>,
    pass: bool,
}

#[derive(Serialize)]
struct SignSummary {
    sets: usize,
    max_relative_deviation: f64,
    pass: bool,
}

fn krein_summary(cfg: &RunConfig) -> Result<KreinSummary> {
    let op = DoubledOperator::new(cfg.weights.clone());
    let r = i64::from(cfg.range);
    let battery = lemma7_battery(&op, -r..=r)?;

    let mut rng = SampleGenerator::new(cfg.seed);
    let samples = rng.j_samples(J_SAMPLES, -J_SUPPORT..=J_SUPPORT, -r..=r);
    let j_unitarity = j_unitarity_check(&op, &samples)?;

    let mut worst = Some(0.0f64);
    let mut overflowed = Vec::new();
    for n in -r..=r {
        let w = density_witness(&op, n)?;
        match (w.plus_leg_error, w.minus_leg_error) {
            (Some(a), Some(b)) => worst = worst.map(|m| m.max(a).max(b)),
            _ => overflowed.push(w),
        }
    }
    let density = DensitySummary {
        range: [-r, r],
        max_relative_error: worst,
        pass: overflowed.is_empty() && worst.is_some_and(|m| m <= DENSITY_TOLERANCE),
        overflowed,
    };

    let mut dev = 0.0f64;
    for i in 0..SIGN_SETS {
        let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
        let coefs = rng.coefficients(-r..=r, 6);
        let got = sign_definiteness_check(&op, sign, &coefs)?;
        let want = sign.value::<f64>() * 2.0 * coefs.values().map(|a| a * a).sum::<f64>();
        dev = dev.max(((got - want) / want).abs());
    }
    let sign_definiteness = SignSummary {
        sets: SIGN_SETS,
        max_relative_deviation: dev,
        pass: dev <= SIGN_TOLERANCE,
    };
    let pass = battery.pass && j_unitarity.pass && density.pass && sign_definiteness.pass;
    Ok(KreinSummary {
        battery,
        j_unitarity,
        density,
        sign_definiteness,
        pass,
    })
}

fn krein_lines(s: &KreinSummary, text: &mut Vec<String>, table: &mut Table) {
    for id in &s.battery.identities {
        let name = serde_json::to_value(id.identity_id).expect("identity serializes");
        let name = name.as_str().unwrap_or_default().to_string();
        text.push(format!(
            "{name:<18} [{}, {}]  max |dev| = {:e}  {}",
            id.range[0],
            id.range[1],
            id.max_abs_deviation,
            if id.pass { "pass" } else { "FAIL" }
        ));
        table.push(vec![
            name,
            id.range[0].to_string(),
            id.range[1].to_string(),
            num(Some(id.max_abs_deviation)),
            id.pass.to_string(),
        ]);
    }
    text.push(format!(
        "J-unitarity        {} pairs, max rel dev = {:e}",
        s.j_unitarity.samples, s.j_unitarity.max_relative_deviation
    ));
    text.push(format!(
        "density            max rel err = {}{}",
        num(s.density.max_relative_error),
        if s.density.overflowed.is_empty() { String::new() } else { format!(", {} overflowed", s.density.overflowed.len()) }
    ));
    text.push(format!(
        "sign definiteness  {} sets, max rel dev = {:e}",
        s.sign_definiteness.sets, s.sign_definiteness.max_relative_deviation
    ));
}

fn krein_table() -> Table {
    Table::new(&["identity_id", "range_lo", "range_hi", "max_abs_deviation", "pass"])
}

pub fn krein(cfg: &RunConfig) -> Result<Report> {
    let s = krein_summary(cfg)?;
    let mut text = Vec::new();
    let mut table = krein_table();
    krein_lines(&s, &mut text, &mut table);
    Ok(Report::new(pass_code(s.pass), &s, text, table))
}

#[derive(Serialize)]
struct TailLemma {
    kind: PowerKind,
    target: f64,
    tail_windows: Vec<u64>,
    tail_step_log_bounds: Vec<f64>,
    tails_non_increasing: bool,
    specrad: serde_json::Value,
    upper_within_target: bool,
    pass: bool,
}

fn step_bound(cfg: &RunConfig, kind: PowerKind, window: u64) -> Result<Option<f64>> {
    let w = &cfg.weights;
    Ok(match w.kind() {
        WeightKind::PaperLemma6 { .. } => Some(w.tail_derivative_bound(&Index::new(window as i64))?.log_step_bound),
        WeightKind::UserRule(_) => None,
        _ => {
            let s = w.unit_log_ratio().expect("translation-invariant weights").to_f64();
            Some(if kind == PowerKind::Forward { s } else { -s })
        }
    })
}

/// `|v_{n±1}/v_n| <= target (1 + ε)` outside a window, hence `r <= target`.
fn tail_lemma(cfg: &RunConfig, kind: PowerKind, target: f64) -> Result<Report> {
    let mut bounds = Vec::new();
    for w in TAIL_WINDOWS {
        match step_bound(cfg, kind, w)? {
            Some(b) => bounds.push(b),
            None => {
                let text = vec!["no analytic tail for user weights".to_string()];
                return Ok(Report::new(EXIT_UNCERTIFIED, json!({"kind": kind}), text, Table::new(&["window", "step_log_bound"])));
            }
        }
    }
    let non_increasing = bounds.windows(2).all(|p| p[1] <= p[0]);
    let e = specrad_for(cfg, kind)?;
    let within = e.upper() <= target * (1.0 + cfg.eps);
    let mut text = Vec::new();
    let mut table = Table::new(&["window", "step_log_bound"]);
    for (w, b) in TAIL_WINDOWS.iter().zip(&bounds) {
        text.push(format!("|n| >= {w:<8} ln|v_(n±1)/v_n| <= {b}  (ratio {})", b.exp()));
        table.push(vec![w.to_string(), num(Some(*b))]);
    }
    text.push(format!("r({kind}) <= {}  (target {target}, slack {})", e.upper(), cfg.eps));
    let report = TailLemma {
        kind,
        target,
        tail_windows: TAIL_WINDOWS.to_vec(),
        tail_step_log_bounds: bounds,
        tails_non_increasing: non_increasing,
        specrad: specrad_json(&e),
        upper_within_target: within,
        pass: non_increasing && within,
    };
    Ok(Report::new(pass_code(report.pass), &report, text, table))
}

fn bracket_near(e: &SpecRadEstimate, c: f64, eps: f64) -> bool {
    e.certified && e.upper() <= c * (1.0 + eps) && e.lower() >= c * (1.0 - eps)
}

#[derive(Serialize)]
struct RadiusPart {
    forward: serde_json::Value,
    inverse: serde_json::Value,
    pass: bool,
}

fn radius_part(cfg: &RunConfig, text: &mut Vec<String>) -> Result<RadiusPart> {
    let f = specrad_for(cfg, PowerKind::Forward)?;
    let i = specrad_for(cfg, PowerKind::Inverse)?;
    text.push(format!("r(V), r(V*)       in [{}, {}]", f.lower(), f.upper()));
    text.push(format!("r(V^-1), r(V*^-1) in [{}, {}]", i.lower(), i.upper()));
    Ok(RadiusPart {
        pass: bracket_near(&f, cfg.c, cfg.eps) && bracket_near(&i, cfg.c, cfg.eps),
        forward: specrad_json(&f),
        inverse: specrad_json(&i),
    })
}

fn require_paper(cfg: &RunConfig) -> Result<()> {
    if cfg.weights.paper_c().is_none() {
        return Err(Error::Precondition(format!(
            "this check needs paper weights, got {}",
            cfg.weights
        )));
    }
    Ok(())
}

pub fn lemma(cfg: &RunConfig, id: LemmaId) -> Result<Report> {
    match id {
        LemmaId::L1 => tail_lemma(cfg, PowerKind::Forward, 1.0),
        LemmaId::L2 => tail_lemma(cfg, PowerKind::Forward, cfg.c),
        LemmaId::L3 => tail_lemma(cfg, PowerKind::Inverse, 1.0),
        LemmaId::L4 => tail_lemma(cfg, PowerKind::Inverse, cfg.c),
        LemmaId::L5 => {
            let sample: Vec<i64> = (-FLIP_RANGE..=FLIP_RANGE).collect();
            let r = flip_conjugate_check(&cfg.weights, &sample)?;
            let text = vec![format!(
                "R V R = V^-1 on b_n, |n| <= {FLIP_RANGE}: max log deviation {:e}",
                r.max_deviation
            )];
            let mut table = Table::new(&["samples", "max_deviation", "pass"]);
            table.push(vec![r.samples.to_string(), num(Some(r.max_deviation)), r.pass.to_string()]);
            Ok(Report::new(pass_code(r.pass), &r, text, table))
        }
        LemmaId::L6 => {
            require_paper(cfg)?;
            let mut text = Vec::new();
            let radius = radius_part(cfg, &mut text)?;
            let trivial = s_trivial_all_four(&cfg.weights, cfg.c, GrowthHorizon {
                scan_exponent: cfg.max_power_exponent,
                witness_k: cfg.witness_k_max,
            })?;
            let mut table = Table::new(&["kind", "status", "log_m_prime", "index_decimal", "excess_log"]);
            growth_lines(&trivial.verdicts, &mut text, &mut table);
            let pass = radius.pass && trivial.all_trivial;
            Ok(Report::new(pass_code(pass), json!({"radius": radius, "s_trivial": trivial, "pass": pass}), text, table))
        }
        LemmaId::L7 => krein(cfg),
        LemmaId::Thm1 => {
            require_paper(cfg)?;
            let mut text = vec!["(a) spectral radii".to_string()];
            let radius = radius_part(cfg, &mut text)?;
            text.push("(b) S-triviality of the four operators".into());
            let trivial = s_trivial_all_four(&cfg.weights, cfg.c, GrowthHorizon {
                scan_exponent: cfg.max_power_exponent,
                witness_k: cfg.witness_k_max,
            })?;
            let mut growth_table = Table::default();
            growth_lines(&trivial.verdicts, &mut text, &mut growth_table);
            text.push("(c) invariant subspaces L+ and L-".into());
            let k = krein_summary(cfg)?;
            let mut table = krein_table();
            krein_lines(&k, &mut text, &mut table);
            let parts = [("a", radius.pass), ("b", trivial.all_trivial), ("c", k.pass)];
            let mut summary = Table::new(&["part", "pass"]);
            for (p, ok) in parts {
                text.push(format!("({p}) {}", if ok { "pass" } else { "FAIL" }));
                summary.push(vec![p.into(), ok.to_string()]);
            }
            let pass = parts.iter().all(|p| p.1);
            let result = json!({
                "a": radius,
                "b": trivial,
                "c": k,
                "pass": pass,
            });
            Ok(Report::new(pass_code(pass), result, text, summary))
        }
    }
}
