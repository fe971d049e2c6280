use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_krein-shift"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let out = run(&all);
    let doc = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}{}", String::from_utf8_lossy(&out.stdout), String::from_utf8_lossy(&out.stderr))
    });
    (code(&out), doc)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn norm_paper_matches_certificate() {
    let (c, doc) = json(&["norm", "--weights", "paper:c=2", "--N", "1", "--window", "1000000"]);
    assert_eq!(c, 0);
    assert_eq!(doc["schema"], "krein-shift/1");
    assert_eq!(doc["status"], "pass");
    assert_eq!(doc["config"]["window"], 1_000_000);
    let r = &doc["result"];
    assert_eq!(r["power"], 1);
    assert_eq!(r["lower_bound_only"], false);
    // sup of ln(v_{n+1}/v_n) is at n = 0: 1·ln 2 + 1.
    assert!(close(r["certified"].as_f64().unwrap(), 1.0 + 2f64.ln(), 1e-15));
    assert!(r["tail_bound_log"].as_f64().unwrap() < r["window_sup_log"].as_f64().unwrap());
}

#[test]
fn norm_translation_invariant() {
    let (c, doc) = json(&["norm", "--weights", "const", "--N", "5"]);
    assert_eq!(c, 0);
    assert_eq!(doc["result"]["certified"].as_f64(), Some(0.0));

    let (c, doc) = json(&["norm", "--weights", "geom:r=2", "--N", "4"]);
    assert_eq!(c, 0);
    assert!(close(doc["result"]["certified"].as_f64().unwrap(), 4.0 * 2f64.ln(), 1e-15));
}

#[test]
fn norm_user_weights_uncertified() {
    let (c, doc) = json(&["norm", "--weights", "user:logs=0,1,0.5", "--window", "1000"]);
    assert_eq!(c, 2);
    assert_eq!(doc["status"], "uncertified");
    assert_eq!(doc["result"]["lower_bound_only"], true);
    assert!(doc["result"]["tail_bound_log"].is_null());
}

#[test]
fn specrad_paper_brackets_two() {
    let (c, doc) = json(&["specrad", "--weights", "paper:c=2", "--max-pow", "12"]);
    assert_eq!(c, 0);
    let lo = doc["result"]["lower"].as_f64().unwrap();
    let hi = doc["result"]["upper"].as_f64().unwrap();
    assert!(lo >= 2.0 && lo <= hi && hi <= 2.2, "[{lo}, {hi}]");
    assert!(close(hi, 2.017936335145384, 1e-12));
}

#[test]
fn specrad_exact_cases() {
    for (spec, r) in [("const", 1.0), ("geom:r=0.5", 0.5)] {
        let (c, doc) = json(&["specrad", "--weights", spec, "--window", "1000"]);
        assert_eq!(c, 0);
        assert!(close(doc["result"]["lower"].as_f64().unwrap(), r, 1e-15), "{spec}");
        assert!(close(doc["result"]["upper"].as_f64().unwrap(), r, 1e-15), "{spec}");
    }
}

#[test]
fn specrad_csv_columns() {
    let out = run(&["specrad", "--max-pow", "3", "--window", "100", "--output", "csv"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "N,log_norm,root_estimate");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("8,"));
}

#[test]
fn growth_examples() {
    let (c, doc) = json(&["growth", "--weights", "paper:c=2", "--rate", "2", "--witness-k", "2"]);
    assert_eq!(c, 0);
    let v = doc["result"]["verdicts"].as_array().unwrap();
    assert_eq!(v.len(), 4);
    for verdict in v {
        assert_eq!(verdict["status"], "UNBOUNDED");
        assert_eq!(verdict["witnesses"].as_array().unwrap().len(), 2);
    }
    assert_eq!(v[0]["witnesses"][0]["index_decimal"], "2147483647");
    assert_eq!(doc["result"]["all_trivial"], true);

    let (c, doc) = json(&["growth", "--weights", "geom:r=2", "--rate", "2"]);
    assert_eq!(c, 0);
    assert_eq!(doc["result"]["verdicts"][0]["status"], "BOUNDED");

    let (c, doc) = json(&["growth", "--weights", "user:logs=0,1,0.5", "--rate", "1.5"]);
    assert_eq!(c, 3);
    assert_eq!(doc["status"], "inconclusive");
}

#[test]
fn krein_examples() {
    for args in [["--weights", "paper:c=2", "--range", "20"], ["--weights", "geom:r=3", "--range", "10"]] {
        let mut all = vec!["krein"];
        all.extend(args);
        let (c, doc) = json(&all);
        assert_eq!(c, 0, "{args:?}");
        let ids = doc["result"]["battery"]["identities"].as_array().unwrap();
        assert_eq!(ids.len(), 5);
        assert!(ids.iter().all(|i| i["pass"] == true));
    }
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        vec!["krein", "--range", "x"],
        vec!["krein", "--range", "-3"],
        vec!["norm", "--weights", "bogus"],
        vec!["norm", "--weights", "paper:c=0.5"],
        vec!["norm", "--N", "0"],
        vec!["lemma", "8"],
        vec!["frobnicate"],
    ] {
        let out = run(&args);
        assert_eq!(code(&out), 64, "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
    }
}

#[test]
fn lemma_five_and_seven() {
    let (c, doc) = json(&["lemma", "5", "--weights", "paper:c=2"]);
    assert_eq!(c, 0);
    assert!(doc["result"]["max_deviation"].as_f64().unwrap() <= 1e-14);

    let (c, doc) = json(&["lemma", "7", "--weights", "paper:c=2"]);
    assert_eq!(c, 0);
    assert_eq!(doc["result"]["pass"], true);
}

#[test]
fn tail_lemmas() {
    for id in ["1", "3"] {
        let (c, doc) = json(&["lemma", id, "--window", "100000", "--max-pow", "14"]);
        assert_eq!(c, 0, "lemma {id}");
        assert_eq!(doc["config"]["c"].as_f64(), Some(1.0));
        assert_eq!(doc["result"]["tails_non_increasing"], true);
    }
    // Too small a window leaves the Gelfand bound far above c.
    let (c, doc) = json(&["lemma", "2", "--window", "100", "--max-pow", "4"]);
    assert_eq!(c, 1);
    assert_eq!(doc["result"]["upper_within_target"], false);

    let (c, _) = json(&["lemma", "4", "--weights", "user:logs=0,1", "--window", "100"]);
    assert_eq!(c, 2);
}

#[test]
fn composite_report() {
    let (c, doc) = json(&["lemma", "thm1", "--c", "2"]);
    assert_eq!(c, 0);
    for part in ["a", "b", "c"] {
        assert_eq!(doc["result"][part]["pass"].as_bool().or(doc["result"][part]["all_trivial"].as_bool()), Some(true), "{part}");
    }
    let out = run(&["lemma", "thm1", "--c", "2", "--window", "1000", "--max-pow", "6", "--output", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("part,pass\na,"));
}

#[test]
fn json_is_deterministic() {
    let args = ["krein", "--seed", "42", "--range", "8", "--output", "json"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let doc: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(doc["config"]["seed"], 42);
    let keys: Vec<&String> = doc.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["schema", "command", "config", "status", "exit_code", "result"]);
}

#[test]
fn help_lists_defaults() {
    let out = run(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in ["--window", "--max-pow", "--witness-k", "--precision-bits", "--seed", "[default: 1000000]"] {
        assert!(text.contains(flag), "{flag}");
    }
}
