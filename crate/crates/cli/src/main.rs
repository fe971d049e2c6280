//! `krein-shift`: verification campaigns for weighted shifts and their Krein doubling.
//!
//! Exit codes: 0 pass, 1 check failed, 2 uncertified, 3 inconclusive, 64 usage error.

mod commands;
mod report;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use krein_shift::weights::{WeightSequence, DEFAULT_PRECISION_BITS};
use krein_shift::Error;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_UNCERTIFIED: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "krein-shift", version, about = "Certified checks for bilateral weighted shifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Weight sequence: `const`, `paper:c=<real>`, `geom:r=<real>` or `user:logs=<real>,...`
    /// (reals in decimal or hex-float). Defaults to `paper:c=<c>`.
    #[arg(long, global = true)]
    weights: Option<String>,

    /// Parameter c of the default paper weights.
    #[arg(long, global = true, default_value_t = 2.0)]
    c: f64,

    /// Power N for `norm`.
    #[arg(long = "N", global = true, default_value_t = 1)]
    n: u64,

    /// Half-width of the exhaustive window scan.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    window: u64,

    /// Gelfand powers run over N = 1, 2, ..., 2^max-pow.
    #[arg(long = "max-pow", global = true, default_value_t = 12)]
    max_pow: u32,

    /// Growth rate a; defaults to c.
    #[arg(long, global = true)]
    rate: Option<f64>,

    /// Number of witness indices n_k, m_k.
    #[arg(long = "witness-k", global = true, default_value_t = 2)]
    witness_k: u32,

    /// Generator powers N, M run over [-range, range].
    #[arg(long, global = true, default_value_t = 20)]
    range: u32,

    /// Working precision of the log-weights.
    #[arg(long = "precision-bits", global = true, default_value_t = DEFAULT_PRECISION_BITS)]
    precision_bits: u32,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Text)]
    output: OutputFormat,

    /// Seed for the randomized batteries.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Relative slack when comparing a radius with c.
    #[arg(long, global = true, default_value_t = 0.02)]
    eps: f64,
}

#[derive(Subcommand, Debug, Clone)]
enum Command {
    /// Certified ln ‖V^N‖.
    Norm,
    /// Bracket on the spectral radius from the Gelfand sequence.
    Specrad,
    /// Orbit growth against the rate for V, V^-1, V*^-1, V*.
    Growth,
    /// Identity battery for the doubled operator.
    Krein,
    /// Checkable content of one statement: 1-7 or thm1.
    Lemma {
        #[arg(value_enum)]
        id: LemmaId,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LemmaId {
    #[value(name = "1")]
    #[serde(rename = "1")]
    L1,
    #[value(name = "2")]
    #[serde(rename = "2")]
    L2,
    #[value(name = "3")]
    #[serde(rename = "3")]
    L3,
    #[value(name = "4")]
    #[serde(rename = "4")]
    L4,
    #[value(name = "5")]
    #[serde(rename = "5")]
    L5,
    #[value(name = "6")]
    #[serde(rename = "6")]
    L6,
    #[value(name = "7")]
    #[serde(rename = "7")]
    L7,
    #[value(name = "thm1")]
    #[serde(rename = "thm1")]
    Thm1,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Text,
    Json,
    Csv,
}

/// Every setting that influences a report; echoed into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub weight_spec: String,
    pub c: f64,
    pub rate: f64,
    #[serde(rename = "N")]
    pub n: u64,
    pub window: u64,
    pub max_power_exponent: u32,
    pub witness_k_max: u32,
    pub range: u32,
    pub precision_bits: u32,
    pub output: OutputFormat,
    pub seed: u64,
    pub eps: f64,
    #[serde(skip)]
    pub weights: WeightSequence,
}

fn command_name(c: &Command) -> String {
    match c {
        Command::Norm => "norm".into(),
        Command::Specrad => "specrad".into(),
        Command::Growth => "growth".into(),
        Command::Krein => "krein".into(),
        Command::Lemma { id } => format!("lemma {}", commands::lemma_label(*id)),
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    if !(cli.c >= 1.0 && cli.c.is_finite()) {
        return Err(format!("--c must be a finite real >= 1, got {}", cli.c));
    }
    if cli.eps.is_nan() || cli.eps <= 0.0 {
        return Err(format!("--eps must be positive, got {}", cli.eps));
    }
    if cli.n == 0 || cli.window == 0 {
        return Err("--N and --window must be at least 1".into());
    }
    if cli.max_pow > 40 {
        return Err(format!("--max-pow must be at most 40, got {}", cli.max_pow));
    }
    // Lemmas 1 and 3 are the c = 1 statements.
    let default_c = match cli.command {
        Command::Lemma { id: LemmaId::L1 | LemmaId::L3 } => 1.0,
        _ => cli.c,
    };
    let spec = cli.weights.clone().unwrap_or_else(|| format!("paper:c={default_c}"));
    let weights = spec
        .parse::<WeightSequence>()
        .and_then(|w| w.with_precision(cli.precision_bits))
        .map_err(|e| e.to_string())?;
    let c = weights.paper_c().unwrap_or(default_c);
    let rate = cli.rate.unwrap_or(c);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(format!("--rate must be positive, got {rate}"));
    }
    Ok(RunConfig {
        command: command_name(&cli.command),
        weight_spec: weights.to_string(),
        c,
        rate,
        n: cli.n,
        window: cli.window,
        max_power_exponent: cli.max_pow,
        witness_k_max: cli.witness_k,
        range: cli.range,
        precision_bits: cli.precision_bits,
        output: cli.output,
        seed: cli.seed,
        eps: cli.eps,
        weights,
    })
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::WeightSpec { .. }
            | Error::InvalidWeight(_)
            | Error::IndexParse(_)
            | Error::Precondition(_)
            | Error::Asymmetric { .. }
            | Error::NoAnalyticTail(_)
            | Error::WitnessTooLarge(_)
            | Error::WitnessOrder(_)
            | Error::NegativeArgument(_)
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let config = match build_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let outcome = match &cli.command {
        Command::Norm => commands::norm(&config),
        Command::Specrad => commands::specrad(&config),
        Command::Growth => commands::growth(&config),
        Command::Krein => commands::krein(&config),
        Command::Lemma { id } => commands::lemma(&config, *id),
    };
    match outcome {
        Ok(report) => {
            let code = report.exit_code;
            match report::render(&report, &config) {
                Ok(text) => print!("{text}"),
                Err(e) => {
                    eprintln!("error: cannot render report: {e}");
                    return ExitCode::from(EXIT_FAIL);
                }
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_usage_error(&e) { EXIT_USAGE } else { EXIT_FAIL })
        }
    }
}
