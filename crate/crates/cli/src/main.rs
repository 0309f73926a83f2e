use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use permtwist::heisenberg::FockVector;
use permtwist::permutation::{character_to_json, twisted_character, Permutation};
use permtwist::scalars::{fmt_rat, parse_rat};
use permtwist::twist::TwistedModule;
use permtwist::verify::{run_suite, VerifyOptions};
use permtwist::{delta_apply, delta_inverse_apply, solve_a_coeffs, Error, Rational};

#[derive(Parser)]
#[command(name = "permtwist", version, about = "Permutation-twisted modules of free-boson tensor powers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    out: OutputFlags,
}

#[derive(Args)]
struct OutputFlags {
    /// Compact JSON output.
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON output.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficients a_1..a_depth of the derivation defining Delta_k.
    Coeffs {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long, default_value_t = 4)]
        depth: usize,
    },
    /// Graded character of the g-twisted module.
    Character {
        /// Cycle notation, e.g. "(1 3)(2)".
        g: String,
        /// Override the degree k of the symmetric group.
        #[arg(long)]
        k: Option<u32>,
        /// Central charge.
        #[arg(long, default_value = "1", value_parser = parse_rational)]
        c: Rational,
        #[arg(long, default_value_t = 8)]
        terms: usize,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        cap: Option<u32>,
        #[arg(long)]
        order: Option<u32>,
    },
    /// Delta_k(z) u (or its inverse) as a finite sum of z-powers.
    Delta {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        /// "vac", "omega", or oscillator indices such as "1,1" for alpha(-1)^2 1.
        #[arg(long)]
        u: String,
        #[arg(long)]
        inverse: bool,
    },
    /// Matrix of a twisted mode (u^slot)_m on weights up to cap.
    Mode {
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        k: u32,
        #[arg(long)]
        u: String,
        #[arg(long, default_value_t = 1)]
        slot: u32,
        /// Mode index in (1/k)Z, e.g. "-1/2".
        #[arg(long, allow_hyphen_values = true, value_parser = parse_rational)]
        m: Rational,
        #[arg(long, default_value_t = 3)]
        cap: u32,
    },
}

fn parse_rational(s: &str) -> Result<Rational, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

fn parse_state(s: &str) -> permtwist::Result<FockVector> {
    match s.trim() {
        "vac" | "" => Ok(FockVector::vacuum()),
        "omega" => Ok(FockVector::omega()),
        t => {
            let parts = t
                .split(',')
                .map(|p| p.trim().parse::<u32>().ok().filter(|&n| n > 0))
                .collect::<Option<Vec<u32>>>()
                .ok_or_else(|| Error::Usage(format!("bad state '{s}': use vac, omega or positive indices like 1,2")))?;
            Ok(FockVector::state(&parts))
        }
    }
}

enum Outcome {
    Json(Value),
    Text(String, Value, bool),
}

fn run(cmd: Command) -> permtwist::Result<Outcome> {
    Ok(match cmd {
        Command::Coeffs { k, depth } => {
            let a = solve_a_coeffs(k, depth)?;
            let rows: Vec<Value> = (1..=depth).map(|j| json!({"j": j, "value": fmt_rat(a.a(j))})).collect();
            Outcome::Json(Value::Array(rows))
        }
        Command::Character { g, k, c, terms } => {
            let g = Permutation::parse(&g, k)?;
            Outcome::Json(character_to_json(&twisted_character(&g, &c, terms)?))
        }
        Command::Verify { suite, k, depth, cap, order } => {
            let report = run_suite(&suite, &VerifyOptions { k, depth, cap, order })?;
            let ok = report.passed();
            Outcome::Text(report.to_text(), report.to_json(), ok)
        }
        Command::Delta { k, u, inverse } => {
            let u = parse_state(&u)?;
            let d = if inverse { delta_inverse_apply(k, &u)? } else { delta_apply(k, &u)? };
            Outcome::Json(json!({"k": k, "u": u.to_string(), "inverse": inverse, "terms": d.to_json()}))
        }
        Command::Mode { k, u, slot, m, cap } => {
            if slot == 0 || slot > k {
                return Err(Error::Usage(format!("slot must lie in 1..={k}")));
            }
            let u = parse_state(&u)?;
            let mm = TwistedModule::new(k).generator_slot_matrix(&u, slot, &m, cap)?;
            Outcome::Json(json!({"k": k, "u": u.to_string(), "slot": slot, "matrix": mm.to_json()}))
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let print_json = |v: &Value| {
        if cli.out.json {
            println!("{v}");
        } else {
            println!("{}", serde_json::to_string_pretty(v).expect("json"));
        }
    };
    match run(cli.command) {
        Ok(Outcome::Json(v)) => {
            print_json(&v);
            ExitCode::SUCCESS
        }
        Ok(Outcome::Text(text, v, ok)) => {
            if cli.out.json || cli.out.pretty {
                print_json(&v);
            } else {
                print!("{text}");
            }
            if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }
        }
        Err(e @ (Error::Usage(_) | Error::Parse { .. } | Error::InvalidMode { .. })) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
