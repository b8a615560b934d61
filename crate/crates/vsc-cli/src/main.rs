//! Command-line front end: reduction with per-kind accounting, normal-form
//! classification, type inference with bound checks, derivation checking,
//! solvability queries, structural-equivalence and sigma checks, and a
//! corpus runner.
//!
//! Exit codes: 0 on success, 1 on a verification failure, 2 on usage or
//! parse errors.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use vsc::classify::classify;
use vsc::derive::{infer, InferMode};
use vsc::multitypes::{check_derivation, derivation_flags, derivation_from_json, derivation_to_json};
use vsc::rewriting::{
    betav_reduce, reduce, sigma_embed_check, struct_equiv, Closure, SigmaRule, Strategy, Trace,
};
use vsc::solvability::{scrutable, solvable, verify_witness, Verdict, WitnessTarget};
use vsc::syntax::{
    delta, identity, meta_subst, omega, open_size, parse, parse_context, solvable_size, Term,
};

#[derive(Parser)]
#[command(name = "vsc", version, about = "Workbench for the value substitution calculus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Step budget for every reduction-backed command.
    #[arg(long, global = true, default_value_t = 10_000)]
    fuel: usize,
    /// Emit machine-readable JSON instead of the textual report.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    /// Open reduction, substituting variables.
    O,
    /// Open reduction without variable substitution.
    Olam,
    /// Solving reduction, substituting variables.
    S,
    /// Solving reduction without variable substitution.
    Slam,
    /// Full reduction, substituting variables.
    Vsc,
    /// Full reduction without variable substitution.
    Vsclam,
    /// Plain beta-value on ES-free terms (full closure).
    Betav,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Open,
    Solving,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Sigma1,
    Sigma3,
}

#[derive(Subcommand)]
enum Command {
    /// Reduce a term and print the trace with per-kind step counts.
    Reduce {
        term: String,
        #[arg(long, value_enum, default_value_t = StrategyArg::O)]
        strategy: StrategyArg,
        /// Enable the glue rule (full and open closures).
        #[arg(long)]
        glue: bool,
    },
    /// Print the normal-form class flags of a term as JSON.
    Classify { term: String },
    /// Infer a derivation by reducing to normal form and expanding back.
    Type {
        term: String,
        #[arg(long, value_enum)]
        mode: ModeArg,
    },
    /// Check a derivation read from a JSON file (or standard input with -).
    CheckDerivation {
        #[arg(default_value = "-")]
        file: String,
    },
    /// Decide scrutability and solvability of a term.
    Solve { term: String },
    /// Check that a sigma step is captured by a multiplicative step on each
    /// side plus structural equivalence.
    SigmaCheck {
        term: String,
        #[arg(long, value_enum)]
        rule: RuleArg,
    },
    /// Decide structural equivalence of two terms.
    Equiv { left: String, right: String },
    /// Run a corpus of expectations (one JSON object per line).
    Corpus { path: PathBuf },
}

/// Expand the named abbreviations accepted by the CLI: free occurrences of
/// I, DELTA and OMEGA stand for the usual closed terms.
fn expand_abbreviations(t: &Term) -> Term {
    let t = meta_subst(t, "I", &identity());
    let t = meta_subst(&t, "DELTA", &delta());
    meta_subst(&t, "OMEGA", &omega())
}

fn parse_term(src: &str) -> Result<Term, String> {
    parse(src)
        .map(|t| expand_abbreviations(&t))
        .map_err(|e| e.to_string())
}

fn print_trace_human(trace: &Trace) {
    println!("{}", trace.start);
    for step in &trace.steps {
        println!("  -> {:<8} {}", step.kind.json_name(), step.term);
    }
    let status = match trace.status {
        vsc::rewriting::TraceStatus::NormalForm => "normal_form".to_string(),
        vsc::rewriting::TraceStatus::Cycle(i) => format!("cycle (state {i} repeats)"),
        vsc::rewriting::TraceStatus::FuelExhausted => "fuel_exhausted".to_string(),
    };
    println!("status: {status}");
    let c = &trace.counts;
    println!(
        "counts: m={} e_lambda={} e_var={} glue={} beta_v={}",
        c.mult, c.exp_abs, c.exp_var, c.glue, c.beta_v
    );
}

fn run_reduce(term: &str, strategy: StrategyArg, glue: bool, fuel: usize, json: bool) -> Result<ExitCode, String> {
    let t = parse_term(term)?;
    let trace = match strategy {
        StrategyArg::Betav => {
            if glue {
                return Err("the glue rule does not combine with beta-value".to_string());
            }
            betav_reduce(&t, Closure::Full, fuel).map_err(|e| e.to_string())?
        }
        _ => {
            let mut strat = match strategy {
                StrategyArg::O => Strategy::open(),
                StrategyArg::Olam => Strategy::open_lambda(),
                StrategyArg::S => Strategy::solving(),
                StrategyArg::Slam => Strategy::solving_lambda(),
                StrategyArg::Vsc => Strategy::full(),
                StrategyArg::Vsclam => Strategy::full_lambda(),
                StrategyArg::Betav => unreachable!(),
            };
            if glue {
                if strat.closure == Closure::Solving {
                    return Err("the glue rule combines with the open and full closures only".to_string());
                }
                strat = strat.with_glue();
            }
            reduce(&t, strat, fuel, true)
        }
    };
    if json {
        println!("{}", trace.to_json());
    } else {
        print_trace_human(&trace);
    }
    Ok(ExitCode::SUCCESS)
}

fn classify_json(t: &Term) -> Value {
    let c = classify(t);
    json!({
        "value": c.value,
        "inert": c.inert,
        "fireball": c.fireball,
        "full_inert": c.full_inert,
        "full_fireball": c.full_fireball,
        "solved_fireball": c.solved_fireball,
    })
}

fn run_type(term: &str, mode: ModeArg, fuel: usize, json: bool) -> Result<ExitCode, String> {
    let t = parse_term(term)?;
    let infer_mode = match mode {
        ModeArg::Open => InferMode::Open,
        ModeArg::Solving => InferMode::Solving,
    };
    let Some(inf) = infer(&t, infer_mode, fuel) else {
        let reduced = reduce(
            &t,
            match infer_mode {
                InferMode::Open => Strategy::open(),
                InferMode::Solving => Strategy::solving(),
            },
            fuel,
            true,
        );
        let reason = match reduced.status {
            vsc::rewriting::TraceStatus::Cycle(_) => "untypable (reduction cycles)",
            _ => "unknown (fuel exhausted)",
        };
        if json {
            println!("{}", json!({"result": "none", "reason": reason}));
        } else {
            println!("no derivation: {reason}");
        }
        return Ok(ExitCode::from(1));
    };
    let d = &inf.derivation;
    let (judgment, size, msize) = check_derivation(d).map_err(|e| e.to_string())?;
    let (inert, tight) = derivation_flags(d).map_err(|e| e.to_string())?;
    let nf = inf.trace.final_term();
    let m_steps = inf.trace.counts.mult;
    let nf_size = match infer_mode {
        InferMode::Open => open_size(nf),
        InferMode::Solving => solvable_size(nf),
    };
    let holds = 2 * m_steps + nf_size == msize;
    if json {
        println!(
            "{}",
            json!({
                "derivation": derivation_to_json(d),
                "sizes": {"size": size, "msize": msize},
                "flags": {"inert": inert, "tight": tight},
                "trace": inf.trace.to_json(),
                "bound": {
                    "m_steps": m_steps,
                    "normal_form_size": nf_size,
                    "msize": msize,
                    "holds": holds,
                },
            })
        );
    } else {
        println!("subject: {}", judgment.subject);
        println!("normal form: {nf}");
        println!("sizes: |D| = {size}, |D|_m = {msize} (inert: {inert}, tight: {tight})");
        println!(
            "bound: 2*{m_steps}+{nf_size} == {msize}: {}",
            if holds { "OK" } else { "FAIL" }
        );
        println!("{}", serde_json::to_string_pretty(&derivation_to_json(d)).unwrap());
    }
    Ok(if holds { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run_check_derivation(file: &str, json: bool) -> Result<ExitCode, String> {
    let src = if file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| e.to_string())?;
        buf
    } else {
        fs::read_to_string(file).map_err(|e| e.to_string())?
    };
    let value: Value = serde_json::from_str(&src).map_err(|e| e.to_string())?;
    let d = derivation_from_json(&value)?;
    match check_derivation(&d) {
        Ok((judgment, size, msize)) => {
            let (inert, tight) = derivation_flags(&d).map_err(|e| e.to_string())?;
            if json {
                println!(
                    "{}",
                    json!({
                        "ok": true,
                        "subject": judgment.subject.to_string(),
                        "sizes": {"size": size, "msize": msize},
                        "flags": {"inert": inert, "tight": tight},
                    })
                );
            } else {
                println!("ok: {} (|D| = {size}, |D|_m = {msize})", judgment.subject);
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            if json {
                println!("{}", json!({"ok": false, "error": e.to_string()}));
            } else {
                println!("check failed: {e}");
            }
            Ok(ExitCode::from(1))
        }
    }
}

fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::Yes(trace) => json!({"verdict": "yes", "trace": trace.to_json()}),
        Verdict::No(trace) => json!({"verdict": "no", "trace": trace.to_json()}),
        Verdict::Unknown(fuel) => json!({"verdict": "unknown", "fuel": fuel}),
    }
}

fn run_solve(term: &str, fuel: usize, json: bool) -> Result<ExitCode, String> {
    let t = parse_term(term)?;
    let s = scrutable(&t, fuel);
    let v = solvable(&t, fuel);
    if json {
        println!(
            "{}",
            json!({"scrutable": verdict_json(&s), "solvable": verdict_json(&v)})
        );
    } else {
        println!("scrutable: {}", s.json_name());
        println!("solvable:  {}", v.json_name());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// Corpus runner
// ---------------------------------------------------------------------------

fn expect_bool(entry: &Value, key: &str) -> Option<bool> {
    entry.get("expected")?.get(key)?.as_bool()
}

fn check_entry(entry: &Value, fuel: usize) -> Result<Vec<String>, String> {
    let term_src = entry
        .get("term")
        .and_then(Value::as_str)
        .ok_or("entry lacks a term")?;
    let t = parse_term(term_src)?;
    let mut failures = Vec::new();

    if let Some(expected) = expect_bool(entry, "scrutable") {
        let v = scrutable(&t, fuel);
        if !v.is_definite() {
            failures.push("scrutable: undecided".to_string());
        } else if v.is_yes() != expected {
            failures.push(format!("scrutable: expected {expected}, got {}", v.json_name()));
        }
    }
    if let Some(expected) = expect_bool(entry, "solvable") {
        let v = solvable(&t, fuel);
        if !v.is_definite() {
            failures.push("solvable: undecided".to_string());
        } else if v.is_yes() != expected {
            failures.push(format!("solvable: expected {expected}, got {}", v.json_name()));
        }
    }
    if let Some(class) = entry.get("expected").and_then(|e| e.get("classify")) {
        let actual = classify_json(&t);
        for (key, expected) in class.as_object().ok_or("classify expectations must be an object")? {
            if actual.get(key) != Some(expected) {
                failures.push(format!(
                    "classify.{key}: expected {expected}, got {}",
                    actual.get(key).unwrap_or(&Value::Null)
                ));
            }
        }
    }
    if let Some(phi) = entry.get("expected").and_then(|e| e.get("phi_m")) {
        for (mode_name, mode) in [("open", InferMode::Open), ("solving", InferMode::Solving)] {
            if let Some(expected) = phi.get(mode_name).and_then(Value::as_u64) {
                match infer(&t, mode, fuel) {
                    Some(inf) => {
                        let msize = inf.derivation.msize() as u64;
                        if msize != expected {
                            failures.push(format!(
                                "phi_m.{mode_name}: expected {expected}, got {msize}"
                            ));
                        }
                    }
                    None => failures.push(format!("phi_m.{mode_name}: no derivation")),
                }
            }
        }
    }
    if let Some(witness) = entry.get("expected").and_then(|e| e.get("witness")) {
        let ctx_src = witness
            .get("context")
            .and_then(Value::as_str)
            .ok_or("witness lacks a context")?;
        let ctx = parse_context(ctx_src).map_err(|e| e.to_string())?;
        let target = match witness.get("target").and_then(Value::as_str) {
            Some("identity") => WitnessTarget::Identity,
            Some("inert") => WitnessTarget::Inert,
            Some("value") => WitnessTarget::Value,
            Some(other) => {
                if let Some(rest) = other.strip_prefix("given:") {
                    WitnessTarget::Given(parse_term(rest)?)
                } else {
                    return Err(format!("unknown witness target {other}"));
                }
            }
            None => WitnessTarget::Identity,
        };
        match verify_witness(&ctx, &t, &target, fuel) {
            Ok(v) if v.is_yes() => {}
            Ok(v) => failures.push(format!("witness: verdict {}", v.json_name())),
            Err(e) => failures.push(format!("witness: {e}")),
        }
    }
    Ok(failures)
}

fn run_corpus(path: &PathBuf, fuel: usize, json: bool) -> Result<ExitCode, String> {
    let src = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut report = Vec::new();
    let mut failed = 0usize;
    for (lineno, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let entry: Value =
            serde_json::from_str(line).map_err(|e| format!("line {}: {e}", lineno + 1))?;
        let name = entry
            .get("name")
            .and_then(Value::as_str)
            .unwrap_or("<unnamed>")
            .to_string();
        let failures = check_entry(&entry, fuel).map_err(|e| format!("{name}: {e}"))?;
        if !failures.is_empty() {
            failed += 1;
        }
        report.push((name, failures));
    }
    if json {
        let entries: Vec<Value> = report
            .iter()
            .map(|(name, failures)| {
                json!({"name": name, "ok": failures.is_empty(), "failures": failures})
            })
            .collect();
        println!(
            "{}",
            json!({"entries": entries, "total": report.len(), "failed": failed})
        );
    } else {
        for (name, failures) in &report {
            if failures.is_empty() {
                println!("ok   {name}");
            } else {
                println!("FAIL {name}: {}", failures.join("; "));
            }
        }
        println!("{} entries, {} failed", report.len(), failed);
    }
    Ok(if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match &cli.command {
        Command::Reduce { term, strategy, glue } => {
            run_reduce(term, *strategy, *glue, cli.fuel, cli.json)
        }
        Command::Classify { term } => {
            let t = parse_term(term)?;
            println!("{}", classify_json(&t));
            Ok(ExitCode::SUCCESS)
        }
        Command::Type { term, mode } => run_type(term, *mode, cli.fuel, cli.json),
        Command::CheckDerivation { file } => run_check_derivation(file, cli.json),
        Command::Solve { term } => run_solve(term, cli.fuel, cli.json),
        Command::SigmaCheck { term, rule } => {
            let t = parse_term(term)?;
            let rule = match rule {
                RuleArg::Sigma1 => SigmaRule::Sigma1,
                RuleArg::Sigma3 => SigmaRule::Sigma3,
            };
            let ok = sigma_embed_check(&t, rule).map_err(|e| e.to_string())?;
            if cli.json {
                println!("{}", json!({"embedded": ok}));
            } else {
                println!("{ok}");
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Equiv { left, right } => {
            let l = parse_term(left)?;
            let r = parse_term(right)?;
            let eq = struct_equiv(&l, &r);
            if cli.json {
                println!("{}", json!({"equivalent": eq}));
            } else {
                println!("{eq}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Corpus { path } => run_corpus(path, cli.fuel, cli.json),
    }
}

fn main() -> ExitCode {
    // Die quietly on a closed pipe instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
