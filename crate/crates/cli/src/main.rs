//! `relbc`: run bit-commitment scenarios and the verification suite.
//!
//! Exit status: 0 when every consistency check holds, 2 when one fails,
//! 1 on usage or configuration errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relbc_core::config::{OutputFormat, ScenarioConfig};
use relbc_core::harness::{run_suite, run_trials_with, CheckResult, SuiteOptions, TrialReport};
use relbc_core::protocol::{run_protocol, Fault, RunInputs};
use relbc_core::spacetime::Transcript;
use relbc_core::Seed;

const SEED_ENV: &str = "RELBC_SEED";

#[derive(Parser)]
#[command(name = "relbc", version, about = "Relativistic classical bit commitment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario for a number of seeded trials and print the report.
    Run(RunArgs),
    /// Exhaustive engine/oracle checks plus Monte Carlo consistency checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key=value scenario file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// symmetric or subordinate
    #[arg(long)]
    variant: Option<String>,
    /// Chain length in bits.
    #[arg(long)]
    l: Option<String>,
    /// Station separation in meters, e.g. 3e8.
    #[arg(long)]
    d: Option<String>,
    /// Signal speed in m/s.
    #[arg(long)]
    c: Option<String>,
    /// Commit deadline in seconds.
    #[arg(long)]
    delta: Option<String>,
    /// honest, alice-diff-bit[:a1,a2], alice-diff-key[:k1,k2], bob-b3[:mid|position]
    #[arg(long)]
    adversary: Option<String>,
    /// Committed bit: 0, 1 or random.
    #[arg(long)]
    bit: Option<String>,
    /// Master seed; falls back to the config file, then $RELBC_SEED, then 0.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    /// text, json or csv
    #[arg(long)]
    output: Option<String>,
    /// Also print the transcript of the first trial.
    #[arg(long)]
    emit_transcript: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest chain length for the exhaustive checks.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=4))]
    max_l: u64,
    /// Chain lengths for the Monte Carlo checks.
    #[arg(long, value_delimiter = ',', default_values_t = [8usize, 16])]
    mc_l: Vec<usize>,
    /// Master seeds for the Monte Carlo checks.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3])]
    seeds: Vec<u64>,
    /// Trials per Monte Carlo check.
    #[arg(long, default_value_t = 20_000)]
    trials: u64,
    /// Corrupt the engine's verdicts; the suite must then fail.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

fn usage(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("relbc: {msg}");
    ExitCode::from(1)
}

fn scenario(args: &RunArgs) -> Result<ScenarioConfig, String> {
    let mut cfg = ScenarioConfig::default();
    if let Ok(seed) = std::env::var(SEED_ENV) {
        cfg.set("seed", &seed).map_err(|e| format!("${SEED_ENV}: {e}"))?;
    }
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        cfg.merge_kv(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let flags = [
        ("variant", &args.variant),
        ("l", &args.l),
        ("d", &args.d),
        ("c", &args.c),
        ("delta", &args.delta),
        ("adversary", &args.adversary),
        ("bit", &args.bit),
        ("seed", &args.seed),
        ("trials", &args.trials),
        ("output", &args.output),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v).map_err(|e| e.to_string())?;
        }
    }
    if args.emit_transcript {
        cfg.emit_transcript = true;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

/// The transcript of trial 0, reproduced from the same seed the report used.
fn first_transcript(cfg: &ScenarioConfig) -> Result<Transcript, String> {
    let run_cfg = cfg.run_config().map_err(|e| e.to_string())?;
    let inputs = RunInputs::sample(&run_cfg, cfg.bit.fixed(), Seed(cfg.seed).trial(0)).map_err(|e| e.to_string())?;
    let run = run_protocol(&run_cfg, &inputs).map_err(|e| e.to_string())?;
    Ok(run.transcript)
}

fn render(cfg: &ScenarioConfig, report: &TrialReport, transcript: Option<&Transcript>) -> String {
    match cfg.output {
        OutputFormat::Json if transcript.is_none() => {
            let mut s = report.to_json();
            s.push('\n');
            s
        }
        OutputFormat::Json => {
            let mut value = serde_json::to_value(report).expect("report is serializable");
            if let Some(t) = transcript {
                let entries = serde_json::from_str(&t.to_json()).expect("transcript json");
                value["transcript"] = entries;
            }
            let mut s = serde_json::to_string_pretty(&value).expect("value is serializable");
            s.push('\n');
            s
        }
        OutputFormat::Csv => {
            let mut s = String::new();
            if let Some(t) = transcript {
                for line in t.to_lines().lines() {
                    s.push_str(&format!("# {line}\n"));
                }
            }
            s.push_str(&report.to_csv());
            s
        }
        OutputFormat::Text => {
            let mut s = String::new();
            if let Some(t) = transcript {
                s.push_str("transcript (trial 0):\n");
                s.push_str(&t.to_lines());
                if !s.ends_with('\n') {
                    s.push('\n');
                }
                s.push('\n');
            }
            s.push_str(&report.to_text());
            s
        }
    }
}

fn run(args: RunArgs) -> ExitCode {
    let cfg = match scenario(&args) {
        Ok(cfg) => cfg,
        Err(e) => return usage(e),
    };
    let report = match run_trials_with(&cfg, cfg.trials, None) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    let transcript = if cfg.emit_transcript {
        match first_transcript(&cfg) {
            Ok(t) => Some(t),
            Err(e) => return usage(e),
        }
    } else {
        None
    };
    print!("{}", render(&cfg, &report, transcript.as_ref()));
    if report.consistent {
        ExitCode::SUCCESS
    } else {
        eprintln!("relbc: outcome counts inconsistent with the expected distribution");
        ExitCode::from(2)
    }
}

fn print_table(rows: &[CheckResult]) {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in rows {
        let mark = if r.passed { "PASS" } else { "FAIL" };
        println!("{mark}  {:<width$}  {}", r.name, r.detail);
    }
}

fn verify(args: VerifyArgs) -> ExitCode {
    let opts = SuiteOptions {
        max_l: args.max_l as usize,
        mc_lengths: args.mc_l,
        mc_seeds: args.seeds,
        mc_trials: args.trials,
        fault: args.inject_fault.then_some(Fault::InvertRevealed),
    };
    if opts.mc_trials == 0 {
        return usage("--trials must be at least 1");
    }
    let rows = match run_suite(&opts) {
        Ok(rows) => rows,
        Err(e) => return usage(e),
    };
    print_table(&rows);
    let failed = rows.iter().filter(|r| !r.passed).count();
    println!("{} checks, {} passed, {} failed", rows.len(), rows.len() - failed, failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match cli.command {
        Command::Run(args) => run(args),
        Command::Verify(args) => verify(args),
    }
}
