use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use viscofix::error::Error;
use viscofix::harness::{
    certify_scenario, compare_schemes, parse_compare_file, parse_scenario_file, run_scenario,
    write_json, RunOptions,
};

/// Fixed-point iteration experiments with certified rates of asymptotic
/// regularity.
#[derive(Parser)]
#[command(name = "viscofix", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and emit its trace CSV and report JSON.
    Run {
        /// Scenario TOML file.
        scenario: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run a scenario for exactly the budget and verify its certificates.
    Certify {
        /// Scenario TOML file (explicit scheme).
        scenario: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run several schemes on a shared setup and emit a comparison table.
    Compare {
        /// Comparison TOML file.
        comparison: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Parse and validate scenario files without running them.
    Validate {
        /// Scenario TOML files.
        scenarios: Vec<PathBuf>,
    },
}

#[derive(clap::Args)]
struct CommonOpts {
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Verification budget (iteration count) for certificates.
    #[arg(long, default_value_t = 1_000_000)]
    budget: u64,
    /// Seed for the samplers (recorded in the report).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep every K-th iterate in the trace (residuals stay dense).
    #[arg(long, default_value_t = 1)]
    stride: u64,
}

impl CommonOpts {
    fn to_run_options(&self) -> RunOptions {
        RunOptions {
            out_dir: self.out.clone(),
            budget: self.budget,
            seed: self.seed,
            stride: self.stride.max(1),
        }
    }
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_CERT_FAILURE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Parse(_)
        | Error::Validation(_)
        | Error::DimensionMismatch { .. }
        | Error::EmptySet(_)
        | Error::OutOfRange(_)
        | Error::EpsilonOutOfRange(_)
        | Error::MissingModulus(_)
        | Error::NotDecreasing { .. }
        | Error::ScheduleOutOfRange { .. }
        | Error::GammaTooLarge { .. }
        | Error::MuOutOfRange { .. }
        | Error::NotNonexpansive(_)
        | Error::NotContraction { .. }
        | Error::NotMonotone
        | Error::NotConvergent
        | Error::NotDivergent
        | Error::Unsupported(_) => EXIT_VALIDATION,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { scenario, opts } => {
            let doc = parse_scenario_file(&scenario)?;
            let outcome = run_scenario(&doc, &opts.to_run_options())?;
            print_report(&outcome.report)?;
            Ok(if outcome.any_certificate_failed {
                EXIT_CERT_FAILURE
            } else {
                0
            })
        }
        Command::Certify { scenario, opts } => {
            let doc = parse_scenario_file(&scenario)?;
            let run_opts = opts.to_run_options();
            let outcome = certify_scenario(&doc, &run_opts)?;
            print_report(&outcome.report)?;
            if let Some(dir) = &run_opts.out_dir {
                write_json(
                    &dir.join(format!("{}_certify.json", doc.name)),
                    &outcome.report,
                )?;
            }
            Ok(if outcome.any_certificate_failed {
                EXIT_CERT_FAILURE
            } else {
                0
            })
        }
        Command::Compare { comparison, opts } => {
            let doc = parse_compare_file(&comparison)?;
            let table = compare_schemes(&doc, &opts.to_run_options())?;
            print_report(&table)?;
            Ok(0)
        }
        Command::Validate { scenarios } => {
            if scenarios.is_empty() {
                return Err(Error::Validation("no scenario files given".into()));
            }
            for path in &scenarios {
                // a file may hold either a single scenario or a comparison
                match parse_scenario_file(path) {
                    Ok(_) => {}
                    Err(scenario_err) => {
                        if parse_compare_file(path).is_err() {
                            return Err(scenario_err);
                        }
                    }
                }
                println!("{}: ok", path.display());
            }
            Ok(0)
        }
    }
}

fn print_report(value: &serde_json::Value) -> Result<(), Error> {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    // tolerate a closed pipe (e.g. `viscofix run ... | head`)
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(Error::from),
    }
}
