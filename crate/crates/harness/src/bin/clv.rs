use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use clv_harness::checks::all_passed;
use clv_harness::config::Format;
use clv_harness::{experiments, suites, Check, ExperimentConfig, HarnessError};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "clv", version, about = "Covariant Lyapunov vector experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        /// Config file; omit with --list.
        config: Option<PathBuf>,
        /// List registered experiments and exit.
        #[arg(long)]
        list: bool,
        /// Output path prefix, overriding the config.
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_parser = parse_format)]
        format: Option<Format>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a property suite with the fixed seed 42.
    Verify {
        suite: String,
        /// Restrict the cocycle and ginelli suites to one builtin.
        #[arg(long)]
        cocycle: Option<String>,
    },
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("expected csv or json, got `{s}`")),
    }
}

/// `CLV_THREADS` caps the worker pool; 0 runs everything on one thread.
fn configure_threads() -> Result<(), HarnessError> {
    let Ok(raw) = std::env::var("CLV_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| HarnessError::field("CLV_THREADS", format!("not a count: `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build_global()
        .map_err(|e| HarnessError::field("CLV_THREADS", e.to_string()))
}

fn report(checks: &[Check]) -> ExitCode {
    for c in checks {
        println!("{c}");
    }
    if all_passed(checks) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAIL)
    }
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    configure_threads()?;
    match cli.command {
        Command::Run { list: true, .. } => {
            for (name, description) in experiments::listing() {
                println!("{name:<24}{description}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { config: None, .. } => Err(HarnessError::field("config", "a config path is required")),
        Command::Run { config: Some(path), out, format, seed, .. } => {
            let mut cfg = ExperimentConfig::load(&path)?;
            if let Some(out) = out {
                cfg.output = out;
            }
            if let Some(format) = format {
                cfg.format = format;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
            let outcome = experiments::execute(&cfg)?;
            println!("wrote {} and {}", cfg.output_path("table").display(), cfg.output_path("series").display());
            Ok(report(&outcome.checks))
        }
        Command::Verify { suite, cocycle } => Ok(report(&suites::run_suite(&suite, cocycle.as_deref())?)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { EXIT_USAGE } else { EXIT_FAIL })
        }
    }
}
