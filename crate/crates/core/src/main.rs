use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use penalty_lab::cli::{self, examples, verify, Format};

#[derive(Parser)]
#[command(name = "penalty-lab", version, about = "Contingent-payment mechanisms for present-biased agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Curves,
    Dse,
    Firstbest,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicates: Option<u64>,
    },
    /// Check closed forms and equilibrium bids against numerical oracles.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Recompute the worked examples.
    Examples,
}

fn report(checks: &[verify::CheckResult]) -> ExitCode {
    for c in checks {
        println!("{}", c.line());
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    if failed == 0 {
        ExitCode::from(cli::EXIT_OK as u8)
    } else {
        ExitCode::from(cli::EXIT_CHECK_FAILED as u8)
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match args.command {
        Command::Run { config, out, format, seed, replicates } => {
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            cli::run_command(&config, &out, format, seed, replicates).map(|paths| {
                for p in paths {
                    println!("wrote {}", p.display());
                }
                ExitCode::from(cli::EXIT_OK as u8)
            })
        }
        Command::Verify { suite, samples, seed } => {
            let suite = match suite {
                SuiteArg::Curves => verify::Suite::Curves,
                SuiteArg::Dse => verify::Suite::Dse,
                SuiteArg::Firstbest => verify::Suite::FirstBest,
                SuiteArg::All => verify::Suite::All,
            };
            verify::run_suite(suite, samples, seed).map(|checks| report(&checks))
        }
        Command::Examples => Ok(report(&examples::example_checks())),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(cli::exit_code(&e) as u8)
    })
}
