use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sheafgauge::frontend::{demo, demo_names, run_checks, CheckSet, FrontendError, Scenario};

#[derive(Parser)]
#[command(name = "sheafgauge", version, about = "Verify gauge-theoretic transformation laws on sampled covers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load a scenario file and run the selected checks
    Check {
        file: PathBuf,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// Run a built-in scenario
    Demo {
        name: String,
        #[command(flatten)]
        opts: RunOpts,
    },
    /// List the built-in scenarios
    ListDemos,
}

#[derive(Args)]
struct RunOpts {
    /// Suites to run: all, none, or a comma-separated list of cocycle, liehom, connection, roundtrip
    #[arg(long, default_value = "all")]
    suite: CheckSet,
    /// Stop at the first failing check
    #[arg(long)]
    strict: bool,
    /// Also write the report as key = value lines
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(scenario: Result<Scenario, FrontendError>, opts: &RunOpts) -> Result<bool, FrontendError> {
    let report = run_checks(&scenario?, &opts.suite, opts.strict)?;
    print!("{}", report.table());
    if let Some(path) = &opts.out {
        std::fs::write(path, report.to_key_values()).map_err(|e| FrontendError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::ListDemos => {
            for name in demo_names() {
                println!("{name}");
            }
            return ExitCode::SUCCESS;
        }
        Command::Check { file, opts } => run(Scenario::load(file), opts),
        Command::Demo { name, opts } => run(demo(name), opts),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
