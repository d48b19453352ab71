use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use schwarz_cli::{commands, Overrides};

#[derive(Parser)]
#[command(name = "schwarz", version, about = "Run additive Schwarz convergence experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// Output directory (run) or output root (suite).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for sampled estimates and synthetic data.
    #[arg(long)]
    seed: Option<u64>,
    /// Allow steps above tau0. Convergence is no longer guaranteed.
    #[arg(long)]
    override_tau: bool,
    /// Outer iteration budget.
    #[arg(long)]
    budget: Option<usize>,
    /// Record wall time in the trace (breaks byte-for-byte reproducibility).
    #[arg(long)]
    timings: bool,
}

impl RunFlags {
    fn overrides(&self) -> Overrides {
        Overrides {
            budget: self.budget,
            seed: self.seed,
            override_tau: self.override_tau,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment document.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run a suite of experiments and sweeps.
    Suite {
        suite: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a document without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, flags } => {
            commands::run(config, flags.out.as_deref(), &flags.overrides(), flags.timings).map(|dir| {
                println!("{}", dir.display());
            })
        }
        Command::Suite { suite, flags } => {
            commands::suite(suite, flags.out.as_deref(), &flags.overrides(), flags.timings).map(|agg| {
                println!("{} entries, {} failed", agg.entries.len(), agg.failures);
            })
        }
        Command::Validate { config } => commands::validate(config).map(|line| println!("{line}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
