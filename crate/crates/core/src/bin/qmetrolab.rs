use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qmetrolab::runner;

#[derive(Parser)]
#[command(name = "qmetrolab", version, about = "Open-system qubit metrology laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory for data files and manifests
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one of the three canonical scenarios
    Scenario(Common),
    /// Long-format QFI sweep over a parameter grid
    Sweep(Common),
    /// Liouvillian spectrum, steady states, and noise classification
    Spectrum(Common),
    /// Channel QFI upper bound against sampled initial states
    Bound(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (label, result) = match &cli.command {
        Command::Scenario(c) => ("scenario", runner::run_scenario(&c.config, &c.out, c.threads)),
        Command::Sweep(c) => ("sweep", runner::run_sweep(&c.config, &c.out, c.threads)),
        Command::Spectrum(c) => ("spectrum", runner::run_spectrum(&c.config, &c.out, c.threads)),
        Command::Bound(c) => ("bound", runner::run_bound(&c.config, &c.out, c.threads)),
    };
    match result {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{label}: {e}");
            ExitCode::from(runner::exit_code(&e) as u8)
        }
    }
}
