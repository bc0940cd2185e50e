use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use irg_cli::{run_suite, FileConfig, Overrides, Suite};

#[derive(Parser)]
#[command(name = "irg", version, about = "Inexact reduced gradient experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// GD, RGB and IRGB on a smooth benchmark.
    Bench(Common),
    /// IRG and IPPM racing on a least absolute deviations instance.
    Lad(Common),
    /// Diagnostics over saved traces, or over an inline benchmark run.
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated solver names, e.g. GD,RGB,IRGB or IRG-5,IPPM-4.
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<String>>,
    /// Add wall-clock columns to summaries.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (suite, common) = match cli.command {
        Command::Bench(c) => (Suite::Bench, c),
        Command::Lad(c) => (Suite::Lad, c),
        Command::Check(c) => (Suite::Check, c),
    };
    let result = common
        .config
        .as_deref()
        .map(FileConfig::load)
        .transpose()
        .and_then(|file| {
            let overrides = Overrides {
                problem: common.problem,
                n: common.n,
                m: common.m,
                nu: common.nu,
                seed: common.seed,
                out: common.out,
                solvers: common.solvers,
                timing: common.timing,
            };
            run_suite(suite, &file.unwrap_or_default(), &overrides)
        });
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("irg: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
