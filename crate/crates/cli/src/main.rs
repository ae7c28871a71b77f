//! `phc`: generate photonic-crystal cells, solve their band surfaces and
//! build and evaluate band-surface datasets.

mod cells;
mod config;
mod dataset;
mod error;
mod evaluate;
mod figures;
mod solve;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "phc", version, about = "Photonic-crystal band-structure datasets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate p4m-symmetric unit cells into a mask archive.
    GenCells(cells::GenCells),
    /// Solve band surfaces for every cell of an archive.
    SolveBands(solve::SolveBands),
    /// Merge band files into a task dataset with a split manifest.
    MakeDataset(dataset::MakeDataset),
    /// Evaluate bilinear upsampling of coarse surfaces against fine ones.
    BaselineSr(evaluate::BaselineSr),
    /// Mean relative error between two band files.
    Metrics(evaluate::Metrics),
    /// Render masks and band surfaces as PNG and CSV.
    ExportFigures(figures::ExportFigures),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenCells(c) => c.run(),
        Command::SolveBands(c) => c.run(),
        Command::MakeDataset(c) => c.run(),
        Command::BaselineSr(c) => c.run(),
        Command::Metrics(c) => c.run(),
        Command::ExportFigures(c) => c.run(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.kind.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.kind.exit_code() as u8)
        }
    }
}
