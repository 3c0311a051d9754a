//! `lcm-spectra`: command-line front end for the LCM-matrix spectral toolkit.

mod commands;
mod error;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::output::{emit, Format, Report};

#[derive(Debug, Parser)]
#[command(name = "lcm-spectra", version, about = "Spectra of LCM matrices n^s m^s / [n,m]^t")]
struct Cli {
    /// Primary output file; stdout when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for randomized test vectors.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also write an (x, y) CSV series to this path.
    #[arg(long, global = true)]
    emit_plot_data: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues of a single local factor with their sandwich envelope.
    LocalEigs(commands::LocalEigsArgs),
    /// Leading eigenvalues from the product formula, sorted.
    Spectrum(commands::SpectrumArgs),
    /// Eigenvalue counting function mu(t) with a certified cutoff.
    Counting(commands::CountingArgs),
    /// The asymptotic constant kappa from the Euler product.
    Kappa(commands::KappaArgs),
    /// Rescaled Toeplitz singular values against product-formula eigenvalues.
    ToeplitzCompare(commands::ToeplitzArgs),
    /// Truncated Schatten norms of the Hadamard-perturbed difference.
    Schatten(commands::SchattenArgs),
    /// Beurling-integer counts and densities from the local spectra.
    Beurling(commands::BeurlingArgs),
    /// Runs the exact-identity suite.
    Verify,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    let (report, default_format, verify_failures): (Report, Format, usize) = match &cli.command {
        Command::LocalEigs(a) => (commands::local_eigs(a)?, Format::Csv, 0),
        Command::Spectrum(a) => (commands::spectrum(a)?, Format::Csv, 0),
        Command::Counting(a) => (commands::counting(a)?, Format::Csv, 0),
        Command::Kappa(a) => (commands::kappa(a)?, Format::Json, 0),
        Command::ToeplitzCompare(a) => (commands::toeplitz_compare(a)?, Format::Csv, 0),
        Command::Schatten(a) => (commands::schatten(a)?, Format::Csv, 0),
        Command::Beurling(a) => (commands::beurling(a)?, Format::Csv, 0),
        Command::Verify => {
            let (r, failed) = verify::report(cli.seed)?;
            (r, Format::Csv, failed)
        }
    };
    let format = cli.format.unwrap_or(default_format);
    emit(cli.output.as_deref(), &report.render(format))?;
    if let Some(path) = &cli.emit_plot_data {
        match report.render_plot() {
            Some(text) => emit(Some(path), &text)?,
            None => eprintln!("note: {} has no plot series", report.meta.command),
        }
    }
    if verify_failures > 0 {
        return Err(CliError::VerifyFailed { failed: verify_failures });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
