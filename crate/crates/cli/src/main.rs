use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;
mod schema;

use commands::*;

/// Spectra, drifts and symmetry checks for the finite Harper operator.
#[derive(Debug, Parser)]
#[command(name = "harper", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues and nearest-neighbour spacings.
    Spectrum(SpectrumArgs),
    /// Spectra over a parameter grid, long format.
    Sweep(SweepArgs),
    /// Transition amplitudes for a linear parameter drift (JSON).
    Drift(DriftArgs),
    /// Run the operator symmetry checks.
    SymmetryCheck(SymmetryArgs),
    /// Compare with the matching Mathieu characteristic values.
    MathieuCompare(MathieuArgs),
    /// Measured minimum spacing against the model.
    MinSpacing(MinSpacingArgs),
    /// Classical energy on a phase-space grid.
    LevelCurves(LevelCurvesArgs),
    /// Check an exported file against its column layout.
    Validate(ValidateArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Sweep(a) => sweep(a),
        Command::Drift(a) => drift(a),
        Command::SymmetryCheck(a) => symmetry_check(a),
        Command::MathieuCompare(a) => mathieu_compare(a),
        Command::MinSpacing(a) => min_spacing_cmd(a),
        Command::LevelCurves(a) => level_curves(a),
        Command::Validate(a) => validate(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("harper: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
